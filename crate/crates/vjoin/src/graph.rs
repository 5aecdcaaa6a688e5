//! Directed proximity-graph index over one vector store, or over the union
//! of a query store and a data store (a merged graph).
//!
//! Invariants held by any graph this crate builds or loads:
//! - adjacency lists contain valid node ids, no self loops, no duplicates;
//! - the entry point is a valid node, and a data node when roles exist;
//! - `avg_data_neighbor_dist[v]` is the mean distance from `v` to its
//!   data-role neighbors over the final adjacency (0.0 when it has none).

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::store::VectorId;

/// Node provenance inside a merged graph. Single-set graphs carry no roles;
/// every node is implicitly a data node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Query,
    Data,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProximityGraph {
    /// Dimension of the vectors this graph indexes; vectors live in the
    /// store, not the graph, and are revalidated against this on use.
    pub dimension: u32,
    /// Out-neighbors per node, ascending by distance from the owner.
    pub adjacency: Vec<Vec<VectorId>>,
    pub entry_point: VectorId,
    /// `None` for single-set graphs. Merged graphs list query nodes first.
    pub roles: Option<Vec<NodeRole>>,
    /// Mean distance to data-role out-neighbors, per node.
    pub avg_data_neighbor_dist: Vec<f32>,
}

impl ProximityGraph {
    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, v: VectorId) -> &[VectorId] {
        &self.adjacency[v as usize]
    }

    pub fn is_data(&self, v: VectorId) -> bool {
        match &self.roles {
            None => true,
            Some(roles) => roles[v as usize] == NodeRole::Data,
        }
    }

    /// Number of query-role nodes, which is also the id offset of the first
    /// data node in a merged graph. Errors if roles are not laid out as a
    /// query prefix followed by a data suffix.
    pub fn data_offset(&self) -> Result<u32> {
        let roles = match &self.roles {
            None => return Ok(0),
            Some(r) => r,
        };
        let queries = roles.iter().take_while(|r| **r == NodeRole::Query).count();
        if roles[queries..].contains(&NodeRole::Query) {
            return Err(Error::config(
                "merged graph roles are not a query prefix followed by data",
            ));
        }
        Ok(queries as u32)
    }

    /// Structural checks shared by builders, loaders, and tests.
    pub fn validate(&self) -> Result<()> {
        let n = self.node_count();
        if n == 0 {
            return Err(Error::config("graph has no nodes"));
        }
        if self.avg_data_neighbor_dist.len() != n {
            return Err(Error::config("stat vector length != node count"));
        }
        if self.entry_point as usize >= n {
            return Err(Error::config(format!(
                "entry point {} out of range for {} nodes",
                self.entry_point, n
            )));
        }
        if let Some(roles) = &self.roles {
            if roles.len() != n {
                return Err(Error::config("role vector length != node count"));
            }
            if roles[self.entry_point as usize] != NodeRole::Data {
                return Err(Error::config("entry point is not a data node"));
            }
        }
        let mut seen = vec![false; n];
        for (u, nbrs) in self.adjacency.iter().enumerate() {
            for &v in nbrs {
                if v as usize >= n {
                    return Err(Error::config(format!(
                        "node {} lists out-of-range neighbor {}",
                        u, v
                    )));
                }
                if v as usize == u {
                    return Err(Error::config(format!("node {} lists itself", u)));
                }
                if seen[v as usize] {
                    return Err(Error::config(format!(
                        "node {} lists neighbor {} twice",
                        u, v
                    )));
                }
                seen[v as usize] = true;
            }
            for &v in nbrs {
                seen[v as usize] = false;
            }
        }
        Ok(())
    }

    /// Nodes reachable from the entry point along directed edges.
    pub fn reachable_from_entry(&self) -> Vec<bool> {
        let mut reached = vec![false; self.node_count()];
        let mut fifo = VecDeque::new();
        reached[self.entry_point as usize] = true;
        fifo.push_back(self.entry_point);
        while let Some(u) = fifo.pop_front() {
            for &v in self.neighbors(u) {
                if !reached[v as usize] {
                    reached[v as usize] = true;
                    fifo.push_back(v);
                }
            }
        }
        reached
    }

    pub fn count_unreachable(&self) -> usize {
        self.reachable_from_entry().iter().filter(|r| !**r).count()
    }

    /// (degree, node count) pairs, ascending by degree.
    pub fn degree_histogram(&self) -> Vec<(usize, usize)> {
        let mut hist = std::collections::BTreeMap::new();
        for nbrs in &self.adjacency {
            *hist.entry(nbrs.len()).or_insert(0usize) += 1;
        }
        hist.into_iter().collect()
    }
}

/// Most frequent out-degree; ties resolve to the smaller degree.
pub fn degree_mode(graph: &ProximityGraph) -> usize {
    let mut best: Option<(usize, usize)> = None; // (count, degree)
    for (degree, count) in graph.degree_histogram() {
        match best {
            Some((c, _)) if c >= count => {}
            _ => best = Some((count, degree)),
        }
    }
    best.map(|(_, d)| d).unwrap_or(0)
}
