//! Query processing order for cache-sharing variants.
//!
//! Similar queries should run back to back so a query can seed from its
//! predecessor's cache. The order is a preorder walk of a minimum spanning
//! tree over the query proximity graph's undirected edges plus one sentinel
//! node standing for the data index entry point, connected to every query
//! by its distance to that entry vector. Rooting at the sentinel makes the
//! first query of every subtree the one cheapest to answer from scratch,
//! and the preorder guarantees each query's parent was processed earlier.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use crate::counters::Counters;
use crate::error::{Error, Result};
use crate::graph::ProximityGraph;
use crate::store::{l2_distance, VectorId, VectorStore};

#[derive(Debug, Clone, PartialEq)]
pub struct QueryOrder {
    /// (query, parent) in processing order; `None` parent means the query
    /// seeds from the data entry point. Parents always appear earlier.
    pub order: Vec<(VectorId, Option<VectorId>)>,
    /// Total tree weight, for diagnostics and cross-checks.
    pub total_weight: f64,
}

/// Builds the processing order. `seed_vec` is the data index entry point's
/// vector; distance computations are charged to `counters`.
pub fn order_queries(
    queries: &VectorStore,
    query_graph: &ProximityGraph,
    seed_vec: &[f32],
    counters: &mut Counters,
) -> Result<QueryOrder> {
    let m = queries.count();
    if m == 0 {
        return Ok(QueryOrder {
            order: Vec::new(),
            total_weight: 0.0,
        });
    }
    if query_graph.node_count() != m {
        return Err(Error::config(format!(
            "query graph has {} nodes for {} queries",
            query_graph.node_count(),
            m
        )));
    }
    if query_graph.roles.is_some() {
        return Err(Error::config("query ordering needs a single-set graph"));
    }
    if seed_vec.len() != queries.dim() {
        return Err(Error::config(format!(
            "seed vector dimension {} != query dimension {}",
            seed_vec.len(),
            queries.dim()
        )));
    }

    // Undirected closure of the query graph plus the sentinel star. Weights
    // are kept as order-preserving bit patterns (distances are >= 0).
    let sentinel = m as VectorId;
    let mut undirected: BTreeSet<(VectorId, VectorId)> = BTreeSet::new();
    for u in 0..m as VectorId {
        for &v in query_graph.neighbors(u) {
            undirected.insert((u.min(v), u.max(v)));
        }
    }
    let mut adj: Vec<Vec<(VectorId, u32)>> = vec![Vec::new(); m + 1];
    for &(u, v) in &undirected {
        let w = l2_distance(queries.get(u), queries.get(v));
        counters.distance_computations += 1;
        adj[u as usize].push((v, w.to_bits()));
        adj[v as usize].push((u, w.to_bits()));
    }
    for u in 0..m as VectorId {
        let w = l2_distance(queries.get(u), seed_vec);
        counters.distance_computations += 1;
        adj[u as usize].push((sentinel, w.to_bits()));
        adj[sentinel as usize].push((u, w.to_bits()));
    }

    // Prim from the sentinel; the heap key (weight, node, parent) makes
    // every tie resolve toward smaller ids.
    let mut in_tree = vec![false; m + 1];
    let mut parents: Vec<Option<VectorId>> = vec![None; m];
    let mut total_weight = 0.0f64;
    let mut heap: BinaryHeap<Reverse<(u32, VectorId, VectorId)>> = BinaryHeap::new();
    heap.push(Reverse((0, sentinel, sentinel)));
    while let Some(Reverse((wbits, v, parent))) = heap.pop() {
        if in_tree[v as usize] {
            continue;
        }
        in_tree[v as usize] = true;
        if v != sentinel {
            parents[v as usize] = Some(parent);
            total_weight += f32::from_bits(wbits) as f64;
        }
        for &(u, w) in &adj[v as usize] {
            if !in_tree[u as usize] {
                heap.push(Reverse((w, u, v)));
            }
        }
    }

    // Preorder walk, children ascending.
    let mut children: Vec<Vec<VectorId>> = vec![Vec::new(); m + 1];
    for (v, &p) in parents.iter().enumerate().take(m) {
        let p = p.expect("sentinel star spans every query");
        children[p as usize].push(v as VectorId);
    }
    let mut order = Vec::with_capacity(m);
    let mut stack: Vec<VectorId> = children[sentinel as usize].iter().rev().copied().collect();
    while let Some(v) = stack.pop() {
        let p = parents[v as usize].unwrap();
        order.push((v, if p == sentinel { None } else { Some(p) }));
        stack.extend(children[v as usize].iter().rev());
    }
    debug_assert_eq!(order.len(), m);
    Ok(QueryOrder {
        order,
        total_weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build::{build_index, IndexBuildParams};
    use crate::oracle::mst_reference;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn store(dim: usize, rows: &[&[f32]]) -> VectorStore {
        let mut s = VectorStore::with_dim(dim).unwrap();
        for r in rows {
            s.push(r);
        }
        s
    }

    fn bare_graph(adjacency: Vec<Vec<u32>>) -> ProximityGraph {
        let n = adjacency.len();
        ProximityGraph {
            dimension: 1,
            adjacency,
            entry_point: 0,
            roles: None,
            avg_data_neighbor_dist: vec![0.0; n],
        }
    }

    #[test]
    fn empty_and_single_query() {
        let empty = VectorStore::with_dim(1).unwrap();
        let g = bare_graph(vec![vec![]]);
        let mut c = Counters::new();
        let o = order_queries(&empty, &g, &[0.0], &mut c).unwrap();
        assert!(o.order.is_empty());

        let one = store(1, &[&[3.0]]);
        let o = order_queries(&one, &bare_graph(vec![vec![]]), &[0.0], &mut c).unwrap();
        assert_eq!(o.order, vec![(0, None)]);
        assert_eq!(o.total_weight, 3.0);
    }

    #[test]
    fn close_pair_far_from_seed_chains() {
        // Two queries 0.1 apart, both ~100 from the seed: the second query
        // should hang off the first, not off the sentinel.
        let q = store(1, &[&[100.0], &[100.1]]);
        let g = bare_graph(vec![vec![1], vec![0]]);
        let mut c = Counters::new();
        let o = order_queries(&q, &g, &[0.0], &mut c).unwrap();
        assert_eq!(o.order.len(), 2);
        assert_eq!(o.order[0], (0, None));
        assert_eq!(o.order[1].1, Some(0));
    }

    #[test]
    fn parents_precede_children_and_cover_all() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut q = VectorStore::with_dim(3).unwrap();
        for _ in 0..80 {
            let row: Vec<f32> = (0..3).map(|_| rng.random_range(-1.0f32..1.0)).collect();
            q.push(&row);
        }
        let g = build_index(
            &q,
            &IndexBuildParams {
                k_nn: 12,
                max_degree: 6,
                connectivity_repair: true,
            },
        )
        .unwrap();
        let mut c = Counters::new();
        let o = order_queries(&q, &g, &[0.0, 0.0, 0.0], &mut c).unwrap();
        assert_eq!(o.order.len(), 80);
        let mut seen = vec![false; 80];
        for &(v, parent) in &o.order {
            assert!(!seen[v as usize], "query {} repeated", v);
            if let Some(p) = parent {
                assert!(seen[p as usize], "child {} before parent {}", v, p);
            }
            seen[v as usize] = true;
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn tree_weight_matches_kruskal() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut q = VectorStore::with_dim(2).unwrap();
        for _ in 0..60 {
            let row: Vec<f32> = (0..2).map(|_| rng.random_range(-1.0f32..1.0)).collect();
            q.push(&row);
        }
        let g = build_index(
            &q,
            &IndexBuildParams {
                k_nn: 10,
                max_degree: 5,
                connectivity_repair: true,
            },
        )
        .unwrap();
        let seed = [2.0f32, -1.0];
        let mut c = Counters::new();
        let o = order_queries(&q, &g, &seed, &mut c).unwrap();

        // Rebuild the same weighted edge list for the oracle.
        let m = q.count();
        let mut edges: Vec<(u32, u32, f32)> = Vec::new();
        let mut undirected = std::collections::BTreeSet::new();
        for u in 0..m as u32 {
            for &v in g.neighbors(u) {
                undirected.insert((u.min(v), u.max(v)));
            }
        }
        for (u, v) in undirected {
            edges.push((u, v, l2_distance(q.get(u), q.get(v))));
        }
        for u in 0..m as u32 {
            edges.push((u, m as u32, l2_distance(q.get(u), &seed)));
        }
        let (want_total, want_edges) = mst_reference(m + 1, &edges).unwrap();
        assert!(
            (o.total_weight - want_total).abs() <= 1e-6 * want_total.max(1.0),
            "prim {} kruskal {}",
            o.total_weight,
            want_total
        );
        // Random weights are distinct, so the tree itself is unique.
        let got_edges: std::collections::BTreeSet<(u32, u32)> = o
            .order
            .iter()
            .map(|&(v, p)| {
                let p = p.unwrap_or(m as u32);
                (v.min(p), v.max(p))
            })
            .collect();
        assert_eq!(got_edges, want_edges);
    }

    #[test]
    fn shape_mismatches_are_config_errors() {
        let q = store(1, &[&[0.0], &[1.0]]);
        let g = bare_graph(vec![vec![]]);
        let mut c = Counters::new();
        assert!(order_queries(&q, &g, &[0.0], &mut c).is_err());
        let g2 = bare_graph(vec![vec![1], vec![0]]);
        assert!(order_queries(&q, &g2, &[0.0, 0.0], &mut c).is_err());
    }
}
