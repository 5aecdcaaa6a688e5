//! Offline index construction: exact k-nearest candidates, occlusion
//! pruning, entry selection, and connectivity repair.
//!
//! Construction is deterministic for a fixed store and parameters. The
//! per-node work is order-independent, so it runs on a thread pool; results
//! are collected back in node order.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{NodeRole, ProximityGraph};
use crate::store::{l2_distance, VectorId, VectorStore};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexBuildParams {
    /// Exact nearest-neighbor candidates gathered per node before pruning.
    pub k_nn: usize,
    /// Out-degree cap applied by pruning; repair edges may exceed it.
    pub max_degree: usize,
    /// Attach unreachable components to the reachable part after pruning.
    pub connectivity_repair: bool,
}

impl Default for IndexBuildParams {
    fn default() -> Self {
        IndexBuildParams {
            k_nn: 100,
            max_degree: 70,
            connectivity_repair: true,
        }
    }
}

impl IndexBuildParams {
    pub fn validate(&self) -> Result<()> {
        if self.k_nn == 0 || self.max_degree == 0 {
            return Err(Error::config("k_nn and max_degree must be positive"));
        }
        Ok(())
    }
}

/// Exact k-nearest neighbors of every node, ascending by (distance, id),
/// self excluded. The distances ride along so pruning can reuse them.
pub fn build_knn_candidates(store: &VectorStore, k_nn: usize) -> Result<Vec<Vec<(f32, VectorId)>>> {
    let n = store.count();
    if n < 2 {
        return Err(Error::config(format!(
            "cannot build an index over {} points",
            n
        )));
    }
    if k_nn == 0 || k_nn >= n {
        return Err(Error::config(format!(
            "k_nn must be in 1..{} for {} points, got {}",
            n, n, k_nn
        )));
    }
    let lists = (0..n)
        .into_par_iter()
        .map(|u| {
            let uv = store.get(u as VectorId);
            let mut scored: Vec<(f32, VectorId)> = (0..n)
                .filter(|v| *v != u)
                .map(|v| (l2_distance(uv, store.get(v as VectorId)), v as VectorId))
                .collect();
            let by_dist_then_id =
                |a: &(f32, VectorId), b: &(f32, VectorId)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k_nn < scored.len() {
                scored.select_nth_unstable_by(k_nn - 1, by_dist_then_id);
                scored.truncate(k_nn);
            }
            scored.sort_unstable_by(by_dist_then_id);
            scored
        })
        .collect();
    Ok(lists)
}

/// Occlusion pruning over a candidate list already sorted ascending by
/// distance from `u`. A candidate `v` is kept unless some already-kept `w`
/// lies strictly inside the lune: dist(u,w) < dist(u,v) and
/// dist(v,w) < dist(u,v). The nearest candidate is always kept.
pub fn rng_prune(
    store: &VectorStore,
    _u: VectorId,
    candidates: &[(f32, VectorId)],
    max_degree: usize,
) -> Vec<VectorId> {
    let mut kept: Vec<(f32, VectorId)> = Vec::new();
    for &(d_uv, v) in candidates {
        if kept.len() >= max_degree {
            break;
        }
        let vv = store.get(v);
        let occluded = kept
            .iter()
            .any(|&(d_uw, w)| d_uw < d_uv && l2_distance(vv, store.get(w)) < d_uv);
        if !occluded {
            kept.push((d_uv, v));
        }
    }
    kept.into_iter().map(|(_, v)| v).collect()
}

fn entry_in_range(store: &VectorStore, lo: usize, hi: usize) -> VectorId {
    debug_assert!(lo < hi && hi <= store.count());
    let dim = store.dim();
    let mut centroid = vec![0.0f64; dim];
    for i in lo..hi {
        for (c, x) in centroid.iter_mut().zip(store.get(i as VectorId)) {
            *c += *x as f64;
        }
    }
    let inv = 1.0 / (hi - lo) as f64;
    for c in centroid.iter_mut() {
        *c *= inv;
    }
    let mut best = f64::INFINITY;
    let mut best_id = lo as VectorId;
    for i in lo..hi {
        let mut acc = 0.0f64;
        for (c, x) in centroid.iter().zip(store.get(i as VectorId)) {
            let d = c - *x as f64;
            acc += d * d;
        }
        if acc < best {
            best = acc;
            best_id = i as VectorId;
        }
    }
    best_id
}

/// The node nearest the store centroid, ties to the smaller id.
pub fn choose_entry_point(store: &VectorStore) -> Result<VectorId> {
    if store.is_empty() {
        return Err(Error::config(
            "cannot pick an entry point in an empty store",
        ));
    }
    Ok(entry_in_range(store, 0, store.count()))
}

/// Makes every node reachable from the entry point. Unreachable nodes are
/// visited in id order; each one found still unreachable gains exactly one
/// incoming edge from its nearest reachable node (ties to the smaller id),
/// then reachability is re-expanded from it, so one edge per stranded
/// component absorbs that component. Returns the number of edges added.
pub fn repair_connectivity(graph: &mut ProximityGraph, store: &VectorStore) -> usize {
    let n = graph.node_count();
    let mut reached = graph.reachable_from_entry();
    let mut repairs = 0;
    for v in 0..n {
        if reached[v] {
            continue;
        }
        let vv = store.get(v as VectorId);
        let mut best: Option<(f32, VectorId)> = None;
        for (u, r) in reached.iter().enumerate() {
            if !r {
                continue;
            }
            let d = l2_distance(store.get(u as VectorId), vv);
            let better = match best {
                None => true,
                Some((bd, bu)) => d < bd || (d == bd && (u as VectorId) < bu),
            };
            if better {
                best = Some((d, u as VectorId));
            }
        }
        let (_, from) = best.expect("entry point is always reached");
        graph.adjacency[from as usize].push(v as VectorId);
        repairs += 1;
        // Absorb everything the repaired node can now reach.
        let mut fifo = std::collections::VecDeque::from([v as VectorId]);
        reached[v] = true;
        while let Some(u) = fifo.pop_front() {
            for &w in graph.neighbors(u) {
                if !reached[w as usize] {
                    reached[w as usize] = true;
                    fifo.push_back(w);
                }
            }
        }
    }
    repairs
}

/// Recomputes `avg_data_neighbor_dist` from the final adjacency.
fn fill_neighbor_stats(graph: &mut ProximityGraph, store: &VectorStore) {
    let n = graph.node_count();
    let mut stats = vec![0.0f32; n];
    for (v, slot) in stats.iter_mut().enumerate() {
        let vv = store.get(v as VectorId);
        let mut acc = 0.0f64;
        let mut cnt = 0usize;
        for &u in &graph.adjacency[v] {
            if graph.is_data(u) {
                acc += l2_distance(vv, store.get(u)) as f64;
                cnt += 1;
            }
        }
        if cnt > 0 {
            *slot = (acc / cnt as f64) as f32;
        }
    }
    graph.avg_data_neighbor_dist = stats;
}

/// Builds a single-set index: exact candidates, occlusion pruning, entry
/// nearest the centroid, then connectivity repair.
pub fn build_index(store: &VectorStore, params: &IndexBuildParams) -> Result<ProximityGraph> {
    params.validate()?;
    let candidates = build_knn_candidates(store, params.k_nn)?;
    let adjacency: Vec<Vec<VectorId>> = candidates
        .par_iter()
        .enumerate()
        .map(|(u, c)| rng_prune(store, u as VectorId, c, params.max_degree))
        .collect();
    let mut graph = ProximityGraph {
        dimension: store.dim() as u32,
        adjacency,
        entry_point: choose_entry_point(store)?,
        roles: None,
        avg_data_neighbor_dist: Vec::new(),
    };
    if params.connectivity_repair {
        repair_connectivity(&mut graph, store);
    }
    fill_neighbor_stats(&mut graph, store);
    graph.validate()?;
    Ok(graph)
}

/// Builds one graph over queries and data together. Node ids 0..|X| are the
/// query rows, |X|.. are the data rows. Candidate generation and pruning
/// ignore roles entirely; roles matter for the entry point (a data node
/// nearest the data centroid) and the neighbor stat (data neighbors only).
pub fn build_merged_index(
    queries: &VectorStore,
    data: &VectorStore,
    params: &IndexBuildParams,
) -> Result<ProximityGraph> {
    params.validate()?;
    if data.is_empty() {
        return Err(Error::config("merged index needs at least one data row"));
    }
    let merged = VectorStore::concat(queries, data)?;
    let candidates = build_knn_candidates(&merged, params.k_nn)?;
    let adjacency: Vec<Vec<VectorId>> = candidates
        .par_iter()
        .enumerate()
        .map(|(u, c)| rng_prune(&merged, u as VectorId, c, params.max_degree))
        .collect();
    let q_n = queries.count();
    let mut roles = vec![NodeRole::Query; q_n];
    roles.resize(merged.count(), NodeRole::Data);
    let mut graph = ProximityGraph {
        dimension: merged.dim() as u32,
        adjacency,
        entry_point: entry_in_range(&merged, q_n, merged.count()),
        roles: Some(roles),
        avg_data_neighbor_dist: Vec::new(),
    };
    if params.connectivity_repair {
        repair_connectivity(&mut graph, &merged);
    }
    fill_neighbor_stats(&mut graph, &merged);
    graph.validate()?;
    Ok(graph)
}
