//! Out-of-distribution detection for adaptive search.
//!
//! A query that lands far outside the data cloud tends to strand plain
//! graph traversal on a local island; the bounded best-first fallback is
//! worth its extra pops exactly then. The predictor compares the query's
//! mean distance to its data neighbors (d1) against those neighbors' own
//! stored average data-neighbor distance (d2): the query is flagged when
//! d1 > factor * d2, or when it has no data neighbors at all.

use crate::counters::Counters;
use crate::error::{Error, Result};
use crate::graph::{NodeRole, ProximityGraph};
use crate::store::{l2_distance, VectorId, VectorStore};

/// Decides whether `query` looks out of distribution relative to the data
/// portion of a merged graph. Fails on shape mismatches.
pub fn predict_ood(
    graph: &ProximityGraph,
    queries: &VectorStore,
    data: &VectorStore,
    query: VectorId,
    factor: f32,
) -> Result<bool> {
    let offset = graph.data_offset()? as usize;
    if offset != queries.count() {
        return Err(Error::config(format!(
            "merged graph has {} query nodes for {} queries",
            offset,
            queries.count()
        )));
    }
    if graph.node_count() != queries.count() + data.count() {
        return Err(Error::config(format!(
            "merged graph has {} nodes for {} queries + {} data",
            graph.node_count(),
            queries.count(),
            data.count()
        )));
    }
    if queries.dim() != data.dim() || graph.dimension as usize != data.dim() {
        return Err(Error::config("dimension mismatch in merged graph"));
    }
    if (query as usize) >= offset {
        return Err(Error::config(format!(
            "query id {} out of range 0..{}",
            query, offset
        )));
    }
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::config("ood factor must be finite and positive"));
    }
    let mut scratch = Counters::new();
    Ok(predict_ood_counted(
        graph,
        queries.get(query),
        data,
        offset,
        query,
        factor,
        &mut scratch,
    ))
}

/// Core predictor; callers have already validated shapes. Distance
/// computations are charged to `counters`.
pub(crate) fn predict_ood_counted(
    graph: &ProximityGraph,
    query_vec: &[f32],
    data: &VectorStore,
    data_offset: usize,
    query: VectorId,
    factor: f32,
    counters: &mut Counters,
) -> bool {
    let roles = graph
        .roles
        .as_ref()
        .expect("merged graph carries node roles");
    let mut d1_sum = 0.0f64;
    let mut d2_sum = 0.0f64;
    let mut n = 0usize;
    for &v in graph.neighbors(query) {
        if roles[v as usize] != NodeRole::Data {
            continue;
        }
        let d = l2_distance(query_vec, data.get(v - data_offset as VectorId));
        counters.distance_computations += 1;
        d1_sum += d as f64;
        d2_sum += graph.avg_data_neighbor_dist[v as usize] as f64;
        n += 1;
    }
    if n == 0 {
        return true;
    }
    let d1 = d1_sum / n as f64;
    let d2 = d2_sum / n as f64;
    d1 > factor as f64 * d2
}
