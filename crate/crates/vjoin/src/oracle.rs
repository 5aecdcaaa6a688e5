//! Reference implementations used to freeze expected test values.
//!
//! Everything here favors clarity over speed and shares no code with the
//! engine: separate loops, separate distance accumulation (same widening
//! policy, independently written). Tests compare engine output against these
//! functions; the functions themselves are validated on tiny hand-checked
//! inputs.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::store::{VectorId, VectorStore};

/// Exact threshold-join result: every (query, data, distance) with
/// distance strictly below `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub theta: f32,
    /// Query-major, then data-ascending. Distances are f32 rounded once
    /// from an f64 accumulation.
    pub pairs: Vec<(VectorId, VectorId, f32)>,
}

impl GroundTruth {
    pub fn pair_ids(&self) -> BTreeSet<(VectorId, VectorId)> {
        self.pairs.iter().map(|&(q, d, _)| (q, d)).collect()
    }
}

/// Independent copy of the crate distance policy: widen to f64, subtract,
/// square, accumulate, sqrt, round once to f32.
fn oracle_l2(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = 0.0f64;
    for i in 0..a.len() {
        let d = a[i] as f64 - b[i] as f64;
        acc += d * d;
    }
    acc.sqrt() as f32
}

/// Nested-loop exact join. When both arguments are the same allocation the
/// join is a self join and identity pairs (i, i) are excluded.
pub fn nlj_exact(queries: &VectorStore, data: &VectorStore, theta: f32) -> Result<GroundTruth> {
    if queries.dim() != data.dim() {
        return Err(Error::config(format!(
            "query dimension {} != data dimension {}",
            queries.dim(),
            data.dim()
        )));
    }
    let self_join = std::ptr::eq(queries, data);
    let mut pairs = Vec::new();
    for q in 0..queries.count() {
        let qv = queries.get(q as VectorId);
        for d in 0..data.count() {
            if self_join && q == d {
                continue;
            }
            let dist = oracle_l2(qv, data.get(d as VectorId));
            if dist < theta {
                pairs.push((q as VectorId, d as VectorId, dist));
            }
        }
    }
    Ok(GroundTruth { theta, pairs })
}

/// Ids of the `k` nearest store rows to `query`, ascending by distance,
/// ties broken toward the smaller id.
pub fn exact_topk(store: &VectorStore, query: &[f32], k: usize) -> Vec<VectorId> {
    let mut scored: Vec<(f32, VectorId)> = (0..store.count())
        .map(|i| (oracle_l2(query, store.get(i as VectorId)), i as VectorId))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(k).map(|(_, i)| i).collect()
}

/// Exact relative-neighborhood edges by the cubic lune scan: (u, v) is an
/// edge iff no third point w has dist(u,w) < dist(u,v) and
/// dist(v,w) < dist(u,v), both strict. Returns undirected pairs (u < v).
/// Guarded to small inputs; this exists only to check builders.
pub fn exact_rng_edges(store: &VectorStore) -> Result<BTreeSet<(VectorId, VectorId)>> {
    let n = store.count();
    if n > 2000 {
        return Err(Error::config(format!(
            "exact_rng_edges is cubic; refusing {} > 2000 points",
            n
        )));
    }
    // Dense distance matrix keeps the triple loop to table lookups.
    let mut dm = vec![0.0f32; n * n];
    for u in 0..n {
        for v in (u + 1)..n {
            let d = oracle_l2(store.get(u as VectorId), store.get(v as VectorId));
            dm[u * n + v] = d;
            dm[v * n + u] = d;
        }
    }
    let mut edges = BTreeSet::new();
    for u in 0..n {
        'pair: for v in (u + 1)..n {
            let duv = dm[u * n + v];
            for w in 0..n {
                if w == u || w == v {
                    continue;
                }
                if dm[u * n + w] < duv && dm[v * n + w] < duv {
                    continue 'pair;
                }
            }
            edges.insert((u as VectorId, v as VectorId));
        }
    }
    Ok(edges)
}

/// Kruskal minimum spanning tree over an undirected weighted edge list.
/// Returns the total weight (f64 sum of f32 edge weights) and the chosen
/// edge set normalized to (min, max). Errors if the edges do not connect
/// all `node_count` nodes.
pub fn mst_reference(
    node_count: usize,
    edges: &[(u32, u32, f32)],
) -> Result<(f64, BTreeSet<(u32, u32)>)> {
    if node_count == 0 {
        return Ok((0.0, BTreeSet::new()));
    }
    let mut order: Vec<&(u32, u32, f32)> = edges.iter().collect();
    order.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));

    let mut parent: Vec<u32> = (0..node_count as u32).collect();
    fn find(parent: &mut [u32], x: u32) -> u32 {
        let mut root = x;
        while parent[root as usize] != root {
            root = parent[root as usize];
        }
        let mut cur = x;
        while parent[cur as usize] != root {
            let next = parent[cur as usize];
            parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    let mut total = 0.0f64;
    let mut chosen = BTreeSet::new();
    for &&(u, v, w) in &order {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru as usize] = rv;
            total += w as f64;
            chosen.insert((u.min(v), u.max(v)));
        }
    }
    if chosen.len() + 1 != node_count {
        return Err(Error::config(format!(
            "edge list does not span all {} nodes ({} components)",
            node_count,
            node_count - chosen.len()
        )));
    }
    Ok((total, chosen))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(dim: usize, rows: &[&[f32]]) -> VectorStore {
        let mut s = VectorStore::with_dim(dim).unwrap();
        for r in rows {
            s.push(r);
        }
        s
    }

    #[test]
    fn nlj_line_example() {
        // Queries at 0 and 10 on a line, data at 1, 2, 11. theta = 1.5:
        // matches are (q0,d0,1) and (q1,d2,1) only.
        let q = store(1, &[&[0.0], &[10.0]]);
        let d = store(1, &[&[1.0], &[2.0], &[11.0]]);
        let t = nlj_exact(&q, &d, 1.5).unwrap();
        assert_eq!(t.pairs, vec![(0, 0, 1.0), (1, 2, 1.0)]);
    }

    #[test]
    fn nlj_threshold_boundary_excluded() {
        let q = store(1, &[&[0.0]]);
        let d = store(1, &[&[2.0]]);
        assert!(nlj_exact(&q, &d, 2.0).unwrap().pairs.is_empty());
        assert_eq!(nlj_exact(&q, &d, 2.0000002).unwrap().pairs.len(), 1);
    }

    #[test]
    fn nlj_self_join_skips_identity() {
        let s = store(1, &[&[0.0], &[0.5]]);
        let t = nlj_exact(&s, &s, 1.0).unwrap();
        // Both cross pairs, no (0,0)/(1,1).
        assert_eq!(t.pairs, vec![(0, 1, 0.5), (1, 0, 0.5)]);
        // An equal but distinct allocation is not a self join.
        let s2 = s.clone();
        assert_eq!(nlj_exact(&s, &s2, 1.0).unwrap().pairs.len(), 4);
    }

    #[test]
    fn topk_orders_by_distance_then_id() {
        let s = store(1, &[&[4.0], &[1.0], &[3.0], &[-1.0]]);
        // From 0: dists 4,1,3,1; tie between ids 1 and 3 keeps 1 first.
        assert_eq!(exact_topk(&s, &[0.0], 3), vec![1, 3, 2]);
        assert_eq!(exact_topk(&s, &[0.0], 10).len(), 4);
    }

    #[test]
    fn rng_edges_square_example() {
        // Unit square: side edges survive, diagonals are cut by the lune
        // (for diagonal (0,3), both 1 and 2 are strictly closer to each end).
        let s = store(2, &[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let e = exact_rng_edges(&s).unwrap();
        let want: BTreeSet<(u32, u32)> = [(0, 1), (0, 2), (1, 3), (2, 3)].into_iter().collect();
        assert_eq!(e, want);
    }

    #[test]
    fn rng_edges_collinear_example() {
        // 0,1,2 on a line: only consecutive pairs; (0,2) is cut by 1.
        let s = store(1, &[&[0.0], &[1.0], &[2.0]]);
        let e = exact_rng_edges(&s).unwrap();
        let want: BTreeSet<(u32, u32)> = [(0, 1), (1, 2)].into_iter().collect();
        assert_eq!(e, want);
    }

    #[test]
    fn rng_guard_rejects_large_inputs() {
        let s = VectorStore::new(1, vec![0.0; 2001]).unwrap();
        assert!(matches!(exact_rng_edges(&s), Err(Error::Config(_))));
    }

    #[test]
    fn mst_triangle() {
        // Triangle with weights 1, 2, 3: MST keeps 1 and 2.
        let edges = [(0u32, 1u32, 1.0f32), (1, 2, 2.0), (0, 2, 3.0)];
        let (total, chosen) = mst_reference(3, &edges).unwrap();
        assert_eq!(total, 3.0);
        let want: BTreeSet<(u32, u32)> = [(0, 1), (1, 2)].into_iter().collect();
        assert_eq!(chosen, want);
    }

    #[test]
    fn mst_disconnected_errors() {
        let edges = [(0u32, 1u32, 1.0f32)];
        assert!(mst_reference(3, &edges).is_err());
    }
}
