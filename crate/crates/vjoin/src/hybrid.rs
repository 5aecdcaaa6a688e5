//! Bounded best-first sweep for queries whose in-range region is split
//! across parts of the graph that plain breadth-first search cannot bridge.
//!
//! One ordered queue holds both in-range and out-of-range candidates.
//! In-range entries are always admitted; the out-of-range population is
//! capped at L, and a full cap only turns over when a strictly closer
//! candidate arrives, evicting the farthest out-of-range entry. In-range
//! entries are never evicted. In a merged graph, query nodes count as
//! out-of-range bridges whatever their distance: they are traversed, never
//! emitted.
//!
//! Termination: the sweep ends when the queue empties, or after a stretch
//! of iterations with no in-range entry queued during which the queue's
//! maximum distance fails to strictly decrease for `patience` consecutive
//! iterations. Each stretch starts its comparison from infinity, so the
//! first stagnant-candidate pop of a stretch is always allowed; without
//! that allowance a lone bridge entry would be dropped before being tried.

use std::time::Instant;

use crate::counters::Counters;
use crate::search::{
    greedy_descend, init_frontier, Frontier, QuerySearch, SearchResult, SearchScratch, SeedMode,
};
use crate::store::in_range;

/// In-range for queue accounting: inside the threshold and emittable.
/// Query-role nodes are bridges, never in-range.
fn queue_in_range(p: &QuerySearch, d: f32, v: u32) -> bool {
    in_range(d, p.theta) && p.graph.is_data(v)
}

pub(crate) fn join_single_query_hybrid(
    p: &QuerySearch,
    seeds: SeedMode,
    patience: usize,
    scratch: &mut SearchScratch,
    counters: &mut Counters,
) -> SearchResult {
    scratch.reset();
    let t0 = Instant::now();
    let mut f = Frontier::new();
    let scan_mode = init_frontier(p, &seeds, &mut f, scratch, counters);
    if scan_mode {
        greedy_descend(p, &mut f, scratch, counters);
    }
    let greedy_elapsed = t0.elapsed();

    let t1 = Instant::now();
    let mut hits: Vec<(u32, f32)> = Vec::new();
    let mut in_count = 0usize;
    for &(d, v) in f.queue.entries() {
        if queue_in_range(p, d, v) {
            in_count += 1;
            if p.exclude != Some(v) {
                hits.push((v, d));
            }
        }
    }
    let mut out_count = f.queue.len() - in_count;

    // Stagnation tracking for the current in-range-free stretch.
    let mut stretch_max = f32::INFINITY;
    let mut stale = 0usize;

    while let Some((d_u, u)) = f.queue.pop_min() {
        if queue_in_range(p, d_u, u) {
            in_count -= 1;
        } else {
            out_count -= 1;
        }
        counters.bfs_pops += 1;
        for &v in p.graph.neighbors(u) {
            if !scratch.visit(v) {
                continue;
            }
            let d_v = crate::store::l2_distance(p.query_vec, p.view.get(v));
            counters.distance_computations += 1;
            f.note_closest(d_v, v);
            if queue_in_range(p, d_v, v) {
                f.queue.push(d_v, v);
                in_count += 1;
                if p.exclude != Some(v) {
                    hits.push((v, d_v));
                }
            } else if out_count < p.l_cap {
                f.queue.push(d_v, v);
                out_count += 1;
            } else if let Some((far_d, far_idx)) = farthest_out_of_range(p, &f) {
                if d_v < far_d {
                    f.queue.remove_at(far_idx);
                    counters.hybrid_evictions += 1;
                    f.queue.push(d_v, v);
                }
            }
        }
        if f.queue.is_empty() {
            break;
        }
        if in_count > 0 {
            stale = 0;
            stretch_max = f32::INFINITY;
        } else {
            let cur = f.queue.max_dist().expect("queue checked non-empty");
            if cur < stretch_max {
                stale = 0;
            } else {
                stale += 1;
            }
            stretch_max = cur;
            if stale >= patience {
                break;
            }
        }
    }
    let bfs_elapsed = t1.elapsed();

    SearchResult {
        hits,
        cache: Vec::new(),
        greedy_elapsed,
        bfs_elapsed,
    }
}

/// Index and distance of the farthest out-of-range queue entry, scanning
/// from the back of the ordered queue.
fn farthest_out_of_range(p: &QuerySearch, f: &Frontier) -> Option<(f32, usize)> {
    let entries = f.queue.entries();
    for idx in (0..entries.len()).rev() {
        let (d, v) = entries[idx];
        if !queue_in_range(p, d, v) {
            return Some((d, idx));
        }
    }
    None
}
