//! Work and timing counters for a join run.
//!
//! Counts are exact and deterministic for a fixed input; the three phase
//! timers are wall clock and excluded from any reproducibility comparison.
//! `greedy_time + bfs_time + other_time` equals the measured total: the two
//! search phases are timed directly and everything else (ordering, cache
//! bookkeeping, out-of-distribution checks, the naive scan) lands in
//! `other_time` by subtraction.

use std::time::Duration;

#[derive(Debug, Clone, Default)]
pub struct Counters {
    /// Distance kernel invocations during the online join phase.
    pub distance_computations: u64,
    /// Pops from the best-first queue during greedy descent.
    pub greedy_pops: u64,
    /// Pops from the breadth-first queue (plain or bounded best-first).
    pub bfs_pops: u64,
    /// Out-of-range queue entries displaced by closer candidates.
    pub hybrid_evictions: u64,
    /// Total ids written into per-query caches.
    pub cache_entries: u64,
    pub greedy_time: Duration,
    pub bfs_time: Duration,
    pub other_time: Duration,
}

impl Counters {
    pub fn new() -> Self {
        Counters::default()
    }

    /// The deterministic fields, for equality checks that must ignore time.
    pub fn counts(&self) -> [u64; 5] {
        [
            self.distance_computations,
            self.greedy_pops,
            self.bfs_pops,
            self.hybrid_evictions,
            self.cache_entries,
        ]
    }

    pub fn total_time(&self) -> Duration {
        self.greedy_time + self.bfs_time + self.other_time
    }
}
