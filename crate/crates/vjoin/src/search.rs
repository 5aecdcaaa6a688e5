//! Per-query search over a proximity graph.
//!
//! A query is answered in at most three phases:
//! 1. seed scan: probe seed nodes in order, stopping at the first in-range;
//! 2. greedy descent: best-first pops toward the query until the queue head
//!    is in range, the queue empties, or (with early stopping) the globally
//!    closest visited distance stops improving;
//! 3. breadth-first sweep: exhaustively enumerate the in-range region
//!    reachable from the in-range queue entries.
//!
//! All tie-breaks are (distance, id) with the smaller id first, so a fixed
//! input yields a fixed trace.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use crate::counters::Counters;
use crate::graph::ProximityGraph;
use crate::store::{in_range, l2_distance, VectorId, VectorStore};

/// Resolves node ids to vector slices for either a single store or the
/// query-then-data layout of a merged graph.
pub(crate) enum NodeView<'a> {
    Single(&'a VectorStore),
    Merged {
        queries: &'a VectorStore,
        data: &'a VectorStore,
        offset: u32,
    },
}

impl<'a> NodeView<'a> {
    pub(crate) fn single(store: &'a VectorStore) -> Self {
        NodeView::Single(store)
    }

    pub(crate) fn merged(queries: &'a VectorStore, data: &'a VectorStore) -> Self {
        NodeView::Merged {
            queries,
            data,
            offset: queries.count() as u32,
        }
    }

    pub(crate) fn get(&self, v: VectorId) -> &'a [f32] {
        match self {
            NodeView::Single(s) => s.get(v),
            NodeView::Merged {
                queries,
                data,
                offset,
            } => {
                if v < *offset {
                    queries.get(v)
                } else {
                    data.get(v - offset)
                }
            }
        }
    }
}

/// Candidate pool sorted ascending by (distance, id). Small enough that a
/// flat vector beats a heap: pops come off the front, the crop keeps a
/// prefix, and the hybrid search needs ordered scans anyway.
pub(crate) struct CandidateQueue {
    entries: Vec<(f32, VectorId)>,
}

impl CandidateQueue {
    pub(crate) fn new() -> Self {
        CandidateQueue {
            entries: Vec::new(),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.entries.len()
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub(crate) fn entries(&self) -> &[(f32, VectorId)] {
        &self.entries
    }

    pub(crate) fn push(&mut self, d: f32, v: VectorId) {
        let pos = self
            .entries
            .partition_point(|e| e.0.total_cmp(&d).then(e.1.cmp(&v)).is_lt());
        self.entries.insert(pos, (d, v));
    }

    pub(crate) fn peek_min(&self) -> Option<(f32, VectorId)> {
        self.entries.first().copied()
    }

    pub(crate) fn pop_min(&mut self) -> Option<(f32, VectorId)> {
        if self.entries.is_empty() {
            None
        } else {
            Some(self.entries.remove(0))
        }
    }

    pub(crate) fn max_dist(&self) -> Option<f32> {
        self.entries.last().map(|e| e.0)
    }

    /// Keeps the `l` closest entries.
    pub(crate) fn truncate_closest(&mut self, l: usize) {
        self.entries.truncate(l);
    }

    pub(crate) fn remove_at(&mut self, idx: usize) -> (f32, VectorId) {
        self.entries.remove(idx)
    }
}

/// Visited marks reused across the queries of one run; reset cost is
/// proportional to the previous query's footprint, not the graph.
pub(crate) struct SearchScratch {
    visited: Vec<bool>,
    touched: Vec<VectorId>,
}

impl SearchScratch {
    pub(crate) fn new(node_count: usize) -> Self {
        SearchScratch {
            visited: vec![false; node_count],
            touched: Vec::new(),
        }
    }

    pub(crate) fn reset(&mut self) {
        for &v in &self.touched {
            self.visited[v as usize] = false;
        }
        self.touched.clear();
    }

    /// Marks `v` visited; true when this is the first visit.
    pub(crate) fn visit(&mut self, v: VectorId) -> bool {
        if self.visited[v as usize] {
            false
        } else {
            self.visited[v as usize] = true;
            self.touched.push(v);
            true
        }
    }
}

/// What each query deposits for later queries to seed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum CachePolicy {
    /// Nothing.
    Off,
    /// Every emitted data id.
    AllResults,
    /// The single closest visited id, in range or not.
    Closest,
}

/// How the search enters the graph.
pub(crate) enum SeedMode<'a> {
    /// Probe these nodes in order (entry point or a predecessor's cache).
    Scan(&'a [VectorId]),
    /// Start at the query's own node in a merged graph, distance zero by
    /// identity; no seed distance is computed and greedy descent is skipped.
    SelfNode(VectorId),
}

pub(crate) struct QuerySearch<'a> {
    pub query_vec: &'a [f32],
    pub view: NodeView<'a>,
    pub graph: &'a ProximityGraph,
    pub theta: f32,
    pub l_cap: usize,
    /// Greedy pops tolerated without the closest distance improving;
    /// `None` disables early stopping.
    pub es_patience: Option<usize>,
    pub cache: CachePolicy,
    /// Self-join identity: this node is never emitted as a pair.
    pub exclude: Option<VectorId>,
}

pub(crate) struct SearchResult {
    /// (node id, distance) of emitted matches, in discovery order. Node ids
    /// are graph ids; merged-graph callers translate to data ids.
    pub hits: Vec<(VectorId, f32)>,
    pub cache: Vec<VectorId>,
    pub greedy_elapsed: Duration,
    pub bfs_elapsed: Duration,
}

/// Queue plus the globally closest visited node.
pub(crate) struct Frontier {
    pub queue: CandidateQueue,
    pub closest: Option<(f32, VectorId)>,
}

impl Frontier {
    pub(crate) fn new() -> Self {
        Frontier {
            queue: CandidateQueue::new(),
            closest: None,
        }
    }

    pub(crate) fn note_closest(&mut self, d: f32, v: VectorId) {
        let better = match self.closest {
            None => true,
            Some((bd, bv)) => d < bd || (d == bd && v < bv),
        };
        if better {
            self.closest = Some((d, v));
        }
    }

    pub(crate) fn closest_dist(&self) -> f32 {
        self.closest.map(|(d, _)| d).unwrap_or(f32::INFINITY)
    }
}

/// Runs the seed phase. Returns true when greedy descent should follow
/// (scan mode); self-node starts go straight to the sweep phase.
pub(crate) fn init_frontier(
    p: &QuerySearch,
    seeds: &SeedMode,
    f: &mut Frontier,
    scratch: &mut SearchScratch,
    counters: &mut Counters,
) -> bool {
    match seeds {
        SeedMode::Scan(list) => {
            for &s in *list {
                if !scratch.visit(s) {
                    continue;
                }
                let d = l2_distance(p.query_vec, p.view.get(s));
                counters.distance_computations += 1;
                f.queue.push(d, s);
                f.note_closest(d, s);
                if in_range(d, p.theta) {
                    break;
                }
            }
            true
        }
        SeedMode::SelfNode(node) => {
            scratch.visit(*node);
            f.queue.push(0.0, *node);
            f.note_closest(0.0, *node);
            false
        }
    }
}

/// Best-first descent. Exits when the head is in range, the queue empties,
/// or the plateau counter reaches the patience (checked at iteration
/// boundaries, in that order, so an in-range head always wins).
pub(crate) fn greedy_descend(
    p: &QuerySearch,
    f: &mut Frontier,
    scratch: &mut SearchScratch,
    counters: &mut Counters,
) {
    let mut plateau = 0usize;
    loop {
        let Some((d_head, _)) = f.queue.peek_min() else {
            return;
        };
        if in_range(d_head, p.theta) {
            return;
        }
        if let Some(patience) = p.es_patience {
            if plateau >= patience {
                return;
            }
        }
        let (d_u, u) = f.queue.pop_min().expect("peeked non-empty");
        counters.greedy_pops += 1;
        let before = f.closest_dist();
        for &v in p.graph.neighbors(u) {
            if !scratch.visit(v) {
                continue;
            }
            let d_v = l2_distance(p.query_vec, p.view.get(v));
            counters.distance_computations += 1;
            f.note_closest(d_v, v);
            // Only strictly descending candidates stay on the path.
            if d_v < d_u {
                f.queue.push(d_v, v);
            }
        }
        f.queue.truncate_closest(p.l_cap);
        if f.closest_dist() < before {
            plateau = 0;
        } else {
            plateau += 1;
        }
    }
}

fn assemble_cache(p: &QuerySearch, hits: &[(VectorId, f32)], f: &Frontier) -> Vec<VectorId> {
    match p.cache {
        CachePolicy::Off => Vec::new(),
        CachePolicy::AllResults => hits.iter().map(|&(v, _)| v).collect(),
        CachePolicy::Closest => f.closest.map(|(_, v)| vec![v]).unwrap_or_default(),
    }
}

/// Seed, descend, then sweep the in-range region breadth-first.
///
/// In a merged graph the sweep never crosses query nodes: they are marked
/// visited without a distance computation and never enqueued, so only data
/// ids can be emitted.
pub(crate) fn join_single_query(
    p: &QuerySearch,
    seeds: SeedMode,
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
    let mut hits: Vec<(VectorId, f32)> = Vec::new();
    let mut fifo: VecDeque<VectorId> = VecDeque::new();
    for &(d, v) in f.queue.entries() {
        if in_range(d, p.theta) {
            fifo.push_back(v);
            if p.graph.is_data(v) && p.exclude != Some(v) {
                hits.push((v, d));
            }
        }
    }
    while let Some(u) = fifo.pop_front() {
        counters.bfs_pops += 1;
        for &v in p.graph.neighbors(u) {
            if !scratch.visit(v) {
                continue;
            }
            if !p.graph.is_data(v) {
                continue;
            }
            let d_v = l2_distance(p.query_vec, p.view.get(v));
            counters.distance_computations += 1;
            f.note_closest(d_v, v);
            if in_range(d_v, p.theta) {
                fifo.push_back(v);
                if p.exclude != Some(v) {
                    hits.push((v, d_v));
                }
            }
        }
    }
    let bfs_elapsed = t1.elapsed();

    let cache = assemble_cache(p, &hits, &f);
    SearchResult {
        hits,
        cache,
        greedy_elapsed,
        bfs_elapsed,
    }
}
