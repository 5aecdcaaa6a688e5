//! Threshold join entry point and method variants.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::counters::Counters;
use crate::error::{Error, Result};
use crate::graph::ProximityGraph;
use crate::hybrid::join_single_query_hybrid;
use crate::ood::predict_ood_counted;
use crate::oracle::GroundTruth;
use crate::order::order_queries;
use crate::search::{
    join_single_query, CachePolicy, NodeView, QuerySearch, SearchScratch, SeedMode,
};
use crate::store::{in_range, l2_distance, VectorId, VectorStore};

/// The join strategies, from the exact baseline up to the adaptive
/// merged-index search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodVariant {
    /// Exact nested-loop scan; no index.
    Naive,
    /// Greedy descent to the range, then a breadth-first sweep.
    Index,
    /// `Index` plus early-stopped descent.
    Es,
    /// `Es` with query ordering and hit caches seeding successors.
    EsHws,
    /// `Es` with query ordering and single-closest caches.
    EsSws,
    /// Queries embedded in the data index; search starts at the query's
    /// own node, so there is no descent at all.
    EsMi,
    /// `EsMi` that switches to bounded best-first search for queries the
    /// predictor flags as out of distribution.
    EsMiAdapt,
}

impl MethodVariant {
    pub fn all() -> [MethodVariant; 7] {
        [
            MethodVariant::Naive,
            MethodVariant::Index,
            MethodVariant::Es,
            MethodVariant::EsHws,
            MethodVariant::EsSws,
            MethodVariant::EsMi,
            MethodVariant::EsMiAdapt,
        ]
    }

    pub fn token(&self) -> &'static str {
        match self {
            MethodVariant::Naive => "naive",
            MethodVariant::Index => "index",
            MethodVariant::Es => "es",
            MethodVariant::EsHws => "es-hws",
            MethodVariant::EsSws => "es-sws",
            MethodVariant::EsMi => "es-mi",
            MethodVariant::EsMiAdapt => "es-mi-adapt",
        }
    }

    pub fn needs_data_graph(&self) -> bool {
        matches!(
            self,
            MethodVariant::Index | MethodVariant::Es | MethodVariant::EsHws | MethodVariant::EsSws
        )
    }

    pub fn needs_query_graph(&self) -> bool {
        matches!(self, MethodVariant::EsHws | MethodVariant::EsSws)
    }

    pub fn needs_merged_graph(&self) -> bool {
        matches!(self, MethodVariant::EsMi | MethodVariant::EsMiAdapt)
    }
}

impl fmt::Display for MethodVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for MethodVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodVariant::all()
            .into_iter()
            .find(|v| v.token() == s)
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown variant {:?}; expected one of naive, index, es, es-hws, es-sws, es-mi, es-mi-adapt",
                    s
                ))
            })
    }
}

/// How the adaptive variant picks its per-query search mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HybridMode {
    /// Consult the out-of-distribution predictor.
    #[default]
    Auto,
    /// Plain sweep for every query.
    ForceBfs,
    /// Bounded best-first for every query.
    ForceBbfs,
}

impl HybridMode {
    pub fn token(&self) -> &'static str {
        match self {
            HybridMode::Auto => "auto",
            HybridMode::ForceBfs => "bfs",
            HybridMode::ForceBbfs => "bbfs",
        }
    }
}

impl fmt::Display for HybridMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for HybridMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(HybridMode::Auto),
            "bfs" => Ok(HybridMode::ForceBfs),
            "bbfs" => Ok(HybridMode::ForceBbfs),
            other => Err(Error::config(format!(
                "unknown hybrid mode {:?}; expected auto, bfs, or bbfs",
                other
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JoinConfig {
    /// Matches are strictly closer than this.
    pub theta: f32,
    pub variant: MethodVariant,
    /// Greedy frontier capacity.
    pub l_cap: usize,
    /// Greedy pops tolerated without progress before descent stops early.
    pub es_patience: usize,
    /// Stagnating pops tolerated per out-of-range stretch in hybrid search.
    pub hybrid_patience: usize,
    /// Out-of-distribution threshold on d1 / d2.
    pub ood_factor: f32,
    pub hybrid_mode: HybridMode,
}

impl Default for JoinConfig {
    fn default() -> Self {
        JoinConfig {
            theta: 1.0,
            variant: MethodVariant::Es,
            l_cap: 256,
            es_patience: 10,
            hybrid_patience: 1,
            ood_factor: 1.5,
            hybrid_mode: HybridMode::Auto,
        }
    }
}

impl JoinConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta.is_finite() && self.theta >= 0.0) {
            return Err(Error::config(format!(
                "theta must be finite and non-negative, got {}",
                self.theta
            )));
        }
        if self.l_cap == 0 {
            return Err(Error::config("l_cap must be at least 1"));
        }
        if self.es_patience == 0 {
            return Err(Error::config("es_patience must be at least 1"));
        }
        if self.hybrid_patience == 0 {
            return Err(Error::config("hybrid_patience must be at least 1"));
        }
        if !(self.ood_factor.is_finite() && self.ood_factor > 0.0) {
            return Err(Error::config(format!(
                "ood_factor must be finite and positive, got {}",
                self.ood_factor
            )));
        }
        Ok(())
    }
}

/// One emitted match.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JoinPair {
    pub query: VectorId,
    pub data: VectorId,
    pub distance: f32,
}

#[derive(Debug, Clone)]
pub struct JoinOutcome {
    pub pairs: Vec<JoinPair>,
    pub counters: Counters,
    /// Per-query predictor decisions, in query id order; adaptive runs only.
    pub ood_flags: Option<Vec<bool>>,
}

/// Prebuilt indexes a variant may draw on. Unused slots are ignored.
#[derive(Debug, Clone, Copy, Default)]
pub struct JoinIndexes<'a> {
    pub query_graph: Option<&'a ProximityGraph>,
    pub data_graph: Option<&'a ProximityGraph>,
    pub merged_graph: Option<&'a ProximityGraph>,
}

fn require_single<'a>(
    graph: Option<&'a ProximityGraph>,
    store: &VectorStore,
    what: &str,
    variant: MethodVariant,
) -> Result<&'a ProximityGraph> {
    let g = graph
        .ok_or_else(|| Error::config(format!("variant {} needs a {} index", variant, what)))?;
    if g.roles.is_some() {
        return Err(Error::config(format!(
            "{} index for {} must be single-set, got one with roles",
            what, variant
        )));
    }
    if g.node_count() != store.count() {
        return Err(Error::config(format!(
            "{} index has {} nodes for {} vectors",
            what,
            g.node_count(),
            store.count()
        )));
    }
    if g.dimension as usize != store.dim() {
        return Err(Error::config(format!(
            "{} index dimension {} != vector dimension {}",
            what,
            g.dimension,
            store.dim()
        )));
    }
    Ok(g)
}

fn require_merged<'a>(
    graph: Option<&'a ProximityGraph>,
    queries: &VectorStore,
    data: &VectorStore,
    variant: MethodVariant,
) -> Result<&'a ProximityGraph> {
    let g =
        graph.ok_or_else(|| Error::config(format!("variant {} needs a merged index", variant)))?;
    let offset = g.data_offset()? as usize;
    if offset != queries.count() {
        return Err(Error::config(format!(
            "merged index has {} query nodes for {} queries",
            offset,
            queries.count()
        )));
    }
    if g.node_count() != queries.count() + data.count() {
        return Err(Error::config(format!(
            "merged index has {} nodes for {} queries + {} data vectors",
            g.node_count(),
            queries.count(),
            data.count()
        )));
    }
    if g.dimension as usize != data.dim() {
        return Err(Error::config(format!(
            "merged index dimension {} != vector dimension {}",
            g.dimension,
            data.dim()
        )));
    }
    Ok(g)
}

/// Runs the threshold join: every (query, data) pair strictly closer than
/// `config.theta`. Self-joins are detected by store identity and skip the
/// trivial (i, i) match; merged variants reject self-joins because query
/// and data nodes must be disjoint sets of the merged graph.
pub fn vector_join(
    queries: &VectorStore,
    data: &VectorStore,
    indexes: JoinIndexes,
    config: &JoinConfig,
) -> Result<JoinOutcome> {
    config.validate()?;
    if queries.dim() != data.dim() {
        return Err(Error::config(format!(
            "query dimension {} != data dimension {}",
            queries.dim(),
            data.dim()
        )));
    }
    let self_join = std::ptr::eq(queries, data);
    if self_join && config.variant.needs_merged_graph() {
        return Err(Error::config(format!(
            "variant {} cannot run a self-join; pass distinct stores",
            config.variant
        )));
    }
    if queries.is_empty() || data.is_empty() {
        return Ok(JoinOutcome {
            pairs: Vec::new(),
            counters: Counters::new(),
            ood_flags: matches!(config.variant, MethodVariant::EsMiAdapt).then(Vec::new),
        });
    }

    let mut counters = Counters::new();
    let total = Instant::now();
    let (pairs, ood_flags) = match config.variant {
        MethodVariant::Naive => (
            naive_join(queries, data, config.theta, self_join, &mut counters),
            None,
        ),
        MethodVariant::Index => {
            let g = require_single(indexes.data_graph, data, "data", config.variant)?;
            (
                graph_join(queries, data, g, config, None, self_join, &mut counters),
                None,
            )
        }
        MethodVariant::Es => {
            let g = require_single(indexes.data_graph, data, "data", config.variant)?;
            (
                graph_join(
                    queries,
                    data,
                    g,
                    config,
                    Some(config.es_patience),
                    self_join,
                    &mut counters,
                ),
                None,
            )
        }
        MethodVariant::EsHws | MethodVariant::EsSws => {
            let dg = require_single(indexes.data_graph, data, "data", config.variant)?;
            let qg = require_single(indexes.query_graph, queries, "query", config.variant)?;
            let policy = if config.variant == MethodVariant::EsHws {
                CachePolicy::AllResults
            } else {
                CachePolicy::Closest
            };
            (
                cached_join(
                    queries,
                    data,
                    qg,
                    dg,
                    config,
                    policy,
                    self_join,
                    &mut counters,
                )?,
                None,
            )
        }
        MethodVariant::EsMi => {
            let g = require_merged(indexes.merged_graph, queries, data, config.variant)?;
            let (pairs, _) = merged_join(queries, data, g, config, false, &mut counters);
            (pairs, None)
        }
        MethodVariant::EsMiAdapt => {
            let g = require_merged(indexes.merged_graph, queries, data, config.variant)?;
            let (pairs, flags) = merged_join(queries, data, g, config, true, &mut counters);
            (pairs, Some(flags))
        }
    };
    counters.other_time = total
        .elapsed()
        .saturating_sub(counters.greedy_time)
        .saturating_sub(counters.bfs_time);
    Ok(JoinOutcome {
        pairs,
        counters,
        ood_flags,
    })
}

fn naive_join(
    queries: &VectorStore,
    data: &VectorStore,
    theta: f32,
    self_join: bool,
    counters: &mut Counters,
) -> Vec<JoinPair> {
    let mut pairs = Vec::new();
    for q in 0..queries.count() as VectorId {
        let qv = queries.get(q);
        for d_id in 0..data.count() as VectorId {
            if self_join && q == d_id {
                continue;
            }
            let dist = l2_distance(qv, data.get(d_id));
            counters.distance_computations += 1;
            if in_range(dist, theta) {
                pairs.push(JoinPair {
                    query: q,
                    data: d_id,
                    distance: dist,
                });
            }
        }
    }
    pairs
}

fn graph_join(
    queries: &VectorStore,
    data: &VectorStore,
    graph: &ProximityGraph,
    config: &JoinConfig,
    es_patience: Option<usize>,
    self_join: bool,
    counters: &mut Counters,
) -> Vec<JoinPair> {
    let entry = [graph.entry_point];
    let mut scratch = SearchScratch::new(graph.node_count());
    let mut pairs = Vec::new();
    for q in 0..queries.count() as VectorId {
        let p = QuerySearch {
            query_vec: queries.get(q),
            view: NodeView::single(data),
            graph,
            theta: config.theta,
            l_cap: config.l_cap,
            es_patience,
            cache: CachePolicy::Off,
            exclude: self_join.then_some(q),
        };
        let r = join_single_query(&p, SeedMode::Scan(&entry), &mut scratch, counters);
        counters.greedy_time += r.greedy_elapsed;
        counters.bfs_time += r.bfs_elapsed;
        pairs.extend(r.hits.into_iter().map(|(v, dist)| JoinPair {
            query: q,
            data: v,
            distance: dist,
        }));
    }
    pairs
}

#[allow(clippy::too_many_arguments)]
fn cached_join(
    queries: &VectorStore,
    data: &VectorStore,
    query_graph: &ProximityGraph,
    data_graph: &ProximityGraph,
    config: &JoinConfig,
    policy: CachePolicy,
    self_join: bool,
    counters: &mut Counters,
) -> Result<Vec<JoinPair>> {
    let order = order_queries(
        queries,
        query_graph,
        data.get(data_graph.entry_point),
        counters,
    )?;
    let entry = [data_graph.entry_point];
    let mut caches: Vec<Option<Vec<VectorId>>> = vec![None; queries.count()];
    let mut scratch = SearchScratch::new(data_graph.node_count());
    let mut pairs = Vec::new();
    for &(q, parent) in &order.order {
        // Seed from the parent's cache when it has anything; a parent that
        // found nothing (or cached nothing) falls back to the entry point.
        let seeds: &[VectorId] = match parent.and_then(|p| caches[p as usize].as_deref()) {
            Some(c) if !c.is_empty() => c,
            _ => &entry,
        };
        let p = QuerySearch {
            query_vec: queries.get(q),
            view: NodeView::single(data),
            graph: data_graph,
            theta: config.theta,
            l_cap: config.l_cap,
            es_patience: Some(config.es_patience),
            cache: policy,
            exclude: self_join.then_some(q),
        };
        let r = join_single_query(&p, SeedMode::Scan(seeds), &mut scratch, counters);
        counters.greedy_time += r.greedy_elapsed;
        counters.bfs_time += r.bfs_elapsed;
        counters.cache_entries += r.cache.len() as u64;
        pairs.extend(r.hits.into_iter().map(|(v, dist)| JoinPair {
            query: q,
            data: v,
            distance: dist,
        }));
        caches[q as usize] = Some(r.cache);
    }
    Ok(pairs)
}

fn merged_join(
    queries: &VectorStore,
    data: &VectorStore,
    graph: &ProximityGraph,
    config: &JoinConfig,
    adaptive: bool,
    counters: &mut Counters,
) -> (Vec<JoinPair>, Vec<bool>) {
    let offset = queries.count() as VectorId;
    let mut scratch = SearchScratch::new(graph.node_count());
    let mut pairs = Vec::new();
    let mut flags = Vec::new();
    for q in 0..queries.count() as VectorId {
        let p = QuerySearch {
            query_vec: queries.get(q),
            view: NodeView::merged(queries, data),
            graph,
            theta: config.theta,
            l_cap: config.l_cap,
            es_patience: None,
            cache: CachePolicy::Off,
            exclude: None,
        };
        let hybrid = adaptive
            && match config.hybrid_mode {
                HybridMode::ForceBfs => false,
                HybridMode::ForceBbfs => true,
                HybridMode::Auto => predict_ood_counted(
                    graph,
                    p.query_vec,
                    data,
                    offset as usize,
                    q,
                    config.ood_factor,
                    counters,
                ),
            };
        let r = if hybrid {
            join_single_query_hybrid(
                &p,
                SeedMode::SelfNode(q),
                config.hybrid_patience,
                &mut scratch,
                counters,
            )
        } else {
            join_single_query(&p, SeedMode::SelfNode(q), &mut scratch, counters)
        };
        if adaptive {
            flags.push(hybrid);
        }
        counters.greedy_time += r.greedy_elapsed;
        counters.bfs_time += r.bfs_elapsed;
        pairs.extend(r.hits.into_iter().map(|(v, dist)| JoinPair {
            query: q,
            data: v - offset,
            distance: dist,
        }));
    }
    (pairs, flags)
}

/// Fraction of the exact result an approximate run recovered. An empty
/// exact result counts as fully recovered.
pub fn recall(pairs: &[JoinPair], truth: &GroundTruth) -> f64 {
    if truth.pairs.is_empty() {
        return 1.0;
    }
    let want = truth.pair_ids();
    let hit = pairs
        .iter()
        .filter(|p| want.contains(&(p.query, p.data)))
        .count();
    hit as f64 / truth.pairs.len() as f64
}
