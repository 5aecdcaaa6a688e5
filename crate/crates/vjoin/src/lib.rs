//! Threshold joins over vector sets, accelerated by graph proximity indexes.
//!
//! Given a query set X and a data set Y, the join returns every pair (x, y)
//! with Euclidean distance strictly below a threshold. Variants range from
//! the exact nested-loop scan to graph searches that reuse work across
//! queries via result caches or a single merged index over both sets.

pub mod build;
pub mod config;
pub mod counters;
pub mod error;
pub mod formats;
pub mod graph;
mod hybrid;
pub mod join;
pub mod ood;
pub mod oracle;
pub mod order;
mod search;
pub mod store;
pub mod sweep;
pub mod workload;

pub use build::{build_index, build_merged_index, IndexBuildParams};
pub use counters::Counters;
pub use error::{Error, Result};
pub use graph::{degree_mode, NodeRole, ProximityGraph};
pub use join::{
    recall, vector_join, HybridMode, JoinConfig, JoinIndexes, JoinOutcome, JoinPair, MethodVariant,
};
pub use ood::predict_ood;
pub use oracle::GroundTruth;
pub use order::{order_queries, QueryOrder};
pub use store::{distance, in_range, l2_distance, VectorId, VectorStore};
pub use sweep::{csv_row, run_sweep, SweepOutput, SweepSpec, CSV_HEADER, TIMING_COLUMNS};
pub use workload::{generate, Generator, Workload, WorkloadSpec};
