//! Benchmark sweeps: a grid of (theta, variant, L) cells over one
//! workload, reported as CSV.
//!
//! Indexes are built once per sweep and shared. Ground truth is exact and
//! computed once per theta. Every cell runs twice, an unmeasured warm-up
//! and a measured run, so cold caches do not pollute latency columns; the
//! count columns come from the measured run and are deterministic. A cell
//! that fails (say a merged variant on a self-join) records its error in
//! the status column and the sweep moves on.

use std::fmt::Write as _;

use crate::build::{build_index, build_merged_index, IndexBuildParams};
use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::graph::ProximityGraph;
use crate::join::{vector_join, HybridMode, JoinConfig, JoinIndexes, MethodVariant};
use crate::oracle::nlj_exact;
use crate::recall;
use crate::workload::{generate, WorkloadSpec};

pub const CSV_HEADER: &str = "workload,variant,theta,L,latency_ms,greedy_ms,bfs_ms,other_ms,recall,dist_computations,greedy_pops,bfs_pops,hybrid_evictions,cache_entries,join_size,ood_flagged,status";

/// Columns that hold wall-clock times, by zero-based index; everything
/// else is deterministic for a fixed spec.
pub const TIMING_COLUMNS: [usize; 4] = [4, 5, 6, 7];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Label for the CSV's workload column.
    pub name: String,
    pub workload: WorkloadSpec,
    pub thetas: Vec<f32>,
    pub variants: Vec<MethodVariant>,
    pub l_values: Vec<usize>,
    pub build: IndexBuildParams,
    pub es_patience: usize,
    pub hybrid_patience: usize,
    pub ood_factor: f32,
    pub hybrid_mode: HybridMode,
}

impl SweepSpec {
    pub fn from_kv_text(text: &str, source: &str) -> Result<SweepSpec> {
        let mut kv = KvConfig::parse(text, source)?;
        let workload = WorkloadSpec::from_kv(&mut kv)?;
        let thetas = kv
            .take_list::<f32>("thetas")?
            .ok_or_else(|| Error::config(format!("{}: missing key \"thetas\"", source)))?;
        let variants = kv
            .take_list::<MethodVariant>("variants")?
            .unwrap_or_else(|| MethodVariant::all().to_vec());
        let l_values = kv
            .take_list::<usize>("l_values")?
            .unwrap_or_else(|| vec![256]);
        let mut build = IndexBuildParams::default();
        if let Some(v) = kv.take_parsed::<usize>("knn")? {
            build.k_nn = v;
        }
        if let Some(v) = kv.take_parsed::<usize>("degree")? {
            build.max_degree = v;
        }
        let spec = SweepSpec {
            name: kv
                .take("name")
                .unwrap_or_else(|| workload.generator.token().to_string()),
            workload,
            thetas,
            variants,
            l_values,
            build,
            es_patience: kv.take_parsed::<usize>("es_patience")?.unwrap_or(10),
            hybrid_patience: kv.take_parsed::<usize>("hybrid_patience")?.unwrap_or(1),
            ood_factor: kv.take_parsed::<f32>("ood_factor")?.unwrap_or(1.5),
            hybrid_mode: kv
                .take_parsed::<HybridMode>("hybrid_mode")?
                .unwrap_or(HybridMode::Auto),
        };
        kv.finish()?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.thetas.is_empty() {
            return Err(Error::config("sweep needs at least one theta"));
        }
        if self.variants.is_empty() {
            return Err(Error::config("sweep needs at least one variant"));
        }
        if self.l_values.is_empty() {
            return Err(Error::config("sweep needs at least one L value"));
        }
        if self.name.contains(',') || self.name.contains('\n') {
            return Err(Error::config(
                "workload name must not contain commas or newlines",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    /// Full CSV, header included.
    pub csv: String,
    pub cells: usize,
    pub error_cells: usize,
}

fn sanitize(err: &Error) -> String {
    err.to_string().replace(',', ";").replace('\n', " ")
}

/// One CSV data row in `CSV_HEADER` order. `recall` stays blank when no
/// ground truth was supplied.
pub fn csv_row(
    workload: &str,
    variant: MethodVariant,
    theta: f32,
    l_cap: usize,
    out: &crate::join::JoinOutcome,
    recall: Option<f64>,
) -> String {
    let c = &out.counters;
    let flagged = out
        .ood_flags
        .as_ref()
        .map(|f| f.iter().filter(|x| **x).count().to_string())
        .unwrap_or_default();
    format!(
        "{},{},{},{},{:.3},{:.3},{:.3},{:.3},{},{},{},{},{},{},{},{},ok",
        workload,
        variant,
        theta,
        l_cap,
        c.total_time().as_secs_f64() * 1e3,
        c.greedy_time.as_secs_f64() * 1e3,
        c.bfs_time.as_secs_f64() * 1e3,
        c.other_time.as_secs_f64() * 1e3,
        recall.map(|r| format!("{:.6}", r)).unwrap_or_default(),
        c.distance_computations,
        c.greedy_pops,
        c.bfs_pops,
        c.hybrid_evictions,
        c.cache_entries,
        out.pairs.len(),
        flagged,
    )
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutput> {
    spec.validate()?;
    let w = generate(&spec.workload)?;
    let queries = w.query_store();
    let self_join = w.queries.is_none();

    let needs_data = spec.variants.iter().any(|v| v.needs_data_graph());
    let needs_query = spec.variants.iter().any(|v| v.needs_query_graph());
    let needs_merged = spec.variants.iter().any(|v| v.needs_merged_graph());

    let data_graph: Option<ProximityGraph> = if needs_data || (needs_query && self_join) {
        Some(build_index(&w.data, &spec.build)?)
    } else {
        None
    };
    // A self-join's query side is the data store, so its index works for
    // both roles.
    let query_graph: Option<ProximityGraph> = if needs_query && !self_join {
        Some(build_index(queries, &spec.build)?)
    } else {
        None
    };
    // Merged variants reject self-joins; leave the slot empty and let the
    // cells report it.
    let merged_graph: Option<ProximityGraph> = if needs_merged && !self_join {
        Some(build_merged_index(queries, &w.data, &spec.build)?)
    } else {
        None
    };
    let indexes = JoinIndexes {
        query_graph: if self_join {
            data_graph.as_ref()
        } else {
            query_graph.as_ref()
        },
        data_graph: data_graph.as_ref(),
        merged_graph: merged_graph.as_ref(),
    };

    let mut csv = String::new();
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    let mut cells = 0usize;
    let mut error_cells = 0usize;
    for &theta in &spec.thetas {
        let truth = nlj_exact(queries, &w.data, theta)?;
        for &variant in &spec.variants {
            for &l_cap in &spec.l_values {
                cells += 1;
                let cfg = JoinConfig {
                    theta,
                    variant,
                    l_cap,
                    es_patience: spec.es_patience,
                    hybrid_patience: spec.hybrid_patience,
                    ood_factor: spec.ood_factor,
                    hybrid_mode: spec.hybrid_mode,
                };
                // Warm-up, then the measured run.
                let outcome = vector_join(queries, &w.data, indexes, &cfg)
                    .and_then(|_| vector_join(queries, &w.data, indexes, &cfg));
                match outcome {
                    Ok(out) => {
                        let rec = recall(&out.pairs, &truth);
                        writeln!(
                            csv,
                            "{}",
                            csv_row(&spec.name, variant, theta, l_cap, &out, Some(rec))
                        )
                        .unwrap();
                    }
                    Err(e) => {
                        error_cells += 1;
                        writeln!(
                            csv,
                            "{},{},{},{},,,,,,,,,,,,,{}",
                            spec.name,
                            variant,
                            theta,
                            l_cap,
                            sanitize(&e)
                        )
                        .unwrap();
                    }
                }
            }
        }
    }
    Ok(SweepOutput {
        csv,
        cells,
        error_cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::Generator;

    fn small_spec() -> SweepSpec {
        SweepSpec {
            name: "unit".into(),
            workload: WorkloadSpec {
                generator: Generator::GaussianClusters,
                dim: 3,
                data_count: 120,
                query_count: 15,
                cluster_count: 2,
                ..WorkloadSpec::default()
            },
            thetas: vec![0.4, 0.8],
            variants: vec![
                MethodVariant::Naive,
                MethodVariant::Es,
                MethodVariant::EsMiAdapt,
            ],
            l_values: vec![64],
            build: IndexBuildParams {
                k_nn: 30,
                max_degree: 15,
                connectivity_repair: true,
            },
            es_patience: 10,
            hybrid_patience: 1,
            ood_factor: 1.5,
            hybrid_mode: HybridMode::Auto,
        }
    }

    fn mask_timing(csv: &str) -> String {
        csv.lines()
            .map(|line| {
                line.split(',')
                    .enumerate()
                    .map(|(i, f)| if TIMING_COLUMNS.contains(&i) { "_" } else { f })
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn sweep_emits_a_row_per_cell_and_is_deterministic() {
        let spec = small_spec();
        let a = run_sweep(&spec).unwrap();
        let b = run_sweep(&spec).unwrap();
        assert_eq!(a.cells, 2 * 3);
        assert_eq!(a.error_cells, 0);
        let lines: Vec<&str> = a.csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 1 + a.cells);
        assert!(lines[1..].iter().all(|l| l.ends_with(",ok")));
        assert_eq!(mask_timing(&a.csv), mask_timing(&b.csv));
        // Naive rows report perfect recall.
        for line in &lines[1..] {
            let f: Vec<&str> = line.split(',').collect();
            if f[1] == "naive" {
                assert_eq!(f[8], "1.000000");
                assert_eq!(f[15], "", "naive has no ood column");
            }
            if f[1] == "es-mi-adapt" {
                assert!(!f[15].is_empty());
            }
        }
    }

    #[test]
    fn self_join_sweep_reports_merged_cells_as_errors() {
        let mut spec = small_spec();
        spec.workload.generator = Generator::SelfJoin;
        spec.variants = vec![MethodVariant::Es, MethodVariant::EsHws, MethodVariant::EsMi];
        spec.thetas = vec![0.5];
        let out = run_sweep(&spec).unwrap();
        assert_eq!(out.cells, 3);
        assert_eq!(out.error_cells, 1);
        let bad: Vec<&str> = out
            .csv
            .lines()
            .filter(|l| !l.ends_with(",ok") && !l.starts_with("workload"))
            .collect();
        assert_eq!(bad.len(), 1);
        assert!(bad[0].starts_with("unit,es-mi,"));
        assert!(!bad[0].contains('\n'));
        // Every row, the failed cell included, aligns with the header.
        let want_fields = CSV_HEADER.split(',').count();
        for line in out.csv.lines() {
            assert_eq!(line.split(',').count(), want_fields, "{}", line);
        }
    }

    #[test]
    fn spec_parses_from_kv_text() {
        let text = "\
# sweep config
generator = gaussian-clusters
dim = 4
data_count = 200
query_count = 20
cluster_count = 3
seed = 7
name = demo
thetas = 0.3, 0.6
variants = naive, es-mi
l_values = 32, 64
knn = 25
degree = 12
es_patience = 5
";
        let spec = SweepSpec::from_kv_text(text, "inline").unwrap();
        assert_eq!(spec.name, "demo");
        assert_eq!(spec.thetas, vec![0.3, 0.6]);
        assert_eq!(
            spec.variants,
            vec![MethodVariant::Naive, MethodVariant::EsMi]
        );
        assert_eq!(spec.l_values, vec![32, 64]);
        assert_eq!(spec.build.k_nn, 25);
        assert_eq!(spec.build.max_degree, 12);
        assert_eq!(spec.es_patience, 5);
        assert_eq!(spec.workload.rng_seed, 7);

        assert!(SweepSpec::from_kv_text("thetas = 0.5\nmystery = 1", "x").is_err());
        assert!(SweepSpec::from_kv_text("dim = 4", "x").is_err());
    }
}
