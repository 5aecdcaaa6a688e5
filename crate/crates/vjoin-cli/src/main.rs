//! Command-line driver: generate workloads, build indexes, compute exact
//! ground truth, run joins and sweeps, inspect index files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use vjoin::build::IndexBuildParams;
use vjoin::config::KvConfig;
use vjoin::formats::{
    load_ground_truth, load_index, load_vectors, save_fvecs, save_ground_truth, save_index,
};
use vjoin::graph::degree_mode;
use vjoin::join::{vector_join, HybridMode, JoinConfig, JoinIndexes, MethodVariant};
use vjoin::oracle::nlj_exact;
use vjoin::store::VectorStore;
use vjoin::sweep::{csv_row, run_sweep, SweepSpec, CSV_HEADER};
use vjoin::workload::{generate, WorkloadSpec};
use vjoin::{build_index, build_merged_index, recall, NodeRole};

#[derive(Parser)]
#[command(name = "vjoin", version, about = "Threshold joins over vector sets")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic workload into fvecs files
    Gen {
        /// key = value workload spec
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_data: PathBuf,
        /// Required unless the spec is a self-join
        #[arg(long)]
        out_queries: Option<PathBuf>,
    },
    /// Build a proximity index; pass --queries for a merged index
    Build {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        queries: Option<PathBuf>,
        /// Maximum out-degree kept after pruning
        #[arg(short = 'R', long = "max-degree", default_value_t = 70)]
        max_degree: usize,
        /// Nearest-neighbor candidates per node
        #[arg(long, default_value_t = 100)]
        knn: usize,
        /// Leave stranded components disconnected
        #[arg(long)]
        no_repair: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the exact join result (omit --queries for a self-join)
    Truth {
        #[arg(long)]
        queries: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        theta: f32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one join and print a CSV row
    Join {
        #[arg(long)]
        data: PathBuf,
        /// Omit for a self-join
        #[arg(long)]
        queries: Option<PathBuf>,
        #[arg(long, default_value = "es")]
        variant: String,
        #[arg(long)]
        theta: f32,
        #[arg(long)]
        data_index: Option<PathBuf>,
        #[arg(long)]
        query_index: Option<PathBuf>,
        #[arg(long)]
        merged_index: Option<PathBuf>,
        /// Ground truth for the recall column
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Search queue cap
        #[arg(long = "L", default_value_t = 256)]
        l: usize,
        #[arg(long, default_value_t = 10)]
        es_patience: usize,
        #[arg(long, default_value_t = 1)]
        hybrid_patience: usize,
        #[arg(long, default_value_t = 1.5)]
        ood_factor: f32,
        /// auto, bfs, or bbfs
        #[arg(long, default_value = "auto")]
        hybrid: String,
        /// Print the CSV header line first
        #[arg(long)]
        header: bool,
        /// Workload label for the first column; defaults to the data stem
        #[arg(long)]
        label: Option<String>,
    },
    /// Run a sweep config and write its CSV
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Describe an index file
    Stats {
        #[arg(long)]
        index: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Gen {
            spec,
            out_data,
            out_queries,
        } => gen(&spec, &out_data, out_queries.as_deref()),
        Cmd::Build {
            data,
            queries,
            max_degree,
            knn,
            no_repair,
            out,
        } => build(&data, queries.as_deref(), max_degree, knn, !no_repair, &out),
        Cmd::Truth {
            queries,
            data,
            theta,
            out,
        } => truth(queries.as_deref(), &data, theta, &out),
        Cmd::Join {
            data,
            queries,
            variant,
            theta,
            data_index,
            query_index,
            merged_index,
            truth,
            l,
            es_patience,
            hybrid_patience,
            ood_factor,
            hybrid,
            header,
            label,
        } => join(JoinArgs {
            data,
            queries,
            variant,
            theta,
            data_index,
            query_index,
            merged_index,
            truth,
            l,
            es_patience,
            hybrid_patience,
            ood_factor,
            hybrid,
            header,
            label,
        }),
        Cmd::Sweep { config, out } => sweep(&config, &out),
        Cmd::Stats { index } => stats(&index),
    }
}

fn gen(spec_path: &Path, out_data: &Path, out_queries: Option<&Path>) -> Result<()> {
    let text = fs::read_to_string(spec_path)
        .with_context(|| format!("reading {}", spec_path.display()))?;
    let mut kv = KvConfig::parse(&text, &spec_path.display().to_string())?;
    let spec = WorkloadSpec::from_kv(&mut kv)?;
    kv.finish()?;
    let w = generate(&spec)?;
    save_fvecs(&w.data, out_data)?;
    match (&w.queries, out_queries) {
        (Some(q), Some(p)) => save_fvecs(q, p)?,
        (Some(_), None) => bail!("workload produces queries; pass --out-queries"),
        (None, Some(_)) => bail!("self-join workload has no query file; join the data with itself"),
        (None, None) => {}
    }
    eprintln!(
        "wrote {} data vectors (dim {}) to {}",
        w.data.count(),
        w.data.dim(),
        out_data.display()
    );
    if let Some(q) = &w.queries {
        eprintln!("wrote {} query vectors", q.count());
    }
    Ok(())
}

fn build(
    data_path: &Path,
    query_path: Option<&Path>,
    max_degree: usize,
    knn: usize,
    repair: bool,
    out: &Path,
) -> Result<()> {
    let params = IndexBuildParams {
        k_nn: knn,
        max_degree,
        connectivity_repair: repair,
    };
    let data = load_vectors(data_path)?;
    let graph = match query_path {
        None => build_index(&data, &params)?,
        Some(qp) => {
            let queries = load_vectors(qp)?;
            build_merged_index(&queries, &data, &params)?
        }
    };
    save_index(&graph, out)?;
    eprintln!(
        "wrote index: {} nodes, entry {}, to {}",
        graph.node_count(),
        graph.entry_point,
        out.display()
    );
    Ok(())
}

fn truth(query_path: Option<&Path>, data_path: &Path, theta: f32, out: &Path) -> Result<()> {
    let data = load_vectors(data_path)?;
    let queries = query_path.map(load_vectors).transpose()?;
    let q: &VectorStore = queries.as_ref().unwrap_or(&data);
    let t = nlj_exact(q, &data, theta)?;
    save_ground_truth(&t, out)?;
    eprintln!("wrote {} exact pairs to {}", t.pairs.len(), out.display());
    Ok(())
}

struct JoinArgs {
    data: PathBuf,
    queries: Option<PathBuf>,
    variant: String,
    theta: f32,
    data_index: Option<PathBuf>,
    query_index: Option<PathBuf>,
    merged_index: Option<PathBuf>,
    truth: Option<PathBuf>,
    l: usize,
    es_patience: usize,
    hybrid_patience: usize,
    ood_factor: f32,
    hybrid: String,
    header: bool,
    label: Option<String>,
}

fn join(args: JoinArgs) -> Result<()> {
    let variant: MethodVariant = args.variant.parse()?;
    let hybrid_mode: HybridMode = args.hybrid.parse()?;
    let data = load_vectors(&args.data)?;
    let queries = args.queries.as_deref().map(load_vectors).transpose()?;
    let q: &VectorStore = queries.as_ref().unwrap_or(&data);

    let data_graph = args.data_index.as_deref().map(load_index).transpose()?;
    let query_graph = args.query_index.as_deref().map(load_index).transpose()?;
    let merged_graph = args.merged_index.as_deref().map(load_index).transpose()?;
    let indexes = JoinIndexes {
        query_graph: query_graph.as_ref(),
        data_graph: data_graph.as_ref(),
        merged_graph: merged_graph.as_ref(),
    };
    let cfg = JoinConfig {
        theta: args.theta,
        variant,
        l_cap: args.l,
        es_patience: args.es_patience,
        hybrid_patience: args.hybrid_patience,
        ood_factor: args.ood_factor,
        hybrid_mode,
    };
    let outcome = vector_join(q, &data, indexes, &cfg)?;

    let rec = match &args.truth {
        None => None,
        Some(p) => {
            let t = load_ground_truth(p)?;
            if t.theta != args.theta {
                bail!(
                    "ground truth was computed for theta {}, join ran at {}",
                    t.theta,
                    args.theta
                );
            }
            Some(recall(&outcome.pairs, &t))
        }
    };
    let label = match &args.label {
        Some(l) => l.clone(),
        None => args
            .data
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "data".to_string()),
    };
    if args.header {
        println!("{}", CSV_HEADER);
    }
    println!(
        "{}",
        csv_row(&label, variant, args.theta, args.l, &outcome, rec)
    );
    Ok(())
}

fn sweep(config: &Path, out: &Path) -> Result<()> {
    let text =
        fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let spec = SweepSpec::from_kv_text(&text, &config.display().to_string())?;
    let result = run_sweep(&spec)?;
    fs::write(out, &result.csv).with_context(|| format!("writing {}", out.display()))?;
    eprintln!(
        "wrote {} rows ({} failed cells) to {}",
        result.cells,
        result.error_cells,
        out.display()
    );
    Ok(())
}

fn stats(index: &Path) -> Result<()> {
    let g = load_index(index)?;
    println!("nodes: {}", g.node_count());
    println!("dimension: {}", g.dimension);
    println!("entry_point: {}", g.entry_point);
    match &g.roles {
        None => println!("roles: single-set"),
        Some(roles) => {
            let q = roles.iter().filter(|r| **r == NodeRole::Query).count();
            println!("roles: {} query + {} data", q, roles.len() - q);
        }
    }
    let hist = g.degree_histogram();
    let total: usize = hist.iter().map(|(d, n)| d * n).sum();
    let max_degree = hist.last().map(|(d, _)| *d).unwrap_or(0);
    println!("edges: {}", total);
    println!(
        "degree: mean {:.2}, mode {}, max {}",
        total as f64 / g.node_count() as f64,
        degree_mode(&g),
        max_degree
    );
    println!("unreachable_from_entry: {}", g.count_unreachable());
    Ok(())
}
