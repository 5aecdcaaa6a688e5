//! End-to-end runs of the vjoin binary through temp directories.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vjoin"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn vjoin");
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_err(cmd: &mut Command) -> String {
    let out = cmd.output().expect("spawn vjoin");
    assert!(!out.status.success(), "command unexpectedly succeeded");
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// gen + build + truth into dir, returning the file paths.
struct Pipeline {
    data: PathBuf,
    queries: PathBuf,
    data_index: PathBuf,
    query_index: PathBuf,
    merged_index: PathBuf,
    truth: PathBuf,
}

fn prepare(dir: &Path) -> Pipeline {
    let spec = dir.join("workload.conf");
    std::fs::write(
        &spec,
        "generator = gaussian-clusters\n\
         dim = 8\n\
         data_count = 600\n\
         query_count = 60\n\
         cluster_count = 3\n\
         seed = 5\n",
    )
    .unwrap();
    let p = Pipeline {
        data: dir.join("data.fvecs"),
        queries: dir.join("queries.fvecs"),
        data_index: dir.join("data.vjix"),
        query_index: dir.join("queries.vjix"),
        merged_index: dir.join("merged.vjix"),
        truth: dir.join("exact.vjgt"),
    };
    run_ok(
        bin()
            .arg("gen")
            .arg("--spec")
            .arg(&spec)
            .arg("--out-data")
            .arg(&p.data)
            .arg("--out-queries")
            .arg(&p.queries),
    );
    run_ok(
        bin()
            .arg("build")
            .arg("--data")
            .arg(&p.data)
            .arg("--knn")
            .arg("40")
            .arg("-R")
            .arg("24")
            .arg("--out")
            .arg(&p.data_index),
    );
    run_ok(
        bin()
            .arg("build")
            .arg("--data")
            .arg(&p.queries)
            .arg("--knn")
            .arg("40")
            .arg("--max-degree")
            .arg("24")
            .arg("--out")
            .arg(&p.query_index),
    );
    run_ok(
        bin()
            .arg("build")
            .arg("--data")
            .arg(&p.data)
            .arg("--queries")
            .arg(&p.queries)
            .arg("--knn")
            .arg("40")
            .arg("-R")
            .arg("24")
            .arg("--out")
            .arg(&p.merged_index),
    );
    run_ok(
        bin()
            .arg("truth")
            .arg("--queries")
            .arg(&p.queries)
            .arg("--data")
            .arg(&p.data)
            .arg("--theta")
            .arg("0.9")
            .arg("--out")
            .arg(&p.truth),
    );
    p
}

fn join_cmd(p: &Pipeline, variant: &str, theta: &str) -> Command {
    let mut c = bin();
    c.arg("join")
        .arg("--data")
        .arg(&p.data)
        .arg("--queries")
        .arg(&p.queries)
        .arg("--variant")
        .arg(variant)
        .arg("--theta")
        .arg(theta)
        .arg("--data-index")
        .arg(&p.data_index)
        .arg("--query-index")
        .arg(&p.query_index)
        .arg("--merged-index")
        .arg(&p.merged_index)
        .arg("--truth")
        .arg(&p.truth);
    c
}

const TIMING_COLUMNS: [usize; 4] = [4, 5, 6, 7];

fn mask_timing(row: &str) -> String {
    row.split(',')
        .enumerate()
        .map(|(i, f)| if TIMING_COLUMNS.contains(&i) { "_" } else { f })
        .collect::<Vec<_>>()
        .join(",")
}

#[test]
fn pipeline_produces_a_csv_row() {
    let dir = tempfile::tempdir().unwrap();
    let p = prepare(dir.path());
    let out = run_ok(join_cmd(&p, "es", "0.9").arg("--header"));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("workload,variant,theta,L,"));
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields.len(), lines[0].split(',').count());
    assert_eq!(fields[0], "data", "label defaults to the data file stem");
    assert_eq!(fields[1], "es");
    assert_eq!(fields[3], "256");
    let recall: f64 = fields[8].parse().unwrap();
    assert!((0.0..=1.0).contains(&recall));
    assert_eq!(*fields.last().unwrap(), "ok");
}

#[test]
fn naive_join_scores_perfect_recall() {
    let dir = tempfile::tempdir().unwrap();
    let p = prepare(dir.path());
    let out = run_ok(&mut join_cmd(&p, "naive", "0.9"));
    let row = stdout(&out);
    let fields: Vec<&str> = row.trim_end().split(',').collect();
    assert_eq!(fields[8], "1.000000");
}

#[test]
fn join_reruns_match_outside_timing() {
    let dir = tempfile::tempdir().unwrap();
    let p = prepare(dir.path());
    let a = stdout(&run_ok(&mut join_cmd(&p, "es-mi-adapt", "0.9")));
    let b = stdout(&run_ok(&mut join_cmd(&p, "es-mi-adapt", "0.9")));
    assert_eq!(mask_timing(a.trim_end()), mask_timing(b.trim_end()));
}

#[test]
fn sweep_writes_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("sweep.conf");
    std::fs::write(
        &conf,
        "name = smoke\n\
         generator = gaussian-clusters\n\
         dim = 6\n\
         data_count = 400\n\
         query_count = 40\n\
         cluster_count = 2\n\
         seed = 9\n\
         thetas = 0.7, 1.1\n\
         variants = naive, es\n\
         l_values = 64, 256\n\
         knn = 30\n\
         degree = 20\n",
    )
    .unwrap();
    let out_csv = dir.path().join("out.csv");
    run_ok(
        bin()
            .arg("sweep")
            .arg("--config")
            .arg(&conf)
            .arg("--out")
            .arg(&out_csv),
    );
    let text = std::fs::read_to_string(&out_csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 2 * 2 * 2);
    for row in &lines[1..] {
        assert_eq!(row.split(',').count(), lines[0].split(',').count());
        assert!(row.starts_with("smoke,"));
        assert!(row.ends_with(",ok"));
    }
}

#[test]
fn stats_describes_both_index_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let p = prepare(dir.path());
    let single = stdout(&run_ok(
        bin().arg("stats").arg("--index").arg(&p.data_index),
    ));
    assert!(single.contains("nodes: 600"));
    assert!(single.contains("roles: single-set"));
    assert!(single.contains("unreachable_from_entry: 0"));
    let merged = stdout(&run_ok(
        bin().arg("stats").arg("--index").arg(&p.merged_index),
    ));
    assert!(merged.contains("nodes: 660"));
    assert!(merged.contains("roles: 60 query + 600 data"));
}

#[test]
fn mismatched_truth_theta_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = prepare(dir.path());
    let stderr = run_err(&mut join_cmd(&p, "es", "1.0"));
    assert!(
        stderr.contains("ground truth was computed for theta"),
        "stderr: {}",
        stderr
    );
}

#[test]
fn unknown_variant_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = prepare(dir.path());
    let stderr = run_err(&mut join_cmd(&p, "fastest", "0.9"));
    assert!(stderr.contains("unknown variant"), "stderr: {}", stderr);
}

#[test]
fn missing_index_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = prepare(dir.path());
    let stderr = run_err(
        bin()
            .arg("join")
            .arg("--data")
            .arg(&p.data)
            .arg("--queries")
            .arg(&p.queries)
            .arg("--variant")
            .arg("es")
            .arg("--theta")
            .arg("0.9"),
    );
    assert!(stderr.contains("needs a data index"), "stderr: {}", stderr);
}

#[test]
fn corrupt_index_fails_with_typed_message() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.vjix");
    std::fs::write(&bad, b"not an index file at all").unwrap();
    let stderr = run_err(bin().arg("stats").arg("--index").arg(&bad));
    assert!(stderr.contains("unrecognized format"), "stderr: {}", stderr);
}

#[test]
fn self_join_spec_refuses_query_output() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("sj.conf");
    std::fs::write(
        &spec,
        "generator = self-join\ndim = 4\ndata_count = 50\nseed = 3\n",
    )
    .unwrap();
    let stderr = run_err(
        bin()
            .arg("gen")
            .arg("--spec")
            .arg(&spec)
            .arg("--out-data")
            .arg(dir.path().join("d.fvecs"))
            .arg("--out-queries")
            .arg(dir.path().join("q.fvecs")),
    );
    assert!(stderr.contains("self-join workload"), "stderr: {}", stderr);
}

#[test]
fn self_join_runs_against_the_data_itself() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("sj.conf");
    std::fs::write(
        &spec,
        "generator = self-join\ndim = 4\ndata_count = 300\nseed = 3\n",
    )
    .unwrap();
    let data = dir.path().join("d.fvecs");
    run_ok(
        bin()
            .arg("gen")
            .arg("--spec")
            .arg(&spec)
            .arg("--out-data")
            .arg(&data),
    );
    let index = dir.path().join("d.vjix");
    run_ok(
        bin()
            .arg("build")
            .arg("--data")
            .arg(&data)
            .arg("--knn")
            .arg("30")
            .arg("-R")
            .arg("20")
            .arg("--out")
            .arg(&index),
    );
    let truth = dir.path().join("d.vjgt");
    run_ok(
        bin()
            .arg("truth")
            .arg("--data")
            .arg(&data)
            .arg("--theta")
            .arg("0.4")
            .arg("--out")
            .arg(&truth),
    );
    let out = run_ok(
        bin()
            .arg("join")
            .arg("--data")
            .arg(&data)
            .arg("--variant")
            .arg("naive")
            .arg("--theta")
            .arg("0.4")
            .arg("--truth")
            .arg(&truth),
    );
    let row = stdout(&out);
    let fields: Vec<&str> = row.trim_end().split(',').collect();
    assert_eq!(fields[8], "1.000000");
    assert_eq!(*fields.last().unwrap(), "ok");
}
