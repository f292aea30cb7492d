use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn csc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csc"))
        .args(args)
        .env_remove("CSC_JOBS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = csc(args);
    assert!(
        out.status.success(),
        "csc {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    csc(args).status.code().expect("exit code")
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Data lines of a text output, without the provenance header.
fn body(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn sbm(dir: &TempDir, name: &str, args: &[&str]) -> (PathBuf, PathBuf) {
    let g = p(dir, name);
    let mut full = vec!["generate", "sbm", "-o", s(&g)];
    full.extend_from_slice(args);
    ok(&full);
    let mut labels = g.clone().into_os_string();
    labels.push(".labels");
    (g, labels.into())
}

#[test]
fn generate_disjoint_triangles() {
    let dir = TempDir::new().unwrap();
    let g = p(&dir, "g.txt");
    let summary: Value = serde_json::from_str(&ok(&[
        "generate", "sbm", "-k", "2", "--cluster-size", "3", "-p", "1", "-q", "0", "-o", s(&g),
    ]))
    .unwrap();
    assert_eq!(summary["n"], 6);
    assert_eq!(summary["m"], 6);
    assert_eq!(summary["d_avg"], 2.0);
    assert_eq!(summary["config"]["generator"]["kind"], "sbm");
    assert_eq!(body(&g).iter().filter(|l| !l.starts_with('%')).count(), 6);
    assert_eq!(body(&p(&dir, "g.txt.labels")), ["0", "0", "0", "1", "1", "1"]);
}

#[test]
fn generate_is_deterministic_per_seed() {
    let dir = TempDir::new().unwrap();
    let args = ["-k", "3", "--cluster-size", "40", "-p", "0.2", "-q", "0.02", "--seed", "5"];
    let (a, _) = sbm(&dir, "a.txt", &args);
    let (b, _) = sbm(&dir, "b.txt", &args);
    assert_eq!(body(&a), body(&b));
    let (c, _) = sbm(&dir, "c.txt", &["-k", "3", "--cluster-size", "40", "-p", "0.2", "-q", "0.02", "--seed", "6"]);
    assert_ne!(body(&a), body(&c));

    let knn = ["generate", "knn", "-k", "3", "--cluster-size", "20", "--neighbours", "4", "--seed", "2"];
    let (x, y) = (p(&dir, "x.txt"), p(&dir, "y.txt"));
    ok(&[&knn[..], &["-o", s(&x)]].concat());
    ok(&[&knn[..], &["-o", s(&y)]].concat());
    assert_eq!(body(&x), body(&y));
}

#[test]
fn generate_sbm_average_degree_near_binomial_mean() {
    let dir = TempDir::new().unwrap();
    let g = p(&dir, "g.txt");
    let summary: Value =
        serde_json::from_str(&ok(&["generate", "sbm", "-k", "50", "--cluster-size", "200", "-o", s(&g)])).unwrap();
    // 199·0.5 within the cluster plus 9800·(0.001/50) ≈ 0.2 across.
    let expected = 199.0 * 0.5 + 9800.0 * 0.001 / 50.0;
    let d_avg = summary["d_avg"].as_f64().unwrap();
    assert!((d_avg - expected).abs() < 0.1 * expected, "d_avg {d_avg}");
}

#[test]
fn generate_knn_from_points_file() {
    let dir = TempDir::new().unwrap();
    let pts = p(&dir, "pts.txt");
    fs::write(&pts, "0 0\n0 1\n0 2.5\n").unwrap();
    let g = p(&dir, "g.txt");
    ok(&["generate", "knn", "--points", s(&pts), "--neighbours", "1", "-o", s(&g)]);
    assert_eq!(body(&g), ["%n 3", "0 1 1", "1 2 1"]);
    assert!(!p(&dir, "g.txt.labels").exists());
}

#[test]
fn invalid_parameters_exit_with_usage_code() {
    let dir = TempDir::new().unwrap();
    let g = p(&dir, "g.txt");
    assert_eq!(code(&["generate", "sbm", "-k", "2", "--cluster-size", "3", "-p", "1.5", "-o", s(&g)]), 2);
    assert_eq!(code(&["generate", "sbm", "--cluster-size", "3", "-o", s(&g)]), 2);
    assert_eq!(code(&["generate", "sbm", "-k", "2", "--cluster-size", "3", "-p", "0", "-q", "0", "-o", s(&g)]), 2);
    assert_eq!(code(&["generate", "knn", "-k", "1", "--cluster-size", "3", "--neighbours", "3", "-o", s(&g)]), 2);
    assert_eq!(code(&["frobnicate"]), 2);

    let (g, _) = sbm(&dir, "t.txt", &["-k", "2", "--cluster-size", "3", "-p", "1", "-q", "0"]);
    let out = p(&dir, "l.txt");
    assert_eq!(code(&["cluster", "--graph", s(&g), "-k", "7", "-o", s(&out)]), 2);
    assert_eq!(code(&["cluster", "--graph", s(&g), "-k", "2", "--eps", "1.5", "-o", s(&out)]), 2);
    assert_eq!(code(&["cluster", "--graph", s(&g), "-k", "2", "--repeat", "0", "-o", s(&out)]), 2);
    assert_eq!(code(&["cluster", "--graph", s(&p(&dir, "missing.txt")), "-k", "2", "-o", s(&out)]), 2);
    assert_eq!(code(&["coreset", "--graph", s(&g), "-k", "2", "--size-override", "0", "-o", s(&out)]), 2);
    assert_eq!(code(&["eval", "--graph", s(&g), "--labels", s(&p(&dir, "t.txt"))]), 2);

    let bad = p(&dir, "bad.txt");
    fs::write(&bad, "0 1\n1 x\n").unwrap();
    let res = csc(&["eval", "--graph", s(&bad), "--labels", s(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("bad.txt:2:"));
}

#[test]
fn jobs_env_fallback_is_validated() {
    let dir = TempDir::new().unwrap();
    let (g, _) = sbm(&dir, "g.txt", &["-k", "2", "--cluster-size", "3", "-p", "1", "-q", "0"]);
    let out = p(&dir, "l.txt");
    let run = |jobs: &str| {
        Command::new(env!("CARGO_BIN_EXE_csc"))
            .args(["cluster", "--graph", s(&g), "-k", "2", "-o", s(&out), "--repeat", "2"])
            .env("CSC_JOBS", jobs)
            .output()
            .unwrap()
            .status
            .code()
    };
    assert_eq!(run("2"), Some(0));
    assert_eq!(run("0"), Some(2));
    assert_eq!(run("many"), Some(2));
}

#[test]
fn cluster_disjoint_triangles() {
    let dir = TempDir::new().unwrap();
    let (g, truth) = sbm(&dir, "g.txt", &["-k", "2", "--cluster-size", "3", "-p", "1", "-q", "0"]);
    for algo in ["csc", "csc-fast", "ckkm"] {
        let (out, report) = (p(&dir, "l.txt"), p(&dir, "r.json"));
        ok(&[
            "cluster", "--graph", s(&g), "-k", "2", "--algo", algo, "--truth", s(&truth), "-o", s(&out), "--report",
            s(&report),
        ]);
        let r = json(&report);
        let run = &r["runs"][0];
        assert_eq!(run["conductance_full"], 0.0, "{algo}");
        // Trace form: tr(D⁻¹A) − k = 0 − 2.
        assert!((run["ncut_full"].as_f64().unwrap() + 2.0).abs() < 1e-12, "{algo}");
        assert_eq!(run["ari"], 1.0, "{algo}");
        assert_eq!(r["config"]["algo"], algo);
        assert_eq!(r["config"]["k"], 2);
        assert_eq!(r["config"]["seed"], 0);
        assert_eq!(run["report"]["seed"], 0);
        let labels = body(&out);
        assert_eq!(labels.len(), 6);
        assert_eq!(labels[0], labels[2]);
        assert_ne!(labels[0], labels[3]);
    }
}

#[test]
fn report_ncut_matches_eval() {
    let dir = TempDir::new().unwrap();
    let (g, truth) = sbm(&dir, "g.txt", &["-k", "4", "--cluster-size", "60", "-p", "0.2", "-q", "0.02", "--seed", "9"]);
    for algo in ["csc", "csc-fast", "ckkm"] {
        let (out, report) = (p(&dir, &format!("{algo}.txt")), p(&dir, &format!("{algo}.json")));
        ok(&[
            "cluster", "--graph", s(&g), "-k", "4", "--algo", algo, "--coreset-frac", "0.3", "--seed", "3", "--truth",
            s(&truth), "-o", s(&out), "--report", s(&report),
        ]);
        let run = json(&report)["runs"][0].clone();
        let metrics = p(&dir, &format!("{algo}.eval.json"));
        ok(&["eval", "--graph", s(&g), "--labels", s(&out), "--truth", s(&truth), "-o", s(&metrics)]);
        let m = json(&metrics)["metrics"].clone();
        let gap = (m["ncut_trace_objective"].as_f64().unwrap() - run["ncut_full"].as_f64().unwrap()).abs();
        assert!(gap < 1e-9, "{algo}: {gap}");
        let gap = (m["ncut_average"].as_f64().unwrap() - run["conductance_full"].as_f64().unwrap()).abs();
        assert!(gap < 1e-9, "{algo}: {gap}");
        let gap = (m["kkmeans_cost"].as_f64().unwrap() - m["ncut_trace_objective"].as_f64().unwrap()).abs();
        assert!(gap < 1e-9, "{algo}: {gap}");
        assert_eq!(m["ari"], run["ari"]);
    }
}

#[test]
fn repeats_are_independent_of_job_count() {
    let dir = TempDir::new().unwrap();
    let (g, truth) = sbm(&dir, "g.txt", &["-k", "3", "--cluster-size", "50", "-p", "0.2", "-q", "0.02", "--seed", "4"]);
    let mut labels = Vec::new();
    for jobs in ["1", "3"] {
        let (out, report) = (p(&dir, &format!("l{jobs}.txt")), p(&dir, &format!("r{jobs}.json")));
        ok(&[
            "cluster", "--graph", s(&g), "-k", "3", "--algo", "csc-fast", "--coreset-frac", "0.4", "--seed", "10",
            "--repeat", "4", "--jobs", jobs, "--truth", s(&truth), "-o", s(&out), "--report", s(&report),
        ]);
        let r = json(&report);
        assert_eq!(r["summary"]["runs"], 4);
        let runs = r["runs"].as_array().unwrap();
        for (i, run) in runs.iter().enumerate() {
            assert_eq!(run["seed"], 10 + i as u64);
        }
        labels.push((0..4).map(|i| body(&p(&dir, &format!("l{jobs}.txt.{i}")))).collect::<Vec<_>>());
    }
    assert_eq!(labels[0], labels[1]);
    assert!(labels[0].windows(2).any(|w| w[0] != w[1]) || labels[0][0].len() == 150);
}

#[test]
fn coreset_identical_seeds_identical_files() {
    let dir = TempDir::new().unwrap();
    let (g, _) = sbm(&dir, "g.txt", &["-k", "3", "--cluster-size", "50", "-p", "0.2", "-q", "0.02", "--seed", "1"]);
    let mut files = Vec::new();
    for sampler in ["fast", "fast", "naive"] {
        let (out, report) = (p(&dir, &format!("{sampler}.txt")), p(&dir, &format!("{sampler}.json")));
        ok(&[
            "coreset", "--graph", s(&g), "-k", "3", "--size-override", "40", "--seed", "8", "--sampler", sampler, "-o",
            s(&out), "--report", s(&report),
        ]);
        let t = json(&report);
        assert_eq!(t["config"]["sampler"], sampler);
        assert_eq!(t["config"]["size_override"], 40);
        assert_eq!(t["stages"].as_array().unwrap().len(), 1);
        assert!(t["neighbour_checks"].as_u64().unwrap() > 0);
        for key in ["load_ms", "kernel_ms", "seeding_ms", "sampling_ms", "coreset_ms"] {
            assert!(t[key].as_f64().unwrap() >= 0.0, "{key}");
        }
        assert_eq!(t["coreset_size"].as_u64().unwrap() as usize, body(&out).len());
        files.push(fs::read_to_string(&out).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn coreset_cost_zero_gives_identity() {
    let dir = TempDir::new().unwrap();
    let g = p(&dir, "tri.txt");
    fs::write(&g, "0 1\n1 2\n0 2\n").unwrap();
    let out = p(&dir, "c.txt");
    ok(&["coreset", "--graph", s(&g), "-k", "3", "--size-override", "3", "-o", s(&out)]);
    assert_eq!(body(&out), ["0 2", "1 2", "2 2"]);
}

#[test]
fn saved_coreset_reproduces_direct_run() {
    let dir = TempDir::new().unwrap();
    let (g, _) = sbm(&dir, "g.txt", &["-k", "3", "--cluster-size", "40", "-p", "0.3", "-q", "0.02", "--seed", "2"]);
    let c = p(&dir, "c.txt");
    let common = ["--graph", s(&g), "-k", "3", "--coreset-frac", "0.5", "--seed", "6"];
    ok(&[&["coreset"][..], &common, &["-o", s(&c)]].concat());
    let (a, b) = (p(&dir, "a.txt"), p(&dir, "b.txt"));
    ok(&[&["cluster"][..], &common, &["-o", s(&a), "--report", s(&p(&dir, "a.json"))]].concat());
    ok(&[&["cluster"][..], &common, &["--coreset", s(&c), "-o", s(&b), "--report", s(&p(&dir, "b.json"))]].concat());
    assert_eq!(body(&a), body(&b));
}

#[test]
fn compute_failure_exits_one_with_stage() {
    let dir = TempDir::new().unwrap();
    let g = p(&dir, "path.txt");
    fs::write(&g, "0 1\n1 2\n2 3\n").unwrap();
    let c = p(&dir, "c.txt");
    // Vertices 0 and 3 share no edge, so with no shift they carry no mass in the coreset graph.
    fs::write(&c, "0 1\n3 1\n").unwrap();
    let res = csc(&[
        "cluster", "--graph", s(&g), "-k", "2", "--coreset", s(&c), "--graph-sigma", "0", "-o",
        s(&p(&dir, "l.txt")),
    ]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("coreset-graph stage failed"), "{err}");
}

#[test]
fn fast_sampler_beats_naive_at_large_k() {
    let dir = TempDir::new().unwrap();
    let (g, _) = sbm(&dir, "g.txt", &["-k", "20", "--cluster-size", "1000", "-p", "0.01", "-q", "0.0001", "--seed", "3"]);
    let mut secs = Vec::new();
    for sampler in ["fast", "naive"] {
        let report = p(&dir, &format!("{sampler}.json"));
        ok(&[
            "coreset", "--graph", s(&g), "-k", "1000", "--size-override", "1000", "--sampler", sampler, "-o",
            s(&p(&dir, "c.txt")), "--report", s(&report),
        ]);
        secs.push(json(&report)["seeding_ms"].as_f64().unwrap());
    }
    assert!(secs[0] <= secs[1] / 5.0, "fast {} ms, naive {} ms", secs[0], secs[1]);
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn bench_empty_spec_is_header_only() {
    let dir = TempDir::new().unwrap();
    let spec = p(&dir, "spec.json");
    fs::write(&spec, "[]\n").unwrap();
    let rows = csv_rows(&ok(&["bench", "--spec", s(&spec)]));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "entry");
}

const SWEEP: &str = r#"[
  {
    "name": "seeding",
    "task": "coreset",
    "graph": {"sbm": {"k": 5, "cluster_size": 250, "p": 0.04, "q": 0.001, "seed": 3}},
    "k": [10, 100, 1000],
    "sampler": ["fast", "naive"],
    "size_override": 300,
    "repeat": 2,
    "seed": 7
  },
  {
    "task": "cluster",
    "graph": {"sbm": {"k": 3, "cluster_size": 40, "p": 0.3, "q": 0.02}},
    "k": 3,
    "algo": ["csc-fast", "ckkm"],
    "coreset_frac": 0.5,
    "repeat": 2
  }
]"#;

#[test]
fn bench_sweep_rows_and_determinism() {
    let dir = TempDir::new().unwrap();
    let spec = p(&dir, "spec.json");
    fs::write(&spec, SWEEP).unwrap();
    let first = csv_rows(&ok(&["bench", "--spec", s(&spec), "--jobs", "4"]));
    let second = csv_rows(&ok(&["bench", "--spec", s(&spec), "--jobs", "1"]));
    let header = &first[0];
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let rows = &first[1..];
    let aggregates: Vec<_> = rows.iter().filter(|r| r[col("kind")] == "aggregate").collect();
    let seeding: Vec<_> = aggregates.iter().filter(|r| r[col("entry")] == "0").collect();
    assert_eq!(seeding.len(), 6);
    assert_eq!(aggregates.len(), 8);
    assert_eq!(rows.len(), 8 * 3);
    for r in &seeding {
        assert!(r[col("neighbour_checks")].parse::<f64>().unwrap() > 0.0);
        assert!(r[col("ncut")].is_empty());
    }
    for r in aggregates.iter().filter(|r| r[col("entry")] == "1") {
        let ari: f64 = r[col("ari")].parse().unwrap();
        assert!((-1.0..=1.0).contains(&ari));
        assert!(!r[col("ari_std")].is_empty());
    }
    let config: Value = serde_json::from_str(&rows[0][col("config")]).unwrap();
    assert_eq!(config["command"], "bench");
    assert_eq!(config["seed"], 7);
    assert_eq!(config["k"], 10);

    let timing = ["seconds", "seconds_std", "seeding_ms", "seeding_ms_std", "sampling_ms", "sampling_ms_std"];
    let timing: Vec<usize> = timing.iter().map(|t| col(t)).collect();
    assert_eq!(first.len(), second.len());
    for (a, b) in first.iter().zip(&second) {
        for (j, (x, y)) in a.iter().zip(b).enumerate() {
            if !timing.contains(&j) {
                assert_eq!(x, y, "column {}", header[j]);
            }
        }
    }
}

#[test]
fn bench_malformed_spec_reports_line() {
    let dir = TempDir::new().unwrap();
    let spec = p(&dir, "spec.json");
    fs::write(&spec, "[\n  {\"task\": \"coreset\",\n   \"graph\": {\"path\": \"g.txt\"},\n   \"k\": \"ten\"}\n]").unwrap();
    let res = csc(&["bench", "--spec", s(&spec)]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("spec.json:4:"), "{err}");

    fs::write(&spec, "[\n  {\"task\": \"coreset\", \"graph\": {\"path\": \"g.txt\"}, \"k\": 2},\n  {\"task\": \"cluster\",\n   \"graph\": {\"path\": \"g.txt\"}, \"k\": 2, \"eps\": 2}\n]").unwrap();
    let err = String::from_utf8_lossy(&csc(&["bench", "--spec", s(&spec)]).stderr).to_string();
    assert!(err.contains("spec.json:3: entry 1: eps must lie in (0, 1)"), "{err}");
}

#[test]
fn text_headers_carry_the_run_config() {
    let dir = TempDir::new().unwrap();
    let (g, _) = sbm(&dir, "g.txt", &["-k", "2", "--cluster-size", "10", "-p", "0.6", "-q", "0.05", "--seed", "4"]);
    let header = |path: &Path| -> Value {
        let text = fs::read_to_string(path).unwrap();
        serde_json::from_str(text.lines().next().unwrap().strip_prefix("# csc ").unwrap()).unwrap()
    };
    assert_eq!(header(&g)["generator"]["q"], 0.05);
    assert_eq!(header(&g)["seed"], 4);

    let (out, report) = (p(&dir, "l.txt"), p(&dir, "r.json"));
    ok(&["cluster", "--graph", s(&g), "-k", "2", "--seed", "12", "-o", s(&out), "--report", s(&report)]);
    assert_eq!(header(&out), json(&report)["config"]);
    assert_eq!(header(&out)["seed"], 12);
}

#[test]
fn sbm_fifty_clusters_csc_fast_beats_ckkm() {
    let dir = TempDir::new().unwrap();
    let (g, truth) = sbm(&dir, "g.txt", &["-k", "50", "--cluster-size", "200", "--seed", "21"]);
    let mut medians = Vec::new();
    for algo in ["csc-fast", "ckkm"] {
        let report = p(&dir, &format!("{algo}.json"));
        ok(&[
            "cluster", "--graph", s(&g), "-k", "50", "--algo", algo, "--coreset-frac", "0.05", "--repeat", "10", "--truth",
            s(&truth), "-o", s(&p(&dir, &format!("{algo}.txt"))), "--report", s(&report),
        ]);
        medians.push(json(&report)["summary"]["ari_median"].as_f64().unwrap());
    }
    assert!(medians[0] >= medians[1], "csc-fast {} vs ckkm {}", medians[0], medians[1]);
}
