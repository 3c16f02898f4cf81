use std::fs;
use std::path::Path;

use fugnn_cli::commands::{self, DatasetMetadata, EDGES_FILE, NODES_FILE, SPLITS_FILE};
use fugnn_cli::config::RunConfig;
use fugnn_cli::main_with_args;
use fugnn_core::eigen::SpectralBasis;
use fugnn_core::experiment::EigenMethod;
use fugnn_core::graph::load_graph;
use fugnn_core::lemma::LemmaReport;

fn small_config(dir: &Path) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.output_dir = Some(dir.to_path_buf());
    cfg.data.sbm.n = 120;
    cfg.data.sbm.p_in = 0.12;
    cfg.data.sbm.p_out = 0.01;
    cfg.eig.k = 4;
    cfg.train.epochs = 25;
    cfg.train.seeds = vec![0, 1];
    cfg
}

fn read(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap()
}

#[test]
fn gen_is_reproducible_and_metadata_matches_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let first = commands::gen(&cfg).unwrap();
    let files: Vec<Vec<u8>> = [EDGES_FILE, NODES_FILE, SPLITS_FILE]
        .iter()
        .map(|f| read(&first.run_dir.join(f)))
        .collect();
    let second = commands::gen(&cfg).unwrap();
    assert_eq!(first.run_dir, second.run_dir);
    for (f, bytes) in [EDGES_FILE, NODES_FILE, SPLITS_FILE].iter().zip(&files) {
        assert_eq!(&read(&second.run_dir.join(f)), bytes, "{f} differs");
    }

    let meta: DatasetMetadata =
        serde_json::from_slice(&read(&first.run_dir.join("metadata.json"))).unwrap();
    let g = load_graph(
        &first.run_dir.join(EDGES_FILE),
        &first.run_dir.join(NODES_FILE),
        "sensitive",
        "label",
    )
    .unwrap();
    assert_eq!(meta.nodes, g.n());
    assert_eq!(meta.edges, g.num_edges());
    assert_eq!(meta.sensitive, g.sensitive_name());
}

#[test]
fn zero_cross_probability_gives_two_components() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config(tmp.path());
    cfg.data.sbm.p_in = 0.3;
    cfg.data.sbm.p_out = 0.0;
    let out = commands::gen(&cfg).unwrap();
    let meta: DatasetMetadata = serde_json::from_slice(&read(&out.run_dir.join("metadata.json"))).unwrap();
    assert_eq!(meta.components, 2);
}

#[test]
fn both_eigensolvers_agree_on_the_top_k() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config(tmp.path());
    cfg.data.sbm.n = 400;
    cfg.data.sbm.p_in = 0.05;
    cfg.data.sbm.p_out = 0.005;
    let fes = commands::eig(&cfg).unwrap();
    cfg.eig.method = EigenMethod::We;
    let we = commands::eig(&cfg).unwrap();
    assert_ne!(fes.run_dir, we.run_dir);
    let load = |dir: &Path| SpectralBasis::read_binary(fs::File::open(dir.join("basis.fsb")).unwrap()).unwrap();
    let (a, b) = (load(&fes.run_dir), load(&we.run_dir));
    assert_eq!((a.k(), b.k()), (4, 4));
    for (x, y) in a.eigenvalues().iter().zip(b.eigenvalues()) {
        assert!((x - y).abs() <= 1e-8 * y.abs().max(1.0), "{x} vs {y}");
    }
    let timing: serde_json::Value = serde_json::from_slice(&read(&we.run_dir.join("timing.json"))).unwrap();
    assert_eq!(timing["method"], "WE");
    assert!(timing["seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn whole_decomposition_refused_above_the_dense_limit() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let code = main_with_args(["fugnn", "eig", "--n", "50000", "--method", "WE", "--output-dir", out]);
    assert_eq!(code, 1);
}

#[test]
fn analyze_defaults_pass_and_reports_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = commands::analyze(&cfg).unwrap();
    assert!(out.failure.is_none(), "{:?}", out.failure);
    for id in 1..=3 {
        let text = fs::read_to_string(out.run_dir.join(format!("lemma{id}.json"))).unwrap();
        let r: LemmaReport = serde_json::from_str(&text).unwrap();
        assert!(r.passed);
        assert_eq!(serde_json::to_string_pretty(&r).unwrap(), text);
    }
}

#[test]
fn analyze_failure_sets_exit_code_three() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("weak.toml");
    fs::write(
        &config,
        format!(
            "output_dir = {:?}\n[analyze]\ngap_min = 1.01\nl_max = 3\n",
            tmp.path().join("runs")
        ),
    )
    .unwrap();
    let code = main_with_args(["fugnn", "analyze", "-c", config.to_str().unwrap()]);
    assert_eq!(code, 3);
}

#[test]
fn train_reruns_from_stored_config_are_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = commands::train(&cfg).unwrap();
    let report = read(&out.run_dir.join("report.json"));
    let history = read(&out.run_dir.join("history-fugnn-seed1.jsonl"));
    let params = read(&out.run_dir.join("params-fugnn-seed0.fmp"));

    let stored = RunConfig::load(&out.run_dir.join("config.toml")).unwrap();
    assert_eq!(stored, cfg);
    let again = commands::train(&stored).unwrap();
    assert_eq!(again.run_dir, out.run_dir);
    assert_eq!(read(&again.run_dir.join("report.json")), report);
    assert_eq!(read(&again.run_dir.join("history-fugnn-seed1.jsonl")), history);
    assert_eq!(read(&again.run_dir.join("params-fugnn-seed0.fmp")), params);

    let v: serde_json::Value = serde_json::from_slice(&report).unwrap();
    assert_eq!(v["fugnn"]["runs"].as_array().unwrap().len(), 2);
    assert_eq!(v["fugnn"]["aggregate"]["accuracy"]["count"], 2);
    assert!(v["baseline"]["aggregate"].is_object());
}

/// Two blocks of 20 nodes; the test split holds no positive label in group 1.
fn write_degenerate_dataset(dir: &Path) {
    let mut edges = String::new();
    for i in 0..40 {
        edges.push_str(&format!("{} {}\n", i, (i + 1) % 40));
        edges.push_str(&format!("{} {}\n", i, (i + 7) % 40));
    }
    fs::write(dir.join("edges.txt"), edges).unwrap();
    let mut nodes = String::from("id,sensitive,x1,label\n");
    for i in 0..40 {
        let s = i / 20;
        let label = i % 2;
        nodes.push_str(&format!("{i},{s},{:?},{label}\n", (i as f64) * 0.1 - 2.0));
    }
    fs::write(dir.join("nodes.csv"), nodes).unwrap();
    // test: nodes 0, 1, 2, 3 from group 0 and only even (negative) nodes from group 1
    let train: Vec<usize> = (4..20).chain([21, 23, 25, 27, 29, 31, 33]).collect();
    let splits = serde_json::json!({
        "train": train,
        "val": [35, 37, 39, 34, 36, 38],
        "test": [0, 1, 2, 3, 20, 22, 24, 26],
    });
    fs::write(dir.join("splits.json"), splits.to_string()).unwrap();
}

#[test]
fn undefined_opportunity_gap_is_counted() {
    let tmp = tempfile::tempdir().unwrap();
    write_degenerate_dataset(tmp.path());
    let mut cfg = small_config(&tmp.path().join("runs"));
    cfg.data.edges = Some(tmp.path().join("edges.txt"));
    cfg.data.nodes = Some(tmp.path().join("nodes.csv"));
    cfg.data.splits = Some(tmp.path().join("splits.json"));
    cfg.eig.k = 3;
    cfg.train.baseline = false;
    let out = commands::train(&cfg).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&read(&out.run_dir.join("report.json"))).unwrap();
    let eo = &v["fugnn"]["aggregate"]["delta_eo"];
    assert_eq!(eo["count"], 0);
    assert_eq!(eo["skipped"], 2);
    assert!(out.text.contains("undef"));
}

#[test]
fn bench_marks_oversized_k_and_full_k_matches_untruncated_training() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config(tmp.path());
    cfg.data.sbm.n = 60;
    cfg.data.sbm.p_in = 0.2;
    cfg.train.seeds = vec![0];
    cfg.train.epochs = 10;
    cfg.bench.ks = vec![2, 80];
    let out = commands::bench(&cfg).unwrap();
    let rows: serde_json::Value = serde_json::from_slice(&read(&out.run_dir.join("sweep.json"))).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1]["k"], 80);
    assert!(rows[1]["aggregate"].is_null());
    assert_eq!(rows[2]["k"], 60);
    assert!(out.text.contains("skipped"));
    let timing: serde_json::Value = serde_json::from_slice(&read(&out.run_dir.join("timing.json"))).unwrap();
    assert_eq!(timing.as_array().unwrap().len(), 2);

    cfg.eig.k = 60;
    cfg.train.baseline = false;
    let full = commands::train(&cfg).unwrap();
    let report: serde_json::Value = serde_json::from_slice(&read(&full.run_dir.join("report.json"))).unwrap();
    assert_eq!(report["fugnn"]["aggregate"], rows[2]["aggregate"]);
}

#[test]
fn exit_codes_distinguish_usage_and_numerical_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert_eq!(main_with_args(["fugnn", "train", "--no-such-flag"]), 1);
    assert_eq!(main_with_args(["fugnn", "eig", "-k", "0", "--output-dir", out]), 1);
    let code = main_with_args([
        "fugnn", "train", "--n", "60", "-k", "2", "--epochs", "5", "--seeds", "0", "--lr", "1e300",
        "--output-dir", out,
    ]);
    assert_eq!(code, 2);
}
