//! The five subcommands. Each writes its artifacts into the run directory and
//! returns the text it wants printed.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use fugnn_core::eigen::SpectralBasis;
use fugnn_core::experiment::{
    compute_basis, k_sweep, run_seeds, timed_basis, EigenMethod, MultiSeedReport, SweepRow, Timing,
};
use fugnn_core::graph::{
    generate_sbm, load_graph, make_splits, normalize, read_masks, write_edge_list, write_masks,
    write_node_table, Graph, NormalizedOperator,
};
use fugnn_core::lemma::{verify_lemma1, verify_lemma2, verify_lemma3, LemmaReport};
use fugnn_core::model::{Architecture, ModelParams};

use crate::config::RunConfig;
use crate::error::{io_err, CliError};
use crate::table::{pct, pct_opt, pct_summary, Table};

#[derive(Debug)]
pub struct CommandOutput {
    pub run_dir: PathBuf,
    pub text: String,
    /// Set when a verification verdict failed; artifacts are still written.
    pub failure: Option<String>,
}

pub const EDGES_FILE: &str = "edges.txt";
pub const NODES_FILE: &str = "nodes.csv";
pub const SPLITS_FILE: &str = "splits.json";

fn prepare(cfg: &RunConfig, command: &str) -> Result<PathBuf, CliError> {
    let dir = cfg.run_dir(command);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    write_text(&dir.join("config.toml"), &cfg.to_toml())?;
    Ok(dir)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    write_text(path, &text)
}

/// The configured dataset: files on disk, or the synthetic generator.
pub fn load_dataset(cfg: &RunConfig) -> Result<Graph, CliError> {
    let d = &cfg.data;
    match (&d.edges, &d.nodes) {
        (Some(edges), Some(nodes)) => {
            let mut g = load_graph(edges, nodes, &d.sensitive, &d.label)?;
            if let Some(path) = &d.splits {
                let splits = read_masks(path, g.n())?;
                g.set_splits(splits)?;
            }
            Ok(g)
        }
        _ => Ok(generate_sbm(&d.sbm)?),
    }
}

fn operator(cfg: &RunConfig, g: &Graph) -> NormalizedOperator {
    normalize(g, cfg.eig.operator)
}

fn basis_for(cfg: &RunConfig, op: &NormalizedOperator) -> Result<SpectralBasis, CliError> {
    let solver = cfg.eig.solver();
    Ok(match cfg.eig.method {
        EigenMethod::Fes => compute_basis(op, cfg.eig.k, &solver)?,
        EigenMethod::We => {
            if cfg.eig.k > op.n() {
                return Err(CliError::Config(format!("eig.k = {} exceeds n = {}", cfg.eig.k, op.n())));
            }
            timed_basis(op, EigenMethod::We, cfg.eig.k, &solver)?.0.truncated(cfg.eig.k)
        }
    })
}

/// Dataset statistics written next to generated data.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct DatasetMetadata {
    pub name: String,
    pub nodes: usize,
    pub edges: usize,
    pub features: usize,
    pub sensitive: String,
    pub label: String,
    pub sensitive_group_sizes: [usize; 2],
    pub positive_labels: usize,
    pub components: usize,
}

impl DatasetMetadata {
    pub fn of(name: &str, g: &Graph, label: &str) -> Self {
        let s = g.sensitive();
        let ones = s.iter().filter(|&&v| v == 1).count();
        let mut comps = g.components();
        comps.sort_unstable();
        comps.dedup();
        Self {
            name: name.into(),
            nodes: g.n(),
            edges: g.num_edges(),
            features: g.features().ncols(),
            sensitive: g.sensitive_name().into(),
            label: label.into(),
            sensitive_group_sizes: [g.n() - ones, ones],
            positive_labels: g.labels().iter().filter(|&&y| y == 1).count(),
            components: comps.len(),
        }
    }

    fn table(&self) -> Table {
        let mut t = Table::new(["dataset", "nodes", "edges", "features", "sensitive", "label"]);
        t.row([
            self.name.clone(),
            self.nodes.to_string(),
            self.edges.to_string(),
            self.features.to_string(),
            self.sensitive.clone(),
            self.label.clone(),
        ]);
        t
    }
}

pub fn gen(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    if cfg.data.edges.is_some() {
        return Err(CliError::Usage(
            "gen writes a synthetic graph; remove data.edges / data.nodes".into(),
        ));
    }
    let g = generate_sbm(&cfg.data.sbm)?;
    let splits = make_splits(g.labels(), cfg.data.sbm.seed)?;
    let dir = prepare(cfg, "gen")?;
    write_edge_list(&g, &dir.join(EDGES_FILE))?;
    write_node_table(&g, &dir.join(NODES_FILE))?;
    write_masks(&splits, &dir.join(SPLITS_FILE))?;
    let meta = DatasetMetadata::of("sbm", &g, "label");
    write_json(&dir.join("metadata.json"), &meta)?;
    let text = format!(
        "{}\n{} components; sensitive groups {} / {}; {} positive labels\n",
        meta.table().render(),
        meta.components,
        meta.sensitive_group_sizes[0],
        meta.sensitive_group_sizes[1],
        meta.positive_labels
    );
    Ok(CommandOutput {
        run_dir: dir,
        text,
        failure: None,
    })
}

pub fn eig(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let g = load_dataset(cfg)?;
    let op = operator(cfg, &g);
    let (basis, timing) = timed_basis(&op, cfg.eig.method, cfg.eig.k, &cfg.eig.solver())?;
    if cfg.eig.k > op.n() {
        return Err(CliError::Config(format!("eig.k = {} exceeds n = {}", cfg.eig.k, op.n())));
    }
    let basis = basis.truncated(cfg.eig.k);
    let dir = prepare(cfg, "eig")?;
    let path = dir.join("basis.fsb");
    let file = fs::File::create(&path).map_err(io_err(&path))?;
    basis.write_binary(std::io::BufWriter::new(file))?;
    write_json(&dir.join("timing.json"), &timing)?;

    let mut t = Table::new(["index", "eigenvalue", "residual"]);
    for (i, (v, r)) in basis.eigenvalues().iter().zip(basis.residuals()).enumerate() {
        t.row([(i + 1).to_string(), format!("{v:.12}"), format!("{r:.2e}")]);
    }
    let text = format!(
        "{}\n{} on n = {} ({} operator): {:.3}s\n",
        t.render(),
        timing.method,
        timing.n,
        op.mode(),
        timing.seconds
    );
    Ok(CommandOutput {
        run_dir: dir,
        text,
        failure: None,
    })
}

const SHOWN_LS: [usize; 10] = [0, 1, 2, 5, 10, 20, 50, 100, 200, 500];

fn lemma_table(r: &LemmaReport) -> Table {
    let mut t = Table::new(["l", "measured", "predicted"]);
    let last = r.measured.last().map(|m| m.0);
    // the decay report predicts a slope; show the line through its first point
    let line = |l: usize| {
        let (l0, v0) = r.measured[0];
        v0 + r.predicted * (l as f64 - l0 as f64)
    };
    for &(l, v) in &r.measured {
        if SHOWN_LS.contains(&l) || Some(l) == last {
            let predicted = if r.lemma_id == 3 { line(l) } else { r.predicted };
            t.row([l.to_string(), format!("{v:.10}"), format!("{predicted:.10}")]);
        }
    }
    t
}

pub fn analyze(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let a = &cfg.analyze;
    let reports = vec![
        verify_lemma1(a.n, a.gap_min, a.l_max, a.seed)?,
        verify_lemma2(a.n, a.j, a.l_max, a.seed)?,
        verify_lemma3(a.n, (a.decay_l_min, a.decay_l_max), a.seed)?,
    ];
    let dir = prepare(cfg, "analyze")?;
    let mut text = String::new();
    let mut failed = Vec::new();
    for r in &reports {
        write_json(&dir.join(format!("lemma{}.json", r.lemma_id)), r)?;
        let verdict = if r.passed { "pass" } else { "FAIL" };
        let what = match r.lemma_id {
            1 => "similarity limit",
            2 => "repeated-eigenvalue bound",
            _ => "non-principal decay slope",
        };
        text.push_str(&format!(
            "lemma {} ({what}): {verdict}, gap {:.3e}, tolerance {:.0e}, spectral gap {:.4}\n",
            r.lemma_id, r.gap, r.tolerance, r.parameters.spectral_gap
        ));
        text.push_str(&lemma_table(r).render());
        text.push('\n');
        if !r.passed {
            failed.push(r.lemma_id.to_string());
        }
    }
    let failure = (!failed.is_empty()).then(|| format!("lemma checks failed: {}", failed.join(", ")));
    Ok(CommandOutput {
        run_dir: dir,
        text,
        failure,
    })
}

#[derive(Debug, Serialize)]
struct TrainReport<'a> {
    dataset: DatasetMetadata,
    k: usize,
    fugnn: &'a MultiSeedReport,
    baseline: Option<&'a MultiSeedReport>,
}

fn save_runs(dir: &Path, tag: &str, report: &MultiSeedReport, params: &[ModelParams]) -> Result<(), CliError> {
    for (run, p) in report.runs.iter().zip(params) {
        let history = dir.join(format!("history-{tag}-seed{}.jsonl", run.seed));
        write_text(&history, &run.history.to_json_lines())?;
        let path = dir.join(format!("params-{tag}-seed{}.fmp", run.seed));
        fs::write(&path, p.to_binary()).map_err(io_err(&path))?;
    }
    Ok(())
}

pub fn train(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let g = load_dataset(cfg)?;
    let op = operator(cfg, &g);
    let basis = basis_for(cfg, &op)?;
    let trainer = cfg.train.trainer();
    let seeds = &cfg.train.seeds;
    let (fugnn, fugnn_params) = run_seeds(&g, &basis, &op, Architecture::Fugnn, &cfg.model, &trainer, seeds)?;
    let baseline = if cfg.train.baseline {
        let arch = Architecture::Baseline {
            steps: cfg.train.baseline_steps,
        };
        Some(run_seeds(&g, &basis, &op, arch, &cfg.model, &trainer, seeds)?)
    } else {
        None
    };

    let dir = prepare(cfg, "train")?;
    save_runs(&dir, "fugnn", &fugnn, &fugnn_params)?;
    if let Some((b, p)) = &baseline {
        save_runs(&dir, "baseline", b, p)?;
    }
    let report = TrainReport {
        dataset: DatasetMetadata::of(if cfg.data.edges.is_some() { "file" } else { "sbm" }, &g, &cfg.data.label),
        k: basis.k(),
        fugnn: &fugnn,
        baseline: baseline.as_ref().map(|b| &b.0),
    };
    write_json(&dir.join("report.json"), &report)?;

    let mut summary = Table::new(["model", "acc (%)", "ΔSP (%)", "ΔEO (%)"]);
    let mut per_seed = Table::new(["model", "seed", "best epoch", "acc (%)", "ΔSP (%)", "ΔEO (%)"]);
    let mut add = |name: &str, r: &MultiSeedReport| {
        summary.row([
            name.to_string(),
            pct_summary(&r.aggregate.accuracy),
            pct_summary(&r.aggregate.delta_sp),
            pct_summary(&r.aggregate.delta_eo),
        ]);
        for run in &r.runs {
            per_seed.row([
                name.to_string(),
                run.seed.to_string(),
                run.history.best_epoch.to_string(),
                pct(run.test.accuracy),
                pct_opt(run.test.delta_sp),
                pct_opt(run.test.delta_eo),
            ]);
        }
    };
    add(&format!("fugnn (K={})", basis.k()), &fugnn);
    if let Some((b, _)) = &baseline {
        add("baseline", b);
    }
    let text = format!("{}\n{}", summary.render(), per_seed.render());
    Ok(CommandOutput {
        run_dir: dir,
        text,
        failure: None,
    })
}

/// One timing row; `seconds` is absent when the method refused the size.
#[derive(Debug, Serialize)]
struct TimingRow {
    method: EigenMethod,
    n: usize,
    k: usize,
    seconds: Option<f64>,
    refused: Option<String>,
}

pub fn bench(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let g = load_dataset(cfg)?;
    let op = operator(cfg, &g);
    let n = g.n();
    let mut ks = cfg.bench.ks.clone();
    if cfg.bench.include_n && !ks.contains(&n) {
        ks.push(n);
    }
    let rows: Vec<SweepRow> = k_sweep(
        &g,
        &op,
        &ks,
        &cfg.model,
        &cfg.train.trainer(),
        &cfg.eig.solver(),
        &cfg.train.seeds,
    )?;

    let mut timings = Vec::new();
    if cfg.bench.runtime {
        for method in [EigenMethod::Fes, EigenMethod::We] {
            let row = match timed_basis(&op, method, cfg.eig.k, &cfg.eig.solver()) {
                Ok((_, Timing { seconds, .. })) => TimingRow {
                    method,
                    n,
                    k: cfg.eig.k,
                    seconds: Some(seconds),
                    refused: None,
                },
                Err(e @ fugnn_core::error::EigenError::DenseLimit { .. }) => TimingRow {
                    method,
                    n,
                    k: cfg.eig.k,
                    seconds: None,
                    refused: Some(e.to_string()),
                },
                Err(e) => return Err(e.into()),
            };
            timings.push(row);
        }
    }

    let dir = prepare(cfg, "bench")?;
    write_json(&dir.join("sweep.json"), &rows)?;
    if cfg.bench.runtime {
        write_json(&dir.join("timing.json"), &timings)?;
    }

    let mut t = Table::new(["K", "acc (%)", "ΔSP (%)", "ΔEO (%)"]);
    for r in &rows {
        let label = if r.k == n { format!("{} (n)", r.k) } else { r.k.to_string() };
        match &r.aggregate {
            Some(a) => t.row([
                label,
                pct_summary(&a.accuracy),
                pct_summary(&a.delta_sp),
                pct_summary(&a.delta_eo),
            ]),
            None => t.row([label, "skipped (K > n)".into(), String::new(), String::new()]),
        }
    }
    let mut text = t.render();
    if cfg.bench.runtime {
        let mut rt = Table::new(["method", "n", "K", "seconds"]);
        for r in &timings {
            let secs = match (r.seconds, &r.refused) {
                (Some(s), _) => format!("{s:.3}"),
                (None, _) => "refused".into(),
            };
            rt.row([r.method.to_string(), r.n.to_string(), r.k.to_string(), secs]);
        }
        text.push('\n');
        text.push_str(&rt.render());
    }
    Ok(CommandOutput {
        run_dir: dir,
        text,
        failure: None,
    })
}
