//! End-to-end runs: basis computation, per-seed training of the spectral
//! model and the propagation baseline, multi-seed aggregation, K sweeps and
//! eigensolver timing.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::eigen::{
    full_dense_eigendecomposition_with_limit, top_k_eigenpairs_with, LanczosOptions, SpectralBasis,
    DEFAULT_DENSE_LIMIT,
};
use crate::error::{EigenError, ModelError};
use crate::graph::{make_splits, normalize, Graph, NormalizedOperator, OperatorMode};
use crate::metrics::FairnessReport;
use crate::model::{Architecture, ModelConfig, ModelParams};
use crate::trainer::{evaluate, train, Problem, SplitName, TrainConfig, TrainHistory};

/// Eigensolver settings shared by every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub dense_limit: usize,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50_000,
            seed: 0,
            dense_limit: DEFAULT_DENSE_LIMIT,
        }
    }
}

/// Top-`k` basis of `op`. Lanczos serves `k ≤ n/4`; larger requests on
/// operators within the dense limit take the leading columns of the full
/// dense decomposition.
pub fn compute_basis(op: &NormalizedOperator, k: usize, cfg: &EigenConfig) -> Result<SpectralBasis, EigenError> {
    let n = op.n();
    let basis = if 4 * k > n && n <= cfg.dense_limit {
        full_dense_eigendecomposition_with_limit(&op.matrix().to_dense(), cfg.dense_limit)?.truncated(k)
    } else {
        let opts = LanczosOptions {
            tol: cfg.tol,
            max_iter: cfg.max_iter,
            seed: cfg.seed,
            subspace: None,
        };
        top_k_eigenpairs_with(op, k, &opts)?
    };
    Ok(basis.with_operator(op.mode()))
}

/// The outcome of one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub test: FairnessReport,
    pub history: TrainHistory,
}

/// Initializes with `seed`, trains, and reports on the test split, returning
/// the best parameters alongside. A graph that carries splits keeps them;
/// otherwise splits are drawn with `seed`.
pub fn run_seed(
    g: &Graph,
    basis: &SpectralBasis,
    op: &NormalizedOperator,
    arch: Architecture,
    model: &ModelConfig,
    train_cfg: &TrainConfig,
    seed: u64,
) -> Result<(SeedRun, ModelParams), ModelError> {
    let g = if g.splits().train.iter().any(|&t| t) {
        g.clone()
    } else {
        let splits = make_splits(g.labels(), seed).map_err(|e| ModelError::Invalid(e.to_string()))?;
        g.clone().with_splits(splits).map_err(|e| ModelError::Invalid(e.to_string()))?
    };
    let problem = Problem::new(&g, basis, model.d_e, Some(op))?;
    let p0 = ModelParams::init(g.features().ncols(), model, seed)?;
    let cfg = TrainConfig {
        seed,
        ..train_cfg.clone()
    };
    let (p, history) = train(&problem, p0, arch, &cfg)?;
    let test = evaluate(&problem, &p, arch, SplitName::Test)?;
    Ok((SeedRun { seed, test, history }, p))
}

/// Mean and sample standard deviation of the defined values; undefined
/// values are counted, not averaged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub count: usize,
    pub skipped: usize,
}

impl Summary {
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let mut xs = Vec::new();
        let mut skipped = 0;
        for v in values {
            match v {
                Some(x) => xs.push(x),
                None => skipped += 1,
            }
        }
        let count = xs.len();
        let mean = if count == 0 { f64::NAN } else { xs.iter().sum::<f64>() / count as f64 };
        let sd = if count < 2 {
            0.0
        } else {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        };
        Self {
            mean,
            sd,
            count,
            skipped,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub accuracy: Summary,
    pub delta_sp: Summary,
    pub delta_eo: Summary,
}

impl Aggregate {
    pub fn of(runs: &[SeedRun]) -> Self {
        Self {
            accuracy: Summary::of(runs.iter().map(|r| Some(r.test.accuracy))),
            delta_sp: Summary::of(runs.iter().map(|r| r.test.delta_sp)),
            delta_eo: Summary::of(runs.iter().map(|r| r.test.delta_eo)),
        }
    }
}

/// Per-seed runs plus their aggregate for one architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSeedReport {
    pub architecture: Architecture,
    pub k: usize,
    pub runs: Vec<SeedRun>,
    pub aggregate: Aggregate,
}

/// Runs every seed in order; the parameters come back in seed order.
pub fn run_seeds(
    g: &Graph,
    basis: &SpectralBasis,
    op: &NormalizedOperator,
    arch: Architecture,
    model: &ModelConfig,
    train_cfg: &TrainConfig,
    seeds: &[u64],
) -> Result<(MultiSeedReport, Vec<ModelParams>), ModelError> {
    let mut runs = Vec::with_capacity(seeds.len());
    let mut params = Vec::with_capacity(seeds.len());
    for &s in seeds {
        let (run, p) = run_seed(g, basis, op, arch, model, train_cfg, s)?;
        runs.push(run);
        params.push(p);
    }
    let report = MultiSeedReport {
        architecture: arch,
        k: basis.k(),
        aggregate: Aggregate::of(&runs),
        runs,
    };
    Ok((report, params))
}

/// One row of a K sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    /// `None` when `k` exceeds the node count.
    pub aggregate: Option<Aggregate>,
}

/// Trains the spectral model at every `k`, reusing one decomposition of the
/// largest feasible `k` and truncating it for the smaller ones.
pub fn k_sweep(
    g: &Graph,
    op: &NormalizedOperator,
    ks: &[usize],
    model: &ModelConfig,
    train_cfg: &TrainConfig,
    eig: &EigenConfig,
    seeds: &[u64],
) -> Result<Vec<SweepRow>, ModelError> {
    let n = g.n();
    let k_max = ks.iter().copied().filter(|&k| k >= 1 && k <= n).max();
    let full = match k_max {
        Some(k) => Some(compute_basis(op, k, eig)?),
        None => None,
    };
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let aggregate = match &full {
            Some(full) if k >= 1 && k <= n => {
                let basis = full.truncated(k);
                Some(run_seeds(g, &basis, op, Architecture::Fugnn, model, train_cfg, seeds)?.0.aggregate)
            }
            _ => None,
        };
        rows.push(SweepRow { k, aggregate });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EigenMethod {
    /// Truncated Lanczos.
    Fes,
    /// Whole dense eigendecomposition.
    We,
}

impl std::fmt::Display for EigenMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EigenMethod::Fes => "FES",
            EigenMethod::We => "WE",
        })
    }
}

impl std::str::FromStr for EigenMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "FES" => Ok(EigenMethod::Fes),
            "WE" => Ok(EigenMethod::We),
            _ => Err(format!("unknown eigensolver method `{s}` (expected FES or WE)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub method: EigenMethod,
    pub n: usize,
    pub k: usize,
    pub seconds: f64,
}

/// Computes a basis with `method` and reports its wall time. The dense path
/// refuses operators above `cfg.dense_limit`.
pub fn timed_basis(
    op: &NormalizedOperator,
    method: EigenMethod,
    k: usize,
    cfg: &EigenConfig,
) -> Result<(SpectralBasis, Timing), EigenError> {
    let n = op.n();
    let start = Instant::now();
    let basis = match method {
        EigenMethod::Fes => {
            let opts = LanczosOptions {
                tol: cfg.tol,
                max_iter: cfg.max_iter,
                seed: cfg.seed,
                subspace: None,
            };
            top_k_eigenpairs_with(op, k, &opts)?
        }
        EigenMethod::We => {
            if n > cfg.dense_limit {
                return Err(EigenError::DenseLimit {
                    n,
                    limit: cfg.dense_limit,
                });
            }
            full_dense_eigendecomposition_with_limit(&op.matrix().to_dense(), cfg.dense_limit)?
        }
    };
    let seconds = start.elapsed().as_secs_f64();
    Ok((
        basis.with_operator(op.mode()),
        Timing {
            method,
            n,
            k,
            seconds,
        },
    ))
}

/// Sym-normalized operator, the usual choice for training.
pub fn default_operator(g: &Graph) -> NormalizedOperator {
    normalize(g, OperatorMode::SymNormalized)
}
