//! Full-batch training with masked cross-entropy and Adam, keeping the
//! parameters of the epoch with the best validation accuracy.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::eigen::SpectralBasis;
use crate::error::ModelError;
use crate::graph::{Graph, NormalizedOperator, Splits};
use crate::metrics::{self, FairnessReport};
use crate::model::{record_forward, Architecture, ModelInputs, ModelParams};
use crate::tape::Tape;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    /// L2 coefficient added to every gradient.
    pub weight_decay: f64,
    /// Seeds parameter initialization in the experiment pipeline.
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Epochs without a new best validation accuracy before stopping.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            lr: 0.01,
            weight_decay: 5e-4,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            patience: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::Invalid(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad("lr must be finite and non-negative");
        }
        if !(self.weight_decay >= 0.0) {
            return bad("weight_decay must be non-negative");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)");
        }
        if !(self.adam_eps > 0.0) {
            return bad("adam_eps must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
    pub val_delta_sp: Option<f64>,
    pub val_delta_eo: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    pub best_epoch: usize,
    /// FNV-1a digest of the returned parameters' binary container.
    pub snapshot_id: String,
}

impl TrainHistory {
    /// One JSON object per epoch.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }
}

/// Digest used to name parameter snapshots.
pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Everything a training run needs besides the parameters.
#[derive(Debug, Clone)]
pub struct Problem {
    pub inputs: ModelInputs,
    pub labels: Vec<u8>,
    pub sensitive: Vec<u8>,
    pub splits: Splits,
}

impl Problem {
    pub fn new(
        g: &Graph,
        basis: &SpectralBasis,
        d_e: usize,
        operator: Option<&NormalizedOperator>,
    ) -> Result<Self, ModelError> {
        let mut inputs = ModelInputs::new(g, basis, d_e)?;
        if let Some(op) = operator {
            inputs = inputs.with_operator(op);
        }
        Ok(Self {
            inputs,
            labels: g.labels().to_vec(),
            sensitive: g.sensitive(),
            splits: g.splits().clone(),
        })
    }

    pub fn mask(&self, split: SplitName) -> &[bool] {
        match split {
            SplitName::Train => &self.splits.train,
            SplitName::Val => &self.splits.val,
            SplitName::Test => &self.splits.test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Val,
    Test,
}

impl SplitName {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Val => "val",
            SplitName::Test => "test",
        }
    }
}

/// Mean cross-entropy of `logits` against `labels` over `mask`.
pub fn loss(logits: &Array2<f64>, labels: &[u8], mask: &[bool]) -> Result<f64, ModelError> {
    let mut tape = Tape::new();
    let l = tape.constant(logits.clone());
    let out = tape.cross_entropy(l, labels, mask)?;
    Ok(tape.value(out)[[0, 0]])
}

/// Training loss, gradients for every tensor of `p` (in
/// [`ModelParams::tensors`] order) and the logits of the forward pass.
pub fn loss_and_gradients(
    problem: &Problem,
    p: &ModelParams,
    arch: Architecture,
) -> Result<(f64, Vec<Array2<f64>>, Array2<f64>), ModelError> {
    let mut tape = Tape::new();
    let rec = record_forward(&mut tape, &problem.inputs, p, arch)?;
    let root = tape.cross_entropy(rec.logits, &problem.labels, &problem.splits.train)?;
    let mut grads = tape.backward(root)?;
    let gs = rec
        .params
        .all
        .iter()
        .zip(p.tensors())
        .map(|(&v, (_, t))| grads.take(v).unwrap_or_else(|| Array2::zeros(t.dim())))
        .collect();
    Ok((tape.value(root)[[0, 0]], gs, tape.value(rec.logits).clone()))
}

/// Training loss only, for finite-difference checks.
pub fn training_loss(problem: &Problem, p: &ModelParams, arch: Architecture) -> Result<f64, ModelError> {
    let mut tape = Tape::new();
    let rec = record_forward(&mut tape, &problem.inputs, p, arch)?;
    let root = tape.cross_entropy(rec.logits, &problem.labels, &problem.splits.train)?;
    Ok(tape.value(root)[[0, 0]])
}

/// Accuracy, parity and opportunity gaps of `p` on one split.
pub fn evaluate(
    problem: &Problem,
    p: &ModelParams,
    arch: Architecture,
    split: SplitName,
) -> Result<FairnessReport, ModelError> {
    let logits = crate::model::forward(&problem.inputs, p, arch)?;
    report_from_logits(problem, &logits, split)
}

fn report_from_logits(problem: &Problem, logits: &Array2<f64>, split: SplitName) -> Result<FairnessReport, ModelError> {
    let pred = metrics::predict(logits);
    Ok(metrics::fairness_report(
        &pred,
        &problem.labels,
        &problem.sensitive,
        problem.mask(split),
        split.as_str(),
    )?)
}

struct Adam {
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
    t: i32,
}

impl Adam {
    fn new(p: &ModelParams) -> Self {
        let zeros: Vec<Array2<f64>> = p.tensors().iter().map(|(_, t)| Array2::zeros(t.dim())).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    fn step(&mut self, p: &mut ModelParams, grads: &[Array2<f64>], cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for (((w, g), m), v) in p.tensors_mut().into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            ndarray::Zip::from(w).and(g).and(m).and(v).for_each(|w, &g, m, v| {
                let g = g + cfg.weight_decay * *w;
                *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                *w -= cfg.lr * (*m / c1) / ((*v / c2).sqrt() + cfg.adam_eps);
            });
        }
    }
}

/// Trains from `p0` and returns the parameters of the epoch with the best
/// validation accuracy (earliest on ties) with the per-epoch history.
///
/// Each epoch evaluates the current parameters, records their training loss
/// and validation metrics, then takes one Adam step.
pub fn train(
    problem: &Problem,
    p0: ModelParams,
    arch: Architecture,
    cfg: &TrainConfig,
) -> Result<(ModelParams, TrainHistory), ModelError> {
    cfg.validate()?;
    let mut p = p0;
    let mut adam = Adam::new(&p);
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, ModelParams)> = None;

    for epoch in 0..cfg.epochs {
        let step = loss_and_gradients(problem, &p, arch).and_then(|(loss, grads, logits)| {
            if !loss.is_finite() {
                return Err(ModelError::NonFinite { op: "loss" });
            }
            Ok((loss, grads, logits))
        });
        let (loss, grads, logits) = match step {
            Ok(v) => v,
            Err(e @ (ModelError::NonFinite { .. } | ModelError::NonFiniteGradient { .. })) => {
                return Err(ModelError::Diverged {
                    epoch,
                    reason: e.to_string(),
                    history: Box::new(history),
                })
            }
            Err(e) => return Err(e),
        };
        let val = report_from_logits(problem, &logits, SplitName::Val)?;
        history.records.push(EpochRecord {
            epoch,
            train_loss: loss,
            val_accuracy: val.accuracy,
            val_delta_sp: val.delta_sp,
            val_delta_eo: val.delta_eo,
        });
        if best.as_ref().is_none_or(|(acc, _)| val.accuracy > *acc) {
            best = Some((val.accuracy, p.clone()));
            history.best_epoch = epoch;
        }
        if epoch - history.best_epoch >= cfg.patience {
            break;
        }
        adam.step(&mut p, &grads, cfg);
    }

    let (_, best_params) = best.expect("at least one epoch ran");
    history.snapshot_id = fnv1a_hex(&best_params.to_binary());
    Ok((best_params, history))
}
