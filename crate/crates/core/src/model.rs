//! The spectral model: eigenvalue encoding, the attention block that turns
//! encoded eigenvalues into a per-eigenvector filter, the filtered
//! projection and the concatenating convolution layers. The iterated
//! propagation baseline shares the input map and classifier head.

use std::io::{Read, Write};
use std::sync::Arc;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eigen::SpectralBasis;
use crate::error::ModelError;
use crate::graph::{Graph, NormalizedOperator};
use crate::sparse::CsrMatrix;
use crate::tape::{Tape, Var};

const PARAMS_MAGIC: &[u8; 4] = b"FMP1";
const PARAMS_VERSION: u32 = 1;

/// Hyperparameters that fix the parameter shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Width of every hidden representation.
    pub hidden: usize,
    /// Number of convolution layers.
    pub layers: usize,
    /// Eigenvalue embedding width; must be even.
    pub d_e: usize,
    pub heads: usize,
    pub d_ff: usize,
    pub ln_eps: f64,
    /// Restart weight of the propagation baseline.
    pub theta: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden: 16,
            layers: 2,
            d_e: 32,
            heads: 4,
            d_ff: 128,
            ln_eps: 1e-5,
            theta: 0.1,
        }
    }
}

/// Which forward path to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Architecture {
    Fugnn,
    /// `H ← (1−θ) S H + θ H⁰`, iterated `steps` times.
    Baseline { steps: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OedParams {
    pub heads: usize,
    pub eps: f64,
    pub w_q: Array2<f64>,
    pub w_k: Array2<f64>,
    pub w_v: Array2<f64>,
    pub w_o: Array2<f64>,
    pub ln1_scale: Array2<f64>,
    pub ln1_shift: Array2<f64>,
    pub ln2_scale: Array2<f64>,
    pub ln2_shift: Array2<f64>,
    pub ffn_w1: Array2<f64>,
    pub ffn_b1: Array2<f64>,
    pub ffn_w2: Array2<f64>,
    pub ffn_b2: Array2<f64>,
    pub proj: Array2<f64>,
    pub proj_b: Array2<f64>,
}

impl OedParams {
    pub fn d_e(&self) -> usize {
        self.w_q.nrows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvParams {
    pub input_map: Array2<f64>,
    pub input_bias: Array2<f64>,
    /// `2w x w` per layer.
    pub layers: Vec<Array2<f64>>,
    pub classifier: Array2<f64>,
    pub classifier_bias: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub oed: OedParams,
    pub conv: ConvParams,
    pub theta: f64,
}

/// Uniform in `±sqrt(6 / (fan_in + fan_out))`.
fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-a..=a))
}

impl ModelParams {
    /// Seeded initialization for `d_in` input features.
    pub fn init(d_in: usize, cfg: &ModelConfig, seed: u64) -> Result<Self, ModelError> {
        if cfg.d_e == 0 || !cfg.d_e.is_multiple_of(2) {
            return Err(ModelError::Invalid(format!("d_e must be even and positive, got {}", cfg.d_e)));
        }
        if cfg.heads == 0 || !cfg.d_e.is_multiple_of(cfg.heads) {
            return Err(ModelError::Invalid(format!("{} heads do not divide d_e = {}", cfg.heads, cfg.d_e)));
        }
        if cfg.hidden == 0 || cfg.d_ff == 0 || d_in == 0 {
            return Err(ModelError::Invalid("widths must be positive".into()));
        }
        if !(cfg.theta > 0.0 && cfg.theta < 1.0) {
            return Err(ModelError::Invalid(format!("theta must lie in (0, 1), got {}", cfg.theta)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d_e, w) = (cfg.d_e, cfg.hidden);
        let oed = OedParams {
            heads: cfg.heads,
            eps: cfg.ln_eps,
            w_q: glorot(&mut rng, d_e, d_e),
            w_k: glorot(&mut rng, d_e, d_e),
            w_v: glorot(&mut rng, d_e, d_e),
            w_o: glorot(&mut rng, d_e, d_e),
            ln1_scale: Array2::ones((1, d_e)),
            ln1_shift: Array2::zeros((1, d_e)),
            ln2_scale: Array2::ones((1, d_e)),
            ln2_shift: Array2::zeros((1, d_e)),
            ffn_w1: glorot(&mut rng, d_e, cfg.d_ff),
            ffn_b1: Array2::zeros((1, cfg.d_ff)),
            ffn_w2: glorot(&mut rng, cfg.d_ff, d_e),
            ffn_b2: Array2::zeros((1, d_e)),
            proj: glorot(&mut rng, d_e, 1),
            proj_b: Array2::zeros((1, 1)),
        };
        let conv = ConvParams {
            input_map: glorot(&mut rng, d_in, w),
            input_bias: Array2::zeros((1, w)),
            layers: (0..cfg.layers).map(|_| glorot(&mut rng, 2 * w, w)).collect(),
            classifier: glorot(&mut rng, w, 2),
            classifier_bias: Array2::zeros((1, 2)),
        };
        let params = Self {
            oed,
            conv,
            theta: cfg.theta,
        };
        params.validate()?;
        Ok(params)
    }

    /// Checks the shape chain, head split, `θ` range and finiteness.
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::Dimension(m));
        let o = &self.oed;
        let d_e = o.d_e();
        if d_e == 0 || !d_e.is_multiple_of(2) || o.heads == 0 || !d_e.is_multiple_of(o.heads) {
            return bad(format!("d_e = {d_e} must be even and divisible by {} heads", o.heads));
        }
        let d_ff = o.ffn_w1.ncols();
        let expect = [
            ("oed.w_k", &o.w_k, (d_e, d_e)),
            ("oed.w_v", &o.w_v, (d_e, d_e)),
            ("oed.w_o", &o.w_o, (d_e, d_e)),
            ("oed.ln1_scale", &o.ln1_scale, (1, d_e)),
            ("oed.ln1_shift", &o.ln1_shift, (1, d_e)),
            ("oed.ln2_scale", &o.ln2_scale, (1, d_e)),
            ("oed.ln2_shift", &o.ln2_shift, (1, d_e)),
            ("oed.ffn_w1", &o.ffn_w1, (d_e, d_ff)),
            ("oed.ffn_b1", &o.ffn_b1, (1, d_ff)),
            ("oed.ffn_w2", &o.ffn_w2, (d_ff, d_e)),
            ("oed.ffn_b2", &o.ffn_b2, (1, d_e)),
            ("oed.proj", &o.proj, (d_e, 1)),
            ("oed.proj_b", &o.proj_b, (1, 1)),
        ];
        for (name, t, shape) in expect {
            if t.dim() != shape {
                return bad(format!("{name} has shape {:?}, expected {shape:?}", t.dim()));
            }
        }
        let c = &self.conv;
        let w = c.input_map.ncols();
        if c.input_bias.dim() != (1, w) || c.classifier.dim() != (w, 2) || c.classifier_bias.dim() != (1, 2) {
            return bad("input map, classifier and biases disagree on the hidden width".into());
        }
        if let Some((l, t)) = c.layers.iter().enumerate().find(|(_, t)| t.dim() != (2 * w, w)) {
            return bad(format!("layer {l} has shape {:?}, expected {:?}", t.dim(), (2 * w, w)));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(ModelError::Invalid(format!("theta must lie in (0, 1), got {}", self.theta)));
        }
        if self.tensors().iter().any(|(_, t)| t.iter().any(|v| !v.is_finite())) {
            return Err(ModelError::NonFinite { op: "parameters" });
        }
        Ok(())
    }

    /// Every learnable tensor with a stable name, in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &Array2<f64>)> {
        let o = &self.oed;
        let mut out: Vec<(String, &Array2<f64>)> = vec![
            ("oed.w_q".into(), &o.w_q),
            ("oed.w_k".into(), &o.w_k),
            ("oed.w_v".into(), &o.w_v),
            ("oed.w_o".into(), &o.w_o),
            ("oed.ln1_scale".into(), &o.ln1_scale),
            ("oed.ln1_shift".into(), &o.ln1_shift),
            ("oed.ln2_scale".into(), &o.ln2_scale),
            ("oed.ln2_shift".into(), &o.ln2_shift),
            ("oed.ffn_w1".into(), &o.ffn_w1),
            ("oed.ffn_b1".into(), &o.ffn_b1),
            ("oed.ffn_w2".into(), &o.ffn_w2),
            ("oed.ffn_b2".into(), &o.ffn_b2),
            ("oed.proj".into(), &o.proj),
            ("oed.proj_b".into(), &o.proj_b),
            ("conv.input_map".into(), &self.conv.input_map),
            ("conv.input_bias".into(), &self.conv.input_bias),
        ];
        for (l, t) in self.conv.layers.iter().enumerate() {
            out.push((format!("conv.layer{l}"), t));
        }
        out.push(("conv.classifier".into(), &self.conv.classifier));
        out.push(("conv.classifier_bias".into(), &self.conv.classifier_bias));
        out
    }

    /// Mutable view of the tensors in the order of [`ModelParams::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let o = &mut self.oed;
        let mut out: Vec<&mut Array2<f64>> = vec![
            &mut o.w_q,
            &mut o.w_k,
            &mut o.w_v,
            &mut o.w_o,
            &mut o.ln1_scale,
            &mut o.ln1_shift,
            &mut o.ln2_scale,
            &mut o.ln2_shift,
            &mut o.ffn_w1,
            &mut o.ffn_b1,
            &mut o.ffn_w2,
            &mut o.ffn_b2,
            &mut o.proj,
            &mut o.proj_b,
            &mut self.conv.input_map,
            &mut self.conv.input_bias,
        ];
        out.extend(self.conv.layers.iter_mut());
        out.push(&mut self.conv.classifier);
        out.push(&mut self.conv.classifier_bias);
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Versioned binary container: magic `FMP1`, version, head count, LN
    /// epsilon, θ, tensor count, then per tensor its name, shape and
    /// row-major data. Integers are u64 LE (version u32), floats f64 LE.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<(), ModelError> {
        w.write_all(PARAMS_MAGIC)?;
        w.write_all(&PARAMS_VERSION.to_le_bytes())?;
        w.write_all(&(self.oed.heads as u64).to_le_bytes())?;
        w.write_all(&self.oed.eps.to_le_bytes())?;
        w.write_all(&self.theta.to_le_bytes())?;
        let tensors = self.tensors();
        w.write_all(&(tensors.len() as u64).to_le_bytes())?;
        for (name, t) in tensors {
            w.write_all(&(name.len() as u64).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            w.write_all(&(t.nrows() as u64).to_le_bytes())?;
            w.write_all(&(t.ncols() as u64).to_le_bytes())?;
            for v in t.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_binary(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self, ModelError> {
        let fmt = |m: String| ModelError::Format(m);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != PARAMS_MAGIC {
            return Err(fmt(format!("bad magic {magic:?}")));
        }
        let mut word4 = [0u8; 4];
        r.read_exact(&mut word4)?;
        let version = u32::from_le_bytes(word4);
        if version != PARAMS_VERSION {
            return Err(fmt(format!("unsupported version {version}")));
        }
        let mut word = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8], ModelError> {
            r.read_exact(&mut word)?;
            Ok(word)
        };
        let heads = u64::from_le_bytes(next(&mut r)?) as usize;
        let eps = f64::from_le_bytes(next(&mut r)?);
        let theta = f64::from_le_bytes(next(&mut r)?);
        let count = u64::from_le_bytes(next(&mut r)?) as usize;
        if count < 18 {
            return Err(fmt(format!("{count} tensors is too few")));
        }
        let mut tensors = Vec::with_capacity(count);
        for _ in 0..count {
            let len = u64::from_le_bytes(next(&mut r)?) as usize;
            if len > 256 {
                return Err(fmt("tensor name too long".into()));
            }
            let mut name = vec![0u8; len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name).map_err(|e| fmt(e.to_string()))?;
            let rows = u64::from_le_bytes(next(&mut r)?) as usize;
            let cols = u64::from_le_bytes(next(&mut r)?) as usize;
            let mut data = Vec::with_capacity(rows.saturating_mul(cols).min(1 << 24));
            for _ in 0..rows * cols {
                data.push(f64::from_le_bytes(next(&mut r)?));
            }
            let t = Array2::from_shape_vec((rows, cols), data).map_err(|e| fmt(e.to_string()))?;
            tensors.push((name, t));
        }
        let layers = count - 18;
        let mut it = tensors.into_iter();
        let mut take = |want: &str| -> Result<Array2<f64>, ModelError> {
            match it.next() {
                Some((name, t)) if name == want => Ok(t),
                Some((name, _)) => Err(fmt(format!("expected tensor {want}, found {name}"))),
                None => Err(fmt(format!("missing tensor {want}"))),
            }
        };
        let oed = OedParams {
            heads,
            eps,
            w_q: take("oed.w_q")?,
            w_k: take("oed.w_k")?,
            w_v: take("oed.w_v")?,
            w_o: take("oed.w_o")?,
            ln1_scale: take("oed.ln1_scale")?,
            ln1_shift: take("oed.ln1_shift")?,
            ln2_scale: take("oed.ln2_scale")?,
            ln2_shift: take("oed.ln2_shift")?,
            ffn_w1: take("oed.ffn_w1")?,
            ffn_b1: take("oed.ffn_b1")?,
            ffn_w2: take("oed.ffn_w2")?,
            ffn_b2: take("oed.ffn_b2")?,
            proj: take("oed.proj")?,
            proj_b: take("oed.proj_b")?,
        };
        let input_map = take("conv.input_map")?;
        let input_bias = take("conv.input_bias")?;
        let layer_tensors = (0..layers)
            .map(|l| take(&format!("conv.layer{l}")))
            .collect::<Result<Vec<_>, _>>()?;
        let conv = ConvParams {
            input_map,
            input_bias,
            layers: layer_tensors,
            classifier: take("conv.classifier")?,
            classifier_bias: take("conv.classifier_bias")?,
        };
        let params = Self { oed, conv, theta };
        params.validate()?;
        Ok(params)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("parameters serialize")
    }
}

/// Row `k` holds `sin(λ_k / 10000^{2i/d_e})` in column `2i` and the matching
/// cosine in column `2i + 1`.
pub fn sinusoidal_encode(eigenvalues: &[f64], d_e: usize) -> Result<Array2<f64>, ModelError> {
    if d_e == 0 || !d_e.is_multiple_of(2) {
        return Err(ModelError::Invalid(format!("d_e must be even and positive, got {d_e}")));
    }
    let mut out = Array2::zeros((eigenvalues.len(), d_e));
    for (k, &lambda) in eigenvalues.iter().enumerate() {
        for i in 0..d_e / 2 {
            let freq = 10000f64.powf(2.0 * i as f64 / d_e as f64);
            out[[k, 2 * i]] = (lambda / freq).sin();
            out[[k, 2 * i + 1]] = (lambda / freq).cos();
        }
    }
    Ok(out)
}

/// Tape handles of every parameter, in [`ModelParams::tensors`] order.
pub struct ParamVars {
    pub all: Vec<Var>,
}

impl ParamVars {
    fn new(tape: &mut Tape, p: &ModelParams) -> Self {
        Self {
            all: p.tensors().into_iter().map(|(_, t)| tape.param(t.clone())).collect(),
        }
    }

    fn get(&self, i: usize) -> Var {
        self.all[i]
    }

    // indices into the fixed tensor order
    const W_Q: usize = 0;
    const W_K: usize = 1;
    const W_V: usize = 2;
    const W_O: usize = 3;
    const LN1_SCALE: usize = 4;
    const LN1_SHIFT: usize = 5;
    const LN2_SCALE: usize = 6;
    const LN2_SHIFT: usize = 7;
    const FFN_W1: usize = 8;
    const FFN_B1: usize = 9;
    const FFN_W2: usize = 10;
    const FFN_B2: usize = 11;
    const PROJ: usize = 12;
    const PROJ_B: usize = 13;
    const INPUT_MAP: usize = 14;
    const INPUT_BIAS: usize = 15;
    const FIRST_LAYER: usize = 16;

    fn layer(&self, l: usize) -> Var {
        self.all[Self::FIRST_LAYER + l]
    }

    fn classifier(&self) -> Var {
        self.all[self.all.len() - 2]
    }

    fn classifier_bias(&self) -> Var {
        self.all[self.all.len() - 1]
    }
}

/// Records the attention block on the tape; returns the `K x 1` filter.
fn record_oed(tape: &mut Tape, pv: &ParamVars, e_pos: Var, heads: usize, eps: f64) -> Result<Var, ModelError> {
    let d_e = tape.value(e_pos).ncols();
    let dh = d_e / heads;

    let n1 = tape.layer_norm(e_pos, eps)?;
    let n1 = tape.mul_row(n1, pv.get(ParamVars::LN1_SCALE))?;
    let n1 = tape.add_row(n1, pv.get(ParamVars::LN1_SHIFT))?;
    let q = tape.matmul(n1, pv.get(ParamVars::W_Q))?;
    // Scaling the queries is the same as scaling every score, at K x d_e cost.
    let q = tape.scale(q, 1.0 / (dh as f64).sqrt())?;
    let k = tape.matmul(n1, pv.get(ParamVars::W_K))?;
    let v = tape.matmul(n1, pv.get(ParamVars::W_V))?;
    let mut merged: Option<Var> = None;
    for h in 0..heads {
        let (lo, hi) = (h * dh, (h + 1) * dh);
        let qh = tape.slice_cols(q, lo, hi)?;
        let kh = tape.slice_cols(k, lo, hi)?;
        let vh = tape.slice_cols(v, lo, hi)?;
        let scores = tape.matmul_t(qh, kh)?;
        let attn = tape.softmax_rows(scores)?;
        let out = tape.matmul(attn, vh)?;
        merged = Some(match merged {
            None => out,
            Some(m) => tape.concat_cols(m, out)?,
        });
    }
    let mha = tape.matmul(merged.expect("at least one head"), pv.get(ParamVars::W_O))?;
    let e_mha = tape.add(mha, e_pos)?;

    let n2 = tape.layer_norm(e_mha, eps)?;
    let n2 = tape.mul_row(n2, pv.get(ParamVars::LN2_SCALE))?;
    let n2 = tape.add_row(n2, pv.get(ParamVars::LN2_SHIFT))?;
    let f = tape.matmul(n2, pv.get(ParamVars::FFN_W1))?;
    let f = tape.add_row(f, pv.get(ParamVars::FFN_B1))?;
    let f = tape.relu(f)?;
    let f = tape.matmul(f, pv.get(ParamVars::FFN_W2))?;
    let f = tape.add_row(f, pv.get(ParamVars::FFN_B2))?;
    let tokens = tape.add(f, e_mha)?;

    let e = tape.matmul(tokens, pv.get(ParamVars::PROJ))?;
    tape.add_row(e, pv.get(ParamVars::PROJ_B))
}

/// Graph-dependent constants of a forward pass.
#[derive(Debug, Clone)]
pub struct ModelInputs {
    pub features: Array2<f64>,
    /// The n x K eigenvector matrix.
    pub basis: Arc<Array2<f64>>,
    /// Encoded eigenvalues, K x d_e.
    pub e_pos: Array2<f64>,
    /// Propagation operator for the baseline path.
    pub operator: Option<Arc<CsrMatrix>>,
}

impl ModelInputs {
    pub fn new(g: &Graph, basis: &SpectralBasis, d_e: usize) -> Result<Self, ModelError> {
        if basis.n() != g.n() {
            return Err(ModelError::Dimension(format!(
                "basis of dimension {} for a graph with {} nodes",
                basis.n(),
                g.n()
            )));
        }
        Ok(Self {
            features: g.features().clone(),
            basis: Arc::new(basis.eigenvectors().clone()),
            e_pos: sinusoidal_encode(basis.eigenvalues(), d_e)?,
            operator: None,
        })
    }

    pub fn with_operator(mut self, op: &NormalizedOperator) -> Self {
        self.operator = Some(Arc::new(op.matrix().clone()));
        self
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }
}

/// Handles of a recorded forward pass.
pub struct Recorded {
    pub params: ParamVars,
    pub logits: Var,
    /// The `K x 1` filter, for the spectral path only.
    pub e_oed: Option<Var>,
}

/// Records a full forward pass on `tape`.
pub fn record_forward(
    tape: &mut Tape,
    inputs: &ModelInputs,
    p: &ModelParams,
    arch: Architecture,
) -> Result<Recorded, ModelError> {
    p.validate()?;
    if inputs.features.ncols() != p.conv.input_map.nrows() {
        return Err(ModelError::Dimension(format!(
            "{} feature columns against an input map for {}",
            inputs.features.ncols(),
            p.conv.input_map.nrows()
        )));
    }
    let pv = ParamVars::new(tape, p);
    let x = tape.constant(inputs.features.clone());
    let h0 = tape.matmul(x, pv.get(ParamVars::INPUT_MAP))?;
    let h0 = tape.add_row(h0, pv.get(ParamVars::INPUT_BIAS))?;

    let (h, e_oed) = match arch {
        Architecture::Fugnn => {
            if inputs.e_pos.ncols() != p.oed.d_e() {
                return Err(ModelError::Dimension(format!(
                    "eigenvalue encoding width {} against d_e = {}",
                    inputs.e_pos.ncols(),
                    p.oed.d_e()
                )));
            }
            let e_pos = tape.constant(inputs.e_pos.clone());
            let e = record_oed(tape, &pv, e_pos, p.oed.heads, p.oed.eps)?;
            let mut h = h0;
            for l in 0..p.conv.layers.len() {
                let coeffs = tape.const_t_matmul(inputs.basis.clone(), h)?;
                let filtered = tape.row_scale(coeffs, e)?;
                let h_spec = tape.const_matmul(inputs.basis.clone(), filtered)?;
                let cat = tape.concat_cols(h, h_spec)?;
                let z = tape.matmul(cat, pv.layer(l))?;
                h = tape.relu(z)?;
            }
            (h, Some(e))
        }
        Architecture::Baseline { steps } => {
            let s = inputs
                .operator
                .clone()
                .ok_or_else(|| ModelError::Invalid("baseline needs a propagation operator".into()))?;
            let mut h = h0;
            for _ in 0..steps {
                let sh = tape.spmm(s.clone(), h)?;
                let sh = tape.scale(sh, 1.0 - p.theta)?;
                let restart = tape.scale(h0, p.theta)?;
                h = tape.add(sh, restart)?;
            }
            (h, None)
        }
    };
    let logits = tape.matmul(h, pv.classifier())?;
    let logits = tape.add_row(logits, pv.classifier_bias())?;
    Ok(Recorded {
        params: pv,
        logits,
        e_oed,
    })
}

/// `n x 2` logits.
pub fn forward(inputs: &ModelInputs, p: &ModelParams, arch: Architecture) -> Result<Array2<f64>, ModelError> {
    let mut tape = Tape::new();
    let rec = record_forward(&mut tape, inputs, p, arch)?;
    Ok(tape.value(rec.logits).clone())
}

/// The length-K filter produced by the attention block from `e_pos`.
pub fn oed_forward(e_pos: &Array2<f64>, p: &OedParams) -> Result<Vec<f64>, ModelError> {
    if e_pos.ncols() != p.d_e() {
        return Err(ModelError::Dimension(format!(
            "encoding width {} against d_e = {}",
            e_pos.ncols(),
            p.d_e()
        )));
    }
    // reuse the full parameter layout with an empty convolution stack
    let params = ModelParams {
        oed: p.clone(),
        conv: ConvParams {
            input_map: Array2::zeros((1, 1)),
            input_bias: Array2::zeros((1, 1)),
            layers: Vec::new(),
            classifier: Array2::zeros((1, 2)),
            classifier_bias: Array2::zeros((1, 2)),
        },
        theta: 0.5,
    };
    params.validate()?;
    let mut tape = Tape::new();
    let pv = ParamVars::new(&mut tape, &params);
    let e = tape.constant(e_pos.clone());
    let out = record_oed(&mut tape, &pv, e, p.heads, p.eps)?;
    Ok(tape.value(out).iter().copied().collect())
}

/// `P · (e ⊙ PᵀH)`, with `e` scaling the K rows of `PᵀH`.
pub fn spectral_transform(p: &Array2<f64>, e: &[f64], h: &Array2<f64>) -> Result<Array2<f64>, ModelError> {
    if p.ncols() != e.len() || p.nrows() != h.nrows() {
        return Err(ModelError::Dimension(format!(
            "basis {:?}, filter {}, features {:?}",
            p.dim(),
            e.len(),
            h.dim()
        )));
    }
    let mut coeffs = p.t().dot(h);
    for (mut row, &ek) in coeffs.rows_mut().into_iter().zip(e) {
        row *= ek;
    }
    Ok(p.dot(&coeffs))
}

/// `ReLU([H ‖ H′] W)`.
pub fn fugnn_layer(h: &Array2<f64>, h_spec: &Array2<f64>, w: &Array2<f64>) -> Result<Array2<f64>, ModelError> {
    if h.dim() != h_spec.dim() || w.nrows() != 2 * h.ncols() {
        return Err(ModelError::Dimension(format!(
            "H {:?}, H' {:?}, W {:?}",
            h.dim(),
            h_spec.dim(),
            w.dim()
        )));
    }
    let wa = w.slice(ndarray::s![..h.ncols(), ..]);
    let wb = w.slice(ndarray::s![h.ncols().., ..]);
    Ok((h.dot(&wa) + h_spec.dot(&wb)).mapv(|v| v.max(0.0)))
}

/// Iterates `H ← (1−θ) S H + θ H⁰` exactly `l` times.
pub fn baseline_propagate(s: &CsrMatrix, h0: &Array2<f64>, theta: f64, l: usize) -> Result<Array2<f64>, ModelError> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(ModelError::Invalid(format!("theta must lie in (0, 1), got {theta}")));
    }
    if s.n() != h0.nrows() {
        return Err(ModelError::Dimension(format!("operator {} against {} rows", s.n(), h0.nrows())));
    }
    let mut h = h0.clone();
    for _ in 0..l {
        h = s.spmm(h.view()) * (1.0 - theta) + h0 * theta;
    }
    Ok(h)
}
