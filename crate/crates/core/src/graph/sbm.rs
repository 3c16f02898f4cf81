//! Two-block stochastic block model with a planted sensitive attribute and a
//! partially community-driven label.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::GraphError;

/// Parameters of the synthetic biased graph.
///
/// Nodes `0..n/2` form community 0 and the rest community 1. Each node's
/// sensitive value equals its community with probability
/// `sensitive_homophily`. Each node carries a latent Gaussian vector; the
/// feature-driven signal is the sign of its projection on a planted unit
/// direction. The label equals that signal with probability `label_bias` and
/// the community id otherwise. Observed features are the latent vector plus
/// `noise_sd` Gaussian noise, preceded by the sensitive column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SbmConfig {
    pub n: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub sensitive_homophily: f64,
    pub label_bias: f64,
    /// Total feature width, sensitive column included.
    pub d: usize,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for SbmConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            p_in: 0.01,
            p_out: 0.001,
            sensitive_homophily: 0.9,
            label_bias: 0.8,
            d: 8,
            noise_sd: 0.5,
            seed: 0,
        }
    }
}

impl SbmConfig {
    pub fn validate(&self) -> Result<(), GraphError> {
        let bad = |m: &str| Err(GraphError::InvalidConfig(m.to_string()));
        if self.n < 2 {
            return bad("n must be at least 2");
        }
        if !(0.0..=1.0).contains(&self.p_in) || !(0.0..=1.0).contains(&self.p_out) {
            return bad("edge probabilities must lie in [0, 1]");
        }
        if self.p_in <= self.p_out {
            return bad("p_in must exceed p_out");
        }
        if !(0.5..=1.0).contains(&self.sensitive_homophily) {
            return bad("sensitive_homophily must lie in [0.5, 1]");
        }
        if !(0.5..=1.0).contains(&self.label_bias) {
            return bad("label_bias must lie in [0.5, 1]");
        }
        if self.d < 2 {
            return bad("d must be at least 2 (sensitive column plus one feature)");
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad("noise_sd must be finite and non-negative");
        }
        Ok(())
    }

    pub fn community(&self, node: usize) -> u8 {
        u8::from(node >= self.n / 2)
    }
}

/// Number of trials skipped before the next success of a Bernoulli(p) stream.
fn geometric_skip(rng: &mut ChaCha8Rng, log_q: f64) -> u64 {
    let u: f64 = 1.0 - rng.random::<f64>();
    (u.ln() / log_q).floor() as u64
}

/// Samples each unordered pair inside `[start, start + m)` with probability `p`.
fn sample_within(rng: &mut ChaCha8Rng, start: usize, m: usize, p: f64, out: &mut Vec<(usize, usize)>) {
    if p <= 0.0 || m < 2 {
        return;
    }
    if p >= 1.0 {
        for v in 1..m {
            for w in 0..v {
                out.push((start + w, start + v));
            }
        }
        return;
    }
    let log_q = (1.0 - p).ln();
    let (mut v, mut w) = (1u64, -1i64);
    let m = m as u64;
    while v < m {
        w += 1 + geometric_skip(rng, log_q) as i64;
        while w >= v as i64 && v < m {
            w -= v as i64;
            v += 1;
        }
        if v < m {
            out.push((start + w as usize, start + v as usize));
        }
    }
}

/// Samples each pair of `[a0, a0 + a) x [b0, b0 + b)` with probability `p`.
fn sample_between(
    rng: &mut ChaCha8Rng,
    (a0, a): (usize, usize),
    (b0, b): (usize, usize),
    p: f64,
    out: &mut Vec<(usize, usize)>,
) {
    if p <= 0.0 || a == 0 || b == 0 {
        return;
    }
    let total = (a as u64) * (b as u64);
    if p >= 1.0 {
        for k in 0..total {
            out.push((a0 + (k / b as u64) as usize, b0 + (k % b as u64) as usize));
        }
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut k = 0u64;
    loop {
        k = k.saturating_add(geometric_skip(rng, log_q));
        if k >= total {
            break;
        }
        out.push((a0 + (k / b as u64) as usize, b0 + (k % b as u64) as usize));
        k += 1;
    }
}

/// Generates the two-block biased graph described by `cfg`.
pub fn generate_sbm(cfg: &SbmConfig) -> Result<Graph, GraphError> {
    cfg.validate()?;
    let n = cfg.n;
    let half = n / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut edges = Vec::new();
    sample_within(&mut rng, 0, half, cfg.p_in, &mut edges);
    sample_within(&mut rng, half, n - half, cfg.p_in, &mut edges);
    sample_between(&mut rng, (0, half), (half, n - half), cfg.p_out, &mut edges);

    let latent_dim = cfg.d - 1;
    let mut direction: Vec<f64> = (0..latent_dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    direction.iter_mut().for_each(|v| *v /= norm);

    let mut features = Array2::zeros((n, cfg.d));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let community = cfg.community(i);
        let s = if rng.random::<f64>() < cfg.sensitive_homophily {
            community
        } else {
            1 - community
        };
        features[[i, 0]] = f64::from(s);
        let mut projection = 0.0;
        for k in 0..latent_dim {
            let z: f64 = StandardNormal.sample(&mut rng);
            let noise: f64 = StandardNormal.sample(&mut rng);
            projection += z * direction[k];
            features[[i, k + 1]] = z + cfg.noise_sd * noise;
        }
        let signal = u8::from(projection > 0.0);
        let label = if rng.random::<f64>() < cfg.label_bias {
            signal
        } else {
            community
        };
        labels.push(label);
    }

    let mut names = vec!["sensitive".to_string()];
    names.extend((1..cfg.d).map(|k| format!("x{k}")));
    Graph::new(n, edges, features, names, 0, labels)
}
