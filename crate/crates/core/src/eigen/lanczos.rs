//! Thick-restart Lanczos with full reorthogonalization for the largest
//! magnitude eigenpairs of a symmetric operator.
//!
//! A single starting vector only ever sees one direction of a repeated
//! eigenvalue. After the main run converges, a probe run in the orthogonal
//! complement of the accepted vectors looks for anything of larger
//! magnitude; probes repeat until the complement has nothing better to offer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::symmetric_eigen;
use super::{magnitude_order, sort_by_magnitude, SpectralBasis};
use crate::error::EigenError;
use crate::sparse::{dot, norm, LinearOperator};

#[derive(Debug, Clone, PartialEq)]
pub struct LanczosOptions {
    /// Relative residual tolerance for accepting a Ritz pair.
    pub tol: f64,
    /// Budget of operator applications, probes included.
    pub max_iter: usize,
    pub seed: u64,
    /// Krylov subspace size; defaults to `K + max(K, 32)` capped at `n`.
    pub subspace: Option<usize>,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50_000,
            seed: 0,
            subspace: None,
        }
    }
}

/// The `k` eigenpairs of largest magnitude of the symmetric operator `op`.
pub fn top_k_eigenpairs(
    op: &impl LinearOperator,
    k: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<SpectralBasis, EigenError> {
    top_k_eigenpairs_with(
        op,
        k,
        &LanczosOptions {
            tol,
            max_iter,
            seed,
            subspace: None,
        },
    )
}

pub fn top_k_eigenpairs_with(
    op: &impl LinearOperator,
    k: usize,
    opts: &LanczosOptions,
) -> Result<SpectralBasis, EigenError> {
    let n = op.dim();
    if k == 0 {
        return Err(EigenError::ZeroK);
    }
    if k > n {
        return Err(EigenError::TooManyEigenpairs { k, n });
    }
    if !(opts.tol > 0.0) {
        return Err(EigenError::BadTolerance(opts.tol));
    }

    let mut solver = Solver {
        op,
        n,
        tol: opts.tol,
        budget: opts.max_iter,
        matvecs: 0,
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
    };
    let subspace = opts.subspace.unwrap_or(k + k.max(32));

    let mut accepted = match solver.run(&[], k, subspace) {
        Outcome::Converged(pairs) => pairs,
        Outcome::Exhausted { residuals } => {
            return Err(EigenError::NoConvergence {
                iterations: solver.matvecs,
                worst_residual: residuals.iter().copied().fold(0.0, f64::max),
                residuals,
            })
        }
    };

    while accepted.len() < n {
        let locked: Vec<Vec<f64>> = accepted.iter().map(|p| p.1.clone()).collect();
        let probe = match solver.run(&locked, 1, 32) {
            Outcome::Converged(mut pairs) => pairs.remove(0),
            Outcome::Exhausted { residuals } => {
                return Err(EigenError::NoConvergence {
                    iterations: solver.matvecs,
                    worst_residual: residuals.iter().copied().fold(0.0, f64::max),
                    residuals,
                })
            }
        };
        let weakest = accepted.last().expect("k >= 1").0.abs();
        let margin = 10.0 * opts.tol * weakest.max(1.0);
        if probe.0.abs() <= weakest + margin {
            break;
        }
        accepted.push(probe);
        sort_by_magnitude(&mut accepted, |p| p.0);
        accepted.pop();
    }

    let mut basis = SpectralBasis::from_pairs(n, accepted);
    basis.recompute_residuals(op);
    Ok(basis)
}

enum Outcome {
    /// Converged `(λ, unit vector)` pairs in magnitude order.
    Converged(Vec<(f64, Vec<f64>)>),
    /// Budget ran out; relative residual estimates of the wanted pairs.
    Exhausted { residuals: Vec<f64> },
}

struct Solver<'a, O> {
    op: &'a O,
    n: usize,
    tol: f64,
    budget: usize,
    matvecs: usize,
    rng: ChaCha8Rng,
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Two passes of Gram-Schmidt against `locked` and `basis`.
fn orthogonalize(w: &mut [f64], locked: &[Vec<f64>], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for v in locked.iter().chain(basis) {
            let c = dot(v, w);
            axpy(-c, v, w);
        }
    }
}

impl<O: LinearOperator> Solver<'_, O> {
    fn random_orthogonal(&mut self, locked: &[Vec<f64>], basis: &[Vec<f64>]) -> Option<Vec<f64>> {
        for _ in 0..4 {
            let mut x: Vec<f64> = (0..self.n).map(|_| self.rng.random_range(-1.0..1.0)).collect();
            let before = norm(&x);
            orthogonalize(&mut x, locked, basis);
            let after = norm(&x);
            if after > 1e-8 * before {
                x.iter_mut().for_each(|v| *v /= after);
                return Some(x);
            }
        }
        None
    }

    /// Thick-restart Lanczos on the operator restricted to the orthogonal
    /// complement of `locked`, for the `want` largest-magnitude pairs.
    fn run(&mut self, locked: &[Vec<f64>], want: usize, subspace: usize) -> Outcome {
        let avail = self.n - locked.len();
        let want = want.min(avail);
        let m = subspace.max(want + 1).min(avail);
        let Some(v0) = self.random_orthogonal(locked, &[]) else {
            return Outcome::Converged(Vec::new());
        };

        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(v0);
        let mut t = vec![0.0; m * m];
        let mut w = vec![0.0; self.n];
        let mut anorm: f64 = 0.0;

        loop {
            // expand the basis up to m vectors
            let mut j = basis.len() - 1;
            let (m_eff, beta_m, residual) = loop {
                if self.matvecs >= self.budget {
                    return Outcome::Exhausted {
                        residuals: vec![f64::INFINITY; want],
                    };
                }
                self.op.apply(&basis[j], &mut w);
                self.matvecs += 1;
                let alpha = dot(&basis[j], &w);
                t[j * m + j] = alpha;
                anorm = anorm.max(alpha.abs());
                orthogonalize(&mut w, locked, &basis);
                let beta = norm(&w);
                if j + 1 == m {
                    break (m, beta, w.clone());
                }
                if beta <= 1e-12 * anorm.max(f64::MIN_POSITIVE) {
                    // invariant subspace reached: continue with a fresh direction
                    match self.random_orthogonal(locked, &basis) {
                        Some(v) => basis.push(v),
                        None => break (j + 1, 0.0, vec![0.0; self.n]),
                    }
                } else {
                    anorm = anorm.max(beta);
                    t[j * m + j + 1] = beta;
                    t[(j + 1) * m + j] = beta;
                    basis.push(w.iter().map(|x| x / beta).collect());
                }
                j += 1;
            };

            let projected: Vec<f64> = (0..m_eff)
                .flat_map(|r| t[r * m..r * m + m_eff].to_vec())
                .collect();
            let ritz = match symmetric_eigen(projected, m_eff) {
                Ok(r) => r,
                Err(_) => {
                    return Outcome::Exhausted {
                        residuals: vec![f64::INFINITY; want],
                    }
                }
            };
            let mut order: Vec<usize> = (0..m_eff).collect();
            order.sort_by(|&a, &b| magnitude_order(ritz.values[a], ritz.values[b]));
            let y = |i: usize| &ritz.vectors_t[i * m_eff..(i + 1) * m_eff];
            let scale = order
                .first()
                .map(|&i| ritz.values[i].abs())
                .unwrap_or(0.0)
                .max(f64::MIN_POSITIVE);

            let wanted = want.min(m_eff);
            let rel_residuals: Vec<f64> = order[..wanted]
                .iter()
                .map(|&i| {
                    let r = beta_m * y(i)[m_eff - 1].abs();
                    r / ritz.values[i].abs().max(scale * f64::EPSILON.sqrt())
                })
                .collect();
            let ritz_vector = |i: usize, basis: &[Vec<f64>]| {
                let mut x = vec![0.0; self.n];
                for (coef, v) in y(i).iter().zip(basis) {
                    axpy(*coef, v, &mut x);
                }
                x
            };

            if rel_residuals.iter().all(|&r| r <= self.tol) {
                let pairs = order[..wanted]
                    .iter()
                    .map(|&i| {
                        let mut x = ritz_vector(i, &basis);
                        let nx = norm(&x);
                        x.iter_mut().for_each(|v| *v /= nx);
                        (ritz.values[i], x)
                    })
                    .collect();
                return Outcome::Converged(pairs);
            }
            if self.matvecs >= self.budget {
                return Outcome::Exhausted {
                    residuals: rel_residuals,
                };
            }

            // thick restart: keep the leading Ritz vectors and the residual direction
            let keep = (wanted + (m_eff - wanted) / 2).min(m_eff - 1).max(1);
            let new_basis: Vec<Vec<f64>> = order[..keep].iter().map(|&i| ritz_vector(i, &basis)).collect();
            t.iter_mut().for_each(|x| *x = 0.0);
            for (slot, &i) in order[..keep].iter().enumerate() {
                t[slot * m + slot] = ritz.values[i];
                let coupling = beta_m * y(i)[m_eff - 1];
                t[slot * m + keep] = coupling;
                t[keep * m + slot] = coupling;
            }
            basis = new_basis;
            if beta_m > 0.0 {
                basis.push(residual.iter().map(|x| x / beta_m).collect());
            } else {
                match self.random_orthogonal(locked, &basis) {
                    Some(v) => basis.push(v),
                    None => {
                        return Outcome::Exhausted {
                            residuals: rel_residuals,
                        }
                    }
                }
            }
        }
    }
}
