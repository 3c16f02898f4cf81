//! Numerical checks of how repeated propagation `Sˡh` aligns a feature
//! channel with the leading eigenvectors of `S`.
//!
//! Projection weights always come from the dense eigendecomposition; the
//! iterative solver is never used to decide a verdict here.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::eigen::{full_dense_eigendecomposition, SpectralBasis};
use crate::error::LemmaError;
use crate::sparse::{dot, norm, LinearOperator};

pub const LEMMA1_TOL: f64 = 1e-6;
pub const LEMMA2_EQUALITY_TOL: f64 = 1e-8;
pub const LEMMA3_SLOPE_TOL: f64 = 1e-3;

/// Bounded number of regenerations when a random instance is unusable.
const MAX_TRIES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaParameters {
    pub n: usize,
    /// `|λ_1| / |λ_next|` where `λ_next` is the first eigenvalue of strictly
    /// smaller magnitude than the leading cluster.
    pub spectral_gap: f64,
    pub l_min: usize,
    pub l_max: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma_id: u8,
    /// `(l, value)` pairs with strictly increasing `l`.
    pub measured: Vec<(usize, f64)>,
    pub predicted: f64,
    pub gap: f64,
    pub tolerance: f64,
    pub parameters: LemmaParameters,
    pub passed: bool,
    /// Lemma-specific quantities (bound sides, margins, fitted slopes).
    pub extras: BTreeMap<String, f64>,
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (norm(a) * norm(b))
}

/// `cos⟨Sˡh, h⟩`, renormalizing the iterate after every product. `None` when
/// the iterate vanishes.
pub fn convolution_similarity(s: &impl LinearOperator, h: &[f64], l: usize) -> Result<Option<f64>, LemmaError> {
    let seq = similarity_sequence(s, h, &[l])?;
    Ok(seq[0].1)
}

/// `cos⟨Sˡh, h⟩` at each requested `l` (ascending), sharing the products.
pub fn similarity_sequence(
    s: &impl LinearOperator,
    h: &[f64],
    ls: &[usize],
) -> Result<Vec<(usize, Option<f64>)>, LemmaError> {
    if norm(h) == 0.0 {
        return Err(LemmaError::ZeroVector);
    }
    if ls.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LemmaError::Invalid("layer counts must be strictly increasing".into()));
    }
    let mut x = h.to_vec();
    let mut y = vec![0.0; h.len()];
    let mut done = 0;
    let mut vanished = false;
    let mut out = Vec::with_capacity(ls.len());
    for &l in ls {
        while done < l && !vanished {
            s.apply(&x, &mut y);
            let r = norm(&y);
            if r == 0.0 {
                vanished = true;
            } else {
                x.iter_mut().zip(&y).for_each(|(a, b)| *a = b / r);
            }
            done += 1;
        }
        out.push((l, if vanished { None } else { Some(cosine(&x, h)) }));
    }
    Ok(out)
}

/// `α_i = hᵀp_i` for every column of `basis`.
pub fn projection_weights(basis: &SpectralBasis, h: &[f64]) -> Result<Vec<f64>, LemmaError> {
    if h.len() != basis.n() {
        return Err(LemmaError::Invalid(format!(
            "vector of length {} against a basis of dimension {}",
            h.len(),
            basis.n()
        )));
    }
    if norm(h) == 0.0 {
        return Err(LemmaError::ZeroVector);
    }
    let p = basis.eigenvectors();
    Ok(p.columns().into_iter().map(|c| c.iter().zip(h).map(|(a, b)| a * b).sum()).collect())
}

fn parseval_error(alpha: &[f64], h: &[f64]) -> f64 {
    let a2: f64 = alpha.iter().map(|a| a * a).sum();
    let h2: f64 = h.iter().map(|v| v * v).sum();
    (a2 - h2).abs() / h2
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Symmetric Gaussian matrix scaled so its bulk spectrum sits in about [−2, 2].
fn wigner(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    let scale = 1.0 / (n as f64).sqrt();
    let mut s = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v: f64 = StandardNormal.sample(rng);
            let v = if i == j { v * std::f64::consts::SQRT_2 } else { v } * scale;
            s[[i, j]] = v;
            s[[j, i]] = v;
        }
    }
    s
}

/// Wigner bulk plus a positive rank-one spike strong enough to push the top
/// eigenvalue to roughly `gap_min` times the bulk edge.
fn spiked_wigner(rng: &mut ChaCha8Rng, n: usize, gap_min: f64) -> Array2<f64> {
    let mut s = wigner(rng, n);
    let mut u = gaussian_vec(rng, n);
    let r = norm(&u);
    u.iter_mut().for_each(|v| *v /= r);
    let theta = 2.0 * gap_min + 1.0;
    for i in 0..n {
        for j in 0..n {
            s[[i, j]] += theta * u[i] * u[j];
        }
    }
    s
}

/// Orthonormal n x n matrix from Gram-Schmidt (two passes) on Gaussian columns.
fn random_orthonormal(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v = gaussian_vec(rng, n);
        for _ in 0..2 {
            for c in &cols {
                let d = dot(c, &v);
                v.iter_mut().zip(c).for_each(|(a, b)| *a -= d * b);
            }
        }
        let r = norm(&v);
        if r > 1e-8 {
            v.iter_mut().for_each(|a| *a /= r);
            cols.push(v);
        }
    }
    Array2::from_shape_fn((n, n), |(i, j)| cols[j][i])
}

/// `P diag(λ) Pᵀ`.
fn compose(p: &Array2<f64>, lambda: &[f64]) -> Array2<f64> {
    let scaled = Array2::from_shape_fn(p.dim(), |(i, j)| p[[i, j]] * lambda[j]);
    scaled.dot(&p.t())
}

/// Ratio of the leading magnitude to the first strictly smaller one.
fn leading_gap(values: &[f64]) -> f64 {
    let top = values[0].abs();
    values
        .iter()
        .map(|v| v.abs())
        .find(|&v| v < top * (1.0 - 1e-9))
        .map_or(f64::INFINITY, |next| top / next)
}

/// Checks `cos⟨Sˡh, h⟩ → cos⟨h, p_1⟩` on an explicit matrix and vector.
///
/// The sign of an eigenvector is arbitrary, so the limit is compared with
/// `|α_1| / ‖α‖`, which is the value the sequence actually approaches when
/// `λ_1 > 0`.
pub fn lemma1_on(s: &Array2<f64>, h: &[f64], l_max: usize, seed: u64) -> Result<LemmaReport, LemmaError> {
    let oracle = full_dense_eigendecomposition(s)?;
    let alpha = projection_weights(&oracle, h)?;
    if alpha[0] == 0.0 {
        return Err(LemmaError::VanishingWeight);
    }
    let lambda = oracle.eigenvalues();
    let total = alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
    let predicted = alpha[0].abs() / total;

    let ls: Vec<usize> = (0..=l_max).collect();
    let measured: Vec<(usize, f64)> = similarity_sequence(s, h, &ls)?
        .into_iter()
        .map(|(l, v)| (l, v.unwrap_or(f64::NAN)))
        .collect();
    let last = measured.last().expect("l range is non-empty").1;
    let gap = (last - predicted).abs();

    let mut extras = BTreeMap::new();
    extras.insert("lambda_1".into(), lambda[0]);
    extras.insert("alpha_1".into(), alpha[0]);
    extras.insert("parseval_error".into(), parseval_error(&alpha, h));
    Ok(LemmaReport {
        lemma_id: 1,
        measured,
        predicted,
        gap,
        tolerance: LEMMA1_TOL,
        parameters: LemmaParameters {
            n: s.nrows(),
            spectral_gap: leading_gap(lambda),
            l_min: 0,
            l_max,
            seed,
        },
        passed: gap <= LEMMA1_TOL && lambda[0] > 0.0,
        extras,
    })
}

/// Random spiked symmetric matrix with `λ_1 > 0` and `|λ_1|/|λ_2| ≥ gap_min`,
/// random Gaussian `h`, sequence up to `l_max`.
pub fn verify_lemma1(n: usize, gap_min: f64, l_max: usize, seed: u64) -> Result<LemmaReport, LemmaError> {
    if n < 2 || !(gap_min > 1.0) {
        return Err(LemmaError::Invalid("need n >= 2 and gap_min > 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_TRIES {
        let s = spiked_wigner(&mut rng, n, gap_min);
        let h = gaussian_vec(&mut rng, n);
        let oracle = full_dense_eigendecomposition(&s)?;
        let lambda = oracle.eigenvalues();
        if lambda[0] <= 0.0 || leading_gap(lambda) < gap_min {
            continue;
        }
        let alpha1 = projection_weights(&oracle, &h)?[0];
        if alpha1.abs() < 1e-8 * norm(&h) {
            continue;
        }
        return lemma1_on(&s, &h, l_max, seed);
    }
    Err(LemmaError::GapTooSmall { gap_min, tries: MAX_TRIES })
}

/// Both sides of the degenerate-top bound for one vector.
struct Lemma2Sides {
    limit: f64,
    bound: f64,
}

fn lemma2_sides(alpha: &[f64], j: usize) -> Lemma2Sides {
    let total = alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
    let top = alpha[..j].iter().map(|a| a * a).sum::<f64>().sqrt();
    let sum: f64 = alpha[..j].iter().sum();
    Lemma2Sides {
        limit: top / total,
        bound: sum / ((j as f64).sqrt() * total),
    }
}

/// Constructs `S = PΛPᵀ` with a `j`-fold top eigenvalue 1 and the rest of the
/// spectrum in (−0.8, 0.8), then checks the bound for a random `h` and the
/// equality case where all top projection weights coincide.
pub fn verify_lemma2(n: usize, j: usize, l_max: usize, seed: u64) -> Result<LemmaReport, LemmaError> {
    if j == 0 || j >= n {
        return Err(LemmaError::Invalid(format!("degeneracy {j} must lie in [1, n) for n = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_orthonormal(&mut rng, n);
    let lambda: Vec<f64> = (0..n)
        .map(|i| if i < j { 1.0 } else { rng.random_range(-0.8..0.8) })
        .collect();
    let s = compose(&p, &lambda);
    let oracle = full_dense_eigendecomposition(&s)?;
    let values = oracle.eigenvalues();

    let h = gaussian_vec(&mut rng, n);
    let alpha = projection_weights(&oracle, &h)?;
    let sides = lemma2_sides(&alpha, j);

    // equality case: equal weight on each oracle top vector plus noise
    // orthogonal to the whole top eigenspace
    let q = oracle.eigenvectors();
    let mut noise = gaussian_vec(&mut rng, n);
    for _ in 0..2 {
        for c in 0..j {
            let col = q.column(c);
            let d: f64 = col.iter().zip(&noise).map(|(a, b)| a * b).sum();
            noise.iter_mut().zip(col).for_each(|(x, v)| *x -= d * v);
        }
    }
    let noise_scale = 0.5 / norm(&noise);
    let inv_sqrt_j = 1.0 / (j as f64).sqrt();
    let h_eq: Vec<f64> = (0..n)
        .map(|r| (0..j).map(|c| q[[r, c]]).sum::<f64>() * inv_sqrt_j + noise_scale * noise[r])
        .collect();
    let alpha_eq = projection_weights(&oracle, &h_eq)?;
    let eq = lemma2_sides(&alpha_eq, j);
    let equality_gap = (eq.limit - eq.bound).abs();

    let ls: Vec<usize> = (0..=l_max).collect();
    let measured: Vec<(usize, f64)> = similarity_sequence(&s, &h, &ls)?
        .into_iter()
        .map(|(l, v)| (l, v.unwrap_or(f64::NAN)))
        .collect();
    let last = measured.last().expect("l range is non-empty").1;
    let gap = (last - sides.limit).abs();
    let margin = sides.limit - sides.bound;

    let mut extras = BTreeMap::new();
    extras.insert("j".into(), j as f64);
    extras.insert("bound".into(), sides.bound);
    extras.insert("margin".into(), margin);
    extras.insert("equality_limit".into(), eq.limit);
    extras.insert("equality_bound".into(), eq.bound);
    extras.insert("equality_gap".into(), equality_gap);
    extras.insert("parseval_error".into(), parseval_error(&alpha, &h));
    Ok(LemmaReport {
        lemma_id: 2,
        measured,
        predicted: sides.limit,
        gap,
        tolerance: LEMMA1_TOL,
        parameters: LemmaParameters {
            n,
            spectral_gap: leading_gap(values),
            l_min: 0,
            l_max,
            seed,
        },
        passed: margin >= 0.0 && gap <= LEMMA1_TOL && equality_gap <= LEMMA2_EQUALITY_TOL,
        extras,
    })
}

/// Least-squares slope of `ys` against `xs`.
pub fn fitted_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Share of `p_i` in the expansion of `cos⟨Sˡh, h⟩`:
/// `α_i²(λ_i/λ_1)ˡ / Σ_m α_m²(λ_m/λ_1)ˡ`.
pub fn contribution(alpha: &[f64], lambda: &[f64], i: usize, l: usize) -> f64 {
    let term = |m: usize| alpha[m] * alpha[m] * (lambda[m] / lambda[0]).powi(l as i32);
    term(i) / (0..alpha.len()).map(term).sum::<f64>()
}

/// Measures the decay of eigenvector `i`'s term `α_i²(λ_i/λ_1)ˡ` by power
/// iteration on `S` and fits its log against `l`.
///
/// The term is observed as `α_i · p_iᵀSˡh / λ_1ˡ`, with `Sˡh` carried as a
/// unit vector plus an accumulated log-scale.
pub fn lemma3_on(
    s: &Array2<f64>,
    h: &[f64],
    i: usize,
    l_range: (usize, usize),
    seed: u64,
) -> Result<LemmaReport, LemmaError> {
    let (l_min, l_max) = l_range;
    if l_max < l_min + 1 {
        return Err(LemmaError::Invalid("the l range needs at least two points".into()));
    }
    let oracle = full_dense_eigendecomposition(s)?;
    if i >= oracle.k() {
        return Err(LemmaError::Invalid(format!("index {i} out of range")));
    }
    let alpha = projection_weights(&oracle, h)?;
    if alpha[i].abs() < 1e-8 * norm(h) {
        return Err(LemmaError::VanishingWeight);
    }
    let lambda = oracle.eigenvalues();
    let p_i: Vec<f64> = oracle.eigenvectors().column(i).to_vec();
    let log_l1 = lambda[0].abs().ln();

    let n = h.len();
    let r0 = norm(h);
    let mut x: Vec<f64> = h.iter().map(|v| v / r0).collect();
    let mut log_scale = r0.ln();
    let mut y = vec![0.0; n];
    let mut measured = Vec::with_capacity(l_max - l_min + 1);
    for l in 0..=l_max {
        if l > 0 {
            s.apply(&x, &mut y);
            let r = norm(&y);
            if r == 0.0 {
                return Err(LemmaError::Invalid("iterate vanished".into()));
            }
            x.iter_mut().zip(&y).for_each(|(a, b)| *a = b / r);
            log_scale += r.ln();
        }
        if l >= l_min {
            let component = dot(&p_i, &x).abs();
            let value = alpha[i].abs().ln() + component.ln() + log_scale - l as f64 * log_l1;
            measured.push((l, value));
        }
    }
    let xs: Vec<f64> = measured.iter().map(|m| m.0 as f64).collect();
    let ys: Vec<f64> = measured.iter().map(|m| m.1).collect();
    let slope = fitted_slope(&xs, &ys);
    let predicted = (lambda[i] / lambda[0]).abs().ln();
    let gap = (slope - predicted).abs();

    let mut extras = BTreeMap::new();
    extras.insert("index".into(), i as f64);
    extras.insert("fitted_slope".into(), slope);
    extras.insert("lambda_1".into(), lambda[0]);
    extras.insert("lambda_i".into(), lambda[i]);
    extras.insert("contribution_at_l_min".into(), contribution(&alpha, lambda, i, l_min));
    extras.insert("contribution_at_l_max".into(), contribution(&alpha, lambda, i, l_max));
    extras.insert("parseval_error".into(), parseval_error(&alpha, h));
    Ok(LemmaReport {
        lemma_id: 3,
        measured,
        predicted,
        gap,
        tolerance: LEMMA3_SLOPE_TOL,
        parameters: LemmaParameters {
            n: s.nrows(),
            spectral_gap: leading_gap(lambda),
            l_min,
            l_max,
            seed,
        },
        passed: gap <= LEMMA3_SLOPE_TOL,
        extras,
    })
}

/// Random spiked matrix, non-principal index 1 (second-largest magnitude).
pub fn verify_lemma3(n: usize, l_range: (usize, usize), seed: u64) -> Result<LemmaReport, LemmaError> {
    if n < 2 {
        return Err(LemmaError::Invalid("need n >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_TRIES {
        let s = spiked_wigner(&mut rng, n, 1.5);
        let oracle = full_dense_eigendecomposition(&s)?;
        let lambda = oracle.eigenvalues();
        if lambda[0] <= 0.0 || lambda[1].abs() >= lambda[0].abs() * (1.0 - 1e-9) {
            continue;
        }
        for _ in 0..MAX_TRIES {
            let h = gaussian_vec(&mut rng, n);
            match lemma3_on(&s, &h, 1, l_range, seed) {
                Err(LemmaError::VanishingWeight) => continue,
                other => return other,
            }
        }
    }
    Err(LemmaError::GapTooSmall { gap_min: 1.0, tries: MAX_TRIES })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn similarity_base_cases() {
        let swap = array![[0.0, 1.0], [1.0, 0.0]];
        assert_eq!(convolution_similarity(&swap, &[1.0, 0.0], 0).unwrap(), Some(1.0));
        assert_eq!(convolution_similarity(&swap, &[1.0, 0.0], 1).unwrap(), Some(0.0));
        let eye = Array2::<f64>::eye(4);
        for l in [1, 5, 17] {
            let c = convolution_similarity(&eye, &[0.3, -1.0, 2.0, 0.5], l).unwrap().unwrap();
            assert!((c - 1.0).abs() < 1e-15);
        }
        let zero = Array2::<f64>::zeros((2, 2));
        assert_eq!(convolution_similarity(&zero, &[1.0, 1.0], 3).unwrap(), None);
        assert!(matches!(convolution_similarity(&eye, &[0.0; 4], 1), Err(LemmaError::ZeroVector)));
    }

    #[test]
    fn projection_weights_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = wigner(&mut rng, 50);
        let basis = full_dense_eigendecomposition(&s).unwrap();
        let p = basis.eigenvectors();

        let p3: Vec<f64> = p.column(2).iter().map(|v| 2.5 * v).collect();
        let a = projection_weights(&basis, &p3).unwrap();
        for (i, v) in a.iter().enumerate() {
            let want = if i == 2 { 2.5 } else { 0.0 };
            assert!((v - want).abs() < 1e-12);
        }

        let h = gaussian_vec(&mut rng, 50);
        let a = projection_weights(&basis, &h).unwrap();
        assert!(parseval_error(&a, &h) < 1e-9);
        for r in 0..50 {
            let rec: f64 = (0..50).map(|i| a[i] * p[[r, i]]).sum();
            assert!((rec - h[r]).abs() < 1e-10);
        }

        let mut perp = h.clone();
        let d: f64 = p.column(0).iter().zip(&h).map(|(x, y)| x * y).sum();
        perp.iter_mut().zip(p.column(0)).for_each(|(x, v)| *x -= d * v);
        assert!(projection_weights(&basis, &perp).unwrap()[0].abs() < 1e-12);
    }

    #[test]
    fn eigenvector_input_stays_aligned() {
        let s = array![[2.0, 0.0], [0.0, 1.0]];
        let seq = similarity_sequence(&s, &[1.0, 0.0], &[0, 1, 10, 100]).unwrap();
        assert!(seq.iter().all(|(_, v)| *v == Some(1.0)));
    }

    #[test]
    fn random_lemma1_instance_passes() {
        let r = verify_lemma1(100, 1.5, 200, 7).unwrap();
        assert!(r.passed, "{:?}", r.gap);
        assert!(r.parameters.spectral_gap >= 1.5);
        assert!(r.extras["parseval_error"] < 1e-9);
        assert!(r.measured.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn lemma2_single_degeneracy_is_tight() {
        let r = verify_lemma2(30, 1, 200, 1).unwrap();
        assert!(r.passed);
        // with j = 1 both sides equal |α_1| / ‖α‖ up to the sign of α_1
        assert!(r.extras["margin"] < 1e-12 || (r.extras["bound"] + r.predicted).abs() < 1e-12);
    }

    #[test]
    fn lemma3_on_two_by_two() {
        let s = array![[2.0, 0.0], [0.0, 1.0]];
        let r = lemma3_on(&s, &[1.0, 1.0], 1, (0, 20), 0).unwrap();
        assert!((r.extras["fitted_slope"] - 0.5f64.ln()).abs() < 1e-12);
        assert!(r.passed);
        // a tied ratio does not decay
        let tied = array![[1.0, 0.0], [0.0, 1.0]];
        let r = lemma3_on(&tied, &[1.0, 2.0], 1, (0, 20), 0).unwrap();
        assert!(r.extras["fitted_slope"].abs() < 1e-12);
    }

    #[test]
    fn slope_fit_of_a_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.25 * x).collect();
        assert!((fitted_slope(&xs, &ys) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn contributions_sum_to_one() {
        let alpha = [0.5, -0.3, 0.8];
        let lambda = [2.0, 1.5, -0.5];
        let total: f64 = (0..3).map(|i| contribution(&alpha, &lambda, i, 6)).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn power_of_two_scaling_is_exact(seed in any::<u64>(), k in -20i32..20, l in 0usize..30) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = wigner(&mut rng, 12);
            let h = gaussian_vec(&mut rng, 12);
            let c = 2f64.powi(k);
            let scaled: Vec<f64> = h.iter().map(|v| c * v).collect();
            prop_assert_eq!(convolution_similarity(&s, &h, l).unwrap(), convolution_similarity(&s, &scaled, l).unwrap());
        }

        #[test]
        fn positive_scaling_is_invariant(seed in any::<u64>(), c in 1e-3f64..1e3, l in 0usize..30) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = wigner(&mut rng, 12);
            let h = gaussian_vec(&mut rng, 12);
            let scaled: Vec<f64> = h.iter().map(|v| c * v).collect();
            let a = convolution_similarity(&s, &h, l).unwrap().unwrap();
            let b = convolution_similarity(&s, &scaled, l).unwrap().unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}
