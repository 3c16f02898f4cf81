//! Partial and full symmetric eigendecompositions.
//!
//! [`top_k_eigenpairs`] computes the K largest-magnitude eigenpairs of a
//! sparse symmetric operator with thick-restart Lanczos. The dense routine
//! [`full_dense_eigendecomposition`] is the whole-spectrum baseline and the
//! oracle the iterative solver is checked against.

mod basis;
mod dense;
mod lanczos;

pub use basis::SpectralBasis;
pub use lanczos::{top_k_eigenpairs, top_k_eigenpairs_with, LanczosOptions};

use ndarray::Array2;

use crate::error::EigenError;

/// Largest `n` accepted by the dense decomposition unless overridden.
pub const DEFAULT_DENSE_LIMIT: usize = 2000;

/// Relative gap below which two magnitudes count as tied.
pub(crate) const MAGNITUDE_TIE: f64 = 1e-12;

/// Orders two eigenvalues by descending magnitude, positive first on exact ties.
pub(crate) fn magnitude_order(a: f64, b: f64) -> std::cmp::Ordering {
    b.abs()
        .partial_cmp(&a.abs())
        .unwrap_or(std::cmp::Ordering::Equal)
        .then(b.partial_cmp(&a).unwrap_or(std::cmp::Ordering::Equal))
}

/// Sorts by descending magnitude, then reorders runs of magnitudes tied to
/// within [`MAGNITUDE_TIE`] so that positive values come first.
pub(crate) fn sort_by_magnitude<T>(items: &mut [T], value: impl Fn(&T) -> f64) {
    items.sort_by(|a, b| magnitude_order(value(a), value(b)));
    let mut start = 0;
    while start < items.len() {
        let lead = value(&items[start]).abs();
        let mut end = start + 1;
        while end < items.len() && lead - value(&items[end]).abs() <= MAGNITUDE_TIE * lead {
            end += 1;
        }
        items[start..end].sort_by(|a, b| {
            let (x, y) = (value(a), value(b));
            (y > 0.0).cmp(&(x > 0.0)).then(magnitude_order(x, y))
        });
        start = end;
    }
}

/// Flips `v` so that its entry of largest magnitude is non-negative. Entries
/// within a relative 1e-10 of the maximum count as ties; the lowest index wins.
pub(crate) fn canonical_sign(v: &mut [f64]) {
    let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let lead = v.iter().position(|x| x.abs() >= peak * (1.0 - 1e-10));
    if lead.is_some_and(|i| v[i] < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// All eigenpairs of a dense symmetric matrix, sorted by descending
/// magnitude, with the default dense limit.
pub fn full_dense_eigendecomposition(s: &Array2<f64>) -> Result<SpectralBasis, EigenError> {
    full_dense_eigendecomposition_with_limit(s, DEFAULT_DENSE_LIMIT)
}

pub fn full_dense_eigendecomposition_with_limit(
    s: &Array2<f64>,
    limit: usize,
) -> Result<SpectralBasis, EigenError> {
    let (rows, cols) = s.dim();
    if rows != cols {
        return Err(EigenError::NotSquare { rows, cols });
    }
    let n = rows;
    if n > limit {
        return Err(EigenError::DenseLimit { n, limit });
    }
    let data: Vec<f64> = s.iter().copied().collect();
    let raw = dense::symmetric_eigen(data, n)?;
    let pairs: Vec<(f64, Vec<f64>)> = raw
        .values
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, raw.vectors_t[i * n..(i + 1) * n].to_vec()))
        .collect();
    let mut basis = SpectralBasis::from_pairs(n, pairs);
    basis.recompute_residuals(s);
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn diagonal_sorted_by_magnitude() {
        let b = full_dense_eigendecomposition(&array![[-5.0, 0.0], [0.0, 4.0]]).unwrap();
        assert_eq!(b.eigenvalues(), &[-5.0, 4.0]);
        assert_eq!(b.eigenvectors()[[0, 0]], 1.0);
        assert_eq!(b.eigenvectors()[[1, 1]], 1.0);
    }

    #[test]
    fn all_ones_rank_one() {
        let b = full_dense_eigendecomposition(&Array2::from_elem((3, 3), 1.0)).unwrap();
        let l = b.eigenvalues();
        assert!((l[0] - 3.0).abs() < 1e-13);
        assert!(l[1].abs() < 1e-13 && l[2].abs() < 1e-13);
        for i in 0..3 {
            assert!((b.eigenvectors()[[i, 0]] - 1.0 / 3f64.sqrt()).abs() < 1e-13);
        }
    }

    #[test]
    fn swap_matrix_ties_break_positive_first() {
        let b = full_dense_eigendecomposition(&array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!((b.eigenvalues()[0] - 1.0).abs() < 1e-14, "{:?}", b.eigenvalues());
        assert!((b.eigenvalues()[1] + 1.0).abs() < 1e-14);
        let h = 1.0 / 2f64.sqrt();
        let p = b.eigenvectors();
        assert!((p[[0, 0]] - h).abs() < 1e-14 && (p[[1, 0]] - h).abs() < 1e-14, "{p:?}");
        // (1, -1)/sqrt2: largest-magnitude tie resolves to index 0, kept positive
        assert!((p[[0, 1]] - h).abs() < 1e-14 && (p[[1, 1]] + h).abs() < 1e-14, "{p:?}");
    }

    #[test]
    fn random_reconstruction() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(50);
        let mut s = Array2::zeros((50, 50));
        for i in 0..50 {
            for j in i..50 {
                let v: f64 = rng.random_range(-1.0..1.0);
                s[[i, j]] = v;
                s[[j, i]] = v;
            }
        }
        let b = full_dense_eigendecomposition(&s).unwrap();
        let p = b.eigenvectors();
        let lam = Array2::from_diag(&ndarray::Array1::from(b.eigenvalues().to_vec()));
        let rec = p.dot(&lam).dot(&p.t());
        let err = (&rec - &s).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err <= 1e-9, "reconstruction error {err}");
        assert!(b.orthonormality_error() <= 1e-12);
        assert!(b.is_magnitude_sorted());
    }

    #[test]
    fn dense_limit_and_shape_errors() {
        let s = Array2::<f64>::eye(5);
        assert!(matches!(
            full_dense_eigendecomposition_with_limit(&s, 4),
            Err(EigenError::DenseLimit { n: 5, limit: 4 })
        ));
        assert!(matches!(
            full_dense_eigendecomposition(&Array2::zeros((2, 3))),
            Err(EigenError::NotSquare { .. })
        ));
    }
}
