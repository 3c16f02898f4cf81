//! Dense symmetric eigendecomposition: Householder reduction to tridiagonal
//! form followed by the implicit QL iteration with Wilkinson-style shifts.
//!
//! Matrices are row-major `Vec<f64>`. Eigenvectors are accumulated as the
//! rows of the transposed eigenvector matrix so that every Givens rotation
//! touches two contiguous rows.

use crate::error::EigenError;

/// Unsorted eigenpairs of a symmetric matrix.
pub(crate) struct RawEigen {
    pub values: Vec<f64>,
    /// Row `i` holds the unit eigenvector of `values[i]`.
    pub vectors_t: Vec<f64>,
}

/// Reduces the symmetric matrix `a` (row-major, n x n, overwritten) to
/// tridiagonal form `Qᵀ A Q = T`. Returns `(diag, offdiag, Qᵀ)` where
/// `offdiag[i]` couples `i` and `i + 1`.
fn tridiagonalize(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    let mut reflectors: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n.saturating_sub(2));
    let mut p = vec![0.0; n];

    for k in 0..n.saturating_sub(2) {
        diag[k] = a[k * n + k];
        let start = k + 1;
        let m = n - start;
        // column k below the diagonal equals row k right of it
        let x = &a[k * n + start..k * n + n];
        let tail_sq: f64 = x[1..].iter().map(|v| v * v).sum();
        if tail_sq == 0.0 {
            off[k] = x[0];
            reflectors.push((Vec::new(), 0.0));
            continue;
        }
        let norm = (x[0] * x[0] + tail_sq).sqrt();
        let alpha = if x[0] > 0.0 { -norm } else { norm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vtv = v[0] * v[0] + tail_sq;
        let tau = 2.0 / vtv;
        off[k] = alpha;

        // p = tau * B v on the trailing block
        for i in 0..m {
            let row = &a[(start + i) * n + start..(start + i) * n + n];
            p[i] = tau * row.iter().zip(&v).map(|(r, vi)| r * vi).sum::<f64>();
        }
        let kfac = 0.5 * tau * p[..m].iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..m {
            p[i] -= kfac * v[i];
        }
        // B -= v wᵀ + w vᵀ
        for i in 0..m {
            let (vi, wi) = (v[i], p[i]);
            let row = &mut a[(start + i) * n + start..(start + i) * n + n];
            for ((r, &vj), &wj) in row.iter_mut().zip(&v).zip(&p[..m]) {
                *r -= vi * wj + wi * vj;
            }
        }
        reflectors.push((v, tau));
    }
    if n >= 2 {
        diag[n - 2] = a[(n - 2) * n + n - 2];
        diag[n - 1] = a[(n - 1) * n + n - 1];
        off[n - 2] = a[(n - 2) * n + n - 1];
    } else if n == 1 {
        diag[0] = a[0];
    }

    // Qᵀ = H_{n-3} ... H_0, built right-to-left so each step only touches
    // the trailing block that is not yet identity.
    let mut qt = vec![0.0; n * n];
    for i in 0..n {
        qt[i * n + i] = 1.0;
    }
    let mut mv = vec![0.0; n];
    for (k, (v, tau)) in reflectors.iter().enumerate().rev() {
        if *tau == 0.0 {
            continue;
        }
        let start = k + 1;
        let m = n - start;
        for i in 0..m {
            let row = &qt[(start + i) * n + start..(start + i) * n + n];
            mv[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        for i in 0..m {
            let f = tau * mv[i];
            let row = &mut qt[(start + i) * n + start..(start + i) * n + n];
            for (r, &vj) in row.iter_mut().zip(v) {
                *r -= f * vj;
            }
        }
    }
    (diag, off, qt)
}

/// Implicit QL on the tridiagonal `(d, e)`, rotating the rows of `vt`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], vt: &mut [f64], n: usize) -> Result<(), EigenError> {
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(EigenError::QlFailure(l));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (lo, hi) = vt.split_at_mut((i + 1) * n);
                    let row_i = &mut lo[i * n..];
                    let row_next = &mut hi[..n];
                    for (a, b) in row_i.iter_mut().zip(row_next.iter_mut()) {
                        let (x, y) = (*a, *b);
                        *b = s * x + c * y;
                        *a = c * x - s * y;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// All eigenpairs of the symmetric row-major matrix `a` (n x n).
pub(crate) fn symmetric_eigen(mut a: Vec<f64>, n: usize) -> Result<RawEigen, EigenError> {
    let (mut d, mut e, mut qt) = tridiagonalize(&mut a, n);
    tridiagonal_ql(&mut d, &mut e, &mut qt, n)?;
    Ok(RawEigen {
        values: d,
        vectors_t: qt,
    })
}
