use std::io::{Read, Write};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{canonical_sign, sort_by_magnitude, MAGNITUDE_TIE};
use crate::error::EigenError;
use crate::graph::OperatorMode;
use crate::sparse::LinearOperator;

const MAGIC: &[u8; 4] = b"FSB1";

/// K eigenpairs sorted by descending |λ|, with unit-norm eigenvector columns
/// under a fixed sign convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralBasis {
    eigenvalues: Vec<f64>,
    eigenvectors: Array2<f64>,
    /// `‖S p_i − λ_i p_i‖` per pair. Empty when read from the binary
    /// container, which does not store them.
    residuals: Vec<f64>,
    /// Operator the basis was computed from, when known.
    #[serde(default)]
    operator: Option<OperatorMode>,
}

impl SpectralBasis {
    /// Sorts pairs by magnitude and canonicalizes eigenvector signs.
    pub(crate) fn from_pairs(n: usize, mut pairs: Vec<(f64, Vec<f64>)>) -> Self {
        sort_by_magnitude(&mut pairs, |p| p.0);
        let k = pairs.len();
        let mut eigenvectors = Array2::zeros((n, k));
        let mut eigenvalues = Vec::with_capacity(k);
        for (j, (lambda, mut v)) in pairs.into_iter().enumerate() {
            canonical_sign(&mut v);
            eigenvectors.column_mut(j).assign(&Array1::from(v));
            eigenvalues.push(lambda);
        }
        Self {
            eigenvalues,
            eigenvectors,
            residuals: vec![0.0; k],
            operator: None,
        }
    }

    /// Assembles a basis from parts, checking shapes.
    pub fn new(
        eigenvalues: Vec<f64>,
        eigenvectors: Array2<f64>,
        residuals: Vec<f64>,
    ) -> Result<Self, EigenError> {
        if eigenvectors.ncols() != eigenvalues.len()
            || !(residuals.is_empty() || residuals.len() == eigenvalues.len())
        {
            return Err(EigenError::Format("eigenvalue/eigenvector count mismatch".into()));
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
            residuals,
            operator: None,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// The n x K matrix P.
    pub fn eigenvectors(&self) -> &Array2<f64> {
        &self.eigenvectors
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn operator(&self) -> Option<OperatorMode> {
        self.operator
    }

    pub fn with_operator(mut self, mode: OperatorMode) -> Self {
        self.operator = Some(mode);
        self
    }

    pub fn n(&self) -> usize {
        self.eigenvectors.nrows()
    }

    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Keeps the leading `k` pairs.
    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.k());
        Self {
            eigenvalues: self.eigenvalues[..k].to_vec(),
            eigenvectors: self.eigenvectors.slice(ndarray::s![.., ..k]).to_owned(),
            residuals: self.residuals.iter().take(k).copied().collect(),
            operator: self.operator,
        }
    }

    pub fn recompute_residuals(&mut self, op: &impl LinearOperator) {
        let n = self.n();
        let mut y = vec![0.0; n];
        self.residuals = (0..self.k())
            .map(|j| {
                let p = self.eigenvectors.column(j).to_vec();
                op.apply(&p, &mut y);
                y.iter()
                    .zip(&p)
                    .map(|(a, b)| (a - self.eigenvalues[j] * b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
    }

    /// `‖PᵀP − I‖_max`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.eigenvectors.t().dot(&self.eigenvectors);
        let mut worst: f64 = 0.0;
        for ((i, j), v) in g.indexed_iter() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
        worst
    }

    /// Descending magnitude, allowing the tie slack used when ordering.
    pub fn is_magnitude_sorted(&self) -> bool {
        self.eigenvalues
            .windows(2)
            .all(|w| w[0].abs() >= w[1].abs() * (1.0 - MAGNITUDE_TIE))
    }

    /// Writes the `FSB1` container: magic, n and K as little-endian u64, the
    /// K eigenvalues, then the eigenvectors column-major, all as f64 LE.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<(), EigenError> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.n() as u64).to_le_bytes())?;
        w.write_all(&(self.k() as u64).to_le_bytes())?;
        for v in &self.eigenvalues {
            w.write_all(&v.to_le_bytes())?;
        }
        for col in self.eigenvectors.columns() {
            for v in col {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(20 + 8 * self.k() * (self.n() + 1));
        self.write_binary(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self, EigenError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(EigenError::Format(format!("bad magic {magic:?}")));
        }
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let n = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let k = u64::from_le_bytes(word) as usize;
        if k > n {
            return Err(EigenError::Format(format!("K = {k} exceeds n = {n}")));
        }
        let mut read_f64 = |r: &mut R| -> Result<f64, EigenError> {
            r.read_exact(&mut word)?;
            Ok(f64::from_le_bytes(word))
        };
        let eigenvalues = (0..k).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>, _>>()?;
        let mut eigenvectors = Array2::zeros((n, k));
        for j in 0..k {
            for i in 0..n {
                eigenvectors[[i, j]] = read_f64(&mut r)?;
            }
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
            residuals: Vec::new(),
            operator: None,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("basis serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, EigenError> {
        serde_json::from_str(text).map_err(|e| EigenError::Format(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn sample() -> SpectralBasis {
        let h = 1.0 / 2f64.sqrt();
        SpectralBasis::new(vec![1.0, -1.0], array![[h, h], [h, -h]], vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn binary_layout_is_exact() {
        let b = sample();
        let bytes = b.to_binary();
        assert_eq!(&bytes[..4], b"FSB1");
        assert_eq!(u64::from_le_bytes(bytes[4..12].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[12..20].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(bytes[20..28].try_into().unwrap()), 1.0);
        assert_eq!(f64::from_le_bytes(bytes[28..36].try_into().unwrap()), -1.0);
        // column-major: second column starts after the first column's two entries
        let h = 1.0 / 2f64.sqrt();
        assert_eq!(f64::from_le_bytes(bytes[52..60].try_into().unwrap()), h);
        assert_eq!(f64::from_le_bytes(bytes[60..68].try_into().unwrap()), -h);
        assert_eq!(bytes.len(), 20 + 8 * 2 + 8 * 4);

        let back = SpectralBasis::read_binary(bytes.as_slice()).unwrap();
        assert_eq!(back.eigenvalues(), b.eigenvalues());
        assert_eq!(back.eigenvectors(), b.eigenvectors());
    }

    #[test]
    fn bad_magic_rejected() {
        let mut bytes = sample().to_binary();
        bytes[0] = b'X';
        assert!(SpectralBasis::read_binary(bytes.as_slice()).is_err());
        assert!(SpectralBasis::read_binary(&bytes[..10]).is_err());
    }

    #[test]
    fn json_round_trip_keeps_operator() {
        let b = sample().with_operator(OperatorMode::SymNormalized);
        let back = SpectralBasis::from_json(&b.to_json()).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn truncation_keeps_leading_pairs() {
        let t = sample().truncated(1);
        assert_eq!(t.k(), 1);
        assert_eq!(t.eigenvalues(), &[1.0]);
        assert_eq!(t.eigenvectors().dim(), (2, 1));
    }
}
