//! Utility and group-fairness metrics over a node mask.
//!
//! Conditional rates that are undefined on the mask (an empty sensitive group,
//! or a group without positive labels) come back as `None` instead of zero.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::MetricError;

/// Argmax over the two logit columns; exact ties go to class 0.
pub fn predict(logits: &Array2<f64>) -> Vec<u8> {
    logits
        .rows()
        .into_iter()
        .map(|r| u8::from(r[1] > r[0]))
        .collect()
}

fn check_lengths(n: usize, others: &[(&str, usize)]) -> Result<(), MetricError> {
    for (name, len) in others {
        if *len != n {
            return Err(MetricError::Length(format!("{name} has length {len}, expected {n}")));
        }
    }
    Ok(())
}

pub fn accuracy(pred: &[u8], labels: &[u8], mask: &[bool]) -> Result<f64, MetricError> {
    check_lengths(pred.len(), &[("labels", labels.len()), ("mask", mask.len())])?;
    let (mut hit, mut total) = (0usize, 0usize);
    for i in (0..pred.len()).filter(|&i| mask[i]) {
        total += 1;
        hit += usize::from(pred[i] == labels[i]);
    }
    if total == 0 {
        return Err(MetricError::EmptyMask);
    }
    Ok(hit as f64 / total as f64)
}

/// Positive-prediction rate among masked nodes passing `keep`, per sensitive group.
fn group_rates(
    pred: &[u8],
    s: &[u8],
    mask: &[bool],
    keep: impl Fn(usize) -> bool,
) -> Option<f64> {
    let mut pos = [0usize; 2];
    let mut count = [0usize; 2];
    for i in (0..pred.len()).filter(|&i| mask[i] && keep(i)) {
        let g = usize::from(s[i]);
        count[g] += 1;
        pos[g] += usize::from(pred[i]);
    }
    if count[0] == 0 || count[1] == 0 {
        return None;
    }
    Some((pos[0] as f64 / count[0] as f64 - pos[1] as f64 / count[1] as f64).abs())
}

/// `|P(ŷ=1 | s=0) − P(ŷ=1 | s=1)|` over the mask; `None` when a group is empty.
pub fn delta_sp(pred: &[u8], s: &[u8], mask: &[bool]) -> Result<Option<f64>, MetricError> {
    check_lengths(pred.len(), &[("sensitive", s.len()), ("mask", mask.len())])?;
    Ok(group_rates(pred, s, mask, |_| true))
}

/// `|P(ŷ=1 | y=1, s=0) − P(ŷ=1 | y=1, s=1)|` over the mask; `None` when a
/// group has no positive labels.
pub fn delta_eo(
    pred: &[u8],
    labels: &[u8],
    s: &[u8],
    mask: &[bool],
) -> Result<Option<f64>, MetricError> {
    check_lengths(
        pred.len(),
        &[("labels", labels.len()), ("sensitive", s.len()), ("mask", mask.len())],
    )?;
    Ok(group_rates(pred, s, mask, |i| labels[i] == 1))
}

/// Node counts per `(s, y, ŷ)` cell, indexed `[s][y][ŷ]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCounts(pub [[[usize; 2]; 2]; 2]);

impl GroupCounts {
    pub fn total(&self) -> usize {
        self.0.iter().flatten().flatten().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub accuracy: f64,
    pub delta_sp: Option<f64>,
    pub delta_eo: Option<f64>,
    pub group_counts: GroupCounts,
    pub mask_used: String,
}

pub fn fairness_report(
    pred: &[u8],
    labels: &[u8],
    s: &[u8],
    mask: &[bool],
    mask_name: &str,
) -> Result<FairnessReport, MetricError> {
    let accuracy = accuracy(pred, labels, mask)?;
    let delta_sp = delta_sp(pred, s, mask)?;
    let delta_eo = delta_eo(pred, labels, s, mask)?;
    let mut counts = GroupCounts::default();
    for i in (0..pred.len()).filter(|&i| mask[i]) {
        counts.0[usize::from(s[i])][usize::from(labels[i])][usize::from(pred[i])] += 1;
    }
    Ok(FairnessReport {
        accuracy,
        delta_sp,
        delta_eo,
        group_counts: counts,
        mask_used: mask_name.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn argmax_with_tie_to_zero() {
        assert_eq!(predict(&array![[0.2, 0.9], [0.5, 0.5], [3.0, -1.0]]), vec![1, 0, 0]);
    }

    #[test]
    fn statistical_parity_cases() {
        let all = [true; 6];
        let s = [0, 0, 0, 1, 1, 1];
        assert_eq!(delta_sp(&[1; 6], &s, &all).unwrap(), Some(0.0));
        assert_eq!(delta_sp(&s, &s, &all).unwrap(), Some(1.0));
        let d = delta_sp(&[1, 0, 0, 1, 1, 0], &s, &all).unwrap().unwrap();
        assert!((d - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(delta_sp(&[1; 3], &[0; 3], &[true; 3]).unwrap(), None);
    }

    #[test]
    fn equal_opportunity_cases() {
        let y = [1, 1, 1, 1];
        let s = [0, 0, 1, 1];
        let all = [true; 4];
        assert_eq!(delta_eo(&y, &y, &s, &all).unwrap(), Some(0.0));
        assert_eq!(delta_eo(&[0; 4], &y, &s, &all).unwrap(), Some(0.0));
        assert_eq!(delta_eo(&[1, 0, 1, 1], &y, &s, &all).unwrap(), Some(0.5));
        // group s=1 has no positives
        assert_eq!(delta_eo(&[1; 4], &[1, 1, 0, 0], &s, &all).unwrap(), None);
    }

    #[test]
    fn accuracy_cases() {
        let all = [true; 4];
        assert_eq!(accuracy(&[0, 1, 1, 0], &[0, 1, 1, 0], &all).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 0, 0, 1], &[0, 1, 1, 0], &all).unwrap(), 0.0);
        assert_eq!(accuracy(&[0, 1, 1, 1], &[0, 1, 1, 0], &all).unwrap(), 0.75);
        assert_eq!(accuracy(&[0], &[0], &[false]), Err(MetricError::EmptyMask));
        assert!(matches!(accuracy(&[0], &[0, 1], &[true]), Err(MetricError::Length(_))));
    }

    #[test]
    fn report_counts_cover_mask() {
        let r = fairness_report(&[1, 0, 1, 1], &[1, 1, 0, 1], &[0, 0, 1, 1], &[true, true, true, false], "test")
            .unwrap();
        assert_eq!(r.group_counts.total(), 3);
        assert_eq!(r.group_counts.0[0][1][1], 1);
        assert_eq!(r.group_counts.0[1][0][1], 1);
        // s=1 has no positive label inside the mask
        assert_eq!(r.delta_eo, None);
        let back: FairnessReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    fn case() -> impl Strategy<Value = (Vec<u8>, Vec<u8>, Vec<u8>, Vec<bool>)> {
        (1usize..40).prop_flat_map(|n| {
            (
                proptest::collection::vec(0u8..2, n),
                proptest::collection::vec(0u8..2, n),
                proptest::collection::vec(0u8..2, n),
                proptest::collection::vec(any::<bool>(), n),
            )
        })
    }

    proptest! {
        #[test]
        fn flipping_sensitive_groups_changes_nothing((p, y, s, m) in case()) {
            let flipped: Vec<u8> = s.iter().map(|v| 1 - v).collect();
            prop_assert_eq!(delta_sp(&p, &s, &m).unwrap(), delta_sp(&p, &flipped, &m).unwrap());
            prop_assert_eq!(delta_eo(&p, &y, &s, &m).unwrap(), delta_eo(&p, &y, &flipped, &m).unwrap());
        }

        #[test]
        fn parity_ignores_node_order((p, _y, s, m) in case(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut order: Vec<usize> = (0..p.len()).collect();
            order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let pick = |v: &[u8]| order.iter().map(|&i| v[i]).collect::<Vec<_>>();
            let mp: Vec<bool> = order.iter().map(|&i| m[i]).collect();
            prop_assert_eq!(delta_sp(&p, &s, &m).unwrap(), delta_sp(&pick(&p), &pick(&s), &mp).unwrap());
        }

        #[test]
        fn fractions_stay_in_unit_interval((p, y, s, m) in case()) {
            for v in [delta_sp(&p, &s, &m).unwrap(), delta_eo(&p, &y, &s, &m).unwrap()].into_iter().flatten() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
