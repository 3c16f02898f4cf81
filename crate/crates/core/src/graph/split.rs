use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::GraphError;

/// Train / validation / test node masks. Pairwise disjoint; their union may
/// leave nodes unassigned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<bool>,
    pub val: Vec<bool>,
    pub test: Vec<bool>,
}

impl Splits {
    pub fn empty(n: usize) -> Self {
        Self {
            train: vec![false; n],
            val: vec![false; n],
            test: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.train.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train.is_empty()
    }

    pub fn is_disjoint(&self) -> bool {
        (0..self.len()).all(|i| {
            (self.train[i] as u8 + self.val[i] as u8 + self.test[i] as u8) <= 1
        })
    }

    pub fn ids(mask: &[bool]) -> Vec<usize> {
        mask.iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect()
    }

    pub fn from_ids(n: usize, train: &[usize], val: &[usize], test: &[usize]) -> Self {
        let mut s = Self::empty(n);
        for (mask, ids) in [(&mut s.train, train), (&mut s.val, val), (&mut s.test, test)] {
            for &i in ids {
                mask[i] = true;
            }
        }
        s
    }
}

/// Splits `total` slots across classes proportionally to their sizes, using
/// largest remainders (ties to the lower class).
fn apportion(total: usize, class_sizes: [usize; 2], n: usize) -> [usize; 2] {
    let exact = class_sizes.map(|c| total as f64 * c as f64 / n as f64);
    let mut out = exact.map(|e| e.floor() as usize);
    let mut left = total - out[0] - out[1];
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &c in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if out[c] < class_sizes[c] {
            out[c] += 1;
            left -= 1;
        }
    }
    out
}

/// Label-balanced random split: 25% validation, 25% test, and per class
/// `min(half the class, 500)` training nodes drawn from what remains.
pub fn make_splits(labels: &[u8], seed: u64) -> Result<Splits, GraphError> {
    let n = labels.len();
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &y) in labels.iter().enumerate() {
        by_class[usize::from(y.min(1))].push(i);
    }
    for (c, members) in by_class.iter().enumerate() {
        if members.is_empty() {
            return Err(GraphError::EmptyClass(c as u8));
        }
    }
    let sizes = [by_class[0].len(), by_class[1].len()];
    let quarter = n / 4;
    let val_q = apportion(quarter, sizes, n);
    let test_q = apportion(quarter, sizes, n);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut splits = Splits::empty(n);
    for c in 0..2 {
        let mut members = by_class[c].clone();
        members.shuffle(&mut rng);
        let (val, rest) = members.split_at(val_q[c]);
        let (test, rest) = rest.split_at(test_q[c].min(rest.len()));
        let train_count = (sizes[c] / 2).min(500).min(rest.len());
        for &i in val {
            splits.val[i] = true;
        }
        for &i in test {
            splits.test[i] = true;
        }
        for &i in &rest[..train_count] {
            splits.train[i] = true;
        }
    }
    Ok(splits)
}
