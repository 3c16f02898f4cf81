//! Reverse-mode differentiation over a closed set of matrix operations.
//!
//! Every value is a 2-D array. Nodes are appended in evaluation order, so a
//! single reverse sweep over the node list visits each node after all of its
//! consumers.

use std::sync::Arc;

use ndarray::{concatenate, s, Array2, Axis};

use crate::error::ModelError;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op {
    Leaf,
    MatMul(Var, Var),
    /// `a · bᵀ`
    MatMulT(Var, Var),
    /// `C · a` with a constant `C`.
    ConstMatMul(Arc<Array2<f64>>, Var),
    /// `Cᵀ · a` with a constant `C`.
    ConstTMatMul(Arc<Array2<f64>>, Var),
    SpMM(Arc<CsrMatrix>, Var),
    Add(Var, Var),
    /// Broadcasts a `1 x w` row over every row of `a`.
    AddRow(Var, Var),
    /// Multiplies every row of `a` elementwise by a `1 x w` row.
    MulRow(Var, Var),
    /// Scales row `i` of `a` by entry `i` of an `n x 1` column.
    RowScale(Var, Var),
    Scale(Var, f64),
    ConcatCols(Var, Var),
    SliceCols(Var, usize, usize),
    Relu(Var),
    SoftmaxRows(Var),
    /// Row-wise standardization without affine terms.
    LayerNorm(Var, f64),
    /// Mean cross-entropy over `rows`, with integer class targets.
    CrossEntropy(Var, Arc<Vec<(usize, usize)>>),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul(..) => "matmul",
            Op::MatMulT(..) => "matmul_t",
            Op::ConstMatMul(..) => "const_matmul",
            Op::ConstTMatMul(..) => "const_t_matmul",
            Op::SpMM(..) => "spmm",
            Op::Add(..) => "add",
            Op::AddRow(..) => "add_row",
            Op::MulRow(..) => "mul_row",
            Op::RowScale(..) => "row_scale",
            Op::Scale(..) => "scale",
            Op::ConcatCols(..) => "concat",
            Op::SliceCols(..) => "slice",
            Op::Relu(..) => "relu",
            Op::SoftmaxRows(..) => "softmax",
            Op::LayerNorm(..) => "layer_norm",
            Op::CrossEntropy(..) => "cross_entropy",
        }
    }
}

struct Node {
    value: Array2<f64>,
    op: Op,
    needs_grad: bool,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar root with respect to every node that needs one.
pub struct Gradients(Vec<Option<Array2<f64>>>);

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Array2<f64>> {
        self.0[v.0].as_ref()
    }

    pub fn take(&mut self, v: Var) -> Option<Array2<f64>> {
        self.0[v.0].take()
    }
}

fn dim_err(op: &str, a: (usize, usize), b: (usize, usize)) -> ModelError {
    ModelError::Dimension(format!("{op}: incompatible shapes {a:?} and {b:?}"))
}

fn accumulate(slot: &mut Option<Array2<f64>>, g: Array2<f64>) {
    match slot {
        Some(acc) => *acc += &g,
        None => *slot = Some(g),
    }
}

/// `(x − mean) / sqrt(var + eps)` per row, with the per-row inverse deviation.
fn standardize(x: &Array2<f64>, eps: f64) -> (Array2<f64>, Vec<f64>) {
    let w = x.ncols() as f64;
    let mut out = x.clone();
    let mut inv = Vec::with_capacity(x.nrows());
    for mut row in out.rows_mut() {
        let mean = row.sum() / w;
        row.mapv_inplace(|v| v - mean);
        let var = row.iter().map(|v| v * v).sum::<f64>() / w;
        let r = 1.0 / (var + eps).sqrt();
        row.mapv_inplace(|v| v * r);
        inv.push(r);
    }
    (out, inv)
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    /// A leaf that receives a gradient.
    pub fn param(&mut self, value: Array2<f64>) -> Var {
        self.push_raw(value, Op::Leaf, true)
    }

    /// A leaf treated as constant.
    pub fn constant(&mut self, value: Array2<f64>) -> Var {
        self.push_raw(value, Op::Leaf, false)
    }

    fn push_raw(&mut self, value: Array2<f64>, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node { value, op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    fn push(&mut self, value: Array2<f64>, op: Op) -> Result<Var, ModelError> {
        if value.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { op: op.name() });
        }
        let needs_grad = match &op {
            Op::Leaf => false,
            Op::MatMul(a, b)
            | Op::MatMulT(a, b)
            | Op::Add(a, b)
            | Op::AddRow(a, b)
            | Op::MulRow(a, b)
            | Op::RowScale(a, b)
            | Op::ConcatCols(a, b) => self.nodes[a.0].needs_grad || self.nodes[b.0].needs_grad,
            Op::ConstMatMul(_, a)
            | Op::ConstTMatMul(_, a)
            | Op::SpMM(_, a)
            | Op::Scale(a, _)
            | Op::SliceCols(a, ..)
            | Op::Relu(a)
            | Op::SoftmaxRows(a)
            | Op::LayerNorm(a, _)
            | Op::CrossEntropy(a, _) => self.nodes[a.0].needs_grad,
        };
        Ok(self.push_raw(value, op, needs_grad))
    }

    fn dim(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.dim()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, ModelError> {
        let (da, db) = (self.dim(a), self.dim(b));
        if da.1 != db.0 {
            return Err(dim_err("matmul", da, db));
        }
        let y = self.value(a).dot(self.value(b));
        self.push(y, Op::MatMul(a, b))
    }

    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var, ModelError> {
        let (da, db) = (self.dim(a), self.dim(b));
        if da.1 != db.1 {
            return Err(dim_err("matmul_t", da, db));
        }
        let y = self.value(a).dot(&self.value(b).t());
        self.push(y, Op::MatMulT(a, b))
    }

    pub fn const_matmul(&mut self, c: Arc<Array2<f64>>, a: Var) -> Result<Var, ModelError> {
        let da = self.dim(a);
        if c.ncols() != da.0 {
            return Err(dim_err("const_matmul", c.dim(), da));
        }
        let y = c.dot(self.value(a));
        self.push(y, Op::ConstMatMul(c, a))
    }

    pub fn const_t_matmul(&mut self, c: Arc<Array2<f64>>, a: Var) -> Result<Var, ModelError> {
        let da = self.dim(a);
        if c.nrows() != da.0 {
            return Err(dim_err("const_t_matmul", c.dim(), da));
        }
        let y = c.t().dot(self.value(a));
        self.push(y, Op::ConstTMatMul(c, a))
    }

    pub fn spmm(&mut self, s: Arc<CsrMatrix>, a: Var) -> Result<Var, ModelError> {
        let da = self.dim(a);
        if s.n() != da.0 {
            return Err(dim_err("spmm", (s.n(), s.n()), da));
        }
        let y = s.spmm(self.value(a).view());
        self.push(y, Op::SpMM(s, a))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, ModelError> {
        let (da, db) = (self.dim(a), self.dim(b));
        if da != db {
            return Err(dim_err("add", da, db));
        }
        let y = self.value(a) + self.value(b);
        self.push(y, Op::Add(a, b))
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var, ModelError> {
        let (da, dr) = (self.dim(a), self.dim(row));
        if dr != (1, da.1) {
            return Err(dim_err("add_row", da, dr));
        }
        let y = self.value(a) + self.value(row);
        self.push(y, Op::AddRow(a, row))
    }

    pub fn mul_row(&mut self, a: Var, row: Var) -> Result<Var, ModelError> {
        let (da, dr) = (self.dim(a), self.dim(row));
        if dr != (1, da.1) {
            return Err(dim_err("mul_row", da, dr));
        }
        let y = self.value(a) * self.value(row);
        self.push(y, Op::MulRow(a, row))
    }

    pub fn row_scale(&mut self, a: Var, col: Var) -> Result<Var, ModelError> {
        let (da, dc) = (self.dim(a), self.dim(col));
        if dc != (da.0, 1) {
            return Err(dim_err("row_scale", da, dc));
        }
        let y = self.value(a) * self.value(col);
        self.push(y, Op::RowScale(a, col))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var, ModelError> {
        let y = self.value(a) * c;
        self.push(y, Op::Scale(a, c))
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var, ModelError> {
        let (da, db) = (self.dim(a), self.dim(b));
        if da.0 != db.0 {
            return Err(dim_err("concat", da, db));
        }
        let y = concatenate(Axis(1), &[self.value(a).view(), self.value(b).view()])
            .expect("row counts checked");
        self.push(y, Op::ConcatCols(a, b))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var, ModelError> {
        let da = self.dim(a);
        if start > end || end > da.1 {
            return Err(ModelError::Dimension(format!("slice {start}..{end} of width {}", da.1)));
        }
        let y = self.value(a).slice(s![.., start..end]).to_owned();
        self.push(y, Op::SliceCols(a, start, end))
    }

    pub fn relu(&mut self, a: Var) -> Result<Var, ModelError> {
        let y = self.value(a).mapv(|v| v.max(0.0));
        self.push(y, Op::Relu(a))
    }

    pub fn softmax_rows(&mut self, a: Var) -> Result<Var, ModelError> {
        let mut y = self.value(a).clone();
        for mut row in y.rows_mut() {
            let m = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            row.mapv_inplace(|v| (v - m).exp());
            let z = row.sum();
            row.mapv_inplace(|v| v / z);
        }
        self.push(y, Op::SoftmaxRows(a))
    }

    pub fn layer_norm(&mut self, a: Var, eps: f64) -> Result<Var, ModelError> {
        let (y, _) = standardize(self.value(a), eps);
        self.push(y, Op::LayerNorm(a, eps))
    }

    /// Mean negative log-likelihood of `targets[i]` over rows with `mask[i]`,
    /// using a shifted log-sum-exp.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[u8], mask: &[bool]) -> Result<Var, ModelError> {
        let (n, c) = self.dim(logits);
        if targets.len() != n || mask.len() != n {
            return Err(ModelError::Dimension(format!(
                "cross_entropy: {n} rows against {} targets and {} mask entries",
                targets.len(),
                mask.len()
            )));
        }
        let rows: Vec<(usize, usize)> = (0..n).filter(|&i| mask[i]).map(|i| (i, usize::from(targets[i]))).collect();
        if rows.is_empty() {
            return Err(ModelError::EmptyMask);
        }
        if rows.iter().any(|&(_, t)| t >= c) {
            return Err(ModelError::Dimension(format!("target class outside {c} logit columns")));
        }
        let x = self.value(logits);
        let total: f64 = rows
            .iter()
            .map(|&(i, t)| {
                let row = x.row(i);
                let m = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
                lse - row[t]
            })
            .sum();
        let y = Array2::from_elem((1, 1), total / rows.len() as f64);
        self.push(y, Op::CrossEntropy(logits, Arc::new(rows)))
    }

    /// Gradients of the `1 x 1` node `root`.
    pub fn backward(&self, root: Var) -> Result<Gradients, ModelError> {
        if self.dim(root) != (1, 1) {
            return Err(ModelError::Dimension(format!("backward from non-scalar {:?}", self.dim(root))));
        }
        self.backward_from(root, Array2::ones((1, 1)))
    }

    /// Propagates an arbitrary upstream gradient `seed` from `root`.
    pub fn backward_from(&self, root: Var, seed: Array2<f64>) -> Result<Gradients, ModelError> {
        if seed.dim() != self.dim(root) {
            return Err(dim_err("backward seed", seed.dim(), self.dim(root)));
        }
        let mut grads: Vec<Option<Array2<f64>>> = vec![None; self.nodes.len()];
        grads[root.0] = Some(seed);
        for idx in (0..=root.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(gy) = grads[idx].take() else { continue };
            let emit = |v: Var, g: Array2<f64>, grads: &mut [Option<Array2<f64>>]| -> Result<(), ModelError> {
                if !self.nodes[v.0].needs_grad {
                    return Ok(());
                }
                if g.iter().any(|x| !x.is_finite()) {
                    return Err(ModelError::NonFiniteGradient { op: node.op.name() });
                }
                accumulate(&mut grads[v.0], g);
                Ok(())
            };
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    emit(*a, gy.dot(&self.value(*b).t()), &mut grads)?;
                    emit(*b, self.value(*a).t().dot(&gy), &mut grads)?;
                }
                Op::MatMulT(a, b) => {
                    emit(*a, gy.dot(self.value(*b)), &mut grads)?;
                    emit(*b, gy.t().dot(self.value(*a)), &mut grads)?;
                }
                Op::ConstMatMul(c, a) => emit(*a, c.t().dot(&gy), &mut grads)?,
                Op::ConstTMatMul(c, a) => emit(*a, c.dot(&gy), &mut grads)?,
                Op::SpMM(m, a) => emit(*a, m.spmm_transpose(gy.view()), &mut grads)?,
                Op::Add(a, b) => {
                    emit(*b, gy.clone(), &mut grads)?;
                    emit(*a, gy, &mut grads)?;
                }
                Op::AddRow(a, r) => {
                    emit(*r, gy.sum_axis(Axis(0)).insert_axis(Axis(0)), &mut grads)?;
                    emit(*a, gy, &mut grads)?;
                }
                Op::MulRow(a, r) => {
                    let gr = (&gy * self.value(*a)).sum_axis(Axis(0)).insert_axis(Axis(0));
                    emit(*r, gr, &mut grads)?;
                    emit(*a, &gy * self.value(*r), &mut grads)?;
                }
                Op::RowScale(a, c) => {
                    let gc = (&gy * self.value(*a)).sum_axis(Axis(1)).insert_axis(Axis(1));
                    emit(*c, gc, &mut grads)?;
                    emit(*a, &gy * self.value(*c), &mut grads)?;
                }
                Op::Scale(a, c) => emit(*a, gy * *c, &mut grads)?,
                Op::ConcatCols(a, b) => {
                    let wa = self.dim(*a).1;
                    emit(*a, gy.slice(s![.., ..wa]).to_owned(), &mut grads)?;
                    emit(*b, gy.slice(s![.., wa..]).to_owned(), &mut grads)?;
                }
                Op::SliceCols(a, start, end) => {
                    let mut g = Array2::zeros(self.dim(*a));
                    g.slice_mut(s![.., *start..*end]).assign(&gy);
                    emit(*a, g, &mut grads)?;
                }
                Op::Relu(a) => {
                    let x = self.value(*a);
                    let g = ndarray::Zip::from(&gy).and(x).map_collect(|&g, &x| if x > 0.0 { g } else { 0.0 });
                    emit(*a, g, &mut grads)?;
                }
                Op::SoftmaxRows(a) => {
                    let y = &node.value;
                    let mut g = &gy * y;
                    for (mut grow, yrow) in g.rows_mut().into_iter().zip(y.rows()) {
                        let dotv = grow.sum();
                        grow.zip_mut_with(&yrow, |gi, &yi| *gi -= yi * dotv);
                    }
                    emit(*a, g, &mut grads)?;
                }
                Op::LayerNorm(a, eps) => {
                    let (xhat, inv) = standardize(self.value(*a), *eps);
                    let w = xhat.ncols() as f64;
                    let mut g = gy.clone();
                    for ((mut grow, xrow), r) in g.rows_mut().into_iter().zip(xhat.rows()).zip(&inv) {
                        let mean_g = grow.sum() / w;
                        let mean_gx = grow.iter().zip(xrow).map(|(a, b)| a * b).sum::<f64>() / w;
                        grow.zip_mut_with(&xrow, |gi, &xi| *gi = r * (*gi - mean_g - xi * mean_gx));
                    }
                    emit(*a, g, &mut grads)?;
                }
                Op::CrossEntropy(a, rows) => {
                    let x = self.value(*a);
                    let scale = gy[[0, 0]] / rows.len() as f64;
                    let mut g = Array2::zeros(x.dim());
                    for &(i, t) in rows.iter() {
                        let row = x.row(i);
                        let m = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                        let z: f64 = row.iter().map(|v| (v - m).exp()).sum();
                        for (j, &v) in row.iter().enumerate() {
                            let p = (v - m).exp() / z;
                            g[[i, j]] = scale * (p - if j == t { 1.0 } else { 0.0 });
                        }
                    }
                    emit(*a, g, &mut grads)?;
                }
            }
        }
        Ok(Gradients(grads))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};

    fn random(rng: &mut rand_chacha::ChaCha8Rng, r: usize, c: usize) -> Array2<f64> {
        Array2::from_shape_fn((r, c), |_| rng.random_range(-1.0..1.0))
    }

    /// Central differences of `f` with respect to every entry of `x`.
    fn numeric_grad(x: &Array2<f64>, f: impl Fn(&Array2<f64>) -> f64) -> Array2<f64> {
        let h = 1e-6;
        let mut g = Array2::zeros(x.dim());
        for idx in 0..x.len() {
            let (i, j) = (idx / x.ncols(), idx % x.ncols());
            let mut xp = x.clone();
            xp[[i, j]] += h;
            let mut xm = x.clone();
            xm[[i, j]] -= h;
            g[[i, j]] = (f(&xp) - f(&xm)) / (2.0 * h);
        }
        g
    }

    fn check_unary(build: impl Fn(&mut Tape, Var) -> Var, shape: (usize, usize), seed: u64) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x0 = random(&mut rng, shape.0, shape.1);
        // the gradient of Σ y ⊙ w is the backward pass seeded with w
        let eval = |x: &Array2<f64>, w: &Array2<f64>| -> (f64, Option<Array2<f64>>) {
            let mut t = Tape::new();
            let xv = t.param(x.clone());
            let y = build(&mut t, xv);
            let val = (t.value(y) * w).sum();
            let g = t.backward_from(y, w.clone()).unwrap();
            (val, g.get(xv).cloned())
        };
        let mut t = Tape::new();
        let xv = t.param(x0.clone());
        let y = build(&mut t, xv);
        let w = random(&mut rng, t.dim(y).0, t.dim(y).1);
        let (_, analytic) = eval(&x0, &w);
        let numeric = numeric_grad(&x0, |x| eval(x, &w).0);
        let analytic = analytic.unwrap();
        for (a, n) in analytic.iter().zip(&numeric) {
            assert!((a - n).abs() <= 1e-6 * (1.0 + n.abs()), "{a} vs {n}");
        }
    }

    #[test]
    fn unary_ops_match_finite_differences() {
        check_unary(|t, x| t.softmax_rows(x).unwrap(), (3, 4), 1);
        check_unary(|t, x| t.layer_norm(x, 1e-5).unwrap(), (3, 5), 2);
        check_unary(|t, x| t.scale(x, -2.5).unwrap(), (2, 2), 3);
        check_unary(|t, x| t.slice_cols(x, 1, 3).unwrap(), (3, 4), 4);
        check_unary(|t, x| t.matmul_t(x, x).unwrap(), (3, 2), 5);
        check_unary(|t, x| t.matmul(x, x).unwrap(), (3, 3), 6);
        check_unary(|t, x| t.concat_cols(x, x).unwrap(), (2, 3), 7);
        check_unary(
            |t, x| {
                let c = Arc::new(array![[1.0, 2.0], [0.5, -1.0], [0.0, 3.0]]);
                let y = t.const_t_matmul(c.clone(), x).unwrap();
                t.const_matmul(c, y).unwrap()
            },
            (3, 2),
            8,
        );
        check_unary(
            |t, x| {
                let s = Arc::new(CsrMatrix::from_triplets(3, &[(0, 1, 1.0), (1, 0, 1.0), (2, 2, 0.5), (0, 2, -1.0)]));
                t.spmm(s, x).unwrap()
            },
            (3, 2),
            9,
        );
        check_unary(
            |t, x| {
                let r = t.slice_cols(x, 0, 1).unwrap();
                let rows = t.slice_cols(x, 1, 3).unwrap();
                t.row_scale(rows, r).unwrap()
            },
            (4, 3),
            10,
        );
    }

    #[test]
    fn broadcast_ops_match_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let a0 = random(&mut rng, 4, 3);
        let r0 = random(&mut rng, 1, 3);
        let w = random(&mut rng, 4, 3);
        let eval = |a: &Array2<f64>, r: &Array2<f64>| {
            let mut t = Tape::new();
            let av = t.param(a.clone());
            let rv = t.param(r.clone());
            let m = t.mul_row(av, rv).unwrap();
            let y = t.add_row(m, rv).unwrap();
            let g = t.backward_from(y, w.clone()).unwrap();
            ((t.value(y) * &w).sum(), g.get(av).unwrap().clone(), g.get(rv).unwrap().clone())
        };
        let (_, ga, gr) = eval(&a0, &r0);
        let na = numeric_grad(&a0, |a| eval(a, &r0).0);
        let nr = numeric_grad(&r0, |r| eval(&a0, r).0);
        for (x, y) in ga.iter().zip(&na).chain(gr.iter().zip(&nr)) {
            assert!((x - y).abs() < 1e-7, "{x} vs {y}");
        }
    }

    #[test]
    fn relu_gradient_masks_negatives() {
        let mut t = Tape::new();
        let x = t.param(array![[-1.0, 2.0], [3.0, -4.0]]);
        let y = t.relu(x).unwrap();
        let g = t.backward_from(y, array![[5.0, 6.0], [7.0, 8.0]]).unwrap();
        assert_eq!(g.get(x).unwrap(), &array![[0.0, 6.0], [7.0, 0.0]]);
    }

    #[test]
    fn matmul_gradient_by_hand() {
        // y = xW, loss = Σy  =>  ∂W = xᵀ 1
        let mut t = Tape::new();
        let x = t.constant(array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
        let w = t.param(array![[0.5, -1.0, 2.0], [1.5, 0.0, -0.5]]);
        let y = t.matmul(x, w).unwrap();
        let g = t.backward_from(y, Array2::ones((3, 3))).unwrap();
        assert_eq!(g.get(w).unwrap(), &array![[9.0, 9.0, 9.0], [12.0, 12.0, 12.0]]);
        assert!(g.get(x).is_none());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut t = Tape::new();
        let x = t.param(array![[1.0, -2.0]]);
        let w = t.param(array![[1.0], [3.0]]);
        let y = t.matmul(x, w).unwrap();
        let z = t.softmax_rows(y).unwrap();
        let g = t.backward_from(z, Array2::zeros((1, 1))).unwrap();
        assert!(g.get(x).unwrap().iter().all(|&v| v == 0.0));
        assert!(g.get(w).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cross_entropy_values_and_gradient() {
        let mut t = Tape::new();
        let l = t.param(array![[1000.0, -1000.0], [0.0, 0.0], [-1000.0, 1000.0]]);
        let correct = t.cross_entropy(l, &[0, 0, 0], &[true, false, false]).unwrap();
        assert!(t.value(correct)[[0, 0]].abs() < 1e-12);
        let uniform = t.cross_entropy(l, &[1, 1, 1], &[false, true, false]).unwrap();
        assert!((t.value(uniform)[[0, 0]] - std::f64::consts::LN_2).abs() < 1e-15);
        let wrong = t.cross_entropy(l, &[0, 0, 0], &[false, false, true]).unwrap();
        assert!((t.value(wrong)[[0, 0]] - 2000.0).abs() < 1e-9);

        let g = t.backward(uniform).unwrap();
        assert_eq!(g.get(l).unwrap(), &array![[0.0, 0.0], [0.5, -0.5], [0.0, 0.0]]);
        assert!(matches!(t.cross_entropy(l, &[0, 0, 0], &[false; 3]), Err(ModelError::EmptyMask)));
    }

    #[test]
    fn non_finite_values_name_the_op() {
        let mut t = Tape::new();
        let x = t.param(array![[1e300, 1e300]]);
        let err = t.matmul_t(x, x).unwrap_err();
        assert!(matches!(err, ModelError::NonFinite { op: "matmul_t" }));
    }

    #[test]
    fn shape_errors() {
        let mut t = Tape::new();
        let a = t.param(Array2::zeros((2, 3)));
        let b = t.param(Array2::zeros((2, 3)));
        assert!(matches!(t.matmul(a, b), Err(ModelError::Dimension(_))));
        assert!(t.add_row(a, b).is_err());
        assert!(t.slice_cols(a, 2, 4).is_err());
    }
}
