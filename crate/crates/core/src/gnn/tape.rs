//! Reverse-mode differentiation over dense row-major matrices.

use std::sync::Arc;

use ndarray::{s, Array2, Axis};

use crate::error::{Error, Result};
use crate::exec::Exec;

const ROW_CHUNK: usize = 256;
const PAR_MIN_ROWS: usize = 2048;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Symmetric sparse matrix in CSR layout.
///
/// `reach[i]` is one past the largest column touched by rows `0..=i`, which
/// lets a product over a row prefix check in O(1) that its input is tall enough.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOp {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    reach: Vec<usize>,
}

impl SparseOp {
    pub fn new(offsets: Vec<usize>, cols: Vec<usize>, vals: Vec<f64>) -> Result<Self> {
        if offsets.is_empty() || *offsets.last().unwrap() != cols.len() || cols.len() != vals.len()
        {
            return Err(Error::input("inconsistent CSR arrays"));
        }
        let n = offsets.len() - 1;
        let mut reach = Vec::with_capacity(n);
        let mut r = 0;
        for i in 0..n {
            r = r.max(i + 1);
            for &j in &cols[offsets[i]..offsets[i + 1]] {
                if j >= n {
                    return Err(Error::input(format!("column {j} out of range for {n} rows")));
                }
                r = r.max(j + 1);
            }
            reach.push(r);
        }
        Ok(SparseOp {
            offsets,
            cols,
            vals,
            reach,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    /// Rows of the input needed to produce the first `rows_out` output rows.
    pub fn reach(&self, rows_out: usize) -> usize {
        if rows_out == 0 {
            0
        } else {
            self.reach[rows_out - 1]
        }
    }

    /// `y = (A x)[..rows_out]`, reading only the first `x.nrows()` columns of `A`.
    fn apply_prefix(&self, x: &Array2<f64>, rows_out: usize, exec: Exec) -> Array2<f64> {
        let c = x.ncols();
        let xs = x.as_slice().expect("standard layout");
        let mut y = Array2::<f64>::zeros((rows_out, c));
        if c == 0 {
            return y;
        }
        let ys = y.as_slice_mut().expect("standard layout");
        let n_in = x.nrows();
        let work = |start: usize, out: &mut [f64]| {
            for (k, yrow) in out.chunks_mut(c).enumerate() {
                let (cols, vals) = self.row(start + k);
                for (&j, &a) in cols.iter().zip(vals) {
                    if j < n_in {
                        let xr = &xs[j * c..(j + 1) * c];
                        for (o, &xv) in yrow.iter_mut().zip(xr) {
                            *o += a * xv;
                        }
                    }
                }
            }
        };
        let exec = if rows_out >= PAR_MIN_ROWS { exec } else { Exec::Sequential };
        exec.for_each_chunk_mut(ys, ROW_CHUNK * c, |off, out| work(off / c, out));
        y
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    AddBias(Var, Var),
    Propagate(Var, Arc<SparseOp>),
    Relu(Var),
    Mask(Var, Array2<f64>),
    Rows(Var, usize),
    Mul(Var, Var),
    Scale(Var, f64),
    Add(Var, Var),
    SoftmaxCe(Var, Vec<usize>, Array2<f64>),
}

#[derive(Clone, Debug)]
struct Node {
    value: Array2<f64>,
    op: Op,
    needs_grad: bool,
}

/// Records one forward pass. Values are kept so that any recorded scalar or
/// matrix can be differentiated afterwards.
#[derive(Clone, Debug)]
pub struct Tape {
    nodes: Vec<Node>,
    exec: Exec,
    consumed: bool,
}

/// Gradients of one backward sweep, indexed by [`Var`].
#[derive(Clone, Debug)]
pub struct Gradients {
    grads: Vec<Option<Array2<f64>>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Array2<f64>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, v: Var) -> Option<Array2<f64>> {
        self.grads.get_mut(v.0).and_then(|g| g.take())
    }
}

fn shape_err(expected: usize, got: usize) -> Error {
    Error::Dimension { expected, got }
}

fn matmul(a: &Array2<f64>, b: &Array2<f64>, exec: Exec) -> Array2<f64> {
    let rows = a.nrows();
    if rows < PAR_MIN_ROWS || !exec.is_parallel() {
        return a.dot(b);
    }
    let c = b.ncols();
    if c == 0 {
        return a.dot(b);
    }
    let mut out = Array2::<f64>::zeros((rows, c));
    let os = out.as_slice_mut().expect("standard layout");
    exec.for_each_chunk_mut(os, ROW_CHUNK * c, |off, chunk| {
        let r0 = off / c;
        let r1 = r0 + chunk.len() / c;
        let part = a.slice(s![r0..r1, ..]).dot(b);
        chunk.copy_from_slice(part.as_slice().expect("standard layout"));
    });
    out
}

impl Tape {
    pub fn new(exec: Exec) -> Self {
        Tape {
            nodes: Vec::new(),
            exec,
            consumed: false,
        }
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

    fn push(&mut self, value: Array2<f64>, op: Op, needs_grad: bool) -> Var {
        let value = if value.is_standard_layout() {
            value
        } else {
            value.as_standard_layout().into_owned()
        };
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Input or parameter. Gradients are only propagated towards leaves with `requires_grad`.
    pub fn leaf(&mut self, value: Array2<f64>, requires_grad: bool) -> Var {
        self.push(value, Op::Leaf, requires_grad)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.ncols() != vb.nrows() {
            return Err(shape_err(va.ncols(), vb.nrows()));
        }
        let out = matmul(va, vb, self.exec);
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(out, Op::MatMul(a, b), ng))
    }

    /// Adds a `1 x c` row to every row of `x`.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Result<Var> {
        let (vx, vb) = (self.value(x), self.value(b));
        if vb.nrows() != 1 {
            return Err(shape_err(1, vb.nrows()));
        }
        if vx.ncols() != vb.ncols() {
            return Err(shape_err(vx.ncols(), vb.ncols()));
        }
        let out = vx + vb;
        let ng = self.needs(x) || self.needs(b);
        Ok(self.push(out, Op::AddBias(x, b), ng))
    }

    /// First `rows_out` rows of `A x` for a symmetric sparse `A`.
    pub fn propagate(&mut self, x: Var, a: &Arc<SparseOp>, rows_out: usize) -> Result<Var> {
        let vx = self.value(x);
        if rows_out > a.n_rows() {
            return Err(shape_err(a.n_rows(), rows_out));
        }
        let need = a.reach(rows_out);
        if vx.nrows() < need {
            return Err(shape_err(need, vx.nrows()));
        }
        let out = a.apply_prefix(vx, rows_out, self.exec);
        let ng = self.needs(x);
        Ok(self.push(out, Op::Propagate(x, Arc::clone(a)), ng))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let out = self.value(x).mapv(|v| if v > 0.0 { v } else { 0.0 });
        let ng = self.needs(x);
        self.push(out, Op::Relu(x), ng)
    }

    /// Elementwise product with a constant mask (dropout with the scale folded in).
    pub fn mask(&mut self, x: Var, mask: Array2<f64>) -> Result<Var> {
        let vx = self.value(x);
        if vx.dim() != mask.dim() {
            return Err(shape_err(vx.len(), mask.len()));
        }
        let out = vx * &mask;
        let ng = self.needs(x);
        Ok(self.push(out, Op::Mask(x, mask), ng))
    }

    /// The first `n` rows of `x`.
    pub fn rows(&mut self, x: Var, n: usize) -> Result<Var> {
        let vx = self.value(x);
        if n > vx.nrows() {
            return Err(shape_err(vx.nrows(), n));
        }
        let out = vx.slice(s![..n, ..]).to_owned();
        let ng = self.needs(x);
        Ok(self.push(out, Op::Rows(x, n), ng))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.dim() != vb.dim() {
            return Err(shape_err(va.len(), vb.len()));
        }
        let out = va * vb;
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(out, Op::Mul(a, b), ng))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let out = self.value(x) * c;
        let ng = self.needs(x);
        self.push(out, Op::Scale(x, c), ng)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.dim() != vb.dim() {
            return Err(shape_err(va.len(), vb.len()));
        }
        let out = va + vb;
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(out, Op::Add(a, b), ng))
    }

    /// Mean softmax cross-entropy of the rows of `logits` against `targets`, as a `1 x 1` value.
    pub fn softmax_cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Result<Var> {
        let z = self.value(logits);
        if z.nrows() != targets.len() {
            return Err(shape_err(z.nrows(), targets.len()));
        }
        if z.nrows() == 0 {
            return Err(Error::input("cross-entropy over zero rows"));
        }
        if let Some(&t) = targets.iter().find(|&&t| t >= z.ncols()) {
            return Err(Error::input(format!("target class {t} >= {} logits", z.ncols())));
        }
        let mut probs = z.clone();
        let mut loss = 0.0;
        for (mut row, &t) in probs.axis_iter_mut(Axis(0)).zip(targets) {
            let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let shifted = row[t] - m;
            row.mapv_inplace(|v| (v - m).exp());
            let sum = row.sum();
            loss += sum.ln() - shifted;
            row.mapv_inplace(|v| v / sum);
        }
        let out = Array2::from_elem((1, 1), loss / targets.len() as f64);
        let ng = self.needs(logits);
        Ok(self.push(out, Op::SoftmaxCe(logits, targets.to_vec(), probs), ng))
    }

    /// Backward sweep from `out` seeded with `seed` (same shape as `out`).
    /// The tape cannot be differentiated again afterwards.
    pub fn backward(&mut self, out: Var, seed: Array2<f64>) -> Result<Gradients> {
        let g = self.sweep(out, seed)?;
        self.consumed = true;
        Ok(g)
    }

    /// Like [`Self::backward`] but leaves the tape usable, for repeated
    /// sweeps from different outputs of the same forward pass.
    pub fn backward_retain(&self, out: Var, seed: Array2<f64>) -> Result<Gradients> {
        self.sweep(out, seed)
    }

    fn sweep(&self, out: Var, seed: Array2<f64>) -> Result<Gradients> {
        if self.consumed {
            return Err(Error::TapeConsumed);
        }
        if out.0 >= self.nodes.len() {
            return Err(Error::input("variable does not belong to this tape"));
        }
        if seed.dim() != self.nodes[out.0].value.dim() {
            return Err(shape_err(self.nodes[out.0].value.len(), seed.len()));
        }
        let mut grads: Vec<Option<Array2<f64>>> = vec![None; out.0 + 1];
        grads[out.0] = Some(seed);
        for i in (0..=out.0).rev() {
            let Some(g) = grads[i].take() else {
                continue;
            };
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let mut acc = |v: Var, d: Array2<f64>| {
                if self.nodes[v.0].needs_grad {
                    match &mut grads[v.0] {
                        Some(e) => *e += &d,
                        slot => *slot = Some(d),
                    }
                }
            };
            match &node.op {
                Op::Leaf => {
                    grads[i] = Some(g);
                    continue;
                }
                Op::MatMul(a, b) => {
                    if self.needs(*a) {
                        acc(*a, matmul(&g, &self.value(*b).t().to_owned(), self.exec));
                    }
                    if self.needs(*b) {
                        acc(*b, self.value(*a).t().dot(&g));
                    }
                }
                Op::AddBias(x, b) => {
                    if self.needs(*b) {
                        acc(*b, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    }
                    acc(*x, g);
                }
                Op::Propagate(x, a) => {
                    if self.needs(*x) {
                        let rows_in = self.value(*x).nrows();
                        acc(*x, a.apply_prefix(&g, rows_in, self.exec));
                    }
                }
                Op::Relu(x) => {
                    let mut d = g;
                    d.zip_mut_with(self.value(*x), |d, &v| {
                        if v <= 0.0 {
                            *d = 0.0
                        }
                    });
                    acc(*x, d);
                }
                Op::Mask(x, m) => acc(*x, g * m),
                Op::Rows(x, n) => {
                    let mut d = Array2::zeros(self.value(*x).dim());
                    d.slice_mut(s![..*n, ..]).assign(&g);
                    acc(*x, d);
                }
                Op::Mul(a, b) => {
                    if self.needs(*a) {
                        acc(*a, &g * self.value(*b));
                    }
                    if self.needs(*b) {
                        acc(*b, &g * self.value(*a));
                    }
                }
                Op::Scale(x, c) => acc(*x, g * *c),
                Op::Add(a, b) => {
                    acc(*a, g.clone());
                    acc(*b, g);
                }
                Op::SoftmaxCe(x, targets, probs) => {
                    let scale = g[[0, 0]] / targets.len() as f64;
                    let mut d = probs.clone();
                    for (r, &t) in targets.iter().enumerate() {
                        d[[r, t]] -= 1.0;
                    }
                    acc(*x, d * scale);
                }
            }
        }
        Ok(Gradients { grads })
    }
}

/// Softmax of one logit vector.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// `∂p_i/∂z_j = p_i (δ_ij − p_j)`.
pub fn softmax_jacobian(z: &[f64]) -> Vec<Vec<f64>> {
    let p = softmax(z);
    (0..p.len())
        .map(|i| {
            (0..p.len())
                .map(|j| p[i] * (if i == j { 1.0 } else { 0.0 } - p[j]))
                .collect()
        })
        .collect()
}
