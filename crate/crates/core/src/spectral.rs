//! Normalized propagation operators, the second-eigenvalue lower bound, and
//! over-smoothing diagnostics.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::Graph;
use crate::oracle::{dense_eigs, DenseMatrix, EIGS_CAP};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;
const ROW_CHUNK: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorKind {
    /// `D^{-1/2} A D^{-1/2}`.
    Adjacency,
    /// `(γI + D)^{-1/2} (γI + A) (γI + D)^{-1/2}`.
    Augmented { gamma: f64 },
    /// `I - D^{-1/2} A D^{-1/2}`.
    Laplacian,
}

impl OperatorKind {
    fn gamma(self) -> f64 {
        match self {
            OperatorKind::Augmented { gamma } => gamma,
            _ => 0.0,
        }
    }
}

/// Matrix-free view of a normalized operator over binary adjacency.
#[derive(Clone, Debug)]
pub struct NormalizedOperator<'a> {
    g: &'a Graph,
    kind: OperatorKind,
    inv_sqrt: Vec<f64>,
    exec: Exec,
}

impl<'a> NormalizedOperator<'a> {
    pub fn new(g: &'a Graph, kind: OperatorKind, exec: Exec) -> Result<Self> {
        let gamma = kind.gamma();
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::input(format!("self-loop weight must be >= 0, got {gamma}")));
        }
        let inv_sqrt = (0..g.n_nodes())
            .map(|v| {
                let d = g.degree(v) as f64 + gamma;
                if d > 0.0 {
                    1.0 / d.sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        Ok(NormalizedOperator {
            g,
            kind,
            inv_sqrt,
            exec,
        })
    }

    pub fn augmented(g: &'a Graph, gamma: f64, exec: Exec) -> Result<Self> {
        Self::new(g, OperatorKind::Augmented { gamma }, exec)
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.g.n_nodes()
    }

    /// Unit eigenvector for eigenvalue 1 of the adjacency kinds (0 for the
    /// Laplacian): entries proportional to `sqrt(deg + γ)`.
    pub fn known_eigenvector(&self) -> Vec<f64> {
        let gamma = self.kind.gamma();
        let mut u: Vec<f64> = (0..self.dim())
            .map(|v| (self.g.degree(v) as f64 + gamma).sqrt())
            .collect();
        normalize(&mut u);
        u
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; n];
        self.apply_into(x, &mut y);
        Ok(y)
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let gamma = self.kind.gamma();
        let laplacian = self.kind == OperatorKind::Laplacian;
        let s = &self.inv_sqrt;
        let g = self.g;
        self.exec.for_each_chunk_mut(y, ROW_CHUNK, |start, out| {
            for (k, yv) in out.iter_mut().enumerate() {
                let v = start + k;
                let mut acc = gamma * s[v] * x[v];
                for &u in g.neighbors(v) {
                    acc += s[u] * x[u];
                }
                let sx = s[v] * acc;
                *yv = if laplacian { x[v] - sx } else { sx };
            }
        });
    }

    /// Dense matrix built column by column from [`Self::apply`].
    pub fn to_dense(&self) -> Result<DenseMatrix> {
        let n = self.dim();
        if n > EIGS_CAP {
            return Err(Error::SizeCap {
                what: "dense operator",
                n,
                cap: EIGS_CAP,
            });
        }
        let mut m = DenseMatrix::zeros(n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply_into(&e, &mut col);
            e[j] = 0.0;
            for i in 0..n {
                m.set(i, j, col[i]);
            }
        }
        Ok(m)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: &mut [f64]) -> f64 {
    let r = norm(a);
    if r > 0.0 {
        a.iter_mut().for_each(|x| *x /= r);
    }
    r
}

fn project_out(x: &mut [f64], u: &[f64]) {
    let c = dot(x, u);
    x.iter_mut().zip(u).for_each(|(a, b)| *a -= c * b);
}

/// Deterministic, non-symmetric start vector for power iterations.
pub fn start_vector(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    normalize(&mut x);
    x
}

/// Lower bound on the second largest eigenvalue of the augmented adjacency:
/// `a - (2 / diam)(1 + a)` with `a = 2 sqrt(d_max - 1) / d_max`.
pub fn bound_lambda(d_max: usize, diam: usize) -> Result<f64> {
    if diam < 4 {
        return Err(Error::domain(format!("diameter must be at least 4, got {diam}")));
    }
    if d_max < 2 {
        return Err(Error::domain(format!("max degree must be at least 2, got {d_max}")));
    }
    let d = d_max as f64;
    let a = 2.0 * (d - 1.0).sqrt() / d;
    Ok(a - (2.0 / diam as f64) * (1.0 + a))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenEstimate {
    pub value: f64,
    /// `‖op·u − λu‖` for the returned unit vector.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip)]
    pub vector: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopEigs {
    pub lambda_n: EigenEstimate,
    pub lambda_n_minus_1: EigenEstimate,
    pub lambda_1: EigenEstimate,
}

fn residual(op: &NormalizedOperator, u: &[f64], lambda: f64, scratch: &mut [f64]) -> f64 {
    op.apply_into(u, scratch);
    scratch
        .iter()
        .zip(u)
        .map(|(a, b)| (a - lambda * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Power iteration on `(I ± op) / 2`, optionally deflated against `deflate`.
/// Reports the Rayleigh quotient of `op` itself.
fn shifted_power(
    op: &NormalizedOperator,
    flip: bool,
    deflate: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> EigenEstimate {
    let n = op.dim();
    let mut x = start_vector(n);
    if let Some(u) = deflate {
        project_out(&mut x, u);
        normalize(&mut x);
    }
    let mut y = vec![0.0; n];
    let mut best = EigenEstimate {
        value: f64::NAN,
        residual: f64::INFINITY,
        iterations: 0,
        converged: false,
        vector: x.clone(),
    };
    for it in 1..=max_iter {
        op.apply_into(&x, &mut y);
        let lambda = dot(&x, &y);
        let res = y
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if res < best.residual {
            best.value = lambda;
            best.residual = res;
            best.iterations = it;
            best.vector.copy_from_slice(&x);
        }
        if res <= tol {
            best.converged = true;
            return best;
        }
        let sign = if flip { -1.0 } else { 1.0 };
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = 0.5 * (*xi + sign * yi);
        }
        if let Some(u) = deflate {
            project_out(&mut x, u);
        }
        if normalize(&mut x) == 0.0 {
            best.value = 0.0;
            best.residual = 0.0;
            best.iterations = it;
            best.converged = true;
            return best;
        }
    }
    best.iterations = max_iter;
    best
}

/// Largest, second largest and smallest eigenvalue of an adjacency-type operator.
pub fn top_eigs(op: &NormalizedOperator, tol: f64, max_iter: usize) -> Result<TopEigs> {
    if op.kind() == OperatorKind::Laplacian {
        return Err(Error::input(
            "top_eigs expects an adjacency operator; Laplacian eigenvalues are 1 minus these",
        ));
    }
    if op.dim() < 2 {
        return Err(Error::input("need at least 2 nodes"));
    }
    let u = op.known_eigenvector();
    let mut scratch = vec![0.0; op.dim()];
    op.apply_into(&u, &mut scratch);
    let value = dot(&u, &scratch);
    let res = residual(op, &u, value, &mut scratch);
    let lambda_n = EigenEstimate {
        value: if res <= tol { 1.0 } else { value },
        residual: res,
        iterations: 0,
        converged: res <= tol,
        vector: u.clone(),
    };
    let lambda_n_minus_1 = shifted_power(op, false, Some(&u), tol, max_iter);
    let lambda_1 = shifted_power(op, true, None, tol, max_iter);
    Ok(TopEigs {
        lambda_n,
        lambda_n_minus_1,
        lambda_1,
    })
}

fn dense_spectrum(g: &Graph, kind: OperatorKind) -> Result<Vec<f64>> {
    let m = NormalizedOperator::new(g, kind, Exec::Sequential)?.to_dense()?;
    Ok(dense_eigs(&m, 1e-13)?.values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplementarityCheck {
    pub max_deviation: f64,
    pub passed: bool,
}

/// `λ_{N+1-i}(S_adj) = 1 - λ_i(L_sym)` for every `i`.
pub fn verify_complementarity(g: &Graph, tol: f64) -> Result<ComplementarityCheck> {
    let s = dense_spectrum(g, OperatorKind::Adjacency)?;
    let l = dense_spectrum(g, OperatorKind::Laplacian)?;
    let n = s.len();
    let max_deviation = (0..n)
        .map(|i| (s[n - 1 - i] - (1.0 - l[i])).abs())
        .fold(0.0, f64::max);
    Ok(ComplementarityCheck {
        max_deviation,
        passed: max_deviation < tol,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfLoopCheck {
    pub gamma: f64,
    pub lambda_plain: f64,
    pub lambda_augmented: f64,
    pub passed: bool,
}

/// Self-loops push the second largest eigenvalue up.
pub fn verify_selfloop_shift(g: &Graph, gamma: f64, tol: f64) -> Result<SelfLoopCheck> {
    if !g.is_connected() {
        return Err(Error::input("graph must be connected"));
    }
    if g.n_nodes() < 2 {
        return Err(Error::input("need at least 2 nodes"));
    }
    let plain = dense_spectrum(g, OperatorKind::Adjacency)?;
    let aug = dense_spectrum(g, OperatorKind::Augmented { gamma })?;
    let n = plain.len();
    let lambda_plain = plain[n - 2];
    let lambda_augmented = aug[n - 2];
    Ok(SelfLoopCheck {
        gamma,
        lambda_plain,
        lambda_augmented,
        passed: lambda_augmented > lambda_plain + tol,
    })
}

/// Spectral norm of `(I − ũũᵀ) S̃ˡ` for `l = 1..=layers`, by power iteration per `l`.
pub fn oversmoothing_decay(g: &Graph, layers: usize, exec: Exec) -> Result<Vec<f64>> {
    oversmoothing_decay_with(g, layers, 1.0, DEFAULT_TOL, DEFAULT_MAX_ITER, exec)
}

pub fn oversmoothing_decay_with(
    g: &Graph,
    layers: usize,
    gamma: f64,
    tol: f64,
    max_iter: usize,
    exec: Exec,
) -> Result<Vec<f64>> {
    let op = NormalizedOperator::augmented(g, gamma, exec)?;
    let n = op.dim();
    let u = op.known_eigenvector();
    let mut x = start_vector(n);
    let mut y = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut curve = Vec::with_capacity(layers);
    for l in 1..=layers {
        project_out(&mut x, &u);
        normalize(&mut x);
        let mut sigma = 0.0;
        for _ in 0..max_iter {
            y.copy_from_slice(&x);
            for _ in 0..l {
                op.apply_into(&y, &mut tmp);
                std::mem::swap(&mut y, &mut tmp);
            }
            project_out(&mut y, &u);
            let next = norm(&y);
            if next == 0.0 {
                sigma = 0.0;
                break;
            }
            let done = (next - sigma).abs() <= tol * next;
            sigma = next;
            x.iter_mut().zip(&y).for_each(|(a, b)| *a = b / next);
            if done {
                break;
            }
        }
        curve.push(sigma);
    }
    Ok(curve)
}

/// `‖S̃ˡX − ũ(ũᵀX)‖_F / ‖ũ(ũᵀX)‖_F`: how far `l` propagation steps are from the rank-1 limit.
pub fn collapse_deviation(g: &Graph, x: &Array2<f64>, l: usize, exec: Exec) -> Result<f64> {
    let op = NormalizedOperator::augmented(g, 1.0, exec)?;
    let n = op.dim();
    if x.nrows() != n {
        return Err(Error::Dimension {
            expected: n,
            got: x.nrows(),
        });
    }
    let u = op.known_eigenvector();
    let mut num = 0.0;
    let mut den = 0.0;
    let mut tmp = vec![0.0; n];
    for col in x.columns() {
        let mut y: Vec<f64> = col.to_vec();
        let c = dot(&y, &u);
        for _ in 0..l {
            op.apply_into(&y, &mut tmp);
            std::mem::swap(&mut y, &mut tmp);
        }
        for i in 0..n {
            let lim = c * u[i];
            num += (y[i] - lim).powi(2);
            den += lim * lim;
        }
    }
    if den == 0.0 {
        return Err(Error::input("features are orthogonal to the limiting eigenvector"));
    }
    Ok((num / den).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub gamma: f64,
    pub eigs: TopEigs,
    pub max_degree: usize,
    pub diameter_used: usize,
    pub bound_value: Option<f64>,
    pub decay_curve: Vec<f64>,
}

/// Eigenvalue estimates, the bound evaluated at the estimated diameter
/// (a lower bound on the true one, so the bound stays valid), and the decay curve.
pub fn report(g: &Graph, gamma: f64, layers: usize, exec: Exec) -> Result<SpectralReport> {
    let op = NormalizedOperator::augmented(g, gamma, exec)?;
    let eigs = top_eigs(&op, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let diameter_used = crate::netstats::diameter_estimate(g)?;
    let max_degree = g.max_degree();
    let bound_value = bound_lambda(max_degree, diameter_used).ok();
    let decay_curve = oversmoothing_decay_with(g, layers, gamma, DEFAULT_TOL, DEFAULT_MAX_ITER, exec)?;
    Ok(SpectralReport {
        gamma,
        eigs,
        max_degree,
        diameter_used,
        bound_value,
        decay_curve,
    })
}
