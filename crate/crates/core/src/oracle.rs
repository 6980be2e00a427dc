//! Brute-force reference implementations for validation.
//!
//! Nothing here calls into the traversal, spectral or autodiff code; the
//! oracles read a [`Graph`] only through its edge list.

use crate::error::{Error, Result};
use crate::graph::Graph;

pub const ECCENTRICITY_CAP: usize = 1000;
pub const DIAMETER_CAP: usize = 2000;
pub const EIGS_CAP: usize = 500;

fn cap(what: &'static str, n: usize, cap: usize) -> Result<()> {
    if n > cap {
        Err(Error::SizeCap { what, n, cap })
    } else {
        Ok(())
    }
}

fn edge_list(g: &Graph, weighted: bool) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for (u, v, w) in g.edges() {
        let w = if weighted { w } else { 1.0 };
        out.push((u, v, w));
        out.push((v, u, w));
    }
    out
}

/// Single-source distances by Bellman-Ford relaxation to a fixed point.
fn bellman_ford(n: usize, arcs: &[(usize, usize, f64)], s: usize) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; n];
    d[s] = 0.0;
    loop {
        let mut changed = false;
        for &(u, v, w) in arcs {
            if d[u].is_finite() && d[u] + w < d[v] {
                d[v] = d[u] + w;
                changed = true;
            }
        }
        if !changed {
            return d;
        }
    }
}

/// Largest finite shortest-path distance from each node.
pub fn exact_eccentricity(g: &Graph, weighted: bool) -> Result<Vec<f64>> {
    let n = g.n_nodes();
    cap("exact eccentricity", n, ECCENTRICITY_CAP)?;
    let arcs = edge_list(g, weighted);
    Ok((0..n)
        .map(|s| {
            bellman_ford(n, &arcs, s)
                .into_iter()
                .filter(|d| d.is_finite())
                .fold(0.0, f64::max)
        })
        .collect())
}

/// Longest unweighted shortest path, by BFS from every node.
pub fn exact_diameter(g: &Graph) -> Result<usize> {
    let n = g.n_nodes();
    cap("exact diameter", n, DIAMETER_CAP)?;
    let mut adj = vec![Vec::new(); n];
    for (u, v, _) in g.edges() {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut best = 0;
    let mut dist = vec![usize::MAX; n];
    let mut queue = Vec::with_capacity(n);
    for s in 0..n {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[s] = 0;
        queue.clear();
        queue.push(s);
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head];
            head += 1;
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    best = best.max(dist[v]);
                    queue.push(v);
                }
            }
        }
    }
    Ok(best)
}

/// Square row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: r.len(),
                });
            }
            m.data[i * n..(i + 1) * n].copy_from_slice(r);
        }
        Ok(m)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.n + j] = x;
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a != 0.0 {
                    for j in 0..n {
                        out.data[i * n + j] += a * other.get(k, j);
                    }
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self.get(i, j).powi(2);
                }
            }
        }
        s.sqrt()
    }
}

/// `(γI + D)^{-1/2} (γI + A) (γI + D)^{-1/2}` with binary adjacency; `gamma = 0`
/// gives the plain normalized adjacency.
pub fn dense_normalized_adjacency(g: &Graph, gamma: f64) -> Result<DenseMatrix> {
    let n = g.n_nodes();
    cap("dense operator", n, EIGS_CAP)?;
    let mut deg = vec![gamma; n];
    let mut m = DenseMatrix::zeros(n);
    for (u, v, _) in g.edges() {
        deg[u] += 1.0;
        deg[v] += 1.0;
        m.set(u, v, 1.0);
        m.set(v, u, 1.0);
    }
    for i in 0..n {
        m.set(i, i, gamma);
    }
    for i in 0..n {
        for j in 0..n {
            let x = m.get(i, j);
            if x != 0.0 {
                m.set(i, j, x / (deg[i] * deg[j]).sqrt());
            }
        }
    }
    Ok(m)
}

/// `I - D^{-1/2} A D^{-1/2}`.
pub fn dense_laplacian(g: &Graph) -> Result<DenseMatrix> {
    let s = dense_normalized_adjacency(g, 0.0)?;
    let mut l = DenseMatrix::identity(s.n);
    for (x, y) in l.data.iter_mut().zip(&s.data) {
        *x -= y;
    }
    Ok(l)
}

#[derive(Clone, Debug)]
pub struct DenseEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: DenseMatrix,
}

impl DenseEigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.vectors.n).map(|i| self.vectors.get(i, k)).collect()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.vectors.n;
        let mut out = DenseMatrix::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    out.data[i * n + j] +=
                        self.values[k] * self.vectors.get(i, k) * self.vectors.get(j, k);
                }
            }
        }
        out
    }
}

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below `tol`.
pub fn dense_eigs(m: &DenseMatrix, tol: f64) -> Result<DenseEigen> {
    let n = m.n;
    cap("dense eigensolver", n, EIGS_CAP)?;
    let scale = m.frobenius().max(1.0);
    for i in 0..n {
        for j in i + 1..n {
            if (m.get(i, j) - m.get(j, i)).abs() > 1e-12 * scale {
                return Err(Error::input(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let mut a = m.clone();
    let mut v = DenseMatrix::identity(n);
    for _sweep in 0..100 {
        if a.off_diagonal_norm() < tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    if a.off_diagonal_norm() >= tol {
        return Err(Error::Domain(format!(
            "Jacobi did not converge, off-diagonal norm {:e}",
            a.off_diagonal_norm()
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).total_cmp(&a.get(j, j)));
    let values = order.iter().map(|&i| a.get(i, i)).collect();
    let mut vectors = DenseMatrix::zeros(n);
    for (k, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors.set(i, k, v.get(i, src));
        }
    }
    Ok(DenseEigen { values, vectors })
}

/// Central-difference Jacobian of `f` with respect to every entry of `x`.
///
/// Returns one matrix per output component, each shaped like `x`.
pub fn finite_diff_jacobian<F>(f: F, x: &[Vec<f64>], step: f64) -> Result<Vec<Vec<Vec<f64>>>>
where
    F: Fn(&[Vec<f64>]) -> Vec<f64>,
{
    if !(1e-7..=1e-3).contains(&step) {
        return Err(Error::input(format!("step {step} outside [1e-7, 1e-3]")));
    }
    let outputs = f(x).len();
    let mut jac = vec![x.iter().map(|r| vec![0.0; r.len()]).collect::<Vec<_>>(); outputs];
    let mut probe = x.to_vec();
    for u in 0..x.len() {
        for j in 0..x[u].len() {
            probe[u][j] = x[u][j] + step;
            let plus = f(&probe);
            probe[u][j] = x[u][j] - step;
            let minus = f(&probe);
            probe[u][j] = x[u][j];
            for c in 0..outputs {
                jac[c][u][j] = (plus[c] - minus[c]) / (2.0 * step);
            }
        }
    }
    Ok(jac)
}
