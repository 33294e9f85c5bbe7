//! Sparse symmetric matrices, the Bethe Hessian and power iteration.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Symmetric matrix stored as CSR rows with an explicit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetric {
    diag: Vec<f64>,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSymmetric {
    /// `diag + scale·A`.
    pub fn from_graph(g: &Graph, diag: Vec<f64>, scale: f64) -> SparseSymmetric {
        let mut offsets = vec![0];
        let mut cols = Vec::new();
        for i in 0..g.n() {
            cols.extend_from_slice(g.neighbors(i));
            offsets.push(cols.len());
        }
        let vals = vec![scale; cols.len()];
        SparseSymmetric { diag, offsets, cols, vals }
    }

    /// Diagonal matrix.
    pub fn diagonal(diag: Vec<f64>) -> SparseSymmetric {
        let offsets = vec![0; diag.len() + 1];
        SparseSymmetric { diag, offsets, cols: Vec::new(), vals: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|i| {
                let off: f64 = (self.offsets[i]..self.offsets[i + 1]).map(|p| self.vals[p] * v[self.cols[p]]).sum();
                self.diag[i] * v[i] + off
            })
            .collect()
    }

    /// `κI − self`.
    pub fn shifted_negated(&self, kappa: f64) -> SparseSymmetric {
        SparseSymmetric {
            diag: self.diag.iter().map(|d| kappa - d).collect(),
            offsets: self.offsets.clone(),
            cols: self.cols.clone(),
            vals: self.vals.iter().map(|v| -v).collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] += self.diag[i];
            for p in self.offsets[i]..self.offsets[i + 1] {
                m[i][self.cols[p]] += self.vals[p];
            }
        }
        m
    }

    /// Gershgorin lower bound on the smallest eigenvalue.
    fn gershgorin_lower(&self) -> f64 {
        (0..self.n())
            .map(|i| {
                let radius: f64 = (self.offsets[i]..self.offsets[i + 1]).map(|p| self.vals[p].abs()).sum();
                self.diag[i] - radius
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Bethe Hessian `H(r) = (r² − 1)I − rA + D`.
pub fn bethe_hessian(g: &Graph, r: f64) -> SparseSymmetric {
    let diag = (0..g.n()).map(|i| r * r - 1.0 + g.degree(i) as f64).collect();
    SparseSymmetric::from_graph(g, diag, -r)
}

#[derive(Debug, Clone, Copy)]
pub struct PowerIterationOptions {
    pub tol: f64,
    /// `None` → `max(10·n, 1000)`.
    pub max_iter: Option<usize>,
    pub seed: u64,
}

impl Default for PowerIterationOptions {
    fn default() -> Self {
        PowerIterationOptions { tol: 1e-10, max_iter: None, seed: 0 }
    }
}

/// Leading eigenpairs, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn residual(m: &SparseSymmetric, v: &[f64], lambda: f64) -> f64 {
    let mv = m.matvec(v);
    mv.iter().zip(v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt()
}

/// Extra iterate vectors carried alongside the requested ones; convergence
/// then depends on the gap to the eigenvalue after the guard block.
const GUARD: usize = 8;

/// Algebraically largest `count ∈ {1, 2}` eigenpairs by block power
/// iteration on a positively shifted matrix. Each sweep multiplies the block,
/// re-orthonormalizes it and rotates it onto its Ritz vectors, so the second
/// vector stays orthogonal to the first. Converged once successive Rayleigh
/// quotients of the requested pairs move by less than `tol`.
pub fn leading_eigenvectors(m: &SparseSymmetric, count: usize, opts: PowerIterationOptions) -> Result<EigenPairs> {
    let n = m.n();
    if !(1..=2).contains(&count) || count > n {
        return Err(Error::InvalidArgument(format!("eigenvector count {count} for n = {n}")));
    }
    let max_iter = opts.max_iter.unwrap_or((10 * n).max(1000));
    // shift so every eigenvalue of m + σI is non-negative
    let shift = (-m.gershgorin_lower()).max(0.0);
    let width = (count + GUARD).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis: Vec<Vec<f64>> = (0..width)
        .map(|_| (0..n).map(|_| rng.gen::<f64>() - 0.5).collect())
        .collect();
    orthonormalize(&mut basis);
    let mut rq = vec![f64::NAN; count];
    let mut values = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        for v in basis.iter_mut() {
            let mv = m.matvec(v);
            *v = mv.iter().zip(v.iter()).map(|(a, b)| a + shift * b).collect();
        }
        orthonormalize(&mut basis);
        let (vals, vecs) = rayleigh_ritz(m, &basis);
        basis = vecs;
        let done = vals.iter().zip(&rq).all(|(a, b)| (a - b).abs() < opts.tol);
        rq = vals[..count].to_vec();
        values = vals;
        if done {
            converged = true;
            break;
        }
    }
    values.truncate(count);
    basis.truncate(count);
    let residuals: Vec<f64> = values.iter().zip(&basis).map(|(l, v)| residual(m, v, *l)).collect();
    if !converged {
        return Err(Error::NoConvergence { iterations, residual: residuals.iter().cloned().fold(0.0, f64::max) });
    }
    Ok(EigenPairs { values, vectors: basis, residuals, iterations })
}

fn orthonormalize(basis: &mut [Vec<f64>]) {
    // two passes of modified Gram–Schmidt keep the block orthonormal to
    // working precision
    for _ in 0..2 {
        for j in 0..basis.len() {
            let (head, tail) = basis.split_at_mut(j);
            for prev in head.iter() {
                let c = dot(prev, &tail[0]);
                tail[0].iter_mut().zip(prev).for_each(|(x, y)| *x -= c * y);
            }
            normalize(&mut tail[0]);
        }
    }
}

/// Ritz pairs of `m` on the span of an orthonormal block, eigenvalues
/// descending.
fn rayleigh_ritz(m: &SparseSymmetric, basis: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let p = basis.len();
    let mv: Vec<Vec<f64>> = basis.iter().map(|v| m.matvec(v)).collect();
    let t = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&basis[i], &mv[j]) + dot(&basis[j], &mv[i])));
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let n = basis.first().map_or(0, Vec::len);
    let vectors = order
        .iter()
        .map(|&c| {
            let mut v = vec![0.0; n];
            for (i, b) in basis.iter().enumerate() {
                let w = eig.eigenvectors[(i, c)];
                v.iter_mut().zip(b).for_each(|(x, y)| *x += w * y);
            }
            v
        })
        .collect();
    (order.iter().map(|&c| eig.eigenvalues[c]).collect(), vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_at_r_one() {
        let g = Graph::path(3);
        let h = bethe_hessian(&g, 1.0).to_dense();
        assert_eq!(h, vec![vec![1.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 1.0]]);
    }

    #[test]
    fn edgeless_graph() {
        let h = bethe_hessian(&Graph::empty(3), 2.0).to_dense();
        assert_eq!(h, vec![vec![3.0, 0.0, 0.0], vec![0.0, 3.0, 0.0], vec![0.0, 0.0, 3.0]]);
    }

    #[test]
    fn hexagon_shifted_top_pair() {
        let r = 2f64.sqrt();
        let m = bethe_hessian(&Graph::cycle(6), r).shifted_negated(8.0);
        let pairs = leading_eigenvectors(&m, 1, PowerIterationOptions::default()).unwrap();
        assert!((pairs.values[0] - (5.0 + 2.0 * r)).abs() < 1e-8);
        let v = &pairs.vectors[0];
        let s = v[0].signum();
        for x in v {
            assert!((x * s - 1.0 / 6f64.sqrt()).abs() < 1e-4);
        }
    }

    #[test]
    fn identity_eigenvalue() {
        let pairs = leading_eigenvectors(&SparseSymmetric::diagonal(vec![1.0; 4]), 1, Default::default()).unwrap();
        assert!((pairs.values[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_two_pairs() {
        let pairs = leading_eigenvectors(&SparseSymmetric::diagonal(vec![3.0, 1.0]), 2, Default::default()).unwrap();
        assert!((pairs.values[0] - 3.0).abs() < 1e-9);
        assert!((pairs.values[1] - 1.0).abs() < 1e-9);
        assert!((pairs.vectors[0][0].abs() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn negative_dominant_spectrum() {
        // eigenvalues 1 and -5: the algebraically largest must win
        let pairs = leading_eigenvectors(&SparseSymmetric::diagonal(vec![1.0, -5.0, 0.5]), 2, Default::default()).unwrap();
        assert!((pairs.values[0] - 1.0).abs() < 1e-9);
        assert!((pairs.values[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn non_convergence_reported() {
        let g = Graph::cycle(50);
        let m = bethe_hessian(&g, 1.3);
        let opts = PowerIterationOptions { tol: 1e-14, max_iter: Some(3), seed: 1 };
        assert!(matches!(leading_eigenvectors(&m, 2, opts), Err(Error::NoConvergence { iterations: 3, .. })));
    }
}
