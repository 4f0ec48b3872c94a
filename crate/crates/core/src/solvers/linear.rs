use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::assembly::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    #[default]
    Direct,
    Cg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    #[serde(rename = "type")]
    pub kind: SolverKind,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { kind: SolverKind::Direct, tol: 1e-10, max_iter: 20_000 }
    }
}

pub(crate) struct LinearSolve {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x);
    b.iter().zip(ax).map(|(bi, ai)| bi - ai).collect()
}

/// Solves the symmetric positive definite system `a x = b`.
pub(crate) fn solve_spd(a: &CsrMatrix, b: &[f64], opts: &SolverOptions) -> Result<LinearSolve> {
    let bn = norm(b);
    if bn == 0.0 {
        return Ok(LinearSolve { x: vec![0.0; b.len()], residual: 0.0, iterations: 0 });
    }
    let out = match opts.kind {
        SolverKind::Direct => direct(a, b, bn)?,
        SolverKind::Cg => pcg(a, b, bn, opts),
    };
    if !(out.residual <= opts.tol) {
        return Err(Error::NotConverged { residual: out.residual, iterations: out.iterations });
    }
    Ok(out)
}

/// A reusable sparse Cholesky factorization.
pub(crate) struct Factor {
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
    n: usize,
}

impl Factor {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let llt = a
            .to_faer_lower()
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(Factor { llt, n: a.n_rows() })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.llt.solve(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    /// Solves several right-hand sides at once; `cols[j]` is column j.
    pub fn solve_many(&self, cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let rhs = Mat::from_fn(self.n, cols.len(), |i, j| cols[j][i]);
        let x = self.llt.solve(&rhs);
        (0..cols.len()).map(|j| (0..self.n).map(|i| x[(i, j)]).collect()).collect()
    }
}

fn direct(a: &CsrMatrix, b: &[f64], bn: f64) -> Result<LinearSolve> {
    let f = Factor::new(a)?;
    let mut x = f.solve(b);
    let mut r = residual(a, &x, b);
    let mut rel = norm(&r) / bn;
    let mut steps = 0;
    // iterative refinement
    while steps < 3 && rel > 1e-15 {
        let dx = f.solve(&r);
        let cand: Vec<f64> = x.iter().zip(&dx).map(|(xi, di)| xi + di).collect();
        let rc = residual(a, &cand, b);
        let relc = norm(&rc) / bn;
        steps += 1;
        if relc >= rel {
            break;
        }
        x = cand;
        r = rc;
        rel = relc;
    }
    if !rel.is_finite() {
        return Err(Error::Factorization("non-finite solution".into()));
    }
    Ok(LinearSolve { x, residual: rel, iterations: 1 + steps })
}

/// Jacobi-preconditioned conjugate gradients.
fn pcg(a: &CsrMatrix, b: &[f64], bn: f64, opts: &SolverOptions) -> LinearSolve {
    let n = b.len();
    let dinv: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    let mut it = 0;
    while it < opts.max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        it += 1;
        let rel = norm(&r) / bn;
        if rel <= 0.1 * opts.tol {
            break;
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    // report the true residual, not the recursively updated one
    let true_rel = norm(&residual(a, &x, b)) / bn;
    LinearSolve { x, residual: true_rel, iterations: it }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, t)
    }

    #[test]
    fn direct_and_cg_agree() {
        let a = laplace_1d(50);
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let d = solve_spd(&a, &b, &SolverOptions::default()).unwrap();
        let c = solve_spd(&a, &b, &SolverOptions { kind: SolverKind::Cg, ..Default::default() }).unwrap();
        let diff: f64 = d.x.iter().zip(&c.x).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(d.residual < 1e-13 && c.residual <= 1e-10 && diff < 1e-7);
    }

    #[test]
    fn cg_reports_non_convergence() {
        let a = laplace_1d(200);
        let b = vec![1.0; 200];
        let opts = SolverOptions { kind: SolverKind::Cg, tol: 1e-12, max_iter: 5 };
        assert!(matches!(solve_spd(&a, &b, &opts), Err(Error::NotConverged { .. })));
    }
}
