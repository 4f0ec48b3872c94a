//! Sharp discrete constants of the Poincaré and Korn inequalities.
//!
//! Each constant is the largest generalized eigenvalue of N x = θ D x on a space
//! where D is positive definite after pinning a few dofs; the pinned dofs only
//! select representatives of classes on which both forms are invariant. The top
//! eigenvalue is found by block inverse subspace iteration with Rayleigh–Ritz.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::assembly::{element_stiffness, CsrMatrix, ElementGeometry, ShearRule};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, Mesh, RegionSel};
use crate::material::ElementMaterial;
use crate::solvers::Factor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstantName {
    /// ∫|u − u_G|² ≤ C₁ρ² ∫|∇u|².
    #[serde(rename = "Poincare_C1")]
    PoincareC1,
    /// ∫|u − u_Γ|² ≤ C₂(1 + |G|/(ρ|Γ|)) ρ² ∫|∇u|², Γ the outer boundary.
    #[serde(rename = "Poincare_C2")]
    PoincareC2,
    /// ∫_∂G |u − u_∂G|² ≤ C₃ρ ∫_{G^ρ}|∇u|², with G the defect and G^ρ the exterior.
    #[serde(rename = "TracePoincare_C3")]
    TracePoincareC3,
    /// ∫|∇φ|² ≤ C ∫|∇̂φ|² when ∫(∇φ − ∇φᵀ) = 0.
    Korn2,
    /// ‖∇φ‖ ≤ C(‖∇̂φ‖² + ρ⁻²‖φ + ∇w‖²)^{1/2}.
    GeneralizedKorn,
}

impl ConstantName {
    pub fn label(self) -> &'static str {
        match self {
            ConstantName::PoincareC1 => "Poincare_C1",
            ConstantName::PoincareC2 => "Poincare_C2",
            ConstantName::TracePoincareC3 => "TracePoincare_C3",
            ConstantName::Korn2 => "Korn2",
            ConstantName::GeneralizedKorn => "GeneralizedKorn",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub name: ConstantName,
    pub value: f64,
    pub level: usize,
    pub iterations: usize,
}

const BLOCK: usize = 6;
const MAX_ITER: usize = 2000;
const EIG_TOL: f64 = 1e-10;

/// Largest θ with N x = θ D x; `d` must be positive definite.
fn top_eigenvalue(n_apply: &dyn Fn(&[f64]) -> Vec<f64>, d: &CsrMatrix) -> Result<(f64, usize)> {
    let m = d.n_rows();
    let p = BLOCK.min(m);
    let factor = Factor::new(d)?;
    let mut x: Vec<Vec<f64>> = (0..p)
        .map(|j| (0..m).map(|i| ((i * (j + 3) + 7 * j) as f64 * 0.618_034).sin() + 0.1).collect())
        .collect();
    let mut last = f64::NAN;
    for it in 1..=MAX_ITER {
        let nx: Vec<Vec<f64>> = x.iter().map(|v| n_apply(v)).collect();
        let y = factor.solve_many(&nx);
        let ny: Vec<Vec<f64>> = y.iter().map(|v| n_apply(v)).collect();
        let dy: Vec<Vec<f64>> = y.iter().map(|v| d.mul_vec(v)).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let ns = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&y[i], &ny[j]) + dot(&y[j], &ny[i])));
        let ds = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&y[i], &dy[j]) + dot(&y[j], &dy[i])));
        let chol = ds.cholesky().ok_or(Error::EigenStagnation(it))?;
        let l = chol.l();
        let linv = l.try_inverse().ok_or(Error::EigenStagnation(it))?;
        let c = &linv * ns * linv.transpose();
        let eig = SymmetricEigen::new(0.5 * (&c + c.transpose()));
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let coeffs = linv.transpose() * &eig.eigenvectors;
        x = order
            .iter()
            .map(|&k| {
                let mut v = vec![0.0; m];
                for (j, yj) in y.iter().enumerate() {
                    let cj = coeffs[(j, k)];
                    for i in 0..m {
                        v[i] += cj * yj[i];
                    }
                }
                v
            })
            .collect();
        let top = eig.eigenvalues[order[0]];
        if it > 3 && (top - last).abs() <= EIG_TOL * top.abs() {
            return Ok((top, it));
        }
        last = top;
    }
    Err(Error::EigenStagnation(MAX_ITER))
}

/// Scalar P1 mass and stiffness over the triangles of `region`.
fn scalar_matrices(mesh: &Mesh, region: RegionSel) -> (CsrMatrix, CsrMatrix) {
    let (mut mt, mut at) = (Vec::new(), Vec::new());
    for t in mesh.selected_triangles(region) {
        let tri = mesh.triangles()[t];
        let geo = ElementGeometry::new(mesh.triangle_points(t));
        for i in 0..3 {
            for j in 0..3 {
                let m = if i == j { geo.area / 6.0 } else { geo.area / 12.0 };
                let g = geo.grads;
                mt.push((tri[i], tri[j], m));
                at.push((tri[i], tri[j], geo.area * (g[i][0] * g[j][0] + g[i][1] * g[j][1])));
            }
        }
    }
    let n = mesh.n_nodes();
    (CsrMatrix::from_triplets(n, n, mt), CsrMatrix::from_triplets(n, n, at))
}

fn boundary_mass(mesh: &Mesh, tag: BoundaryTag) -> CsrMatrix {
    let mut t = Vec::new();
    for e in mesh.edges_tagged(tag) {
        let [a, b] = e.nodes;
        let len = mesh.nodes()[a].dist(mesh.nodes()[b]);
        t.extend([(a, a, len / 3.0), (b, b, len / 3.0), (a, b, len / 6.0), (b, a, len / 6.0)]);
    }
    let n = mesh.n_nodes();
    CsrMatrix::from_triplets(n, n, t)
}

/// Maps between a compact vector over `keep` and a full vector of length `n`.
struct Restriction {
    keep: Vec<usize>,
    n: usize,
}

impl Restriction {
    fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        for (k, &i) in self.keep.iter().enumerate() {
            v[i] = x[k];
        }
        v
    }

    fn restrict(&self, v: &[f64]) -> Vec<f64> {
        self.keep.iter().map(|&i| v[i]).collect()
    }
}

/// ‖·‖² after removing the weighted mean c = wᵀx/|w|₁: N = PᵀMP with P = I − 1wᵀ/W.
fn mean_free_apply(m: &CsrMatrix, w: &[f64], x: &[f64], active: &[usize]) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    let c = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / total;
    let mut y = x.to_vec();
    for &i in active {
        y[i] -= c;
    }
    let my = m.mul_vec(&y);
    let s: f64 = active.iter().map(|&i| my[i]).sum();
    let mut out = my;
    for (i, o) in out.iter_mut().enumerate() {
        *o -= w[i] * s / total;
    }
    out
}

fn scalar_poincare(mesh: &Mesh, rho: f64, boundary_mean: bool) -> Result<(f64, usize)> {
    let (mass, stiff) = scalar_matrices(mesh, RegionSel::All);
    let active: Vec<usize> = (0..mesh.n_nodes()).filter(|&n| mesh.node_mask(RegionSel::All)[n]).collect();
    let w: Vec<f64> = if boundary_mean {
        let bm = boundary_mass(mesh, BoundaryTag::Outer);
        bm.mul_vec(&vec![1.0; mesh.n_nodes()])
    } else {
        mass.mul_vec(&vec![1.0; mesh.n_nodes()])
    };
    let r = Restriction { keep: active[1..].to_vec(), n: mesh.n_nodes() };
    let d = stiff.submatrix(&r.keep, &r.keep);
    let apply = |x: &[f64]| r.restrict(&mean_free_apply(&mass, &w, &r.expand(x), &active));
    let (theta, it) = top_eigenvalue(&apply, &d)?;
    Ok((theta / (rho * rho), it))
}

fn trace_poincare(mesh: &Mesh, rho: f64) -> Result<(f64, usize)> {
    if !mesh.has_defect() {
        return Err(Error::NoDefect);
    }
    let (_, stiff) = scalar_matrices(mesh, RegionSel::Exterior);
    let bm = boundary_mass(mesh, BoundaryTag::Defect);
    let gamma = mesh.boundary_node_mask(BoundaryTag::Defect);
    let active: Vec<usize> = (0..mesh.n_nodes()).filter(|&n| gamma[n]).collect();
    let w = bm.mul_vec(&vec![1.0; mesh.n_nodes()]);
    let ext = mesh.node_mask(RegionSel::Exterior);
    let keep: Vec<usize> = (0..mesh.n_nodes()).filter(|&n| ext[n]).skip(1).collect();
    let r = Restriction { keep, n: mesh.n_nodes() };
    let d = stiff.submatrix(&r.keep, &r.keep);
    let apply = |x: &[f64]| r.restrict(&mean_free_apply(&bm, &w, &r.expand(x), &active));
    let (theta, it) = top_eigenvalue(&apply, &d)?;
    Ok((theta / rho, it))
}

/// Vector P1 forms ∫|∇φ|² and ∫|∇̂φ|², dofs 2·node + k.
fn vector_matrices(mesh: &Mesh) -> (CsrMatrix, CsrMatrix, Vec<f64>) {
    let (mut nt, mut dt) = (Vec::new(), Vec::new());
    let mut curl = vec![0.0; 2 * mesh.n_nodes()];
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangles()[t];
        let geo = ElementGeometry::new(mesh.triangle_points(t));
        let g = geo.grads;
        // strain rows [∂₁φ₁, ∂₂φ₂, ∂₂φ₁ + ∂₁φ₂] over local dofs 2i + k
        let mut b = [[0.0; 6]; 3];
        for i in 0..3 {
            b[0][2 * i] = g[i][0];
            b[2][2 * i] = g[i][1];
            b[1][2 * i + 1] = g[i][1];
            b[2][2 * i + 1] = g[i][0];
            curl[2 * tri[i]] -= geo.area * g[i][1];
            curl[2 * tri[i] + 1] += geo.area * g[i][0];
        }
        for r in 0..6 {
            for c in 0..6 {
                let (gr, gc) = (2 * tri[r / 2] + r % 2, 2 * tri[c / 2] + c % 2);
                let sym = b[0][r] * b[0][c] + b[1][r] * b[1][c] + 0.5 * b[2][r] * b[2][c];
                dt.push((gr, gc, geo.area * sym));
                if r % 2 == c % 2 {
                    let (i, j) = (r / 2, c / 2);
                    nt.push((gr, gc, geo.area * (g[i][0] * g[j][0] + g[i][1] * g[j][1])));
                }
            }
        }
    }
    let n = 2 * mesh.n_nodes();
    (CsrMatrix::from_triplets(n, n, nt), CsrMatrix::from_triplets(n, n, dt), curl)
}

fn korn2(mesh: &Mesh) -> Result<(f64, usize)> {
    let (full, symm, curl) = vector_matrices(mesh);
    let p = mesh.nodes();
    let n0 = 0;
    let n1 = (0..mesh.n_nodes())
        .max_by(|&a, &b| (p[a].y - p[n0].y).abs().total_cmp(&(p[b].y - p[n0].y).abs()))
        .unwrap_or(0);
    // infinitesimal rotation about node n0
    let rot: Vec<f64> = p.iter().flat_map(|q| [-(q.y - p[n0].y), q.x - p[n0].x]).collect();
    let c_rot: f64 = curl.iter().zip(&rot).map(|(a, b)| a * b).sum();
    let pinned = [2 * n0, 2 * n0 + 1, 2 * n1];
    let keep: Vec<usize> = (0..2 * mesh.n_nodes()).filter(|d| !pinned.contains(d)).collect();
    let r = Restriction { keep, n: 2 * mesh.n_nodes() };
    let d = symm.submatrix(&r.keep, &r.keep);
    let apply = |x: &[f64]| {
        // T ψ = ψ − R (c·ψ)/(c·R) meets the skew constraint; return Tᵀ N T ψ
        let mut v = r.expand(x);
        let a = curl.iter().zip(&v).map(|(c, y)| c * y).sum::<f64>() / c_rot;
        for (vi, ri) in v.iter_mut().zip(&rot) {
            *vi -= a * ri;
        }
        let mut nv = full.mul_vec(&v);
        let b = rot.iter().zip(&nv).map(|(ri, y)| ri * y).sum::<f64>() / c_rot;
        for (o, c) in nv.iter_mut().zip(&curl) {
            *o -= b * c;
        }
        r.restrict(&nv)
    };
    top_eigenvalue(&apply, &d)
}

fn generalized_korn(mesh: &Mesh, rho: f64, rule: ShearRule) -> Result<(f64, usize)> {
    let unit = ElementMaterial { shear: 1.0 / (rho * rho), b_sym: 1.0, b_tr: 0.0 };
    let n = 3 * mesh.n_nodes();
    let (mut dt, mut nt) = (Vec::new(), Vec::new());
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangles()[t];
        let k = element_stiffness(mesh.triangle_points(t), &unit, rule);
        let geo = ElementGeometry::new(mesh.triangle_points(t));
        for r in 0..9 {
            for c in 0..9 {
                let (gr, gc) = (3 * tri[r / 3] + r % 3, 3 * tri[c / 3] + c % 3);
                dt.push((gr, gc, k[r][c]));
                if r % 3 == c % 3 && r % 3 < 2 {
                    let (i, j) = (r / 3, c / 3);
                    let g = geo.grads;
                    nt.push((gr, gc, geo.area * (g[i][0] * g[j][0] + g[i][1] * g[j][1])));
                }
            }
        }
    }
    let dmat = CsrMatrix::from_triplets(n, n, dt);
    let nmat = CsrMatrix::from_triplets(n, n, nt);
    let pins = crate::solvers::pin_nodes(mesh, &vec![true; mesh.n_nodes()])?;
    let keep: Vec<usize> = (0..n).filter(|&d| !pins.iter().any(|&p| d == 3 * p + 2)).collect();
    let r = Restriction { keep, n };
    let d = dmat.submatrix(&r.keep, &r.keep);
    let apply = |x: &[f64]| r.restrict(&nmat.mul_vec(&r.expand(x)));
    let (theta, it) = top_eigenvalue(&apply, &d)?;
    Ok((theta.sqrt(), it))
}

/// Sharp discrete constant of `name` on the test domain meshed by `mesh`.
pub fn estimate_inequality_constant(
    name: ConstantName,
    mesh: &Mesh,
    rho: f64,
    rule: ShearRule,
    level: usize,
) -> Result<ConstantEstimate> {
    let (value, iterations) = match name {
        ConstantName::PoincareC1 => scalar_poincare(mesh, rho, false)?,
        ConstantName::PoincareC2 => {
            let (theta, it) = scalar_poincare(mesh, rho, true)?;
            let g = mesh.area(RegionSel::All);
            let gamma = mesh.boundary_length(BoundaryTag::Outer);
            (theta / (1.0 + g / (rho * gamma)), it)
        }
        ConstantName::TracePoincareC3 => trace_poincare(mesh, rho)?,
        ConstantName::Korn2 => korn2(mesh)?,
        ConstantName::GeneralizedKorn => generalized_korn(mesh, rho, rule)?,
    };
    Ok(ConstantEstimate { name, value, level, iterations })
}
