use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, Mesh, Point2};
use crate::material::PlateMaterial;

/// Linear data on one outer edge: values at the two edge endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EdgeLoad {
    /// Transverse force Q̄.
    pub q: [f64; 2],
    /// Couple M̄, `m[endpoint][component]`.
    pub m: [[f64; 2]; 2],
}

/// Boundary load on the outer edges, in the order of `mesh.edges_tagged(Outer)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundaryLoad {
    pub edges: Vec<EdgeLoad>,
}

impl BoundaryLoad {
    pub fn zero(mesh: &Mesh) -> Self {
        BoundaryLoad { edges: vec![EdgeLoad::default(); mesh.edges_tagged(BoundaryTag::Outer).count()] }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let edges = self
            .edges
            .iter()
            .map(|e| EdgeLoad {
                q: [s * e.q[0], s * e.q[1]],
                m: [[s * e.m[0][0], s * e.m[0][1]], [s * e.m[1][0], s * e.m[1][1]]],
            })
            .collect();
        BoundaryLoad { edges }
    }

    /// self + s · other.
    pub fn axpy(&self, s: f64, other: &BoundaryLoad) -> Result<Self> {
        if self.edges.len() != other.edges.len() {
            return Err(Error::LoadMismatch(format!("{} vs {} edges", self.edges.len(), other.edges.len())));
        }
        let o = other.scaled(s);
        let edges = self
            .edges
            .iter()
            .zip(&o.edges)
            .map(|(a, b)| EdgeLoad {
                q: [a.q[0] + b.q[0], a.q[1] + b.q[1]],
                m: [
                    [a.m[0][0] + b.m[0][0], a.m[0][1] + b.m[0][1]],
                    [a.m[1][0] + b.m[1][0], a.m[1][1] + b.m[1][1]],
                ],
            })
            .collect();
        Ok(BoundaryLoad { edges })
    }

    /// The same piecewise-linear data on the edges of `mesh.refine()`.
    pub fn refined(&self) -> Self {
        let mut edges = Vec::with_capacity(2 * self.edges.len());
        for e in &self.edges {
            let qm = 0.5 * (e.q[0] + e.q[1]);
            let mm = [0.5 * (e.m[0][0] + e.m[1][0]), 0.5 * (e.m[0][1] + e.m[1][1])];
            edges.push(EdgeLoad { q: [e.q[0], qm], m: [e.m[0], mm] });
            edges.push(EdgeLoad { q: [qm, e.q[1]], m: [mm, e.m[1]] });
        }
        BoundaryLoad { edges }
    }

    pub fn is_zero(&self) -> bool {
        self.edges.iter().all(|e| e.q == [0.0; 2] && e.m == [[0.0; 2]; 2])
    }

    fn check(&self, mesh: &Mesh) -> Result<()> {
        let n = mesh.edges_tagged(BoundaryTag::Outer).count();
        if self.edges.len() != n {
            return Err(Error::LoadMismatch(format!("{} edge loads for {n} outer edges", self.edges.len())));
        }
        if self.edges.iter().any(|e| !(e.q.iter().chain(e.m.iter().flatten())).all(|v| v.is_finite())) {
            return Err(Error::LoadMismatch("non-finite load value".into()));
        }
        Ok(())
    }
}

/// Analytic load families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum LoadPreset {
    /// M̄ = (ℙ κ e₁⊗e₁) n, Q̄ = 0.
    PureBendingX {
        #[serde(default = "one")]
        kappa: f64,
    },
    /// M̄ = (ℙ κ (e₁⊗e₂ + e₂⊗e₁)) n, Q̄ = 0.
    Twist {
        #[serde(default = "one")]
        kappa: f64,
    },
    /// Q̄ = A cos(2πk s / |∂Ω|) with its mean removed, and the constant M̄ that
    /// restores the couple balance.
    FourierMode {
        k: u32,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl LoadPreset {
    pub fn name(&self) -> String {
        match self {
            LoadPreset::PureBendingX { .. } => "pure_bending_x".into(),
            LoadPreset::Twist { .. } => "twist".into(),
            LoadPreset::FourierMode { k, .. } => format!("fourier_mode_{k}"),
        }
    }
}

fn edge_geometry(mesh: &Mesh, nodes: [usize; 2]) -> (Point2, Point2, f64, Point2) {
    let (a, b) = (mesh.nodes()[nodes[0]], mesh.nodes()[nodes[1]]);
    let d = b - a;
    let len = d.norm();
    // Ω lies on the left of outer edges, so the outward normal points right.
    (a, b, len, Point2::new(d.y / len, -d.x / len))
}

pub fn preset_load(mesh: &Mesh, material: &PlateMaterial, preset: LoadPreset) -> Result<BoundaryLoad> {
    let constant_couple = |grad: [[f64; 2]; 2]| -> Result<BoundaryLoad> {
        let em = material
            .constant()
            .ok_or_else(|| Error::Config("moment presets need constant Lamé fields".into()))?;
        let p = em.apply(grad);
        let edges = mesh
            .edges_tagged(BoundaryTag::Outer)
            .map(|e| {
                let (_, _, _, n) = edge_geometry(mesh, e.nodes);
                let m = [p[0][0] * n.x + p[0][1] * n.y, p[1][0] * n.x + p[1][1] * n.y];
                EdgeLoad { q: [0.0; 2], m: [m, m] }
            })
            .collect();
        Ok(BoundaryLoad { edges })
    };
    match preset {
        LoadPreset::PureBendingX { kappa } => constant_couple([[kappa, 0.0], [0.0, 0.0]]),
        LoadPreset::Twist { kappa } => constant_couple([[0.0, kappa], [kappa, 0.0]]),
        LoadPreset::FourierMode { k, amplitude } => fourier_load(mesh, k, amplitude),
    }
}

fn fourier_load(mesh: &Mesh, k: u32, amplitude: f64) -> Result<BoundaryLoad> {
    let perimeter = mesh.boundary_length(BoundaryTag::Outer);
    let mut q_at = vec![0.0; mesh.n_nodes()];
    for lp in mesh.boundary_loops(BoundaryTag::Outer) {
        let mut s = 0.0;
        for (i, &n) in lp.iter().enumerate() {
            if i > 0 {
                s += mesh.nodes()[lp[i - 1]].dist(mesh.nodes()[n]);
            }
            q_at[n] = amplitude * (2.0 * PI * f64::from(k) * s / perimeter).cos();
        }
    }
    let mut load = BoundaryLoad {
        edges: mesh
            .edges_tagged(BoundaryTag::Outer)
            .map(|e| EdgeLoad { q: [q_at[e.nodes[0]], q_at[e.nodes[1]]], m: [[0.0; 2]; 2] })
            .collect(),
    };
    let c = check_compatibility(mesh, &load)?;
    let mean_q = c.force / perimeter;
    for e in &mut load.edges {
        e.q[0] -= mean_q;
        e.q[1] -= mean_q;
    }
    let c = check_compatibility(mesh, &load)?;
    let m = [c.couple[0] / perimeter, c.couple[1] / perimeter];
    for e in &mut load.edges {
        e.m = [m, m];
    }
    Ok(load)
}

/// ∫ f N_a over an edge for linear f with endpoint values f0, f1.
fn hat_moments(len: f64, f0: f64, f1: f64) -> [f64; 2] {
    [len * (2.0 * f0 + f1) / 6.0, len * (f0 + 2.0 * f1) / 6.0]
}

/// ∫ f g over an edge for linear f and g.
fn linear_product(len: f64, f: [f64; 2], g: [f64; 2]) -> f64 {
    len * (2.0 * f[0] * g[0] + f[0] * g[1] + f[1] * g[0] + 2.0 * f[1] * g[1]) / 6.0
}

/// Load vector with entries ∫ M̄·N_a e_k (k = 0, 1) and ∫ Q̄ N_a (k = 2).
pub fn assemble_load(mesh: &Mesh, load: &BoundaryLoad) -> Result<Vec<f64>> {
    load.check(mesh)?;
    let mut f = vec![0.0; 3 * mesh.n_nodes()];
    for (e, el) in mesh.edges_tagged(BoundaryTag::Outer).zip(&load.edges) {
        let (_, _, len, _) = edge_geometry(mesh, e.nodes);
        let q = hat_moments(len, el.q[0], el.q[1]);
        let m0 = hat_moments(len, el.m[0][0], el.m[1][0]);
        let m1 = hat_moments(len, el.m[0][1], el.m[1][1]);
        for end in 0..2 {
            let n = e.nodes[end];
            f[3 * n] += m0[end];
            f[3 * n + 1] += m1[end];
            f[3 * n + 2] += q[end];
        }
    }
    Ok(f)
}

/// Residuals ∫Q̄ and ∫(Q̄x − M̄) with the scales used to judge them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Compatibility {
    pub force: f64,
    pub couple: [f64; 2],
    /// ∫|Q̄|, bounding |force|.
    pub force_scale: f64,
    /// ∫(|Q̄||x| + |M̄|), bounding |couple|.
    pub couple_scale: f64,
    pub compatible: bool,
}

impl Compatibility {
    pub const TOL: f64 = 1e-10;

    pub fn relative_force(&self) -> f64 {
        if self.force_scale > 0.0 {
            self.force.abs() / self.force_scale
        } else {
            0.0
        }
    }

    pub fn relative_couple(&self) -> f64 {
        if self.couple_scale > 0.0 {
            self.couple[0].hypot(self.couple[1]) / self.couple_scale
        } else {
            0.0
        }
    }
}

pub fn check_compatibility(mesh: &Mesh, load: &BoundaryLoad) -> Result<Compatibility> {
    load.check(mesh)?;
    let (mut force, mut couple) = (0.0, [0.0; 2]);
    let (mut fs, mut cs) = (0.0, 0.0);
    for (e, el) in mesh.edges_tagged(BoundaryTag::Outer).zip(&load.edges) {
        let (a, b, len, _) = edge_geometry(mesh, e.nodes);
        force += 0.5 * len * (el.q[0] + el.q[1]);
        couple[0] += linear_product(len, el.q, [a.x, b.x]) - 0.5 * len * (el.m[0][0] + el.m[1][0]);
        couple[1] += linear_product(len, el.q, [a.y, b.y]) - 0.5 * len * (el.m[0][1] + el.m[1][1]);
        // endpoint maxima bound the edge integrals of the absolute values
        let qmax = el.q[0].abs().max(el.q[1].abs());
        let mmax = el.m[0][0].hypot(el.m[0][1]).max(el.m[1][0].hypot(el.m[1][1]));
        fs += len * qmax;
        cs += len * (qmax * a.norm().max(b.norm()) + mmax);
    }
    let mut c = Compatibility { force, couple, force_scale: fs, couple_scale: cs, compatible: true };
    c.compatible = c.relative_force() <= Compatibility::TOL && c.relative_couple() <= Compatibility::TOL;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_plate_mesh, DomainSpec};

    fn square() -> Mesh {
        build_plate_mesh(&DomainSpec::unit_square(), None, 0.25).unwrap()
    }

    #[test]
    fn constant_force_residual() {
        let m = square();
        let mut load = BoundaryLoad::zero(&m);
        for e in &mut load.edges {
            e.q = [0.7, 0.7];
        }
        let c = check_compatibility(&m, &load).unwrap();
        assert!((c.force - 0.7 * 4.0).abs() < 1e-14);
        assert!(!c.compatible);
    }

    #[test]
    fn refined_data_keeps_residuals() {
        let m = square();
        let mat = PlateMaterial::uniform(1.0, 1.0, 0.1);
        let load = preset_load(&m, &mat, LoadPreset::FourierMode { k: 3, amplitude: 1.0 }).unwrap();
        let c0 = check_compatibility(&m, &load).unwrap();
        let c1 = check_compatibility(&m.refine(), &load.refined()).unwrap();
        assert!(c0.compatible && c1.compatible);
        assert!((c0.force - c1.force).abs() < 1e-14);
        assert!((c0.couple[0] - c1.couple[0]).abs() < 1e-14);
        assert!((c0.couple[1] - c1.couple[1]).abs() < 1e-14);
    }

    #[test]
    fn load_vector_totals() {
        let m = square();
        let mut load = BoundaryLoad::zero(&m);
        for e in &mut load.edges {
            e.q = [1.0, 3.0];
            e.m = [[2.0, 0.0], [2.0, -1.0]];
        }
        let f = assemble_load(&m, &load).unwrap();
        let per = 0.25;
        let n = load.edges.len() as f64;
        let sum = |k: usize| f.iter().skip(k).step_by(3).sum::<f64>();
        assert!((sum(2) - n * per * 2.0).abs() < 1e-13);
        assert!((sum(0) - n * per * 2.0).abs() < 1e-13);
        assert!((sum(1) + n * per * 0.5).abs() < 1e-13);
        assert!(assemble_load(&m.refine(), &load).is_err());
    }
}
