use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_load, BoundaryLoad};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, Mesh};

/// Discrete negative-order norms of the load on ∂Ω and their ratio 𝓕.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    /// ‖M̄‖_{-1/2} + ρ₀‖Q̄‖_{-1/2}.
    pub norm_half: f64,
    /// ‖M̄‖_{-1} + ρ₀‖Q̄‖_{-1}.
    pub norm_one: f64,
    pub f: f64,
}

/// Expands the load in the eigenbasis of the P1 Laplace–Beltrami operator on the
/// outer polyline and weights mode k by (1 + ρ₀²λ_k)^{-s}.
pub fn frequency(mesh: &Mesh, load: &BoundaryLoad, rho0: f64) -> Result<FrequencyReport> {
    let f = assemble_load(mesh, load)?;
    if f.iter().all(|&v| v == 0.0) {
        return Err(Error::Domain("frequency of a zero load".into()));
    }
    let mask = mesh.boundary_node_mask(BoundaryTag::Outer);
    let nodes: Vec<usize> = (0..mesh.n_nodes()).filter(|&n| mask[n]).collect();
    let mut idx = vec![usize::MAX; mesh.n_nodes()];
    for (k, &n) in nodes.iter().enumerate() {
        idx[n] = k;
    }
    let m = nodes.len();
    let mut mass = DMatrix::<f64>::zeros(m, m);
    let mut stiff = DMatrix::<f64>::zeros(m, m);
    for e in mesh.edges_tagged(BoundaryTag::Outer) {
        let [a, b] = e.nodes;
        let len = mesh.nodes()[a].dist(mesh.nodes()[b]);
        let (i, j) = (idx[a], idx[b]);
        for (r, c, mv, kv) in [(i, i, 2.0, 1.0), (j, j, 2.0, 1.0), (i, j, 1.0, -1.0), (j, i, 1.0, -1.0)] {
            mass[(r, c)] += mv * len / 6.0;
            stiff[(r, c)] += kv / len;
        }
    }
    // M = LLᵀ, C = L⁻¹ A L⁻ᵀ = V Λ Vᵀ; the M-orthonormal modes are L⁻ᵀV and the
    // coefficients of a load vector b are Vᵀ L⁻¹ b.
    let chol = mass.cholesky().ok_or_else(|| Error::Factorization("boundary mass matrix".into()))?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or_else(|| Error::Factorization("boundary mass factor".into()))?;
    let c = &linv * &stiff * linv.transpose();
    let c = 0.5 * (&c + c.transpose());
    let eig = SymmetricEigen::new(c);

    let coeffs = |k: usize| -> DVector<f64> {
        let b = DVector::from_iterator(m, nodes.iter().map(|&n| f[3 * n + k]));
        eig.eigenvectors.transpose() * (&linv * b)
    };
    let norm = |cf: &DVector<f64>, s: f64| -> f64 {
        cf.iter()
            .zip(eig.eigenvalues.iter())
            .map(|(c, &lam)| (1.0 + rho0 * rho0 * lam.max(0.0)).powf(-s) * c * c)
            .sum::<f64>()
            .sqrt()
    };
    let (c0, c1, cq) = (coeffs(0), coeffs(1), coeffs(2));
    let m_half = norm(&c0, 0.5).hypot(norm(&c1, 0.5));
    let m_one = norm(&c0, 1.0).hypot(norm(&c1, 1.0));
    let norm_half = m_half + rho0 * norm(&cq, 0.5);
    let norm_one = m_one + rho0 * norm(&cq, 1.0);
    Ok(FrequencyReport { norm_half, norm_one, f: norm_half / norm_one })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::EdgeLoad;
    use crate::geometry::{build_plate_mesh, DomainSpec};

    #[test]
    fn constant_force_has_unit_frequency() {
        let mesh = build_plate_mesh(&DomainSpec::unit_square(), None, 0.25).unwrap();
        let load = BoundaryLoad {
            edges: vec![EdgeLoad { q: [1.0, 1.0], m: [[0.0; 2]; 2] }; mesh.edges_tagged(BoundaryTag::Outer).count()],
        };
        let r = frequency(&mesh, &load, 1.0).unwrap();
        assert!((r.f - 1.0).abs() < 1e-10, "{}", r.f);
        assert!(frequency(&mesh, &load.scaled(0.0), 1.0).is_err());
    }
}
