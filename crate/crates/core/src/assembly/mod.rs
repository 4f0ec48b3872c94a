//! Discretization of the plate bilinear form and of the boundary load functional.
//!
//! Global dof numbering is `3 * node + k` with k = 0, 1 for φ and k = 2 for w.
//! Vectors always span every mesh node; nodes outside the active region carry zeros.

mod element;
mod load;
mod sparse;

use rayon::prelude::*;

pub use element::{element_stiffness, ElementGeometry, ElementMatrix, ElementVector, ShearRule};
pub use load::{
    assemble_load, check_compatibility, preset_load, BoundaryLoad, Compatibility, EdgeLoad, LoadPreset,
};
pub use sparse::CsrMatrix;

use crate::error::Result;
use crate::geometry::{Mesh, RegionSel};
use crate::material::PlateMaterial;

/// Stiffness matrix over all `3 * n_nodes` dofs, assembled from one region.
#[derive(Debug, Clone)]
pub struct SystemMatrix {
    pub matrix: CsrMatrix,
    pub region: RegionSel,
    pub rule: ShearRule,
    /// Nodes touched by a triangle of the region.
    pub active: Vec<bool>,
}

impl SystemMatrix {
    /// Dof indices of the active nodes in increasing order.
    pub fn active_dofs(&self) -> Vec<usize> {
        self.active
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .flat_map(|(n, _)| [3 * n, 3 * n + 1, 3 * n + 2])
            .collect()
    }
}

/// A mesh with its material and cached element matrices.
#[derive(Debug, Clone)]
pub struct PlateModel {
    mesh: Mesh,
    material: PlateMaterial,
    rule: ShearRule,
    elements: Vec<ElementMatrix>,
}

impl PlateModel {
    pub fn new(mesh: Mesh, material: PlateMaterial, rule: ShearRule) -> Result<Self> {
        material.check_len(mesh.n_triangles())?;
        let elements = (0..mesh.n_triangles())
            .into_par_iter()
            .map(|t| element_stiffness(mesh.triangle_points(t), &material.element(t), rule))
            .collect();
        Ok(PlateModel { mesh, material, rule, elements })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn material(&self) -> &PlateMaterial {
        &self.material
    }

    pub fn rule(&self) -> ShearRule {
        self.rule
    }

    pub fn n_dofs(&self) -> usize {
        3 * self.mesh.n_nodes()
    }

    pub fn element_matrix(&self, t: usize) -> &ElementMatrix {
        &self.elements[t]
    }

    pub fn element_geometry(&self, t: usize) -> ElementGeometry {
        ElementGeometry::new(self.mesh.triangle_points(t))
    }

    pub fn gather(&self, u: &[f64], t: usize) -> ElementVector {
        let tri = self.mesh.triangles()[t];
        std::array::from_fn(|i| u[3 * tri[i / 3] + i % 3])
    }

    pub fn assemble(&self, region: RegionSel) -> SystemMatrix {
        let mut trip = Vec::new();
        for t in self.mesh.selected_triangles(region) {
            let tri = self.mesh.triangles()[t];
            let k = &self.elements[t];
            for r in 0..9 {
                for c in 0..9 {
                    trip.push((3 * tri[r / 3] + r % 3, 3 * tri[c / 3] + c % 3, k[r][c]));
                }
            }
        }
        let n = self.n_dofs();
        SystemMatrix {
            matrix: CsrMatrix::from_triplets(n, n, trip),
            region,
            rule: self.rule,
            active: self.mesh.node_mask(region),
        }
    }

    /// a_R(u, v) summed element by element with the assembly quadrature.
    pub fn bilinear(&self, region: RegionSel, u: &[f64], v: &[f64]) -> f64 {
        self.mesh
            .selected_triangles(region)
            .map(|t| {
                let (ue, ve) = (self.gather(u, t), self.gather(v, t));
                let k = &self.elements[t];
                let mut s = 0.0;
                for r in 0..9 {
                    let kr: f64 = (0..9).map(|c| k[r][c] * ve[c]).sum();
                    s += ue[r] * kr;
                }
                s
            })
            .sum()
    }

    pub fn energy(&self, region: RegionSel, u: &[f64]) -> f64 {
        self.bilinear(region, u, u)
    }
}

/// Assembles the stiffness of `region` without keeping the model around.
pub fn assemble_stiffness(
    mesh: &Mesh,
    material: &PlateMaterial,
    region: RegionSel,
    rule: ShearRule,
) -> Result<SystemMatrix> {
    Ok(PlateModel::new(mesh.clone(), material.clone(), rule)?.assemble(region))
}
