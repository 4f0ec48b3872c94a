use serde::{Deserialize, Serialize};

use crate::geometry::{signed_area2, Point2};
use crate::material::ElementMaterial;

/// Quadrature for the shear term. `Reduced` is the one-point centroid rule;
/// `Full` uses the three edge midpoints and is exact for the P1 shear energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShearRule {
    #[default]
    Reduced,
    Full,
}

const CENTROID: [([f64; 3], f64); 1] = [([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1.0)];
const MIDPOINTS: [([f64; 3], f64); 3] = [
    ([0.5, 0.5, 0.0], 1.0 / 3.0),
    ([0.0, 0.5, 0.5], 1.0 / 3.0),
    ([0.5, 0.0, 0.5], 1.0 / 3.0),
];

impl ShearRule {
    /// Barycentric points and weights summing to one.
    pub fn points(self) -> &'static [([f64; 3], f64)] {
        match self {
            ShearRule::Reduced => &CENTROID,
            ShearRule::Full => &MIDPOINTS,
        }
    }
}

pub type ElementMatrix = [[f64; 9]; 9];
pub type ElementVector = [f64; 9];

/// Area and barycentric gradients of a P1 triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub area: f64,
    pub grads: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn new(p: [Point2; 3]) -> Self {
        let a2 = signed_area2(p[0], p[1], p[2]);
        let mut grads = [[0.0; 2]; 3];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            grads[i] = [(p[j].y - p[k].y) / a2, (p[k].x - p[j].x) / a2];
        }
        ElementGeometry { area: 0.5 * a2, grads }
    }

    /// ∇φ with entry [α][β] = ∂_β φ_α.
    pub fn grad_phi(&self, u: &ElementVector) -> [[f64; 2]; 2] {
        let mut g = [[0.0; 2]; 2];
        for i in 0..3 {
            for a in 0..2 {
                for b in 0..2 {
                    g[a][b] += u[3 * i + a] * self.grads[i][b];
                }
            }
        }
        g
    }

    pub fn grad_w(&self, u: &ElementVector) -> [f64; 2] {
        let mut g = [0.0; 2];
        for i in 0..3 {
            g[0] += u[3 * i + 2] * self.grads[i][0];
            g[1] += u[3 * i + 2] * self.grads[i][1];
        }
        g
    }

    /// φ + ∇w at a barycentric point.
    pub fn shear_strain(&self, u: &ElementVector, bary: [f64; 3]) -> [f64; 2] {
        let gw = self.grad_w(u);
        let mut s = gw;
        for i in 0..3 {
            s[0] += bary[i] * u[3 * i];
            s[1] += bary[i] * u[3 * i + 1];
        }
        s
    }

    /// a_T(u, v) with the same quadrature as the stiffness matrix.
    pub fn bilinear(&self, m: &ElementMaterial, rule: ShearRule, u: &ElementVector, v: &ElementVector) -> f64 {
        let (gu, gv) = (self.grad_phi(u), self.grad_phi(v));
        let bend = crate::material::frobenius(m.apply(gu), gv);
        let shear: f64 = rule
            .points()
            .iter()
            .map(|&(q, wq)| {
                let (su, sv) = (self.shear_strain(u, q), self.shear_strain(v, q));
                wq * (su[0] * sv[0] + su[1] * sv[1])
            })
            .sum();
        self.area * (bend + m.shear * shear)
    }
}

/// 9×9 element stiffness, local dof 3i + k with k = 0, 1 for φ and k = 2 for w.
pub fn element_stiffness(p: [Point2; 3], m: &ElementMaterial, rule: ShearRule) -> ElementMatrix {
    let geo = ElementGeometry::new(p);
    let g = geo.grads;

    // bending strain [∂₁φ₁, ∂₂φ₂, ∂₂φ₁ + ∂₁φ₂]
    let mut b = [[0.0; 9]; 3];
    for i in 0..3 {
        b[0][3 * i] = g[i][0];
        b[2][3 * i] = g[i][1];
        b[1][3 * i + 1] = g[i][1];
        b[2][3 * i + 1] = g[i][0];
    }
    let d = [
        [m.b_sym + m.b_tr, m.b_tr, 0.0],
        [m.b_tr, m.b_sym + m.b_tr, 0.0],
        [0.0, 0.0, 0.5 * m.b_sym],
    ];

    let mut k = [[0.0; 9]; 9];
    for r in 0..9 {
        for c in 0..9 {
            let mut s = 0.0;
            for x in 0..3 {
                for y in 0..3 {
                    s += b[x][r] * d[x][y] * b[y][c];
                }
            }
            k[r][c] = geo.area * s;
        }
    }

    for &(q, wq) in rule.points() {
        let mut gs = [[0.0; 9]; 2];
        for i in 0..3 {
            gs[0][3 * i] = q[i];
            gs[1][3 * i + 1] = q[i];
            gs[0][3 * i + 2] = g[i][0];
            gs[1][3 * i + 2] = g[i][1];
        }
        let f = geo.area * m.shear * wq;
        for r in 0..9 {
            for c in 0..9 {
                k[r][c] += f * (gs[0][r] * gs[0][c] + gs[1][r] * gs[1][c]);
            }
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> [Point2; 3] {
        [Point2::new(0.1, 0.2), Point2::new(1.3, 0.4), Point2::new(0.5, 1.1)]
    }

    #[test]
    fn gradients_reproduce_linear_fields() {
        let geo = ElementGeometry::new(tri());
        let f = |p: Point2| 2.0 * p.x - 3.0 * p.y + 0.5;
        let mut u = [0.0; 9];
        for (i, p) in tri().iter().enumerate() {
            u[3 * i + 2] = f(*p);
        }
        let g = geo.grad_w(&u);
        assert!((g[0] - 2.0).abs() < 1e-13 && (g[1] + 3.0).abs() < 1e-13);
    }

    #[test]
    fn matrix_matches_bilinear_form() {
        let m = ElementMaterial::from_lame(1.0, 1.0, 0.1);
        for rule in [ShearRule::Reduced, ShearRule::Full] {
            let k = element_stiffness(tri(), &m, rule);
            let geo = ElementGeometry::new(tri());
            let u: ElementVector = std::array::from_fn(|i| (i as f64 * 0.7).sin());
            let v: ElementVector = std::array::from_fn(|i| (i as f64 * 1.3).cos());
            let mut kuv = 0.0;
            for r in 0..9 {
                for c in 0..9 {
                    kuv += u[r] * k[r][c] * v[c];
                }
            }
            assert!((kuv - geo.bilinear(&m, rule, &u, &v)).abs() < 1e-14);
        }
    }
}
