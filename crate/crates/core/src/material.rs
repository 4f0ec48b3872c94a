//! Isotropic Reissner–Mindlin constitutive data.
//!
//! The bending tensor is stored in Lamé form, ℙA = b_sym·Â + b_tr·tr(A)·I with
//! b_sym = h³μ/6 and b_tr = h³μλ/(6(2μ+λ)). This equals B[(1−ν)Â + ν tr(A) I]
//! without dividing by 1 − ν².

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::verify::Check;

/// A scalar field that is constant or piecewise constant on triangles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Field {
    Constant(f64),
    PerElement(Vec<f64>),
}

impl Field {
    pub fn at(&self, t: usize) -> f64 {
        match self {
            Field::Constant(v) => *v,
            Field::PerElement(v) => v[t],
        }
    }

    fn len(&self) -> Option<usize> {
        match self {
            Field::Constant(_) => None,
            Field::PerElement(v) => Some(v.len()),
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            Field::Constant(v) => std::slice::from_ref(v),
            Field::PerElement(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LameField {
    pub lambda: Field,
    pub mu: Field,
    pub alpha0: f64,
    pub gamma0: f64,
    pub alpha1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateMaterial {
    pub lame: LameField,
    pub h: f64,
}

/// Constants of one triangle: S = hμ and the two Lamé-form bending coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementMaterial {
    pub shear: f64,
    pub b_sym: f64,
    pub b_tr: f64,
}

impl ElementMaterial {
    pub fn from_lame(lambda: f64, mu: f64, h: f64) -> Self {
        let h3 = h * h * h;
        ElementMaterial {
            shear: h * mu,
            b_sym: h3 * mu / 6.0,
            b_tr: h3 * mu * lambda / (6.0 * (2.0 * mu + lambda)),
        }
    }

    pub fn apply(&self, a: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let s = 0.5 * (a[0][1] + a[1][0]);
        let tr = a[0][0] + a[1][1];
        [
            [self.b_sym * a[0][0] + self.b_tr * tr, self.b_sym * s],
            [self.b_sym * s, self.b_sym * a[1][1] + self.b_tr * tr],
        ]
    }
}

impl PlateMaterial {
    /// Constant Lamé moduli; the convexity bounds are set to the attained values.
    pub fn uniform(lambda: f64, mu: f64, h: f64) -> Self {
        PlateMaterial {
            lame: LameField {
                lambda: Field::Constant(lambda),
                mu: Field::Constant(mu),
                alpha0: mu,
                gamma0: 2.0 * mu + 3.0 * lambda,
                alpha1: lambda.abs() + mu.abs(),
            },
            h,
        }
    }

    pub fn with_bounds(mut self, alpha0: f64, gamma0: f64, alpha1: f64) -> Self {
        self.lame.alpha0 = alpha0;
        self.lame.gamma0 = gamma0;
        self.lame.alpha1 = alpha1;
        self
    }

    pub fn element(&self, t: usize) -> ElementMaterial {
        ElementMaterial::from_lame(self.lame.lambda.at(t), self.lame.mu.at(t), self.h)
    }

    /// Element constants when both Lamé fields are constant.
    pub fn constant(&self) -> Option<ElementMaterial> {
        match (&self.lame.lambda, &self.lame.mu) {
            (Field::Constant(l), Field::Constant(m)) => Some(ElementMaterial::from_lame(*l, *m, self.h)),
            _ => None,
        }
    }

    /// Checks per-element field lengths against a triangle count.
    pub fn check_len(&self, n_triangles: usize) -> Result<()> {
        for (name, f) in [("lambda", &self.lame.lambda), ("mu", &self.lame.mu)] {
            if let Some(n) = f.len() {
                if n != n_triangles {
                    return Err(Error::Config(format!(
                        "material.{name} has {n} values for {n_triangles} triangles"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn young(&self, t: usize) -> f64 {
        let (l, m) = (self.lame.lambda.at(t), self.lame.mu.at(t));
        m * (2.0 * m + 3.0 * l) / (m + l)
    }

    pub fn poisson(&self, t: usize) -> f64 {
        let (l, m) = (self.lame.lambda.at(t), self.lame.mu.at(t));
        l / (2.0 * (m + l))
    }

    /// B = E h³ / (12 (1 − ν²)).
    pub fn bending_stiffness(&self, t: usize) -> f64 {
        let nu = self.poisson(t);
        self.young(t) * self.h.powi(3) / (12.0 * (1.0 - nu * nu))
    }
}

/// ℙA for the material of triangle `t`.
pub fn bending_apply(material: &PlateMaterial, t: usize, a: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    material.element(t).apply(a)
}

pub fn frobenius(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

pub fn sym(a: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let s = 0.5 * (a[0][1] + a[1][0]);
    [[a[0][0], s], [s, a[1][1]]]
}

fn probe_matrices() -> Vec<[[f64; 2]; 2]> {
    let mut probes = vec![
        [[1.0, 0.0], [0.0, 0.0]],
        [[0.0, 0.0], [0.0, 1.0]],
        [[1.0, 0.0], [0.0, 1.0]],
        [[1.0, 0.0], [0.0, -1.0]],
        [[0.0, 1.0], [1.0, 0.0]],
        [[0.0, 1.0], [0.0, 0.0]],
    ];
    for k in 0..24 {
        let s = 0.37 * k as f64 + 0.1;
        probes.push([[s.cos(), (2.0 * s).sin()], [(3.0 * s).sin(), (5.0 * s).cos()]]);
    }
    probes
}

/// Strong convexity, the sup bound and the ellipticity sandwiches of S and ℙ.
pub fn check_material(material: &PlateMaterial) -> Vec<Check> {
    let lame = &material.lame;
    let h = material.h;
    let lam = lame.lambda.values();
    let mu = lame.mu.values();
    let n = lam.len().max(mu.len());
    let at = |f: &[f64], i: usize| if f.len() == 1 { f[0] } else { f[i] };

    let min_mu = (0..n).map(|i| at(mu, i)).fold(f64::INFINITY, f64::min);
    let min_bulk = (0..n).map(|i| 2.0 * at(mu, i) + 3.0 * at(lam, i)).fold(f64::INFINITY, f64::min);
    let max_sum = (0..n).map(|i| at(lam, i).abs() + at(mu, i).abs()).fold(0.0, f64::max);

    let mut checks = vec![
        Check::at_least("shear convexity", min_mu, lame.alpha0),
        Check::at_least("bulk convexity", min_bulk, lame.gamma0),
        Check::at_most("regularity bound", max_sum, lame.alpha1),
        Check::at_least("shear ellipticity lower", h * min_mu, h * lame.alpha0),
        Check::at_most(
            "shear ellipticity upper",
            h * (0..n).map(|i| at(mu, i)).fold(f64::NEG_INFINITY, f64::max),
            h * lame.alpha1,
        ),
    ];

    let xi0 = (2.0 * lame.alpha0).min(lame.gamma0);
    let xi1 = 2.0 * lame.alpha1;
    let scale = h.powi(3) / 12.0;
    let (mut worst_lo, mut worst_hi) = (f64::INFINITY, f64::INFINITY);
    for i in 0..n {
        let em = ElementMaterial::from_lame(at(lam, i), at(mu, i), h);
        for a in probe_matrices() {
            let s = sym(a);
            let ss = frobenius(s, s);
            if ss == 0.0 {
                continue;
            }
            let q = frobenius(em.apply(a), a);
            worst_lo = worst_lo.min((q - scale * xi0 * ss) / (scale * ss));
            worst_hi = worst_hi.min((scale * xi1 * ss - q) / (scale * ss));
        }
    }
    checks.push(Check::at_least("bending ellipticity lower", worst_lo, -1e-12));
    checks.push(Check::at_least("bending ellipticity upper", worst_hi, -1e-12));
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> PlateMaterial {
        PlateMaterial::uniform(1.0, 1.0, 0.1).with_bounds(0.5, 0.5, 3.0)
    }

    #[test]
    fn young_poisson_bending() {
        let m = unit();
        assert!((m.young(0) - 2.5).abs() < 1e-15);
        assert!((m.poisson(0) - 0.25).abs() < 1e-15);
        let b = 2.5e-3 / 11.25;
        assert!((m.bending_stiffness(0) - b).abs() < 1e-18);
        let e11 = [[1.0, 0.0], [0.0, 0.0]];
        let pa = bending_apply(&m, 0, e11);
        assert!((frobenius(pa, e11) - b).abs() < 1e-18);
        assert!((frobenius(pa, e11) - 2.2222e-4).abs() < 1e-8);
    }

    #[test]
    fn lame_form_matches_engineering_form() {
        for &(l, mu) in &[(1.0, 1.0), (0.3, 2.0), (-0.2, 1.0), (5.0, 0.7)] {
            let m = PlateMaterial::uniform(l, mu, 0.13);
            let (b, nu) = (m.bending_stiffness(0), m.poisson(0));
            let a = [[0.3, -1.2], [0.7, 2.1]];
            let pa = bending_apply(&m, 0, a);
            let s = sym(a);
            let tr = a[0][0] + a[1][1];
            for i in 0..2 {
                for j in 0..2 {
                    let d = if i == j { 1.0 } else { 0.0 };
                    let expect = b * ((1.0 - nu) * s[i][j] + nu * tr * d);
                    assert!((pa[i][j] - expect).abs() < 1e-14 * b.max(1.0), "{l} {mu}");
                }
            }
        }
    }

    #[test]
    fn skew_and_identity() {
        let m = unit();
        let pa = bending_apply(&m, 0, [[0.0, 1.0], [-1.0, 0.0]]);
        assert_eq!(pa, [[0.0, 0.0], [0.0, 0.0]]);
        let pi = bending_apply(&m, 0, [[1.0, 0.0], [0.0, 1.0]]);
        let expect = m.bending_stiffness(0) * 1.25;
        assert!((pi[0][0] - expect).abs() < 1e-18 && (pi[1][1] - expect).abs() < 1e-18);
        assert_eq!(pi[0][1], 0.0);
    }

    #[test]
    fn material_checks() {
        assert!(check_material(&unit()).iter().all(|c| c.pass));

        let soft = PlateMaterial::uniform(1.0, 0.1, 0.1).with_bounds(0.5, 0.5, 3.0);
        let failed: Vec<_> = check_material(&soft).into_iter().filter(|c| !c.pass).map(|c| c.name).collect();
        assert!(failed.contains(&"shear convexity".to_string()), "{failed:?}");

        let neg = PlateMaterial::uniform(-1.0, 1.0, 0.1).with_bounds(0.5, 0.5, 3.0);
        let failed: Vec<_> = check_material(&neg).into_iter().filter(|c| !c.pass).map(|c| c.name).collect();
        assert!(failed.contains(&"bulk convexity".to_string()), "{failed:?}");
    }

    #[test]
    fn per_element_length_checked() {
        let mut m = unit();
        m.lame.mu = Field::PerElement(vec![1.0; 3]);
        assert!(m.check_len(3).is_ok());
        assert!(m.check_len(4).is_err());
    }
}
