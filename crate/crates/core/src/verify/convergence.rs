use serde::{Deserialize, Serialize};

/// Orders p from consecutive triples, |v₁ − v₀| / |v₂ − v₁| = (h₀/h₁)^p.
/// Entry i uses levels i, i+1, i+2.
pub fn observed_orders(values: &[f64], h: &[f64]) -> Vec<f64> {
    (0..values.len().saturating_sub(2))
        .map(|i| {
            let d0 = (values[i + 1] - values[i]).abs();
            let d1 = (values[i + 2] - values[i + 1]).abs();
            (d0 / d1).ln() / (h[i] / h[i + 1]).ln()
        })
        .collect()
}

/// Orders of the error against a known limit between consecutive levels.
pub fn error_orders(values: &[f64], exact: f64, h: &[f64]) -> Vec<f64> {
    values
        .windows(2)
        .zip(h.windows(2))
        .map(|(v, hh)| ((v[0] - exact).abs() / (v[1] - exact).abs()).ln() / (hh[0] / hh[1]).ln())
        .collect()
}

/// Extrapolated limit from the last three levels with the observed order.
pub fn richardson(values: &[f64], h: &[f64]) -> Option<f64> {
    let n = values.len();
    if n < 3 {
        return None;
    }
    let p = *observed_orders(&values[n - 3..], &h[n - 3..]).first()?;
    if !p.is_finite() || p <= 0.0 {
        return None;
    }
    let r = (h[n - 2] / h[n - 1]).powf(p);
    Some(values[n - 1] + (values[n - 1] - values[n - 2]) / (r - 1.0))
}

fn monotone(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0]) || v.windows(2).all(|w| w[1] <= w[0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceColumn {
    pub name: String,
    pub values: Vec<f64>,
    pub limit: Option<f64>,
    pub orders: Vec<f64>,
    pub monotone: bool,
}

/// Quantities tracked over nested refinements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub instance: String,
    pub h: Vec<f64>,
    pub n_triangles: Vec<usize>,
    pub columns: Vec<ConvergenceColumn>,
}

impl ConvergenceTable {
    pub fn new(instance: impl Into<String>) -> Self {
        ConvergenceTable { instance: instance.into(), h: Vec::new(), n_triangles: Vec::new(), columns: Vec::new() }
    }

    /// Appends one level; `values` must name the same quantities at every level.
    pub fn push_level(&mut self, h: f64, n_triangles: usize, values: &[(&str, f64)]) {
        self.h.push(h);
        self.n_triangles.push(n_triangles);
        for &(name, v) in values {
            match self.columns.iter_mut().find(|c| c.name == name) {
                Some(c) => c.values.push(v),
                None => self.columns.push(ConvergenceColumn {
                    name: name.to_string(),
                    values: vec![v],
                    limit: None,
                    orders: Vec::new(),
                    monotone: true,
                }),
            }
        }
        for c in &mut self.columns {
            c.orders = observed_orders(&c.values, &self.h);
            c.limit = richardson(&c.values, &self.h);
            c.monotone = monotone(&c.values);
        }
    }

    pub fn column(&self, name: &str) -> Option<&ConvergenceColumn> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Names of the columns whose sequence changes direction.
    pub fn non_monotone(&self) -> Vec<&str> {
        self.columns.iter().filter(|c| !c.monotone).map(|c| c.name.as_str()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_sequence() {
        let h = [0.4, 0.2, 0.1, 0.05];
        let v: Vec<f64> = h.iter().map(|x| 3.0 + 2.0 * x * x).collect();
        for p in observed_orders(&v, &h) {
            assert!((p - 2.0).abs() < 1e-9);
        }
        for p in error_orders(&v, 3.0, &h) {
            assert!((p - 2.0).abs() < 1e-9);
        }
        assert!((richardson(&v, &h).unwrap() - 3.0).abs() < 1e-12);
        assert!(richardson(&v[..2], &h[..2]).is_none());
    }

    #[test]
    fn table_flags_oscillation() {
        let mut t = ConvergenceTable::new("x");
        for (i, v) in [1.0, 2.0, 1.5].iter().enumerate() {
            t.push_level(1.0 / (i + 1) as f64, 10 << i, &[("a", *v), ("b", i as f64)]);
        }
        assert_eq!(t.non_monotone(), vec!["a"]);
        assert_eq!(t.column("b").unwrap().values.len(), 3);
    }
}
