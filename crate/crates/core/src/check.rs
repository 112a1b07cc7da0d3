//! Named residual collections returned by the verification operations.

use serde::Serialize;

/// Ordered `(name, max residual)` pairs over a set of sample points.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Residuals {
    pub entries: Vec<(String, f64)>,
    pub n_points: usize,
}

impl Residuals {
    pub fn new(n_points: usize) -> Self {
        Self { entries: Vec::new(), n_points }
    }

    /// Raises the entry `name` to at least `value`; NaN is kept as NaN.
    pub fn record(&mut self, name: &str, value: f64) {
        match self.entries.iter_mut().find(|(n, _)| n == name) {
            Some((_, v)) => {
                if value.is_nan() || value > *v {
                    *v = value;
                }
            }
            None => self.entries.push((name.to_string(), value)),
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// Largest entry; NaN if any entry is NaN.
    pub fn max_residual(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |m, (_, v)| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(*v) })
    }

    /// Largest entry among names starting with `prefix`.
    pub fn max_with_prefix(&self, prefix: &str) -> f64 {
        self.entries.iter().filter(|(n, _)| n.starts_with(prefix)).fold(0.0f64, |m, (_, v)| m.max(*v))
    }

    pub fn merge(&mut self, prefix: &str, other: &Residuals) {
        for (n, v) in &other.entries {
            self.record(&format!("{prefix}{n}"), *v);
        }
        self.n_points = self.n_points.max(other.n_points);
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_keeps_maximum_and_nan() {
        let mut r = Residuals::new(3);
        r.record("a", 1e-9);
        r.record("a", 1e-12);
        r.record("b", 2e-9);
        assert_eq!(r.get("a"), Some(1e-9));
        assert_eq!(r.max_residual(), 2e-9);
        r.record("b", f64::NAN);
        assert!(r.max_residual().is_nan());
        assert!(!r.passes(1.0));
    }
}
