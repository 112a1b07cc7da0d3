//! Coordinate charts and deterministic interior sample grids.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GeomError, Result};

const PRIMES: [u32; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107,
    109, 113, 127, 131,
];

/// An axis-aligned coordinate box of dimension `dim = n + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    name: String,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Chart {
    pub fn new(name: impl Into<String>, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(GeomError::Shape("chart bounds differ in length".into()));
        }
        if lo.len() < 2 {
            return Err(GeomError::Shape(format!("chart dimension {} < 2", lo.len())));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(GeomError::Shape("chart box has empty interior".into()));
        }
        Ok(Self { name: name.into(), lo, hi })
    }

    /// Cube `[-r, r]^dim`.
    pub fn cube(name: impl Into<String>, dim: usize, r: f64) -> Result<Self> {
        Self::new(name, vec![-r; dim], vec![r; dim])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Manifold dimension `n + 1`.
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// The projective dimension parameter `n = dim - 1`.
    pub fn n(&self) -> usize {
        self.dim() - 1
    }

    /// `m` with `dim = 4m + 3`, when it exists.
    pub fn m(&self) -> Option<usize> {
        let d = self.dim();
        (d >= 3 && (d - 3) % 4 == 0).then(|| (d - 3) / 4)
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| a < x && x < b)
    }

    pub fn check_point(&self, p: &[f64]) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(GeomError::Domain { point: p.to_vec() })
        }
    }

    /// A sub-box with the same name, used for patches.
    pub fn sub_box(&self, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        Self::new(self.name.clone(), lo, hi)
    }

    /// `count` low-discrepancy points strictly inside the box.
    ///
    /// Halton sequence (first `dim` primes, cycled past 32) with a seed-dependent
    /// Cranley–Patterson rotation, mapped into the central 90% of each side.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        (0..count)
            .map(|idx| {
                (0..d)
                    .map(|k| {
                        let base = PRIMES[k % PRIMES.len()];
                        let u = (radical_inverse(idx as u64 + 1, base) + shift[k]).fract();
                        let t = 0.05 + 0.9 * u;
                        self.lo[k] + t * (self.hi[k] - self.lo[k])
                    })
                    .collect()
            })
            .collect()
    }
}

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(Chart::new("x", vec![0.0], vec![1.0]).is_err());
        assert!(Chart::new("x", vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn samples_are_interior_and_deterministic() {
        let c = Chart::new("box", vec![-1.0, 0.0, 2.0], vec![1.0, 0.5, 3.0]).unwrap();
        let a = c.sample_points(64, 7);
        let b = c.sample_points(64, 7);
        assert_eq!(a, b);
        assert!(a.iter().all(|p| c.contains(p)));
        assert_ne!(a, c.sample_points(64, 8));
    }

    #[test]
    fn dimension_accessors() {
        let c = Chart::cube("s7", 7, 1.0).unwrap();
        assert_eq!(c.n(), 6);
        assert_eq!(c.m(), Some(1));
        assert_eq!(Chart::cube("r5", 5, 1.0).unwrap().m(), None);
    }
}
