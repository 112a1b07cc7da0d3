//! Orientation induced by a hypercomplex triple.

use crate::error::{GeomError, Result};
use crate::linalg::{determinant, matmul, matvec};

/// Sign of `vol(E₁, IE₁, JE₁, KE₁, …, E_r, IE_r, JE_r, KE_r)`.
///
/// `i`, `j`, `k` are row-major `N × N` matrices, `basis` holds `r = N/4`
/// vectors, and the reference volume is `volume_scale · dx¹∧…∧dx^N`.
pub fn orientation_sign(
    i: &[f64],
    j: &[f64],
    k: &[f64],
    basis: &[Vec<f64>],
    volume_scale: f64,
    tol: f64,
) -> Result<i32> {
    let n = basis.first().map_or(0, Vec::len);
    if n == 0 || n % 4 != 0 || basis.len() * 4 != n {
        return Err(GeomError::Shape(format!("need N/4 basis vectors in dimension {n}")));
    }
    let residual = quaternionic_residual(i, j, k, n);
    if residual > tol {
        return Err(GeomError::Precondition(format!("(I,J,K) violate quaternionic relations by {residual:e}")));
    }
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for e in basis {
        cols.push(e.clone());
        cols.push(matvec(i, e));
        cols.push(matvec(j, e));
        cols.push(matvec(k, e));
    }
    let mut m = vec![0.0; n * n];
    for (c, v) in cols.iter().enumerate() {
        for r in 0..n {
            m[r * n + c] = v[r];
        }
    }
    let scale: f64 = cols.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).product();
    let det = determinant(&m, n) * volume_scale;
    if det.abs() <= 1e-10 * scale * volume_scale.abs() {
        return Err(GeomError::Rank("basis and its I, J, K images do not span".into()));
    }
    Ok(if det > 0.0 { 1 } else { -1 })
}

/// Max deviation from `I² = J² = K² = −id`, `IJ = K`.
pub fn quaternionic_residual(i: &[f64], j: &[f64], k: &[f64], n: usize) -> f64 {
    let mut r = 0.0f64;
    for a in [i, j, k] {
        let sq = matmul(a, a, n);
        for (idx, v) in sq.iter().enumerate() {
            let want = if idx / n == idx % n { -1.0 } else { 0.0 };
            r = r.max((v - want).abs());
        }
    }
    let ij = matmul(i, j, n);
    for (x, y) in ij.iter().zip(k) {
        r = r.max((x - y).abs());
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quaternion::{left_mult, Quat};
    use rand::{Rng, SeedableRng};

    fn triple(blocks: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        (left_mult(Quat::I, blocks), left_mult(Quat::J, blocks), left_mult(Quat::K, blocks))
    }

    fn standard_basis(blocks: usize) -> Vec<Vec<f64>> {
        let n = 4 * blocks;
        (0..blocks)
            .map(|b| {
                let mut e = vec![0.0; n];
                e[4 * b] = 1.0;
                e
            })
            .collect()
    }

    #[test]
    fn standard_structure_is_positive() {
        let (i, j, k) = triple(2);
        assert_eq!(orientation_sign(&i, &j, &k, &standard_basis(2), 1.0, 1e-12).unwrap(), 1);
        assert_eq!(orientation_sign(&i, &j, &k, &standard_basis(2), -1.0, 1e-12).unwrap(), -1);
    }

    #[test]
    fn independent_of_admissible_basis() {
        let (i, j, k) = triple(3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let basis: Vec<Vec<f64>> = (0..3).map(|_| (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            assert_eq!(orientation_sign(&i, &j, &k, &basis, 1.0, 1e-12).unwrap(), 1);
        }
    }

    #[test]
    fn degenerate_basis_is_rejected() {
        let (i, j, k) = triple(2);
        let e = standard_basis(2);
        let bad = vec![e[0].clone(), e[0].clone()];
        assert!(matches!(orientation_sign(&i, &j, &k, &bad, 1.0, 1e-12), Err(GeomError::Rank(_))));
    }
}
