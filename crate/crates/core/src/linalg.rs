//! Dense linear algebra: a generic LU solver, jet-valued inversion, and
//! `f64` spectral helpers backed by nalgebra.

use nalgebra::DMatrix;

use crate::error::{GeomError, Result};
use crate::jet::Jet;
use crate::scalar::Scalar;

/// LU factorization with partial pivoting of a row-major `n × n` matrix.
pub struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    piv: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(mut a: Vec<T>, n: usize) -> Option<Self> {
        let mut piv: Vec<usize> = (0..n).collect();
        let scale = a.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        let tiny = scale * T::epsilon() * T::lit(n as f64);
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i * n + k].abs().partial_cmp(&a[j * n + k].abs()).unwrap())?;
            if a[p * n + k].abs() <= tiny {
                return None;
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                piv.swap(k, p);
            }
            let inv = T::one() / a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] * inv;
                a[i * n + k] = f;
                if f != T::zero() {
                    for c in k + 1..n {
                        let v = a[k * n + c];
                        a[i * n + c] -= f * v;
                    }
                }
            }
        }
        Some(Self { n, lu: a, piv })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x: Vec<T> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let v = self.lu[i * n + k] * x[k];
                x[i] -= v;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let v = self.lu[i * n + k] * x[k];
                x[i] -= v;
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }
}

/// Solves `A X = B` for jet-valued `A` (`n × n`) and `B` (`n × k`), both
/// row-major, by Gauss–Jordan elimination pivoting on base-point values.
pub fn jet_solve<T: Scalar>(a: &[Jet<T>], n: usize, b: &[Jet<T>], k: usize) -> Option<Vec<Jet<T>>> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    let scale = a.iter().fold(T::zero(), |m, x| m.max(x.value().abs()));
    let tiny = scale * T::epsilon() * T::lit(n as f64);
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| a[i * n + col].value().abs().partial_cmp(&a[j * n + col].value().abs()).unwrap())?;
        if a[p * n + col].value().abs() <= tiny {
            return None;
        }
        if p != col {
            for c in 0..n {
                a.swap(col * n + c, p * n + c);
            }
            for c in 0..k {
                b.swap(col * k + c, p * k + c);
            }
        }
        let inv = a[col * n + col].recip();
        for c in col..n {
            a[col * n + c] = &a[col * n + c] * &inv;
        }
        for c in 0..k {
            b[col * k + c] = &b[col * k + c] * &inv;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r * n + col].clone();
            if f.max_abs() == T::zero() {
                continue;
            }
            for c in col..n {
                let v = &f * &a[col * n + c];
                a[r * n + c] = &a[r * n + c] - &v;
            }
            for c in 0..k {
                let v = &f * &b[col * k + c];
                b[r * k + c] = &b[r * k + c] - &v;
            }
        }
    }
    Some(b)
}

/// Inverse of a jet-valued `n × n` matrix.
pub fn jet_inverse<T: Scalar>(a: &[Jet<T>], n: usize) -> Option<Vec<Jet<T>>> {
    let dim = a[0].dim();
    let order = a.iter().map(Jet::order).min().unwrap_or(0);
    let id: Vec<Jet<T>> = (0..n * n)
        .map(|i| Jet::constant(dim, order, if i / n == i % n { T::one() } else { T::zero() }))
        .collect();
    jet_solve(a, n, &id, n)
}

/// Determinant of a jet-valued `n × n` matrix (Gaussian elimination
/// pivoting on base-point values).
pub fn jet_determinant<T: Scalar>(a: &[Jet<T>], n: usize) -> Jet<T> {
    let mut a = a.to_vec();
    let mut det = Jet::constant(a[0].dim(), a[0].order(), T::one());
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| a[i * n + col].value().abs().partial_cmp(&a[j * n + col].value().abs()).unwrap())
            .unwrap();
        if a[p * n + col].value() == T::zero() {
            return Jet::zero(det.dim(), det.order());
        }
        if p != col {
            for c in 0..n {
                a.swap(col * n + c, p * n + c);
            }
            det = -det;
        }
        det = &det * &a[col * n + col];
        let inv = a[col * n + col].recip();
        for r in col + 1..n {
            let f = &a[r * n + col] * &inv;
            for c in col..n {
                let v = &f * &a[col * n + c];
                a[r * n + c] = &a[r * n + c] - &v;
            }
        }
    }
    det
}

/// Orthonormal basis of the null space of a row-major `rows × cols` matrix
/// (eigenvectors of `AᵀA` with eigenvalue below `tol²·‖A‖²`).
pub fn null_space(a: &[f64], rows: usize, cols: usize, tol: f64) -> Vec<Vec<f64>> {
    let m = DMatrix::from_row_slice(rows, cols, a);
    let sv = m.singular_values();
    let big = sv.amax();
    let rank = sv.iter().filter(|&&s| s > tol * big).count();
    let eig = nalgebra::SymmetricEigen::new(m.transpose() * &m);
    let mut idx: Vec<usize> = (0..cols).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    idx[..cols - rank].iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect()
}

/// Row-major `n × n` values as an nalgebra matrix.
pub fn to_dmatrix(a: &[f64], n: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, a)
}

/// `(positive, negative, near-zero)` eigenvalue counts of a symmetric matrix;
/// eigenvalues with `|λ| ≤ tol · max|λ|` count as zero.
pub fn signature(a: &[f64], n: usize, tol: f64) -> (usize, usize, usize) {
    let m = to_dmatrix(a, n);
    let sym = (&m + m.transpose()) * 0.5;
    let ev = sym.symmetric_eigenvalues();
    let big = ev.iter().fold(0.0f64, |x, e| x.max(e.abs()));
    let mut out = (0, 0, 0);
    for &e in ev.iter() {
        if e.abs() <= tol * big.max(f64::MIN_POSITIVE) {
            out.2 += 1;
        } else if e > 0.0 {
            out.0 += 1;
        } else {
            out.1 += 1;
        }
    }
    out
}

/// Condition number (ratio of extreme singular values).
pub fn condition_number(a: &[f64], n: usize) -> f64 {
    let sv = to_dmatrix(a, n).singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

/// Singular values of a row-major `rows × cols` matrix, descending.
pub fn singular_values(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let m = DMatrix::from_row_slice(rows, cols, a);
    let mut sv: Vec<f64> = m.singular_values().iter().cloned().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

pub fn determinant(a: &[f64], n: usize) -> f64 {
    to_dmatrix(a, n).determinant()
}

pub fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik != 0.0 {
                for j in 0..n {
                    c[i * n + j] += aik * b[k * n + j];
                }
            }
        }
    }
    c
}

pub fn matvec(a: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..a.len() / n).map(|i| (0..n).map(|j| a[i * n + j] * v[j]).sum()).collect()
}

pub fn transpose(a: &[f64], n: usize) -> Vec<f64> {
    (0..n * n).map(|i| a[(i % n) * n + i / n]).collect()
}

pub fn identity(n: usize) -> Vec<f64> {
    (0..n * n).map(|i| if i / n == i % n { 1.0 } else { 0.0 }).collect()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn inverse(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let inv = to_dmatrix(a, n).try_inverse()?;
    Some((0..n * n).map(|i| inv[(i / n, i % n)]).collect())
}

/// Principal matrix logarithm by inverse scaling and squaring.
///
/// Square roots (Denman–Beavers) are taken until `‖M − I‖ < 0.25`; the
/// remaining `log(I + X)` is the diagonal Padé approximant realised as
/// Gauss–Legendre quadrature of `∫₀¹ X (I + tX)⁻¹ dt`. Matrices with an
/// eigenvalue within `reject` of `−1` are refused.
pub fn logm(a: &[f64], n: usize, reject: f64) -> Result<Vec<f64>> {
    let m = to_dmatrix(a, n);
    let id = DMatrix::<f64>::identity(n, n);
    if (&m - &id).norm() >= 1.0 {
        let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 10_000)
            .ok_or_else(|| GeomError::Rank("Schur decomposition failed to converge".into()))?;
        for ev in schur.complex_eigenvalues().iter() {
            if (ev.re + 1.0).hypot(ev.im) < reject {
                return Err(GeomError::Rank(format!("eigenvalue {ev} near -1")));
            }
        }
    }
    let mut y = m.clone();
    let mut k = 0;
    while (&y - &id).norm() >= 0.25 {
        if k > 60 {
            return Err(GeomError::Rank("matrix logarithm failed to converge".into()));
        }
        y = sqrtm_db(&y)?;
        k += 1;
    }
    let x = &y - &id;
    const NODES: [(f64, f64); 8] = [
        (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
        (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
        (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
        (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
        (0.183_434_642_495_649_8, 0.362_683_783_378_362),
        (0.525_532_409_916_329, 0.313_706_645_877_887_3),
        (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
        (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    ];
    let mut acc = DMatrix::<f64>::zeros(n, n);
    for (node, w) in NODES {
        let t = 0.5 * (node + 1.0);
        let lhs = &id + &x * t;
        let sol = lhs
            .lu()
            .solve(&x)
            .ok_or_else(|| GeomError::Rank("singular Padé denominator".into()))?;
        acc += sol * (0.5 * w);
    }
    acc *= 2f64.powi(k);
    Ok((0..n * n).map(|i| acc[(i / n, i % n)]).collect())
}

fn sqrtm_db(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut y = a.clone();
    let mut z = DMatrix::<f64>::identity(a.nrows(), a.ncols());
    for _ in 0..100 {
        let yi = y.clone().try_inverse().ok_or_else(|| GeomError::Rank("singular square-root iterate".into()))?;
        let zi = z.clone().try_inverse().ok_or_else(|| GeomError::Rank("singular square-root iterate".into()))?;
        let ny = (&y + &zi) * 0.5;
        let nz = (&z + &yi) * 0.5;
        let delta = (&ny - &y).norm();
        y = ny;
        z = nz;
        if delta <= 1e-15 * y.norm() {
            break;
        }
    }
    Ok(y)
}

/// Matrix exponential (scaling and squaring with a Taylor core).
pub fn expm(a: &[f64], n: usize) -> Vec<f64> {
    let m = to_dmatrix(a, n);
    let norm = m.norm();
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let x = &m / 2f64.powi(s);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..20 {
        term = &term * &x / k as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    (0..n * n).map(|i| sum[(i / n, i % n)]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_small_system() {
        let lu = Lu::<f64>::factor(vec![2.0, 1.0, 1.0, 3.0], 2).unwrap();
        let x = lu.solve(&[3.0, 5.0]);
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 1.4).abs() < 1e-15);
        assert!(Lu::<f64>::factor(vec![1.0, 2.0, 2.0, 4.0], 2).is_none());
    }

    #[test]
    fn jet_inverse_matches_analytic_derivative() {
        // A(x) = [[1+x, y],[0, 2]], inverse (0,0) entry is 1/(1+x).
        let v = Jet::<f64>::seed(&[0.3, 0.2], 3);
        let one = Jet::constant(2, 3, 1.0);
        let a = vec![&one + &v[0], v[1].clone(), Jet::zero(2, 3), Jet::constant(2, 3, 2.0)];
        let inv = jet_inverse(&a, 2).unwrap();
        let want = (&one + &v[0]).recip();
        assert!((&inv[0] - &want).max_abs() < 1e-14);
        // (0,1) entry: -y / (2(1+x))
        let want01 = (&v[1] * &want).scale(-0.5);
        assert!((&inv[1] - &want01).max_abs() < 1e-14);
    }

    #[test]
    fn signature_counts_signs() {
        assert_eq!(signature(&[1.0, 0.0, 0.0, -2.0], 2, 1e-12), (1, 1, 0));
    }

    #[test]
    fn logm_inverts_expm() {
        let a = vec![0.0, 0.7, -0.2, -0.7, 0.0, 0.4, 0.2, -0.4, 0.1];
        let e = expm(&a, 3);
        let l = logm(&e, 3, 1e-3).unwrap();
        assert!(max_abs_diff(&l, &a) < 1e-12);
    }

    #[test]
    fn logm_rejects_rotation_by_pi() {
        let r = vec![-1.0, 0.0, 0.0, -1.0];
        assert!(logm(&r, 2, 1e-3).is_err());
    }
}
