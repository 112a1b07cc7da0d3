//! Truncated multivariate Taylor jets (forward-mode differentiation to order 3).
//!
//! A [`Jet`] carries the value of a scalar function together with all of its
//! partial derivatives up to a fixed order at one point. Arithmetic on jets
//! is exact up to that order, so evaluating a closed-form rule on seeded
//! coordinate jets yields exact derivatives rather than finite differences.
//!
//! Storage is dense: `[value, ∂_i (d), ∂_ij (d²), ∂_ijk (d³)]`, truncated to
//! the jet's order. Higher partials are stored in full (not symmetry
//! compressed) so that index arithmetic stays trivial; all constructors keep
//! them exactly symmetric.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::Scalar;

/// Highest derivative order a jet can carry.
pub const MAX_ORDER: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct Jet<T> {
    dim: usize,
    order: usize,
    data: Vec<T>,
}

#[inline]
fn len_for(dim: usize, order: usize) -> usize {
    match order {
        0 => 1,
        1 => 1 + dim,
        2 => 1 + dim + dim * dim,
        _ => 1 + dim + dim * dim + dim * dim * dim,
    }
}

impl<T: Scalar> Jet<T> {
    pub fn constant(dim: usize, order: usize, value: T) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let mut data = vec![T::zero(); len_for(dim, order)];
        data[0] = value;
        Self { dim, order, data }
    }

    pub fn zero(dim: usize, order: usize) -> Self {
        Self::constant(dim, order, T::zero())
    }

    /// The coordinate function `x_i` seeded at `value`.
    pub fn variable(dim: usize, order: usize, value: T, i: usize) -> Self {
        let mut jet = Self::constant(dim, order, value);
        if order >= 1 {
            jet.data[1 + i] = T::one();
        }
        jet
    }

    /// Seeds every coordinate of `point` as a jet variable.
    pub fn seed(point: &[T], order: usize) -> Vec<Self> {
        let dim = point.len();
        point
            .iter()
            .enumerate()
            .map(|(i, &x)| Self::variable(dim, order, x, i))
            .collect()
    }

    /// Builds a jet from explicit derivative arrays; trailing arrays may be
    /// empty for lower orders.
    pub fn from_parts(dim: usize, value: T, grad: &[T], hess: &[T], third: &[T]) -> Self {
        let order = if grad.is_empty() {
            0
        } else if hess.is_empty() {
            1
        } else if third.is_empty() {
            2
        } else {
            3
        };
        let mut data = Vec::with_capacity(len_for(dim, order));
        data.push(value);
        data.extend_from_slice(grad);
        data.extend_from_slice(hess);
        data.extend_from_slice(third);
        assert_eq!(data.len(), len_for(dim, order), "inconsistent jet parts");
        Self { dim, order, data }
    }

    /// Builds a jet from its raw dense coefficient vector.
    pub fn from_coeffs(dim: usize, order: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), len_for(dim, order), "inconsistent jet coefficients");
        Self { dim, order, data }
    }

    /// Raw dense coefficients `[value, grad, hess, third]`.
    pub fn coeffs(&self) -> &[T] {
        &self.data
    }

    pub fn coeff_len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn value(&self) -> T {
        self.data[0]
    }

    #[inline]
    pub fn grad(&self) -> &[T] {
        if self.order >= 1 {
            &self.data[1..1 + self.dim]
        } else {
            &[]
        }
    }

    #[inline]
    pub fn hess(&self) -> &[T] {
        let d = self.dim;
        if self.order >= 2 {
            &self.data[1 + d..1 + d + d * d]
        } else {
            &[]
        }
    }

    #[inline]
    pub fn third(&self) -> &[T] {
        let d = self.dim;
        if self.order >= 3 {
            &self.data[1 + d + d * d..]
        } else {
            &[]
        }
    }

    #[inline]
    pub fn d1(&self, i: usize) -> T {
        self.data[1 + i]
    }

    #[inline]
    pub fn d2(&self, i: usize, j: usize) -> T {
        self.data[1 + self.dim + i * self.dim + j]
    }

    #[inline]
    pub fn d3(&self, i: usize, j: usize, k: usize) -> T {
        let d = self.dim;
        self.data[1 + d + d * d + (i * d + j) * d + k]
    }

    /// Drops all derivatives above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order {
            return self.clone();
        }
        Self {
            dim: self.dim,
            order,
            data: self.data[..len_for(self.dim, order)].to_vec(),
        }
    }

    /// Partial derivative `∂_i` as a jet one order lower.
    pub fn diff(&self, i: usize) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let d = self.dim;
        let order = self.order - 1;
        let mut data = Vec::with_capacity(len_for(d, order));
        data.push(self.d1(i));
        if order >= 1 {
            for j in 0..d {
                data.push(self.d2(i, j));
            }
        }
        if order >= 2 {
            for j in 0..d {
                for k in 0..d {
                    data.push(self.d3(i, j, k));
                }
            }
        }
        Self { dim: d, order, data }
    }

    /// Re-expresses the jet in a larger variable set: old variable `i`
    /// becomes new variable `map[i]`; new variables not hit by `map` are
    /// treated as absent (zero derivative).
    pub fn embed(&self, new_dim: usize, map: &[usize]) -> Self {
        let d = self.dim;
        let mut out = Self::constant(new_dim, self.order, self.value());
        let n = new_dim;
        if self.order >= 1 {
            for i in 0..d {
                out.data[1 + map[i]] = self.d1(i);
            }
        }
        if self.order >= 2 {
            for i in 0..d {
                for j in 0..d {
                    out.data[1 + n + map[i] * n + map[j]] = self.d2(i, j);
                }
            }
        }
        if self.order >= 3 {
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        out.data[1 + n + n * n + (map[i] * n + map[j]) * n + map[k]] =
                            self.d3(i, j, k);
                    }
                }
            }
        }
        out
    }

    /// Multiplies every coefficient by `s`.
    pub fn scale(&self, s: T) -> Self {
        Self {
            dim: self.dim,
            order: self.order,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    /// In-place `self += s * other` (orders are truncated to the lower one).
    pub fn add_scaled(&mut self, other: &Self, s: T) {
        if other.order < self.order {
            *self = self.truncate(other.order);
        }
        for (a, &b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += s * b;
        }
    }

    /// Chain rule for a univariate function with derivatives `f = [f, f', f'', f''']`
    /// evaluated at `self.value()`.
    pub fn compose(&self, f: [T; 4]) -> Self {
        let d = self.dim;
        let mut out = Self::constant(d, self.order, f[0]);
        if self.order >= 1 {
            let g = self.grad();
            for i in 0..d {
                out.data[1 + i] = f[1] * g[i];
            }
        }
        if self.order >= 2 {
            let g = self.grad().to_vec();
            let h = self.hess().to_vec();
            for i in 0..d {
                for j in 0..d {
                    out.data[1 + d + i * d + j] = f[1] * h[i * d + j] + f[2] * g[i] * g[j];
                }
            }
        }
        if self.order >= 3 {
            let g = self.grad().to_vec();
            let h = self.hess().to_vec();
            let t = self.third();
            let base = 1 + d + d * d;
            let mut third = vec![T::zero(); d * d * d];
            for i in 0..d {
                for j in i..d {
                    for k in j..d {
                        let v = f[1] * t[(i * d + j) * d + k]
                            + f[2] * (h[i * d + j] * g[k] + h[i * d + k] * g[j] + h[j * d + k] * g[i])
                            + f[3] * g[i] * g[j] * g[k];
                        fill_sym3(&mut third, d, i, j, k, v);
                    }
                }
            }
            out.data[base..].copy_from_slice(&third);
        }
        out
    }

    pub fn recip(&self) -> Self {
        let u = self.value();
        let r = T::one() / u;
        let r2 = r * r;
        self.compose([r, -r2, T::lit(2.0) * r2 * r, T::lit(-6.0) * r2 * r2])
    }

    pub fn sqrt(&self) -> Self {
        let s = self.value().sqrt();
        let half = T::lit(0.5);
        let d1 = half / s;
        let d2 = -half * d1 / self.value();
        let d3 = T::lit(-1.5) * d2 / self.value();
        self.compose([s, d1, d2, d3])
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose([e, e, e, e])
    }

    pub fn ln(&self) -> Self {
        let u = self.value();
        let r = T::one() / u;
        self.compose([u.ln(), r, -r * r, T::lit(2.0) * r * r * r])
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c, s])
    }

    /// `u^p` for real exponent `p` (requires `u > 0` unless `p` is integral).
    pub fn powf(&self, p: T) -> Self {
        let u = self.value();
        let one = T::one();
        let two = T::lit(2.0);
        let f0 = u.powf(p);
        let f1 = p * u.powf(p - one);
        let f2 = p * (p - one) * u.powf(p - two);
        let f3 = p * (p - one) * (p - two) * u.powf(p - T::lit(3.0));
        self.compose([f0, f1, f2, f3])
    }

    pub fn powi(&self, n: i32) -> Self {
        match n {
            0 => Self::constant(self.dim, self.order, T::one()),
            1 => self.clone(),
            2 => self * self,
            _ if n < 0 => self.powi(-n).recip(),
            _ => {
                let half = self.powi(n / 2);
                let sq = &half * &half;
                if n % 2 == 1 {
                    &sq * self
                } else {
                    sq
                }
            }
        }
    }

    fn mul_jet(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim, "jet dimension mismatch");
        let d = self.dim;
        let order = self.order.min(other.order);
        let (a, b) = (&self.data, &other.data);
        let mut data = vec![T::zero(); len_for(d, order)];
        data[0] = a[0] * b[0];
        if order >= 1 {
            for i in 0..d {
                data[1 + i] = a[0] * b[1 + i] + a[1 + i] * b[0];
            }
        }
        if order >= 2 {
            let hb = 1 + d;
            for i in 0..d {
                for j in i..d {
                    let v = a[0] * b[hb + i * d + j]
                        + a[1 + i] * b[1 + j]
                        + a[1 + j] * b[1 + i]
                        + a[hb + i * d + j] * b[0];
                    data[hb + i * d + j] = v;
                    data[hb + j * d + i] = v;
                }
            }
        }
        if order >= 3 {
            let hb = 1 + d;
            let tb = 1 + d + d * d;
            let h = |x: &Vec<T>, i: usize, j: usize| x[hb + i * d + j];
            let mut third = vec![T::zero(); d * d * d];
            for i in 0..d {
                for j in i..d {
                    for k in j..d {
                        let idx = tb + (i * d + j) * d + k;
                        let v = a[0] * b[idx]
                            + a[idx] * b[0]
                            + a[1 + i] * h(b, j, k)
                            + a[1 + j] * h(b, i, k)
                            + a[1 + k] * h(b, i, j)
                            + h(a, i, j) * b[1 + k]
                            + h(a, i, k) * b[1 + j]
                            + h(a, j, k) * b[1 + i];
                        fill_sym3(&mut third, d, i, j, k, v);
                    }
                }
            }
            data[tb..].copy_from_slice(&third);
        }
        Self { dim: d, order, data }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        debug_assert_eq!(self.dim, other.dim, "jet dimension mismatch");
        let order = self.order.min(other.order);
        let n = len_for(self.dim, order);
        Self {
            dim: self.dim,
            order,
            data: self.data[..n]
                .iter()
                .zip(other.data[..n].iter())
                .map(|(&x, &y)| f(x, y))
                .collect(),
        }
    }

    /// Largest absolute coefficient (value and all stored partials).
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }
}

#[inline]
fn fill_sym3<T: Copy>(t: &mut [T], d: usize, i: usize, j: usize, k: usize, v: T) {
    for (a, b, c) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
        t[(a * d + b) * d + c] = v;
    }
}

macro_rules! jet_binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl<T: Scalar> $tr<&Jet<T>> for &Jet<T> {
            type Output = Jet<T>;
            #[inline]
            fn $m(self, rhs: &Jet<T>) -> Jet<T> {
                let f: fn(&Jet<T>, &Jet<T>) -> Jet<T> = $body;
                f(self, rhs)
            }
        }
        impl<T: Scalar> $tr<Jet<T>> for Jet<T> {
            type Output = Jet<T>;
            #[inline]
            fn $m(self, rhs: Jet<T>) -> Jet<T> {
                (&self).$m(&rhs)
            }
        }
        impl<T: Scalar> $tr<&Jet<T>> for Jet<T> {
            type Output = Jet<T>;
            #[inline]
            fn $m(self, rhs: &Jet<T>) -> Jet<T> {
                (&self).$m(rhs)
            }
        }
        impl<T: Scalar> $tr<Jet<T>> for &Jet<T> {
            type Output = Jet<T>;
            #[inline]
            fn $m(self, rhs: Jet<T>) -> Jet<T> {
                self.$m(&rhs)
            }
        }
    };
}

jet_binop!(Add, add, |a, b| a.zip_with(b, |x, y| x + y));
jet_binop!(Sub, sub, |a, b| a.zip_with(b, |x, y| x - y));
jet_binop!(Mul, mul, |a, b| a.mul_jet(b));
jet_binop!(Div, div, |a, b| a.mul_jet(&b.recip()));

impl<T: Scalar> Neg for Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.scale(-T::one())
    }
}

impl<T: Scalar> Neg for &Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.scale(-T::one())
    }
}

impl<T: Scalar> Add<T> for &Jet<T> {
    type Output = Jet<T>;
    fn add(self, rhs: T) -> Jet<T> {
        let mut out = self.clone();
        out.data[0] += rhs;
        out
    }
}

impl<T: Scalar> Add<T> for Jet<T> {
    type Output = Jet<T>;
    fn add(mut self, rhs: T) -> Jet<T> {
        self.data[0] += rhs;
        self
    }
}

impl<T: Scalar> Sub<T> for Jet<T> {
    type Output = Jet<T>;
    fn sub(mut self, rhs: T) -> Jet<T> {
        self.data[0] -= rhs;
        self
    }
}

impl<T: Scalar> Mul<T> for &Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: T) -> Jet<T> {
        self.scale(rhs)
    }
}

impl<T: Scalar> Mul<T> for Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: T) -> Jet<T> {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seed2(x: f64, y: f64) -> (Jet<f64>, Jet<f64>) {
        let v = Jet::seed(&[x, y], 3);
        (v[0].clone(), v[1].clone())
    }

    #[test]
    fn constant_has_zero_gradient() {
        let c = Jet::<f64>::constant(4, 1, 2.5);
        assert_eq!(c.value(), 2.5);
        assert!(c.grad().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn square_of_coordinate() {
        let x = Jet::seed(&[2.0, 0.0, 0.0], 2);
        let f = &x[0] * &x[0];
        assert_eq!(f.value(), 4.0);
        assert_eq!(f.d1(0), 4.0);
        assert_eq!(f.d2(0, 0), 2.0);
        assert_eq!(f.d2(0, 1), 0.0);
    }

    #[test]
    fn product_rule_third_order() {
        // f = x^2 y^3 at (1.5, -0.7)
        let (x, y) = seed2(1.5, -0.7);
        let f = x.powi(2) * y.powi(3);
        let (a, b) = (1.5f64, -0.7f64);
        assert!((f.d3(0, 0, 1) - 2.0 * 3.0 * b * b).abs() < 1e-12);
        assert!((f.d3(0, 1, 1) - 2.0 * a * 6.0 * b).abs() < 1e-12);
        assert!((f.d3(1, 1, 1) - a * a * 6.0).abs() < 1e-12);
        assert!((f.d3(1, 0, 1) - f.d3(0, 1, 1)).abs() == 0.0);
    }

    #[test]
    fn elementary_functions_match_closed_forms() {
        let (x, y) = seed2(0.3, 1.2);
        let f = (&x * &y).sin();
        // d/dx sin(xy) = y cos(xy); d²/dxdy = cos(xy) - xy sin(xy)
        let xy = 0.36f64;
        assert!((f.d1(0) - 1.2 * xy.cos()).abs() < 1e-14);
        assert!((f.d2(0, 1) - (xy.cos() - xy * xy.sin())).abs() < 1e-14);
        let g = y.ln();
        assert!((g.d3(1, 1, 1) - 2.0 / 1.2f64.powi(3)).abs() < 1e-12);
        let h = x.sqrt();
        assert!((h.d3(0, 0, 0) - 0.375 * 0.3f64.powf(-2.5)).abs() < 1e-9);
    }

    #[test]
    fn division_and_reciprocal() {
        let (x, y) = seed2(2.0, 3.0);
        let q = &x / &y;
        assert!((q.d2(0, 1) + 1.0 / 9.0).abs() < 1e-15);
        assert!((q.d3(1, 1, 1) + 6.0 * 2.0 / 81.0).abs() < 1e-14);
    }

    #[test]
    fn diff_lowers_order() {
        let (x, y) = seed2(1.0, 2.0);
        let f = x.powi(3) * &y;
        let fx = f.diff(0);
        assert_eq!(fx.order(), 2);
        assert!((fx.value() - 6.0).abs() < 1e-15);
        assert!((fx.d2(0, 0) - 6.0 * 2.0).abs() < 1e-15);
    }

    #[test]
    fn embed_remaps_variables() {
        let (x, _) = seed2(1.0, 2.0);
        let f = x.powi(2);
        let e = f.embed(3, &[2, 0]);
        assert_eq!(e.d1(2), 2.0);
        assert_eq!(e.d1(0), 0.0);
        assert_eq!(e.d2(2, 2), 2.0);
    }

    #[test]
    fn f32_jets_work() {
        let v = Jet::<f32>::seed(&[0.5, 0.25], 3);
        let f = (&v[0] * &v[1]).exp();
        assert!((f.d1(1) - 0.5 * (0.125f32).exp()).abs() < 1e-6);
    }
}
