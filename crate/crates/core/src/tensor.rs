//! Pointwise tensor jets and the index algebra on them.
//!
//! A [`TensorJet`] is the full component array of a tensor at one point,
//! each component carried as a [`Jet`]. Components are stored row-major with
//! the first slot most significant.

use crate::error::{GeomError, Result};
use crate::jet::Jet;
use crate::linalg;
use crate::scalar::Scalar;

/// Position of an index slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variance {
    Up,
    Down,
}

/// `(r, s)` counts of contravariant and covariant slots.
pub fn valence(variance: &[Variance]) -> (usize, usize) {
    let up = variance.iter().filter(|v| **v == Variance::Up).count();
    (up, variance.len() - up)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorJet<T> {
    dim: usize,
    variance: Vec<Variance>,
    comps: Vec<Jet<T>>,
}

impl<T: Scalar> TensorJet<T> {
    pub fn new(dim: usize, variance: Vec<Variance>, comps: Vec<Jet<T>>) -> Result<Self> {
        let want = dim.pow(variance.len() as u32);
        if comps.len() != want {
            return Err(GeomError::Shape(format!(
                "expected {want} components for rank {} in dim {dim}, got {}",
                variance.len(),
                comps.len()
            )));
        }
        Ok(Self { dim, variance, comps })
    }

    pub fn zeros(dim: usize, variance: Vec<Variance>, order: usize) -> Self {
        let n = dim.pow(variance.len() as u32);
        Self { dim, variance, comps: vec![Jet::zero(dim, order); n] }
    }

    /// Builds a tensor by evaluating `f` on every multi-index.
    pub fn from_fn(dim: usize, variance: Vec<Variance>, mut f: impl FnMut(&[usize]) -> Jet<T>) -> Self {
        let rank = variance.len();
        let comps = MultiIndex::new(dim, rank).map(|idx| f(&idx)).collect();
        Self { dim, variance, comps }
    }

    /// A scalar tensor (rank 0).
    pub fn scalar(j: Jet<T>) -> Self {
        Self { dim: j.dim(), variance: vec![], comps: vec![j] }
    }

    /// Kronecker delta `δ^a_b` as a constant tensor.
    pub fn delta(dim: usize, order: usize) -> Self {
        Self::from_fn(dim, vec![Variance::Up, Variance::Down], |i| {
            Jet::constant(dim, order, if i[0] == i[1] { T::one() } else { T::zero() })
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn variance(&self) -> &[Variance] {
        &self.variance
    }

    pub fn order(&self) -> usize {
        self.comps.iter().map(Jet::order).min().unwrap_or(0)
    }

    pub fn comps(&self) -> &[Jet<T>] {
        &self.comps
    }

    pub fn into_comps(self) -> Vec<Jet<T>> {
        self.comps
    }

    #[inline]
    pub fn flat(&self, idx: &[usize]) -> usize {
        flat_index(self.dim, idx)
    }

    #[inline]
    pub fn at(&self, idx: &[usize]) -> &Jet<T> {
        &self.comps[flat_index(self.dim, idx)]
    }

    /// Component values at the base point.
    pub fn values(&self) -> Vec<T> {
        self.comps.iter().map(Jet::value).collect()
    }

    pub fn value_at(&self, idx: &[usize]) -> T {
        self.at(idx).value()
    }

    /// `∂_i` of every component (one jet order lower).
    pub fn diff(&self, i: usize) -> Self {
        Self {
            dim: self.dim,
            variance: self.variance.clone(),
            comps: self.comps.iter().map(|c| c.diff(i)).collect(),
        }
    }

    /// Coordinate gradient, prepended as a new covariant slot: `(∂T)_{a…} = ∂_a T_…`.
    pub fn partial(&self) -> Self {
        let mut variance = vec![Variance::Down];
        variance.extend_from_slice(&self.variance);
        let mut comps = Vec::with_capacity(self.comps.len() * self.dim);
        for a in 0..self.dim {
            comps.extend(self.comps.iter().map(|c| c.diff(a)));
        }
        Self { dim: self.dim, variance, comps }
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self {
            dim: self.dim,
            variance: self.variance.clone(),
            comps: self.comps.iter().map(|c| c.truncate(order)).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(&Jet<T>) -> Jet<T>) -> Self {
        Self { dim: self.dim, variance: self.variance.clone(), comps: self.comps.iter().map(f).collect() }
    }

    /// Largest absolute component value at the base point.
    pub fn max_abs_value(&self) -> T {
        self.comps.iter().fold(T::zero(), |m, c| m.max(c.value().abs()))
    }

    /// Largest absolute coefficient over values and stored derivatives.
    pub fn max_abs(&self) -> T {
        self.comps.iter().fold(T::zero(), |m, c| m.max(c.max_abs()))
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.variance != other.variance {
            return Err(GeomError::Shape(format!(
                "tensor shapes differ: {:?} vs {:?}",
                self.variance, other.variance
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            dim: self.dim,
            variance: self.variance.clone(),
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            dim: self.dim,
            variance: self.variance.clone(),
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|c| c.scale(s))
    }

    /// Pointwise multiplication by a scalar function.
    pub fn scale_jet(&self, s: &Jet<T>) -> Self {
        self.map(|c| c * s)
    }

    /// Tensor product; slots of `self` come first.
    pub fn outer(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(GeomError::Shape("outer product of tensors on different charts".into()));
        }
        let mut variance = self.variance.clone();
        variance.extend_from_slice(&other.variance);
        let mut comps = Vec::with_capacity(self.comps.len() * other.comps.len());
        for a in &self.comps {
            for b in &other.comps {
                comps.push(a * b);
            }
        }
        Ok(Self { dim: self.dim, variance, comps })
    }

    /// Contraction of slot `i` with slot `j`; one must be up and the other down.
    pub fn contract(&self, i: usize, j: usize) -> Result<Self> {
        let r = self.rank();
        if i >= r || j >= r || i == j {
            return Err(GeomError::Shape(format!("invalid contraction ({i},{j}) on rank {r}")));
        }
        if self.variance[i] == self.variance[j] {
            return Err(GeomError::Variance(format!(
                "slots {i} and {j} are both {:?}",
                self.variance[i]
            )));
        }
        let (lo, hi) = (i.min(j), i.max(j));
        let variance: Vec<Variance> = self
            .variance
            .iter()
            .enumerate()
            .filter(|(s, _)| *s != lo && *s != hi)
            .map(|(_, v)| *v)
            .collect();
        let d = self.dim;
        let order = self.order();
        let mut full = vec![0usize; r];
        let comps = MultiIndex::new(d, r - 2)
            .map(|rest| {
                let mut k = 0;
                for (s, slot) in full.iter_mut().enumerate() {
                    if s != lo && s != hi {
                        *slot = rest[k];
                        k += 1;
                    }
                }
                let mut acc = Jet::zero(d, order);
                for e in 0..d {
                    full[lo] = e;
                    full[hi] = e;
                    acc.add_scaled(&self.comps[flat_index(d, &full)], T::one());
                }
                acc
            })
            .collect();
        Ok(Self { dim: d, variance, comps })
    }

    /// Slot permutation: slot `s` of the result is slot `perm[s]` of `self`.
    pub fn transpose(&self, perm: &[usize]) -> Result<Self> {
        let r = self.rank();
        let mut seen = vec![false; r];
        if perm.len() != r || perm.iter().any(|&p| p >= r || std::mem::replace(&mut seen[p], true)) {
            return Err(GeomError::Shape(format!("{perm:?} is not a permutation of {r} slots")));
        }
        let variance = perm.iter().map(|&p| self.variance[p]).collect();
        let mut src = vec![0usize; r];
        let comps = MultiIndex::new(self.dim, r)
            .map(|idx| {
                for s in 0..r {
                    src[perm[s]] = idx[s];
                }
                self.comps[flat_index(self.dim, &src)].clone()
            })
            .collect();
        Ok(Self { dim: self.dim, variance, comps })
    }

    /// Symmetrization over the listed slots (normalized, so idempotent).
    pub fn symmetrize(&self, slots: &[usize]) -> Result<Self> {
        self.average_over(slots, false)
    }

    /// Antisymmetrization over the listed slots (normalized).
    pub fn antisymmetrize(&self, slots: &[usize]) -> Result<Self> {
        self.average_over(slots, true)
    }

    fn average_over(&self, slots: &[usize], alternate: bool) -> Result<Self> {
        let r = self.rank();
        if slots.iter().any(|&s| s >= r) {
            return Err(GeomError::Shape(format!("slot list {slots:?} exceeds rank {r}")));
        }
        if let Some(&first) = slots.first() {
            if slots.iter().any(|&s| self.variance[s] != self.variance[first]) {
                return Err(GeomError::Variance("symmetrizing slots of mixed variance".into()));
            }
        }
        let perms = permutations(slots.len());
        let weight = T::one() / T::lit(perms.len() as f64);
        let d = self.dim;
        let order = self.order();
        let mut src = vec![0usize; r];
        let comps = MultiIndex::new(d, r)
            .map(|idx| {
                let mut acc = Jet::zero(d, order);
                for (p, sign) in &perms {
                    src.copy_from_slice(&idx);
                    for (k, &s) in slots.iter().enumerate() {
                        src[s] = idx[slots[p[k]]];
                    }
                    let w = if alternate && *sign < 0 { -weight } else { weight };
                    acc.add_scaled(&self.comps[flat_index(d, &src)], w);
                }
                acc
            })
            .collect();
        Ok(Self { dim: d, variance: self.variance.clone(), comps })
    }

    /// Totally trace-free part with respect to every up/down contraction.
    ///
    /// The pure-trace tensors are the image of the adjoint of the stacked
    /// trace map, so the trace-free part is `T - C*(CC*)^{-1} C T`. The
    /// projector has constant coefficients and is applied to every jet
    /// coefficient.
    pub fn trace_free_part(&self) -> Result<Self> {
        let pairs = trace_pairs(&self.variance);
        if pairs.is_empty() {
            return Ok(self.clone());
        }
        let d = self.dim;
        let r = self.rank();
        let ntr = d.pow((r - 2) as u32);
        let nrows = pairs.len() * ntr;
        // Sparse rows of C: each row sums d components.
        let rows: Vec<Vec<usize>> = pairs
            .iter()
            .flat_map(|&(u, l)| {
                MultiIndex::new(d, r - 2).map(move |rest| {
                    let mut full = vec![0usize; r];
                    let mut k = 0;
                    for (s, slot) in full.iter_mut().enumerate() {
                        if s != u && s != l {
                            *slot = rest[k];
                            k += 1;
                        }
                    }
                    (0..d)
                        .map(|e| {
                            full[u] = e;
                            full[l] = e;
                            flat_index(d, &full)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        let ncomp = self.comps.len();
        let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); ncomp];
        for (ri, row) in rows.iter().enumerate() {
            for &c in row {
                col_rows[c].push(ri);
            }
        }
        let mut gram = vec![T::zero(); nrows * nrows];
        for (ri, row) in rows.iter().enumerate() {
            for &c in row {
                for &rj in &col_rows[c] {
                    gram[ri * nrows + rj] += T::one();
                }
            }
        }
        let lu = linalg::Lu::factor(gram, nrows)
            .ok_or_else(|| GeomError::Rank("trace Gram matrix is singular".into()))?;
        let order = self.order();
        let len = self.comps[0].truncate(order).coeff_len();
        let mut out: Vec<Vec<T>> = self.comps.iter().map(|c| c.truncate(order).coeffs().to_vec()).collect();
        for k in 0..len {
            let rhs: Vec<T> = rows.iter().map(|row| row.iter().map(|&c| out[c][k]).sum()).collect();
            let lam = lu.solve(&rhs);
            for (ri, row) in rows.iter().enumerate() {
                for &c in row {
                    out[c][k] -= lam[ri];
                }
            }
        }
        let comps = out.into_iter().map(|data| Jet::from_coeffs(d, order, data)).collect();
        Ok(Self { dim: d, variance: self.variance.clone(), comps })
    }

    /// Trace-free part of an all-lower rank-2 tensor with respect to `g`:
    /// `T_ab - (g^{cd}T_cd / dim) g_ab`.
    pub fn trace_free_metric(&self, g: &Self, g_inv: &Self) -> Result<Self> {
        if self.variance != [Variance::Down, Variance::Down] {
            return Err(GeomError::Unsupported("metric trace-free part is defined for (0,2) tensors".into()));
        }
        self.check_same_shape(g)?;
        let d = self.dim;
        let order = self.order().min(g.order()).min(g_inv.order());
        let mut tr = Jet::zero(d, order);
        for a in 0..d {
            for b in 0..d {
                tr = tr + g_inv.at(&[a, b]) * self.at(&[a, b]);
            }
        }
        let tr = tr.scale(T::one() / T::lit(d as f64));
        Ok(Self {
            dim: d,
            variance: self.variance.clone(),
            comps: self.comps.iter().zip(&g.comps).map(|(t, gg)| t - &(gg * &tr)).collect(),
        })
    }

    /// All up/down traces, stacked; zero iff the tensor is totally trace-free.
    pub fn max_trace(&self) -> T {
        let mut m = T::zero();
        for (u, l) in trace_pairs(&self.variance) {
            if let Ok(t) = self.contract(u, l) {
                m = m.max(t.max_abs_value());
            }
        }
        m
    }

    /// Maximum absolute difference of base-point values.
    pub fn max_diff(&self, other: &Self) -> T {
        self.comps
            .iter()
            .zip(&other.comps)
            .fold(T::zero(), |m, (a, b)| m.max((a.value() - b.value()).abs()))
    }
}

fn trace_pairs(variance: &[Variance]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (u, vu) in variance.iter().enumerate() {
        for (l, vl) in variance.iter().enumerate() {
            if *vu == Variance::Up && *vl == Variance::Down {
                pairs.push((u, l));
            }
        }
    }
    pairs
}

#[inline]
pub fn flat_index(dim: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * dim + i)
}

/// Lexicographic iterator over `{0..dim}^rank`.
pub struct MultiIndex {
    dim: usize,
    cur: Vec<usize>,
    done: bool,
}

impl MultiIndex {
    pub fn new(dim: usize, rank: usize) -> Self {
        Self { dim, cur: vec![0; rank], done: dim == 0 && rank > 0 }
    }
}

impl Iterator for MultiIndex {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.cur.clone();
        let mut s = self.cur.len();
        loop {
            if s == 0 {
                self.done = true;
                break;
            }
            s -= 1;
            self.cur[s] += 1;
            if self.cur[s] < self.dim {
                break;
            }
            self.cur[s] = 0;
        }
        Some(out)
    }
}

/// All permutations of `0..n` with their signs.
fn permutations(n: usize) -> Vec<(Vec<usize>, i32)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<(Vec<usize>, i32)>) {
        let n = used.len();
        if prefix.len() == n {
            let mut inv = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if prefix[i] > prefix[j] {
                        inv += 1;
                    }
                }
            }
            out.push((prefix.clone(), if inv % 2 == 0 { 1 } else { -1 }));
            return;
        }
        for k in 0..n {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use Variance::{Down, Up};

    fn random_tensor(dim: usize, variance: Vec<Variance>, seed: u64) -> TensorJet<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        TensorJet::from_fn(dim, variance, |_| Jet::constant(dim, 0, rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn trace_of_identity_is_dimension() {
        let t = TensorJet::<f64>::delta(7, 0).contract(0, 1).unwrap();
        assert_eq!(t.rank(), 0);
        assert_eq!(t.comps()[0].value(), 7.0);
    }

    #[test]
    fn contracting_equal_variance_is_rejected() {
        let t = random_tensor(3, vec![Down, Down], 1);
        assert!(matches!(t.contract(0, 1), Err(GeomError::Variance(_))));
        assert!(matches!(t.contract(0, 0), Err(GeomError::Shape(_))));
    }

    #[test]
    fn antisym_of_symmetric_vanishes() {
        let t = random_tensor(4, vec![Down, Down], 2).symmetrize(&[0, 1]).unwrap();
        let a = t.antisymmetrize(&[0, 1]).unwrap();
        assert!(a.max_abs_value() < 1e-15);
    }

    #[test]
    fn trace_free_part_is_trace_free_and_idempotent() {
        let t = random_tensor(4, vec![Down, Down, Up, Down], 3);
        let tf = t.trace_free_part().unwrap();
        assert!(tf.max_trace() < 1e-13);
        let tf2 = tf.trace_free_part().unwrap();
        assert!(tf.max_diff(&tf2) < 1e-13);
    }

    #[test]
    fn mixed_rank2_trace_free_matches_formula() {
        let t = random_tensor(5, vec![Up, Down], 4);
        let tf = t.trace_free_part().unwrap();
        let tr: f64 = (0..5).map(|i| t.value_at(&[i, i])).sum();
        for a in 0..5 {
            for b in 0..5 {
                let want = t.value_at(&[a, b]) - if a == b { tr / 5.0 } else { 0.0 };
                assert!((tf.value_at(&[a, b]) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn transpose_swaps_slots() {
        let t = random_tensor(3, vec![Up, Down, Down], 5);
        let s = t.transpose(&[0, 2, 1]).unwrap();
        assert_eq!(s.value_at(&[0, 1, 2]), t.value_at(&[0, 2, 1]));
        assert!(t.transpose(&[0, 0, 1]).is_err());
    }

    #[test]
    fn multi_index_enumerates_lexicographically() {
        let v: Vec<_> = MultiIndex::new(2, 2).collect();
        assert_eq!(v, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(MultiIndex::new(3, 0).count(), 1);
    }
}
