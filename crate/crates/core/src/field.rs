//! Chart-local tensor fields with exact jet evaluation.

use std::fmt;
use std::sync::Arc;

use crate::chart::Chart;
use crate::error::{GeomError, Result};
use crate::jet::{Jet, MAX_ORDER};
use crate::scalar::Scalar;
use crate::tensor::{valence, TensorJet, Variance};

/// Component rule applied to seeded coordinate jets.
pub type RuleFn<T> = dyn Fn(&[Jet<T>]) -> Vec<Jet<T>> + Send + Sync;
/// Component evaluator for fields built from other fields.
pub type DerivedFn<T> = dyn Fn(&[T], usize) -> Result<TensorJet<T>> + Send + Sync;

#[derive(Clone)]
pub enum Source<T> {
    /// Closed-form rule; exact to order 3 and composable with other maps.
    Rule(Arc<RuleFn<T>>),
    /// Built from other fields; the evaluator handles its own order bookkeeping.
    Derived(Arc<DerivedFn<T>>),
}

#[derive(Clone)]
pub struct TensorField<T> {
    chart: Chart,
    variance: Vec<Variance>,
    weight: f64,
    max_order: usize,
    source: Source<T>,
}

impl<T> fmt::Debug for TensorField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TensorField")
            .field("chart", &self.chart.name())
            .field("variance", &self.variance)
            .field("weight", &self.weight)
            .field("max_order", &self.max_order)
            .finish()
    }
}

impl<T: Scalar> TensorField<T> {
    pub fn from_rule(
        chart: Chart,
        variance: Vec<Variance>,
        weight: f64,
        rule: impl Fn(&[Jet<T>]) -> Vec<Jet<T>> + Send + Sync + 'static,
    ) -> Self {
        Self { chart, variance, weight, max_order: MAX_ORDER, source: Source::Rule(Arc::new(rule)) }
    }

    pub fn derived(
        chart: Chart,
        variance: Vec<Variance>,
        weight: f64,
        max_order: usize,
        eval: impl Fn(&[T], usize) -> Result<TensorJet<T>> + Send + Sync + 'static,
    ) -> Self {
        Self { chart, variance, weight, max_order, source: Source::Derived(Arc::new(eval)) }
    }

    /// The one-form `df` of a scalar rule `f`, exact to order `MAX_ORDER − 1`.
    pub fn gradient(chart: Chart, f: impl Fn(&[Jet<T>]) -> Jet<T> + Send + Sync + 'static) -> Self {
        let d = chart.dim();
        Self::derived(chart, vec![Variance::Down], 0.0, MAX_ORDER - 1, move |p, o| {
            let v = f(&Jet::seed(p, o + 1));
            TensorJet::new(d, vec![Variance::Down], (0..d).map(|a| v.diff(a)).collect())
        })
    }

    /// A field with constant components.
    pub fn constant(chart: Chart, variance: Vec<Variance>, weight: f64, values: Vec<T>) -> Self {
        Self::from_rule(chart, variance, weight, move |x| {
            let (d, o) = (x[0].dim(), x[0].order());
            values.iter().map(|&v| Jet::constant(d, o, v)).collect()
        })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn variance(&self) -> &[Variance] {
        &self.variance
    }

    pub fn valence(&self) -> (usize, usize) {
        valence(&self.variance)
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn source(&self) -> &Source<T> {
        &self.source
    }

    /// The closed-form rule, when the field has one.
    pub fn rule(&self) -> Option<Arc<RuleFn<T>>> {
        match &self.source {
            Source::Rule(r) => Some(r.clone()),
            Source::Derived(_) => None,
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    /// Component jets at `point` up to `order`.
    pub fn evaluate(&self, point: &[T], order: usize) -> Result<TensorJet<T>> {
        let p64: Vec<f64> = point.iter().map(|x| x.as_f64()).collect();
        self.chart.check_point(&p64)?;
        self.evaluate_unchecked(point, order)
    }

    /// As [`evaluate`](Self::evaluate) without the domain check, for points
    /// produced internally (e.g. transport stages) that are known to be valid.
    pub fn evaluate_unchecked(&self, point: &[T], order: usize) -> Result<TensorJet<T>> {
        if order > self.max_order {
            return Err(GeomError::Capability { requested: order, max: self.max_order });
        }
        let dim = self.dim();
        match &self.source {
            Source::Rule(rule) => {
                let x = Jet::seed(point, order);
                TensorJet::new(dim, self.variance.clone(), rule(&x))
            }
            Source::Derived(f) => {
                let t = f(point, order)?;
                if t.variance() != self.variance.as_slice() || t.dim() != dim {
                    return Err(GeomError::Shape("derived field returned an inconsistent tensor".into()));
                }
                Ok(t)
            }
        }
    }

    /// Component values at `point`.
    pub fn values(&self, point: &[T]) -> Result<Vec<T>> {
        Ok(self.evaluate(point, 0)?.values())
    }

    fn same_chart(&self, other: &Self) -> Result<()> {
        if self.chart != other.chart {
            return Err(GeomError::Shape(format!(
                "fields live on different charts ({} vs {})",
                self.chart.name(),
                other.chart.name()
            )));
        }
        Ok(())
    }

    fn lift_unary(
        &self,
        variance: Vec<Variance>,
        weight: f64,
        f: impl Fn(TensorJet<T>) -> Result<TensorJet<T>> + Send + Sync + 'static,
    ) -> Self {
        let src = self.clone();
        Self::derived(self.chart.clone(), variance, weight, self.max_order, move |p, o| {
            f(src.evaluate_unchecked(p, o)?)
        })
    }

    fn lift_binary(
        &self,
        other: &Self,
        variance: Vec<Variance>,
        weight: f64,
        f: impl Fn(TensorJet<T>, TensorJet<T>) -> Result<TensorJet<T>> + Send + Sync + 'static,
    ) -> Result<Self> {
        self.same_chart(other)?;
        let (a, b) = (self.clone(), other.clone());
        Ok(Self::derived(
            self.chart.clone(),
            variance,
            weight,
            self.max_order.min(other.max_order),
            move |p, o| f(a.evaluate_unchecked(p, o)?, b.evaluate_unchecked(p, o)?),
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.variance != other.variance {
            return Err(GeomError::Shape(format!("cannot add {:?} and {:?}", self.variance, other.variance)));
        }
        if self.weight != other.weight {
            return Err(GeomError::Shape(format!("cannot add weights {} and {}", self.weight, other.weight)));
        }
        self.lift_binary(other, self.variance.clone(), self.weight, |a, b| a.add(&b))
    }

    pub fn scale(&self, s: T) -> Self {
        self.lift_unary(self.variance.clone(), self.weight, move |a| Ok(a.scale(s)))
    }

    /// Tensor product; projective weights add.
    pub fn outer(&self, other: &Self) -> Result<Self> {
        let mut v = self.variance.clone();
        v.extend_from_slice(&other.variance);
        self.lift_binary(other, v, self.weight + other.weight, |a, b| a.outer(&b))
    }

    pub fn contract(&self, i: usize, j: usize) -> Result<Self> {
        // Validate eagerly so shape/variance errors surface at construction.
        let probe = TensorJet::<T>::zeros(self.dim(), self.variance.clone(), 0).contract(i, j)?;
        Ok(self.lift_unary(probe.variance().to_vec(), self.weight, move |a| a.contract(i, j)))
    }

    pub fn transpose(&self, perm: &[usize]) -> Result<Self> {
        let probe = TensorJet::<T>::zeros(self.dim(), self.variance.clone(), 0).transpose(perm)?;
        let perm = perm.to_vec();
        Ok(self.lift_unary(probe.variance().to_vec(), self.weight, move |a| a.transpose(&perm)))
    }

    pub fn symmetrize(&self, slots: &[usize]) -> Result<Self> {
        TensorJet::<T>::zeros(self.dim(), self.variance.clone(), 0).symmetrize(slots)?;
        let slots = slots.to_vec();
        Ok(self.lift_unary(self.variance.clone(), self.weight, move |a| a.symmetrize(&slots)))
    }

    pub fn antisymmetrize(&self, slots: &[usize]) -> Result<Self> {
        TensorJet::<T>::zeros(self.dim(), self.variance.clone(), 0).antisymmetrize(slots)?;
        let slots = slots.to_vec();
        Ok(self.lift_unary(self.variance.clone(), self.weight, move |a| a.antisymmetrize(&slots)))
    }

    /// Totally trace-free part with respect to all up/down contractions.
    pub fn trace_free_part(&self) -> Self {
        self.lift_unary(self.variance.clone(), self.weight, |a| a.trace_free_part())
    }

    /// Trace-free part of a `(0,2)` field with respect to the metric `g`.
    pub fn trace_free_metric(&self, g: &Self) -> Result<Self> {
        if self.variance != [Variance::Down, Variance::Down] {
            return Err(GeomError::Unsupported("metric trace-free part is defined for (0,2) fields".into()));
        }
        self.lift_binary(g, self.variance.clone(), self.weight, |a, g| {
            let n = g.dim();
            let inv = crate::linalg::jet_inverse(g.comps(), n)
                .ok_or_else(|| GeomError::Rank("metric is singular".into()))?;
            let ginv = TensorJet::new(n, vec![Variance::Up, Variance::Up], inv)?;
            a.trace_free_metric(&g, &ginv)
        })
    }
}

/// Central finite-difference estimates of all partials up to order 3 of
/// every component, from component values only.
///
/// Returns `(grad, hess, third)` per component, laid out like [`Jet`].
pub fn finite_differences(field: &TensorField<f64>, point: &[f64], h: f64) -> Result<Vec<[Vec<f64>; 3]>> {
    let d = point.len();
    let eval = |shift: &[(usize, f64)]| -> Result<Vec<f64>> {
        let mut p = point.to_vec();
        for &(i, s) in shift {
            p[i] += s;
        }
        field.values(&p)
    };
    let ncomp = field.evaluate(point, 0)?.comps().len();
    let mut out: Vec<[Vec<f64>; 3]> =
        (0..ncomp).map(|_| [vec![0.0; d], vec![0.0; d * d], vec![0.0; d * d * d]]).collect();
    for i in 0..d {
        let (a, b) = (eval(&[(i, h)])?, eval(&[(i, -h)])?);
        for c in 0..ncomp {
            out[c][0][i] = (a[c] - b[c]) / (2.0 * h);
        }
    }
    for i in 0..d {
        for j in i..d {
            let mut acc = vec![0.0; ncomp];
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let v = eval(&[(i, si * h), (j, sj * h)])?;
                for c in 0..ncomp {
                    acc[c] += si * sj * v[c];
                }
            }
            for c in 0..ncomp {
                let val = acc[c] / (4.0 * h * h);
                out[c][1][i * d + j] = val;
                out[c][1][j * d + i] = val;
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            for k in j..d {
                let mut acc = vec![0.0; ncomp];
                for si in [1.0, -1.0] {
                    for sj in [1.0, -1.0] {
                        for sk in [1.0, -1.0] {
                            let v = eval(&[(i, si * h), (j, sj * h), (k, sk * h)])?;
                            for c in 0..ncomp {
                                acc[c] += si * sj * sk * v[c];
                            }
                        }
                    }
                }
                for c in 0..ncomp {
                    let val = acc[c] / (8.0 * h * h * h);
                    for (a, b, e) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                        out[c][2][(a * d + b) * d + e] = val;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Maximum deviation between exact jets and finite differences, per order.
pub fn finite_difference_error(field: &TensorField<f64>, point: &[f64], h: f64) -> Result<[f64; 3]> {
    let exact = field.evaluate(point, 3)?;
    let fd = finite_differences(field, point, h)?;
    let mut err = [0.0f64; 3];
    for (c, jet) in exact.comps().iter().enumerate() {
        for (k, arr) in [jet.grad(), jet.hess(), jet.third()].into_iter().enumerate() {
            for (x, y) in arr.iter().zip(&fd[c][k]) {
                err[k] = err[k].max((x - y).abs());
            }
        }
    }
    Ok(err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Variance::{Down, Up};

    fn chart(d: usize) -> Chart {
        Chart::cube("test", d, 1.0).unwrap()
    }

    fn sample_metric() -> TensorField<f64> {
        TensorField::from_rule(chart(2), vec![Down, Down], 0.0, |x| {
            let one = Jet::constant(2, x[0].order(), 1.0);
            let g00 = &one + &(&x[0] * &x[0]);
            let g01 = (&x[0] * &x[1]).sin().scale(0.1);
            let g11 = (&one + &x[1].exp()).scale(0.5);
            vec![g00, g01.clone(), g01, g11]
        })
    }

    #[test]
    fn constant_field_has_zero_gradient() {
        let f = TensorField::constant(chart(3), vec![], 0.0, vec![2.0]);
        let j = f.evaluate(&[0.1, 0.2, 0.3], 1).unwrap();
        assert_eq!(j.comps()[0].value(), 2.0);
        assert!(j.comps()[0].grad().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn coordinate_square() {
        let c = Chart::cube("wide", 3, 3.0).unwrap();
        let f = TensorField::<f64>::from_rule(c, vec![], 0.0, |x| vec![&x[0] * &x[0]]);
        let j = f.evaluate(&[2.0, 0.0, 0.0], 2).unwrap();
        let s = &j.comps()[0];
        assert_eq!((s.value(), s.d1(0), s.d2(0, 0)), (4.0, 4.0, 2.0));
    }

    #[test]
    fn domain_and_capability_errors() {
        let f = sample_metric();
        assert!(matches!(f.evaluate(&[2.0, 0.0], 0), Err(GeomError::Domain { .. })));
        let g = f.trace_free_metric(&f).unwrap();
        assert!(g.evaluate(&[0.1, 0.1], 3).is_ok());
        let lowered = TensorField::derived(chart(2), vec![], 0.0, 1, |_, o| {
            Ok(TensorJet::scalar(Jet::zero(2, o)))
        });
        assert!(matches!(lowered.evaluate(&[0.0, 0.0], 2), Err(GeomError::Capability { .. })));
    }

    #[test]
    fn algebra_shape_errors() {
        let g = sample_metric();
        assert!(matches!(g.contract(0, 1), Err(GeomError::Variance(_))));
        let v = TensorField::constant(chart(2), vec![Up], 0.0, vec![1.0, 2.0]);
        assert!(g.add(&v).is_err());
        let gv = g.outer(&v).unwrap();
        assert_eq!(gv.valence(), (1, 2));
        let w = gv.contract(1, 2).unwrap();
        let vals = w.values(&[0.2, -0.3]).unwrap();
        let gvals = g.values(&[0.2, -0.3]).unwrap();
        assert!((vals[0] - (gvals[0] + 2.0 * gvals[1])).abs() < 1e-15);
    }

    #[test]
    fn weights_add_under_outer_product() {
        let a = TensorField::constant(chart(2), vec![], 1.0, vec![1.0]);
        let b = TensorField::constant(chart(2), vec![Up], -2.0, vec![1.0, 0.0]);
        assert_eq!(a.outer(&b).unwrap().weight(), -1.0);
    }

    #[test]
    fn jets_agree_with_finite_differences() {
        let f = sample_metric();
        let p = [0.3, -0.2];
        let e1 = finite_difference_error(&f, &p, 1e-2).unwrap();
        let e2 = finite_difference_error(&f, &p, 5e-3).unwrap();
        for k in 0..3 {
            let rate = (e1[k] / e2[k]).log2();
            assert!(rate > 1.9, "order {k}: rate {rate}");
        }
    }
}
