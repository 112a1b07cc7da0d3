//! Affine connections, curvature, and the projective decomposition.
//!
//! Christoffel symbols are stored as `Γ[c][a][b] = Γ^c_{ab}` with `a` the
//! differentiation direction. Curvature is `R[a][b][c][d] = R_{ab}{}^c{}_d`
//! with
//!
//! ```text
//! R_{ab}^c_d = ∂_a Γ^c_{bd} − ∂_b Γ^c_{ad} + Γ^c_{ae} Γ^e_{bd} − Γ^c_{be} Γ^e_{ad}
//! Ric_{bd}   = R_{cb}^c_d
//! P_{ab}     = ((n+1) Ric_{ab} + Ric_{ba}) / (n(n+2))
//! W          = R − δ^c_a P_{bd} + δ^c_b P_{ad} + 2 P_{[ab]} δ^c_d
//! C_{abc}    = ∇_a P_{bc} − ∇_b P_{ac}
//! ```
//!
//! Densities are trivialized by the coordinate volume, so a weight-`w`
//! density picks up `(w/(n+2)) Γ^e_{ea}` under `∇_a`.

use crate::chart::Chart;
use crate::error::{GeomError, Result};
use crate::field::TensorField;
use crate::jet::Jet;
use crate::linalg::{condition_number, jet_inverse};
use crate::scalar::Scalar;
use crate::tensor::{MultiIndex, TensorJet, Variance};

use Variance::{Down, Up};

const VALIDATION_POINTS: usize = 8;

fn p64<T: Scalar>(p: &[T]) -> Vec<f64> {
    p.iter().map(|x| x.as_f64()).collect()
}

/// Levi-Civita Christoffel symbols from a metric jet of order `k + 1`.
pub fn christoffel<T: Scalar>(g: &TensorJet<T>) -> Option<TensorJet<T>> {
    let d = g.dim();
    let k = g.order().checked_sub(1)?;
    let ginv = jet_inverse(g.truncate(k).comps(), d)?;
    let dg = g.partial();
    let mut first = Vec::with_capacity(d * d * d);
    let half = T::lit(0.5);
    for e in 0..d {
        for a in 0..d {
            for b in 0..d {
                let v = dg.at(&[a, e, b]) + dg.at(&[b, e, a]) - dg.at(&[e, a, b]);
                first.push(v.scale(half));
            }
        }
    }
    Some(TensorJet::from_fn(d, vec![Up, Down, Down], |i| {
        let (c, a, b) = (i[0], i[1], i[2]);
        let mut acc = Jet::zero(d, k);
        for e in 0..d {
            acc = acc + &ginv[c * d + e] * &first[(e * d + a) * d + b];
        }
        acc
    }))
}

/// `∇_a` of a tensor jet (order `k + 1`) given `Γ` (order ≥ `k`); the new
/// covariant slot is prepended. `weight` is the projective density weight.
pub fn covariant_derivative<T: Scalar>(t: &TensorJet<T>, gamma: &TensorJet<T>, weight: f64) -> TensorJet<T> {
    let d = t.dim();
    let k = t.order() - 1;
    let g = gamma.truncate(k);
    let n = d - 1;
    let tt = t.truncate(k);
    let variance: Vec<Variance> = t.variance().to_vec();
    let rank = variance.len();
    let wf = T::lit(weight / (n as f64 + 2.0));
    let mut out_var = vec![Down];
    out_var.extend_from_slice(&variance);
    let trace: Vec<Jet<T>> = (0..d)
        .map(|a| {
            let mut acc = Jet::zero(d, k);
            for e in 0..d {
                acc.add_scaled(g.at(&[e, e, a]), T::one());
            }
            acc
        })
        .collect();
    let mut src = vec![0usize; rank];
    TensorJet::from_fn(d, out_var, |idx| {
        let a = idx[0];
        let rest = &idx[1..];
        let mut acc = t.at(rest).diff(a);
        for s in 0..rank {
            src.copy_from_slice(rest);
            for e in 0..d {
                src[s] = e;
                let term = match variance[s] {
                    Up => g.at(&[rest[s], a, e]) * tt.at(&src),
                    Down => -(g.at(&[e, a, rest[s]]) * tt.at(&src)),
                };
                acc = acc + term;
            }
        }
        if weight != 0.0 {
            acc = acc + (&trace[a] * tt.at(rest)).scale(wf);
        }
        acc
    })
}

/// All curvature quantities of a connection at one point.
#[derive(Clone, Debug)]
pub struct CurvatureJets<T> {
    pub r: TensorJet<T>,
    pub ric: TensorJet<T>,
    pub p: TensorJet<T>,
    pub w: TensorJet<T>,
    /// Present when `Γ` was supplied to order ≥ 2.
    pub c: Option<TensorJet<T>>,
}

/// Curvature from `Γ` at order `k ≥ 1`; `R, Ric, P, W` come out at order
/// `k − 1` and `C` at order `k − 2`.
pub fn curvature_jets<T: Scalar>(gamma: &TensorJet<T>) -> Result<CurvatureJets<T>> {
    let k = gamma.order();
    if k < 1 {
        return Err(GeomError::Capability { requested: 1, max: 0 });
    }
    let d = gamma.dim();
    let n = (d - 1) as f64;
    let dgam = gamma.partial();
    let g = gamma.truncate(k - 1);
    let r = TensorJet::from_fn(d, vec![Down, Down, Up, Down], |i| {
        let (a, b, c, dd) = (i[0], i[1], i[2], i[3]);
        let mut acc = dgam.at(&[a, c, b, dd]) - dgam.at(&[b, c, a, dd]);
        for e in 0..d {
            acc = acc + g.at(&[c, a, e]) * g.at(&[e, b, dd]) - g.at(&[c, b, e]) * g.at(&[e, a, dd]);
        }
        acc
    });
    let ric = TensorJet::from_fn(d, vec![Down, Down], |i| {
        let mut acc = Jet::zero(d, k - 1);
        for c in 0..d {
            acc.add_scaled(r.at(&[c, i[0], c, i[1]]), T::one());
        }
        acc
    });
    let s1 = T::lit((n + 1.0) / (n * (n + 2.0)));
    let s2 = T::lit(1.0 / (n * (n + 2.0)));
    let p = TensorJet::from_fn(d, vec![Down, Down], |i| {
        ric.at(&[i[0], i[1]]).scale(s1) + ric.at(&[i[1], i[0]]).scale(s2)
    });
    let w = TensorJet::from_fn(d, vec![Down, Down, Up, Down], |i| {
        let (a, b, c, dd) = (i[0], i[1], i[2], i[3]);
        let mut acc = r.at(i).clone();
        if c == a {
            acc = acc - p.at(&[b, dd]);
        }
        if c == b {
            acc = acc + p.at(&[a, dd]);
        }
        if c == dd {
            acc = acc + p.at(&[a, b]) - p.at(&[b, a]);
        }
        acc
    });
    let c = if k >= 2 {
        let np = covariant_derivative(&p, gamma, 0.0);
        Some(TensorJet::from_fn(d, vec![Down, Down, Down], |i| np.at(&[i[0], i[1], i[2]]) - np.at(&[i[1], i[0], i[2]])))
    } else {
        None
    };
    Ok(CurvatureJets { r, ric, p, w, c })
}

/// Projectively changed Christoffel symbols `Γ + Υ_a δ^c_b + Υ_b δ^c_a`.
pub fn projective_change_jet<T: Scalar>(gamma: &TensorJet<T>, ups: &TensorJet<T>) -> TensorJet<T> {
    let d = gamma.dim();
    let k = gamma.order().min(ups.order());
    TensorJet::from_fn(d, vec![Up, Down, Down], |i| {
        let (c, a, b) = (i[0], i[1], i[2]);
        let mut acc = gamma.at(i).truncate(k);
        if c == b {
            acc = acc + ups.at(&[a]).truncate(k);
        }
        if c == a {
            acc = acc + ups.at(&[b]).truncate(k);
        }
        acc
    })
}

/// `(L_ξ Γ)^c_{ab}` from `ξ` at order `k + 2` and `Γ` at order `k + 1`.
pub fn lie_derivative_gamma<T: Scalar>(xi: &TensorJet<T>, gamma: &TensorJet<T>) -> TensorJet<T> {
    let d = xi.dim();
    let k = (xi.order() - 2).min(gamma.order() - 1);
    let dxi = xi.partial().truncate(k);
    let dgam = gamma.partial().truncate(k);
    let g = gamma.truncate(k);
    let x = xi.truncate(k);
    TensorJet::from_fn(d, vec![Up, Down, Down], |i| {
        let (c, a, b) = (i[0], i[1], i[2]);
        let mut acc = xi.at(&[c]).diff(a).diff(b).truncate(k);
        for e in 0..d {
            acc = acc + x.at(&[e]) * dgam.at(&[e, c, a, b]) - g.at(&[e, a, b]) * dxi.at(&[e, c])
                + g.at(&[c, e, b]) * dxi.at(&[a, e])
                + g.at(&[c, a, e]) * dxi.at(&[b, e]);
        }
        acc
    })
}

/// Torsion-free affine connection on a chart.
#[derive(Clone, Debug)]
pub struct Connection<T> {
    gamma: TensorField<T>,
    special: bool,
}

impl<T: Scalar> Connection<T> {
    /// Validates variance and torsion-freeness at deterministic sample points.
    pub fn new(gamma: TensorField<T>, special: bool) -> Result<Self> {
        if gamma.variance() != [Up, Down, Down] {
            return Err(GeomError::Shape("Christoffel symbols must have valence (1,2)".into()));
        }
        let d = gamma.dim();
        for p in gamma.chart().sample_points(VALIDATION_POINTS, 0) {
            let pt: Vec<T> = p.iter().map(|&x| T::lit(x)).collect();
            let g = gamma.evaluate(&pt, 0)?;
            let tol = 1e-12f64.max(100.0 * T::epsilon().as_f64()) * g.max_abs_value().as_f64().max(1.0);
            for c in 0..d {
                for a in 0..d {
                    for b in a + 1..d {
                        let t = (g.value_at(&[c, a, b]) - g.value_at(&[c, b, a])).as_f64();
                        if t.abs() > tol {
                            return Err(GeomError::Shape(format!("connection has torsion {t:e} at {p:?}")));
                        }
                    }
                }
            }
        }
        Ok(Self { gamma, special })
    }

    /// The flat connection `Γ = 0` of the chart.
    pub fn flat(chart: Chart) -> Self {
        let d = chart.dim();
        let gamma = TensorField::constant(chart, vec![Up, Down, Down], 0.0, vec![T::zero(); d * d * d]);
        Self { gamma, special: true }
    }

    pub fn chart(&self) -> &Chart {
        self.gamma.chart()
    }

    pub fn dim(&self) -> usize {
        self.gamma.dim()
    }

    /// Projective dimension parameter `n = dim − 1`.
    pub fn n(&self) -> usize {
        self.dim() - 1
    }

    pub fn gamma(&self) -> &TensorField<T> {
        &self.gamma
    }

    /// Whether this connection is a scale (symmetric Ricci tensor).
    pub fn is_special(&self) -> bool {
        self.special
    }

    pub fn gamma_at(&self, p: &[T], order: usize) -> Result<TensorJet<T>> {
        self.gamma.evaluate(p, order)
    }

    /// All curvature quantities at `p`, `R/Ric/P/W` to `order` and `C` to
    /// `order − 1` when available.
    pub fn curvature_at(&self, p: &[T], order: usize) -> Result<CurvatureJets<T>> {
        let want = (order + 2).min(self.gamma.max_order());
        if want < order + 1 {
            return Err(GeomError::Capability { requested: order + 1, max: self.gamma.max_order() });
        }
        curvature_jets(&self.gamma.evaluate(p, want)?)
    }

    /// `∇` of a tensor jet supplied one order above the result.
    pub fn nabla(&self, p: &[T], t: &TensorJet<T>, weight: f64) -> Result<TensorJet<T>> {
        let k = t.order().checked_sub(1).ok_or(GeomError::Capability { requested: 1, max: 0 })?;
        Ok(covariant_derivative(t, &self.gamma.evaluate(p, k)?, weight))
    }
}

/// Levi-Civita connection of a metric field.
pub fn levi_civita<T: Scalar>(g: &TensorField<T>) -> Result<Connection<T>> {
    if g.variance() != [Down, Down] {
        return Err(GeomError::Shape("metric must have valence (0,2)".into()));
    }
    let d = g.dim();
    for p in g.chart().sample_points(VALIDATION_POINTS, 0) {
        let pt: Vec<T> = p.iter().map(|&x| T::lit(x)).collect();
        let vals: Vec<f64> = g.values(&pt)?.iter().map(|x| x.as_f64()).collect();
        let cond = condition_number(&vals, d);
        if !cond.is_finite() || cond > 1e12 {
            return Err(GeomError::Degenerate { point: p, condition: cond });
        }
        for a in 0..d {
            for b in a + 1..d {
                if (vals[a * d + b] - vals[b * d + a]).abs() > 1e-12 * (1.0 + vals[a * d + b].abs()) {
                    return Err(GeomError::Shape("metric is not symmetric".into()));
                }
            }
        }
    }
    let metric = g.clone();
    let gamma = TensorField::derived(
        g.chart().clone(),
        vec![Up, Down, Down],
        0.0,
        g.max_order().saturating_sub(1),
        move |p, o| {
            let gj = metric.evaluate_unchecked(p, o + 1)?;
            christoffel(&gj).ok_or_else(|| {
                let vals: Vec<f64> = gj.values().iter().map(|x| x.as_f64()).collect();
                GeomError::Degenerate { point: p64(p), condition: condition_number(&vals, d) }
            })
        },
    );
    Ok(Connection { gamma, special: true })
}

/// Curvature fields of a connection.
#[derive(Clone, Debug)]
pub struct CurvaturePack<T> {
    pub r: TensorField<T>,
    pub ric: TensorField<T>,
    pub p: TensorField<T>,
    pub w: TensorField<T>,
    pub c: TensorField<T>,
}

pub fn curvature_pack<T: Scalar>(nabla: &Connection<T>) -> Result<CurvaturePack<T>> {
    let max = nabla.gamma.max_order();
    if max < 2 {
        return Err(GeomError::Capability { requested: 2, max });
    }
    let chart = nabla.chart().clone();
    let make = |variance: Vec<Variance>, shift: usize, pick: fn(CurvatureJets<T>) -> Option<TensorJet<T>>| {
        let conn = nabla.clone();
        TensorField::derived(chart.clone(), variance, 0.0, max - shift, move |p, o| {
            let cj = curvature_jets(&conn.gamma.evaluate_unchecked(p, o + shift)?)?;
            pick(cj).ok_or(GeomError::Capability { requested: o + shift, max })
        })
    };
    Ok(CurvaturePack {
        r: make(vec![Down, Down, Up, Down], 1, |c| Some(c.r)),
        ric: make(vec![Down, Down], 1, |c| Some(c.ric)),
        p: make(vec![Down, Down], 1, |c| Some(c.p)),
        w: make(vec![Down, Down, Up, Down], 1, |c| Some(c.w)),
        c: make(vec![Down, Down, Down], 2, |c| c.c),
    })
}

fn is_closed<T: Scalar>(ups: &TensorField<T>) -> Result<bool> {
    let d = ups.dim();
    for p in ups.chart().sample_points(VALIDATION_POINTS, 1) {
        let pt: Vec<T> = p.iter().map(|&x| T::lit(x)).collect();
        let u = ups.evaluate(&pt, 1)?;
        let scale = u.max_abs().as_f64().max(1.0);
        for a in 0..d {
            for b in a + 1..d {
                let curl = (u.at(&[a]).d1(b) - u.at(&[b]).d1(a)).as_f64();
                if curl.abs() > 1e-9 * scale {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// `Γ̂^c_{ab} = Γ^c_{ab} + Υ_a δ^c_b + Υ_b δ^c_a`.
///
/// The result is marked as a scale when the input is one and `Υ` is closed.
pub fn projective_change<T: Scalar>(nabla: &Connection<T>, upsilon: &TensorField<T>) -> Result<Connection<T>> {
    if upsilon.variance() != [Down] {
        return Err(GeomError::Shape("Υ must be a one-form".into()));
    }
    if upsilon.chart() != nabla.chart() {
        return Err(GeomError::Shape("Υ and ∇ live on different charts".into()));
    }
    let special = nabla.special && (upsilon.max_order() < 1 || is_closed(upsilon)?);
    let (g, u) = (nabla.gamma.clone(), upsilon.clone());
    let gamma = TensorField::derived(
        nabla.chart().clone(),
        vec![Up, Down, Down],
        0.0,
        g.max_order().min(u.max_order()),
        move |p, o| Ok(projective_change_jet(&g.evaluate_unchecked(p, o)?, &u.evaluate_unchecked(p, o)?)),
    );
    Ok(Connection { gamma, special })
}

fn check_nonvanishing<T: Scalar>(sigma: &TensorField<T>) -> Result<()> {
    for p in sigma.chart().sample_points(2 * VALIDATION_POINTS, 2) {
        let pt: Vec<T> = p.iter().map(|&x| T::lit(x)).collect();
        if sigma.values(&pt)?[0].as_f64().abs() < 1e-14 {
            return Err(GeomError::ZeroScale { point: p });
        }
    }
    Ok(())
}

/// `∇̂_a σ = ∇_a σ + w Υ_a σ` for a weight-`w` density `σ`.
pub fn density_change<T: Scalar>(
    sigma: &TensorField<T>,
    nabla: &Connection<T>,
    upsilon: &TensorField<T>,
) -> Result<TensorField<T>> {
    if !sigma.variance().is_empty() || upsilon.variance() != [Down] {
        return Err(GeomError::Shape("density_change takes a density and a one-form".into()));
    }
    check_nonvanishing(sigma)?;
    let w = sigma.weight();
    let (s, g, u) = (sigma.clone(), nabla.gamma.clone(), upsilon.clone());
    let max = (s.max_order().saturating_sub(1)).min(g.max_order()).min(u.max_order());
    Ok(TensorField::derived(nabla.chart().clone(), vec![Down], w, max, move |p, o| {
        let sj = s.evaluate_unchecked(p, o + 1)?;
        let ns = covariant_derivative(&sj, &g.evaluate_unchecked(p, o)?, w);
        let uj = u.evaluate_unchecked(p, o)?;
        let sv = sj.at(&[]).truncate(o);
        let wt = T::lit(w);
        Ok(TensorJet::from_fn(ns.dim(), vec![Down], |i| ns.at(i) + (uj.at(i) * &sv).scale(wt)))
    }))
}

/// The unique connection in the class of `nabla` that preserves the
/// nowhere-vanishing weight-`w` density `σ` (`w ≠ 0`):
/// `Υ = −∇σ / (w σ)`.
pub fn scale_from_density<T: Scalar>(sigma: &TensorField<T>, nabla: &Connection<T>) -> Result<(Connection<T>, TensorField<T>)> {
    let w = sigma.weight();
    if w == 0.0 {
        return Err(GeomError::Precondition("scale extraction needs a nonzero weight".into()));
    }
    check_nonvanishing(sigma)?;
    let (s, g) = (sigma.clone(), nabla.gamma.clone());
    let max = (s.max_order().saturating_sub(1)).min(g.max_order());
    let ups = TensorField::derived(nabla.chart().clone(), vec![Down], 0.0, max, move |p, o| {
        let sj = s.evaluate_unchecked(p, o + 1)?;
        let ns = covariant_derivative(&sj, &g.evaluate_unchecked(p, o)?, w);
        let inv = sj.at(&[]).truncate(o).recip().scale(T::lit(-1.0 / w));
        Ok(ns.scale_jet(&inv))
    });
    let mut conn = projective_change(nabla, &ups)?;
    conn.special = nabla.special;
    Ok((conn, ups))
}

/// `L_ξ ∇` as a `(1,2)` tensor field.
pub fn lie_derivative_connection<T: Scalar>(xi: &TensorField<T>, nabla: &Connection<T>) -> Result<TensorField<T>> {
    if xi.variance() != [Up] {
        return Err(GeomError::Shape("ξ must be a vector field".into()));
    }
    let max = xi.max_order().saturating_sub(2).min(nabla.gamma.max_order().saturating_sub(1));
    let (x, g) = (xi.clone(), nabla.gamma.clone());
    Ok(TensorField::derived(nabla.chart().clone(), vec![Up, Down, Down], 0.0, max, move |p, o| {
        Ok(lie_derivative_gamma(&x.evaluate_unchecked(p, o + 2)?, &g.evaluate_unchecked(p, o + 1)?))
    }))
}

/// Cyclic sum `R_{ab}^c_d + R_{bd}^c_a + R_{da}^c_b` (first Bianchi).
pub fn first_bianchi<T: Scalar>(r: &TensorJet<T>) -> T {
    let d = r.dim();
    let mut m = T::zero();
    for idx in MultiIndex::new(d, 4) {
        let (a, b, c, e) = (idx[0], idx[1], idx[2], idx[3]);
        let s = r.value_at(&[a, b, c, e]) + r.value_at(&[b, e, c, a]) + r.value_at(&[e, a, c, b]);
        m = m.max(s.abs());
    }
    m
}

/// Raises the last index of a `(0,2)` jet: `T_a^b = T_{ac} g^{cb}`.
pub fn inverse_metric<T: Scalar>(g: &TensorJet<T>) -> Option<TensorJet<T>> {
    let d = g.dim();
    let inv = jet_inverse(g.comps(), d)?;
    TensorJet::new(d, vec![Up, Up], inv).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Round sphere in a gnomonic chart: `g = δ/τ − x x/τ²`, `τ = 1 + |x|²`.
    pub(crate) fn sphere_metric(d: usize, r: f64) -> TensorField<f64> {
        let chart = Chart::cube("gnomonic", d, r).unwrap();
        TensorField::from_rule(chart, vec![Down, Down], 0.0, move |x| {
            let (dim, o) = (x[0].dim(), x[0].order());
            let mut tau = Jet::constant(dim, o, 1.0);
            for xi in x {
                tau = tau + xi * xi;
            }
            let it = tau.recip();
            let it2 = &it * &it;
            let mut out = Vec::with_capacity(d * d);
            for a in 0..d {
                for b in 0..d {
                    let mut v = -(&x[a] * &x[b]) * &it2;
                    if a == b {
                        v = v + &it;
                    }
                    out.push(v);
                }
            }
            out
        })
    }

    #[test]
    fn flat_metric_has_zero_christoffels() {
        let chart = Chart::cube("r7", 7, 1.0).unwrap();
        let mut id = vec![0.0; 49];
        for i in 0..7 {
            id[i * 8] = 1.0;
        }
        let g = TensorField::constant(chart, vec![Down, Down], 0.0, id);
        let lc = levi_civita(&g).unwrap();
        let gam = lc.gamma_at(&[0.1; 7], 2).unwrap();
        assert_eq!(gam.max_abs(), 0.0);
    }

    #[test]
    fn sphere_is_metric_einstein_and_projectively_flat() {
        let g = sphere_metric(4, 0.8);
        let lc = levi_civita(&g).unwrap();
        let p = [0.1, -0.3, 0.25, 0.4];
        let gj = g.evaluate(&p, 1).unwrap();
        let ng = lc.nabla(&p, &gj, 0.0).unwrap();
        assert!(ng.max_abs_value() < 1e-13);
        let cj = lc.curvature_at(&p, 0).unwrap();
        let n = 3.0;
        for (a, b) in [(0, 0), (1, 2), (3, 3)] {
            assert!((cj.ric.value_at(&[a, b]) - n * gj.value_at(&[a, b])).abs() < 1e-12);
            assert!((cj.p.value_at(&[a, b]) - gj.value_at(&[a, b])).abs() < 1e-12);
        }
        assert!(cj.w.max_abs_value() < 1e-12);
        assert!(cj.c.unwrap().max_abs_value() < 1e-12);
        assert!(first_bianchi(&cj.r) < 1e-13);
    }

    #[test]
    fn degenerate_metric_is_rejected() {
        let chart = Chart::cube("r2", 2, 1.0).unwrap();
        let g = TensorField::constant(chart, vec![Down, Down], 0.0, vec![1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(levi_civita(&g), Err(GeomError::Degenerate { .. })));
    }

    #[test]
    fn projective_change_with_zero_is_identity() {
        let g = sphere_metric(3, 0.8);
        let lc = levi_civita(&g).unwrap();
        let zero = TensorField::constant(g.chart().clone(), vec![Down], 0.0, vec![0.0; 3]);
        let pc = projective_change(&lc, &zero).unwrap();
        let p = [0.2, 0.1, -0.4];
        assert_eq!(pc.gamma_at(&p, 1).unwrap(), lc.gamma_at(&p, 1).unwrap());
        assert!(pc.is_special());
    }

    #[test]
    fn translation_is_affine_symmetry_of_flat() {
        let chart = Chart::cube("r3", 3, 1.0).unwrap();
        let flat = Connection::<f64>::flat(chart.clone());
        let xi = TensorField::constant(chart, vec![Up], 0.0, vec![1.0, 0.0, 0.0]);
        let l = lie_derivative_connection(&xi, &flat).unwrap();
        assert_eq!(l.evaluate(&[0.0, 0.1, 0.2], 0).unwrap().max_abs(), 0.0);
    }
}
