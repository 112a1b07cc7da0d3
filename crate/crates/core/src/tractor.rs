//! Projective tractor calculus in a fixed scale.
//!
//! Tractors are written in the splitting of a scale `∇` with components
//! `(ν^b, ρ)`; the `ρ` slot is last. Densities use the coordinate
//! trivialization, so the tractor connection acts as `∇_a t = ∂_a t + Ω_a t`
//! with
//!
//! ```text
//!        ⎛ Γ^b_{ac} − τ_a δ^b_c    δ^b_a ⎞
//! Ω_a =  ⎝ −P_{ac}                 −τ_a  ⎠ ,     τ_a = Γ^e_{ea} / (n+2).
//! ```
//!
//! Cotractors use `−Ω_aᵀ`, endomorphisms `[Ω_a, ·]`. `tr Ω_a = 0`, so the
//! frame determinant is a parallel tractor volume form in every scale.

use std::sync::Arc;

use crate::affine::{covariant_derivative, Connection, CurvatureJets};
use crate::error::{GeomError, Result};
use crate::field::TensorField;
use crate::jet::Jet;
use crate::linalg;
use crate::scalar::Scalar;
use crate::tensor::{TensorJet, Variance};

use Variance::{Down, Up};

/// A connection in the projective class with symmetric Ricci tensor.
#[derive(Clone, Debug)]
pub struct Scale<T> {
    conn: Connection<T>,
    label: String,
}

impl<T: Scalar> Scale<T> {
    /// Wraps a connection after checking `Ric_{[ab]} = 0` at sample points.
    pub fn new(conn: Connection<T>, label: impl Into<String>) -> Result<Self> {
        let d = conn.dim();
        for p in conn.chart().sample_points(6, 3) {
            let pt: Vec<T> = p.iter().map(|&x| T::lit(x)).collect();
            let cj = conn.curvature_at(&pt, 0)?;
            let scale = cj.ric.max_abs_value().as_f64().max(1.0);
            for a in 0..d {
                for b in a + 1..d {
                    let skew = (cj.ric.value_at(&[a, b]) - cj.ric.value_at(&[b, a])).as_f64();
                    if skew.abs() > 1e-9 * scale {
                        return Err(GeomError::Precondition(format!("Ricci tensor not symmetric ({skew:e}) at {p:?}")));
                    }
                }
            }
        }
        Ok(Self { conn, label: label.into() })
    }

    pub fn connection(&self) -> &Connection<T> {
        &self.conn
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.conn.dim()
    }

    /// Tractor rank `n + 2 = dim + 1`.
    pub fn rank(&self) -> usize {
        self.dim() + 1
    }

    /// `Γ` and curvature at `p`, all to `order` (Cotton to `order − 1`).
    pub fn jets(&self, p: &[T], order: usize) -> Result<ScaleJets<T>> {
        let gamma = self.conn.gamma_at(p, order + 1)?;
        let curv = crate::affine::curvature_jets(&gamma)?;
        Ok(ScaleJets { gamma: gamma.truncate(order), curv })
    }

    fn same(&self, label: &str) -> Result<()> {
        if self.label != label {
            return Err(GeomError::ScaleMismatch);
        }
        Ok(())
    }
}

/// Scale data at one point.
#[derive(Clone, Debug)]
pub struct ScaleJets<T> {
    pub gamma: TensorJet<T>,
    pub curv: CurvatureJets<T>,
}

impl<T: Scalar> ScaleJets<T> {
    pub fn order(&self) -> usize {
        self.gamma.order()
    }

    /// `Ω_a` for every direction, each a row-major `(n+2)²` jet matrix.
    pub fn omega(&self) -> Vec<Vec<Jet<T>>> {
        omega(&self.gamma, &self.curv.p)
    }
}

/// Tractor connection matrices from `Γ` and `P` (equal orders).
pub fn omega<T: Scalar>(gamma: &TensorJet<T>, p: &TensorJet<T>) -> Vec<Vec<Jet<T>>> {
    let d = gamma.dim();
    let k = gamma.order().min(p.order());
    let nn = d + 1;
    let inv = T::lit(1.0 / (d as f64 + 1.0));
    (0..d)
        .map(|a| {
            let mut tau = Jet::zero(d, k);
            for e in 0..d {
                tau.add_scaled(&gamma.at(&[e, e, a]).truncate(k), inv);
            }
            let mut m = vec![Jet::zero(d, k); nn * nn];
            for b in 0..d {
                for c in 0..d {
                    let mut v = gamma.at(&[b, a, c]).truncate(k);
                    if b == c {
                        v = v - &tau;
                    }
                    m[b * nn + c] = v;
                    m[d * nn + c] = -p.at(&[a, c]).truncate(k);
                }
                if b == a {
                    m[b * nn + d] = Jet::constant(d, k, T::one());
                }
            }
            m[d * nn + d] = -tau;
            m
        })
        .collect()
}

pub fn jmat_mul<T: Scalar>(a: &[Jet<T>], b: &[Jet<T>], n: usize) -> Vec<Jet<T>> {
    let d = a[0].dim();
    let k = a[0].order().min(b[0].order());
    let mut out = vec![Jet::zero(d, k); n * n];
    for i in 0..n {
        for l in 0..n {
            let ail = &a[i * n + l];
            if ail.max_abs() == T::zero() {
                continue;
            }
            for j in 0..n {
                let v = ail * &b[l * n + j];
                out[i * n + j].add_scaled(&v, T::one());
            }
        }
    }
    out
}

fn jmat_transpose<T: Scalar>(a: &[Jet<T>], n: usize) -> Vec<Jet<T>> {
    (0..n * n).map(|i| a[(i % n) * n + i / n].clone()).collect()
}

fn jmat_vec<T: Scalar>(a: &[Jet<T>], v: &[Jet<T>], n: usize) -> Vec<Jet<T>> {
    let d = v[0].dim();
    let k = a[0].order().min(v[0].order());
    (0..n)
        .map(|i| {
            let mut acc = Jet::zero(d, k);
            for j in 0..n {
                acc = acc + &a[i * n + j] * &v[j];
            }
            acc
        })
        .collect()
}

/// Kind of tractor object, fixing how the connection acts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TractorKind {
    /// Section of `T`, components `(ν^b, ρ)`.
    Standard,
    /// Section of `T*`, components `(μ_b, σ)`.
    Cotractor,
    /// Section of `End(T)`, row-major `(n+2)²` matrix.
    Endomorphism,
    /// Section of `T* ⊗ T*` (e.g. a tractor metric), row-major.
    Bilinear,
}

pub type TractorEval<T> = dyn Fn(&[T], usize) -> Result<Vec<Jet<T>>> + Send + Sync;

/// A tractor object in an explicit scale.
#[derive(Clone)]
pub struct TractorField<T> {
    kind: TractorKind,
    scale: String,
    rank: usize,
    eval: Arc<TractorEval<T>>,
}

/// Adjoint tractors and tractor metrics share the representation.
pub type TractorEndomorphism<T> = TractorField<T>;
pub type TractorMetric<T> = TractorField<T>;

impl<T> std::fmt::Debug for TractorField<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TractorField").field("kind", &self.kind).field("scale", &self.scale).field("rank", &self.rank).finish()
    }
}

impl<T: Scalar> TractorField<T> {
    pub fn new(
        scale: &Scale<T>,
        kind: TractorKind,
        eval: impl Fn(&[T], usize) -> Result<Vec<Jet<T>>> + Send + Sync + 'static,
    ) -> Self {
        Self { kind, scale: scale.label.clone(), rank: scale.rank(), eval: Arc::new(eval) }
    }

    /// Constant components in the scale's frame.
    pub fn constant(scale: &Scale<T>, kind: TractorKind, values: Vec<T>) -> Self {
        let d = scale.dim();
        Self::new(scale, kind, move |_, o| Ok(values.iter().map(|&v| Jet::constant(d, o, v)).collect()))
    }

    pub fn kind(&self) -> TractorKind {
        self.kind
    }

    pub fn scale_label(&self) -> &str {
        &self.scale
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn components(&self, p: &[T], order: usize) -> Result<Vec<Jet<T>>> {
        (self.eval)(p, order)
    }

    pub fn values(&self, p: &[T]) -> Result<Vec<T>> {
        Ok(self.components(p, 0)?.iter().map(Jet::value).collect())
    }

    /// Block decomposition `(φ^a_b, ξ^a, ν_b, last)` of an endomorphism.
    pub fn blocks(&self, p: &[T]) -> Result<EndoBlocks<T>> {
        if self.kind != TractorKind::Endomorphism {
            return Err(GeomError::Shape("blocks are defined for endomorphisms".into()));
        }
        Ok(EndoBlocks::from_matrix(&self.values(p)?, self.rank))
    }
}

/// Blocks of an adjoint tractor in a splitting.
#[derive(Clone, Debug, PartialEq)]
pub struct EndoBlocks<T> {
    pub phi: Vec<T>,
    pub xi: Vec<T>,
    pub nu: Vec<T>,
    pub last: T,
}

impl<T: Scalar> EndoBlocks<T> {
    pub fn from_matrix(m: &[T], nn: usize) -> Self {
        let d = nn - 1;
        let mut phi = Vec::with_capacity(d * d);
        for a in 0..d {
            phi.extend_from_slice(&m[a * nn..a * nn + d]);
        }
        Self {
            phi,
            xi: (0..d).map(|a| m[a * nn + d]).collect(),
            nu: m[d * nn..d * nn + d].to_vec(),
            last: m[d * nn + d],
        }
    }

    pub fn to_matrix(&self) -> Vec<T> {
        let d = self.xi.len();
        let nn = d + 1;
        let mut m = vec![T::zero(); nn * nn];
        for a in 0..d {
            m[a * nn..a * nn + d].copy_from_slice(&self.phi[a * d..a * d + d]);
            m[a * nn + d] = self.xi[a];
        }
        m[d * nn..d * nn + d].copy_from_slice(&self.nu);
        m[d * nn + d] = self.last;
        m
    }
}

/// `Π(A) = ξ`, the top-right block.
pub fn projection<T: Scalar>(m: &[T], nn: usize) -> Vec<T> {
    (0..nn - 1).map(|a| m[a * nn + nn - 1]).collect()
}

/// `∇^T_a t` for every direction `a`, at order `order`.
pub fn tractor_derivative<T: Scalar>(
    t: &TractorField<T>,
    scale: &Scale<T>,
    p: &[T],
    order: usize,
) -> Result<Vec<Vec<Jet<T>>>> {
    scale.same(&t.scale)?;
    let comps = t.components(p, order + 1)?;
    let sj = scale.jets(p, order)?;
    Ok(derivative_from_jets(t.kind, &comps, &sj.omega(), t.rank))
}

/// Applies the tractor connection to raw components (order `k + 1`) with
/// `Ω` at order `k`.
pub fn derivative_from_jets<T: Scalar>(kind: TractorKind, comps: &[Jet<T>], om: &[Vec<Jet<T>>], nn: usize) -> Vec<Vec<Jet<T>>> {
    let k = om[0][0].order();
    let low: Vec<Jet<T>> = comps.iter().map(|c| c.truncate(k)).collect();
    om.iter()
        .enumerate()
        .map(|(a, oa)| {
            let partial: Vec<Jet<T>> = comps.iter().map(|c| c.diff(a).truncate(k)).collect();
            let corr: Vec<Jet<T>> = match kind {
                TractorKind::Standard => jmat_vec(oa, &low, nn),
                TractorKind::Cotractor => jmat_vec(&jmat_transpose(oa, nn), &low, nn).into_iter().map(|x| -x).collect(),
                TractorKind::Endomorphism => {
                    let l = jmat_mul(oa, &low, nn);
                    let r = jmat_mul(&low, oa, nn);
                    l.iter().zip(&r).map(|(x, y)| x - y).collect()
                }
                TractorKind::Bilinear => {
                    let ot = jmat_transpose(oa, nn);
                    let l = jmat_mul(&ot, &low, nn);
                    let r = jmat_mul(&low, oa, nn);
                    l.iter().zip(&r).map(|(x, y)| -(x + y)).collect()
                }
            };
            partial.iter().zip(&corr).map(|(x, y)| x + y).collect()
        })
        .collect()
}

/// Max absolute base-point value of `∇^T t` over all directions.
pub fn parallel_residual<T: Scalar>(t: &TractorField<T>, scale: &Scale<T>, p: &[T]) -> Result<f64> {
    let dt = tractor_derivative(t, scale, p, 0)?;
    Ok(dt.iter().flatten().fold(0.0f64, |m, j| m.max(j.value().as_f64().abs())))
}

/// Tractor curvature `F_{ab} = ∂_aΩ_b − ∂_bΩ_a + [Ω_a, Ω_b]` at `p`, as
/// `d × d` matrices indexed `[a * d + b]`.
pub fn tractor_curvature<T: Scalar>(scale: &Scale<T>, p: &[T]) -> Result<Vec<Vec<T>>> {
    let d = scale.dim();
    let nn = d + 1;
    let om1 = scale.jets(p, 1)?.omega();
    let om0: Vec<Vec<Jet<T>>> = om1.iter().map(|m| m.iter().map(|x| x.truncate(0)).collect()).collect();
    let mut out = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            let ab = jmat_mul(&om0[a], &om0[b], nn);
            let ba = jmat_mul(&om0[b], &om0[a], nn);
            out.push(
                (0..nn * nn)
                    .map(|i| om1[b][i].d1(a) - om1[a][i].d1(b) + ab[i].value() - ba[i].value())
                    .collect(),
            );
        }
    }
    Ok(out)
}

/// The expected block form `[[W_{ab}^c_d, 0], [−C_{abd}, 0]]`.
pub fn tractor_curvature_from_weyl_cotton<T: Scalar>(scale: &Scale<T>, p: &[T]) -> Result<Vec<Vec<T>>> {
    let d = scale.dim();
    let nn = d + 1;
    let cj = scale.connection().curvature_at(p, 1)?;
    let c = cj.c.ok_or(GeomError::Capability { requested: 2, max: 1 })?;
    let mut out = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            let mut m = vec![T::zero(); nn * nn];
            for cc in 0..d {
                for e in 0..d {
                    m[cc * nn + e] = cj.w.value_at(&[a, b, cc, e]);
                }
            }
            for e in 0..d {
                m[d * nn + e] = -c.value_at(&[a, b, e]);
            }
            out.push(m);
        }
    }
    Ok(out)
}

/// `∇_b ∇_c ξ^a` as a tensor indexed `[b][c][a]` at order `k`, from `ξ`
/// at order `k + 2` and `Γ` at order `k + 1`.
fn second_derivative<T: Scalar>(xi: &TensorJet<T>, gamma: &TensorJet<T>) -> TensorJet<T> {
    let nx = covariant_derivative(xi, gamma, 0.0);
    covariant_derivative(&nx, gamma, 0.0)
}

/// `L^A(ξ)` as a jet matrix at order `k` from jets at orders `k+2` (`ξ`),
/// `k+1` (`Γ`), and `k` (`P`).
pub fn splitting_from_jets<T: Scalar>(xi: &TensorJet<T>, gamma: &TensorJet<T>, p: &TensorJet<T>) -> Vec<Jet<T>> {
    let d = xi.dim();
    let nn = d + 1;
    let k = xi.order() - 2;
    let inv = T::lit(1.0 / (d as f64 + 1.0));
    let nx = covariant_derivative(xi, gamma, 0.0); // [b][a] = ∇_b ξ^a, order k+1
    let mut div = Jet::zero(d, k + 1);
    for c in 0..d {
        div.add_scaled(nx.at(&[c, c]), T::one());
    }
    let divk = div.truncate(k);
    let mut m = vec![Jet::zero(d, k); nn * nn];
    for a in 0..d {
        for b in 0..d {
            let mut v = nx.at(&[b, a]).truncate(k);
            if a == b {
                v = v - divk.scale(inv);
            }
            m[a * nn + b] = v;
        }
        m[a * nn + d] = xi.at(&[a]).truncate(k);
    }
    for b in 0..d {
        let mut v = -div.diff(b).scale(inv);
        for c in 0..d {
            v = v - p.at(&[b, c]).truncate(k) * xi.at(&[c]).truncate(k);
        }
        m[d * nn + b] = v;
    }
    m[d * nn + d] = -divk.scale(inv);
    m
}

/// The splitting operator `L^A(ξ)` as an adjoint tractor field.
pub fn splitting_operator<T: Scalar>(xi: &TensorField<T>, scale: &Scale<T>) -> Result<TractorEndomorphism<T>> {
    if xi.variance() != [Up] {
        return Err(GeomError::Shape("L^A takes a vector field".into()));
    }
    let (x, s) = (xi.clone(), scale.clone());
    Ok(TractorField::new(scale, TractorKind::Endomorphism, move |p, o| {
        let xj = x.evaluate(p, o + 2)?;
        let sj = s.jets(p, o)?;
        let gamma = s.conn.gamma_at(p, o + 1)?;
        Ok(splitting_from_jets(&xj, &gamma, &sj.curv.p))
    }))
}

/// `D^A(ξ) = (∇_{(b}∇_{c)}ξ^a + P_{(bc)}ξ^a)_∘`, indexed `[a][b][c]`.
pub fn bgg_at<T: Scalar>(xi: &TensorJet<T>, gamma: &TensorJet<T>, p: &TensorJet<T>) -> Result<TensorJet<T>> {
    let d = xi.dim();
    let k = xi.order() - 2;
    let nn = second_derivative(xi, gamma);
    let raw = TensorJet::from_fn(d, vec![Up, Down, Down], |i| {
        let (a, b, c) = (i[0], i[1], i[2]);
        let half = T::lit(0.5);
        (nn.at(&[b, c, a]) + nn.at(&[c, b, a])).scale(half)
            + ((p.at(&[b, c]) + p.at(&[c, b])).truncate(k) * xi.at(&[a]).truncate(k)).scale(half)
    });
    raw.trace_free_part()
}

/// The BGG operator as a `(1,2)` tensor field.
pub fn bgg_operator<T: Scalar>(xi: &TensorField<T>, scale: &Scale<T>) -> Result<TensorField<T>> {
    if xi.variance() != [Up] {
        return Err(GeomError::Shape("D^A takes a vector field".into()));
    }
    let (x, s) = (xi.clone(), scale.clone());
    let max = xi.max_order().saturating_sub(2).min(scale.conn.gamma().max_order().saturating_sub(1));
    Ok(TensorField::derived(xi.chart().clone(), vec![Up, Down, Down], 0.0, max, move |p, o| {
        let xj = x.evaluate_unchecked(p, o + 2)?;
        let gamma = s.conn.gamma().evaluate_unchecked(p, o + 1)?;
        let pj = crate::affine::curvature_jets(&gamma)?.p;
        bgg_at(&xj, &gamma, &pj)
    }))
}

/// Residuals certifying that `ξ` is a normal solution.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NormalSolutionReport {
    pub weyl_xi: f64,
    pub cotton_xi: f64,
    pub bgg: f64,
    /// `‖∇^T L^A(ξ)‖`, the direct cross-check.
    pub parallel: f64,
    pub n_points: usize,
}

impl NormalSolutionReport {
    pub fn is_normal(&self, tol: f64) -> bool {
        self.weyl_xi <= tol && self.cotton_xi <= tol && self.bgg <= tol
    }

    pub fn is_parallel(&self, tol: f64) -> bool {
        self.parallel <= tol
    }
}

/// Evaluates `W·ξ`, `C·ξ`, `D^A(ξ)` and `∇^T L^A(ξ)` at the given points.
pub fn check_normal_solution(xi: &TensorField<f64>, scale: &Scale<f64>, points: &[Vec<f64>]) -> Result<NormalSolutionReport> {
    let d = scale.dim();
    let nn = d + 1;
    let mut rep = NormalSolutionReport { n_points: points.len(), ..Default::default() };
    for p in points {
        let xj = xi.evaluate(p, 3)?;
        let gamma = scale.conn.gamma_at(p, 2)?;
        let cj = crate::affine::curvature_jets(&gamma)?;
        let c = cj.c.as_ref().expect("Γ supplied to order 2");
        for a in 0..d {
            for b in 0..d {
                for e in 0..d {
                    let mut cx = 0.0;
                    for f in 0..d {
                        cx += c.value_at(&[a, b, f]) * xj.value_at(&[f]);
                    }
                    rep.cotton_xi = rep.cotton_xi.max(cx.abs());
                    let mut wx = 0.0;
                    for f in 0..d {
                        wx += cj.w.value_at(&[a, b, e, f]) * xj.value_at(&[f]);
                    }
                    rep.weyl_xi = rep.weyl_xi.max(wx.abs());
                }
            }
        }
        let g1 = gamma.truncate(1);
        let p0 = cj.p.truncate(0);
        rep.bgg = rep.bgg.max(bgg_at(&xj.truncate(2), &g1, &p0)?.max_abs_value());
        let l1 = splitting_from_jets(&xj, &gamma, &cj.p);
        let om = omega(&gamma.truncate(0), &p0);
        let dl = derivative_from_jets(TractorKind::Endomorphism, &l1, &om, nn);
        rep.parallel = rep.parallel.max(dl.iter().flatten().fold(0.0f64, |m, j| m.max(j.value().abs())));
    }
    Ok(rep)
}

/// `S(Υ)`: tractor components in scale `∇ + Υ` are `S t` with
/// `ν̂ = ν`, `ρ̂ = ρ − Υ_b ν^b`.
pub fn scale_change_matrix<T: Scalar>(ups: &[Jet<T>]) -> Vec<Jet<T>> {
    let d = ups.len();
    let (dim, k) = (ups[0].dim(), ups[0].order());
    let nn = d + 1;
    let mut m = vec![Jet::zero(dim, k); nn * nn];
    for i in 0..nn {
        m[i * nn + i] = Jet::constant(dim, k, T::one());
    }
    for b in 0..d {
        m[d * nn + b] = -ups[b].clone();
    }
    m
}

/// Re-expresses a tractor object in the scale `target`, which must differ
/// from the object's scale by the one-form `upsilon`.
pub fn change_scale<T: Scalar>(t: &TractorField<T>, target: &Scale<T>, upsilon: &TensorField<T>) -> TractorField<T> {
    let (src, ups, kind, nn) = (t.clone(), upsilon.clone(), t.kind, t.rank);
    TractorField::new(target, kind, move |p, o| {
        let c = src.components(p, o)?;
        let u = ups.evaluate_unchecked(p, o)?;
        let s = scale_change_matrix(u.comps());
        let d = nn - 1;
        let mut sinv = s.clone();
        for b in 0..d {
            sinv[d * nn + b] = -s[d * nn + b].clone();
        }
        Ok(match kind {
            TractorKind::Standard => jmat_vec(&s, &c, nn),
            TractorKind::Cotractor => jmat_vec(&jmat_transpose(&sinv, nn), &c, nn),
            TractorKind::Endomorphism => jmat_mul(&jmat_mul(&s, &c, nn), &sinv, nn),
            TractorKind::Bilinear => {
                let sit = jmat_transpose(&sinv, nn);
                jmat_mul(&jmat_mul(&sit, &c, nn), &sinv, nn)
            }
        })
    })
}

/// A piecewise-smooth curve `s ∈ [0, 1] ↦ (γ(s), γ'(s))`.
pub type Curve<'a> = dyn Fn(f64) -> (Vec<f64>, Vec<f64>) + 'a;

/// Straight segment from `a` to `b`.
pub fn segment(a: Vec<f64>, b: Vec<f64>) -> impl Fn(f64) -> (Vec<f64>, Vec<f64>) {
    move |s| {
        let v: Vec<f64> = b.iter().zip(&a).map(|(y, x)| y - x).collect();
        (a.iter().zip(&v).map(|(x, dv)| x + s * dv).collect(), v)
    }
}

fn omega_dot(scale: &Scale<f64>, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    scale.connection().chart().check_point(x)?;
    let gamma = scale.connection().gamma_at(x, 1)?;
    let d = scale.dim();
    let nn = d + 1;
    let ric = ricci_values(&gamma);
    let nf = (d - 1) as f64;
    let pm = |a: usize, c: usize| (nf * ric[a * d + c] + ric[a * d + c] + ric[c * d + a]) / (nf * (nf + 2.0));
    let inv = 1.0 / nn as f64;
    let g = |c: usize, a: usize, b: usize| gamma.at(&[c, a, b]).value();
    let mut m = vec![0.0; nn * nn];
    for (a, &va) in v.iter().enumerate() {
        if va == 0.0 {
            continue;
        }
        let tau: f64 = (0..d).map(|e| g(e, e, a)).sum::<f64>() * inv;
        for b in 0..d {
            for c in 0..d {
                m[b * nn + c] += va * g(b, a, c);
            }
            m[b * nn + b] -= va * tau;
            m[d * nn + b] -= va * pm(a, b);
        }
        m[a * nn + d] += va;
        m[d * nn + d] -= va * tau;
    }
    Ok(m)
}

/// `Ric_{ab} = ∂_cΓ^c_{ab} − ∂_bΓ^c_{ca} + Γ^c_{ce}Γ^e_{ab} − Γ^c_{be}Γ^e_{ca}` from `Γ` at order ≥ 1.
fn ricci_values(gamma: &TensorJet<f64>) -> Vec<f64> {
    let d = gamma.dim();
    let g = |c: usize, a: usize, b: usize| gamma.at(&[c, a, b]).value();
    let trace: Vec<f64> = (0..d).map(|e| (0..d).map(|c| g(c, c, e)).sum()).collect();
    let mut r = vec![0.0; d * d];
    for a in 0..d {
        for b in 0..d {
            let mut s = 0.0;
            for c in 0..d {
                s += gamma.at(&[c, a, b]).d1(c) - gamma.at(&[c, c, a]).d1(b);
                s += trace[c] * g(c, a, b);
                for e in 0..d {
                    s -= g(c, b, e) * g(e, c, a);
                }
            }
            r[a * d + b] = s;
        }
    }
    r
}

/// Parallel transport matrix along a curve with `steps` classical RK4 steps
/// of `M' = −Ω(γ') M`.
pub fn transport_matrix(scale: &Scale<f64>, curve: &Curve<'_>, steps: usize) -> Result<Vec<f64>> {
    let nn = scale.rank();
    let mut m = linalg::identity(nn);
    let h = 1.0 / steps as f64;
    let rhs = |s: f64, m: &[f64]| -> Result<Vec<f64>> {
        let (x, v) = curve(s);
        let om = omega_dot(scale, &x, &v)?;
        Ok(linalg::matmul(&om, m, nn).into_iter().map(|y| -y).collect())
    };
    for step in 0..steps {
        let s = step as f64 * h;
        let k1 = rhs(s, &m)?;
        let m2: Vec<f64> = m.iter().zip(&k1).map(|(a, b)| a + 0.5 * h * b).collect();
        let k2 = rhs(s + 0.5 * h, &m2)?;
        let m3: Vec<f64> = m.iter().zip(&k2).map(|(a, b)| a + 0.5 * h * b).collect();
        let k3 = rhs(s + 0.5 * h, &m3)?;
        let m4: Vec<f64> = m.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
        let k4 = rhs(s + h, &m4)?;
        for i in 0..m.len() {
            m[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(m)
}

/// Transport matrix with the step count doubled until the Richardson error
/// estimate `|M_{2n} − M_n| / 15` drops below `1e-10` (from 8 steps, capped
/// at 8192); returns the extrapolated matrix.
pub fn transport_matrix_converged(scale: &Scale<f64>, curve: &Curve<'_>) -> Result<(Vec<f64>, usize)> {
    let mut steps = 8;
    let mut prev = transport_matrix(scale, curve, steps)?;
    loop {
        steps *= 2;
        let next = transport_matrix(scale, curve, steps)?;
        let diff = linalg::max_abs_diff(&next, &prev);
        if diff < 1.5e-9 || steps >= 8192 {
            let m = next.iter().zip(&prev).map(|(a, b)| a + (a - b) / 15.0).collect();
            return Ok((m, steps));
        }
        prev = next;
    }
}

/// Parallel transport of a standard tractor value along a curve.
pub fn parallel_transport(t0: &[f64], curve: &Curve<'_>, scale: &Scale<f64>) -> Result<Vec<f64>> {
    let (m, _) = transport_matrix_converged(scale, curve)?;
    Ok(linalg::matvec(&m, t0))
}

/// Hyperkähler data `(h, I, J, K)` at one point, row-major matrices.
#[derive(Clone, Debug)]
pub struct HkValues {
    pub h: Vec<f64>,
    pub i: Vec<f64>,
    pub j: Vec<f64>,
    pub k: Vec<f64>,
}

/// One sampled loop.
#[derive(Clone, Debug)]
pub struct HolonomySample {
    pub base: Vec<f64>,
    pub plane: (usize, usize),
    /// Richardson-extrapolated `log(hol) / area`.
    pub log_per_area: Vec<f64>,
    /// Max of `‖Aᵀh + hA‖`, `‖[A,I]‖`, `‖[A,J]‖`, `‖[A,K]‖` divided by area.
    pub membership: f64,
}

#[derive(Clone, Debug)]
pub struct HolonomyReport {
    pub samples: Vec<HolonomySample>,
    pub max_membership: f64,
    pub max_log_norm: f64,
    /// Numerical dimension of the span of the sampled logarithms.
    pub algebra_dim: usize,
    pub resampled: usize,
    pub precondition_residual: f64,
}

fn rectangle(base: &[f64], i: usize, j: usize, eps: f64) -> impl Fn(f64) -> (Vec<f64>, Vec<f64>) {
    let b = base.to_vec();
    move |s| {
        let seg = ((s * 4.0).floor() as usize).min(3);
        let u = s * 4.0 - seg as f64;
        let mut x = b.clone();
        let mut v = vec![0.0; b.len()];
        match seg {
            0 => {
                x[i] += eps * u;
                v[i] = 4.0 * eps;
            }
            1 => {
                x[i] += eps;
                x[j] += eps * u;
                v[j] = 4.0 * eps;
            }
            2 => {
                x[i] += eps * (1.0 - u);
                x[j] += eps;
                v[i] = -4.0 * eps;
            }
            _ => {
                x[j] += eps * (1.0 - u);
                v[j] = -4.0 * eps;
            }
        }
        (x, v)
    }
}

/// Log-holonomy of the rectangle loop with side `eps` in plane `(i, j)`.
///
/// Each side is integrated separately so RK4 never straddles a corner.
pub fn loop_log(scale: &Scale<f64>, base: &[f64], plane: (usize, usize), eps: f64, steps: usize) -> Result<Vec<f64>> {
    let nn = scale.rank();
    let rect = rectangle(base, plane.0, plane.1, eps);
    let mut m = linalg::identity(nn);
    for side in 0..4 {
        let lo = side as f64 / 4.0;
        let piece = |s: f64| {
            let (x, v) = rect(lo + s / 4.0 * 0.999_999_999_999);
            (x, v.into_iter().map(|y| y / 4.0).collect::<Vec<f64>>())
        };
        let ms = transport_matrix(scale, &piece, steps)?;
        m = linalg::matmul(&ms, &m, nn);
    }
    linalg::logm(&m, nn, 1e-3)
}

fn membership(a: &[f64], hk: &HkValues, nn: usize) -> f64 {
    let at = linalg::transpose(a, nn);
    let mut r = 0.0f64;
    let h1 = linalg::matmul(&at, &hk.h, nn);
    let h2 = linalg::matmul(&hk.h, a, nn);
    r = r.max(h1.iter().zip(&h2).fold(0.0, |m, (x, y)| m.max((x + y).abs())));
    for e in [&hk.i, &hk.j, &hk.k] {
        let c1 = linalg::matmul(a, e, nn);
        let c2 = linalg::matmul(e, a, nn);
        r = r.max(linalg::max_abs_diff(&c1, &c2));
    }
    r
}

/// Samples small rectangle loops and tests the log-holonomies for
/// membership in the algebra preserving `(h, I, J, K)`.
///
/// `hk_at` gives the structure at a base point in the scale's frame.
/// When `enforce` is set, the parallelism residual of the structure must be
/// below `precondition_tol` (reported either way).
#[allow(clippy::too_many_arguments)]
pub fn holonomy_sample(
    scale: &Scale<f64>,
    hk_at: &dyn Fn(&[f64]) -> Result<HkValues>,
    hk_parallel: &dyn Fn(&[f64]) -> Result<f64>,
    count: usize,
    seed: u64,
    enforce: bool,
    precondition_tol: f64,
) -> Result<HolonomyReport> {
    let d = scale.dim();
    let nn = scale.rank();
    let chart = scale.connection().chart().clone();
    let shrink: Vec<f64> = chart.lo().iter().zip(chart.hi()).map(|(a, b)| 0.5 * (a + b)).collect();
    let half: Vec<f64> = chart.lo().iter().zip(chart.hi()).map(|(a, b)| 0.4 * (b - a)).collect();
    let inner = chart.sub_box(
        shrink.iter().zip(&half).map(|(c, h)| c - h).collect(),
        shrink.iter().zip(&half).map(|(c, h)| c + h).collect(),
    )?;
    let mut pre = 0.0f64;
    for p in inner.sample_points(4, seed) {
        pre = pre.max(hk_parallel(&p)?);
    }
    if enforce && pre > precondition_tol {
        return Err(GeomError::Precondition(format!("holonomy structure not parallel ({pre:e})")));
    }
    let mut samples = Vec::with_capacity(count);
    let mut resampled = 0;
    let mut candidates = inner.sample_points(4 * count + 8, seed.wrapping_add(1)).into_iter().enumerate();
    while samples.len() < count {
        let Some((idx, base)) = candidates.next() else {
            return Err(GeomError::Rank("ran out of loop candidates".into()));
        };
        let plane = (idx % d, (idx / d + idx % d + 1) % d);
        let plane = if plane.0 == plane.1 { (plane.0, (plane.0 + 1) % d) } else { plane };
        let (e1, e2) = (1e-2, 5e-3);
        let (l1, l2) = match (loop_log(scale, &base, plane, e1, 16), loop_log(scale, &base, plane, e2, 16)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => {
                resampled += 1;
                continue;
            }
        };
        let log_per_area: Vec<f64> = l1.iter().zip(&l2).map(|(a, b)| 2.0 * b / (e2 * e2) - a / (e1 * e1)).collect();
        let hk = hk_at(&base)?;
        let mem = membership(&l2, &hk, nn) / (e2 * e2);
        samples.push(HolonomySample { base, plane, log_per_area, membership: mem });
    }
    let max_membership = samples.iter().fold(0.0f64, |m, s| m.max(s.membership));
    let max_log_norm = samples.iter().fold(0.0f64, |m, s| m.max(linalg::max_abs(&s.log_per_area)));
    let rows: Vec<f64> = samples.iter().flat_map(|s| s.log_per_area.clone()).collect();
    let sv = if samples.is_empty() { vec![] } else { linalg::singular_values(&rows, samples.len(), nn * nn) };
    let top = sv.first().copied().unwrap_or(0.0);
    let algebra_dim = sv.iter().filter(|&&s| s > 1e-6 * top.max(1e-300) && s > 1e-8).count();
    Ok(HolonomyReport { samples, max_membership, max_log_norm, algebra_dim, resampled, precondition_residual: pre })
}

/// Parallel tractor volume form checks.
#[derive(Clone, Debug, PartialEq)]
pub struct VolumeReport {
    /// `max |∇^T ε|` for `ε = det` in the frame.
    pub parallel: f64,
    /// Ratio between the frame volume and the metric volume `√|det h|·det`
    /// (constant up to numerical error when `h` is parallel).
    pub metric_ratio: f64,
    pub metric_ratio_spread: f64,
    pub n_points: usize,
}

/// `ε = det` in the tractor frame satisfies `∇ε = −tr(Ω) ε`; the metric
/// construction `√|det h|` is compared with it when `h` is supplied.
pub fn tractor_volume_check(scale: &Scale<f64>, h: Option<&TractorMetric<f64>>, points: &[Vec<f64>]) -> Result<VolumeReport> {
    let nn = scale.rank();
    let mut parallel = 0.0f64;
    let mut ratios = Vec::new();
    for p in points {
        let om = scale.jets(p, 0)?.omega();
        for oa in &om {
            let tr: f64 = (0..nn).map(|i| oa[i * nn + i].value()).sum();
            parallel = parallel.max(tr.abs());
        }
        if let Some(h) = h {
            let hv = h.values(p)?;
            ratios.push(linalg::determinant(&hv, nn).abs().sqrt());
        }
    }
    let (ratio, spread) = if ratios.is_empty() {
        (1.0, 0.0)
    } else {
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (ratios[0], hi - lo)
    };
    Ok(VolumeReport { parallel, metric_ratio: ratio, metric_ratio_spread: spread, n_points: points.len() })
}

/// Value of `ε(S⁻¹·)` relative to `ε` under the scale change `S(Υ)`.
pub fn volume_change_factor(ups: &[f64]) -> f64 {
    let jets: Vec<Jet<f64>> = ups.iter().map(|&u| Jet::constant(1, 0, u)).collect();
    let s: Vec<f64> = scale_change_matrix(&jets).iter().map(Jet::value).collect();
    1.0 / linalg::determinant(&s, ups.len() + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::{levi_civita, projective_change};
    use crate::chart::Chart;

    fn warped_metric() -> TensorField<f64> {
        let chart = Chart::cube("warped", 3, 0.5).unwrap();
        TensorField::from_rule(chart, vec![Down, Down], 0.0, |x| {
            let (d, o) = (x[0].dim(), x[0].order());
            let one = Jet::constant(d, o, 1.0);
            let f = (&x[0] * &x[1]).sin().scale(0.3) + &one;
            let g = (&x[2] + &(&x[0] * &x[0])).exp();
            let z = Jet::zero(d, o);
            vec![f.clone(), x[2].scale(0.1), z.clone(), x[2].scale(0.1), g, z.clone(), z.clone(), z, one + &(&x[1] * &x[1])]
        })
    }

    fn scale_of(g: &TensorField<f64>) -> Scale<f64> {
        Scale::new(levi_civita(g).unwrap(), "lc").unwrap()
    }

    #[test]
    fn fast_connection_matrix_matches_jets() {
        let g = warped_metric();
        let ups = TensorField::gradient(g.chart().clone(), |x| &(&x[0] * &x[1]) * &x[2] + x[0].sin());
        let scale = Scale::new(projective_change(&levi_civita(&g).unwrap(), &ups).unwrap(), "test").unwrap();
        let (x, v) = (vec![0.1, -0.2, 0.3], vec![0.4, -1.0, 0.7]);
        let fast = omega_dot(&scale, &x, &v).unwrap();
        let om = scale.jets(&x, 0).unwrap().omega();
        let slow: Vec<f64> = (0..16).map(|i| (0..3).map(|a| v[a] * om[a][i].value()).sum()).collect();
        assert!(linalg::max_abs_diff(&fast, &slow) < 1e-12, "{fast:?}\n{slow:?}");
    }

    #[test]
    fn curvature_matches_weyl_cotton_blocks() {
        let s = scale_of(&warped_metric());
        let p = [0.1, -0.2, 0.15];
        let f = tractor_curvature(&s, &p).unwrap();
        let e = tractor_curvature_from_weyl_cotton(&s, &p).unwrap();
        let mut m = 0.0f64;
        let mut big = 0.0f64;
        for (x, y) in f.iter().zip(&e) {
            m = m.max(linalg::max_abs_diff(x, y));
            big = big.max(linalg::max_abs(x));
        }
        assert!(m < 1e-10, "deviation {m}");
        assert!(big > 1e-3);
    }

    #[test]
    fn duality_of_tractor_and_cotractor() {
        let s = scale_of(&warped_metric());
        let t = TractorField::new(&s, TractorKind::Standard, |p, o| {
            let x = Jet::seed(p, o);
            Ok(vec![x[0].sin(), &x[1] * &x[2], x[2].exp(), x[0].clone() + 2.0])
        });
        let c = TractorField::new(&s, TractorKind::Cotractor, |p, o| {
            let x = Jet::seed(p, o);
            Ok(vec![x[1].cos(), x[0].scale(3.0), &x[0] * &x[1], x[2].clone() - 1.0])
        });
        let p = [0.2, 0.1, -0.1];
        let (t1, c1) = (t.components(&p, 1).unwrap(), c.components(&p, 1).unwrap());
        let dt = tractor_derivative(&t, &s, &p, 0).unwrap();
        let dc = tractor_derivative(&c, &s, &p, 0).unwrap();
        for a in 0..3 {
            let lhs: f64 = (0..4).map(|i| (&t1[i] * &c1[i]).d1(a)).sum();
            let rhs: f64 = (0..4).map(|i| dt[a][i].value() * c1[i].value() + t1[i].value() * dc[a][i].value()).sum();
            assert!((lhs - rhs).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_is_scale_covariant() {
        let g = warped_metric();
        let s = scale_of(&g);
        let ups = TensorField::from_rule(g.chart().clone(), vec![Down], 0.0, |x| {
            // Υ = d(x0 x1 + sin x2)
            vec![x[1].clone(), x[0].clone(), x[2].cos()]
        });
        let s2 = Scale::new(projective_change(s.connection(), &ups).unwrap(), "lc+u").unwrap();
        let t = TractorField::new(&s, TractorKind::Endomorphism, |p, o| {
            let x = Jet::seed(p, o);
            Ok((0..16).map(|i| (&x[i % 3] * (i as f64 * 0.1)).sin() + (i as f64)).collect())
        });
        let t2 = change_scale(&t, &s2, &ups);
        let p = [0.05, 0.2, -0.3];
        let d1 = tractor_derivative(&t, &s, &p, 0).unwrap();
        let d2 = tractor_derivative(&t2, &s2, &p, 0).unwrap();
        for a in 0..3 {
            let wrapped = TractorField::constant(&s, TractorKind::Endomorphism, d1[a].iter().map(Jet::value).collect());
            let want = change_scale(&wrapped, &s2, &ups).values(&p).unwrap();
            let got: Vec<f64> = d2[a].iter().map(Jet::value).collect();
            assert!(linalg::max_abs_diff(&want, &got) < 1e-12);
        }
        assert!(matches!(tractor_derivative(&t, &s2, &p, 0), Err(GeomError::ScaleMismatch)));
    }

    #[test]
    fn flat_parallel_tractors_are_affine_in_x() {
        let chart = Chart::cube("flat", 3, 1.0).unwrap();
        let s = Scale::new(Connection::flat(chart), "flat").unwrap();
        let (v, rho) = ([0.3, -0.2, 0.5], 0.7);
        let a = vec![0.1, 0.2, -0.3];
        let b = vec![-0.4, 0.5, 0.2];
        let start: Vec<f64> = (0..3).map(|i| v[i] - rho * a[i]).chain([rho]).collect();
        let out = parallel_transport(&start, &segment(a, b.clone()), &s).unwrap();
        let want: Vec<f64> = (0..3).map(|i| v[i] - rho * b[i]).chain([rho]).collect();
        assert!(linalg::max_abs_diff(&out, &want) < 1e-12);
    }

    #[test]
    fn reversed_loop_inverts_transport() {
        let s = scale_of(&warped_metric());
        let (a, b) = (vec![0.0, 0.1, 0.0], vec![0.2, -0.1, 0.1]);
        let fwd = transport_matrix_converged(&s, &segment(a.clone(), b.clone())).unwrap().0;
        let back = transport_matrix_converged(&s, &segment(b, a)).unwrap().0;
        let prod = linalg::matmul(&back, &fwd, 4);
        assert!(linalg::max_abs_diff(&prod, &linalg::identity(4)) < 1e-9);
    }

    #[test]
    fn frame_volume_is_parallel() {
        let s = scale_of(&warped_metric());
        let rep = tractor_volume_check(&s, None, &[vec![0.1, 0.2, 0.3]]).unwrap();
        assert!(rep.parallel < 1e-14);
        assert_eq!(volume_change_factor(&[0.3, -1.0, 2.0]), 1.0);
    }

    #[test]
    fn splitting_is_right_inverse_of_projection() {
        let s = scale_of(&warped_metric());
        let xi = TensorField::from_rule(s.connection().chart().clone(), vec![Up], 0.0, |x| {
            vec![x[1].sin(), &x[0] * &x[2], x[0].exp()]
        });
        let l = splitting_operator(&xi, &s).unwrap();
        let p = [0.1, 0.2, -0.2];
        let m = l.values(&p).unwrap();
        let want = xi.values(&p).unwrap();
        assert!(linalg::max_abs_diff(&projection(&m, 4), &want) == 0.0);
        let tr: f64 = (0..4).map(|i| m[i * 4 + i]).sum();
        assert!(tr.abs() < 1e-14);
    }
}
