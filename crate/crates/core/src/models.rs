//! Closed-form model geometries.
//!
//! Every model lives in an affine chart of the ray projectivisation of
//! `ℍ^{m+1} = ℝ^{4m+4}`. The ambient point over a chart point `x` is
//! `Y = (x, 1)` in tractor ordering, where the last slot is the real part of
//! the first quaternion coordinate and the chart coordinates are, in order,
//! its imaginary parts followed by the remaining quaternion coordinates.
//! The form `h` is `diag(+1 ×4p, −1 ×4q)` blockwise and the hypercomplex
//! triple is left multiplication by `i`, `j`, `k`.

use std::collections::BTreeMap;

use crate::affine::{levi_civita, Connection};
use crate::chart::Chart;
use crate::error::{GeomError, Result};
use crate::field::TensorField;
use crate::jet::Jet;
use crate::linalg;
use crate::quaternion::{left_mult, standard_form, Quat};
use crate::tensor::Variance::{Down, Up};
use crate::tractor::{Scale, TractorField, TractorKind};

/// Quaternion with jet coefficients `(1, i, j, k)`.
pub type JetQuat = [Jet<f64>; 4];

pub fn jq_mul(a: &JetQuat, b: &JetQuat) -> JetQuat {
    [
        &a[0] * &b[0] - &a[1] * &b[1] - &a[2] * &b[2] - &a[3] * &b[3],
        &a[0] * &b[1] + &a[1] * &b[0] + &a[2] * &b[3] - &a[3] * &b[2],
        &a[0] * &b[2] - &a[1] * &b[3] + &a[2] * &b[0] + &a[3] * &b[1],
        &a[0] * &b[3] + &a[1] * &b[2] - &a[2] * &b[1] + &a[3] * &b[0],
    ]
}

pub fn jq_inv(a: &JetQuat) -> JetQuat {
    let n = (&a[0] * &a[0] + &a[1] * &a[1] + &a[2] * &a[2] + &a[3] * &a[3]).recip();
    [&a[0] * &n, -(&a[1] * &n), -(&a[2] * &n), -(&a[3] * &n)]
}

/// Constant tractor-space data of the flat model.
#[derive(Clone, Debug)]
pub struct Ambient {
    pub m: usize,
    pub p: usize,
    pub q: usize,
    /// `perm[t]` is the ambient real index of tractor slot `t`.
    pub perm: Vec<usize>,
    /// `h` in tractor ordering.
    pub h: Vec<f64>,
    /// `L_i, L_j, L_k` in tractor ordering.
    pub triple: [Vec<f64>; 3],
    /// Sign of `perm`; the tractor volume form is `orientation · det`.
    pub orientation: f64,
}

impl Ambient {
    pub fn new(m: usize, p: usize, q: usize) -> Result<Self> {
        if p + q != m + 1 {
            return Err(GeomError::Model(format!("signature ({p},{q}) needs p + q = m + 1 = {}", m + 1)));
        }
        if p == 0 {
            return Err(GeomError::Model("the affine chart needs p ≥ 1".into()));
        }
        let nn = 4 * (m + 1);
        let perm: Vec<usize> = (0..nn).map(|t| (t + 1) % nn).collect();
        let reorder = |a: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; nn * nn];
            for r in 0..nn {
                for c in 0..nn {
                    out[r * nn + c] = a[perm[r] * nn + perm[c]];
                }
            }
            out
        };
        let h = reorder(&standard_form(p, q));
        let triple = Quat::units().map(|u| reorder(&left_mult(u, m + 1)));
        let orientation = if nn % 2 == 0 { -1.0 } else { 1.0 };
        Ok(Self { m, p, q, perm, h, triple, orientation })
    }

    pub fn rank(&self) -> usize {
        4 * (self.m + 1)
    }

    pub fn dim(&self) -> usize {
        self.rank() - 1
    }

    /// Chart index of the real part of the first negative quaternion.
    pub fn negative_axis(&self) -> Option<usize> {
        (self.q > 0).then(|| 3 + 4 * (self.p - 1))
    }

    /// `Y = (x, 1)` as jets.
    pub fn lift_jets(&self, x: &[Jet<f64>]) -> Vec<Jet<f64>> {
        let (d, o) = (x[0].dim(), x[0].order());
        x.iter().cloned().chain([Jet::constant(d, o, 1.0)]).collect()
    }

    pub fn lift(&self, x: &[f64]) -> Vec<f64> {
        x.iter().copied().chain([1.0]).collect()
    }

    /// `τ = h(Y, Y)`.
    pub fn tau(&self, x: &[f64]) -> f64 {
        let y = self.lift(x);
        let hy = linalg::matvec(&self.h, &y);
        y.iter().zip(&hy).map(|(a, b)| a * b).sum()
    }

    pub fn tau_jet(&self, x: &[Jet<f64>]) -> Jet<f64> {
        let y = self.lift_jets(x);
        let nn = self.rank();
        let mut t = Jet::zero(x[0].dim(), x[0].order());
        for r in 0..nn {
            let s = self.h[r * nn + r];
            t.add_scaled(&(&y[r] * &y[r]), s);
        }
        t
    }

    /// Chart point of an ambient vector in tractor ordering.
    pub fn chart_point(&self, y: &[f64]) -> Vec<f64> {
        let d = self.dim();
        y[..d].iter().map(|v| v / y[d]).collect()
    }

    /// Tractor-ordered vector to ambient ordering and back.
    pub fn to_ambient(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        for (t, &a) in self.perm.iter().enumerate() {
            out[a] = y[t];
        }
        out
    }

    pub fn from_ambient(&self, z: &[f64]) -> Vec<f64> {
        self.perm.iter().map(|&a| z[a]).collect()
    }

    /// Einstein metric `g = h(dY,dY)/τ − h(Y,dY)²/τ²` on `{τ ≠ 0}`.
    pub fn einstein_metric(&self, chart: Chart) -> TensorField<f64> {
        let amb = self.clone();
        let d = self.dim();
        TensorField::from_rule(chart, vec![Down, Down], 0.0, move |x| {
            let nn = d + 1;
            let y = amb.lift_jets(x);
            let hy: Vec<Jet<f64>> = (0..d).map(|a| y[a].scale(amb.h[a * nn + a])).collect();
            let tau = amb.tau_jet(x);
            let it = tau.recip();
            let it2 = &it * &it;
            let mut out = Vec::with_capacity(d * d);
            for a in 0..d {
                for b in 0..d {
                    let mut v = -(&(&hy[a] * &hy[b]) * &it2);
                    if a == b {
                        v = v + it.scale(amb.h[a * nn + a]);
                    }
                    out.push(v);
                }
            }
            out
        })
    }

    /// `Π(A)` for a constant ambient endomorphism `A`: `ξ = (AY)_x − x (AY)_ρ`.
    pub fn projected_field(&self, chart: Chart, a: Vec<f64>) -> TensorField<f64> {
        let d = self.dim();
        let amb = self.clone();
        TensorField::from_rule(chart, vec![Up], 0.0, move |x| {
            let nn = d + 1;
            let y = amb.lift_jets(x);
            let (dd, o) = (x[0].dim(), x[0].order());
            let ay: Vec<Jet<f64>> = (0..nn)
                .map(|r| {
                    let mut acc = Jet::zero(dd, o);
                    for c in 0..nn {
                        let v = a[r * nn + c];
                        if v != 0.0 {
                            acc.add_scaled(&y[c], v);
                        }
                    }
                    acc
                })
                .collect();
            (0..d).map(|i| &ay[i] - &(&x[i] * &ay[d])).collect()
        })
    }

    /// Killing fields `Π(L_u)` for `u = i, j, k`.
    pub fn killing_triple(&self, chart: &Chart) -> [TensorField<f64>; 3] {
        self.triple.clone().map(|l| self.projected_field(chart.clone(), l))
    }

    /// Ambient constants in the flat-chart scale: `M⁻¹AM` for endomorphisms
    /// and `MᵀhM` for forms, with `M = [[1, x], [0, 1]]`.
    pub fn flat_tractor(&self, scale: &Scale<f64>, kind: TractorKind, a: Vec<f64>) -> TractorField<f64> {
        let nn = self.rank();
        TractorField::new(scale, kind, move |p, o| {
            let d = nn - 1;
            let x = Jet::seed(p, o);
            let mut mm = vec![Jet::zero(d, o); nn * nn];
            let mut mi = vec![Jet::zero(d, o); nn * nn];
            for r in 0..nn {
                mm[r * nn + r] = Jet::constant(d, o, 1.0);
                mi[r * nn + r] = Jet::constant(d, o, 1.0);
            }
            for r in 0..d {
                mm[r * nn + d] = x[r].clone();
                mi[r * nn + d] = -x[r].clone();
            }
            let aj: Vec<Jet<f64>> = a.iter().map(|&v| Jet::constant(d, o, v)).collect();
            Ok(match kind {
                TractorKind::Endomorphism => crate::tractor::jmat_mul(&crate::tractor::jmat_mul(&mi, &aj, nn), &mm, nn),
                TractorKind::Bilinear => {
                    let mt: Vec<Jet<f64>> = (0..nn * nn).map(|i| mm[(i % nn) * nn + i / nn].clone()).collect();
                    crate::tractor::jmat_mul(&crate::tractor::jmat_mul(&mt, &aj, nn), &mm, nn)
                }
                TractorKind::Standard => (0..nn)
                    .map(|r| {
                        let mut acc = Jet::zero(d, o);
                        for c in 0..nn {
                            acc = acc + &mi[r * nn + c] * &aj[c];
                        }
                        acc
                    })
                    .collect(),
                TractorKind::Cotractor => (0..nn)
                    .map(|r| {
                        let mut acc = Jet::zero(d, o);
                        for c in 0..nn {
                            acc = acc + &mm[c * nn + r] * &aj[c];
                        }
                        acc
                    })
                    .collect(),
            })
        })
    }

    /// `Υ = −½ d log|τ|`, taking the flat chart scale to the Einstein scale.
    pub fn einstein_upsilon(&self, chart: Chart) -> TensorField<f64> {
        let amb = self.clone();
        TensorField::gradient(chart, move |x| {
            let t = amb.tau_jet(x);
            let lt = if t.value() < 0.0 { (-t).ln() } else { t.ln() };
            lt.scale(-0.5)
        })
    }
}

/// Hopf-type projection `π(x) = X₀⁻¹ (X₁, …, X_m)` onto an affine chart of
/// `ℍP^m`, constant on orbits of left multiplication by unit quaternions.
#[derive(Clone, Debug)]
pub struct HopfProjection {
    pub ambient: Ambient,
}

impl HopfProjection {
    pub fn target_dim(&self) -> usize {
        4 * self.ambient.m
    }

    fn quats_of(&self, x: &[Jet<f64>]) -> Vec<JetQuat> {
        let (d, o) = (x[0].dim(), x[0].order());
        let mut out = vec![[Jet::constant(d, o, 1.0), x[0].clone(), x[1].clone(), x[2].clone()]];
        for b in 0..self.ambient.m {
            let s = 3 + 4 * b;
            out.push([x[s].clone(), x[s + 1].clone(), x[s + 2].clone(), x[s + 3].clone()]);
        }
        out
    }

    /// `π` as jets in the chart variables.
    pub fn project_jets(&self, x: &[Jet<f64>]) -> Vec<Jet<f64>> {
        let qs = self.quats_of(x);
        let inv = jq_inv(&qs[0]);
        qs[1..].iter().flat_map(|q| jq_mul(&inv, q)).collect()
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let jets: Vec<Jet<f64>> = x.iter().map(|&v| Jet::constant(x.len(), 0, v)).collect();
        self.project_jets(&jets).iter().map(Jet::value).collect()
    }

    /// Jacobian `dπ` (row-major `4m × dim`) and its first derivatives.
    pub fn differential(&self, x: &[f64], order: usize) -> Vec<Vec<Jet<f64>>> {
        let pj = self.project_jets(&Jet::seed(x, order + 1));
        pj.iter().map(|c| (0..x.len()).map(|a| c.diff(a)).collect()).collect()
    }

    /// Section `y ↦ x` with `X = (1, y)`.
    pub fn section(&self, y: &[f64]) -> Vec<f64> {
        [0.0, 0.0, 0.0].into_iter().chain(y.iter().copied()).collect()
    }

    /// Chart point of `q·X` for the ambient point over `x`.
    pub fn act(&self, q: Quat, x: &[f64]) -> Vec<f64> {
        let amb = &self.ambient;
        let z = amb.to_ambient(&amb.lift(x));
        let blocks = crate::quaternion::to_quats(&z);
        let moved: Vec<Quat> = blocks.iter().map(|b| q * *b).collect();
        let y = amb.from_ambient(&crate::quaternion::from_quats(&moved));
        amb.chart_point(&y)
    }

    /// The fiber path `s ↦ exp(s w)·X` with its velocity.
    pub fn fiber_curve(&self, x: Vec<f64>, w: Quat) -> impl Fn(f64) -> (Vec<f64>, Vec<f64>) {
        let amb = self.ambient.clone();
        move |s| {
            let q = Quat::exp_im(w.scale(s));
            let z = amb.to_ambient(&amb.lift(&x));
            let blocks = crate::quaternion::to_quats(&z);
            let pos: Vec<Quat> = blocks.iter().map(|b| q * *b).collect();
            let vel: Vec<Quat> = pos.iter().map(|b| w * *b).collect();
            let y = amb.from_ambient(&crate::quaternion::from_quats(&pos));
            let dy = amb.from_ambient(&crate::quaternion::from_quats(&vel));
            let d = amb.dim();
            let pt: Vec<f64> = (0..d).map(|a| y[a] / y[d]).collect();
            let v: Vec<f64> = (0..d).map(|a| (dy[a] - pt[a] * dy[d]) / y[d]).collect();
            (pt, v)
        }
    }

    /// Quotient metric on the `ℍP^m` chart:
    /// `g̃(v,w) = [h(V,W) − Σ_u h(uY,V) h(uY,W)/τ]/τ`, `Y = (1,y)`, `V = (0,v)`.
    pub fn quotient_metric(&self, chart: Chart) -> TensorField<f64> {
        let (m, p) = (self.ambient.m, self.ambient.p);
        TensorField::from_rule(chart, vec![Down, Down], 0.0, move |y| {
            let (dd, o) = (y[0].dim(), y[0].order());
            let nd = 4 * m;
            let sign = |b: usize| if b < p { 1.0 } else { -1.0 };
            let one = Jet::constant(dd, o, 1.0);
            let zero = Jet::zero(dd, o);
            let mut ys: Vec<JetQuat> = vec![[one.clone(), zero.clone(), zero.clone(), zero.clone()]];
            for b in 0..m {
                ys.push([y[4 * b].clone(), y[4 * b + 1].clone(), y[4 * b + 2].clone(), y[4 * b + 3].clone()]);
            }
            let mut tau = Jet::zero(dd, o);
            for (b, q) in ys.iter().enumerate() {
                for c in q {
                    tau.add_scaled(&(c * c), sign(b));
                }
            }
            // rows[u][a] = h(uY, (0, e_a))
            let units = [Quat::ONE, Quat::I, Quat::J, Quat::K];
            let rows: Vec<Vec<Jet<f64>>> = units
                .iter()
                .map(|u| {
                    let uq = u.to_array().map(|c| Jet::constant(dd, o, c));
                    let mut r = Vec::with_capacity(nd);
                    for b in 0..m {
                        let uy = jq_mul(&uq, &ys[b + 1]);
                        for c in 0..4 {
                            r.push(uy[c].scale(sign(b + 1)));
                        }
                    }
                    r
                })
                .collect();
            let it = tau.recip();
            let mut out = Vec::with_capacity(nd * nd);
            for a in 0..nd {
                for b in 0..nd {
                    let mut acc = Jet::zero(dd, o);
                    for r in &rows {
                        acc = acc + &r[a] * &r[b];
                    }
                    let mut v = -(&acc * &it);
                    if a == b {
                        v = v + Jet::constant(dd, o, sign(a / 4 + 1));
                    }
                    out.push(&v * &it);
                }
            }
            out
        })
    }
}

/// Max drift of `π` along RK4 flows of random combinations of `i, j, k`
/// (unit time, 200 steps, stopping at the chart boundary) from each point.
pub fn fiber_drift(model: &ModelGeometry, hopf: &HopfProjection, points: &[Vec<f64>], per_point: usize, seed: u64) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let triple = model.triple.as_ref().ok_or_else(|| GeomError::Model("fiber flow needs the Killing triple".into()))?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut drift = 0.0f64;
    for x0 in points {
        for _ in 0..per_point {
            let w: [f64; 3] = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
            let field = |x: &[f64]| -> Result<Vec<f64>> {
                let mut v = vec![0.0; x.len()];
                for (c, f) in w.iter().zip(triple) {
                    for (a, fv) in f.values(x)?.into_iter().enumerate() {
                        v[a] += c * fv;
                    }
                }
                Ok(v)
            };
            let steps = 200;
            let h = 1.0 / steps as f64;
            let mut x = x0.clone();
            for _ in 0..steps {
                let step = || -> Result<Vec<f64>> {
                    let k1 = field(&x)?;
                    let x2: Vec<f64> = x.iter().zip(&k1).map(|(a, b)| a + 0.5 * h * b).collect();
                    let k2 = field(&x2)?;
                    let x3: Vec<f64> = x.iter().zip(&k2).map(|(a, b)| a + 0.5 * h * b).collect();
                    let k3 = field(&x3)?;
                    let x4: Vec<f64> = x.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
                    let k4 = field(&x4)?;
                    Ok((0..x.len()).map(|a| x[a] + h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a])).collect())
                };
                match step() {
                    Ok(next) if model.chart.contains(&next) => x = next,
                    Ok(_) | Err(GeomError::Domain { .. }) => break,
                    Err(e) => return Err(e),
                }
            }
            drift = drift.max(linalg::max_abs_diff(&hopf.project(&x), &hopf.project(x0)));
        }
    }
    Ok(drift)
}

/// The sub-box of `chart` centred at `center` with half-width `r`.
fn cube_at(name: &str, center: &[f64], r: f64) -> Result<Chart> {
    Chart::new(name, center.iter().map(|c| c - r).collect(), center.iter().map(|c| c + r).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    RoundSphere,
    FlatProjective,
    Cone,
    Perturbed,
}

/// Named closed-form geometry with its analytic auxiliary data.
#[derive(Clone, Debug)]
pub struct ModelGeometry {
    pub name: String,
    pub kind: ModelKind,
    pub m: usize,
    pub p: usize,
    pub q: usize,
    pub chart: Chart,
    pub metric: Option<TensorField<f64>>,
    pub connection: Connection<f64>,
    pub triple: Option<[TensorField<f64>; 3]>,
    pub ambient: Option<Ambient>,
    pub hopf: Option<HopfProjection>,
    pub cone: Option<crate::sasaki::ConeGeometry>,
    pub expected: BTreeMap<String, f64>,
}

impl ModelGeometry {
    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn scale(&self) -> Result<Scale<f64>> {
        let label = match self.kind {
            ModelKind::FlatProjective => "flat-chart",
            _ => "levi-civita",
        };
        Scale::new(self.connection.clone(), format!("{}:{label}", self.name))
    }

    pub fn expect(&self, key: &str) -> Option<f64> {
        self.expected.get(key).copied()
    }

    pub fn sasaki_triple(&self) -> Option<crate::sasaki::SasakiTriple> {
        let (g, t) = (self.metric.clone()?, self.triple.clone()?);
        let [i, j, k] = t;
        Some(crate::sasaki::SasakiTriple { g, i, j, k, signature: (4 * self.p - 1, 4 * self.q) })
    }
}

fn check_m(m: usize) -> Result<()> {
    if !(1..=2).contains(&m) {
        return Err(GeomError::Capability { requested: m, max: 2 });
    }
    Ok(())
}

/// Which stratum a sphere-type chart sits in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stratum {
    Plus,
    Minus,
}

/// Chart of half-width `r` strictly inside the requested stratum.
pub fn stratum_chart(amb: &Ambient, stratum: Stratum, r: f64) -> Result<Chart> {
    let d = amb.dim();
    let mut center = vec![0.0; d];
    let name = match stratum {
        Stratum::Plus => "gnomonic+",
        Stratum::Minus => {
            let ax = amb.negative_axis().ok_or_else(|| GeomError::Model("stratum M₋ is empty for q = 0".into()))?;
            center[ax] = 2.0;
            "gnomonic-"
        }
    };
    let chart = cube_at(name, &center, r)?;
    let want = if stratum == Stratum::Plus { 1.0 } else { -1.0 };
    for corner in 0..(1usize << d.min(12)) {
        let pt: Vec<f64> = (0..d).map(|a| center[a] + if corner >> a & 1 == 1 { r } else { -r }).collect();
        if amb.tau(&pt) * want <= 0.0 {
            return Err(GeomError::Domain { point: pt });
        }
    }
    Ok(chart)
}

/// 3-Sasaki pseudo-sphere `{h = 1} ⊂ ℍ^{p,q}` in a gnomonic chart.
pub fn make_round_sphere(m: usize, p: usize, q: usize) -> Result<ModelGeometry> {
    check_m(m)?;
    let amb = Ambient::new(m, p, q)?;
    let r = if m == 1 { 0.4 } else { 0.3 };
    let chart = stratum_chart(&amb, Stratum::Plus, r)?;
    sphere_on_chart(amb, chart, "round_sphere")
}

fn sphere_on_chart(amb: Ambient, chart: Chart, name: &str) -> Result<ModelGeometry> {
    let (m, p, q) = (amb.m, amb.p, amb.q);
    let g = amb.einstein_metric(chart.clone());
    let connection = levi_civita(&g)?;
    let triple = amb.killing_triple(&chart);
    let mut expected = BTreeMap::new();
    expected.insert("einstein_constant".into(), (4 * m + 2) as f64);
    expected.insert("quotient_einstein_constant".into(), (4 * m + 8) as f64);
    expected.insert("metric_signature_pos".into(), (4 * p - 1) as f64);
    expected.insert("metric_signature_neg".into(), (4 * q) as f64);
    expected.insert("tractor_signature_pos".into(), (4 * p) as f64);
    expected.insert("tractor_signature_neg".into(), (4 * q) as f64);
    expected.insert("quotient_signature_pos".into(), (4 * (p - 1)) as f64);
    expected.insert("quotient_signature_neg".into(), (4 * q) as f64);
    Ok(ModelGeometry {
        name: name.into(),
        kind: ModelKind::RoundSphere,
        m,
        p,
        q,
        chart,
        metric: Some(g),
        connection,
        triple: Some(triple),
        hopf: Some(HopfProjection { ambient: amb.clone() }),
        ambient: Some(amb),
        cone: None,
        expected,
    })
}

/// Einstein model on an explicit stratum chart of the flat model.
pub fn make_stratum_sphere(m: usize, p: usize, q: usize, stratum: Stratum) -> Result<ModelGeometry> {
    check_m(m)?;
    let amb = Ambient::new(m, p, q)?;
    let r = if m == 1 { 0.4 } else { 0.3 };
    let chart = stratum_chart(&amb, stratum, r)?;
    let mut model = sphere_on_chart(amb, chart, "stratum_sphere")?;
    if stratum == Stratum::Minus {
        let e = &mut model.expected;
        e.insert("metric_signature_pos".into(), (4 * q - 1) as f64);
        e.insert("metric_signature_neg".into(), (4 * p) as f64);
    }
    Ok(model)
}

/// Flat projective chart of `ℝP^{4m+3}` with constant tractor data.
pub fn make_flat_projective(m: usize, p: usize, q: usize) -> Result<ModelGeometry> {
    check_m(m)?;
    let amb = Ambient::new(m, p, q)?;
    let d = amb.dim();
    let chart = Chart::cube("affine", d, if m == 1 { 2.0 } else { 1.5 })?;
    let triple = amb.killing_triple(&chart);
    let mut expected = BTreeMap::new();
    expected.insert("tractor_signature_pos".into(), (4 * p) as f64);
    expected.insert("tractor_signature_neg".into(), (4 * q) as f64);
    expected.insert("conformal_signature_pos".into(), (4 * p) as f64 - 1.0);
    expected.insert("conformal_signature_neg".into(), (4 * q) as f64 - 1.0);
    expected.insert("strata".into(), if q == 0 { 1.0 } else { 3.0 });
    Ok(ModelGeometry {
        name: "flat_projective".into(),
        kind: ModelKind::FlatProjective,
        m,
        p,
        q,
        connection: Connection::flat(chart.clone()),
        chart,
        metric: None,
        triple: Some(triple),
        hopf: Some(HopfProjection { ambient: amb.clone() }),
        ambient: Some(amb),
        cone: None,
        expected,
    })
}

/// Metric cone over a sphere model.
pub fn make_cone(base: &ModelGeometry) -> Result<ModelGeometry> {
    let triple = base.sasaki_triple().ok_or_else(|| GeomError::Model("cone needs a 3-Sasaki model".into()))?;
    let cone = crate::sasaki::cone_build(&triple, (0.5, 2.0))?;
    let connection = levi_civita(&cone.metric)?;
    let mut expected = BTreeMap::new();
    expected.insert("ricci".into(), 0.0);
    expected.insert("metric_signature_pos".into(), (4 * base.p) as f64);
    expected.insert("metric_signature_neg".into(), (4 * base.q) as f64);
    Ok(ModelGeometry {
        name: "cone".into(),
        kind: ModelKind::Cone,
        m: base.m,
        p: base.p,
        q: base.q,
        chart: cone.chart.clone(),
        metric: Some(cone.metric.clone()),
        connection,
        triple: None,
        ambient: None,
        hopf: None,
        cone: Some(cone),
        expected,
    })
}

/// Round-sphere metric plus a rank-one bump; no holonomy reduction.
pub fn make_perturbed(m: usize, p: usize, q: usize, eps: f64) -> Result<ModelGeometry> {
    let base = make_round_sphere(m, p, q)?;
    let g0 = base.metric.clone().expect("sphere has a metric");
    let d = base.dim();
    let g0r = g0.rule().expect("sphere metric is a rule");
    let g = TensorField::from_rule(base.chart.clone(), vec![Down, Down], 0.0, move |x| {
        let mut c = g0r(x);
        let (dd, o) = (x[0].dim(), x[0].order());
        let mut u = vec![Jet::zero(dd, o); d];
        u[0] = x[1].sin();
        u[1] = &x[0] * &x[2];
        u[2] = Jet::constant(dd, o, 0.5) + x[3].cos().scale(0.2);
        for a in 0..3 {
            for b in 0..3 {
                c[a * d + b] = &c[a * d + b] + &(&u[a] * &u[b]).scale(eps);
            }
        }
        c
    });
    let connection = levi_civita(&g)?;
    Ok(ModelGeometry {
        name: "perturbed".into(),
        kind: ModelKind::Perturbed,
        metric: Some(g),
        connection,
        cone: None,
        expected: BTreeMap::new(),
        ..base
    })
}

/// Names accepted by [`Catalog::get`].
pub const MODEL_NAMES: [&str; 4] = ["round_sphere", "flat_projective", "cone", "perturbed"];

/// Model catalog; every model is self-validated before it is served.
#[derive(Clone, Copy, Debug, Default)]
pub struct Catalog;

impl Catalog {
    pub fn names(&self) -> &'static [&'static str] {
        &MODEL_NAMES
    }

    pub fn get(&self, name: &str, m: usize, p: usize, q: usize) -> Result<ModelGeometry> {
        let model = match name {
            "round_sphere" => make_round_sphere(m, p, q)?,
            "flat_projective" => make_flat_projective(m, p, q)?,
            "cone" => make_cone(&make_round_sphere(m, p, q)?)?,
            "perturbed" => make_perturbed(m, p, q, 0.3)?,
            other => {
                return Err(GeomError::Model(format!("unknown model '{other}'; valid: {}", MODEL_NAMES.join(", "))));
            }
        };
        self_check(&model)?;
        Ok(model)
    }
}

/// Cheap construction-time validation at a few points (tol 1e−7).
pub fn self_check(model: &ModelGeometry) -> Result<()> {
    let tol = 1e-7;
    let pts = model.chart.sample_points(3, 17);
    let fail = |what: &str, r: f64| Err(GeomError::Model(format!("{} self-check failed: {what} residual {r:e}", model.name)));
    match model.kind {
        ModelKind::RoundSphere => {
            let t = model.sasaki_triple().expect("sphere triple");
            let rep = crate::sasaki::check_3sasaki(&t, &pts)?;
            if rep.max_residual() > tol {
                return fail("3-Sasaki", rep.max_residual());
            }
            let hopf = model.hopf.as_ref().expect("sphere projection");
            let drift = fiber_drift(model, hopf, &pts, 4, 5)?;
            if drift > 1e-9 {
                return fail("fiber constancy of π", drift);
            }
        }
        ModelKind::FlatProjective => {
            let scale = model.scale()?;
            let amb = model.ambient.as_ref().expect("flat data");
            let mut r = 0.0f64;
            for a in amb.triple.iter() {
                let t = amb.flat_tractor(&scale, TractorKind::Endomorphism, a.clone());
                for p in &pts {
                    r = r.max(crate::tractor::parallel_residual(&t, &scale, p)?);
                }
            }
            if r > tol {
                return fail("flat tractor parallelism", r);
            }
        }
        ModelKind::Cone => {
            let cone = model.cone.as_ref().expect("cone data");
            let rep = crate::sasaki::check_cone(cone, &cone.chart.sample_points(2, 17))?;
            if rep.parallel > 1e-6 {
                return fail("cone parallelism", rep.parallel);
            }
        }
        ModelKind::Perturbed => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tractor::projection;

    #[test]
    fn sphere_metric_has_unit_killing_fields() {
        let model = make_round_sphere(1, 2, 0).unwrap();
        let g = model.metric.as_ref().unwrap();
        let t = model.triple.as_ref().unwrap();
        let x = [0.1, -0.2, 0.05, 0.3, 0.0, -0.1, 0.2];
        let gv = g.values(&x).unwrap();
        for f in t {
            let v = f.values(&x).unwrap();
            let mut n = 0.0;
            for a in 0..7 {
                for b in 0..7 {
                    n += gv[a * 7 + b] * v[a] * v[b];
                }
            }
            assert!((n - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn projected_field_at_origin_is_block_column() {
        let model = make_flat_projective(1, 1, 1).unwrap();
        let amb = model.ambient.as_ref().unwrap();
        let scale = model.scale().unwrap();
        let i = amb.flat_tractor(&scale, TractorKind::Endomorphism, amb.triple[0].clone());
        let origin = vec![0.0; 7];
        let col = projection(&i.values(&origin).unwrap(), 8);
        let want: Vec<f64> = (0..7).map(|r| amb.triple[0][r * 8 + 7]).collect();
        assert_eq!(col, want);
        assert_eq!(model.triple.as_ref().unwrap()[0].values(&origin).unwrap(), want);
    }

    #[test]
    fn hopf_section_and_invariance() {
        let model = make_round_sphere(1, 2, 0).unwrap();
        let hopf = model.hopf.as_ref().unwrap();
        let y = [0.1, 0.2, -0.3, 0.05];
        assert_eq!(hopf.project(&hopf.section(&y)), y.to_vec());
        let x = [0.1, -0.1, 0.2, 0.3, 0.1, 0.0, -0.2];
        let q = Quat::exp_im(Quat::new(0.0, 0.2, -0.1, 0.3));
        let a = hopf.project(&x);
        let b = hopf.project(&hopf.act(q, &x));
        assert!(linalg::max_abs_diff(&a, &b) < 1e-14);
    }

    #[test]
    fn stratum_charts_have_definite_tau() {
        let amb = Ambient::new(1, 1, 1).unwrap();
        assert!(stratum_chart(&amb, Stratum::Minus, 0.4).is_ok());
        assert!(stratum_chart(&amb, Stratum::Plus, 3.0).is_err());
        assert!(matches!(make_round_sphere(5, 2, 0), Err(GeomError::Capability { .. })));
    }

    #[test]
    fn catalog_rejects_unknown_names() {
        assert!(matches!(Catalog.get("torus", 1, 2, 0), Err(GeomError::Model(_))));
    }
}
