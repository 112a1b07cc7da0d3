//! Curved-orbit stratification by `τ = h(X,X)`, adapted scales, descent to
//! local leaf spaces, and the quaternionic contact structure on `M₀`.

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::affine::{covariant_derivative, levi_civita, lie_derivative_connection, projective_change, Connection};
use crate::chart::Chart;
use crate::check::Residuals;
use crate::error::{GeomError, Result};
use crate::field::TensorField;
use crate::jet::Jet;
use crate::linalg;
use crate::models::{stratum_chart, Ambient, HopfProjection, ModelGeometry, Stratum};
use crate::quaternion::{left_mult, Quat};
use crate::sasaki::{einstein_residual, metric_signature};
use crate::tractor::{self, Scale, TractorField, TractorKind, TractorMetric};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Label {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "-")]
    Minus,
}

/// A located point of `M₀` between two oppositely labelled grid neighbours.
#[derive(Clone, Debug)]
pub struct Crossing {
    pub point: Vec<f64>,
    pub tau: f64,
    pub gradient_norm: f64,
}

/// Labels of `τ` along axis-parallel grid lines.
#[derive(Clone, Debug)]
pub struct Stratification {
    pub lines: Vec<Vec<Vec<f64>>>,
    pub tau: Vec<Vec<f64>>,
    pub labels: Vec<Vec<Label>>,
    pub tol_zero: f64,
    pub counts: (usize, usize, usize),
    pub crossings: Vec<Crossing>,
    /// Sign changes between grid neighbours where no root was found.
    pub unseparated: usize,
    /// Set when more than half of the points fall in the zero band.
    pub degenerate_warning: bool,
}

impl Stratification {
    pub fn max_root_tau(&self) -> f64 {
        self.crossings.iter().fold(0.0f64, |m, c| m.max(c.tau.abs()))
    }

    /// Number of classified points whose label disagrees with `sign`.
    pub fn mismatches(&self, sign: &dyn Fn(&[f64]) -> f64) -> usize {
        let mut bad = 0;
        for (line, labels) in self.lines.iter().zip(&self.labels) {
            for (p, l) in line.iter().zip(labels) {
                let s = sign(p);
                bad += match l {
                    Label::Plus => usize::from(s <= 0.0),
                    Label::Minus => usize::from(s >= 0.0),
                    Label::Zero => 0,
                };
            }
        }
        bad
    }
}

/// Axis-parallel lines through Halton points, spanning the central 90% of
/// the chart with `per_line` points each.
pub fn grid_lines(chart: &Chart, n_lines: usize, per_line: usize, seed: u64) -> Vec<Vec<Vec<f64>>> {
    let d = chart.dim();
    chart
        .sample_points(n_lines, seed)
        .into_iter()
        .enumerate()
        .map(|(l, base)| {
            let axis = l % d;
            let (lo, hi) = (chart.lo()[axis], chart.hi()[axis]);
            let (a, b) = (lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo));
            (0..per_line)
                .map(|s| {
                    let mut p = base.clone();
                    p[axis] = a + (b - a) * s as f64 / (per_line - 1) as f64;
                    p
                })
                .collect()
        })
        .collect()
}

fn tau_jet(h: &TractorMetric<f64>, p: &[f64], order: usize) -> Result<Jet<f64>> {
    let nn = h.rank();
    Ok(h.components(p, order)?[nn * nn - 1].clone())
}

/// Labels grid points by the sign of `τ = h(X,X)` and locates `M₀` between
/// opposite neighbours by bisection followed by Newton iteration.
pub fn stratify(h: &TractorMetric<f64>, lines: &[Vec<Vec<f64>>], tol_zero: Option<f64>) -> Result<Stratification> {
    let mut tau = Vec::with_capacity(lines.len());
    for line in lines {
        tau.push(line.iter().map(|p| tau_jet(h, p, 0).map(|j| j.value())).collect::<Result<Vec<f64>>>()?);
    }
    let max_tau = tau.iter().flatten().fold(0.0f64, |m, t| m.max(t.abs()));
    let tol_zero = tol_zero.unwrap_or(1e-6 * max_tau);
    let label = |t: f64| {
        if t > tol_zero {
            Label::Plus
        } else if t < -tol_zero {
            Label::Minus
        } else {
            Label::Zero
        }
    };
    let labels: Vec<Vec<Label>> = tau.iter().map(|l| l.iter().map(|&t| label(t)).collect()).collect();
    let mut counts = (0, 0, 0);
    for l in labels.iter().flatten() {
        match l {
            Label::Plus => counts.0 += 1,
            Label::Zero => counts.1 += 1,
            Label::Minus => counts.2 += 1,
        }
    }
    let mut crossings = Vec::new();
    let mut unseparated = 0;
    for (li, line) in lines.iter().enumerate() {
        for s in 0..line.len().saturating_sub(1) {
            let (l0, l1) = (labels[li][s], labels[li][s + 1]);
            let opposite = matches!((l0, l1), (Label::Plus, Label::Minus) | (Label::Minus, Label::Plus));
            if !opposite {
                continue;
            }
            match locate_root(h, &line[s], &line[s + 1], tau[li][s])? {
                Some(c) if c.tau.abs() <= 1e-10 => crossings.push(c),
                _ => unseparated += 1,
            }
        }
    }
    let total = counts.0 + counts.1 + counts.2;
    Ok(Stratification {
        lines: lines.to_vec(),
        tau,
        labels,
        tol_zero,
        counts,
        crossings,
        unseparated,
        degenerate_warning: 2 * counts.1 > total,
    })
}

fn locate_root(h: &TractorMetric<f64>, a: &[f64], b: &[f64], ta: f64) -> Result<Option<Crossing>> {
    let at = |s: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect() };
    let dir: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let (mut lo, mut hi) = (0.0, 1.0);
    let sa = ta.signum();
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let t = tau_jet(h, &at(mid), 0)?.value();
        if t.signum() == sa {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..8 {
        let j = tau_jet(h, &at(s), 1)?;
        let dt: f64 = (0..dir.len()).map(|i| j.d1(i) * dir[i]).sum();
        if dt == 0.0 {
            break;
        }
        let next = s - j.value() / dt;
        if !(0.0..=1.0).contains(&next) {
            break;
        }
        s = next;
    }
    let p = at(s);
    let j = tau_jet(h, &p, 1)?;
    let gradient_norm = j.grad().iter().map(|g| g * g).sum::<f64>().sqrt();
    Ok(Some(Crossing { point: p, tau: j.value(), gradient_norm }))
}

/// Min over points and fields of `|ξ(x)| / (1 + |x|²)`.
pub fn min_normalized_norm(fields: &[TensorField<f64>], points: &[Vec<f64>]) -> Result<f64> {
    let mut m = f64::INFINITY;
    for p in points {
        let w = 1.0 + p.iter().map(|x| x * x).sum::<f64>();
        for f in fields {
            let n = f.values(p)?.iter().map(|v| v * v).sum::<f64>().sqrt();
            m = m.min(n / w);
        }
    }
    Ok(m)
}

/// Einstein metric of a stratum of the flat model with its checks.
#[derive(Clone, Debug)]
pub struct StratumMetric {
    pub chart: Chart,
    pub metric: TensorField<f64>,
    pub signature: (usize, usize),
    pub residuals: Residuals,
}

/// `g_±` obtained by normalising `Y ↦ Y/√|τ|` onto `{h = ±1}`, checked for
/// `Ric = (4m+2) g` and projective equivalence with the flat chart.
pub fn einstein_metric_on_stratum(amb: &Ambient, stratum: Stratum, points: usize, seed: u64) -> Result<StratumMetric> {
    let r = if amb.m == 1 { 0.4 } else { 0.3 };
    let chart = stratum_chart(amb, stratum, r)?;
    let metric = amb.einstein_metric(chart.clone());
    let pts = chart.sample_points(points, seed);
    let mut res = Residuals::new(pts.len());
    res.record("einstein", einstein_residual(&metric, (4 * amb.m + 2) as f64, &pts)?);
    let lc = levi_civita(&metric)?;
    let ups = amb.einstein_upsilon(chart.clone());
    let changed = projective_change(&Connection::flat(chart.clone()), &ups)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let d = amb.dim();
    for p in &pts {
        let g1 = lc.gamma_at(p, 0)?.values();
        let g2 = changed.gamma_at(p, 0)?.values();
        res.record("projective_equivalence", linalg::max_abs_diff(&g1, &g2));
        res.record("weyl", lc.curvature_at(p, 0)?.w.max_abs_value());
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // Γ(v,v) of the Levi-Civita connection minus the flat spray is ∝ v.
        let spray: Vec<f64> = (0..d)
            .map(|c| (0..d).map(|a| (0..d).map(|b| g1[(c * d + a) * d + b] * v[a] * v[b]).sum::<f64>()).sum())
            .collect();
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let lam: f64 = spray.iter().zip(&v).map(|(s, x)| s * x).sum::<f64>() / vv;
        res.record("spray_proportionality", spray.iter().zip(&v).fold(0.0f64, |m, (s, x)| m.max((s - lam * x).abs())));
    }
    let signature = metric_signature(&metric, &pts[0])?;
    for p in &pts[1..] {
        if metric_signature(&metric, p)? != signature {
            return Err(GeomError::Degenerate { point: p.clone(), condition: f64::NAN });
        }
    }
    Ok(StratumMetric { chart, metric, signature, residuals: res })
}

/// Rank and bracket checks for `D = span{i, j, k}`.
#[derive(Clone, Debug)]
pub struct IntegrabilityReport {
    pub rank: usize,
    pub min_singular_value: f64,
    pub residuals: Residuals,
    pub counterexample: Option<Vec<f64>>,
}

/// `[i,j] + 2k`, `[j,k] + 2i`, `[k,i] + 2j`, and the rank of the span.
pub fn check_d_integrability(fields: &[TensorField<f64>], points: &[Vec<f64>]) -> Result<IntegrabilityReport> {
    let d = fields[0].dim();
    let r = fields.len();
    let mut res = Residuals::new(points.len());
    let mut min_sv = f64::INFINITY;
    let mut rank = r;
    let mut counterexample = None;
    for p in points {
        let jets: Vec<_> = fields.iter().map(|f| f.evaluate(p, 1)).collect::<Result<_>>()?;
        let mut m = Vec::with_capacity(r * d);
        for j in &jets {
            m.extend(j.values());
        }
        let sv = linalg::singular_values(&m, r, d);
        let s = sv.last().copied().unwrap_or(0.0);
        if s < min_sv {
            min_sv = s;
        }
        let here = sv.iter().filter(|&&x| x > 1e-8 * sv[0]).count();
        if here < rank {
            rank = here;
            counterexample = Some(p.clone());
        }
        if r == 3 {
            for (u, v, w, tag) in [(0, 1, 2, "ij"), (1, 2, 0, "jk"), (2, 0, 1, "ki")] {
                let mut e = 0.0f64;
                for c in 0..d {
                    let mut br = 0.0;
                    for a in 0..d {
                        br += jets[u].value_at(&[a]) * jets[v].at(&[c]).d1(a) - jets[v].value_at(&[a]) * jets[u].at(&[c]).d1(a);
                    }
                    e = e.max((br + 2.0 * jets[w].value_at(&[c])).abs());
                }
                res.record(&format!("bracket_{tag}"), e);
            }
        }
    }
    Ok(IntegrabilityReport { rank, min_singular_value: min_sv, residuals: res, counterexample })
}

/// A scale in which `i, j, k` are divergence-free.
#[derive(Clone, Debug)]
pub struct AdaptedScale {
    pub scale: Scale<f64>,
    pub divergences: [f64; 3],
}

/// Max `|∇_a ξ^a|` for each field.
pub fn divergences(scale: &Scale<f64>, fields: &[TensorField<f64>; 3], points: &[Vec<f64>]) -> Result<[f64; 3]> {
    let d = scale.dim();
    let mut out = [0.0f64; 3];
    for p in points {
        let gamma = scale.connection().gamma_at(p, 0)?;
        for (u, f) in fields.iter().enumerate() {
            let nab = covariant_derivative(&f.evaluate(p, 1)?, &gamma, 0.0);
            let div: f64 = (0..d).map(|a| nab.value_at(&[a, a])).sum();
            out[u] = out[u].max(div.abs());
        }
    }
    Ok(out)
}

/// Validates an adapted scale and evaluates every identity of the
/// adapted-scale lemma, the second-derivative formula, and `L_ξ∇ = 0`.
pub fn check_adapted_scale(
    scale: &Scale<f64>,
    fields: &[TensorField<f64>; 3],
    points: &[Vec<f64>],
    tol: f64,
) -> Result<(AdaptedScale, Residuals)> {
    let divs = divergences(scale, fields, points)?;
    if divs.iter().any(|&x| x > tol) {
        return Err(GeomError::NotAdapted { divergences: divs });
    }
    let d = scale.dim();
    let conn = scale.connection();
    let names = ["i", "j", "k"];
    let mut res = Residuals::new(points.len());
    let lies: Vec<TensorField<f64>> = fields.iter().map(|f| lie_derivative_connection(f, conn)).collect::<Result<_>>()?;
    for p in points {
        let pj = conn.curvature_at(p, 0)?.p.values();
        let pm = |a: usize, b: usize| pj[a * d + b];
        let mut val = Vec::new();
        let mut nab = Vec::new();
        let mut nab2 = Vec::new();
        for f in fields {
            let x2 = f.evaluate(p, 2)?;
            let n1 = conn.nabla(p, &x2, 0.0)?;
            let n2 = conn.nabla(p, &n1, 0.0)?;
            val.push(x2.values());
            nab.push(n1.values());
            nab2.push(n2.values());
        }
        // P_{ab} ξ^b as a one-form.
        let pl: Vec<Vec<f64>> = val.iter().map(|v| (0..d).map(|a| (0..d).map(|b| pm(a, b) * v[b]).sum()).collect()).collect();
        for u in 0..3 {
            let (v, n, n2) = (&val[u], &nab[u], &nab2[u]);
            let nm = names[u];
            let mut a1 = 0.0f64;
            let mut a3 = 0.0f64;
            let mut a4 = 0.0f64;
            let mut qp = 0.0f64;
            for b in 0..d {
                a1 = a1.max((0..d).map(|a| v[a] * n[a * d + b]).sum::<f64>().abs());
                a3 = a3.max((0..d).map(|c| pl[u][c] * n[b * d + c]).sum::<f64>().abs());
                for a in 0..d {
                    // ∇_c ξ^a ∇_b ξ^c − ξ^a P_{bc} ξ^c = −δ^a_b
                    let s: f64 = (0..d).map(|c| n[c * d + a] * n[b * d + c]).sum();
                    let want = if a == b { -1.0 } else { 0.0 };
                    a4 = a4.max((s - v[a] * pl[u][b] - want).abs());
                    for c in 0..d {
                        let want = -pm(a, b) * v[c] + if c == a { pl[u][b] } else { 0.0 };
                        qp = qp.max((n2[(a * d + b) * d + c] - want).abs());
                    }
                }
            }
            let a2: f64 = (0..d).map(|c| pl[u][c] * v[c]).sum();
            res.record(&format!("lemma_a_geodesic_{nm}"), a1);
            res.record(&format!("lemma_a_unit_{nm}"), (a2 - 1.0).abs());
            res.record(&format!("lemma_a_orthogonal_{nm}"), a3);
            res.record(&format!("lemma_a_square_{nm}"), a4);
            res.record(&format!("q_parallel_{nm}"), qp);
            let lie = lies[u].evaluate(p, 0)?.max_abs_value();
            res.record(&format!("affine_symmetry_{nm}"), lie);
        }
        for (u, v) in [(0, 1), (0, 2), (1, 2)] {
            let s: f64 = (0..d).map(|a| pl[v][a] * val[u][a]).sum();
            res.record(&format!("lemma_b_{}{}", names[u], names[v]), s.abs());
        }
        for (u, v, w) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            let tag = format!("{}{}", names[u], names[v]);
            let mut c1 = 0.0f64;
            let mut c2 = 0.0f64;
            let mut dd = 0.0f64;
            for b in 0..d {
                let uv: f64 = (0..d).map(|a| val[u][a] * nab[v][a * d + b]).sum();
                let vu: f64 = (0..d).map(|a| val[v][a] * nab[u][a * d + b]).sum();
                c1 = c1.max((uv + val[w][b]).abs()).max((-vu + val[w][b]).abs());
            }
            for a in 0..d {
                let s1: f64 = (0..d).map(|b| pl[u][b] * nab[v][a * d + b]).sum();
                let s2: f64 = -(0..d).map(|b| pl[v][b] * nab[u][a * d + b]).sum::<f64>();
                c2 = c2.max((s1 - pl[w][a]).abs()).max((s2 - pl[w][a]).abs());
                for c in 0..d {
                    let l: f64 = (0..d).map(|b| nab[u][b * d + c] * nab[v][a * d + b]).sum::<f64>() - pl[v][a] * val[u][c];
                    let r: f64 = -(0..d).map(|b| nab[v][b * d + c] * nab[u][a * d + b]).sum::<f64>() + pl[u][a] * val[v][c];
                    let want = nab[w][a * d + c];
                    dd = dd.max((l - want).abs()).max((r - want).abs());
                }
            }
            res.record(&format!("lemma_c_derivative_{tag}"), c1);
            res.record(&format!("lemma_c_schouten_{tag}"), c2);
            res.record(&format!("lemma_d_{tag}"), dd);
        }
    }
    Ok((AdaptedScale { scale: scale.clone(), divergences: divs }, res))
}

/// Descended data at one point of `M`.
#[derive(Clone, Debug)]
pub struct DescentAt {
    pub y: Vec<f64>,
    /// `Γ̃^γ_{αβ}` at `[(γ·n + α)·n + β]`.
    pub gamma: Vec<f64>,
    /// `Ĩ, J̃, K̃` as row-major `4m × 4m` matrices.
    pub q: [Vec<f64>; 3],
    /// `g(E_α, E_β)` when a metric is supplied.
    pub metric: Option<Vec<f64>>,
}

/// Horizontal lifts `E_α` solving `dπ(E) = e_α`, `P(ξ, E) = 0` for
/// `ξ ∈ {i, j, k}`, and the data they induce on the leaf space.
pub fn descend_at(
    hopf: &HopfProjection,
    scale: &Scale<f64>,
    fields: &[TensorField<f64>; 3],
    g: Option<&TensorField<f64>>,
    x: &[f64],
) -> Result<DescentAt> {
    let d = scale.dim();
    let nq = hopf.target_dim();
    if nq + 3 != d {
        return Err(GeomError::Shape("leaf space must have codimension 3".into()));
    }
    let dpi = hopf.differential(x, 1);
    let sj = scale.jets(x, 1)?;
    let gamma0 = sj.gamma.truncate(0);
    let fj: Vec<_> = fields.iter().map(|f| f.evaluate(x, 1)).collect::<Result<_>>()?;
    let mut a = vec![Jet::zero(d, 1); d * d];
    for r in 0..nq {
        for c in 0..d {
            a[r * d + c] = dpi[r][c].clone();
        }
    }
    for (u, f) in fj.iter().enumerate() {
        for c in 0..d {
            let mut acc = Jet::zero(d, 1);
            for b in 0..d {
                acc = acc + sj.curv.p.at(&[c, b]) * f.at(&[b]);
            }
            a[(nq + u) * d + c] = acc;
        }
    }
    let b: Vec<Jet<f64>> = (0..d * nq).map(|i| Jet::constant(d, 1, if i / nq == i % nq { 1.0 } else { 0.0 })).collect();
    let e = linalg::jet_solve(&a, d, &b, nq).ok_or(GeomError::Descent("horizontal lift system is singular".into()))?;
    let ev = |c: usize, al: usize| e[c * nq + al].value();
    let dp = |gm: usize, c: usize| dpi[gm][c].value();
    let mut gamma = vec![0.0; nq * nq * nq];
    for al in 0..nq {
        for be in 0..nq {
            let mut vecc = vec![0.0; d];
            for (c, vc) in vecc.iter_mut().enumerate() {
                let mut s = 0.0;
                for dd in 0..d {
                    s += ev(dd, al) * e[c * nq + be].d1(dd);
                    for ee in 0..d {
                        s += gamma0.value_at(&[c, dd, ee]) * ev(dd, al) * ev(ee, be);
                    }
                }
                *vc = s;
            }
            for gm in 0..nq {
                gamma[(gm * nq + al) * nq + be] = (0..d).map(|c| dp(gm, c) * vecc[c]).sum();
            }
        }
    }
    let q = [0, 1, 2].map(|u| {
        let nab = covariant_derivative(&fj[u], &gamma0, 0.0);
        let mut m = vec![0.0; nq * nq];
        for gm in 0..nq {
            for al in 0..nq {
                let mut s = 0.0;
                for c in 0..d {
                    let v: f64 = (0..d).map(|aa| ev(aa, al) * nab.value_at(&[aa, c])).sum();
                    s += dp(gm, c) * v;
                }
                m[gm * nq + al] = s;
            }
        }
        m
    });
    let metric = match g {
        Some(g) => {
            let g0 = g.values(x)?;
            let mut m = vec![0.0; nq * nq];
            for al in 0..nq {
                for be in 0..nq {
                    let mut s = 0.0;
                    for aa in 0..d {
                        for bb in 0..d {
                            s += g0[aa * d + bb] * ev(aa, al) * ev(bb, be);
                        }
                    }
                    m[al * nq + be] = s;
                }
            }
            Some(m)
        }
        None => None,
    };
    Ok(DescentAt { y: hopf.project(x), gamma, q, metric })
}

/// A random imaginary `w` with `exp(w)·x` still in the chart, shrinking
/// the step until it fits.
pub fn fiber_neighbor(hopf: &HopfProjection, chart: &Chart, x: &[f64], rng: &mut impl Rng) -> Option<(Quat, Vec<f64>)> {
    let dir = Quat::new(0.0, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let mut r = 0.3;
    for _ in 0..8 {
        let w = dir.scale(r);
        let x2 = hopf.act(Quat::exp_im(w), x);
        if chart.contains(&x2) {
            return Some((w, x2));
        }
        r *= 0.5;
    }
    None
}

/// Distance of `a` from the span of `basis` in the Frobenius norm.
pub fn span_distance(a: &[f64], basis: &[&[f64]]) -> f64 {
    let k = basis.len();
    let mut gram = vec![0.0; k * k];
    let mut rhs = vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            gram[i * k + j] = basis[i].iter().zip(basis[j]).map(|(x, y)| x * y).sum();
        }
        rhs[i] = basis[i].iter().zip(a).map(|(x, y)| x * y).sum();
    }
    let Some(lu) = linalg::Lu::factor(gram, k) else {
        return f64::INFINITY;
    };
    let c = lu.solve(&rhs);
    let mut r = a.to_vec();
    for i in 0..k {
        for (x, b) in r.iter_mut().zip(basis[i]) {
            *x -= c[i] * b;
        }
    }
    linalg::max_abs(&r)
}

/// Left multiplications of `ℍ^m` by `i, j, k`.
pub fn standard_q(m: usize) -> [Vec<f64>; 3] {
    Quat::units().map(|u| left_mult(u, m))
}

fn span_residual(mats: &[Vec<f64>; 3], basis: &[Vec<f64>; 3]) -> f64 {
    let b: Vec<&[f64]> = basis.iter().map(|v| v.as_slice()).collect();
    mats.iter().fold(0.0f64, |m, a| m.max(span_distance(a, &b)))
}

/// Quaternionic descent checks over fiber pairs.
pub fn descend_quaternionic(
    model: &ModelGeometry,
    scale: &Scale<f64>,
    points: &[Vec<f64>],
    seed: u64,
) -> Result<Residuals> {
    let hopf = model.hopf.as_ref().ok_or_else(|| GeomError::Descent("model has no leaf projection".into()))?;
    let fields = model.triple.as_ref().ok_or_else(|| GeomError::Descent("model has no triple".into()))?;
    let nq = hopf.target_dim();
    let std = standard_q(model.m);
    let id = linalg::identity(nq);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut res = Residuals::new(points.len());
    let lie_checks = lie_relations(scale, fields, points)?;
    res.merge("", &lie_checks);
    for x in points {
        let here = descend_at(hopf, scale, fields, None, x)?;
        for m in &here.q {
            let sq = linalg::matmul(m, m, nq);
            res.record("quaternionic_square", sq.iter().zip(&id).fold(0.0f64, |a, (s, i)| a.max((s + i).abs())));
        }
        for (u, w, v) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            let p = linalg::matmul(&here.q[u], &here.q[w], nq);
            res.record("quaternionic_product", linalg::max_abs_diff(&p, &here.q[v]));
        }
        res.record("hopf_comparison", span_residual(&here.q, &std));
        let mut tors = 0.0f64;
        for g in 0..nq {
            for a in 0..nq {
                for b in 0..nq {
                    tors = tors.max((here.gamma[(g * nq + a) * nq + b] - here.gamma[(g * nq + b) * nq + a]).abs());
                }
            }
        }
        res.record("descended_torsion", tors);
        res.record("descended_preserves_q", q_preservation(&here.gamma, &here.q, nq));
        let Some((_, x2)) = fiber_neighbor(hopf, &model.chart, x, &mut rng) else {
            continue;
        };
        let there = descend_at(hopf, scale, fields, None, &x2)?;
        res.record("fiber_base_point", linalg::max_abs_diff(&here.y, &there.y));
        let fiber = span_residual(&there.q, &here.q);
        if fiber > 1e-3 {
            return Err(GeomError::Descent(format!("Q̃ differs along the fiber: {:?} vs {:?}", here.q, there.q)));
        }
        res.record("fiber_consistency_q", fiber);
        res.record("fiber_consistency_connection", linalg::max_abs_diff(&here.gamma, &there.gamma));
    }
    Ok(res)
}

/// `∇̃_α A` for `A ∈ Q̃` taken as constant frames of a parallel-span check:
/// distance of `[Γ̃_α, A]` from the span of the frame.
fn q_preservation(gamma: &[f64], q: &[Vec<f64>; 3], nq: usize) -> f64 {
    let basis: Vec<&[f64]> = q.iter().map(|v| v.as_slice()).collect();
    let mut r = 0.0f64;
    for al in 0..nq {
        let mut ga = vec![0.0; nq * nq];
        for g in 0..nq {
            for b in 0..nq {
                ga[g * nq + b] = gamma[(g * nq + al) * nq + b];
            }
        }
        for a in q {
            let c1 = linalg::matmul(&ga, a, nq);
            let c2 = linalg::matmul(a, &ga, nq);
            let comm: Vec<f64> = c1.iter().zip(&c2).map(|(x, y)| x - y).collect();
            r = r.max(span_distance(&comm, &basis));
        }
    }
    r
}

/// `L_i(∇j) = −2∇k` and cyclic, with `(L_ξA)^a_b = ξ^c∂_cA^a_b − A^c_b∂_cξ^a + A^a_c∂_bξ^c`.
pub fn lie_relations(scale: &Scale<f64>, fields: &[TensorField<f64>; 3], points: &[Vec<f64>]) -> Result<Residuals> {
    let d = scale.dim();
    let mut res = Residuals::new(points.len());
    for p in points {
        let gamma = scale.connection().gamma_at(p, 1)?;
        let fj: Vec<_> = fields.iter().map(|f| f.evaluate(p, 2)).collect::<Result<_>>()?;
        // A[u][b][a] = ∇_b ξ_u^a to order 1.
        let nab: Vec<_> = fj.iter().map(|f| covariant_derivative(f, &gamma, 0.0)).collect();
        for (u, v, w, tag) in [(0, 1, 2, "ij"), (1, 2, 0, "jk"), (2, 0, 1, "ki")] {
            let xi = &fj[u];
            let mut r = 0.0f64;
            for a in 0..d {
                for b in 0..d {
                    let mut s = 0.0;
                    for c in 0..d {
                        s += xi.value_at(&[c]) * nab[v].at(&[b, a]).d1(c);
                        s -= nab[v].value_at(&[b, c]) * xi.at(&[a]).d1(c);
                        s += nab[v].value_at(&[c, a]) * xi.at(&[c]).d1(b);
                    }
                    r = r.max((s + 2.0 * nab[w].value_at(&[b, a])).abs());
                }
            }
            res.record(&format!("lie_relation_{tag}"), r);
        }
    }
    Ok(res)
}

/// The quaternionic change formula applied to descended data:
/// `Γ̂ = Γ + Υ_αδ + Υ_βδ − Σ_A (Υ_δ A^δ_α A^γ_β + Υ_δ A^δ_β A^γ_α)`.
pub fn quaternionic_change(gamma: &[f64], q: &[Vec<f64>; 3], ups: &[f64], nq: usize) -> Vec<f64> {
    let mut out = gamma.to_vec();
    for g in 0..nq {
        for a in 0..nq {
            for b in 0..nq {
                let mut v = 0.0;
                if g == b {
                    v += ups[a];
                }
                if g == a {
                    v += ups[b];
                }
                for m in q {
                    let ua: f64 = (0..nq).map(|dd| ups[dd] * m[dd * nq + a]).sum();
                    let ub: f64 = (0..nq).map(|dd| ups[dd] * m[dd * nq + b]).sum();
                    v -= ua * m[g * nq + b] + ub * m[g * nq + a];
                }
                out[(g * nq + a) * nq + b] += v;
            }
        }
    }
    out
}

/// Tractor descent checks.
#[derive(Clone, Debug)]
pub struct TractorDescentReport {
    pub residuals: Residuals,
    /// Largest `|R^T(ξ, ·)|` over `ξ ∈ {i, j, k}`.
    pub curvature_along_d: f64,
}

/// `R^T(ξ,·)` for `ξ ∈ D`, path independence of transport inside leaves,
/// and consistency of a leafwise-parallel test tractor.
pub fn check_tractor_descent(model: &ModelGeometry, scale: &Scale<f64>, points: &[Vec<f64>], seed: u64) -> Result<TractorDescentReport> {
    let fields = model.triple.as_ref().ok_or_else(|| GeomError::Descent("model has no triple".into()))?;
    let d = scale.dim();
    let nn = d + 1;
    let mut res = Residuals::new(points.len());
    let mut curv = 0.0f64;
    for p in points {
        let f = tractor::tractor_curvature(scale, p)?;
        for xi in fields {
            let v = xi.values(p)?;
            for b in 0..d {
                let mut m = vec![0.0; nn * nn];
                for a in 0..d {
                    for (mi, fi) in m.iter_mut().zip(&f[a * d + b]) {
                        *mi += v[a] * fi;
                    }
                }
                curv = curv.max(linalg::max_abs(&m));
            }
        }
    }
    res.record("curvature_along_d", curv);
    let (Some(hopf), Some(amb)) = (model.hopf.as_ref(), model.ambient.as_ref()) else {
        return Ok(TractorDescentReport { residuals: res, curvature_along_d: curv });
    };
    let test = leafwise_parallel_tractor(model, amb, hopf, scale)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut tasks = Vec::new();
    for x in points {
        let Some((w1, x_end)) = fiber_neighbor(hopf, &model.chart, x, &mut rng) else {
            continue;
        };
        let Some((w2, x_mid)) = fiber_neighbor(hopf, &model.chart, x, &mut rng) else {
            continue;
        };
        let w3 = log_unit(Quat::exp_im(w1) * Quat::exp_im(w2).inv());
        if model.chart.contains(&hopf.act(Quat::exp_im(w3.scale(0.5)), &x_mid)) {
            tasks.push((x.clone(), w1, x_end, w2, x_mid, w3));
        }
    }
    let outcomes: Vec<Result<Option<[f64; 3]>>> = tasks
        .par_iter()
        .map(|(x, w1, x_end, w2, x_mid, w3)| {
            let transported = (|| -> Result<_> {
                Ok((
                    tractor::transport_matrix_converged(scale, &hopf.fiber_curve(x.clone(), *w1))?.0,
                    tractor::transport_matrix_converged(scale, &hopf.fiber_curve(x.clone(), *w2))?.0,
                    tractor::transport_matrix_converged(scale, &hopf.fiber_curve(x_mid.clone(), *w3))?.0,
                ))
            })();
            let (ta, tb1, tb2) = match transported {
                Ok(t) => t,
                Err(GeomError::Domain { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let tb = linalg::matmul(&tb2, &tb1, nn);
            let t0 = test.values(x)?;
            let t1 = test.values(x_end)?;
            let dt = tractor::tractor_derivative(&test, scale, x, 0)?;
            let mut along_max = 0.0f64;
            for xi in fields {
                let v = xi.values(x)?;
                let along: Vec<f64> = (0..nn).map(|c| (0..d).map(|a| v[a] * dt[a][c].value()).sum()).collect();
                along_max = along_max.max(linalg::max_abs(&along));
            }
            Ok(Some([
                linalg::max_abs_diff(&ta, &tb),
                linalg::max_abs_diff(&linalg::matvec(&ta, &t0), &t1),
                along_max,
            ]))
        })
        .collect();
    let mut pairs = 0;
    for o in outcomes {
        if let Some([path, transport, along]) = o? {
            pairs += 1;
            res.record("path_independence", path);
            res.record("leafwise_tractor_transport", transport);
            res.record("leafwise_tractor_parallel", along);
        }
    }
    res.n_points = res.n_points.max(pairs);
    Ok(TractorDescentReport { residuals: res, curvature_along_d: curv })
}

/// `log` of a unit quaternion as an imaginary quaternion.
pub fn log_unit(q: Quat) -> Quat {
    let im = q.im();
    let s = im.norm2().sqrt();
    if s == 0.0 {
        return Quat::ZERO;
    }
    im.scale(s.atan2(q.w) / s)
}

/// `t = f(π(x))·V` for a constant ambient vector `V`, expressed in the
/// model's scale; parallel along the leaves of `D`.
fn leafwise_parallel_tractor(model: &ModelGeometry, amb: &Ambient, hopf: &HopfProjection, scale: &Scale<f64>) -> Result<TractorField<f64>> {
    let nn = amb.rank();
    let v: Vec<f64> = (0..nn).map(|i| 0.3 + 0.1 * i as f64).collect();
    let flat = Scale::new(Connection::flat(model.chart.clone()), "flat-chart")?;
    let base = amb.flat_tractor(&flat, TractorKind::Standard, v);
    let ups = amb.einstein_upsilon(model.chart.clone());
    let einstein = model.metric.is_some();
    let hopf = hopf.clone();
    Ok(TractorField::new(scale, TractorKind::Standard, move |p, o| {
        let mut c = base.components(p, o)?;
        if einstein {
            let u = ups.evaluate_unchecked(p, o)?;
            let s = tractor::scale_change_matrix(u.comps());
            let d = nn - 1;
            let bottom = (0..nn).fold(Jet::zero(d, o), |acc, j| acc + &s[d * nn + j] * &c[j]);
            c[d] = bottom;
        }
        let y = hopf.project_jets(&Jet::seed(p, o));
        let f = (y[0].scale(0.7)).sin() + (&y[1] * &y[2]).scale(0.5) + 1.5;
        Ok(c.iter().map(|x| x * &f).collect())
    }))
}

/// Quotient-metric checks on the `ℍP^m` chart.
pub fn qk_quotient_check(model: &ModelGeometry, quotient_points: &[Vec<f64>], seed: u64) -> Result<Residuals> {
    let hopf = model.hopf.as_ref().ok_or_else(|| GeomError::Descent("model has no leaf projection".into()))?;
    let g = model.metric.as_ref().ok_or_else(|| GeomError::Precondition("quotient check needs the stratum metric".into()))?;
    let fields = model.triple.as_ref().expect("sphere-type models carry a triple");
    let scale = model.scale()?;
    let m = model.m;
    let nq = 4 * m;
    let qchart = quotient_chart(hopf, &model.chart)?;
    let gt = hopf.quotient_metric(qchart.clone());
    let mut res = Residuals::new(quotient_points.len());
    res.record("einstein", einstein_residual(&gt, (4 * m + 8) as f64, quotient_points)?);
    let lc = levi_civita(&gt)?;
    let std = standard_q(m);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for y in quotient_points {
        let x = hopf.section(y);
        let at = descend_at(hopf, &scale, fields, Some(g), &x)?;
        let g0 = gt.values(y)?;
        let lifted = at.metric.as_ref().expect("metric supplied");
        res.record("lift_metric", linalg::max_abs_diff(lifted, &g0));
        if let Some((_, x2)) = fiber_neighbor(hopf, &model.chart, &x, &mut rng) {
            let other = descend_at(hopf, &scale, fields, Some(g), &x2)?;
            let diff = linalg::max_abs_diff(other.metric.as_ref().unwrap(), lifted);
            if diff > 1e-3 {
                return Err(GeomError::Descent(format!("g̃ differs along the fiber by {diff:e}")));
            }
            res.record("fiber_consistency_metric", diff);
        }
        for a in &at.q {
            let ga = linalg::matmul(&g0, a, nq);
            let aga = linalg::matmul(&linalg::transpose(a, nq), &ga, nq);
            res.record("hermitian", linalg::max_abs_diff(&aga, &g0));
        }
        res.record("hopf_comparison", span_residual(&at.q, &std));
        let gamma = lc.gamma_at(y, 0)?.values();
        res.record("q_parallel", q_preservation(&gamma, &std, nq));
        res.record("descended_vs_levi_civita", linalg::max_abs_diff(&gamma, &at.gamma));
    }
    Ok(res)
}

/// Chart of `ℍP^m` around `π` of the model chart's centre.
pub fn quotient_chart(hopf: &HopfProjection, chart: &Chart) -> Result<Chart> {
    let center: Vec<f64> = chart.lo().iter().zip(chart.hi()).map(|(a, b)| 0.5 * (a + b)).collect();
    let half = 0.5 * (chart.hi()[0] - chart.lo()[0]);
    let y0 = hopf.project(&center);
    let r = half * 0.5;
    Chart::new("quaternionic-affine", y0.iter().map(|c| c - r).collect(), y0.iter().map(|c| c + r).collect())
}

/// Quaternionic Heisenberg algebra `ℍ^{p+q} ⊕ Im ℍ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HeisenbergAlgebra {
    pub p: usize,
    pub q: usize,
}

/// An element `(x, a)` with `x ∈ ℍ^{p+q}`, `a ∈ Im ℍ`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeisenbergElement {
    pub x: Vec<Quat>,
    pub a: Quat,
}

impl HeisenbergAlgebra {
    pub fn rank(&self) -> usize {
        self.p + self.q
    }

    /// `⟨x,y⟩ = Σ_{i<p} x̄_i y_i − Σ_{i≥p} x̄_i y_i`.
    pub fn form(&self, x: &[Quat], y: &[Quat]) -> Quat {
        x.iter().zip(y).enumerate().fold(Quat::ZERO, |acc, (i, (a, b))| {
            let t = a.conj() * *b;
            if i < self.p {
                acc + t
            } else {
                acc - t
            }
        })
    }

    pub fn bracket(&self, u: &HeisenbergElement, v: &HeisenbergElement) -> HeisenbergElement {
        HeisenbergElement { x: vec![Quat::ZERO; self.rank()], a: self.form(&u.x, &v.x).im() }
    }

    /// `c[u][α][β]`: `Im ℍ` component `u` of `[e_α, e_β]` on the real basis
    /// `e_{(b,s)} = s·ε_b`, `s ∈ (1, i, j, k)`.
    pub fn structure_constants(&self) -> [Vec<f64>; 3] {
        let n = 4 * self.rank();
        let basis = |al: usize| {
            let mut x = vec![Quat::ZERO; self.rank()];
            x[al / 4] = [Quat::ONE, Quat::I, Quat::J, Quat::K][al % 4];
            x
        };
        let mut c = [vec![0.0; n * n], vec![0.0; n * n], vec![0.0; n * n]];
        for al in 0..n {
            for be in 0..n {
                let f = self.form(&basis(al), &basis(be));
                c[0][al * n + be] = f.x;
                c[1][al * n + be] = f.y;
                c[2][al * n + be] = f.z;
            }
        }
        c
    }
}

/// `[(x,a),(y,b)] = (0, Im⟨x,y⟩)`.
pub fn heisenberg_bracket(p: usize, q: usize, x: &[Quat], a: Quat, y: &[Quat], b: Quat) -> HeisenbergElement {
    let alg = HeisenbergAlgebra { p, q };
    alg.bracket(&HeisenbergElement { x: x.to_vec(), a }, &HeisenbergElement { x: y.to_vec(), a: b })
}

/// Result of matching a Levi bracket to the Heisenberg model.
#[derive(Clone, Debug)]
pub struct HeisenbergFit {
    /// Relative residual `‖λ R C − C_H‖ / ‖C_H‖`.
    pub residual: f64,
    pub scale: f64,
    pub rotation: [[f64; 3]; 3],
    pub conjugated_frame: bool,
}

/// Procrustes fit of `λ R` (`R ∈ O(3)`) taking `c` to `target`, trying the
/// identity and quaternionic conjugation as frame maps on the `ℍ` factor.
pub fn fit_heisenberg(c: &[Vec<f64>; 3], target: &[Vec<f64>; 3], n: usize) -> HeisenbergFit {
    let conj_sign = |al: usize| if al % 4 == 0 { 1.0 } else { -1.0 };
    let mut best: Option<HeisenbergFit> = None;
    for conj in [false, true] {
        let cc: Vec<Vec<f64>> = c
            .iter()
            .map(|m| {
                (0..n * n)
                    .map(|i| {
                        let (a, b) = (i / n, i % n);
                        if conj {
                            m[i] * conj_sign(a) * conj_sign(b)
                        } else {
                            m[i]
                        }
                    })
                    .collect()
            })
            .collect();
        let mut mm = Matrix3::<f64>::zeros();
        for r in 0..3 {
            for s in 0..3 {
                mm[(r, s)] = target[r].iter().zip(&cc[s]).map(|(x, y)| x * y).sum();
            }
        }
        let svd = mm.svd(true, true);
        let rot = svd.u.unwrap() * svd.v_t.unwrap();
        let norm_c: f64 = cc.iter().flatten().map(|x| x * x).sum();
        let lam = svd.singular_values.sum() / norm_c.max(1e-300);
        let mut err = 0.0;
        let mut nt = 0.0;
        for r in 0..3 {
            for i in 0..n * n {
                let v: f64 = (0..3).map(|s| rot[(r, s)] * cc[s][i]).sum::<f64>() * lam;
                err += (v - target[r][i]).powi(2);
                nt += target[r][i].powi(2);
            }
        }
        let residual = (err / nt.max(1e-300)).sqrt();
        let mut rotation = [[0.0; 3]; 3];
        for r in 0..3 {
            for s in 0..3 {
                rotation[r][s] = rot[(r, s)];
            }
        }
        if best.as_ref().is_none_or(|b| residual < b.residual) {
            best = Some(HeisenbergFit { residual, scale: lam, rotation, conjugated_frame: conj });
        }
    }
    best.expect("two candidates")
}

/// Checks on `M₀` for the flat model.
#[derive(Clone, Debug)]
pub struct M0Report {
    pub crossings: usize,
    pub max_root_tau: f64,
    pub min_gradient: f64,
    pub conformal_signature: (usize, usize),
    pub residuals: Residuals,
    /// `(p−1, q−1)` quaternionic blocks of the Levi frame.
    pub levi_signature: Option<(usize, usize)>,
    pub heisenberg_fit: Option<HeisenbergFit>,
    pub contact_corank: Option<usize>,
    /// Largest component of `L_u v` off `H̃₀` for `v ∈ H̃₀`.
    pub q_invariance: Option<f64>,
}

/// Smooth separating hypersurface, null orthogonal Killing fields, and the
/// Levi bracket of the quotient contact distribution.
pub fn m0_checks(model: &ModelGeometry, lines: usize, seed: u64) -> Result<M0Report> {
    let amb = model.ambient.as_ref().ok_or_else(|| GeomError::Precondition("M₀ checks need flat-model data".into()))?;
    if amb.p < 1 || amb.q < 1 {
        return Err(GeomError::Precondition("M₀ is empty unless p, q ≥ 1".into()));
    }
    let flat = Scale::new(Connection::flat(model.chart.clone()), "flat-chart")?;
    let h = amb.flat_tractor(&flat, TractorKind::Bilinear, amb.h.clone());
    let strat = stratify(&h, &grid_lines(&model.chart, lines, 41, seed), None)?;
    if strat.crossings.is_empty() {
        return Err(GeomError::Precondition("no sign change of τ on the grid".into()));
    }
    let d = amb.dim();
    let nn = d + 1;
    let fields = amb.killing_triple(&model.chart);
    let mut res = Residuals::new(strat.crossings.len());
    let mut sig = None;
    let mut min_grad = f64::INFINITY;
    for c in &strat.crossings {
        let x = &c.point;
        min_grad = min_grad.min(c.gradient_norm);
        let tj = amb.tau_jet(&Jet::seed(x, 1));
        let grad: Vec<f64> = (0..d).map(|a| tj.d1(a)).collect();
        let tangent = linalg::null_space(&grad, 1, d, 1e-9);
        let k = tangent.len();
        let mut form = vec![0.0; k * k];
        for (r, v) in tangent.iter().enumerate() {
            for (s, w) in tangent.iter().enumerate() {
                form[r * k + s] = (0..d).map(|a| amb.h[a * nn + a] * v[a] * w[a]).sum();
            }
        }
        let (pos, neg, _) = linalg::signature(&form, k, 1e-9);
        match sig {
            None => sig = Some((pos, neg)),
            Some(s) if s != (pos, neg) => return Err(GeomError::Degenerate { point: x.clone(), condition: f64::NAN }),
            _ => {}
        }
        let y = amb.lift(x);
        let hy = linalg::matvec(&amb.h, &y);
        let vals: Vec<Vec<f64>> = fields.iter().map(|f| f.values(x)).collect::<Result<_>>()?;
        for (u, l) in amb.triple.iter().enumerate() {
            let ly = linalg::matvec(l, &y);
            res.record("h_x_ix", ly.iter().zip(&hy).map(|(a, b)| a * b).sum::<f64>().abs());
            for (v, w) in vals.iter().enumerate().skip(u) {
                let gc: f64 = (0..d).map(|a| amb.h[a * nn + a] * vals[u][a] * w[a]).sum();
                let name = if u == v { "null" } else { "orthogonal" };
                res.record(name, gc.abs());
            }
        }
    }
    let mut report = M0Report {
        crossings: strat.crossings.len(),
        max_root_tau: strat.max_root_tau(),
        min_gradient: min_grad,
        conformal_signature: sig.unwrap_or((0, 0)),
        residuals: res,
        levi_signature: None,
        heisenberg_fit: None,
        contact_corank: None,
        q_invariance: None,
    };
    if amb.m >= 2 {
        let hopf = HopfProjection { ambient: amb.clone() };
        let y0 = hopf.project(&strat.crossings[0].point);
        let (corank, lsig, fit, inv) = levi_bracket_fit(amb, &y0)?;
        report.contact_corank = Some(corank);
        report.q_invariance = Some(inv);
        report.levi_signature = Some(lsig);
        report.heisenberg_fit = Some(fit);
    }
    Ok(report)
}

/// `θ_u(y)_a = h((1, y), (0, u·e_a))` for `u ∈ (1, i, j, k)` as order-1 jets.
fn contact_forms(amb: &Ambient, y: &[f64]) -> Vec<Vec<Jet<f64>>> {
    let m = amb.m;
    let nq = 4 * m;
    let yj = Jet::seed(y, 1);
    let sign = |b: usize| if b < amb.p { 1.0 } else { -1.0 };
    [Quat::ONE, Quat::I, Quat::J, Quat::K]
        .iter()
        .map(|u| {
            let l = left_mult(*u, m);
            (0..nq)
                .map(|a| {
                    // (0, u e_a) paired with (1, y): Σ_c sign · y_c (L_u)_{c a}
                    let mut acc = Jet::zero(nq, 1);
                    for c in 0..nq {
                        let v = l[c * nq + a];
                        if v != 0.0 {
                            acc.add_scaled(&yj[c], v * sign(c / 4 + 1));
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

fn levi_bracket_fit(amb: &Ambient, y0: &[f64]) -> Result<(usize, (usize, usize), HeisenbergFit, f64)> {
    let m = amb.m;
    let nq = 4 * m;
    let theta = contact_forms(amb, y0);
    let rows: Vec<f64> = theta.iter().flat_map(|t| t.iter().map(Jet::value)).collect();
    let tangent = linalg::null_space(&rows[..nq], 1, nq, 1e-9);
    let h0 = linalg::null_space(&rows, 4, nq, 1e-9);
    let corank = tangent.len() - h0.len();
    let sign = |b: usize| if b < amb.p { 1.0 } else { -1.0 };
    let ht = |v: &[f64], w: &[f64]| -> f64 { (0..nq).map(|a| sign(a / 4 + 1) * v[a] * w[a]).sum() };
    let lq = [Quat::ONE, Quat::I, Quat::J, Quat::K].map(|u| left_mult(u, m));
    let mut invariance = 0.0f64;
    for v in &h0 {
        for l in &lq[1..] {
            let mut w = linalg::matvec(l, v);
            for e in &h0 {
                let c: f64 = w.iter().zip(e).map(|(a, b)| a * b).sum();
                for (x, y) in w.iter_mut().zip(e) {
                    *x -= c * y;
                }
            }
            invariance = invariance.max(linalg::max_abs(&w));
        }
    }
    // Quaternionic Gram–Schmidt of H̃₀ with respect to h̃.
    let mut blocks: Vec<(f64, [Vec<f64>; 4])> = Vec::new();
    let mut pool = h0.clone();
    while let Some(mut v) = pool.pop() {
        for (s, f) in &blocks {
            for e in f {
                let c = ht(&v, e) / *s;
                for (x, y) in v.iter_mut().zip(e) {
                    *x -= c * y;
                }
            }
        }
        let n = ht(&v, &v);
        if n.abs() < 1e-8 {
            continue;
        }
        let scale = 1.0 / n.abs().sqrt();
        let v: Vec<f64> = v.iter().map(|x| x * scale).collect();
        let frame = [0, 1, 2, 3].map(|s| linalg::matvec(&lq[s], &v));
        blocks.push((n.signum(), frame));
    }
    blocks.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let pos = blocks.iter().filter(|b| b.0 > 0.0).count();
    let lsig = (pos, blocks.len() - pos);
    let frame: Vec<Vec<f64>> = blocks.iter().flat_map(|b| b.1.clone()).collect();
    let nf = frame.len();
    // Levi bracket component u: −dθ_u(X, Y).
    let levi: [Vec<f64>; 3] = [1, 2, 3].map(|u| {
        let mut c = vec![0.0; nf * nf];
        for al in 0..nf {
            for be in 0..nf {
                let mut s = 0.0;
                for a in 0..nq {
                    for b in 0..nq {
                        let dth = theta[u][b].d1(a) - theta[u][a].d1(b);
                        s -= dth * frame[al][a] * frame[be][b];
                    }
                }
                c[al * nf + be] = s;
            }
        }
        c
    });
    let target = HeisenbergAlgebra { p: lsig.0, q: lsig.1 }.structure_constants();
    Ok((corank, lsig, fit_heisenberg(&levi, &target, nf), invariance))
}

/// Scale changed by `d(f∘π)`, adapted whenever the input is.
pub fn fiber_constant_change(model: &ModelGeometry, scale: &Scale<f64>) -> Result<(Scale<f64>, TensorField<f64>)> {
    let hopf = model.hopf.clone().ok_or_else(|| GeomError::Descent("model has no leaf projection".into()))?;
    let ups = TensorField::gradient(model.chart.clone(), move |x| {
        let y = hopf.project_jets(x);
        y[0].sin().scale(0.3) + (&y[1] * &y[2]).scale(0.2)
    });
    let conn = projective_change(scale.connection(), &ups)?;
    Ok((Scale::new(conn, format!("{}+dfπ", scale.label()))?, ups))
}

/// `Υ̃ = df` on the quotient chart for the function used by
/// [`fiber_constant_change`].
pub fn quotient_upsilon(y: &[f64]) -> Vec<f64> {
    let mut u = vec![0.0; y.len()];
    u[0] = 0.3 * y[0].cos();
    u[1] = 0.2 * y[2];
    u[2] = 0.2 * y[1];
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_flat_projective, make_round_sphere};
    use crate::tensor::Variance::Down;

    #[test]
    fn heisenberg_hand_value() {
        let r = heisenberg_bracket(1, 0, &[Quat::ONE], Quat::ZERO, &[Quat::I], Quat::ZERO);
        assert_eq!(r.a, Quat::I);
        let x = [Quat::new(0.3, 1.0, -2.0, 0.5)];
        assert!(heisenberg_bracket(1, 0, &x, Quat::J, &x, Quat::K).a.norm2() < 1e-30);
    }

    #[test]
    fn definite_flat_model_is_one_stratum() {
        let model = make_flat_projective(1, 2, 0).unwrap();
        let amb = model.ambient.as_ref().unwrap();
        let flat = model.scale().unwrap();
        let h = amb.flat_tractor(&flat, TractorKind::Bilinear, amb.h.clone());
        let s = stratify(&h, &grid_lines(&model.chart, 6, 11, 1), None).unwrap();
        assert_eq!(s.counts.1 + s.counts.2, 0);
    }

    #[test]
    fn indefinite_flat_model_matches_quadratic_form() {
        let model = make_flat_projective(1, 1, 1).unwrap();
        let amb = model.ambient.clone().unwrap();
        let flat = model.scale().unwrap();
        let h = amb.flat_tractor(&flat, TractorKind::Bilinear, amb.h.clone());
        let s = stratify(&h, &grid_lines(&model.chart, 14, 21, 2), None).unwrap();
        assert!(s.counts.0 > 0 && s.counts.2 > 0);
        assert_eq!(s.mismatches(&|x| amb.tau(x)), 0);
        assert!(!s.crossings.is_empty() && s.max_root_tau() <= 1e-10);
        assert_eq!(s.unseparated, 0);
    }

    #[test]
    fn sphere_descends_to_standard_structure() {
        let model = make_round_sphere(1, 2, 0).unwrap();
        let scale = model.scale().unwrap();
        let pts = model.chart.sample_points(3, 8);
        let res = descend_quaternionic(&model, &scale, &pts, 3).unwrap();
        assert!(res.max_residual() < 1e-8, "{res:?}");
    }

    #[test]
    fn adapted_scale_rejects_divergent_change() {
        let model = make_round_sphere(1, 2, 0).unwrap();
        let scale = model.scale().unwrap();
        let fields = model.triple.clone().unwrap();
        let pts = model.chart.sample_points(3, 9);
        let (_, res) = check_adapted_scale(&scale, &fields, &pts, 1e-8).unwrap();
        assert!(res.max_residual() < 1e-8, "{res:?}");
        let ups = TensorField::constant(model.chart.clone(), vec![Down], 0.0, {
            let mut v = vec![0.0; 7];
            v[0] = 0.5;
            v
        });
        let bad = Scale::new(projective_change(scale.connection(), &ups).unwrap(), "shifted").unwrap();
        assert!(matches!(check_adapted_scale(&bad, &fields, &pts, 1e-8), Err(GeomError::NotAdapted { .. })));
    }
}
