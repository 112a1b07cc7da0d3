//! Sasaki and 3-Sasaki structures, metric cones, and the parallel tractor
//! hyperkähler structure of a 3-Sasaki metric.

use crate::affine::{levi_civita, Connection};
use crate::chart::Chart;
use crate::check::Residuals;
use crate::error::{GeomError, Result};
use crate::field::TensorField;
use crate::jet::Jet;
use crate::linalg;
use crate::orientation::orientation_sign;
use crate::tensor::TensorJet;
use crate::tensor::Variance::{Down, Up};
use crate::tractor::{splitting_operator, HkValues, Scale, TractorField, TractorKind, TractorMetric};

/// A metric with a candidate 3-Sasaki triple.
#[derive(Clone, Debug)]
pub struct SasakiTriple {
    pub g: TensorField<f64>,
    pub i: TensorField<f64>,
    pub j: TensorField<f64>,
    pub k: TensorField<f64>,
    /// `(4p − 1, 4q)`.
    pub signature: (usize, usize),
}

impl SasakiTriple {
    pub fn fields(&self) -> [&TensorField<f64>; 3] {
        [&self.i, &self.j, &self.k]
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// The same data with `j` and `k` exchanged.
    pub fn swapped_jk(&self) -> Self {
        Self { j: self.k.clone(), k: self.j.clone(), ..self.clone() }
    }
}

/// Pointwise data of a vector field in a scale: value, lowered value,
/// `∇_a ξ^b` at `[a*d+b]`, and `∇_a∇_b ξ^c` at `[(a*d+b)*d+c]`.
struct FieldAt {
    val: Vec<f64>,
    low: Vec<f64>,
    nab: Vec<f64>,
    nab2: Vec<f64>,
}

fn field_at(conn: &Connection<f64>, g0: &[f64], xi: &TensorField<f64>, p: &[f64]) -> Result<FieldAt> {
    let d = xi.dim();
    let x2 = xi.evaluate(p, 2)?;
    let n1 = conn.nabla(p, &x2, 0.0)?;
    let n2 = conn.nabla(p, &n1, 0.0)?;
    let val = x2.values();
    let low = (0..d).map(|a| (0..d).map(|b| g0[a * d + b] * val[b]).sum()).collect();
    Ok(FieldAt { val, low, nab: n1.values(), nab2: n2.values() })
}

fn metric_values(g: &TensorField<f64>, p: &[f64]) -> Result<Vec<f64>> {
    g.values(p)
}

/// Max of `|∇_{(a}ξ_{b)}|` over the points.
pub fn check_killing(g: &TensorField<f64>, xi: &TensorField<f64>, points: &[Vec<f64>]) -> Result<f64> {
    let conn = levi_civita(g)?;
    let d = g.dim();
    let mut r = 0.0f64;
    for p in points {
        let g0 = metric_values(g, p)?;
        let f = field_at(&conn, &g0, xi, p)?;
        for a in 0..d {
            for b in 0..d {
                let lab: f64 = (0..d).map(|c| g0[b * d + c] * f.nab[a * d + c]).sum();
                let lba: f64 = (0..d).map(|c| g0[a * d + c] * f.nab[b * d + c]).sum();
                r = r.max((0.5 * (lab + lba)).abs());
            }
        }
    }
    Ok(r)
}

/// Sasaki conditions for one field.
#[derive(Clone, Debug)]
pub struct SasakiReport {
    pub residuals: Residuals,
    /// Largest `g(k,k)` seen.
    pub max_norm: f64,
}

/// `g(k,k) = 1` and `∇_a∇_b k^c = −g_{ab}k^c + δ^c_a k_b`, plus the Killing
/// residual.
pub fn check_sasaki(g: &TensorField<f64>, k: &TensorField<f64>, points: &[Vec<f64>]) -> Result<SasakiReport> {
    let conn = levi_civita(g)?;
    let d = g.dim();
    let mut res = Residuals::new(points.len());
    let mut max_norm = f64::NEG_INFINITY;
    for p in points {
        let g0 = metric_values(g, p)?;
        let f = field_at(&conn, &g0, k, p)?;
        let norm: f64 = (0..d).map(|a| f.low[a] * f.val[a]).sum();
        max_norm = max_norm.max(norm);
        res.record("unit_length", (norm - 1.0).abs());
        let mut kill = 0.0f64;
        let mut second = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                let lab: f64 = (0..d).map(|c| g0[b * d + c] * f.nab[a * d + c]).sum();
                let lba: f64 = (0..d).map(|c| g0[a * d + c] * f.nab[b * d + c]).sum();
                kill = kill.max((0.5 * (lab + lba)).abs());
                for c in 0..d {
                    let want = -g0[a * d + b] * f.val[c] + if c == a { f.low[b] } else { 0.0 };
                    second = second.max((f.nab2[(a * d + b) * d + c] - want).abs());
                }
            }
        }
        res.record("killing", kill);
        res.record("second_derivative", second);
    }
    Ok(SasakiReport { residuals: res, max_norm })
}

const CYCLIC: [(usize, usize, usize); 3] = [(0, 1, 2), (1, 2, 0), (2, 0, 1)];
const NAMES: [&str; 3] = ["i", "j", "k"];

/// Every 3-Sasaki axiom and identity, with cyclic permutations, and the
/// Einstein condition `Ric = (dim − 1) g`.
pub fn check_3sasaki(t: &SasakiTriple, points: &[Vec<f64>]) -> Result<Residuals> {
    let conn = levi_civita(&t.g)?;
    let d = t.dim();
    let mut res = Residuals::new(points.len());
    for p in points {
        let g0 = metric_values(&t.g, p)?;
        let fs = [
            field_at(&conn, &g0, &t.i, p)?,
            field_at(&conn, &g0, &t.j, p)?,
            field_at(&conn, &g0, &t.k, p)?,
        ];
        for (u, f) in fs.iter().enumerate() {
            let nm = NAMES[u];
            let norm: f64 = (0..d).map(|a| f.low[a] * f.val[a]).sum();
            res.record(&format!("unit_length_{nm}"), (norm - 1.0).abs());
            let mut kill = 0.0f64;
            let mut second = 0.0f64;
            let mut ident_b = 0.0f64;
            for a in 0..d {
                for b in 0..d {
                    let lab: f64 = (0..d).map(|c| g0[b * d + c] * f.nab[a * d + c]).sum();
                    let lba: f64 = (0..d).map(|c| g0[a * d + c] * f.nab[b * d + c]).sum();
                    kill = kill.max((0.5 * (lab + lba)).abs());
                    for c in 0..d {
                        let want = -g0[a * d + b] * f.val[c] + if c == a { f.low[b] } else { 0.0 };
                        second = second.max((f.nab2[(a * d + b) * d + c] - want).abs());
                    }
                }
                // ∇_b i^c ∇_a i^b − i_a i^c = −δ_a^c
                for c in 0..d {
                    let s: f64 = (0..d).map(|b| f.nab[b * d + c] * f.nab[a * d + b]).sum();
                    let want = if a == c { -1.0 } else { 0.0 };
                    ident_b = ident_b.max((s - f.low[a] * f.val[c] - want).abs());
                }
            }
            res.record(&format!("killing_{nm}"), kill);
            res.record(&format!("sasaki_second_derivative_{nm}"), second);
            res.record(&format!("identity_b_{nm}"), ident_b);
        }
        for &(u, v, w) in &CYCLIC {
            let (fu, fv, fw) = (&fs[u], &fs[v], &fs[w]);
            let tag = format!("{}{}", NAMES[u], NAMES[v]);
            let orth: f64 = (0..d).map(|a| fu.low[a] * fv.val[a]).sum();
            res.record(&format!("orthogonal_{tag}"), orth.abs());
            let mut bracket = 0.0f64;
            let mut ident_a = 0.0f64;
            let mut ident_c = 0.0f64;
            for b in 0..d {
                let u_dv: f64 = (0..d).map(|a| fu.val[a] * fv.nab[a * d + b]).sum();
                let v_du: f64 = (0..d).map(|a| fv.val[a] * fu.nab[a * d + b]).sum();
                bracket = bracket.max((u_dv - v_du + 2.0 * fw.val[b]).abs());
                ident_a = ident_a.max((u_dv + fw.val[b]).abs()).max((v_du - fw.val[b]).abs());
            }
            for a in 0..d {
                for c in 0..d {
                    let s1: f64 = (0..d).map(|b| fu.nab[b * d + c] * fv.nab[a * d + b]).sum::<f64>() - fv.low[a] * fu.val[c];
                    let s2: f64 = -(0..d).map(|b| fv.nab[b * d + c] * fu.nab[a * d + b]).sum::<f64>() + fu.low[a] * fv.val[c];
                    let want = fw.nab[a * d + c];
                    ident_c = ident_c.max((s1 - want).abs()).max((s2 - want).abs());
                }
            }
            res.record(&format!("bracket_{tag}"), bracket);
            res.record(&format!("identity_a_{tag}"), ident_a);
            res.record(&format!("identity_c_{tag}"), ident_c);
        }
        let ric = conn.curvature_at(p, 0)?.ric.values();
        let c = (d - 1) as f64;
        let e = ric.iter().zip(&g0).fold(0.0f64, |m, (r, g)| m.max((r - c * g).abs()));
        res.record("einstein", e);
    }
    Ok(res)
}

/// `Ric − λ g` for a metric.
pub fn einstein_residual(g: &TensorField<f64>, lambda: f64, points: &[Vec<f64>]) -> Result<f64> {
    let conn = levi_civita(g)?;
    let mut r = 0.0f64;
    for p in points {
        let ric = conn.curvature_at(p, 0)?.ric.values();
        let g0 = g.values(p)?;
        r = ric.iter().zip(&g0).fold(r, |m, (a, b)| m.max((a - lambda * b).abs()));
    }
    Ok(r)
}

/// Signature of the metric at `p`.
pub fn metric_signature(g: &TensorField<f64>, p: &[f64]) -> Result<(usize, usize)> {
    let d = g.dim();
    let (pos, neg, zero) = linalg::signature(&g.values(p)?, d, 1e-9);
    if zero > 0 {
        return Err(GeomError::Degenerate { point: p.to_vec(), condition: f64::INFINITY });
    }
    Ok((pos, neg))
}

/// Metric cone `dt² + t²g` over a chart, coordinates `(x, t)`.
#[derive(Clone, Debug)]
pub struct ConeGeometry {
    pub base: Chart,
    pub t_range: (f64, f64),
    pub chart: Chart,
    pub metric: TensorField<f64>,
    /// `I, J, K` as `(1,1)` fields indexed `[a][b] = A^a_b`.
    pub endos: [TensorField<f64>; 3],
}

/// Builds the cone and its endomorphisms: on `v ∈ TM`,
/// `K(v) = ∇_v k − g(v,k) t∂_t`, and `K(∂_t) = k/t`.
pub fn cone_build(t: &SasakiTriple, t_range: (f64, f64)) -> Result<ConeGeometry> {
    if !(t_range.0 > 0.0 && t_range.1 > t_range.0) {
        return Err(GeomError::Domain { point: vec![t_range.0, t_range.1] });
    }
    let base = t.g.chart().clone();
    let d = base.dim();
    let lo: Vec<f64> = base.lo().iter().copied().chain([t_range.0]).collect();
    let hi: Vec<f64> = base.hi().iter().copied().chain([t_range.1]).collect();
    let chart = Chart::new(format!("cone({})", base.name()), lo, hi)?;
    let map: Vec<usize> = (0..d).collect();
    let g = t.g.clone();
    let gm = g.clone();
    let map_m = map.clone();
    let metric = TensorField::derived(chart.clone(), vec![Down, Down], 0.0, g.max_order(), move |p, o| {
        let gj = gm.evaluate_unchecked(&p[..d], o)?;
        let tt = Jet::variable(d + 1, o, p[d], d);
        let t2 = &tt * &tt;
        let nn = d + 1;
        let mut c = vec![Jet::zero(d + 1, o); nn * nn];
        for a in 0..d {
            for b in 0..d {
                c[a * nn + b] = &gj.at(&[a, b]).embed(d + 1, &map_m) * &t2;
            }
        }
        c[d * nn + d] = Jet::constant(d + 1, o, 1.0);
        TensorJet::new(d + 1, vec![Down, Down], c)
    });
    let conn = levi_civita(&g)?;
    let endos = t.fields().map(|xi| {
        let (xi, conn, g, map) = (xi.clone(), conn.clone(), g.clone(), map.clone());
        TensorField::derived(chart.clone(), vec![Up, Down], 0.0, 2, move |p, o| {
            let x = &p[..d];
            let xj = xi.evaluate_unchecked(x, o + 1)?;
            let nab = crate::affine::covariant_derivative(&xj, &conn.gamma().evaluate_unchecked(x, o)?, 0.0);
            let gj = g.evaluate_unchecked(x, o)?;
            let e = |j: &Jet<f64>| j.embed(d + 1, &map);
            let tt = Jet::variable(d + 1, o, p[d], d);
            let it = tt.recip();
            let nn = d + 1;
            let mut c = vec![Jet::zero(d + 1, o); nn * nn];
            for a in 0..d {
                for b in 0..d {
                    c[a * nn + b] = e(nab.at(&[b, a]));
                }
                c[a * nn + d] = &e(&xj.at(&[a]).truncate(o)) * &it;
            }
            for b in 0..d {
                let mut low = Jet::zero(d, o);
                for a in 0..d {
                    low = low + gj.at(&[b, a]) * &xj.at(&[a]).truncate(o);
                }
                c[d * nn + b] = -(&e(&low) * &tt);
            }
            TensorJet::new(d + 1, vec![Up, Down], c)
        })
    });
    Ok(ConeGeometry { base, t_range, chart, metric, endos })
}

/// Cone checks.
#[derive(Clone, Debug, Default)]
pub struct ConeReport {
    pub square: f64,
    pub quaternion: f64,
    pub hermitian: f64,
    pub parallel: f64,
    pub ricci: f64,
    pub riemann: f64,
    pub n_points: usize,
}

impl ConeReport {
    pub fn residuals(&self) -> Residuals {
        let mut r = Residuals::new(self.n_points);
        for (n, v) in [
            ("square", self.square),
            ("quaternion", self.quaternion),
            ("hermitian", self.hermitian),
            ("parallel", self.parallel),
            ("ricci", self.ricci),
        ] {
            r.record(n, v);
        }
        r
    }
}

pub fn check_cone(cone: &ConeGeometry, points: &[Vec<f64>]) -> Result<ConeReport> {
    let conn = levi_civita(&cone.metric)?;
    let nn = cone.chart.dim();
    let mut rep = ConeReport { n_points: points.len(), ..Default::default() };
    for p in points {
        let g0 = cone.metric.values(p)?;
        let mats: Vec<Vec<f64>> = cone.endos.iter().map(|e| e.values(p)).collect::<Result<_>>()?;
        let id = linalg::identity(nn);
        for (u, m) in mats.iter().enumerate() {
            let sq = linalg::matmul(m, m, nn);
            rep.square = rep.square.max(sq.iter().zip(&id).fold(0.0f64, |a, (x, y)| a.max((x + y).abs())));
            // g(Kv, Kw) = g(v, w)  ⇔  Kᵀ g K = g
            let gk = linalg::matmul(&g0, m, nn);
            let kgk = linalg::matmul(&linalg::transpose(m, nn), &gk, nn);
            rep.hermitian = rep.hermitian.max(linalg::max_abs_diff(&kgk, &g0));
            let ej = cone.endos[u].evaluate(p, 1)?;
            let nab = conn.nabla(p, &ej, 0.0)?;
            rep.parallel = rep.parallel.max(nab.max_abs_value());
        }
        let ij = linalg::matmul(&mats[0], &mats[1], nn);
        rep.quaternion = rep.quaternion.max(linalg::max_abs_diff(&ij, &mats[2]));
        let cj = conn.curvature_at(p, 0)?;
        rep.ricci = rep.ricci.max(cj.ric.max_abs_value());
        rep.riemann = rep.riemann.max(cj.r.max_abs_value());
    }
    Ok(rep)
}

/// `max |K(∂_t) − k|` at `t = 1` over base points.
pub fn cone_restriction_residual(cone: &ConeGeometry, k: &TensorField<f64>, base_points: &[Vec<f64>]) -> Result<f64> {
    let nn = cone.chart.dim();
    let d = nn - 1;
    let mut r = 0.0f64;
    for x in base_points {
        let p: Vec<f64> = x.iter().copied().chain([1.0]).collect();
        let m = cone.endos[2].values(&p)?;
        let kv = k.values(x)?;
        for a in 0..d {
            r = r.max((m[a * nn + d] - kv[a]).abs());
        }
        r = r.max(m[d * nn + d].abs());
    }
    Ok(r)
}

/// Parallel tractor hyperkähler data in the Einstein scale.
#[derive(Clone, Debug)]
pub struct TractorHK {
    pub scale: Scale<f64>,
    pub h: TractorMetric<f64>,
    pub i: TractorField<f64>,
    pub j: TractorField<f64>,
    pub k: TractorField<f64>,
    /// `(4p, 4q)`.
    pub signature: (usize, usize),
    /// Sign relating the parallel volume form to the frame determinant.
    pub volume_sign: f64,
}

impl TractorHK {
    pub fn values(&self, p: &[f64]) -> Result<HkValues> {
        Ok(HkValues { h: self.h.values(p)?, i: self.i.values(p)?, j: self.j.values(p)?, k: self.k.values(p)? })
    }

    /// Max parallelism residual of `h, I, J, K` at `p`.
    pub fn parallel_residual(&self, p: &[f64]) -> Result<f64> {
        let mut r = 0.0f64;
        for t in [&self.h, &self.i, &self.j, &self.k] {
            r = r.max(crate::tractor::parallel_residual(t, &self.scale, p)?);
        }
        Ok(r)
    }

    pub fn with_volume_sign(mut self, s: f64) -> Self {
        self.volume_sign = s;
        self
    }
}

/// Tractor metric `s²·diag(g, 1)` with `s² = |det g|^{−1/(n+2)}` in the
/// scale of `g`'s Levi-Civita connection.
pub fn einstein_tractor_metric(g: &TensorField<f64>, scale: &Scale<f64>) -> TractorMetric<f64> {
    let g = g.clone();
    TractorField::new(scale, TractorKind::Bilinear, move |p, o| {
        let d = g.dim();
        let nn = d + 1;
        let gj = g.evaluate(p, o)?;
        let det = linalg::jet_determinant(gj.comps(), d);
        let ad = if det.value() < 0.0 { -det } else { det };
        let s2 = ad.powf(-1.0 / nn as f64);
        let mut c = vec![Jet::zero(d, o); nn * nn];
        for a in 0..d {
            for b in 0..d {
                c[a * nn + b] = gj.at(&[a, b]) * &s2;
            }
        }
        c[d * nn + d] = s2;
        Ok(c)
    })
}

/// `I = L^A(i)`, `J = L^A(j)`, `K = L^A(k)` and `h` in the Einstein scale.
pub fn build_tractor_hk(t: &SasakiTriple) -> Result<TractorHK> {
    let pts = t.g.chart().sample_points(4, 23);
    let e = einstein_residual(&t.g, (t.dim() - 1) as f64, &pts)?;
    if e > 1e-6 {
        return Err(GeomError::Precondition(format!("metric is not Einstein with constant dim−1 ({e:e})")));
    }
    let scale = Scale::new(levi_civita(&t.g)?, "einstein")?;
    let i = splitting_operator(&t.i, &scale)?;
    let j = splitting_operator(&t.j, &scale)?;
    let k = splitting_operator(&t.k, &scale)?;
    let h = einstein_tractor_metric(&t.g, &scale);
    let nn = scale.rank();
    let (pos, neg, _) = linalg::signature(&h.values(&pts[0])?, nn, 1e-9);
    Ok(TractorHK { scale, h, i, j, k, signature: (pos, neg), volume_sign: 1.0 })
}

/// Algebraic and parallelism checks of a tractor hyperkähler structure.
pub fn check_tractor_hk(hk: &TractorHK, points: &[Vec<f64>]) -> Result<Residuals> {
    let nn = hk.scale.rank();
    let mut res = Residuals::new(points.len());
    let id = linalg::identity(nn);
    for p in points {
        let v = hk.values(p)?;
        let ms = [&v.i, &v.j, &v.k];
        for (u, m) in ms.iter().enumerate() {
            let sq = linalg::matmul(m, m, nn);
            res.record(&format!("square_{}", NAMES[u]), sq.iter().zip(&id).fold(0.0f64, |a, (x, y)| a.max((x + y).abs())));
            let hm = linalg::matmul(&v.h, m, nn);
            let mhm = linalg::matmul(&linalg::transpose(m, nn), &hm, nn);
            res.record(&format!("hermitian_{}", NAMES[u]), linalg::max_abs_diff(&mhm, &v.h));
            let tr: f64 = (0..nn).map(|a| m[a * nn + a]).sum();
            res.record(&format!("trace_{}", NAMES[u]), tr.abs());
        }
        for &(u, w, x) in &CYCLIC {
            let uw = linalg::matmul(ms[u], ms[w], nn);
            res.record(&format!("product_{}{}", NAMES[u], NAMES[w]), linalg::max_abs_diff(&uw, ms[x]));
        }
        let ijk = linalg::matmul(&linalg::matmul(&v.i, &v.j, nn), &v.k, nn);
        res.record("ijk_plus_identity", ijk.iter().zip(&id).fold(0.0f64, |a, (x, y)| a.max((x + y).abs())));
        for (name, t) in [("h", &hk.h), ("i", &hk.i), ("j", &hk.j), ("k", &hk.k)] {
            res.record(&format!("parallel_{name}"), crate::tractor::parallel_residual(t, &hk.scale, p)?);
        }
    }
    Ok(res)
}

/// Hypercomplex orientation of `(I, J, K)` against `volume_sign · det`,
/// using random admissible bases.
pub fn tractor_orientation(hk: &TractorHK, p: &[f64], seed: u64) -> Result<i32> {
    use rand::{Rng, SeedableRng};
    let v = hk.values(p)?;
    let nn = hk.scale.rank();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let basis: Vec<Vec<f64>> = (0..nn / 4).map(|_| (0..nn).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    orientation_sign(&v.i, &v.j, &v.k, &basis, hk.volume_sign, 1e-8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::make_round_sphere;

    fn flat3() -> TensorField<f64> {
        let chart = Chart::cube("r3", 3, 1.0).unwrap();
        TensorField::constant(chart, vec![Down, Down], 0.0, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0])
    }

    #[test]
    fn rotation_is_killing_dilation_is_not() {
        let g = flat3();
        let rot = TensorField::from_rule(g.chart().clone(), vec![Up], 0.0, |x| vec![-x[1].clone(), x[0].clone(), x[2].scale(0.0)]);
        let rad = TensorField::from_rule(g.chart().clone(), vec![Up], 0.0, |x| x.to_vec());
        let pts = g.chart().sample_points(5, 1);
        assert!(check_killing(&g, &rot, &pts).unwrap() < 1e-15);
        assert!((check_killing(&g, &rad, &pts).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sphere_triple_is_3sasaki() {
        let model = make_round_sphere(1, 2, 0).unwrap();
        let t = model.sasaki_triple().unwrap();
        let pts = model.chart.sample_points(4, 2);
        let res = check_3sasaki(&t, &pts).unwrap();
        assert!(res.max_residual() < 1e-9, "{res:?}");
        let bad = check_3sasaki(&t.swapped_jk(), &pts).unwrap();
        assert!(bad.max_with_prefix("bracket") > 1.0);
    }

    #[test]
    fn doubled_field_has_norm_four() {
        let model = make_round_sphere(1, 2, 0).unwrap();
        let t = model.sasaki_triple().unwrap();
        let two_i = t.i.scale(2.0);
        let rep = check_sasaki(&t.g, &two_i, &model.chart.sample_points(2, 3)).unwrap();
        assert!((rep.max_norm - 4.0).abs() < 1e-12);
        assert!((rep.residuals.get("unit_length").unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn cone_over_sphere_is_flat_hyperkaehler() {
        let model = make_round_sphere(1, 2, 0).unwrap();
        let t = model.sasaki_triple().unwrap();
        let cone = cone_build(&t, (0.5, 2.0)).unwrap();
        let rep = check_cone(&cone, &cone.chart.sample_points(2, 4)).unwrap();
        assert!(rep.parallel < 1e-9, "{rep:?}");
        assert!(rep.riemann < 1e-9);
        assert!(rep.hermitian < 1e-12 && rep.square < 1e-12 && rep.quaternion < 1e-12);
        assert!(cone_restriction_residual(&cone, &t.k, &model.chart.sample_points(3, 5)).unwrap() < 1e-14);
        assert!(matches!(cone_build(&t, (0.0, 1.0)), Err(GeomError::Domain { .. })));
    }

    #[test]
    fn tractor_hk_is_parallel_and_positive() {
        let model = make_round_sphere(1, 2, 0).unwrap();
        let hk = build_tractor_hk(&model.sasaki_triple().unwrap()).unwrap();
        assert_eq!(hk.signature, (8, 0));
        let res = check_tractor_hk(&hk, &model.chart.sample_points(2, 6)).unwrap();
        assert!(res.max_residual() < 1e-9, "{res:?}");
    }
}
