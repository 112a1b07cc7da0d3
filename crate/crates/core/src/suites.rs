//! Named verification suites producing report checks.

use rayon::prelude::*;

use crate::affine::projective_change;
use crate::check::Residuals;
use crate::error::{GeomError, Result};
use crate::field::{finite_difference_error, TensorField};
use crate::linalg;
use crate::models::{make_cone, make_perturbed, make_stratum_sphere, stratum_chart, ModelGeometry, ModelKind, Stratum};
use crate::report::{Check, ModelDescriptor, VerificationReport};
use crate::sasaki::{build_tractor_hk, check_3sasaki, check_cone, check_tractor_hk, metric_signature, tractor_orientation};
use crate::strat::{self, Label};
use crate::tensor::Variance::Down;
use crate::tractor::{self, HkValues, Scale, TractorKind};

pub const SUITE_NAMES: &[&str] = &[
    "sasaki",
    "tractor_hk",
    "cone",
    "stratify",
    "adapted",
    "descent",
    "quotient",
    "m0",
    "holonomy",
    "hygiene",
];

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOptions {
    pub points: usize,
    pub seed: u64,
    /// Replaces every residual tolerance when set.
    pub tol: Option<f64>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { points: 200, seed: 0, tol: None }
    }
}

impl SuiteOptions {
    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

/// Suites that apply to a model kind.
pub fn default_suites(kind: ModelKind) -> &'static [&'static str] {
    match kind {
        ModelKind::RoundSphere => &["sasaki", "tractor_hk", "cone", "adapted", "descent", "quotient", "holonomy", "hygiene"],
        ModelKind::FlatProjective => &["stratify", "m0", "holonomy", "hygiene"],
        ModelKind::Cone => &["cone", "hygiene"],
        ModelKind::Perturbed => &["sasaki", "tractor_hk", "hygiene"],
    }
}

/// Suites run by `verify` when none is named.
pub fn verify_suites(kind: ModelKind) -> &'static [&'static str] {
    match kind {
        ModelKind::RoundSphere | ModelKind::Perturbed => &["sasaki", "tractor_hk"],
        ModelKind::FlatProjective => &["stratify"],
        ModelKind::Cone => &["cone"],
    }
}

pub fn descriptor(model: &ModelGeometry, seed: u64) -> ModelDescriptor {
    ModelDescriptor {
        name: model.name.clone(),
        m: model.m,
        p: model.p,
        q: model.q,
        chart: Some((&model.chart).into()),
        seed,
    }
}

/// Runs suites in order and collects their checks into a report.
pub fn run_suites(model: &ModelGeometry, suites: &[&str], opts: &SuiteOptions) -> Result<VerificationReport> {
    let mut report = VerificationReport::new();
    report.models.push(descriptor(model, opts.seed));
    for s in suites {
        report.checks.extend(run_suite(s, model, opts)?);
    }
    Ok(report)
}

pub fn run_suite(name: &str, model: &ModelGeometry, opts: &SuiteOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    match name {
        "sasaki" => sasaki(model, opts, &mut out)?,
        "tractor_hk" => tractor_hk(model, opts, &mut out)?,
        "cone" => cone(model, opts, &mut out)?,
        "stratify" => stratify(model, opts, &mut out)?,
        "adapted" => adapted(model, opts, &mut out)?,
        "descent" => descent(model, opts, &mut out)?,
        "quotient" => quotient(model, opts, &mut out)?,
        "m0" => m0(model, opts, &mut out)?,
        "holonomy" => holonomy(model, opts, &mut out)?,
        "hygiene" => hygiene(model, opts, &mut out)?,
        other => {
            return Err(GeomError::Unsupported(format!("unknown suite '{other}'; valid: {}", SUITE_NAMES.join(", "))));
        }
    }
    Ok(out)
}

fn emit(out: &mut Vec<Check>, suite: &str, res: &Residuals, classify: impl Fn(&str) -> (&'static str, f64)) {
    for (n, v) in &res.entries {
        let (anchor, tol) = classify(n);
        out.push(Check::new(format!("{suite}/{n}"), anchor, res.n_points, *v, tol));
    }
}

/// Exact-match check: residual is the count of mismatched items.
fn exact(out: &mut Vec<Check>, name: String, anchor: &str, n: usize, mismatches: usize) {
    out.push(Check::new(name, anchor, n, mismatches as f64, 0.0));
}

fn signature_mismatch(got: (usize, usize), want: (usize, usize)) -> usize {
    got.0.abs_diff(want.0) + got.1.abs_diff(want.1)
}

fn unsupported(suite: &str, model: &ModelGeometry) -> GeomError {
    GeomError::Unsupported(format!("suite '{suite}' does not apply to model '{}'", model.name))
}

fn need_triple(suite: &str, model: &ModelGeometry) -> Result<crate::sasaki::SasakiTriple> {
    model.sasaki_triple().ok_or_else(|| unsupported(suite, model))
}

fn sasaki(model: &ModelGeometry, opts: &SuiteOptions, out: &mut Vec<Check>) -> Result<()> {
    let t = need_triple("sasaki", model)?;
    let pts = model.chart.sample_points(opts.points, opts.seed);
    let res = check_3sasaki(&t, &pts)?;
    let tol = opts.tol(1e-7);
    emit(out, "sasaki", &res, |n| {
        let anchor = if n.starts_with("identity_") {
            "Prop. identities and their cyclic permutations"
        } else if n.starts_with("orthogonal_") || n.starts_with("bracket_") {
            "Def. 3-Sasaki"
        } else if n == "einstein" {
            "Prop. Einstein with Einstein constant"
        } else {
            "Def. Sasaki"
        };
        (anchor, tol)
    });
    let want = (4 * model.p - 1, 4 * model.q);
    let mut bad = 0;
    for p in pts.iter().take(20) {
        bad += usize::from(metric_signature(&t.g, p)? != want);
    }
    exact(out, "sasaki/metric_signature".into(), "Thm. B (a)", pts.len().min(20), bad);
    Ok(())
}

fn tractor_hk(model: &ModelGeometry, opts: &SuiteOptions, out: &mut Vec<Check>) -> Result<()> {
    let t = need_triple("tractor_hk", model)?;
    let sign = model.ambient.as_ref().map_or(1.0, |a| a.orientation);
    let hk = match build_tractor_hk(&t) {
        Ok(hk) => hk.with_volume_sign(sign),
        Err(GeomError::Precondition(_)) => {
            let pts = model.chart.sample_points(8, opts.seed);
            let e = crate::sasaki::einstein_residual(&t.g, (t.dim() - 1) as f64, &pts)?;
            out.push(Check::new("tractor_hk/einstein_precondition", "Thm. A", pts.len(), e, opts.tol(1e-7)));
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    let pts = model.chart.sample_points(opts.points, opts.seed);
    let res = check_tractor_hk(&hk, &pts)?;
    emit(out, "tractor_hk", &res, |n| ("Thm. A", if n.starts_with("parallel_") { opts.tol(1e-7) } else { opts.tol(1e-8) }));
    exact(out, "tractor_hk/signature".into(), "Thm. A", 1, signature_mismatch(hk.signature, (4 * model.p, 4 * model.q)));
    let mut wrong = 0;
    for (s, p) in pts.iter().take(5).enumerate() {
        wrong += usize::from(tractor_orientation(&hk, p, opts.seed.wrapping_add(s as u64))? != 1);
    }
    exact(out, "tractor_hk/orientation".into(), "Thm. A", pts.len().min(5), wrong);
    let h = hk.h.clone();
    let vol = tractor::tractor_volume_check(&hk.scale, Some(&h), &pts[..pts.len().min(20)])?;
    out.push(Check::new("tractor_hk/volume_parallel", "Thm. A", vol.n_points, vol.parallel, opts.tol(1e-7)));
    out.push(Check::new("tractor_hk/volume_ratio_spread", "Thm. A", vol.n_points, vol.metric_ratio_spread, opts.tol(1e-7)));
    Ok(())
}

fn cone(model: &ModelGeometry, opts: &SuiteOptions, out: &mut Vec<Check>) -> Result<()> {
    let built;
    let cone_model = match model.kind {
        ModelKind::Cone => model,
        ModelKind::RoundSphere => {
            built = make_cone(model)?;
            &built
        }
        _ => return Err(unsupported("cone", model)),
    };
    let cg = cone_model.cone.as_ref().expect("cone model carries its geometry");
    let pts = cg.chart.sample_points(opts.points.div_ceil(4).max(8), opts.seed);
    let rep = check_cone(cg, &pts)?;
    let tol = opts.tol(1e-6);
    emit(out, "cone", &rep.residuals(), |_| ("Prop. on cones", tol));
    out.push(Check::new("cone/riemann", "Prop. on cones", rep.n_points, rep.riemann, tol));
    Ok(())
}

fn flat_h(model: &ModelGeometry) -> Result<(crate::models::Ambient, crate::tractor::TractorMetric<f64>)> {
    let amb = model.ambient.clone().ok_or_else(|| unsupported("stratify", model))?;
    let scale = model.scale()?;
    let h = amb.flat_tractor(&scale, TractorKind::Bilinear, amb.h.clone());
    Ok((amb, h))
}

fn stratify(model: &ModelGeometry, opts: &SuiteOptions, out: &mut Vec<Check>) -> Result<()> {
    if model.kind != ModelKind::FlatProjective {
        return Err(unsupported("stratify", model));
    }
    let (amb, h) = flat_h(model)?;
    let lines = strat::grid_lines(&model.chart, (opts.points / 10).max(12), 21, opts.seed);
    let s = strat::stratify(&h, &lines, None)?;
    let classified = s.counts.0 + s.counts.2;
    let a = amb.clone();
    exact(out, "stratify/label_mismatches".into(), "Thm. B", classified, s.mismatches(&move |x| a.tau(x)));
    exact(out, "stratify/degenerate_configuration".into(), "Thm. B", classified, usize::from(s.degenerate_warning));
    let zero = s.counts.1 + s.crossings.len();
    let strata_present = [s.counts.0 > 0, zero > 0, s.counts.2 > 0];
    let want = if amb.q == 0 { [true, false, false] } else { [true, true, true] };
    let wrong = strata_present.iter().zip(&want).filter(|(a, b)| a != b).count();
    exact(out, "stratify/strata_present".into(), "Thm. B", classified + zero, wrong);
    if amb.q > 0 {
        out.push(Check::new("stratify/root_tau", "Thm. B (b)", s.crossings.len(), s.max_root_tau(), 1e-10));
        exact(out, "stratify/unseparated_sign_changes".into(), "Thm. B (b)", s.crossings.len(), s.unseparated);
        let seq_ok = s.labels.iter().all(|l| {
            l.windows(2).all(|w| !matches!((w[0], w[1]), (Label::Plus, Label::Minus) | (Label::Minus, Label::Plus)))
        });
        let crossings_ok = s.unseparated == 0;
        exact(out, "stratify/separated_by_m0".into(), "Thm. B (b)", s.crossings.len(), usize::from(!(seq_ok || crossings_ok)));
    }
    let fields = amb.killing_triple(&model.chart);
    let all_pts: Vec<Vec<f64>> = lines.iter().flatten().cloned().collect();
    let min_norm = strat::min_normalized_norm(&fields, &all_pts)?;
    out.push(Check::new("stratify/nonvanishing_margin", "Thm. B", all_pts.len(), 0.1 / min_norm, 1.0));
    let ipts = model.chart.sample_points(opts.points.min(50), opts.seed);
    let integ = strat::check_d_integrability(&fields, &ipts)?;
    exact(out, "stratify/d_rank_deficit".into(), "Prop. on adapted scales (a)", ipts.len(), 3 - integ.rank);
    emit(out, "stratify/d", &integ.residuals, |_| ("Prop. on adapted scales (a)", opts.tol(1e-8)));
    let two = strat::check_d_integrability(&fields[..2], &ipts)?;
    exact(out, "stratify/two_field_rank_control".into(), "Prop. on adapted scales (a)", ipts.len(), two.rank.abs_diff(2));
    let strata: &[(Stratum, &str)] = if amb.q > 0 { &[(Stratum::Plus, "plus"), (Stratum::Minus, "minus")] } else { &[(Stratum::Plus, "plus")] };
    for &(st, tag) in strata {
        let sm = strat::einstein_metric_on_stratum(&amb, st, opts.points.min(40), opts.seed)?;
        emit(out, &format!("stratify/{tag}"), &sm.residuals, |n| {
            ("Thm. B (a)", if n == "einstein" { opts.tol(1e-6) } else { opts.tol(1e-7) })
        });
        let want = match st {
            Stratum::Plus => (4 * amb.p - 1, 4 * amb.q),
            Stratum::Minus => (4 * amb.q - 1, 4 * amb.p),
        };
        exact(out, format!("stratify/{tag}/signature"), "Thm. B (a)", sm.residuals.n_points, signature_mismatch(sm.signature, want));
        let sphere = make_stratum_sphere(amb.m, amb.p, amb.q, st)?;
        let t = sphere.sasaki_triple().expect("stratum model carries a triple");
        let res = check_3sasaki(&t, &sphere.chart.sample_points(opts.points.min(20), opts.seed))?;
        out.push(Check::new(format!("stratify/{tag}/three_sasaki"), "Thm. B (a)", res.n_points, res.max_residual(), opts.tol(1e-7)));
    }
    Ok(())
}

fn lemma_anchor(n: &str) -> &'static str {
    if n.starts_with("lemma_a") {
        "Lemma (a)"
    } else if n.starts_with("lemma_b") {
        "Lemma (b)"
    } else if n.starts_with("lemma_c") {
        "Lemma (c)"
    } else if n.starts_with("lemma_d") {
        "Lemma (d)"
    } else if n.starts_with("q_parallel") {
        "Lemma, second derivative identity"
    } else {
        "Prop. on adapted scales (c)"
    }
}

fn adapted(model: &ModelGeometry, opts: &SuiteOptions, out: &mut Vec<Check>) -> Result<()> {
    if model.kind != ModelKind::RoundSphere {
        return Err(unsupported("adapted", model));
    }
    let fields = model.triple.clone().expect("sphere triple");
    let scale = model.scale()?;
    let pts = model.chart.sample_points(opts.points.min(60), opts.seed);
    let tol = opts.tol(1e-7);
    let (a, res) = strat::check_adapted_scale(&scale, &fields, &pts, tol)?;
    out.push(Check::new("adapted/einstein/divergence", "Prop. on adapted scales (b)", pts.len(), a.divergences.iter().fold(0.0f64, |m, x| m.max(*x)), tol));
    emit(out, "adapted/einstein", &res, |n| (lemma_anchor(n), tol));
    let (s2, _) = strat::fiber_constant_change(model, &scale)?;
    let pts2 = &pts[..pts.len().min(20)];
    let (a2, res2) = strat::check_adapted_scale(&s2, &fields, pts2, tol)?;
    out.push(Check::new("adapted/second/divergence", "Prop. on adapted scales (b)", pts2.len(), a2.divergences.iter().fold(0.0f64, |m, x| m.max(*x)), tol));
    emit(out, "adapted/second", &res2, |n| (lemma_anchor(n), tol));
    let mut shift = vec![0.0; model.dim()];
    shift[0] = 0.5;
    let ups = TensorField::constant(model.chart.clone(), vec![Down], 0.0, shift);
    let bad = Scale::new(projective_change(scale.connection(), &ups)?, "shifted")?;
    let rejected = matches!(strat::check_adapted_scale(&bad, &fields, pts2, tol), Err(GeomError::NotAdapted { .. }));
    exact(out, "adapted/non_adapted_rejected".into(), "Prop. on adapted scales (b)", pts2.len(), usize::from(!rejected));
    Ok(())
}

fn descent(model: &ModelGeometry, opts: &SuiteOptions, out: &mut Vec<Check>) -> Result<()> {
    if model.kind != ModelKind::RoundSphere || model.hopf.is_none() {
        return Err(unsupported("descent", model));
    }
    let scale = model.scale()?;
    let pairs = opts.points.clamp(24, 60);
    let pts = model.chart.sample_points(pairs, opts.seed);
    let tol = opts.tol(1e-7);
    let res = strat::descend_quaternionic(model, &scale, &pts, opts.seed)?;
    emit(out, "descent/quaternionic", &res, |_| ("Thm. on descent", tol));
    let fields = model.triple.clone().expect("sphere triple");
    let hopf = model.hopf.as_ref().expect("checked above");
    let (s2, _) = strat::fiber_constant_change(model, &scale)?;
    let nq = hopf.target_dim();
    let mut r = Residuals::new(pts.len());
    let per: Vec<Result<(f64, f64)>> = pts
        .par_iter()
        .map(|x| {
            let a = strat::descend_at(hopf, &scale, &fields, None, x)?;
            let b = strat::descend_at(hopf, &s2, &fields, None, x)?;
            let q = (0..3).fold(0.0f64, |m, u| m.max(linalg::max_abs_diff(&a.q[u], &b.q[u])));
            let pred = strat::quaternionic_change(&a.gamma, &a.q, &strat::quotient_upsilon(&a.y), nq);
            Ok((q, linalg::max_abs_diff(&pred, &b.gamma)))
        })
        .collect();
    for p in per {
        let (q, c) = p?;
        r.record("scale_independence", q);
        r.record("change_formula", c);
    }
    out.push(Check::new("descent/scale_independence", "Thm. on descent", pts.len(), r.get("scale_independence").unwrap_or(f64::NAN), opts.tol(1e-8)));
    out.push(Check::new("descent/change_formula", "Quaternionic change formula", pts.len(), r.get("change_formula").unwrap_or(f64::NAN), tol));
    let td = strat::check_tractor_descent(model, &scale, &pts, opts.seed)?;
    emit(out, "descent/tractor", &td.residuals, |n| {
        ("Thm. on tractor descent", if n == "curvature_along_d" { opts.tol(1e-8) } else { tol })
    });
    let n_pairs = td.residuals.n_points.min(res.n_points);
    exact(out, "descent/fiber_pairs_shortfall".into(), "Thm. on descent", n_pairs, 20usize.saturating_sub(n_pairs));
    let pert = make_perturbed(model.m, model.p, model.q, 0.3)?;
    let ctrl = strat::check_tractor_descent(&pert, &pert.scale()?, &pts[..4], opts.seed)?;
    out.push(Check::new("descent/negative_control_margin", "Thm. on tractor descent", 4, 1e-3 / ctrl.curvature_along_d, 1.0));
    Ok(())
}

fn quotient(model: &ModelGeometry, opts: &SuiteOptions, out: &mut Vec<Check>) -> Result<()> {
    if model.kind != ModelKind::RoundSphere || model.hopf.is_none() {
        return Err(unsupported("quotient", model));
    }
    let hopf = model.hopf.as_ref().expect("checked above");
    let qchart = strat::quotient_chart(hopf, &model.chart)?;
    let qp = qchart.sample_points(opts.points.min(if model.m == 1 { 40 } else { 12 }), opts.seed);
    let res = strat::qk_quotient_check(model, &qp, opts.seed)?;
    let tol = opts.tol(1e-7);
    let ein = opts.tol(if model.m == 1 { 1e-6 } else { 1e-5 });
    emit(out, "quotient", &res, |n| match n {
        "einstein" => ("Thm. D (a)", ein),
        "hermitian" => ("Hermitian condition", tol),
        _ => ("Thm. D (a)", tol),
    });
    let gt = hopf.quotient_metric(qchart);
    let want = (4 * (model.p - 1), 4 * model.q);
    let mut bad = 0;
    for y in qp.iter().take(10) {
        bad += usize::from(metric_signature(&gt, y)? != want);
    }
    exact(out, "quotient/signature".into(), "Thm. D (a)", qp.len().min(10), bad);
    Ok(())
}

fn m0(model: &ModelGeometry, opts: &SuiteOptions, out: &mut Vec<Check>) -> Result<()> {
    let amb = model.ambient.as_ref().ok_or_else(|| unsupported("m0", model))?;
    if model.kind != ModelKind::FlatProjective || amb.q == 0 {
        return Err(unsupported("m0", model));
    }
    let r = strat::m0_checks(model, (opts.points / 10).max(20), opts.seed)?;
    out.push(Check::new("m0/root_tau", "Thm. B (b)", r.crossings, r.max_root_tau, 1e-10));
    out.push(Check::new("m0/smoothness_margin", "Thm. B (b)", r.crossings, 1e-6 / r.min_gradient, 1.0));
    exact(out, "m0/conformal_signature".into(), "Thm. B (b)", r.crossings, signature_mismatch(r.conformal_signature, (4 * amb.p - 1, 4 * amb.q - 1)));
    emit(out, "m0", &r.residuals, |_| ("Thm. D (b)", opts.tol(1e-8)));
    if let (Some(c), Some(ls), Some(fit), Some(inv)) = (r.contact_corank, r.levi_signature, r.heisenberg_fit.as_ref(), r.q_invariance) {
        exact(out, "m0/contact_corank".into(), "Thm. D (b)", 1, c.abs_diff(3));
        exact(out, "m0/levi_signature".into(), "Def. quaternionic Heisenberg algebra", 1, signature_mismatch(ls, (amb.p - 1, amb.q - 1)));
        out.push(Check::new("m0/q_invariance", "Thm. D (b)", 1, inv, opts.tol(1e-8)));
        out.push(Check::new("m0/heisenberg_fit", "Def. quaternionic Heisenberg algebra", 1, fit.residual, opts.tol(1e-6)));
    }
    Ok(())
}

fn holonomy(model: &ModelGeometry, opts: &SuiteOptions, out: &mut Vec<Check>) -> Result<()> {
    let count = (opts.points / 20).clamp(6, 24);
    let tol = opts.tol(1e-6);
    match model.kind {
        ModelKind::RoundSphere => {
            let t = need_triple("holonomy", model)?;
            let hk = build_tractor_hk(&t)?;
            let at = |p: &[f64]| hk.values(p);
            let par = |p: &[f64]| hk.parallel_residual(p);
            let rep = tractor::holonomy_sample(&hk.scale, &at, &par, count, opts.seed, true, 1e-7)?;
            out.push(Check::new("holonomy/membership_per_area", "Holonomy reduction", rep.samples.len(), rep.max_membership, tol));
            let pert = make_perturbed(model.m, model.p, model.q, 0.3)?;
            let ps = pert.scale()?;
            let ctrl = tractor::holonomy_sample(&ps, &at, &par, 4, opts.seed, false, 0.0)?;
            out.push(Check::new("holonomy/negative_control_margin", "Holonomy reduction", ctrl.samples.len(), 1e-3 / ctrl.max_membership, 1.0));
        }
        ModelKind::FlatProjective => {
            let amb = model.ambient.clone().expect("flat data");
            let scale = model.scale()?;
            let hv = HkValues { h: amb.h.clone(), i: amb.triple[0].clone(), j: amb.triple[1].clone(), k: amb.triple[2].clone() };
            let at = |_: &[f64]| Ok(hv.clone());
            let par = |_: &[f64]| Ok(0.0);
            let rep = tractor::holonomy_sample(&scale, &at, &par, count.min(8), opts.seed, true, 1e-7)?;
            out.push(Check::new("holonomy/flat_log_per_area", "Tractor curvature", rep.samples.len(), rep.max_log_norm, tol));
        }
        _ => return Err(unsupported("holonomy", model)),
    }
    Ok(())
}

/// Smallest observed convergence order of central differences against
/// exact jets, over derivative orders 1 to 3.
pub fn fd_convergence_order(field: &TensorField<f64>, points: &[Vec<f64>], h: f64) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for p in points {
        let e1 = finite_difference_error(field, p, h)?;
        let e2 = finite_difference_error(field, p, h / 2.0)?;
        for o in 0..3 {
            if e1[o] > 1e-11 {
                worst = worst.min((e1[o] / e2[o]).log2());
            }
        }
    }
    Ok(worst)
}

fn hygiene(model: &ModelGeometry, opts: &SuiteOptions, out: &mut Vec<Check>) -> Result<()> {
    let (field, c) = match (&model.metric, &model.ambient) {
        (Some(g), _) => (g.clone(), model.chart.clone()),
        (None, Some(amb)) => {
            let r = if model.m == 1 { 0.4 } else { 0.3 };
            let chart = stratum_chart(amb, Stratum::Plus, r).or_else(|_| stratum_chart(amb, Stratum::Minus, r))?;
            (amb.einstein_metric(chart.clone()), chart)
        }
        _ => return Err(unsupported("hygiene", model)),
    };
    let inner = c.sub_box(
        c.lo().iter().zip(c.hi()).map(|(a, b)| 0.75 * a + 0.25 * b).collect(),
        c.lo().iter().zip(c.hi()).map(|(a, b)| 0.25 * a + 0.75 * b).collect(),
    )?;
    let pts = inner.sample_points(3, opts.seed);
    let order = fd_convergence_order(&field, &pts, 2e-2)?;
    out.push(Check::new("hygiene/fd_order_deficit", "Numerical hygiene", pts.len(), (1.9 - order).max(0.0), 0.0));
    let small = SuiteOptions { points: 6, ..opts.clone() };
    let suite = if model.triple.is_some() && model.metric.is_some() { "sasaki" } else { verify_suites(model.kind)[0] };
    let a = run_suites(model, &[suite], &small)?.to_json();
    let b = run_suites(model, &[suite], &small)?.to_json();
    exact(out, "hygiene/byte_determinism".into(), "Numerical hygiene", 2, usize::from(a != b));
    Ok(())
}
