use proptest::prelude::*;

use tractorlab::linalg;
use tractorlab::models::Catalog;
use tractorlab::quaternion::Quat;
use tractorlab::report::{Check, VerificationReport};
use tractorlab::strat::{self, HeisenbergAlgebra, HeisenbergElement};
use tractorlab::{Jet64, TractorKind};

fn quat() -> impl Strategy<Value = Quat> {
    prop::array::uniform4(-2.0f64..2.0).prop_map(|a| Quat::from_slice(&a))
}

fn element(rank: usize) -> impl Strategy<Value = HeisenbergElement> {
    (prop::collection::vec(quat(), rank), quat()).prop_map(|(x, a)| HeisenbergElement { x, a: a.im() })
}

fn close(a: Quat, b: Quat) -> bool {
    (a - b).norm2().sqrt() <= 1e-12 * (1.0 + a.norm2().sqrt() + b.norm2().sqrt())
}

proptest! {
    #[test]
    fn heisenberg_bracket_is_antisymmetric_bilinear_and_jacobi(
        (u, v, w) in (element(3), element(3), element(3)),
        s in -3.0f64..3.0,
    ) {
        let alg = HeisenbergAlgebra { p: 2, q: 1 };
        let uv = alg.bracket(&u, &v);
        let vu = alg.bracket(&v, &u);
        prop_assert!(close(uv.a, -vu.a));
        prop_assert!(uv.x.iter().all(|x| x.norm2() == 0.0));
        let su_w = HeisenbergElement { x: u.x.iter().zip(&w.x).map(|(a, b)| a.scale(s) + *b).collect(), a: u.a.scale(s) + w.a };
        let lhs = alg.bracket(&su_w, &v).a;
        let rhs = alg.bracket(&u, &v).a.scale(s) + alg.bracket(&w, &v).a;
        prop_assert!(close(lhs, rhs));
        let jac = alg.bracket(&u, &alg.bracket(&v, &w)).a
            + alg.bracket(&v, &alg.bracket(&w, &u)).a
            + alg.bracket(&w, &alg.bracket(&u, &v)).a;
        prop_assert!(jac.norm2() == 0.0);
    }

    #[test]
    fn quaternion_norm_is_multiplicative(a in quat(), b in quat(), c in quat()) {
        let n = |q: Quat| q.norm2().sqrt();
        prop_assert!((n(a * b) - n(a) * n(b)).abs() <= 1e-12 * (1.0 + n(a) * n(b)));
        prop_assert!(close((a * b) * c, a * (b * c)));
    }

    #[test]
    fn logm_inverts_expm_near_identity(entries in prop::collection::vec(-1.0f64..1.0, 25), size in 1e-6f64..0.5) {
        let a: Vec<f64> = entries.iter().map(|x| x * size).collect();
        let back = linalg::logm(&linalg::expm(&a, 5), 5, 1e-3).unwrap();
        prop_assert!(linalg::max_abs_diff(&a, &back) <= 1e-10 * (1.0 + size));
    }

    #[test]
    fn jet_product_rule_matches_closed_form(x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let v = Jet64::seed(&[x, y], 3);
        let f = &(&v[0] * &v[1]).sin() * &v[0].exp();
        let fx = f.diff(0).value();
        let want = x.exp() * ((x * y).sin() + y * (x * y).cos());
        prop_assert!((fx - want).abs() <= 1e-12 * (1.0 + want.abs()));
        let fxy = f.diff(0).diff(1).value();
        let want_xy = x.exp() * (x * (x * y).cos() + (x * y).cos() - x * y * (x * y).sin());
        prop_assert!((fxy - want_xy).abs() <= 1e-12 * (1.0 + want_xy.abs()));
    }

    #[test]
    fn report_json_round_trips(res in prop::collection::vec(0.0f64..1.0, 1..6), tol in 1e-9f64..1.0) {
        let mut r = VerificationReport::new();
        for (i, x) in res.iter().enumerate() {
            r.checks.push(Check::new(format!("c{i}"), "Numerical hygiene", i, *x, tol));
        }
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for (i, x) in res.iter().enumerate() {
            prop_assert_eq!(v["checks"][i]["max_residual"].as_f64(), Some(*x));
            prop_assert_eq!(v["checks"][i]["passed"].as_bool(), Some(*x <= tol));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn stratification_labels_are_scale_independent(c in 0.05f64..20.0, seed in 0u64..1000) {
        let model = Catalog.get("flat_projective", 1, 1, 1).unwrap();
        let amb = model.ambient.clone().unwrap();
        let scale = model.scale().unwrap();
        let h = amb.flat_tractor(&scale, TractorKind::Bilinear, amb.h.clone());
        let hc = amb.flat_tractor(&scale, TractorKind::Bilinear, amb.h.iter().map(|x| c * x).collect());
        let lines = strat::grid_lines(&model.chart, 4, 9, seed);
        let a = strat::stratify(&h, &lines, None).unwrap();
        let b = strat::stratify(&hc, &lines, None).unwrap();
        prop_assert_eq!(&a.labels, &b.labels);
        prop_assert_eq!(a.crossings.len(), b.crossings.len());
        let a2 = amb.clone();
        prop_assert_eq!(a.mismatches(&move |x| a2.tau(x)), 0);
    }
}
