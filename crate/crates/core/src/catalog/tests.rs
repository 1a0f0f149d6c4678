use std::f64::consts::PI;

use super::kahler::scal_identity_residual;
use super::*;
use crate::curvature::curvature_at;
use crate::fieldops::{covariant_derivative, LocalField, StencilConfig};
use crate::tensor_point::{build_frame, hodge_star};

fn entry(name: &str) -> CatalogEntry {
    get_entry(name, &ParamEnv::new()).unwrap()
}

#[test]
fn every_entry_is_einstein_at_its_declared_constant() {
    for name in CATALOG_NAMES {
        let e = entry(name);
        let rep = e.einstein_check(100, 11).unwrap();
        assert!(rep.max_residual < 1e-8, "{name}: {}", rep.max_residual);
        assert!((rep.lambda - e.einstein_constant).abs() < 1e-8, "{name}: Λ = {}", rep.lambda);
    }
}

#[test]
fn schwarzschild_components_and_bolt_period() {
    let e = entry("schwarzschild");
    let g = e.metric.metric(&[4.0, 0.0, PI / 2.0, 0.0]).unwrap();
    for (i, v) in [2.0, 0.5, 16.0, 16.0].iter().enumerate() {
        assert!((g[(i, i)] - v).abs() < 1e-14);
    }
    assert!((e.periods().unwrap()[1].unwrap() - 8.0 * PI).abs() < 1e-12);
    assert_eq!(e.class.tag(), "ALF-ricci-flat");
}

#[test]
fn unknown_and_out_of_range_entries_are_rejected() {
    match get_entry("chen_teo", &ParamEnv::new()) {
        Err(CatalogError::UnknownEntry { hint, .. }) => assert!(hint.contains("Adding a metric")),
        other => panic!("{other:?}"),
    }
    assert!(matches!(get_entry("schwarzschild", &ParamEnv::new().with("m", -1.0)), Err(CatalogError::OutOfRange { .. })));
    assert!(matches!(get_entry("kerr", &ParamEnv::new().with("a", 1.5)), Err(CatalogError::OutOfRange { .. })));
    assert_eq!(entry("taub_nut").class, EntryClass::HyperkahlerControl);
}

#[test]
fn kahler_entries_are_type_d_plus() {
    for name in ["schwarzschild", "kerr", "taub_bolt", "taub_nut", "page"] {
        let e = entry(name);
        for p in e.samples(30, 3) {
            let k = kahler_at(&e, &p).unwrap_or_else(|err| panic!("{name}: {err}"));
            let w = crate::curvature::weyl_plus_action(&k.pack, &k.unit).unwrap();
            assert!((w - k.unit * k.lambda).norm(&k.pack.frame) < 1e-9 * k.lambda, "{name}");
            assert!((k.tau.norm(&k.pack.frame) - 2f64.sqrt() * k.f).abs() < 1e-12 * k.f);
        }
    }
}

#[test]
fn flat_and_sphere_fail_type_d() {
    for name in ["flat_r4", "round_s4"] {
        let e = entry(name);
        let p = e.samples(1, 1)[0];
        assert!(matches!(kahler_form(&e, &p), Err(CatalogError::TypeDFailure { .. })), "{name}");
    }
}

#[test]
fn closed_form_conformal_factors_match_eigenvalue() {
    for name in ["schwarzschild", "kerr", "taub_bolt", "taub_nut"] {
        let e = entry(name);
        let f = e.kahler.as_ref().unwrap().f.clone().unwrap();
        for p in e.samples(20, 5) {
            let a = conformal_factor(&e, &p).unwrap();
            let b = f.evaluate(&p, e.env()).unwrap();
            assert!((a - b).abs() < 1e-10 * b, "{name}: {a} vs {b}");
        }
    }
    // f/r is constant on Schwarzschild
    let e = entry("schwarzschild");
    let ratios: Vec<f64> = (0..20).map(|i| 3.0 + 2.0 * i as f64).map(|r| conformal_factor(&e, &[r, 0.0, 1.0, 0.0]).unwrap() / r).collect();
    assert!(ratios.iter().all(|q| (q - ratios[0]).abs() < 1e-6 * ratios[0]));
}

#[test]
fn conformal_scalar_curvature_identity() {
    for name in ["schwarzschild", "kerr", "taub_bolt"] {
        let e = entry(name);
        let r = scal_identity_residual(&e, &e.samples(50, 9)).unwrap();
        assert!(r < 1e-6, "{name}: {r}");
    }
}

#[test]
fn rescaled_metric_is_kahler() {
    for name in ["schwarzschild", "kerr"] {
        let e = entry(name);
        let f = e.kahler.as_ref().unwrap().f.clone().unwrap();
        let phi = crate::expr::Expr::one() / f;
        let tilde = std::sync::Arc::new(e.spec.conformal(&phi, "tilde")).compile(e.env()).unwrap();
        let ee = e.clone();
        let w = crate::fieldops::TensorField::numeric(crate::fieldops::FieldKind::TwoForm, move |p| {
            let k = kahler_form(&ee, p).map_err(|x| crate::fieldops::FieldError::Eval(x.to_string()))?;
            Ok(k.to_matrix().transpose().as_slice().to_vec())
        })
        .with_invariant(e.metric.invariant);
        for p in e.samples(6, 2) {
            let d = covariant_derivative(&w, &tilde, &p, &StencilConfig::default()).unwrap();
            let scale = w.value(&p).unwrap().iter().fold(0.0f64, |a, v| a.max(v.abs()));
            assert!(d.iter().all(|v| v.abs() < 1e-6 * scale.max(1.0)), "{name}");
        }
    }
}

#[test]
fn killing_fields_are_j_grad_f() {
    for name in ["schwarzschild", "kerr", "taub_bolt"] {
        let e = entry(name);
        let (c, dev) = killing_alignment(&e, &e.samples(10, 4)).unwrap();
        assert!(dev < 1e-6 && c.abs() > 1e-6, "{name}: c = {c}, dev = {dev}");
    }
}

#[test]
fn asd_seeds_are_closed_and_anti_self_dual() {
    for name in ["schwarzschild", "kerr", "taub_bolt", "page"] {
        let e = entry(name);
        let seed = build_asd_seed(&e).unwrap();
        assert!(!seed.trivial, "{name}");
        for p in e.samples(6, 8) {
            let frame = build_frame(p, &e.metric.metric(&p).unwrap(), e.metric.orientation_sign()).unwrap();
            let w = seed.field.form2(&p).unwrap();
            assert!((hodge_star(&w, &frame) + w).max_abs() < 1e-10 * w.max_abs(), "{name}");
            let l = LocalField::new(&seed.field, &e.metric, &p, &StencilConfig::default()).unwrap();
            let dw = l.exterior_d2().unwrap();
            assert!(dw.max_abs() < 1e-7 * w.max_abs().max(1e-3), "{name}: {:e}", dw.max_abs());
        }
    }
}

#[test]
fn hyperkahler_controls_are_trivial() {
    for name in ["taub_nut", "eguchi_hanson"] {
        let seed = build_asd_seed(&entry(name)).unwrap();
        assert!(seed.trivial && seed.sup_norm < 1e-8, "{name}: {seed:?}");
    }
}

#[test]
fn page_profile_matches_closed_form() {
    let e = entry("page");
    let seed = build_asd_seed(&e).unwrap();
    let prof = seed.profile.unwrap();
    let n = e.param("n");
    let rb = e.param("rb");
    let exact = |r: f64| ((n - r) / (n + r)).powf(-prof.derivative(0.0).signum());
    for i in 0..9 {
        let r = -0.95 * rb + 0.2375 * rb * i as f64;
        let (a, b) = (prof.value(r), exact(r));
        assert!((a - b).abs() < 1e-8 * b.abs(), "{r}: {a} vs {b}");
    }
}

#[test]
fn schwarzschild_asd_form_decays_quadratically() {
    let e = entry("schwarzschild");
    let seed = build_asd_seed(&e).unwrap();
    let norms: Vec<(f64, f64)> = [10.0, 100.0]
        .iter()
        .map(|&r| {
            let p = [r, 0.0, 1.0, 0.0];
            let frame = curvature_at(&e.metric, &p).unwrap().frame;
            (r, seed.field.form2(&p).unwrap().norm(&frame))
        })
        .collect();
    let slope = (norms[1].1 / norms[0].1).ln() / (norms[1].0 / norms[0].0).ln();
    assert!((slope + 2.0).abs() < 0.1, "{slope}");
}

#[test]
fn alf_ends_approach_their_models() {
    for name in ["schwarzschild", "kerr", "taub_bolt"] {
        let e = entry(name);
        let polar = e.polar.unwrap();
        let mut p = [0.0; 4];
        p[polar] = 1.0;
        let dev = |r: f64| {
            let mut q = p;
            q[0] = r;
            e.alf_deviation(&q).unwrap().unwrap()
        };
        let slope = (dev(200.0) / dev(20.0)).ln() / 10f64.ln();
        assert!(slope <= -0.9, "{name}: {slope}");
    }
}
