use std::f64::consts::PI;


use super::*;
use crate::catalog::{get_entry, CatalogEntry};
use crate::expr::ParamEnv;

/// `∫ f⁻³χ_R²|h|²` on Schwarzschild (m = 1) at R = 80 from the one-dimensional
/// radial integral `32π²·2^{1/3}·4·∫_2^{160} χ²r⁻³ dr` (30-digit quadrature).
const SCHWARZSCHILD_LOWER_BOUND_R80: f64 = 198.892_121_902_114_96;

fn entry(name: &str) -> CatalogEntry {
    get_entry(name, &ParamEnv::new()).unwrap()
}

fn policy(nodes_r: usize) -> GridPolicy {
    GridPolicy { nodes_r, nodes_theta: 16, nodes_periodic: 8 }
}

#[test]
fn cutoff_is_c2_and_bounded() {
    let c = CutoffFamily::new(10.0);
    assert_eq!(c.chi(5.0), 1.0);
    assert_eq!(c.chi(25.0), 0.0);
    assert!((c.chi(15.0) - 0.5).abs() < 1e-15);
    for r in [10.0, 20.0] {
        for f in [CutoffFamily::dchi, CutoffFamily::ddchi] {
            assert!(f(&c, r - 1e-9).abs() < 1e-6 && f(&c, r + 1e-9).abs() < 1e-6);
        }
    }
    for i in 1..200 {
        let r = 10.0 + 0.05 * i as f64;
        assert!(c.dchi(r).abs() <= 2.0 / 10.0);
        let h = 1e-5;
        assert!(((c.chi(r + h) - c.chi(r - h)) / (2.0 * h) - c.dchi(r)).abs() < 1e-8);
        assert!(((c.dchi(r + h) - c.dchi(r - h)) / (2.0 * h) - c.ddchi(r)).abs() < 1e-8);
    }
}

#[test]
fn one_dimensional_rules() {
    let g = Axis::gauss(1.0, 3.0, 6);
    assert!(g.weights.iter().all(|w| *w > 0.0));
    let i: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| w * x.powi(11)).sum();
    assert!((i - (3f64.powi(12) - 1.0) / 12.0).abs() < 1e-9 * i);
    let p = Axis::periodic(2.0 * PI, 8);
    let s: f64 = p.nodes.iter().zip(&p.weights).map(|(x, w)| w * (3.0 * x).cos().powi(2)).sum();
    assert!((s - PI).abs() < 1e-13);
    let values: Vec<f64> = std::iter::once(1.0).chain(std::iter::repeat_n(1e-16, 10_000)).collect();
    let naive: f64 = values.iter().sum();
    assert!((ordered_sum(values.iter().copied()) - (1.0 + 1e-12)).abs() < 1e-15);
    assert_eq!(naive, 1.0);
}

#[test]
fn grid_uses_invariant_periods_and_truncates_at_2r() {
    let e = entry("schwarzschild");
    let g = QuadratureGrid::for_entry(&e, Some(20.0), policy(64)).unwrap();
    assert_eq!(g.radial_domain, Some((2.0, 40.0)));
    assert_eq!(g.axes[0].len(), 64);
    assert!((g.axes[1].weights[0] - 8.0 * PI).abs() < 1e-12 && g.axes[1].len() == 1);
    assert!((g.axes[3].weights[0] - 2.0 * PI).abs() < 1e-12);
    let total: f64 = g.axes[0].weights.iter().sum();
    assert!((total - 38.0).abs() < 1e-12);
    assert!(matches!(QuadratureGrid::for_entry(&e, Some(1.5), policy(64)), Err(StabilityError::GridTooSmall { .. })));
}

#[test]
fn schwarzschild_h_matches_closed_form() {
    let e = entry("schwarzschild");
    let b = build_destabilizer(&e).unwrap();
    assert!(b.eigen_residual < EIGEN_TOL && b.trace_residual < 1e-9);
    let pts = e.samples(50, 36);
    let computed: Vec<_> = pts.iter().map(|p| b.h_matrix(p).unwrap()).collect();
    let reference: Vec<_> = pts.iter().map(|p| schwarzschild_reference(1.0, p)).collect();
    let (c, dev) = fit_global_scalar(&computed, &reference);
    assert!(dev < 1e-8 && c.abs() > 1e-6, "c = {c}, dev = {dev:e}");
    let fit = golden_fit(&b, &pts).unwrap().unwrap();
    assert_eq!((fit.scalar, fit.max_deviation, fit.points), (c, dev, 50));
    assert!(golden_fit(&build_destabilizer(&entry("kerr")).unwrap(), &pts).unwrap().is_none());
    let ev = b.frame_eigenvalues(&[4.0, 0.3, 1.1, 0.7]).unwrap();
    let a = ev[3];
    assert!(a > 0.0);
    for (x, s) in ev.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
        assert!((x - s * a).abs() < 1e-12 * a);
    }
    assert!((a - c.abs() / 4.0).abs() < 1e-9 * a);
}

#[test]
fn controls_are_rejected() {
    assert!(matches!(build_destabilizer(&entry("taub_nut")), Err(StabilityError::Trivial { .. })));
    assert!(matches!(build_destabilizer(&entry("eguchi_hanson")), Err(StabilityError::Trivial { .. })));
    assert!(matches!(
        build_destabilizer(&entry("flat_r4")),
        Err(StabilityError::Catalog(crate::catalog::CatalogError::TypeDFailure { .. }))
    ));
}

#[test]
fn page_satisfies_the_eigen_relation() {
    let b = build_destabilizer(&entry("page")).unwrap();
    assert!(b.eigen_residual < EIGEN_TOL, "{}", b.eigen_residual);
}

#[test]
fn schwarzschild_second_variation_is_positive() {
    let b = build_destabilizer(&entry("schwarzschild")).unwrap();
    let rep = second_variation(&b, Some(20.0), policy(128)).unwrap();
    let row = &rep.rows[0];
    assert!(rep.q_eq19 > 0.0 && rep.verdict == Verdict::Unstable, "{rep:?}");
    assert!(row.ibp_residual.abs() < 1e-4, "{}", row.ibp_residual);
    assert!(rep.q_eq19 >= rep.p_pairing && rep.p_pairing >= rep.lower_bound - row.cutoff_term);
    assert_eq!(rep.minus_q_eq19, -rep.q_eq19);
    assert!(rep.isotropic);
}

#[test]
fn lower_bound_matches_radial_oracle() {
    let b = build_destabilizer(&entry("schwarzschild")).unwrap();
    let rep = second_variation(&b, Some(80.0), policy(256)).unwrap();
    let rel = (rep.lower_bound - SCHWARZSCHILD_LOWER_BOUND_R80).abs() / SCHWARZSCHILD_LOWER_BOUND_R80;
    assert!(rel < 1e-6, "{} vs {SCHWARZSCHILD_LOWER_BOUND_R80}", rep.lower_bound);
}

#[test]
fn quadratic_in_the_anti_self_dual_form() {
    let b = build_destabilizer(&entry("schwarzschild")).unwrap();
    let a = second_variation(&b, Some(20.0), policy(64)).unwrap();
    let s = second_variation(&b.scaled(3.0), Some(20.0), policy(64)).unwrap();
    assert!((s.q_eq19 - 9.0 * a.q_eq19).abs() < 1e-10 * s.q_eq19);
    assert_eq!(a.verdict, s.verdict);
}

#[test]
fn zero_direction_is_inconclusive() {
    let e = entry("flat_r4");
    let rep = second_variation(&DestabilizerBundle::zero(&e), None, GridPolicy { nodes_r: 4, nodes_theta: 4, nodes_periodic: 4 }).unwrap();
    assert_eq!(rep.q_eq19, 0.0);
    assert_eq!(rep.verdict, Verdict::Inconclusive);
}

#[test]
fn sweep_validates_radii_and_reduces_to_one_run() {
    let b = build_destabilizer(&entry("schwarzschild")).unwrap();
    assert!(matches!(sweep_cutoff(&b, &[20.0, 10.0], policy(32)), Err(StabilityError::RadiiNotIncreasing(_))));
    let one = sweep_cutoff(&b, &[20.0], policy(64)).unwrap();
    let direct = second_variation(&b, Some(20.0), policy(64)).unwrap();
    assert_eq!(one.to_json(), direct.to_json());
}

#[test]
fn sweep_csv_has_the_documented_columns() {
    let b = build_destabilizer(&entry("schwarzschild")).unwrap();
    let rep = sweep_cutoff(&b, &[10.0, 20.0], policy(32)).unwrap();
    let csv = rep.to_csv(false);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("R,Q_eq19,P_pairing,lower_bound,error_estimate,nodes_r,nodes_theta,runtime_s"));
    assert_eq!(lines.count(), 2);
    assert!(rep.cutoff_constant.unwrap() > 0.0);
    let v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
    assert_eq!(v["verdict"], "unstable");
}

#[test]
fn schwarzschild_decay_rates() {
    let b = build_destabilizer(&entry("schwarzschild")).unwrap();
    let radii: Vec<f64> = (0..8).map(|i| 10.0 * 10f64.powf(i as f64 / 7.0)).collect();
    let rep = decay_audit(&b, &radii).unwrap();
    for (s, want) in rep.slopes().iter().zip([1.0, -1.0, -2.0, -2.0]) {
        assert!((s - want).abs() < 0.15, "{:?}", rep.slopes());
    }
    assert!(matches!(decay_audit(&b, &radii[..5]), Err(StabilityError::TooFewRadii { .. })));
    assert!(matches!(decay_audit(&b, &[1.0; 8].map(|x: f64| x)), Err(StabilityError::TooFewRadii { .. })));
}
