use std::sync::Arc;

use nalgebra::Matrix4;

use super::*;
use crate::expr::{parse_expr, ParamEnv};

fn spec_from(name: &str, coords: &[&str], params: &[(&str, f64)], comps: &[(usize, usize, &str)]) -> Arc<MetricSpec> {
    let mut env = ParamEnv::new();
    for (k, v) in params {
        env.set(k, *v);
    }
    let decls = coords.iter().map(|c| CoordDecl::new(c, None, None, None)).collect();
    let mut spec = MetricSpec::new(name, env, decls);
    let scope = spec.scope();
    for &(i, j, src) in comps {
        spec.set(i, j, parse_expr(src, &scope).unwrap());
    }
    Arc::new(spec)
}

fn schwarzschild() -> Arc<MetricSpec> {
    spec_from(
        "schwarzschild",
        &["r", "t", "theta", "phi"],
        &[("m", 1.0)],
        &[(0, 0, "1/(1 - 2*m/r)"), (1, 1, "1 - 2*m/r"), (2, 2, "r^2"), (3, 3, "r^2*sin(theta)^2")],
    )
}

fn round_s4() -> Arc<MetricSpec> {
    spec_from(
        "round_s4",
        &["chi", "theta", "phi", "psi"],
        &[],
        &[
            (0, 0, "1"),
            (1, 1, "sin(chi)^2"),
            (2, 2, "sin(chi)^2*sin(theta)^2"),
            (3, 3, "sin(chi)^2*sin(theta)^2*sin(phi)^2"),
        ],
    )
}

fn flat() -> Arc<MetricSpec> {
    spec_from("flat", &["x", "y", "z", "w"], &[], &[(0, 0, "1"), (1, 1, "1"), (2, 2, "1"), (3, 3, "1")])
}

fn eval(spec: &Arc<MetricSpec>) -> MetricEval {
    spec.compile(&ParamEnv::new()).unwrap()
}

// Independent oracle: Christoffels by central differences of g, Riemann by
// central differences of those Christoffels.
fn fd_riemann(metric: &MetricEval, p: &[f64; 4]) -> Rank4 {
    let h = 1e-3;
    let gamma_at = |q: &[f64; 4]| {
        let gq = metric.metric(q).unwrap();
        let gi = gq.try_inverse().unwrap();
        let dg: [Matrix4<f64>; 4] = std::array::from_fn(|k| {
            let mut a = *q;
            let mut b = *q;
            let mut a2 = *q;
            let mut b2 = *q;
            a[k] += h;
            b[k] -= h;
            a2[k] += 2.0 * h;
            b2[k] -= 2.0 * h;
            (metric.metric(&a).unwrap() * 8.0 - metric.metric(&b).unwrap() * 8.0
                - metric.metric(&a2).unwrap()
                + metric.metric(&b2).unwrap())
                / (12.0 * h)
        });
        let mut gam = [[[0.0; 4]; 4]; 4];
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    gam[k][i][j] = (0..4)
                        .map(|l| 0.5 * gi[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]))
                        .sum();
                }
            }
        }
        gam
    };
    let gamma = gamma_at(p);
    let mut dgamma = [[[[0.0; 4]; 4]; 4]; 4];
    for m in 0..4 {
        let mut a = *p;
        let mut b = *p;
        let mut a2 = *p;
        let mut b2 = *p;
        a[m] += h;
        b[m] -= h;
        a2[m] += 2.0 * h;
        b2[m] -= 2.0 * h;
        let (ga, gb, ga2, gb2) = (gamma_at(&a), gamma_at(&b), gamma_at(&a2), gamma_at(&b2));
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    dgamma[m][k][i][j] =
                        (8.0 * ga[k][i][j] - 8.0 * gb[k][i][j] - ga2[k][i][j] + gb2[k][i][j]) / (12.0 * h);
                }
            }
        }
    }
    riemann_lowered(&metric.metric(p).unwrap(), &gamma, &dgamma)
}

#[test]
fn flat_space_is_flat() {
    let m = eval(&flat());
    let pack = curvature_at(&m, &[0.3, -1.0, 2.0, 0.5]).unwrap();
    assert_eq!(pack.scal, 0.0);
    assert_eq!(pack.w_plus.abs().max(), 0.0);
    assert_eq!(pack.ricci.abs().max(), 0.0);
}

#[test]
fn round_sphere_constants() {
    let m = eval(&round_s4());
    let pack = curvature_at(&m, &[1.1, 0.7, 2.0, 0.4]).unwrap();
    assert!((pack.scal - 12.0).abs() < 1e-12);
    assert!((pack.ricci - pack.frame.g * 3.0).abs().max() < 1e-12);
    assert!(pack.w_plus.abs().max() < 1e-12 && pack.w_minus.abs().max() < 1e-12);
    let r = einstein_residual(&m, &[[1.1, 0.7, 2.0, 0.4], [0.5, 1.5, 1.0, 0.0]]).unwrap();
    assert!((r.lambda - 3.0).abs() < 1e-12 && r.max_residual < 1e-12);
}

#[test]
fn schwarzschild_is_ricci_flat_type_d() {
    let m = eval(&schwarzschild());
    let pack = curvature_at(&m, &[4.0, 0.0, 1.0, 0.0]).unwrap();
    assert!(pack.ricci.abs().max() < 1e-12);
    let (vals, _) = pack.w_plus_eigen();
    // simple eigenvalue 2m/r³, double eigenvalue −m/r³
    assert!((vals[2] - 2.0 / 64.0).abs() < 1e-12);
    assert!((vals[0] + 1.0 / 64.0).abs() < 1e-12 && (vals[1] + 1.0 / 64.0).abs() < 1e-12);
    assert!(pack.w_plus.trace().abs() < 1e-12 && pack.w_minus.trace().abs() < 1e-12);
}

#[test]
fn schwarzschild_matches_finite_difference_oracle() {
    let m = eval(&schwarzschild());
    let p = [4.0, 0.3, 1.0, 0.2];
    let pack = curvature_at(&m, &p).unwrap();
    let oracle = fd_riemann(&m, &p);
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    assert!((pack.riemann[i][j][k][l] - oracle[i][j][k][l]).abs() < 1e-7);
                }
            }
        }
    }
}

#[test]
fn riemann_symmetries_hold() {
    let m = eval(&schwarzschild());
    for p in sample_box(&[(2.5, 30.0), (0.0, 1.0), (0.2, 2.9), (0.0, 6.0)], 100, 11) {
        assert!(curvature_at(&m, &p).unwrap().symmetry_residual() < 1e-9);
    }
}

#[test]
fn rm_action_conventions() {
    let pack = curvature_at(&eval(&flat()), &[0.0; 4]).unwrap();
    let h = SymT2::from_matrix(&Matrix4::from_fn(|i, j| (i + 2 * j) as f64));
    assert_eq!(rm_action(&pack, &h).max_abs(), 0.0);
    let s = eval(&round_s4());
    let pack = curvature_at(&s, &[0.9, 1.2, 0.8, 0.1]).unwrap();
    let f = &pack.frame;
    let raw = SymT2::from_matrix(&Matrix4::from_fn(|i, j| 1.0 / (1.0 + i as f64 + j as f64)));
    // brute force: (tr h) g − h
    let expected = SymT2::from_matrix(&(f.g * raw.trace(f) - raw.to_matrix()));
    assert!((rm_action(&pack, &raw) - expected).max_abs() < 1e-12);
    let tf = raw.trace_free_part(f);
    assert!((rm_action(&pack, &tf) + tf).max_abs() < 1e-12);
    let sum = rm_action(&pack, &(raw * 2.0 + tf));
    assert!((sum - (rm_action(&pack, &raw) * 2.0 + rm_action(&pack, &tf))).max_abs() < 1e-12);
}

#[test]
fn weyl_plus_action_on_forms() {
    let pack = curvature_at(&eval(&flat()), &[0.0; 4]).unwrap();
    let w = Form2::from_sd_coeffs(&pack.frame, &[1.0, 2.0, 3.0]);
    assert_eq!(weyl_plus_action(&pack, &w).unwrap().max_abs(), 0.0);
    let asd = Form2::from_asd_coeffs(&pack.frame, &[1.0, 0.0, 0.0]);
    assert!(weyl_plus_action(&pack, &asd).is_err());
}

#[test]
fn perturbed_metric_is_not_einstein() {
    let spec = spec_from(
        "perturbed",
        &["r", "t", "theta", "phi"],
        &[("m", 1.0)],
        &[(0, 0, "1/(1 - 2*m/r)"), (1, 1, "(1 - 2*m/r)*(1 + 0.5*sin(theta)^2)"), (2, 2, "r^2"), (3, 3, "r^2*sin(theta)^2")],
    );
    let m = eval(&spec);
    let pts = sample_box(&[(3.0, 5.0), (0.0, 1.0), (0.5, 2.5), (0.0, 6.0)], 10, 3);
    assert!(einstein_residual(&m, &pts).unwrap().max_residual > 1e-2);
}

#[test]
fn weyl_is_conformally_covariant() {
    let s = schwarzschild();
    let scope = s.scope();
    let phi = parse_expr("exp(0.1*sin(theta) + 0.05*r)", &scope).unwrap();
    let pts = sample_box(&[(3.0, 10.0), (0.0, 1.0), (0.5, 2.5), (0.0, 6.0)], 10, 4);
    let conf = Arc::new(conformal_metric(&s, &phi, &ParamEnv::new(), &pts).unwrap());
    let (m0, m1) = (eval(&s), eval(&conf));
    for p in &pts {
        let a = curvature_at(&m0, p).unwrap();
        let b = curvature_at(&m1, p).unwrap();
        let f2 = phi.evaluate(p, &m0.env).unwrap().powi(2);
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        assert!((b.weyl[i][j][k][l] - f2 * a.weyl[i][j][k][l]).abs() < 1e-7);
                    }
                }
            }
        }
        // as an endomorphism, W₊ scales by φ⁻²
        assert!((b.w_plus * f2 - a.w_plus).abs().max() < 1e-9);
    }
    let bad = parse_expr("r - 5", &scope).unwrap();
    assert!(matches!(
        conformal_metric(&s, &bad, &ParamEnv::new(), &pts),
        Err(CurvatureError::NonPositiveFactor { .. })
    ));
}

#[test]
fn conformally_flat_rescaling_of_flat_space() {
    let s = flat();
    let phi = parse_expr("exp(x)", &s.scope()).unwrap();
    let conf = Arc::new(conformal_metric(&s, &phi, &ParamEnv::new(), &[]).unwrap());
    let pack = curvature_at(&eval(&conf), &[0.2, 0.1, -0.3, 0.4]).unwrap();
    assert!(pack.w_plus.abs().max() < 1e-12 && pack.w_minus.abs().max() < 1e-12);
    assert!(pack.scal.abs() > 1e-3);
}

#[test]
fn degenerate_metric_is_reported() {
    let m = eval(&schwarzschild());
    assert!(matches!(curvature_at(&m, &[1.0, 0.0, 1.0, 0.0]), Err(CurvatureError::Degenerate { .. })));
}
