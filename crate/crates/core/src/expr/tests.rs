use super::*;
use proptest::prelude::*;

fn scope() -> Scope {
    Scope::new(&["r", "t", "theta", "phi"], &["m", "a"])
}

fn env() -> ParamEnv {
    ParamEnv::new().with("m", 1.0).with("a", 0.3)
}

#[test]
fn parses_schwarzschild_lapse() {
    let s = Scope::new(&["r"], &["m"]);
    let e = parse_expr("1 - 2*m/r", &s).unwrap();
    let two_m = Expr::binary_raw(BinaryOp::Mul, Expr::constant(2.0), Expr::param("m"));
    let expected = Expr::binary_raw(
        BinaryOp::Sub,
        Expr::constant(1.0),
        Expr::binary_raw(BinaryOp::Div, two_m, Expr::coord(0, "r")),
    );
    assert_eq!(e, expected);
    let v = e.evaluate(&[4.0], &ParamEnv::new().with("m", 1.0)).unwrap();
    assert_eq!(v, 0.5);
}

#[test]
fn evaluates_angular_factor() {
    let e = parse_expr("r^2 * sin(theta)^2", &scope()).unwrap();
    let v = e.evaluate(&[2.0, 0.0, std::f64::consts::FRAC_PI_2, 0.0], &env()).unwrap();
    assert!((v - 4.0).abs() < 1e-15);
}

#[test]
fn undeclared_identifier_is_reported() {
    let s = Scope::new(&["r"], &[]);
    match parse_expr("foo + 1", &s) {
        Err(ExprError::Undeclared { name, line, col }) => {
            assert_eq!(name, "foo");
            assert_eq!((line, col), (1, 1));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn syntax_error_has_position() {
    match parse_expr("r +\n  * 2", &scope()) {
        Err(ExprError::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 3)),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn pi_is_reserved() {
    let e = parse_expr("pi", &scope()).unwrap();
    assert_eq!(e.evaluate(&[0.0; 4], &env()).unwrap(), std::f64::consts::PI);
    assert_eq!(e.to_string(), "pi");
}

#[test]
fn sqrt_of_negative_is_domain_error() {
    let e = parse_expr("sqrt(r)", &scope()).unwrap();
    match e.evaluate(&[-1.0, 0.0, 0.0, 0.0], &env()) {
        Err(ExprError::Domain { op, subexpr, .. }) => {
            assert_eq!(op, "sqrt");
            assert_eq!(subexpr, "sqrt(r)");
        }
        other => panic!("unexpected {other:?}"),
    }
    let p = Program::compile(&[e], &env()).unwrap();
    assert!(matches!(p.eval(&[-1.0, 0.0, 0.0, 0.0]), Err(ExprError::Domain { .. })));
}

#[test]
fn log_and_division_domain_errors() {
    let e = parse_expr("log(r - 1)", &scope()).unwrap();
    assert!(e.evaluate(&[1.0, 0.0, 0.0, 0.0], &env()).is_err());
    let e = parse_expr("1 / (r - 2)", &scope()).unwrap();
    assert!(e.evaluate(&[2.0, 0.0, 0.0, 0.0], &env()).is_err());
}

#[test]
fn derivative_examples() {
    let s = scope();
    let lapse = parse_expr("1 - 2*m/r", &s).unwrap();
    let d = lapse.differentiate(0, 1);
    let expected = parse_expr("2*m/r^2", &s).unwrap();
    for r in [2.5, 3.0, 7.0] {
        let p = [r, 0.0, 0.0, 0.0];
        assert!((d.evaluate(&p, &env()).unwrap() - expected.evaluate(&p, &env()).unwrap()).abs() < 1e-15);
    }
    let sin = parse_expr("sin(theta)", &s).unwrap();
    let d2 = sin.differentiate(2, 2);
    for th in [0.1, 1.0, 2.5] {
        let p = [1.0, 0.0, th, 0.0];
        assert!((d2.evaluate(&p, &env()).unwrap() + th.sin()).abs() < 1e-15);
    }
    let only_params = parse_expr("m^2 * a + 3", &s).unwrap();
    assert_eq!(only_params.differentiate(0, 1), Expr::zero());
}

#[test]
fn zero_order_is_identity() {
    let e = parse_expr("r*t", &scope()).unwrap();
    assert_eq!(e.differentiate(0, 0), e);
}

#[test]
fn program_matches_recursive_evaluation() {
    let s = scope();
    let e = parse_expr("(r^2 - 2*m*r + a^2) / (r^2 + a^2*cos(theta)^2)", &s).unwrap();
    let exprs = vec![
        e.clone(),
        e.differentiate(0, 1),
        e.differentiate(2, 2),
        e.differentiate(0, 1).differentiate(2, 1),
    ];
    let prog = Program::compile(&exprs, &env()).unwrap();
    let p = [3.3, 0.0, 0.7, 0.0];
    let vals = prog.eval(&p).unwrap();
    for (x, v) in exprs.iter().zip(&vals) {
        assert!((x.evaluate(&p, &env()).unwrap() - v).abs() < 1e-13);
    }
}

#[test]
fn unbound_parameter() {
    let e = parse_expr("m*r", &scope()).unwrap();
    assert!(matches!(e.evaluate(&[1.0; 4], &ParamEnv::new()), Err(ExprError::UnboundParam(_))));
}

#[test]
fn simplification_rules() {
    let x = Expr::coord(0, "r");
    assert_eq!(&x * 1.0, x);
    assert_eq!(&x + 0.0, x);
    assert_eq!(0.0 * &x, Expr::zero());
    assert_eq!((Expr::constant(2.0) * Expr::constant(3.0)).as_const(), Some(6.0));
}

// Oracle: Ridders' extrapolated central difference, with its error estimate.
fn central_fd(e: &Expr, p: &[f64; 4], wrt: usize) -> (f64, f64) {
    let f = |s: f64| {
        let mut q = *p;
        q[wrt] += s;
        e.evaluate(&q, &env()).unwrap()
    };
    const CON: f64 = 1.4;
    const N: usize = 12;
    let mut a = [[0.0f64; N]; N];
    let mut h = 2e-2 * p[wrt].abs().max(1.0);
    a[0][0] = (f(h) - f(-h)) / (2.0 * h);
    let (mut best, mut err) = (a[0][0], f64::INFINITY);
    for i in 1..N {
        h /= CON;
        a[0][i] = (f(h) - f(-h)) / (2.0 * h);
        let mut fac = CON * CON;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= CON * CON;
            let e = (a[j][i] - a[j - 1][i]).abs().max((a[j][i] - a[j - 1][i - 1]).abs());
            if e <= err {
                err = e;
                best = a[j][i];
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= 2.0 * err {
            break;
        }
    }
    (best, err)
}

fn arb_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("r".to_string()),
        Just("theta".to_string()),
        Just("m".to_string()),
        (1u32..9).prop_map(|n| n.to_string()),
        Just("0.5".to_string()),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} / ({b} * {b} + 1))")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("exp(0.1 * tanh({a}))")),
            inner.clone().prop_map(|a| format!("sqrt(1 + {a} * {a})")),
            inner.clone().prop_map(|a| format!("-{a}")),
            inner.clone().prop_map(|a| format!("({a}) ^ 2")),
            inner.prop_map(|a| format!("cos(0.2 * {a})")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig { rng_seed: proptest::test_runner::RngSeed::Fixed(0x5eed), ..ProptestConfig::with_cases(128) })]

    #[test]
    fn serialization_round_trips(src in arb_expr()) {
        let s = scope();
        let a = parse_expr(&src, &s).unwrap();
        let b = parse_expr(&a.to_string(), &s).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.to_string(), b.to_string());
    }

    #[test]
    fn derivative_agrees_with_central_difference(src in arb_expr(), r in 1.5f64..4.0, th in 0.3f64..2.8) {
        let s = scope();
        let e = parse_expr(&src, &s).unwrap();
        let p = [r, 0.0, th, 0.0];
        for wrt in [0usize, 2] {
            let exact = e.differentiate(wrt, 1).evaluate(&p, &env()).unwrap();
            let (fd, err) = central_fd(&e, &p, wrt);
            // Skip the rare inputs (e.g. sin(r⁴)) too oscillatory for the oracle to resolve.
            prop_assume!(err < 1e-9 * (1.0 + fd.abs()));
            prop_assert!((exact - fd).abs() <= 1e-7 * (1.0 + exact.abs()), "{} vs {}", exact, fd);
        }
    }

    #[test]
    fn derivative_is_linear(a in arb_expr(), b in arb_expr(), ca in -3.0f64..3.0, cb in -3.0f64..3.0) {
        let s = scope();
        let (ea, eb) = (parse_expr(&a, &s).unwrap(), parse_expr(&b, &s).unwrap());
        let comb = ca * &ea + cb * &eb;
        let p = [2.2, 0.0, 1.1, 0.0];
        let lhs = comb.differentiate(0, 1).evaluate(&p, &env()).unwrap();
        let rhs = ca * ea.differentiate(0, 1).evaluate(&p, &env()).unwrap()
            + cb * eb.differentiate(0, 1).evaluate(&p, &env()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }
}
