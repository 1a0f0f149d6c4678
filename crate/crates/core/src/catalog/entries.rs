use std::f64::consts::PI;
use std::sync::Arc;

use super::{AlfDescriptor, AsdFormRule, CatalogEntry, CatalogError, EntryClass, KahlerPayload};
use crate::curvature::{CoordDecl, MetricSpec};
use crate::expr::{parse_expr, Expr, ParamEnv};

pub const CATALOG_NAMES: [&str; 8] =
    ["flat_r4", "round_s4", "schwarzschild", "kerr", "taub_bolt", "taub_nut", "eguchi_hanson", "page"];

/// `(radial, fiber, fiber length, base, model components)` of an ALF end.
type AsymptoticDecl = (usize, usize, f64, &'static str, Vec<(usize, usize, &'static str)>);

struct Coord<'a> {
    name: &'a str,
    lo: Option<&'a str>,
    hi: Option<&'a str>,
    period: Option<&'a str>,
}

const fn interval<'a>(name: &'a str, lo: Option<&'a str>, hi: Option<&'a str>) -> Coord<'a> {
    Coord { name, lo, hi, period: None }
}

const fn periodic<'a>(name: &'a str, period: &'a str) -> Coord<'a> {
    Coord { name, lo: None, hi: None, period: Some(period) }
}

fn build_spec(
    name: &str,
    params: &ParamEnv,
    coords: &[Coord],
    comps: &[(usize, usize, &str)],
) -> Result<MetricSpec, CatalogError> {
    let names: Vec<&str> = coords.iter().map(|c| c.name).collect();
    let pnames: Vec<&str> = params.iter().map(|(k, _)| k).collect();
    let scope = crate::expr::Scope::new(&names, &pnames);
    let opt = |s: Option<&str>| s.map(|s| parse_expr(s, &scope)).transpose();
    let decls = coords
        .iter()
        .map(|c| Ok(CoordDecl::new(c.name, opt(c.lo)?, opt(c.hi)?, opt(c.period)?)))
        .collect::<Result<Vec<_>, crate::expr::ExprError>>()?;
    let mut spec = MetricSpec::new(name, params.clone(), decls);
    for &(i, j, src) in comps {
        spec.set(i, j, parse_expr(src, &scope)?);
    }
    Ok(spec)
}

fn expr(spec: &MetricSpec, src: &str) -> Result<Expr, CatalogError> {
    Ok(parse_expr(src, &spec.scope())?)
}

fn merged(defaults: &[(&str, f64)], env: &ParamEnv) -> ParamEnv {
    let mut out = ParamEnv::new();
    for (k, v) in defaults {
        out.set(k, env.get(k).unwrap_or(*v));
    }
    out
}

fn require_positive(env: &ParamEnv, name: &str) -> Result<f64, CatalogError> {
    let v = env.get(name).unwrap_or(f64::NAN);
    if !(v > 0.0) || !v.is_finite() {
        return Err(CatalogError::OutOfRange { param: name.into(), value: v, reason: "must be positive".into() });
    }
    Ok(v)
}

struct Assembled {
    spec: MetricSpec,
    lambda: f64,
    class: EntryClass,
    kahler: Option<KahlerPayload>,
    asd_rule: AsdFormRule,
    asymptotic: Option<AsymptoticDecl>,
    sample_domain: [(f64, f64); 4],
    radial: Option<usize>,
    polar: Option<usize>,
}

/// Look up a built-in metric, overriding its default parameters by `env`.
pub fn get_entry(name: &str, env: &ParamEnv) -> Result<CatalogEntry, CatalogError> {
    let a = match name {
        "flat_r4" => flat_r4()?,
        "round_s4" => round_s4()?,
        "schwarzschild" => schwarzschild(env)?,
        "kerr" => kerr(env)?,
        "taub_bolt" => taub_nut_family(env, true)?,
        "taub_nut" => taub_nut_family(env, false)?,
        "eguchi_hanson" => eguchi_hanson(env)?,
        "page" => page()?,
        other => {
            return Err(CatalogError::UnknownEntry {
                name: other.to_string(),
                available: CATALOG_NAMES.join(", "),
                hint: "Other metrics (for example the Chen-Teo family) can be supplied as .gms files; \
                       see \"Adding a metric\" in the README."
                    .into(),
            })
        }
    };
    let spec = Arc::new(a.spec);
    let metric = Arc::new(spec.compile(&ParamEnv::new())?);
    let asymptotic = match a.asymptotic {
        Some((r, fiber, fiber_length, base, comps)) => {
            let coords: Vec<Coord> = spec
                .coords
                .iter()
                .map(|c| Coord { name: c.name.as_str(), lo: None, hi: None, period: None })
                .collect();
            let model = build_spec(&format!("{}_model", spec.name), &spec.params, &coords, &comps)?;
            Some(AlfDescriptor { r, fiber, fiber_length, base, model: Arc::new(model) })
        }
        None => None,
    };
    Ok(CatalogEntry {
        name: name.to_string(),
        spec,
        metric,
        einstein_constant: a.lambda,
        class: a.class,
        kahler: a.kahler,
        asd_rule: a.asd_rule,
        asymptotic,
        sample_domain: a.sample_domain,
        radial: a.radial,
        polar: a.polar,
    })
}

fn flat_r4() -> Result<Assembled, CatalogError> {
    let spec = build_spec(
        "flat_r4",
        &ParamEnv::new(),
        &[interval("x", None, None), interval("y", None, None), interval("z", None, None), interval("w", None, None)],
        &[(0, 0, "1"), (1, 1, "1"), (2, 2, "1"), (3, 3, "1")],
    )?;
    Ok(Assembled {
        spec,
        lambda: 0.0,
        class: EntryClass::FlatControl,
        kahler: None,
        asd_rule: AsdFormRule::None,
        asymptotic: None,
        sample_domain: [(-3.0, 3.0); 4],
        radial: None,
        polar: None,
    })
}

fn round_s4() -> Result<Assembled, CatalogError> {
    let spec = build_spec(
        "round_s4",
        &ParamEnv::new(),
        &[
            interval("chi", Some("0"), Some("pi")),
            interval("theta", Some("0"), Some("pi")),
            interval("phi", Some("0"), Some("pi")),
            periodic("psi", "2*pi"),
        ],
        &[
            (0, 0, "1"),
            (1, 1, "sin(chi)^2"),
            (2, 2, "sin(chi)^2*sin(theta)^2"),
            (3, 3, "sin(chi)^2*sin(theta)^2*sin(phi)^2"),
        ],
    )?;
    let inner = (0.3, PI - 0.3);
    Ok(Assembled {
        spec,
        lambda: 3.0,
        class: EntryClass::CompactPositive,
        kahler: None,
        asd_rule: AsdFormRule::None,
        asymptotic: None,
        sample_domain: [inner, inner, inner, (0.0, 2.0 * PI)],
        radial: None,
        polar: None,
    })
}

fn schwarzschild(env: &ParamEnv) -> Result<Assembled, CatalogError> {
    let params = merged(&[("m", 1.0)], env);
    let m = require_positive(&params, "m")?;
    let spec = build_spec(
        "schwarzschild",
        &params,
        &[
            interval("r", Some("2*m"), None),
            periodic("t", "8*pi*m"),
            interval("theta", Some("0"), Some("pi")),
            periodic("phi", "2*pi"),
        ],
        &[(0, 0, "1/(1 - 2*m/r)"), (1, 1, "1 - 2*m/r"), (2, 2, "r^2"), (3, 3, "r^2*sin(theta)^2")],
    )?;
    let kahler = KahlerPayload {
        f: Some(expr(&spec, "r/(2*m)^(1/3)")?),
        reference: (0, 1),
        killing_field: Some([Expr::zero(), Expr::one(), Expr::zero(), Expr::zero()]),
    };
    Ok(Assembled {
        spec,
        lambda: 0.0,
        class: EntryClass::AlfRicciFlat,
        kahler: Some(kahler),
        asd_rule: AsdFormRule::FromKilling,
        asymptotic: Some((0, 1, 8.0 * PI * m, "S2", vec![(0, 0, "1"), (1, 1, "1"), (2, 2, "r^2"), (3, 3, "r^2*sin(theta)^2")])),
        sample_domain: [(2.5 * m, 20.0 * m), (0.0, 8.0 * PI * m), (0.15, PI - 0.15), (0.0, 2.0 * PI)],
        radial: Some(0),
        polar: Some(2),
    })
}

/// Riemannian Kerr: `Σ = r² − a²cos²θ`, `Δ = r² − 2mr − a²`.
fn kerr(env: &ParamEnv) -> Result<Assembled, CatalogError> {
    let params = merged(&[("m", 1.0), ("a", 0.3)], env);
    let m = require_positive(&params, "m")?;
    let a = params.get("a").unwrap_or(f64::NAN);
    if !(a.abs() < m) {
        return Err(CatalogError::OutOfRange { param: "a".into(), value: a, reason: "requires |a| < m".into() });
    }
    let rp = m + (m * m + a * a).sqrt();
    // (t, φ) are identified with a twist; the fundamental cell still has area 2π·β.
    let beta = "4*pi*((m + sqrt(m^2 + a^2))^2 - a^2)/(2*sqrt(m^2 + a^2))";
    let sigma = "(r^2 - a^2*cos(theta)^2)";
    let delta = "(r^2 - 2*m*r - a^2)";
    let g_rr = format!("{sigma}/{delta}");
    let g_tt = format!("({delta} + a^2*sin(theta)^2)/{sigma}");
    let g_tp = format!("a*sin(theta)^2*(r^2 - a^2 - {delta})/{sigma}");
    let g_pp = format!("sin(theta)^2*({delta}*a^2*sin(theta)^2 + (r^2 - a^2)^2)/{sigma}");
    let spec = build_spec(
        "kerr",
        &params,
        &[
            interval("r", Some("m + sqrt(m^2 + a^2)"), None),
            periodic("t", beta),
            interval("theta", Some("0"), Some("pi")),
            periodic("phi", "2*pi"),
        ],
        &[(0, 0, &g_rr), (1, 1, &g_tt), (1, 3, &g_tp), (2, 2, sigma), (3, 3, &g_pp)],
    )?;
    let beta_v = expr(&spec, beta)?.evaluate(&[0.0; 4], &params)?;
    let kahler = KahlerPayload {
        f: Some(expr(&spec, "(r - a*cos(theta))/(2*m)^(1/3)")?),
        reference: (0, 1),
        killing_field: Some([Expr::zero(), Expr::one(), Expr::zero(), Expr::zero()]),
    };
    Ok(Assembled {
        spec,
        lambda: 0.0,
        class: EntryClass::AlfRicciFlat,
        kahler: Some(kahler),
        asd_rule: AsdFormRule::FromKilling,
        asymptotic: Some((0, 1, beta_v, "S2", vec![(0, 0, "1"), (1, 1, "1"), (2, 2, "r^2"), (3, 3, "r^2*sin(theta)^2")])),
        sample_domain: [(rp + 0.5 * m, 20.0 * m), (0.0, beta_v), (0.15, PI - 0.15), (0.0, 2.0 * PI)],
        radial: Some(0),
        polar: Some(2),
    })
}

/// Euclidean Taub-NUT family `Δ = r² − 2mr + n²`: the bolt at `m = 5n/4`
/// and the self-dual nut at `m = n`.
fn taub_nut_family(env: &ParamEnv, bolt: bool) -> Result<Assembled, CatalogError> {
    let params = merged(&[("n", 1.0)], env);
    let n = require_positive(&params, "n")?;
    let (name, delta, r_lo, f_src, class) = if bolt {
        ("taub_bolt", "(r^2 - 5*n*r/2 + n^2)", "2*n", "(r - n)/(n/2)^(1/3)", EntryClass::AlfRicciFlat)
    } else {
        ("taub_nut", "(r - n)^2", "n", "(r + n)/(4*n)^(1/3)", EntryClass::HyperkahlerControl)
    };
    let fib = format!("4*n^2*{delta}/(r^2 - n^2)");
    let spec = build_spec(
        name,
        &params,
        &[
            interval("r", Some(r_lo), None),
            interval("theta", Some("0"), Some("pi")),
            periodic("phi", "2*pi"),
            periodic("psi", "4*pi"),
        ],
        &[
            (0, 0, &format!("(r^2 - n^2)/{delta}")),
            (1, 1, "r^2 - n^2"),
            (2, 2, &format!("(r^2 - n^2)*sin(theta)^2 + {fib}*cos(theta)^2")),
            (2, 3, &format!("{fib}*cos(theta)")),
            (3, 3, &fib),
        ],
    )?;
    let orientation = if bolt { [0, 1, 2, 3] } else { [0, 1, 3, 2] };
    let spec = spec.with_orientation(orientation);
    let kahler = KahlerPayload {
        f: Some(expr(&spec, f_src)?),
        reference: (0, 3),
        killing_field: Some([Expr::zero(), Expr::zero(), Expr::zero(), expr(&spec, "1/(2*n)")?]),
    };
    let r0 = if bolt { 2.0 * n } else { n };
    Ok(Assembled {
        spec,
        lambda: 0.0,
        class,
        kahler: Some(kahler),
        asd_rule: AsdFormRule::FromKilling,
        asymptotic: Some((
            0,
            3,
            8.0 * PI * n,
            "S2",
            vec![
                (0, 0, "1"),
                (1, 1, "r^2"),
                (2, 2, "r^2*sin(theta)^2 + 4*n^2*cos(theta)^2"),
                (2, 3, "4*n^2*cos(theta)"),
                (3, 3, "4*n^2"),
            ],
        )),
        sample_domain: [(1.25 * r0, 20.0 * n), (0.15, PI - 0.15), (0.0, 2.0 * PI), (0.0, 4.0 * PI)],
        radial: Some(0),
        polar: Some(1),
    })
}

fn eguchi_hanson(env: &ParamEnv) -> Result<Assembled, CatalogError> {
    let params = merged(&[("a", 1.0)], env);
    let a = require_positive(&params, "a")?;
    let fib = "r^2*(1 - a^4/r^4)/4";
    let spec = build_spec(
        "eguchi_hanson",
        &params,
        &[
            interval("r", Some("a"), None),
            interval("theta", Some("0"), Some("pi")),
            periodic("phi", "2*pi"),
            periodic("psi", "2*pi"),
        ],
        &[
            (0, 0, "1/(1 - a^4/r^4)"),
            (1, 1, "r^2/4"),
            (2, 2, &format!("r^2*sin(theta)^2/4 + {fib}*cos(theta)^2")),
            (2, 3, &format!("{fib}*cos(theta)")),
            (3, 3, fib),
        ],
    )?;
    let kahler = KahlerPayload {
        f: None,
        reference: (0, 3),
        killing_field: Some([Expr::zero(), Expr::zero(), Expr::zero(), Expr::one()]),
    };
    Ok(Assembled {
        spec,
        lambda: 0.0,
        class: EntryClass::HyperkahlerControl,
        kahler: Some(kahler),
        asd_rule: AsdFormRule::FromKilling,
        asymptotic: None,
        sample_domain: [(1.3 * a, 10.0 * a), (0.15, PI - 0.15), (0.0, 2.0 * PI), (0.0, 2.0 * PI)],
        radial: Some(0),
        polar: Some(1),
    })
}

/// Parameters of the Page metric in the biaxial Bianchi IX form
/// `(n²−r²)/Δ dr² + (n²−r²)(σ₁²+σ₂²) + 4n²Δ/(n²−r²) σ₃²` with
/// `Δ = r⁴ + (1 − 6n²)r² + n² − 3n⁴` (Einstein constant 3). Returns `(n, r_b)`
/// such that both bolts `r = ±r_b` close smoothly with `ψ`-period `4π`.
pub(crate) fn page_parameters() -> (f64, f64) {
    fn bolt(n: f64) -> Option<(f64, f64)> {
        let b = 1.0 - 6.0 * n * n;
        let c = n * n - 3.0 * n.powi(4);
        let disc = b * b - 4.0 * c;
        if disc < 0.0 {
            return None;
        }
        let s = (-b - disc.sqrt()) / 2.0;
        let s = if s > 0.0 { s } else { (-b + disc.sqrt()) / 2.0 };
        if !(s > 0.0 && s < n * n) {
            return None;
        }
        let r = s.sqrt();
        let dd = 4.0 * r.powi(3) + 2.0 * b * r;
        Some((n * dd.abs() / (n * n - s) - 0.5, r))
    }
    let (mut lo, mut hi) = (0.55, 0.565);
    let f_lo = bolt(lo).expect("Page bracket").0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match bolt(mid) {
            Some((v, _)) if (v > 0.0) == (f_lo > 0.0) => lo = mid,
            _ => hi = mid,
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    let n = 0.5 * (lo + hi);
    (n, bolt(n).expect("Page root").1)
}

fn page() -> Result<Assembled, CatalogError> {
    let (n, rb) = page_parameters();
    let params = ParamEnv::new().with("n", n).with("rb", rb);
    let delta = "(r^4 + (1 - 6*n^2)*r^2 + n^2 - 3*n^4)";
    let fib = format!("4*n^2*{delta}/(n^2 - r^2)");
    let spec = build_spec(
        "page",
        &params,
        &[
            interval("r", Some("-rb"), Some("rb")),
            interval("theta", Some("0"), Some("pi")),
            periodic("phi", "2*pi"),
            periodic("psi", "4*pi"),
        ],
        &[
            (0, 0, &format!("(n^2 - r^2)/{delta}")),
            (1, 1, "n^2 - r^2"),
            (2, 2, &format!("(n^2 - r^2)*sin(theta)^2 + {fib}*cos(theta)^2")),
            (2, 3, &format!("{fib}*cos(theta)")),
            (3, 3, &fib),
        ],
    )?;
    let sigma3 = [Expr::zero(), Expr::zero(), expr(&spec, "cos(theta)")?, Expr::one()];
    let kahler = KahlerPayload { f: None, reference: (0, 3), killing_field: None };
    Ok(Assembled {
        spec,
        lambda: 3.0,
        class: EntryClass::CompactPositive,
        kahler: Some(kahler),
        asd_rule: AsdFormRule::OdeAnsatz { r: 0, sigma: sigma3, base: 0.0 },
        asymptotic: None,
        sample_domain: [(-0.9 * rb, 0.9 * rb), (0.15, PI - 0.15), (0.0, 2.0 * PI), (0.0, 4.0 * PI)],
        radial: Some(0),
        polar: Some(1),
    })
}
