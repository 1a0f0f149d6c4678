//! The operator identity suite: pointwise algebra, the agreement of
//! independent routes to the same differential operator, conformal
//! covariance of `P`, and the Killing-type identities of conformally Kähler
//! metrics.
//!
//! Every check reports a relative residual against a fixed tolerance. Checks
//! that need structure an entry lacks (a type-D⁺ Weyl tensor, a non-trivial
//! anti-self-dual form, a Killing coordinate) are reported as skipped.

use std::sync::Arc;

use nalgebra::Matrix4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::catalog::{build_asd_seed, kahler_at, tau_field, CatalogEntry};
use crate::curvature::{conformal_metric, MetricEval};
use crate::expr::Expr;
use crate::fieldops::{bump_tracefree, FieldError, FieldKind, LocalField, StencilConfig, TensorField};
use crate::stability::{build_destabilizer, StabilityError};
use crate::tensor_point::{
    build_frame, compose_unchecked, pi_project, project_sd_asd, sigma_embed, Form2, OmegaOneSD, PointFrame, ThreeForm,
};

pub const ALGEBRA_TOL: f64 = 1e-12;
pub const ROUTE_TOL: f64 = 1e-4;
pub const CONFORMAL_TOL: f64 = 1e-4;
pub const KILLING_FORM_TOL: f64 = 1e-6;
pub const KOSTANT_TOL: f64 = 1e-5;
pub const WEITZENBOCK_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityRow {
    pub name: &'static str,
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub status: RowStatus,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl IdentityRow {
    fn measured(name: &'static str, residual: f64, tolerance: f64) -> Self {
        let status = if residual < tolerance { RowStatus::Pass } else { RowStatus::Fail };
        IdentityRow { name, residual: Some(residual), tolerance, status, note: String::new() }
    }

    fn skipped(name: &'static str, tolerance: f64, note: impl Into<String>) -> Self {
        IdentityRow { name, residual: None, tolerance, status: RowStatus::Skipped, note: note.into() }
    }

    fn failed(name: &'static str, tolerance: f64, e: &StabilityError) -> Self {
        IdentityRow { name, residual: None, tolerance, status: RowStatus::Fail, note: e.to_string() }
    }

    fn from_result(name: &'static str, tolerance: f64, r: Result<f64, StabilityError>) -> Self {
        match r {
            Ok(v) => IdentityRow::measured(name, v, tolerance),
            Err(e) => IdentityRow::failed(name, tolerance, &e),
        }
    }
}

/// Rows of one suite run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub entry: String,
    pub rows: Vec<IdentityRow>,
}

impl IdentityReport {
    /// True when no row failed; skipped rows do not count against the suite.
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.status != RowStatus::Fail)
    }

    pub fn row(&self, name: &str) -> Option<&IdentityRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

/// Sample sizes of a suite run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteConfig {
    /// Random frames for the pointwise algebra.
    pub frames: usize,
    /// Bump fields per route comparison.
    pub fields: usize,
    /// Conformal factors tried.
    pub factors: usize,
    /// Points for the Killing-type identities.
    pub points: usize,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { frames: 50, fields: 5, factors: 5, points: 10, seed: 0x1d }
    }
}

/// Differentiation rule used throughout the suite.
pub fn suite_stencil() -> StencilConfig {
    StencilConfig::new(6, 1e-3, 0)
}

fn max_abs(m: &Matrix4<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

fn random_frame(metric: &MetricEval, p: &[f64; 4]) -> Result<PointFrame, StabilityError> {
    let g = metric.metric(p)?;
    Ok(build_frame(*p, &g, metric.orientation_sign()).map_err(crate::curvature::CurvatureError::from)?)
}

/// Largest relative residuals of `π∘σ = 3/2`, `⟨σφ, S⟩ = ⟨φ, πS⟩` and of
/// `ω⁻∘ω⁺` being symmetric and trace-free, over random forms in the frames
/// of `n` sample points of `entry`.
pub fn algebraic_residuals(entry: &CatalogEntry, n: usize, seed: u64) -> Result<[f64; 3], StabilityError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = [0.0f64; 3];
    for p in entry.samples(n, seed) {
        let f = random_frame(&entry.metric, &p)?;
        let phi = ThreeForm { c: std::array::from_fn(|_| rng.gen_range(-1.0..1.0)) };
        let ps = pi_project(&sigma_embed(&phi, &f), &f);
        out[0] = out[0].max((ps - phi * 1.5).norm(&f) / phi.norm(&f));

        let mut s = OmegaOneSD::zero();
        for row in s.c.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
        let lhs = sigma_embed(&phi, &f).inner(&s);
        let rhs = phi.inner(&pi_project(&s, &f), &f);
        out[1] = out[1].max((lhs - rhs).abs() / (phi.norm(&f) * s.norm()));

        let w = Form2 { c: std::array::from_fn(|_| rng.gen_range(-1.0..1.0)) };
        let (plus, _) = project_sd_asd(&w, &f);
        let w = Form2 { c: std::array::from_fn(|_| rng.gen_range(-1.0..1.0)) };
        let (_, minus) = project_sd_asd(&w, &f);
        let raw = minus.to_matrix() * f.g_inv * plus.to_matrix();
        let composed = compose_unchecked(&minus, &plus, &f);
        let scale = minus.norm(&f) * plus.norm(&f) * max_abs(&f.g);
        let asym = max_abs(&(raw - raw.transpose()));
        let trace = (f.g_inv * raw).trace().abs() + composed.trace(&f).abs();
        let agree = max_abs(&(composed.to_matrix() - raw));
        out[2] = out[2].max(asym.max(trace).max(agree) / scale);
    }
    Ok(out)
}

/// Centre and radius of a coordinate ball well inside the sample box.
fn bump_ball(entry: &CatalogEntry) -> ([f64; 4], f64) {
    let d = entry.sample_domain;
    let centre = std::array::from_fn(|i| 0.5 * (d[i].0 + d[i].1));
    let width = d.iter().map(|(a, b)| b - a).filter(|w| *w > 0.0).fold(f64::INFINITY, f64::min);
    (centre, 0.25 * width)
}

fn ball_point(centre: &[f64; 4], radius: f64, rng: &mut impl Rng) -> [f64; 4] {
    std::array::from_fn(|i| centre[i] + 0.2 * radius * rng.gen_range(-1.0..1.0))
}

/// Largest disagreement, relative to the pointwise `C²` norm, between the two
/// routes to each of `L`, `P` and `T` on `n` random bump-supported trace-free
/// fields.
pub fn operator_route_residuals(entry: &CatalogEntry, n: usize, seed: u64) -> Result<[f64; 3], StabilityError> {
    let (centre, radius) = bump_ball(entry);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = suite_stencil();
    let mut out = [0.0f64; 3];
    for k in 0..n {
        let h = bump_tracefree(entry.metric.clone(), centre, radius, seed.wrapping_add(k as u64));
        let p = ball_point(&centre, radius, &mut rng);
        let l = LocalField::new(&h, &entry.metric, &p, &cfg)?;
        let scale = l.c2_norm();
        let f = l.frame();
        out[0] = out[0].max((l.l_operator()? - l.l_operator_weitzenbock()?).norm(f) / scale);
        out[1] = out[1].max((l.p_operator()? - l.p_operator_via_l()?).norm(f) / scale);
        out[2] = out[2].max((l.t_operator()? - l.t_operator_via_divergence()?).norm() / scale);
    }
    Ok(out)
}

/// A random positive conformal factor `exp(Σ εᵢ sin(kᵢxᵢ + φᵢ))`.
pub fn random_conformal_factor(entry: &CatalogEntry, rng: &mut impl Rng) -> Expr {
    let mut s = Expr::constant(0.0);
    for i in 0..4 {
        let (eps, k, ph) = (rng.gen_range(-0.15..0.15), rng.gen_range(0.3..1.2), rng.gen_range(0.0..6.0));
        s = s + (entry.spec.coord(i) * k + ph).sin() * eps;
    }
    s.exp()
}

/// Largest `‖P^{φ²g}h − φ⁻¹P^g(φ⁻¹h)‖ / ‖h‖_{C²}` over `n` random conformal
/// factors and bump-supported trace-free `h`.
pub fn conformal_covariance_residual(entry: &CatalogEntry, n: usize, seed: u64) -> Result<f64, StabilityError> {
    let (centre, radius) = bump_ball(entry);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = suite_stencil();
    let mut worst = 0.0f64;
    for k in 0..n {
        let phi = random_conformal_factor(entry, &mut rng);
        let p = ball_point(&centre, radius, &mut rng);
        let spec = conformal_metric(&entry.spec, &phi, entry.env(), &[p])?;
        let tilde = Arc::new(Arc::new(spec).compile(entry.env())?);
        let h = bump_tracefree(entry.metric.clone(), centre, radius, seed.wrapping_add(100 + k as u64));
        let (h2, ph, env) = (h.clone(), phi.clone(), entry.env().clone());
        let h_over_phi = TensorField::numeric(FieldKind::Sym2, move |q| {
            let s = 1.0 / ph.evaluate(q, &env).map_err(|e| FieldError::Eval(e.to_string()))?;
            Ok(h2.value(q)?.into_iter().map(|v| v * s).collect())
        });
        let lt = LocalField::new(&h, &tilde, &p, &cfg)?;
        let lhs = lt.p_operator()?;
        let lg = LocalField::new(&h_over_phi, &entry.metric, &p, &cfg)?;
        let rhs = lg.p_operator()? * (1.0 / phi.evaluate(&p, entry.env()).map_err(crate::curvature::CurvatureError::from)?);
        let scale = LocalField::new(&h, &entry.metric, &p, &cfg)?.c2_norm();
        worst = worst.max((lhs - rhs).norm(lg.frame()) / scale);
    }
    Ok(worst)
}

/// `max |𝒯τ| / max |∇τ|` for the Killing 2-form `τ` of a type-D⁺ entry.
pub fn killing_form_residual(entry: &CatalogEntry, points: &[[f64; 4]]) -> Result<f64, StabilityError> {
    let tau = tau_field(entry);
    let cfg = suite_stencil();
    let mut worst = 0.0f64;
    for p in points {
        let l = LocalField::new(&tau, &entry.metric, p, &cfg)?;
        let res = l.killing2form_residual()?;
        let scale = (0..4).map(|c| max_abs(&l.grad_matrix(c))).fold(0.0, f64::max);
        worst = worst.max(res.iter().map(Form2::max_abs).fold(0.0, f64::max) / scale);
    }
    Ok(worst)
}

/// First coordinate that is periodic and on which the metric does not depend.
pub fn killing_coordinate(entry: &CatalogEntry) -> Option<usize> {
    (0..4).find(|&i| entry.metric.invariant[i] && entry.spec.coords[i].period.is_some())
}

/// Kostant residual of the coordinate Killing field `∂_k`, relative to the
/// `C²` norm of its dual 1-form.
pub fn kostant_coordinate_residual(entry: &CatalogEntry, k: usize, points: &[[f64; 4]]) -> Result<f64, StabilityError> {
    let comps: Vec<Expr> = (0..4).map(|j| entry.spec.get(k, j).clone()).collect();
    let alpha = TensorField::symbolic(FieldKind::OneForm, &comps, entry.env())?;
    let cfg = suite_stencil();
    let mut worst = 0.0f64;
    for p in points {
        let l = LocalField::new(&alpha, &entry.metric, p, &cfg)?;
        let res = l.kostant_residual()?;
        worst = worst.max(res.iter().map(Form2::max_abs).fold(0.0, f64::max) / l.c2_norm());
    }
    Ok(worst)
}

/// Weitzenböck residual on an anti-self-dual form, relative to its `C²` norm.
pub fn weitzenbock_residual(entry: &CatalogEntry, omega: &TensorField, points: &[[f64; 4]]) -> Result<f64, StabilityError> {
    let cfg = suite_stencil();
    let mut worst = 0.0f64;
    for p in points {
        let l = LocalField::new(omega, &entry.metric, p, &cfg)?;
        worst = worst.max(l.weitzenbock_asd_residual()?.max_abs() / l.c2_norm());
    }
    Ok(worst)
}

/// Run every identity on `entry`.
pub fn run_identities(entry: &CatalogEntry, cfg: &SuiteConfig) -> IdentityReport {
    let mut rows = Vec::new();
    match algebraic_residuals(entry, cfg.frames, cfg.seed) {
        Ok([a, b, c]) => {
            rows.push(IdentityRow::measured("pi_sigma_threehalves", a, ALGEBRA_TOL));
            rows.push(IdentityRow::measured("sigma_adjoint_is_pi", b, ALGEBRA_TOL));
            rows.push(IdentityRow::measured("composition_symmetric_tracefree", c, ALGEBRA_TOL));
        }
        Err(e) => {
            for name in ["pi_sigma_threehalves", "sigma_adjoint_is_pi", "composition_symmetric_tracefree"] {
                rows.push(IdentityRow::failed(name, ALGEBRA_TOL, &e));
            }
        }
    }
    match operator_route_residuals(entry, cfg.fields, cfg.seed) {
        Ok([l, p, t]) => {
            rows.push(IdentityRow::measured("l_operator_routes", l, ROUTE_TOL));
            rows.push(IdentityRow::measured("p_operator_routes", p, ROUTE_TOL));
            rows.push(IdentityRow::measured("t_operator_routes", t, ROUTE_TOL));
        }
        Err(e) => {
            for name in ["l_operator_routes", "p_operator_routes", "t_operator_routes"] {
                rows.push(IdentityRow::failed(name, ROUTE_TOL, &e));
            }
        }
    }
    rows.push(IdentityRow::from_result(
        "p_conformal_covariance",
        CONFORMAL_TOL,
        conformal_covariance_residual(entry, cfg.factors, cfg.seed),
    ));

    let points = entry.samples(cfg.points, cfg.seed);
    match killing_coordinate(entry) {
        Some(k) => rows.push(IdentityRow::from_result(
            "kostant_coordinate_killing",
            KOSTANT_TOL,
            kostant_coordinate_residual(entry, k, &points),
        )),
        None => rows.push(IdentityRow::skipped("kostant_coordinate_killing", KOSTANT_TOL, "no periodic Killing coordinate")),
    }

    // The remaining rows need a conformally Kähler structure.
    let kahler_rows = ["killing_two_form", "weitzenbock_asd", "eigen_relation"];
    let tols = [KILLING_FORM_TOL, WEITZENBOCK_TOL, crate::stability::EIGEN_TOL];
    if let Err(e) = kahler_at(entry, &points[0]) {
        for (name, tol) in kahler_rows.into_iter().zip(tols) {
            rows.push(IdentityRow::skipped(name, tol, format!("not conformally Kähler: {e}")));
        }
        return IdentityReport { entry: entry.name.clone(), rows };
    }
    rows.push(IdentityRow::from_result(kahler_rows[0], tols[0], killing_form_residual(entry, &points)));
    match build_asd_seed(entry) {
        Ok(seed) if !seed.trivial => {
            rows.push(IdentityRow::from_result(kahler_rows[1], tols[1], weitzenbock_residual(entry, &seed.field, &points)));
        }
        Ok(seed) => rows.push(IdentityRow::skipped(
            kahler_rows[1],
            tols[1],
            format!("anti-self-dual form is trivial (sup {:e})", seed.sup_norm),
        )),
        Err(e) => rows.push(IdentityRow::skipped(kahler_rows[1], tols[1], e.to_string())),
    }
    match build_destabilizer(entry) {
        Ok(b) => rows.push(IdentityRow::measured(kahler_rows[2], b.eigen_residual, tols[2])),
        Err(e @ StabilityError::Trivial { .. }) => rows.push(IdentityRow::skipped(kahler_rows[2], tols[2], e.to_string())),
        Err(e) => rows.push(IdentityRow::from_result(kahler_rows[2], tols[2], Err(e))),
    }
    IdentityReport { entry: entry.name.clone(), rows }
}
