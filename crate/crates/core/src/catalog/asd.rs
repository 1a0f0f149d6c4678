use std::sync::Arc;

use nalgebra::Matrix4;

use super::{AsdFormRule, CatalogEntry, CatalogError};
use crate::curvature::MetricEval;
use crate::expr::Expr;
use crate::fieldops::{covariant_derivative, FieldKind, StencilConfig, TensorField};
use crate::tensor_point::{build_frame, project_sd_asd, Form2};

/// Supremum of `|ω⁻|` below which the form counts as trivial.
pub const TRIVIAL_SUP: f64 = 1e-8;

/// A closed anti-self-dual 2-form together with how it was obtained.
#[derive(Debug, Clone)]
pub struct AsdSeed {
    pub field: TensorField,
    /// `α = g(X, ·)` when the form comes from a Killing field.
    pub alpha: Option<TensorField>,
    pub profile: Option<Arc<RadialProfile>>,
    /// Sampled supremum of `|ω⁻|` after removing a parallel part.
    pub sup_norm: f64,
    /// Sampled supremum of the raw construction.
    pub raw_sup: f64,
    /// The raw construction was parallel and has been removed as the asymptotic constant.
    pub parallel_removed: bool,
    pub trivial: bool,
}

/// Chebyshev interpolant of a function on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chebyshev {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: Vec<f64>,
}

impl Chebyshev {
    pub fn nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| {
                let x = (std::f64::consts::PI * (k as f64 + 0.5) / n as f64).cos();
                0.5 * (lo + hi) + 0.5 * (hi - lo) * x
            })
            .collect()
    }

    /// Interpolant through values at [`Chebyshev::nodes`].
    pub fn fit(lo: f64, hi: f64, values: &[f64]) -> Self {
        let n = values.len();
        let coeffs = (0..n)
            .map(|j| {
                let s: f64 = (0..n)
                    .map(|k| values[k] * (std::f64::consts::PI * j as f64 * (k as f64 + 0.5) / n as f64).cos())
                    .sum();
                s * if j == 0 { 1.0 } else { 2.0 } / n as f64
            })
            .collect();
        Chebyshev { lo, hi, coeffs }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let x = (2.0 * r - self.lo - self.hi) / (self.hi - self.lo);
        let (mut b1, mut b2) = (0.0, 0.0);
        for c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * x * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2 + self.coeffs[0]
    }
}

/// Solution of `F′ = −k(r) F`, `F(base) = 1`, cached as interpolants of `F` and `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub base: f64,
    pub f: Chebyshev,
    pub k: Chebyshev,
}

impl RadialProfile {
    pub fn value(&self, r: f64) -> f64 {
        self.f.eval(r)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        -self.k.eval(r) * self.f.eval(r)
    }

    /// Integrate the ODE with fixed-step RK4 to every Chebyshev node.
    pub fn solve(lo: f64, hi: f64, base: f64, nodes: usize, k: impl Fn(f64) -> Result<f64, CatalogError>) -> Result<Self, CatalogError> {
        let xs = Chebyshev::nodes(lo, hi, nodes);
        let ks = xs.iter().map(|&r| k(r)).collect::<Result<Vec<_>, _>>()?;
        let kc = Chebyshev::fit(lo, hi, &ks);
        let rhs = |r: f64, y: f64| -kc.eval(r) * y;
        let steps_per_unit = 4000.0 / (hi - lo);
        let mut fs = Vec::with_capacity(nodes);
        for &target in &xs {
            let n = ((target - base).abs() * steps_per_unit).ceil().max(1.0) as usize;
            let h = (target - base) / n as f64;
            let (mut r, mut y) = (base, 1.0);
            for _ in 0..n {
                let k1 = rhs(r, y);
                let k2 = rhs(r + 0.5 * h, y + 0.5 * h * k1);
                let k3 = rhs(r + 0.5 * h, y + 0.5 * h * k2);
                let k4 = rhs(r + h, y + h * k3);
                y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                r += h;
            }
            if !y.is_finite() {
                return Err(CatalogError::Ode(format!("non-finite solution at r = {target}")));
            }
            fs.push(y);
        }
        Ok(RadialProfile { base, f: Chebyshev::fit(lo, hi, &fs), k: kc })
    }
}

fn row_major(m: &Matrix4<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

fn exterior(d: &[Vec<f64>; 4]) -> Form2 {
    Form2::from_matrix(&Matrix4::from_fn(|i, j| d[i][j] - d[j][i]))
}

fn killing_one_form(entry: &CatalogEntry, x: &[Expr; 4]) -> Result<TensorField, CatalogError> {
    let comps: Vec<Expr> = (0..4)
        .map(|j| (0..4).fold(Expr::zero(), |acc, i| acc + &x[i] * entry.spec.get(i, j)))
        .collect();
    Ok(TensorField::symbolic(FieldKind::OneForm, &comps, entry.env())?)
}

fn from_killing(entry: &CatalogEntry, alpha: &TensorField) -> TensorField {
    let metric: Arc<MetricEval> = entry.metric.clone();
    let alpha = alpha.clone();
    let cfg = StencilConfig::default();
    TensorField::numeric(FieldKind::TwoForm, move |p| {
        let jet = alpha.jet(p, &metric.ranges, &cfg)?;
        let g = metric.metric(p)?;
        let frame = build_frame(*p, &g, metric.orientation_sign()).map_err(crate::curvature::CurvatureError::from)?;
        let (_, asd) = project_sd_asd(&exterior(&jet.d), &frame);
        Ok(row_major(&asd.to_matrix()))
    })
    .with_invariant(entry.metric.invariant)
}

fn from_profile(entry: &CatalogEntry, r: usize, sigma: &TensorField, profile: Arc<RadialProfile>) -> TensorField {
    let metric = entry.metric.clone();
    let sigma = sigma.clone();
    let cfg = StencilConfig::default();
    TensorField::numeric(FieldKind::TwoForm, move |p| {
        let jet = sigma.jet(p, &metric.ranges, &cfg)?;
        let mut dr = [0.0; 4];
        dr[r] = 1.0;
        let s: [f64; 4] = std::array::from_fn(|i| jet.v[i]);
        let w = Form2::wedge(&dr, &s) * profile.derivative(p[r]) + exterior(&jet.d) * profile.value(p[r]);
        Ok(row_major(&w.to_matrix()))
    })
    .with_invariant(entry.metric.invariant)
}

/// `k(r)` such that `d(Fσ)` is anti-self-dual iff `F′ = −kF`, read off at a
/// reference point of the orbit through `r`.
fn ansatz_rate(entry: &CatalogEntry, r: usize, sigma: &TensorField, at: f64) -> Result<f64, CatalogError> {
    let mut p: [f64; 4] = std::array::from_fn(|i| 0.5 * (entry.sample_domain[i].0 + entry.sample_domain[i].1));
    p[r] = at;
    let jet = sigma.jet(&p, &entry.metric.ranges, &StencilConfig::default())?;
    let frame = build_frame(p, &entry.metric.metric(&p)?, entry.metric.orientation_sign())
        .map_err(crate::curvature::CurvatureError::from)?;
    let mut dr = [0.0; 4];
    dr[r] = 1.0;
    let s: [f64; 4] = std::array::from_fn(|i| jet.v[i]);
    let (a, _) = project_sd_asd(&Form2::wedge(&dr, &s), &frame);
    let (b, _) = project_sd_asd(&exterior(&jet.d), &frame);
    let k = b.inner(&a, &frame) / a.inner(&a, &frame);
    let rest = (b - a * k).norm(&frame);
    if rest > 1e-9 * b.norm(&frame).max(a.norm(&frame) * k.abs()).max(1e-300) {
        return Err(CatalogError::Ode(format!("the 1-form ansatz does not close to an ODE at r = {at} (residual {rest:e})")));
    }
    Ok(k)
}

fn sup_norm(entry: &CatalogEntry, field: &TensorField, points: &[[f64; 4]]) -> Result<f64, CatalogError> {
    let mut sup: f64 = 0.0;
    for p in points {
        let g = entry.metric.metric(p)?;
        let frame = build_frame(*p, &g, 1.0).map_err(crate::curvature::CurvatureError::from)?;
        sup = sup.max(field.form2(p)?.norm(&frame));
    }
    Ok(sup)
}

/// `sup |∇ω| / sup |ω|` over `points`, scaled by the radial coordinate.
fn parallel_defect(entry: &CatalogEntry, field: &TensorField, points: &[[f64; 4]]) -> Result<f64, CatalogError> {
    let mut worst: f64 = 0.0;
    for p in points {
        let d = covariant_derivative(field, &entry.metric, p, &StencilConfig::default())?;
        let w = field.value(p)?;
        let scale = w.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
        let dmax = d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        worst = worst.max(dmax / scale);
    }
    Ok(worst)
}

/// Build the closed anti-self-dual 2-form of an entry.
pub fn build_asd_seed(entry: &CatalogEntry) -> Result<AsdSeed, CatalogError> {
    let points = entry.samples(48, 0x5eed);
    let (field, alpha, profile) = match &entry.asd_rule {
        AsdFormRule::None => {
            let zero = TensorField::numeric(FieldKind::TwoForm, |_| Ok(vec![0.0; 16]));
            return Ok(AsdSeed {
                field: zero,
                alpha: None,
                profile: None,
                sup_norm: 0.0,
                raw_sup: 0.0,
                parallel_removed: false,
                trivial: true,
            });
        }
        AsdFormRule::FromKilling => {
            let x = entry
                .kahler
                .as_ref()
                .and_then(|k| k.killing_field.clone())
                .ok_or_else(|| CatalogError::NoKahlerPayload(entry.name.clone()))?;
            let alpha = killing_one_form(entry, &x)?;
            (from_killing(entry, &alpha), Some(alpha), None)
        }
        AsdFormRule::OdeAnsatz { r, sigma, base } => {
            let sigma = TensorField::symbolic(FieldKind::OneForm, sigma, entry.env())?;
            let (lo, hi) = entry.metric.ranges[*r];
            let profile = Arc::new(RadialProfile::solve(lo, hi, *base, 64, |x| ansatz_rate(entry, *r, &sigma, x))?);
            (from_profile(entry, *r, &sigma, profile.clone()), None, Some(profile))
        }
    };
    let raw_sup = sup_norm(entry, &field, &points)?;
    let parallel = raw_sup > TRIVIAL_SUP && parallel_defect(entry, &field, &points[..8])? < 1e-6;
    let (field, sup) = if parallel {
        (TensorField::numeric(FieldKind::TwoForm, |_| Ok(vec![0.0; 16])), 0.0)
    } else {
        (field, raw_sup)
    };
    Ok(AsdSeed {
        field,
        alpha,
        profile,
        sup_norm: sup,
        raw_sup,
        parallel_removed: parallel,
        trivial: sup < TRIVIAL_SUP,
    })
}
