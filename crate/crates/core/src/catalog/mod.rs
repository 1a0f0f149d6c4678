//! Built-in explicit Einstein metrics with their geometric payloads.
//!
//! Every entry carries its chart, declared Einstein constant and class, plus
//! optional conformally-Kähler data (a sign reference for the Kähler form, a
//! closed form of the conformal factor used as a cross-check, a Killing
//! field) and a rule for building a closed anti-self-dual 2-form.

mod asd;
mod entries;
mod kahler;
#[cfg(test)]
mod tests;

use std::sync::Arc;

use thiserror::Error;

pub use asd::{build_asd_seed, AsdSeed, RadialProfile};
pub use entries::{get_entry, CATALOG_NAMES};
pub(crate) use kahler::{field_err, simple_eigen};
pub use kahler::{conformal_factor, kahler_at, tau_field, kahler_form, killing_alignment, scal_identity_residual, KahlerPoint, TYPE_D_GAP};

use crate::curvature::{einstein_residual, sample_box, CurvatureError, EinsteinReport, MetricEval, MetricSpec};
use crate::expr::{Expr, ParamEnv};
use crate::fieldops::FieldError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("unknown catalog entry `{name}`; available: {available}. {hint}")]
    UnknownEntry { name: String, available: String, hint: String },
    #[error("parameter {param} = {value} is out of range: {reason}")]
    OutOfRange { param: String, value: f64, reason: String },
    #[error("W+ is not of type D+ at {point:?}: relative eigenvalue gap {gap:e}")]
    TypeDFailure { point: [f64; 4], gap: f64 },
    #[error("orientation mismatch at {point:?}: simple W+ eigenvalue {eigenvalue:e} is negative")]
    OrientationMismatch { point: [f64; 4], eigenvalue: f64 },
    #[error("entry `{0}` has no conformally Kähler payload")]
    NoKahlerPayload(String),
    #[error("the constructed anti-self-dual form is trivial (sup norm {sup:e})")]
    Trivial { sup: f64 },
    #[error("ODE integration failed: {0}")]
    Ode(String),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

impl From<crate::expr::ExprError> for CatalogError {
    fn from(e: crate::expr::ExprError) -> Self {
        CatalogError::Curvature(CurvatureError::Expr(e))
    }
}

/// Geometric class of a catalog entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryClass {
    AlfRicciFlat,
    CompactPositive,
    HyperkahlerControl,
    FlatControl,
    /// A metric read from a file, with no known structure.
    UserSupplied,
}

impl EntryClass {
    pub fn tag(self) -> &'static str {
        match self {
            EntryClass::AlfRicciFlat => "ALF-ricci-flat",
            EntryClass::CompactPositive => "compact-positive",
            EntryClass::HyperkahlerControl => "hyperkahler-control",
            EntryClass::FlatControl => "flat-control",
            EntryClass::UserSupplied => "user-supplied",
        }
    }
}

/// Data of a conformally Kähler structure `g̃ = f⁻²g`.
#[derive(Debug, Clone)]
pub struct KahlerPayload {
    /// Closed form of `f`, if known; compared against `λ^(−1/3)`.
    pub f: Option<Expr>,
    /// Coordinate pair `(i, j)`: the Kähler form is oriented so that its
    /// pairing with `dxⁱ∧dxʲ` is positive.
    pub reference: (usize, usize),
    /// Coordinate components of the Killing field `X = J∇f`, normalized to unit
    /// length at infinity.
    pub killing_field: Option<[Expr; 4]>,
}

/// How the closed anti-self-dual 2-form of an entry is produced.
#[derive(Debug, Clone)]
pub enum AsdFormRule {
    /// `ω⁻ = d₋α` for `α = g(X, ·)`.
    FromKilling,
    /// `ω⁻ = d(F(r) σ)` for a fixed 1-form `σ` and a profile `F` solving the
    /// first-order ODE imposed by anti-self-duality.
    OdeAnsatz { r: usize, sigma: [Expr; 4], base: f64 },
    /// No construction (flat or constant-curvature controls).
    None,
}

/// Asymptotically locally flat end `dr² + r²γ + η²`.
#[derive(Debug, Clone)]
pub struct AlfDescriptor {
    pub r: usize,
    pub fiber: usize,
    /// Asymptotic length of the fiber circle.
    pub fiber_length: f64,
    pub base: &'static str,
    /// Model metric on the same chart.
    pub model: Arc<MetricSpec>,
}

/// A fully populated catalog entry.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub spec: Arc<MetricSpec>,
    pub metric: Arc<MetricEval>,
    pub einstein_constant: f64,
    pub class: EntryClass,
    pub kahler: Option<KahlerPayload>,
    pub asd_rule: AsdFormRule,
    pub asymptotic: Option<AlfDescriptor>,
    /// Box of interior points used for random sampling.
    pub sample_domain: [(f64, f64); 4],
    /// Coordinate index of the radial (cohomogeneity) direction, if any.
    pub radial: Option<usize>,
    /// Polar angle coordinate, if any.
    pub polar: Option<usize>,
}

impl CatalogEntry {
    /// Wrap a user-supplied metric. The radial coordinate is the first one
    /// unbounded above, the polar angle the first one ranging over `(0, π)`;
    /// samples avoid 5% of each finite interval at either end. No
    /// anti-self-dual construction is attached. Values in `env` replace the
    /// declared defaults.
    pub fn from_spec(mut spec: MetricSpec, env: &ParamEnv) -> Result<CatalogEntry, CatalogError> {
        // Record the values actually used, so exports reflect overrides.
        for (k, v) in env.iter() {
            if spec.params.get(k).is_some() {
                spec.params.set(k, v);
            }
        }
        let spec = Arc::new(spec);
        let metric = Arc::new(spec.compile(env)?);
        let mut sample_domain = [(0.0, 0.0); 4];
        let (mut radial, mut polar) = (None, None);
        for (i, dom) in sample_domain.iter_mut().enumerate() {
            if let Some(period) = spec.period(i, &metric.env)? {
                *dom = (0.0, period);
                continue;
            }
            let (lo, hi) = metric.ranges[i];
            *dom = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => (lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo)),
                (true, false) => {
                    let s = lo.abs().max(1.0);
                    (lo + 0.25 * s, lo + 10.0 * s)
                }
                (false, true) => {
                    let s = hi.abs().max(1.0);
                    (hi - 10.0 * s, hi - 0.25 * s)
                }
                (false, false) => (-3.0, 3.0),
            };
            if radial.is_none() && lo.is_finite() && !hi.is_finite() {
                radial = Some(i);
            }
            if polar.is_none() && lo == 0.0 && (hi - std::f64::consts::PI).abs() < 1e-12 {
                polar = Some(i);
            }
        }
        let mut entry = CatalogEntry {
            name: spec.name.clone(),
            spec,
            metric,
            einstein_constant: 0.0,
            class: EntryClass::UserSupplied,
            kahler: None,
            asd_rule: AsdFormRule::None,
            asymptotic: None,
            sample_domain,
            radial,
            polar,
        };
        entry.einstein_constant = entry.einstein_check(8, 1)?.lambda;
        Ok(entry)
    }

    pub fn env(&self) -> &ParamEnv {
        &self.metric.env
    }

    pub fn param(&self, name: &str) -> f64 {
        self.metric.env.get(name).unwrap_or(f64::NAN)
    }

    /// `n` reproducible interior sample points.
    pub fn samples(&self, n: usize, seed: u64) -> Vec<[f64; 4]> {
        sample_box(&self.sample_domain, n, seed)
    }

    pub fn einstein_check(&self, n: usize, seed: u64) -> Result<EinsteinReport, CurvatureError> {
        einstein_residual(&self.metric, &self.samples(n, seed))
    }

    /// Period of every periodic coordinate (`None` for intervals).
    pub fn periods(&self) -> Result<[Option<f64>; 4], CurvatureError> {
        let mut out = [None; 4];
        for (i, p) in out.iter_mut().enumerate() {
            *p = self.spec.period(i, &self.metric.env)?;
        }
        Ok(out)
    }

    /// Relative deviation `|g − g_model|_{g_model}` at a point of the ALF end.
    pub fn alf_deviation(&self, p: &[f64; 4]) -> Result<Option<f64>, CatalogError> {
        let Some(alf) = &self.asymptotic else { return Ok(None) };
        let model = alf.model.compile(&self.metric.env)?;
        let g0 = model.metric(p)?;
        let g = self.metric.metric(p)?;
        let frame = crate::tensor_point::build_frame(*p, &g0, 1.0).map_err(CurvatureError::from)?;
        let d = crate::tensor_point::SymT2::from_matrix(&(g - g0));
        Ok(Some(d.norm(&frame) / 2.0))
    }
}
