//! Differential operators on tensor fields.
//!
//! Field derivatives come from symbolic payloads when available and from
//! central stencils otherwise; Christoffel corrections are added from the exact
//! metric jet. Every operator is a pure function of `(field, metric, point,
//! stencil)`, evaluated through a [`LocalField`] that caches the covariant
//! 2-jet at the point.
//!
//! Conventions: `δ = −div`, `δ*ξ = sym ∇ξ`, `∇*∇ = −tr ∇²` (so that
//! `∇*∇(x²) = −2` on flat space), `d₋*` is `δ` on the Ω₋ factor of
//! `Ω₋⊗Ω₊ ≅ Sym²₀`, and `d₋` its formal adjoint.

mod covariant;
mod field;
mod ops;
mod samples;
mod stencil;

pub use covariant::CovJet;
pub use field::{FieldFn, FieldJet, FieldKind, TensorField};
pub use ops::{hodge_one, pi3, LocalField};
pub use samples::{bump, bump_tracefree};
pub use stencil::{first_weights, richardson, second_weights, StencilConfig};

use thiserror::Error;

use crate::curvature::{CurvatureError, MetricEval};
use crate::expr::ExprError;
use crate::tensor_point::{Form2, OmegaOneSD, SymT2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error("stencil around {point:?} leaves the chart in coordinate {coord}")]
    StencilOutOfChart { point: [f64; 4], coord: usize },
    #[error("operator {op} does not accept a {found:?} field")]
    WrongKind { op: &'static str, found: FieldKind },
    #[error("vector field is not Killing: relative defect {defect:e}")]
    NotKilling { defect: f64 },
    #[error("field evaluation failed: {0}")]
    Eval(String),
}

impl From<ExprError> for FieldError {
    fn from(e: ExprError) -> Self {
        FieldError::Curvature(CurvatureError::Expr(e))
    }
}

/// Tolerance on the Killing defect accepted by [`kostant_residual`].
pub const KILLING_TOL: f64 = 1e-8;

fn local(field: &TensorField, metric: &MetricEval, p: &[f64; 4], cfg: &StencilConfig) -> Result<LocalField, FieldError> {
    LocalField::new(field, metric, p, cfg)
}

/// `∇F` as dense components `[c][I]`.
pub fn covariant_derivative(
    field: &TensorField,
    metric: &MetricEval,
    p: &[f64; 4],
    cfg: &StencilConfig,
) -> Result<Vec<f64>, FieldError> {
    Ok(local(field, metric, p, cfg)?.cov.d1)
}

/// `∇*∇F` as dense components.
pub fn rough_laplacian(field: &TensorField, metric: &MetricEval, p: &[f64; 4], cfg: &StencilConfig) -> Result<Vec<f64>, FieldError> {
    Ok(local(field, metric, p, cfg)?.rough_laplacian())
}

/// `δF` for a symmetric 2-tensor or 2-form.
pub fn divergence(field: &TensorField, metric: &MetricEval, p: &[f64; 4], cfg: &StencilConfig) -> Result<[f64; 4], FieldError> {
    local(field, metric, p, cfg)?.divergence()
}

/// `δ*ξ` and its trace-free part `δ*₀ξ`.
pub fn div_adjoint(
    field: &TensorField,
    metric: &MetricEval,
    p: &[f64; 4],
    cfg: &StencilConfig,
) -> Result<(SymT2, SymT2), FieldError> {
    let l = local(field, metric, p, cfg)?;
    Ok((l.div_adjoint()?, l.div_adjoint0()?))
}

/// Anti-self-dual part of `dα`.
pub fn d_minus(field: &TensorField, metric: &MetricEval, p: &[f64; 4], cfg: &StencilConfig) -> Result<Form2, FieldError> {
    local(field, metric, p, cfg)?.d_minus()
}

/// `T h ∈ Ω¹⊗Ω₊`.
pub fn t_operator(field: &TensorField, metric: &MetricEval, p: &[f64; 4], cfg: &StencilConfig) -> Result<OmegaOneSD, FieldError> {
    local(field, metric, p, cfg)?.t_operator()
}

/// `L h = ½∇*∇h − Rm h`.
pub fn l_operator(field: &TensorField, metric: &MetricEval, p: &[f64; 4], cfg: &StencilConfig) -> Result<SymT2, FieldError> {
    local(field, metric, p, cfg)?.l_operator()
}

/// `P h = T*T h − W₊ h`.
pub fn p_operator(field: &TensorField, metric: &MetricEval, p: &[f64; 4], cfg: &StencilConfig) -> Result<SymT2, FieldError> {
    local(field, metric, p, cfg)?.p_operator()
}

/// Killing 2-form residual per coordinate direction.
pub fn killing2form_residual(
    field: &TensorField,
    metric: &MetricEval,
    p: &[f64; 4],
    cfg: &StencilConfig,
) -> Result<[Form2; 4], FieldError> {
    local(field, metric, p, cfg)?.killing2form_residual()
}

/// Kostant residual for the Killing field dual to the 1-form `field`.
pub fn kostant_residual(
    field: &TensorField,
    metric: &MetricEval,
    p: &[f64; 4],
    cfg: &StencilConfig,
) -> Result<[Form2; 4], FieldError> {
    let l = local(field, metric, p, cfg)?;
    let defect = l.killing_defect()?;
    if defect > KILLING_TOL {
        return Err(FieldError::NotKilling { defect });
    }
    l.kostant_residual()
}

/// Weitzenböck residual on an anti-self-dual 2-form.
pub fn weitzenbock_asd_residual(
    field: &TensorField,
    metric: &MetricEval,
    p: &[f64; 4],
    cfg: &StencilConfig,
) -> Result<Form2, FieldError> {
    local(field, metric, p, cfg)?.weitzenbock_asd_residual()
}
