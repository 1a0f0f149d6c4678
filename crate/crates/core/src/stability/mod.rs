//! Destabilizing directions and the second variation of the total scalar
//! curvature functional.
//!
//! For a conformally Kähler Einstein metric with Kähler rescaling
//! `g̃ = f⁻²g` and a closed anti-self-dual form `ω⁻`, the trace-free tensor
//! `h = ω⁻∘τ` with `τ = f³ω̃⁺` satisfies `Ph = −f⁻³h`, where
//! `P = T*T − W₊`. The quadratic form
//!
//! `Q(k) = −∫⟨Lk − δ*δk, k⟩`, `L = ½∇*∇ − R̊`,
//!
//! is evaluated on `k = χ_R h` by product quadrature, together with
//! `−∫⟨Pk, k⟩` and the lower bound `∫f⁻³|k|²`. A positive value of `Q` in some
//! direction certifies instability.

mod bundle;
mod quadrature;
mod variation;

#[cfg(test)]
mod tests;

pub use bundle::{
    build_destabilizer, decay_audit, fit_global_scalar, golden_fit, schwarzschild_reference, DecayReport, DestabilizerBundle,
    GoldenFit, EIGEN_TOL,
};
pub use quadrature::{ordered_sum, Axis, GridPolicy, KahanSum, QuadratureGrid};
pub use variation::{
    second_variation, sweep_cutoff, CutoffFamily, NodeDensities, StabilityReport, SweepRow, Verdict, CONVENTION_NOTE,
};
pub(crate) use variation::json17;

use crate::catalog::CatalogError;
use crate::curvature::CurvatureError;
use crate::fieldops::FieldError;

#[derive(Debug, thiserror::Error)]
pub enum StabilityError {
    #[error("entry `{entry}` has a trivial anti-self-dual form (sup |ω⁻| = {sup:e}); no destabilizing direction")]
    Trivial { entry: String, sup: f64 },
    #[error("eigen-relation Ph = −f⁻³h fails: relative residual {residual:e} at {point:?}")]
    EigenRelation { point: [f64; 4], residual: f64 },
    #[error("h is not trace-free: |tr h| / |h| = {excess:e} at {point:?}")]
    NotTraceFree { point: [f64; 4], excess: f64 },
    #[error("grid too small: truncation at 2R with R = {r_cut} does not fit in the radial range ({lo}, {hi})")]
    GridTooSmall { r_cut: f64, lo: f64, hi: f64 },
    #[error("quadrature did not converge: {coarse} with half the nodes vs {fine} (relative change {rel:.3})")]
    NonConvergence { coarse: f64, fine: f64, rel: f64 },
    #[error("cutoff radii must be strictly increasing, got {0:?}")]
    RadiiNotIncreasing(Vec<f64>),
    #[error("the entry has no radial coordinate; a cutoff radius cannot be used")]
    NoRadial,
    #[error("decay audit needs at least 8 radii spanning a decade, got {count} spanning a factor {span:.2}")]
    TooFewRadii { count: usize, span: f64 },
    #[error("radius {0} lies outside the chart")]
    RadiusOutsideChart(f64),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
}
