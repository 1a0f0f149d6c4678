//! Pointwise linear algebra on an oriented Riemannian 4-manifold.
//!
//! Everything here lives at a single point: a metric and an orthonormal
//! coframe, 2-forms with their self-dual / anti-self-dual splitting, the
//! composition map `Ω₋ ⊗ Ω₊ → Sym²₀`, and the algebraic maps between
//! 3-forms and 1-form-valued self-dual 2-forms.
//!
//! Conventions (used consistently across the crate):
//! * 2-form inner product `⟨α,β⟩ = ½ αᵢⱼ βⁱʲ`, so `|e¹∧e²| = 1`.
//! * 3-form inner product `⟨φ,ψ⟩ = ⅙ φᵢⱼₖ ψⁱʲᵏ`.
//! * symmetric 2-tensor inner product `⟨h,k⟩ = hᵢⱼ kⁱʲ`.
//! * composition `(α∘β)ᵢⱼ = αᵢₗ gˡᵐ βₘⱼ`.

mod forms;
mod frame;

pub use forms::{
    compose_forms, compose_unchecked, hodge_star, interior, pi_project, project_sd_asd, sigma_embed, sym0_coeffs,
    sym0_coeffs_frame, sym0_from_coeffs, sym0_from_coeffs_frame, wedge_1_2, Form2,
    OmegaOneSD, SymT2, ThreeForm, FORM2_PAIRS, THREE_FORM_TRIPLES,
};
pub use frame::{build_frame, PointFrame};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("metric is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("{which} is not {expected}: relative residual {residual:e}")]
    DualityViolation { which: &'static str, expected: &'static str, residual: f64 },
}

/// Sign of the Levi-Civita symbol on four indices.
pub fn levi_civita(i: usize, j: usize, k: usize, l: usize) -> f64 {
    let p = [i, j, k, l];
    for a in 0..4 {
        for b in (a + 1)..4 {
            if p[a] == p[b] {
                return 0.0;
            }
        }
    }
    let mut inversions = 0;
    for a in 0..4 {
        for b in (a + 1)..4 {
            if p[a] > p[b] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}
