//! Pointwise algebra at a single point: orthonormal frame, the self-dual /
//! anti-self-dual splitting and the composition `Ω₋ ⊗ Ω₊ → Sym²₀`.
//!
//! ```text
//! cargo run --example pointwise_algebra
//! ```

use curvestab::tensor_point::{build_frame, compose_forms, hodge_star, project_sd_asd, Form2};
use nalgebra::Matrix4;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A skewed but positive definite metric.
    let g = Matrix4::new(
        2.0, 0.3, 0.0, 0.1, //
        0.3, 1.5, 0.2, 0.0, //
        0.0, 0.2, 1.0, 0.4, //
        0.1, 0.0, 0.4, 3.0,
    );
    let frame = build_frame([0.0; 4], &g, 1.0)?;

    let omega = Form2 { c: [1.0, -0.5, 0.25, 2.0, 0.0, -1.0] };
    let (plus, minus) = project_sd_asd(&omega, &frame);
    let star_plus = hodge_star(&plus, &frame);
    let star_minus = hodge_star(&minus, &frame);
    println!("|ω| = {:.6}, |ω⁺| = {:.6}, |ω⁻| = {:.6}", omega.norm(&frame), plus.norm(&frame), minus.norm(&frame));
    println!("|*ω⁺ − ω⁺| = {:.2e}", Form2 { c: std::array::from_fn(|i| star_plus.c[i] - plus.c[i]) }.max_abs());
    println!("|*ω⁻ + ω⁻| = {:.2e}", Form2 { c: std::array::from_fn(|i| star_minus.c[i] + minus.c[i]) }.max_abs());

    let h = compose_forms(&minus, &plus, &frame)?;
    let asym = (h.to_matrix() - h.to_matrix().transpose()).amax();
    println!("h = ω⁻∘ω⁺: |h| = {:.6}, tr h = {:.2e}, asymmetry {:.2e}", h.norm(&frame), h.trace(&frame), asym);
    Ok(())
}
