//! Build the destabilizing direction `h = ω⁻∘τ` on Schwarzschild, compare it
//! with the closed form and audit its decay.
//!
//! ```text
//! cargo run --release --example destabilizer
//! ```

use curvestab::catalog::get_entry;
use curvestab::expr::ParamEnv;
use curvestab::stability::{build_destabilizer, decay_audit, golden_fit};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let entry = get_entry("schwarzschild", &ParamEnv::new().with("m", 1.0))?;
    let bundle = build_destabilizer(&entry)?;
    println!("eigen residual {:.2e}, trace residual {:.2e}", bundle.eigen_residual, bundle.trace_residual);

    if let Some(fit) = golden_fit(&bundle, &entry.samples(50, 36))? {
        println!("h = {:.6} · h_ref, max deviation {:.2e} over {} points", fit.scalar, fit.max_deviation, fit.points);
    }

    let radii: Vec<f64> = (0..8).map(|i| 100.0 * 10f64.powf(i as f64 / 7.0)).collect();
    let decay = decay_audit(&bundle, &radii)?;
    let [tau, h, dh, om] = decay.slopes();
    println!("log-log slopes: |τ| {tau:+.3}, |h| {h:+.3}, |∇h| {dh:+.3}, |ω⁻| {om:+.3}");
    Ok(())
}
