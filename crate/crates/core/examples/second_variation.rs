//! Second variation of the total scalar curvature along the cut-off
//! destabilizing direction on Schwarzschild, for a sweep of cutoff radii.
//!
//! ```text
//! cargo run --release --example second_variation
//! ```

use curvestab::catalog::get_entry;
use curvestab::expr::ParamEnv;
use curvestab::stability::{build_destabilizer, sweep_cutoff, GridPolicy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let entry = get_entry("schwarzschild", &ParamEnv::new())?;
    let bundle = build_destabilizer(&entry)?;
    let policy = GridPolicy { nodes_r: 256, nodes_theta: 16, ..GridPolicy::default() };
    let report = sweep_cutoff(&bundle, &[10.0, 20.0, 40.0, 80.0], policy)?;
    print!("{}", report.to_csv(false));
    println!(
        "Q = {:.4} ± {:.2e}, lower bound {:.4}: {}",
        report.q_eq19, report.error_estimate, report.lower_bound, report.verdict
    );
    Ok(())
}
