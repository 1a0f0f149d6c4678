//! Curvature of every catalog entry at a sample point: the Einstein constant,
//! the residual `‖Ric − Λg‖` and the spectrum of `W₊`.
//!
//! ```text
//! cargo run --release --example einstein_check
//! ```

use curvestab::catalog::{get_entry, CATALOG_NAMES};
use curvestab::curvature::curvature_at;
use curvestab::expr::ParamEnv;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:<16} {:>12} {:>10}  W₊ eigenvalues at a sample point", "entry", "Λ", "residual");
    for name in CATALOG_NAMES {
        let entry = get_entry(name, &ParamEnv::new())?;
        let report = entry.einstein_check(16, 7)?;
        let p = entry.samples(1, 3)[0];
        let pack = curvature_at(&entry.metric, &p)?;
        let (eig, _) = pack.w_plus_eigen();
        println!(
            "{:<16} {:>12.6} {:>10.1e}  [{:+.4e}, {:+.4e}, {:+.4e}]",
            name, report.lambda, report.max_residual, eig[0], eig[1], eig[2]
        );
    }
    Ok(())
}
