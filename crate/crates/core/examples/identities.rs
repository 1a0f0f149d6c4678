//! Run the identity suite on every catalog entry and print the table.
//!
//! ```text
//! cargo run --release --example identities
//! ```

use curvestab::catalog::{get_entry, CATALOG_NAMES};
use curvestab::expr::ParamEnv;
use curvestab::identities::{run_identities, SuiteConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SuiteConfig::default();
    for name in CATALOG_NAMES {
        let report = run_identities(&get_entry(name, &ParamEnv::new())?, &cfg);
        println!("{name}: {}", if report.all_pass() { "all pass" } else { "FAILURES" });
        for row in &report.rows {
            let residual = row.residual.map_or("-".to_string(), |r| format!("{r:.2e}"));
            println!("  {:<34} {:>10} / {:.0e}  {:?}", row.name, residual, row.tolerance, row.status);
        }
    }
    Ok(())
}
