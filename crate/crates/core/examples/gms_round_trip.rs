//! Write a catalog metric in the `.gms` text format, read it back and check
//! the parsed metric against the original.
//!
//! ```text
//! cargo run --release --example gms_round_trip
//! ```

use curvestab::catalog::{get_entry, CatalogEntry};
use curvestab::expr::ParamEnv;
use curvestab::gms::{parse_gms, to_gms};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let entry = get_entry("page", &ParamEnv::new())?;
    let text = to_gms(&entry.spec);
    println!("{text}");

    let parsed = CatalogEntry::from_spec(parse_gms(&text)?, &ParamEnv::new())?;
    let mut worst = 0.0f64;
    for p in entry.samples(20, 9) {
        worst = worst.max((entry.metric.metric(&p)? - parsed.metric.metric(&p)?).amax());
    }
    println!("max |g − g_parsed| over 20 points: {worst:.2e}");
    println!("Einstein constant: {:.12} vs {:.12}", entry.einstein_constant, parsed.einstein_constant);

    match parse_gms("metric broken {\n  coords { r in (0, inf) }\n}") {
        Ok(_) => println!("unexpectedly parsed"),
        Err(e) => println!("malformed input rejected: {e}"),
    }
    Ok(())
}
