//! Differential operators on a compactly supported trace-free test field on
//! Schwarzschild: the rough Laplacian route to `L`, the `T*T − W₊` route to
//! `P`, and the divergence.
//!
//! ```text
//! cargo run --release --example field_operators
//! ```

use curvestab::catalog::get_entry;
use curvestab::expr::ParamEnv;
use curvestab::fieldops::{bump_tracefree, divergence, l_operator, p_operator, t_operator, StencilConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let entry = get_entry("schwarzschild", &ParamEnv::new())?;
    // Chart order is (r, t, θ, φ).
    let centre = [6.0, 0.0, 1.2, 0.5];
    let field = bump_tracefree(entry.metric.clone(), centre, 1.0, 42);
    let cfg = StencilConfig::new(6, 1e-3, 0);

    for dr in [-0.5, 0.0, 0.5] {
        let p = [centre[0] + dr, centre[1], centre[2], centre[3]];
        let l = l_operator(&field, &entry.metric, &p, &cfg)?;
        let pk = p_operator(&field, &entry.metric, &p, &cfg)?;
        let t = t_operator(&field, &entry.metric, &p, &cfg)?;
        let div = divergence(&field, &entry.metric, &p, &cfg)?;
        println!(
            "r = {:.2}: max|Lk| = {:.4e}, max|Pk| = {:.4e}, |Tk| = {:.4e}, max|δk| = {:.4e}",
            p[0],
            l.max_abs(),
            pk.max_abs(),
            t.norm(),
            div.iter().fold(0.0f64, |a, v| a.max(v.abs()))
        );
    }
    Ok(())
}
