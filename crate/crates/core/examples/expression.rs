//! Parse a metric component, differentiate it symbolically and evaluate the
//! result through the compiled program.
//!
//! ```text
//! cargo run --example expression
//! ```

use curvestab::expr::{parse_expr, ParamEnv, Program, Scope};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scope = Scope::new(&["t", "r", "theta", "phi"], &["m"]);
    let v = parse_expr("1 - 2*m/r", &scope)?;
    let dv = v.differentiate(1, 1);
    let ddv = v.differentiate(1, 2);
    println!("V      = {v}");
    println!("∂_r V  = {dv}");
    println!("∂²_r V = {ddv}");

    let env = ParamEnv::new().with("m", 1.0);
    let program = Program::compile(&[v.clone(), dv, ddv], &env)?;
    for r in [2.5, 4.0, 10.0] {
        let vals = program.eval(&[0.0, r, 1.0, 0.0])?;
        println!("r = {r:5.1}: V = {:.6}, V' = {:.6}, V'' = {:.6}", vals[0], vals[1], vals[2]);
    }
    Ok(())
}
