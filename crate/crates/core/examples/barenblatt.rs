//! Solver accuracy against the Barenblatt profile and the reaction ODE.
//!
//! `cargo run --release --example barenblatt`

use wpme::experiment;

fn main() -> wpme::Result<()> {
    for n in [250, 500, 1000, 2000] {
        println!("n = {n:>5}: relative L-inf error {:.4e}", experiment::barenblatt_error(3, 2.0, n)?);
    }
    let (t_detect, exact) = experiment::ode_blowup_time(3.0, 2.0)?;
    println!("ODE blow-up: detected {t_detect:.6}, exact {exact:.6}");
    Ok(())
}
