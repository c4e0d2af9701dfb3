//! Solve the parameter systems for the worked instances and print every check.
//!
//! `cargo run --example feasibility`

use std::f64::consts::E;

use wpme::barriers::Family;
use wpme::feasibility::{self, FeasibilityReport};
use wpme::model::{DensityModel, ProblemSpec};

fn show(label: &str, report: &FeasibilityReport) {
    println!("{label}: feasible = {}", report.feasible);
    for c in &report.checks {
        println!("  {:<26} lhs {:>12.5e}  rhs {:>12.5e}  margin {:>11.3e}  {}", c.id, c.lhs, c.rhs, c.margin, c.pass);
    }
    for n in &report.notes {
        println!("  note: {n}");
    }
}

fn main() -> wpme::Result<()> {
    let k = feasibility::compute_k(2.0, 3.0)?;
    println!("K(m = 2, p = 3) = {:.6}", k.value);

    let q2 = ProblemSpec::new(4, 2.0, 3.0, DensityModel::exact_power(2.0, 1.0, E * E)?)?;
    let cert = feasibility::solve(Family::SuperQ2, &q2)?;
    println!("super q = 2: C = {:.4}, a = {:.4}, omega = {:.4}", cert.params.c, cert.params.a, cert.params.omega);
    show("super q = 2", &cert.report);

    let small_r0 = ProblemSpec::new(4, 2.0, 3.0, DensityModel::exact_power(2.0, 1.0, E)?)?;
    show("super q = 2 with r0 = e", &feasibility::check_shift_condition(&small_r0));

    let ext = ProblemSpec::new(4, 2.0, 3.0, DensityModel::exterior_power(2.0, 1.0)?)?;
    let cert = feasibility::solve(Family::SubQ2, &ext)?;
    println!("sub q = 2: C = {:.4}, a = {:.4}", cert.params.c, cert.params.a);
    show("sub q = 2", &cert.report);

    for p in [1.5, 2.0, 3.0] {
        let spec = ProblemSpec::new(5, 2.0, p, DensityModel::exact_power(4.0, 1.0, 2.0)?)?;
        match feasibility::solve(Family::SuperQgt2, &spec) {
            Ok(cert) => {
                println!("super q = 4, p = {p}: C = {:.4}, alpha = {}", cert.params.c, cert.params.alpha);
                show("  checks", &cert.report);
            }
            Err(e) => println!("super q = 4, p = {p}: {e}"),
        }
    }
    Ok(())
}
