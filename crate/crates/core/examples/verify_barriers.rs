//! Residual verification of the three barrier families on their default grids.
//!
//! `cargo run --release --example verify_barriers`

use std::f64::consts::E;

use wpme::barriers::Family;
use wpme::feasibility;
use wpme::model::{DensityModel, ProblemSpec};
use wpme::verifier::{self, GridSpec};

fn main() -> wpme::Result<()> {
    let cases = [
        (Family::SuperQ2, ProblemSpec::new(4, 2.0, 3.0, DensityModel::exact_power(2.0, 1.0, E * E)?)?),
        (Family::SubQ2, ProblemSpec::new(4, 2.0, 3.0, DensityModel::exterior_power(2.0, 1.0)?)?),
        (Family::SuperQgt2, ProblemSpec::new(5, 2.0, 3.0, DensityModel::exact_power(4.0, 1.0, 2.0)?)?),
    ];
    let grid = GridSpec::default();
    for (family, spec) in cases {
        let cert = feasibility::solve(family, &spec)?;
        let report = if family.is_super() {
            verifier::verify_supersolution(&cert.params, &spec, &grid)?
        } else {
            verifier::verify_subsolution(&cert.params, &spec, &grid)?
        };
        println!(
            "{family:?}: pass = {}, worst margin {:.3e}, violations {}, regions {:?}",
            report.pass(),
            report.worst_margin,
            report.violations,
            report.region_counts
        );
        let errs = verifier::crosscheck_derivatives(&cert.params, &spec, 500, 7);
        println!("  finite-difference crosscheck: max relative error {:.2e}", errs.max());

        let sabotaged = cert.params.with_amplitude(2.0 * cert.params.c, spec.m);
        let bad = verifier::scan(&sabotaged, &spec, &grid)?;
        println!("  with C doubled: {} violations, worst margin {:.3e}", bad.violations, bad.worst_margin);
    }
    Ok(())
}
