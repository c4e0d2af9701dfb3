//! Blow-up for q = 2, p > m: data above the subsolution blows up by time T.
//!
//! `cargo run --release --example blowup_q2 [out_dir]`


use wpme::experiment::{run, ExperimentKind, ExperimentSpec};
use wpme::model::{DensityModel, ProblemSpec};

fn main() -> wpme::Result<()> {
    let spec = ProblemSpec::new(4, 2.0, 3.0, DensityModel::exterior_power(2.0, 1.0)?)?;
    let mut exp = ExperimentSpec::new(ExperimentKind::BlowupQ2, spec);
    exp.output_dir = std::env::args().nth(1).map(Into::into);
    let report = run(&exp)?;
    println!("status {:?}, outcome {:?}, steps {}", report.status, report.outcome, report.steps);
    println!("T = {:?}, extrapolated {:?}, evidence {:?}", report.params.as_ref().map(|p| p.t_horizon), report.extrapolated_blowup, report.blowup_evidence);
    for a in &report.assertions {
        println!("  {:<14} {}  {}", a.name, if a.pass { "ok" } else { "FAILED" }, a.detail);
    }
    for n in &report.notes {
        println!("  note: {n}");
    }
    std::process::exit(report.exit_code());
}
