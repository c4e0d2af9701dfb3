//! Global existence for q > 2: the truncated cap stays under the supersolution.
//!
//! `cargo run --release --example global_existence_qgt2 [out_dir]`


use wpme::experiment::{run, ExperimentKind, ExperimentSpec};
use wpme::model::{DensityModel, ProblemSpec};

fn main() -> wpme::Result<()> {
    let spec = ProblemSpec::new(5, 2.0, 3.0, DensityModel::exact_power(4.0, 1.0, 2.0)?)?;
    let mut exp = ExperimentSpec::new(ExperimentKind::GlobalExistenceQgt2, spec);
    exp.output_dir = std::env::args().nth(1).map(Into::into);
    let report = run(&exp)?;
    println!("status {:?}, outcome {:?}, steps {}", report.status, report.outcome, report.steps);
    for a in &report.assertions {
        println!("  {:<14} {}  {}", a.name, if a.pass { "ok" } else { "FAILED" }, a.detail);
    }
    for n in &report.notes {
        println!("  note: {n}");
    }
    std::process::exit(report.exit_code());
}
