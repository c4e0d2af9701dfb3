//! Regime sweep over p in {2.5, 3, 3.5} and q in {2, 3, 4} at N = 4, m = 2;
//! the extra r0 = e cells show an infeasible row. Writes CSV to stdout.
//!
//! `cargo run --release --example sweep > sweep.csv`

use std::f64::consts::E;

use wpme::experiment::{self, SweepSettings};

fn main() -> wpme::Result<()> {
    let cells = experiment::sweep_grid(&[4], &[2.0], &[2.5, 3.0, 3.5], &[2.0, 3.0, 4.0], &[E, E * E]);
    let settings = SweepSettings { t_end: Some(1.0), n_cells: Some(400) };
    let rows = experiment::sweep(&cells, &settings);
    experiment::write_sweep(std::io::stdout().lock(), &rows)
}
