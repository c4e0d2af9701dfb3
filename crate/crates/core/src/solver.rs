//! Explicit radial integrator for `rho u_t = Lap(u^m) + rho u^p` on a ball
//! with homogeneous Dirichlet data on the outer sphere.
//!
//! Space: a conservative finite-volume discretization of the radial
//! Laplacian on the uniform node grid, so that the cell at the origin sees
//! the symmetric ghost value and every cell has nonnegative weights.
//! Time: an explicit diffusion step followed by the exact flow of
//! `u' = u^p` over the same step.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ProblemSpec, RadialGrid};

/// Values below this count as outside the support.
pub const FRONT_LEVEL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub grid: RadialGrid,
    pub cfl_safety: f64,
    pub u_blowup: f64,
    pub dt_min: f64,
    pub t_end: f64,
    /// Number of uniformly spaced snapshots after the initial one.
    pub n_snapshots: usize,
    /// Extra snapshot whenever the sup norm doubles since the last one.
    pub growth_snapshots: bool,
    pub reaction: bool,
}

impl SolverConfig {
    pub fn new(grid: RadialGrid, t_end: f64) -> Self {
        Self {
            grid,
            cfl_safety: 0.4,
            u_blowup: 1e6,
            dt_min: 1e-12,
            t_end,
            n_snapshots: 100,
            growth_snapshots: true,
            reaction: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Config(format!("cfl_safety = {} outside (0, 1]", self.cfl_safety)));
        }
        if self.u_blowup.is_nan() || self.u_blowup <= 0.0 {
            return Err(Error::Config(format!("u_blowup = {} must be positive", self.u_blowup)));
        }
        if !(self.dt_min > 0.0 && self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config("dt_min must be positive and t_end finite".into()));
        }
        Ok(())
    }
}

/// Nodal values on a radial grid; the last node is the Dirichlet boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialField {
    pub grid: RadialGrid,
    pub u: Vec<f64>,
}

impl RadialField {
    /// Sample `f` at the nodes and impose `u = 0` on the boundary.
    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> f64) -> Self {
        let mut u: Vec<f64> = grid.nodes().into_iter().map(f).collect();
        *u.last_mut().expect("grid has nodes") = 0.0;
        Self { grid, u }
    }

    pub fn zeros(grid: RadialGrid) -> Self {
        let u = vec![0.0; grid.len()];
        Self { grid, u }
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.u)
    }

    pub fn front(&self) -> f64 {
        front(&self.u, self.grid.h())
    }
}

fn sup_norm(u: &[f64]) -> f64 {
    u.iter().copied().fold(0.0, f64::max)
}

/// Largest node radius with `u > FRONT_LEVEL`.
fn front(u: &[f64], h: f64) -> f64 {
    u.iter().rposition(|&v| v > FRONT_LEVEL).map_or(0.0, |i| i as f64 * h)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Outcome {
    ReachedTEnd,
    BlowUp { t_detect: f64 },
    StepCollapse { t: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: RadialGrid,
    pub snapshots: Vec<Snapshot>,
    /// `(t, sup norm)`, recorded at snapshots and on every 2% growth.
    pub supnorm_series: Vec<(f64, f64)>,
    pub front_series: Vec<(f64, f64)>,
    pub outcome: Outcome,
    pub steps: usize,
    /// Zero of the line through the last two points of `(t, |u|^(1-p))`.
    pub extrapolated_blowup: Option<f64>,
}

impl Trajectory {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory has an initial snapshot")
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| (s.t - t).abs() <= 1e-12 * (1.0 + t.abs()))
    }
}

/// Precomputed stencil weights and density for one problem on one grid.
#[derive(Clone, Debug)]
pub struct Solver {
    spec: ProblemSpec,
    config: SolverConfig,
    inv_rho: Vec<f64>,
    /// Weights of `w[i+1] - w[i]` and `w[i] - w[i-1]` in the discrete
    /// Laplacian of `w = u^m`.
    cp: Vec<f64>,
    cm: Vec<f64>,
    /// `rho_i h^2 / (2 N m)`: the local diffusive step limit at `u = 1`.
    diff_limit: Vec<f64>,
    diffusion: bool,
}

impl Solver {
    pub fn new(spec: &ProblemSpec, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        let inv_rho = config.grid.nodes().iter().map(|&r| spec.density.inv_rho(r)).collect();
        Ok(Self::build(spec, config, inv_rho))
    }

    /// Porous medium equation `u_t = Lap(u^m)`: unit density, no reaction.
    pub fn porous_medium(spec: &ProblemSpec, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        let mut config = config.clone();
        config.reaction = false;
        Ok(Self::build(spec, &config, vec![1.0; config.grid.len()]))
    }

    /// Pure reaction `u_t = u^p`.
    pub fn reaction_only(spec: &ProblemSpec, config: &SolverConfig) -> Result<Self> {
        let mut s = Self::new(spec, config)?;
        s.diffusion = false;
        s.config.reaction = true;
        Ok(s)
    }

    fn build(spec: &ProblemSpec, config: &SolverConfig, inv_rho: Vec<f64>) -> Self {
        let n = spec.n();
        let h = config.grid.h();
        let len = config.grid.len();
        let mut cp = vec![0.0; len];
        let mut cm = vec![0.0; len];
        cp[0] = 2.0 * n / (h * h);
        for i in 1..len {
            let r = i as f64 * h;
            let (rp, rm) = (r + 0.5 * h, r - 0.5 * h);
            let vol = (rp.powf(n) - rm.powf(n)) / n;
            cp[i] = rp.powf(n - 1.0) / (h * vol);
            cm[i] = rm.powf(n - 1.0) / (h * vol);
        }
        let diff_limit = inv_rho.iter().map(|&ir| h * h / (ir * 2.0 * n * spec.m)).collect();
        Self {
            spec: spec.clone(),
            config: config.clone(),
            inv_rho,
            cp,
            cm,
            diff_limit,
            diffusion: true,
        }
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    fn pow_m(&self, u: f64) -> f64 {
        if self.spec.m == 2.0 {
            u * u
        } else {
            u.powf(self.spec.m)
        }
    }

    fn pow_m1(&self, u: f64) -> f64 {
        if self.spec.m == 2.0 {
            u
        } else {
            u.powf(self.spec.m - 1.0)
        }
    }

    /// Stable step for the current state, before any clipping.
    fn stable_dt(&self, u: &[f64], active: usize) -> f64 {
        let mut dt = f64::INFINITY;
        if self.diffusion {
            let end = active.min(u.len() - 1) + 1;
            for (&ui, &limit) in u[..end].iter().zip(&self.diff_limit) {
                if ui > 0.0 {
                    dt = dt.min(limit / self.pow_m1(ui));
                }
            }
        }
        if self.config.reaction {
            let umax = sup_norm(u);
            if umax > 0.0 {
                dt = dt.min(0.5 * umax.powf(1.0 - self.spec.p));
            }
        }
        self.config.cfl_safety * dt
    }

    /// Advance by exactly `dt`; `active` bounds the last nonzero node and is
    /// updated.
    fn advance(&self, u: &mut [f64], w: &mut [f64], dt: f64, active: &mut usize) {
        let last = u.len() - 1;
        let hi = (*active + 1).min(last);
        if self.diffusion {
            for i in 0..=hi.min(last) {
                w[i] = self.pow_m(u[i]);
            }
            if hi < last {
                w[hi + 1] = 0.0;
            }
            for i in 0..=hi.min(last - 1) {
                let right = self.cp[i] * (w[i + 1] - w[i]);
                let left = if i == 0 { 0.0 } else { self.cm[i] * (w[i] - w[i - 1]) };
                let next = u[i] + dt * self.inv_rho[i] * (right - left);
                u[i] = next.max(0.0);
            }
            u[last] = 0.0;
        }
        if self.config.reaction {
            let p = self.spec.p;
            for v in u[..=hi.min(last - 1)].iter_mut() {
                if *v > 0.0 {
                    let base = v.powf(1.0 - p) - (p - 1.0) * dt;
                    *v = if base > 0.0 { base.powf(-1.0 / (p - 1.0)) } else { f64::INFINITY };
                }
            }
        }
        *active = u[..=hi].iter().rposition(|&v| v > 0.0).unwrap_or(0);
    }

    /// One adaptive step; errors with `StepCollapse` if the stable step
    /// falls below `dt_min`.
    pub fn step(&self, state: &RadialField, t: f64) -> Result<(RadialField, f64)> {
        let mut u = state.u.clone();
        let mut w = vec![0.0; u.len()];
        let mut active = u.len() - 1;
        let dt = self.stable_dt(&u, active);
        if dt < self.config.dt_min {
            return Err(Error::StepCollapse { t, dt });
        }
        let dt = if dt.is_finite() { dt } else { self.config.t_end.max(self.config.dt_min) };
        self.advance(&mut u, &mut w, dt, &mut active);
        Ok((RadialField { grid: state.grid, u }, dt))
    }

    /// Integrate from `u0` until `t_end`, blow-up detection or step collapse.
    pub fn solve(&self, u0: &RadialField) -> Result<Trajectory> {
        if u0.grid != self.config.grid {
            return Err(Error::Config("initial field is not on the solver grid".into()));
        }
        if u0.u.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Precondition("initial datum must be finite and nonnegative".into()));
        }
        if *u0.u.last().unwrap() != 0.0 {
            return Err(Error::Precondition("initial datum must vanish on the outer boundary".into()));
        }
        let cfg = &self.config;
        let h = cfg.grid.h();
        let p = self.spec.p;
        let mut u = u0.u.clone();
        let mut w = vec![0.0; u.len()];
        let mut active = u.iter().rposition(|&v| v > 0.0).unwrap_or(0);
        let mut t = 0.0;
        let mut steps = 0usize;

        let mut umax = sup_norm(&u);
        let mut snapshots = vec![Snapshot { t, u: u.clone() }];
        let mut supnorm_series = vec![(t, umax)];
        let mut front_series = vec![(t, front(&u, h))];
        let mut last_snap_norm = umax;
        let mut last_series_norm = umax;
        let mut next_index = 1usize;
        let snap_time = |k: usize| cfg.t_end * k as f64 / cfg.n_snapshots.max(1) as f64;

        let outcome = loop {
            if t >= cfg.t_end {
                break Outcome::ReachedTEnd;
            }
            let target = snap_time(next_index).min(cfg.t_end);
            let natural = self.stable_dt(&u, active);
            if natural < cfg.dt_min {
                break Outcome::StepCollapse { t };
            }
            let (dt, lands) = if t + natural >= target { (target - t, true) } else { (natural, false) };
            self.advance(&mut u, &mut w, dt, &mut active);
            steps += 1;
            t = if lands { target } else { t + dt };
            umax = sup_norm(&u);

            if !umax.is_finite() || umax > cfg.u_blowup {
                snapshots.push(Snapshot { t, u: u.clone() });
                supnorm_series.push((t, umax));
                front_series.push((t, front(&u, h)));
                break Outcome::BlowUp { t_detect: t };
            }
            let mut recorded = false;
            if lands {
                next_index += 1;
                snapshots.push(Snapshot { t, u: u.clone() });
                last_snap_norm = umax;
                recorded = true;
            } else if cfg.growth_snapshots && umax >= 2.0 * last_snap_norm && last_snap_norm > 0.0 {
                snapshots.push(Snapshot { t, u: u.clone() });
                last_snap_norm = umax;
                recorded = true;
            }
            if recorded || umax >= 1.02 * last_series_norm {
                supnorm_series.push((t, umax));
                front_series.push((t, front(&u, h)));
                last_series_norm = umax;
            }
        };
        if let Outcome::StepCollapse { t } = outcome {
            if snapshots.last().map(|s| s.t) != Some(t) {
                snapshots.push(Snapshot { t, u: u.clone() });
                supnorm_series.push((t, umax));
                front_series.push((t, front(&u, h)));
            }
        }
        let extrapolated_blowup = match outcome {
            Outcome::ReachedTEnd => None,
            _ => extrapolate_blowup(&supnorm_series, p),
        };
        Ok(Trajectory {
            grid: cfg.grid,
            snapshots,
            supnorm_series,
            front_series,
            outcome,
            steps,
            extrapolated_blowup,
        })
    }
}

/// Zero of the secant through the last two finite points of
/// `(t, |u|^(1-p))`; for the ODE `u' = u^p` this line is exact.
pub fn extrapolate_blowup(series: &[(f64, f64)], p: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(_, n)| n.is_finite() && *n > 0.0)
        .map(|&(t, n)| (t, n.powf(1.0 - p)))
        .collect();
    let [.., (t1, y1), (t2, y2)] = pts[..] else { return None };
    if y1 <= y2 || t2 <= t1 {
        return None;
    }
    Some(t2 + y2 * (t2 - t1) / (y1 - y2))
}

/// Convenience wrapper: build a solver for `spec` and run it.
pub fn solve(u0: &RadialField, spec: &ProblemSpec, config: &SolverConfig) -> Result<Trajectory> {
    Solver::new(spec, config)?.solve(u0)
}

/// Solve the same data on nested balls sharing one mesh width, check that
/// the solutions increase with the radius at every common node and common
/// snapshot time, and return all trajectories (smallest radius first).
pub fn minimal_solution_extrapolate(
    u0: impl Fn(f64) -> f64 + Sync,
    spec: &ProblemSpec,
    config: &SolverConfig,
    radii: &[f64],
) -> Result<Vec<Trajectory>> {
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii.is_empty() {
        return Err(Error::Precondition("radii must be a nonempty increasing list".into()));
    }
    let h = config.grid.h();
    let trajectories: Vec<Trajectory> = radii
        .par_iter()
        .map(|&big_r| {
            let n_cells = (big_r / h).round() as usize;
            let grid = RadialGrid::new(n_cells as f64 * h, n_cells)?;
            let cfg = SolverConfig { grid, ..config.clone() };
            solve(&RadialField::from_fn(grid, &u0), spec, &cfg)
        })
        .collect::<Result<_>>()?;
    for pair in trajectories.windows(2) {
        let (small, large) = (&pair[0], &pair[1]);
        for snap in &small.snapshots {
            let Some(other) = large.snapshot_at(snap.t) else { continue };
            for (i, (&a, &b)) in snap.u.iter().zip(&other.u).enumerate() {
                if !(a.is_finite() && b.is_finite()) {
                    continue;
                }
                let excess = a - b;
                if excess > 1e-8 * (1.0 + a.abs()) {
                    return Err(Error::MonotonicityViolation {
                        smaller: small.grid.r_max,
                        radius: large.grid.r_max,
                        r: i as f64 * h,
                        t: snap.t,
                        excess,
                    });
                }
            }
        }
    }
    Ok(trajectories)
}

/// Barenblatt profile `t^(-k) (C0 - kappa r^2 t^(-2k/N))_+^(1/(m-1))` of the
/// porous medium equation.
pub fn barenblatt(n: f64, m: f64, c0: f64, r: f64, t: f64) -> f64 {
    let k = n / (n * (m - 1.0) + 2.0);
    let kappa = (m - 1.0) * k / (2.0 * m * n);
    let inner = c0 - kappa * r * r * t.powf(-2.0 * k / n);
    if inner <= 0.0 {
        0.0
    } else {
        t.powf(-k) * inner.powf(1.0 / (m - 1.0))
    }
}

/// Support radius of [`barenblatt`].
pub fn barenblatt_front(n: f64, m: f64, c0: f64, t: f64) -> f64 {
    let k = n / (n * (m - 1.0) + 2.0);
    let kappa = (m - 1.0) * k / (2.0 * m * n);
    (c0 / kappa).sqrt() * t.powf(k / n)
}
