//! Comparison experiments: solve from barrier-shaped data and
//! check the numerical solution against the barrier at every snapshot.

use std::cmp::Ordering;
use std::f64::consts::E;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barriers::{self, BarrierParams, Family, Region};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::feasibility::{self, Certified, FeasibilityReport};
use crate::model::{self, DensityModel, ProblemSpec, RadialGrid};
use crate::output;
use crate::solver::{self, Outcome, RadialField, Solver, SolverConfig, Trajectory};
use crate::verifier::{self, GridSpec, ResidualReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    GlobalExistenceQ2,
    BlowupQ2,
    GlobalExistenceQgt2,
    VerifyBarrier,
    FeasibilityOnly,
    SolverValidation,
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "global_existence_q2" => Self::GlobalExistenceQ2,
            "blowup_q2" => Self::BlowupQ2,
            "global_existence_qgt2" => Self::GlobalExistenceQgt2,
            "verify_barrier" => Self::VerifyBarrier,
            "feasibility_only" => Self::FeasibilityOnly,
            "solver_validation" => Self::SolverValidation,
            other => return Err(Error::Config(format!("unknown experiment kind `{other}`"))),
        })
    }
}

/// Solver knobs; unset values are chosen per experiment from the barrier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub n_cells: Option<usize>,
    pub r_max: Option<f64>,
    pub t_end: Option<f64>,
    pub cfl_safety: f64,
    pub u_blowup: Option<f64>,
    pub dt_min: Option<f64>,
    pub n_snapshots: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            n_cells: None,
            r_max: None,
            t_end: None,
            cfl_safety: 0.4,
            u_blowup: None,
            dt_min: None,
            n_snapshots: 100,
        }
    }
}

impl SolverSettings {
    fn build(&self, r_max: f64, n_cells: usize, t_end: f64) -> Result<SolverConfig> {
        let grid = RadialGrid::new(self.r_max.unwrap_or(r_max), self.n_cells.unwrap_or(n_cells))?;
        let mut cfg = SolverConfig::new(grid, self.t_end.unwrap_or(t_end));
        cfg.cfl_safety = self.cfl_safety;
        cfg.n_snapshots = self.n_snapshots;
        if let Some(u) = self.u_blowup {
            cfg.u_blowup = u;
        }
        if let Some(dt) = self.dt_min {
            cfg.dt_min = dt;
        }
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub problem: ProblemSpec,
    /// Explicit barrier parameters; they are re-checked before use.
    pub overrides: Option<BarrierParams>,
    pub solver: SolverSettings,
    /// Multiplier applied to the barrier-shaped initial datum.
    pub data_scale: f64,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, problem: ProblemSpec) -> Self {
        Self {
            kind,
            problem,
            overrides: None,
            solver: SolverSettings::default(),
            data_scale: 1.0,
            output_dir: None,
        }
    }
}

impl ExperimentSpec {
    /// Build from a config file; `experiment.kind` is required unless `kind`
    /// is given.
    pub fn from_config(cfg: &Config, kind: Option<ExperimentKind>) -> Result<Self> {
        let kind = match kind {
            Some(k) => k,
            None => cfg.require::<String>("experiment.kind")?.parse()?,
        };
        let problem = cfg.problem()?;
        let d = SolverSettings::default();
        Ok(Self {
            kind,
            overrides: cfg.overrides(&problem)?,
            problem,
            solver: SolverSettings {
                n_cells: cfg.get("solver.n_cells")?,
                r_max: cfg.get("solver.r_max")?,
                t_end: cfg.get("solver.t_end")?,
                cfl_safety: cfg.get_or("solver.cfl", d.cfl_safety)?,
                u_blowup: cfg.get("solver.u_blowup")?,
                dt_min: cfg.get("solver.dt_min")?,
                n_snapshots: cfg.get_or("solver.n_snapshots", d.n_snapshots)?,
            },
            data_scale: cfg.get_or("experiment.data_scale", 1.0)?,
            output_dir: None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    /// Data outside the certified range; the run is reported, not judged.
    Exploratory,
    AssertionFailure,
    Infeasible,
    Collapse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupEvidence {
    /// Threshold crossed and the extrapolated blow-up time lies in `[0.8 T, 1.1 T]`.
    Confirmed,
    /// Only one of the two signals.
    Weak,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    /// Smallest signed slack seen (negative means violated).
    pub worst: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub status: Status,
    pub certified: bool,
    pub params: Option<BarrierParams>,
    pub feasibility: Option<FeasibilityReport>,
    pub outcome: Option<Outcome>,
    pub h: Option<f64>,
    pub r_max: Option<f64>,
    pub t_end: Option<f64>,
    pub steps: usize,
    pub assertions: Vec<Assertion>,
    pub worst_ordering_margin: Option<f64>,
    pub t_detect: Option<f64>,
    pub extrapolated_blowup: Option<f64>,
    pub blowup_evidence: Option<BlowupEvidence>,
    pub residual_reports: Vec<ResidualReport>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
}

impl ExperimentReport {
    fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            status: Status::Pass,
            certified: false,
            params: None,
            feasibility: None,
            outcome: None,
            h: None,
            r_max: None,
            t_end: None,
            steps: 0,
            assertions: Vec::new(),
            worst_ordering_margin: None,
            t_detect: None,
            extrapolated_blowup: None,
            blowup_evidence: None,
            residual_reports: Vec::new(),
            notes: Vec::new(),
            trajectory: None,
        }
    }

    fn infeasible(kind: ExperimentKind, report: FeasibilityReport) -> Self {
        let mut out = Self::new(kind);
        out.status = Status::Infeasible;
        out.feasibility = Some(report);
        out
    }

    /// 0 pass (or exploratory), 2 assertion failure, 3 infeasible,
    /// 4 solver collapse.
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Pass | Status::Exploratory => 0,
            Status::AssertionFailure => 2,
            Status::Infeasible => 3,
            Status::Collapse => 4,
        }
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }

    fn attach_trajectory(&mut self, traj: Trajectory, cfg: &SolverConfig) {
        self.outcome = Some(traj.outcome);
        self.h = Some(cfg.grid.h());
        self.r_max = Some(cfg.grid.r_max);
        self.t_end = Some(cfg.t_end);
        self.steps = traj.steps;
        self.extrapolated_blowup = traj.extrapolated_blowup;
        if let Outcome::BlowUp { t_detect } = traj.outcome {
            self.t_detect = Some(t_detect);
        }
        self.trajectory = Some(traj);
    }

    /// Settle `status` from the assertions and the outcome.
    fn finish(&mut self) {
        if matches!(self.status, Status::Infeasible) {
            return;
        }
        if matches!(self.outcome, Some(Outcome::StepCollapse { .. })) {
            self.status = Status::Collapse;
        } else if !self.certified {
            self.status = Status::Exploratory;
        } else if self.assertions.iter().all(|a| a.pass) {
            self.status = Status::Pass;
        } else {
            self.status = Status::AssertionFailure;
        }
    }

    /// Write `report.json` and, when a trajectory exists, `snapshots.csv` and
    /// `series.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        output::write_json(output::create(&dir.join("report.json"))?, self)?;
        if let Some(traj) = &self.trajectory {
            output::write_snapshots(output::create(&dir.join("snapshots.csv"))?, traj)?;
            output::write_series(output::create(&dir.join("series.csv"))?, traj)?;
        }
        for (i, rep) in self.residual_reports.iter().enumerate() {
            let name = format!("worst_samples_{i}.csv");
            output::write_samples(output::create(&dir.join(name))?, &rep.worst_samples)?;
        }
        Ok(())
    }
}

/// Re-check user parameters, or solve with the default recipe.
pub fn certify(family: Family, spec: &ProblemSpec, overrides: &Option<BarrierParams>) -> Result<Certified> {
    match overrides {
        Some(p) if p.family == family => {
            let report = feasibility::check(p, spec)?.into_result()?;
            let mut params = p.clone();
            params.certified = true;
            Ok(Certified { params, report })
        }
        Some(p) => Err(Error::Config(format!("override family {:?} does not match {family:?}", p.family))),
        None => feasibility::solve(family, spec),
    }
}

/// Run `certify`, turning infeasibility into a report.
fn certify_or_report(
    kind: ExperimentKind,
    family: Family,
    spec: &ProblemSpec,
    overrides: &Option<BarrierParams>,
) -> Result<std::result::Result<Certified, ExperimentReport>> {
    match certify(family, spec, overrides) {
        Ok(c) => Ok(Ok(c)),
        Err(Error::Infeasible(rep)) => Ok(Err(ExperimentReport::infeasible(kind, *rep))),
        Err(e) => Err(e),
    }
}

/// Minimum of `f(snapshot)` over snapshots, with the time of the minimum.
fn worst_over<F>(traj: &Trajectory, mut f: F) -> Result<(f64, f64)>
where
    F: FnMut(f64, &[f64]) -> Result<Option<f64>>,
{
    let mut worst = (f64::INFINITY, f64::NAN);
    for snap in &traj.snapshots {
        if let Some(v) = f(snap.t, &snap.u)? {
            if v < worst.0 {
                worst = (v, snap.t);
            }
        }
    }
    Ok(worst)
}

fn front_of(u: &[f64], h: f64) -> f64 {
    u.iter().rposition(|&v| v > solver::FRONT_LEVEL).map_or(0.0, |i| i as f64 * h)
}

fn assertion(name: &str, worst: (f64, f64), what: &str) -> Assertion {
    let pass = worst.0 >= 0.0;
    let detail = if pass {
        format!("{what}: smallest slack {:.3e}", worst.0)
    } else {
        format!("{what}: first worst violation {:.3e} at t = {}", worst.0, worst.1)
    };
    Assertion { name: name.to_string(), pass, worst: worst.0, detail }
}

/// Ordering `u <= barrier + tol` at every node of every snapshot.
fn ordering_below(traj: &Trajectory, params: &BarrierParams, spec: &ProblemSpec, tol: f64) -> Result<(f64, f64, f64)> {
    let h = traj.grid.h();
    let mut raw = f64::INFINITY;
    let worst = worst_over(traj, |t, u| {
        let mut slack = f64::INFINITY;
        for (i, &v) in u.iter().enumerate() {
            let b = barriers::eval(params, spec, i as f64 * h, t)?.value;
            raw = raw.min(b - v);
            slack = slack.min(b + tol - v);
        }
        Ok(Some(slack))
    })?;
    Ok((worst.0, worst.1, raw))
}

/// `q = 2`, `p > m`: solve from the largest admissible datum and check it
/// stays under the supersolution and inside its support.
pub fn run_global_existence_q2(exp: &ExperimentSpec) -> Result<ExperimentReport> {
    let spec = &exp.problem;
    let kind = ExperimentKind::GlobalExistenceQ2;
    if spec.density.q != 2.0 || spec.p <= spec.m {
        return Err(Error::Precondition("global existence for q = 2 needs p > m".into()));
    }
    let cert = match certify_or_report(kind, Family::SuperQ2, spec, &exp.overrides)? {
        Ok(c) => c,
        Err(rep) => return Ok(rep),
    };
    let mut params = cert.params.clone();
    let mut report = ExperimentReport::new(kind);
    if exp.overrides.is_none() {
        // The certificate does not involve T; pick it so the initial support
        // radius equals r0 instead of being empty or astronomically large.
        let level = (2.0 * params.r0).ln();
        let t_horizon = (level / params.a).powf(1.0 / params.beta);
        params = params.with_horizon(t_horizon);
        report.notes.push(format!("T = {t_horizon} puts the initial front at r = r0"));
    }
    let t_end = exp.solver.t_end.unwrap_or(5.0);
    let support_end = barriers::support_radius(&params, t_end)?.finite().unwrap_or(f64::INFINITY);
    let cfg = exp.solver.build(2.0 * support_end, 2000, t_end)?;
    let h = cfg.grid.h();
    let cap = model::initial_datum_supersolution_q2(&params, spec)?;
    let scale = exp.data_scale;
    let u0 = RadialField::from_fn(cfg.grid, |r| scale * cap(r));
    report.certified = scale <= 1.0;
    if !report.certified {
        report.notes.push(format!("data scaled by {scale} exceeds the admissible cap; exploratory run"));
    }
    let traj = Solver::new(spec, &cfg)?.solve(&u0)?;

    let tol = 10.0 * h;
    let (worst, t_worst, raw) = ordering_below(&traj, &params, spec, tol)?;
    report.worst_ordering_margin = Some(raw);
    report.assertions.push(assertion("ordering", (worst, t_worst), "u <= barrier + 10h"));
    let support = worst_over(&traj, |t, u| {
        let bound = barriers::support_radius(&params, t)?.finite().unwrap_or(f64::INFINITY);
        Ok(Some(bound + 2.0 * h - front_of(u, h)))
    })?;
    report.assertions.push(assertion("support", support, "front <= barrier support + 2h"));
    report.assertions.push(Assertion {
        name: "reached_t_end".into(),
        pass: traj.outcome == Outcome::ReachedTEnd,
        worst: 0.0,
        detail: format!("{:?}", traj.outcome),
    });
    report.params = Some(params);
    report.feasibility = Some(cert.report);
    report.attach_trajectory(traj, &cfg);
    report.finish();
    Ok(report)
}

/// `q = 2`, `p > m`: start above the subsolution and check blow-up.
pub fn run_blowup_q2(exp: &ExperimentSpec) -> Result<ExperimentReport> {
    let spec = &exp.problem;
    let kind = ExperimentKind::BlowupQ2;
    if spec.density.q != 2.0 || spec.p <= spec.m {
        return Err(Error::Precondition("blow-up for q = 2 needs p > m".into()));
    }
    let cert = match certify_or_report(kind, Family::SubQ2, spec, &exp.overrides)? {
        Ok(c) => c,
        Err(rep) => return Ok(rep),
    };
    let mut params = cert.params.clone();
    let mut report = ExperimentReport::new(kind);
    if exp.overrides.is_none() {
        // With T = 1 the positivity set is exp(a)-wide; shrink T so that it
        // sits inside B_e.
        let t_horizon = (0.9 / params.a).powf(1.0 / params.beta);
        params = params.with_horizon(t_horizon);
        report.notes.push(format!("T = {t_horizon} puts the initial front inside B_e"));
    }
    let big_t = params.t_horizon;
    let front0 = barriers::support_radius(&params, 0.0)?.finite().unwrap_or(E);
    let mut cfg = exp.solver.build(2.0 * front0.max(E), 400, 2.0 * big_t)?;
    let h = cfg.grid.h();
    let floor = model::initial_datum_subsolution_q2(&params, spec)?;
    let scale = exp.data_scale;
    let u0 = RadialField::from_fn(cfg.grid, |r| scale * floor(r));
    if exp.solver.u_blowup.is_none() {
        cfg.u_blowup = cfg.u_blowup.max(1e4 * u0.sup_norm());
    }
    if exp.solver.dt_min.is_none() {
        cfg.dt_min = 1e-20;
    }
    report.certified = scale >= 1.0;
    if !report.certified {
        report.notes.push(format!("data scaled by {scale} falls below the subsolution; exploratory run"));
    }
    let traj = Solver::new(spec, &cfg)?.solve(&u0)?;
    let t_stop = match traj.outcome {
        Outcome::BlowUp { t_detect } => t_detect,
        _ => f64::INFINITY,
    };

    let tol = 10.0 * h;
    let mut raw = f64::INFINITY;
    let ordering = worst_over(&traj, |t, u| {
        if t >= t_stop || t >= big_t {
            return Ok(None);
        }
        let mut slack = f64::INFINITY;
        for (i, &v) in u.iter().enumerate() {
            let w = barriers::eval_sub_q2(&params, spec, i as f64 * h, t)?.value;
            raw = raw.min(v - w);
            slack = slack.min(v + tol - w);
        }
        Ok(Some(slack))
    })?;
    report.worst_ordering_margin = Some(raw);
    report.assertions.push(assertion("ordering", ordering, "u >= subsolution - 10h"));
    let detect_slack = 1.05 * big_t - t_stop;
    report.assertions.push(Assertion {
        name: "blow_up".into(),
        pass: detect_slack >= 0.0,
        worst: detect_slack,
        detail: format!("{:?} against 1.05 T = {}", traj.outcome, 1.05 * big_t),
    });
    let support = worst_over(&traj, |t, u| {
        if t >= t_stop || t >= big_t {
            return Ok(None);
        }
        let inner = barriers::support_radius(&params, t)?.finite().unwrap_or(0.0);
        Ok(Some(front_of(u, h) - (inner - 2.0 * h)))
    })?;
    report.assertions.push(assertion("support", support, "front >= subsolution front - 2h"));
    report.blowup_evidence = match (traj.outcome, traj.extrapolated_blowup) {
        (Outcome::BlowUp { .. }, Some(s)) if (0.8 * big_t..=1.1 * big_t).contains(&s) => Some(BlowupEvidence::Confirmed),
        (Outcome::BlowUp { .. }, _) => Some(BlowupEvidence::Weak),
        _ => None,
    };
    if let (Some(BlowupEvidence::Weak), Some(s)) = (report.blowup_evidence, traj.extrapolated_blowup) {
        report.notes.push(format!("extrapolated blow-up time {s:.4e} lies outside [0.8 T, 1.1 T]"));
    }
    report.params = Some(params);
    report.feasibility = Some(cert.report);
    report.attach_trajectory(traj, &cfg);
    report.finish();
    Ok(report)
}

const QGT2_STEP_BUDGET: f64 = 5e4;

/// `q > 2`: solve from the barrier cap truncated to a ball with zero
/// boundary data and check it stays under the barrier.
pub fn run_global_existence_qgt2(exp: &ExperimentSpec) -> Result<ExperimentReport> {
    let spec = &exp.problem;
    let kind = ExperimentKind::GlobalExistenceQgt2;
    if spec.density.q <= 2.0 {
        return Err(Error::Precondition("global existence for q > 2 needs q > 2".into()));
    }
    let cert = match certify_or_report(kind, Family::SuperQgt2, spec, &exp.overrides)? {
        Ok(c) => c,
        Err(rep) => return Ok(rep),
    };
    let params = cert.params.clone();
    let mut report = ExperimentReport::new(kind);
    let mut cfg = exp.solver.build(2.0, 100, 0.05)?;
    let h = cfg.grid.h();
    let cap = model::initial_datum_supersolution_qgt2(&params, spec)?;
    let scale = exp.data_scale;
    let u0 = RadialField::from_fn(cfg.grid, |r| scale * cap(r));
    if exp.solver.t_end.is_none() {
        // Explicit steps scale with 1/rho, which is (r + r0)^q: cap the
        // horizon by a step budget so large r0 stays tractable.
        let (_, dt0) = Solver::new(spec, &cfg)?.step(&u0, 0.0)?;
        if QGT2_STEP_BUDGET * dt0 < cfg.t_end {
            cfg.t_end = QGT2_STEP_BUDGET * dt0;
            report.notes.push(format!("horizon shortened to {:.3e} ({QGT2_STEP_BUDGET} initial steps)", cfg.t_end));
        }
    }
    report.certified = scale <= 1.0;
    report.notes.push(format!(
        "cap truncated at r = {} with zero boundary data; the barrier stays a supersolution of the ball problem",
        cfg.grid.r_max
    ));
    let traj = Solver::new(spec, &cfg)?.solve(&u0)?;
    let (worst, t_worst, raw) = ordering_below(&traj, &params, spec, 10.0 * h)?;
    report.worst_ordering_margin = Some(raw);
    report.assertions.push(assertion("ordering", (worst, t_worst), "u <= barrier + 10h"));
    report.assertions.push(Assertion {
        name: "reached_t_end".into(),
        pass: traj.outcome == Outcome::ReachedTEnd,
        worst: 0.0,
        detail: format!("{:?}", traj.outcome),
    });
    report.params = Some(params);
    report.feasibility = Some(cert.report);
    report.attach_trajectory(traj, &cfg);
    report.finish();
    Ok(report)
}

/// Solve and certify every barrier family that applies to the problem.
pub fn run_verify_barrier(exp: &ExperimentSpec, grid: &GridSpec) -> Result<ExperimentReport> {
    let spec = &exp.problem;
    let mut report = ExperimentReport::new(ExperimentKind::VerifyBarrier);
    report.certified = true;
    let families: &[Family] = if spec.density.q == 2.0 {
        &[Family::SuperQ2, Family::SubQ2]
    } else {
        &[Family::SuperQgt2]
    };
    for &family in families {
        let cert = match certify(family, spec, &exp.overrides) {
            Ok(c) => c,
            Err(Error::Infeasible(rep)) => {
                report.notes.push(format!("{family:?}: infeasible"));
                report.feasibility.get_or_insert(*rep);
                continue;
            }
            Err(Error::Precondition(msg)) => {
                report.notes.push(format!("{family:?}: {msg}"));
                continue;
            }
            Err(e) => return Err(e),
        };
        let rep = if family.is_super() {
            verifier::verify_supersolution(&cert.params, spec, grid)?
        } else {
            verifier::verify_subsolution(&cert.params, spec, grid)?
        };
        report.assertions.push(Assertion {
            name: format!("{family:?}"),
            pass: rep.pass(),
            worst: rep.worst_margin,
            detail: format!("{} violations", rep.violations),
        });
        report.residual_reports.push(rep);
        report.params.get_or_insert(cert.params);
    }
    if report.residual_reports.is_empty() {
        report.status = Status::Infeasible;
        return Ok(report);
    }
    report.finish();
    Ok(report)
}

/// Feasibility of every system that applies to the problem.
pub fn run_feasibility_only(exp: &ExperimentSpec) -> Result<ExperimentReport> {
    let spec = &exp.problem;
    let family = match (spec.density.q == 2.0, &exp.overrides) {
        (_, Some(p)) => p.family,
        (true, None) => Family::SuperQ2,
        (false, None) => Family::SuperQgt2,
    };
    let mut report = ExperimentReport::new(ExperimentKind::FeasibilityOnly);
    match certify(family, spec, &exp.overrides) {
        Ok(cert) => {
            report.certified = true;
            report.params = Some(cert.params);
            report.feasibility = Some(cert.report);
            report.status = Status::Pass;
        }
        Err(Error::Infeasible(rep)) => {
            report.feasibility = Some(*rep);
            report.status = Status::Infeasible;
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}

/// Relative L-infinity error against the Barenblatt profile at `t = 1`,
/// starting from the exact profile at `t = 1/2` (unit density, no reaction).
pub fn barenblatt_error(n_dim: usize, m: f64, n_cells: usize) -> Result<f64> {
    let n = n_dim as f64;
    let (c0, t0, t1) = (1.0, 0.5, 1.0);
    let spec = ProblemSpec::new(n_dim, m, 2.0, DensityModel::exact_power(2.0, 1.0, 1.0)?)?;
    let r_max = 1.5 * solver::barenblatt_front(n, m, c0, t1);
    let grid = RadialGrid::new(r_max, n_cells)?;
    let mut cfg = SolverConfig::new(grid, t1 - t0);
    cfg.n_snapshots = 1;
    let u0 = RadialField::from_fn(grid, |r| solver::barenblatt(n, m, c0, r, t0));
    let traj = Solver::porous_medium(&spec, &cfg)?.solve(&u0)?;
    let last = traj.last();
    let h = grid.h();
    let peak = solver::barenblatt(n, m, c0, 0.0, t1);
    let err = last
        .u
        .iter()
        .enumerate()
        .map(|(i, &u)| (u - solver::barenblatt(n, m, c0, i as f64 * h, t1)).abs())
        .fold(0.0, f64::max);
    Ok(err / peak)
}

/// Detected blow-up time of the spatially constant datum `u0` on a ball so
/// large that diffusion never reaches the centre, with the exact
/// `u0^(1-p)/(p-1)`.
pub fn ode_blowup_time(p: f64, u0: f64) -> Result<(f64, f64)> {
    let spec = ProblemSpec::new(3, 2.0, p, DensityModel::exact_power(2.0, 1.0, 1.0)?)?;
    let grid = RadialGrid::new(1e4, 200)?;
    let exact = u0.powf(1.0 - p) / (p - 1.0);
    let mut cfg = SolverConfig::new(grid, 2.0 * exact);
    cfg.dt_min = 1e-20;
    let traj = Solver::new(&spec, &cfg)?.solve(&RadialField::from_fn(grid, |_| u0))?;
    match traj.outcome {
        Outcome::BlowUp { t_detect } => Ok((t_detect, exact)),
        other => Err(Error::Precondition(format!("constant datum did not blow up: {other:?}"))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverValidation {
    pub barenblatt_error: f64,
    pub barenblatt_error_coarse: f64,
    pub halving_ratio: f64,
    pub ode_t_detect: f64,
    pub ode_t_exact: f64,
}

/// Barenblatt accuracy on 2000 cells, the ratio against 1000 cells, and the
/// ODE blow-up time.
pub fn validate_solver() -> Result<SolverValidation> {
    let (fine, coarse) = rayon::join(|| barenblatt_error(3, 2.0, 2000), || barenblatt_error(3, 2.0, 1000));
    let (fine, coarse) = (fine?, coarse?);
    let (t_detect, exact) = ode_blowup_time(3.0, 2.0)?;
    Ok(SolverValidation {
        barenblatt_error: fine,
        barenblatt_error_coarse: coarse,
        halving_ratio: coarse / fine,
        ode_t_detect: t_detect,
        ode_t_exact: exact,
    })
}

pub fn run_solver_validation() -> Result<ExperimentReport> {
    let v = validate_solver()?;
    let mut report = ExperimentReport::new(ExperimentKind::SolverValidation);
    report.certified = true;
    report.assertions.push(Assertion {
        name: "barenblatt_error".into(),
        pass: v.barenblatt_error <= 0.02,
        worst: 0.02 - v.barenblatt_error,
        detail: format!("relative L-inf error {:.4e} on 2000 cells", v.barenblatt_error),
    });
    report.assertions.push(Assertion {
        name: "halving_ratio".into(),
        pass: v.halving_ratio >= 1.7,
        worst: v.halving_ratio - 1.7,
        detail: format!("error ratio {:.3} between 1000 and 2000 cells", v.halving_ratio),
    });
    let rel = (v.ode_t_detect - v.ode_t_exact).abs() / v.ode_t_exact;
    report.assertions.push(Assertion {
        name: "ode_blowup".into(),
        pass: rel <= 0.02,
        worst: 0.02 - rel,
        detail: format!("detected {:.6} vs exact {:.6}", v.ode_t_detect, v.ode_t_exact),
    });
    report.finish();
    Ok(report)
}

/// Dispatch on `exp.kind` and write outputs when `output_dir` is set.
pub fn run(exp: &ExperimentSpec) -> Result<ExperimentReport> {
    let report = match exp.kind {
        ExperimentKind::GlobalExistenceQ2 => run_global_existence_q2(exp)?,
        ExperimentKind::BlowupQ2 => run_blowup_q2(exp)?,
        ExperimentKind::GlobalExistenceQgt2 => run_global_existence_qgt2(exp)?,
        ExperimentKind::VerifyBarrier => run_verify_barrier(exp, &GridSpec::default())?,
        ExperimentKind::FeasibilityOnly => run_feasibility_only(exp)?,
        ExperimentKind::SolverValidation => run_solver_validation()?,
    };
    if let Some(dir) = &exp.output_dir {
        report.write_to(dir)?;
    }
    Ok(report)
}

/// One cell of a regime sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub n_dim: usize,
    pub m: f64,
    pub p: f64,
    pub q: f64,
    pub r0: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub t_end: Option<f64>,
    pub n_cells: Option<usize>,
}

/// Result row; the blow-up columns are empty for `q > 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_dim: usize,
    pub m: f64,
    pub p: f64,
    pub q: f64,
    pub r0: f64,
    pub regime: String,
    pub global_feasible: bool,
    pub global_status: Option<Status>,
    pub global_outcome: Option<String>,
    pub global_t_end: Option<f64>,
    pub global_worst_margin: Option<f64>,
    pub blowup_feasible: Option<bool>,
    pub blowup_status: Option<Status>,
    pub blowup_outcome: Option<String>,
    pub blowup_t_detect: Option<f64>,
    pub blowup_worst_margin: Option<f64>,
    pub error: Option<String>,
}

pub const SWEEP_HEADER: &[&str] = &[
    "n_dim",
    "m",
    "p",
    "q",
    "r0",
    "regime",
    "global_feasible",
    "global_status",
    "global_outcome",
    "global_t_end",
    "global_worst_margin",
    "blowup_feasible",
    "blowup_status",
    "blowup_outcome",
    "blowup_t_detect",
    "blowup_worst_margin",
    "error",
];

fn outcome_label(o: Option<Outcome>) -> Option<String> {
    o.map(|o| match o {
        Outcome::ReachedTEnd => "reached_t_end".to_string(),
        Outcome::BlowUp { .. } => "blow_up".to_string(),
        Outcome::StepCollapse { .. } => "step_collapse".to_string(),
    })
}

fn sweep_cell(cell: SweepCell, settings: &SweepSettings) -> SweepRow {
    let mut row = SweepRow {
        n_dim: cell.n_dim,
        m: cell.m,
        p: cell.p,
        q: cell.q,
        r0: cell.r0,
        regime: String::new(),
        global_feasible: false,
        global_status: None,
        global_outcome: None,
        global_t_end: None,
        global_worst_margin: None,
        blowup_feasible: None,
        blowup_status: None,
        blowup_outcome: None,
        blowup_t_detect: None,
        blowup_worst_margin: None,
        error: None,
    };
    if cell.q == 2.0 && cell.p <= cell.m {
        row.regime = "q2_not_covered".to_string();
        return row;
    }
    let mut errors = Vec::new();
    let solver = SolverSettings {
        t_end: settings.t_end,
        n_cells: settings.n_cells,
        ..SolverSettings::default()
    };
    let global = DensityModel::exact_power(cell.q, 1.0, cell.r0)
        .and_then(|d| ProblemSpec::new(cell.n_dim, cell.m, cell.p, d))
        .and_then(|spec| {
            let kind = if cell.q == 2.0 {
                ExperimentKind::GlobalExistenceQ2
            } else {
                ExperimentKind::GlobalExistenceQgt2
            };
            let mut s = solver.clone();
            if cell.q != 2.0 {
                s.t_end = None;
                s.n_cells = None;
            }
            let exp = ExperimentSpec { solver: s, ..ExperimentSpec::new(kind, spec) };
            run(&exp)
        });
    row.regime = if cell.q == 2.0 { "q2" } else { "qgt2" }.to_string();
    match global {
        Ok(rep) => {
            row.global_feasible = rep.status != Status::Infeasible;
            row.global_status = Some(rep.status);
            row.global_outcome = outcome_label(rep.outcome);
            row.global_t_end = rep.t_end;
            row.global_worst_margin = rep.worst_ordering_margin;
        }
        Err(e) => errors.push(format!("global: {e}")),
    }
    if cell.q == 2.0 {
        let blowup = DensityModel::exterior_power(2.0, 1.0)
            .and_then(|d| ProblemSpec::new(cell.n_dim, cell.m, cell.p, d))
            .and_then(|spec| {
                let mut s = solver.clone();
                s.t_end = None;
                let exp = ExperimentSpec { solver: s, ..ExperimentSpec::new(ExperimentKind::BlowupQ2, spec) };
                run(&exp)
            });
        match blowup {
            Ok(rep) => {
                row.blowup_feasible = Some(rep.status != Status::Infeasible);
                row.blowup_status = Some(rep.status);
                row.blowup_outcome = outcome_label(rep.outcome);
                row.blowup_t_detect = rep.t_detect;
                row.blowup_worst_margin = rep.worst_ordering_margin;
            }
            Err(e) => errors.push(format!("blowup: {e}")),
        }
    }
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    row
}

/// Run every cell in parallel; rows come back in a fixed order.
pub fn sweep(cells: &[SweepCell], settings: &SweepSettings) -> Vec<SweepRow> {
    let mut rows: Vec<SweepRow> = cells.par_iter().map(|&c| sweep_cell(c, settings)).collect();
    rows.sort_by(|a, b| {
        (a.n_dim, a.m, a.p, a.q, a.r0)
            .partial_cmp(&(b.n_dim, b.m, b.p, b.q, b.r0))
            .unwrap_or(Ordering::Equal)
    });
    rows
}

/// Cartesian product of the value lists.
pub fn sweep_grid(n_dims: &[usize], ms: &[f64], ps: &[f64], qs: &[f64], r0s: &[f64]) -> Vec<SweepCell> {
    let mut cells = Vec::new();
    for &n_dim in n_dims {
        for &m in ms {
            for &p in ps {
                for &q in qs {
                    for &r0 in r0s {
                        cells.push(SweepCell { n_dim, m, p, q, r0 });
                    }
                }
            }
        }
    }
    cells
}

/// Cells and settings from the `sweep.*` keys; unset lists default to a
/// 3 x 3 grid over p in {2.5, 3, 3.5} and q in {2, 3, 4} at N = 4, m = 2,
/// r0 = e^2.
pub fn sweep_from_config(cfg: &Config) -> Result<(Vec<SweepCell>, SweepSettings)> {
    let n_dims = cfg.get_list("sweep.n_dim")?.unwrap_or_else(|| vec![4]);
    let ms = cfg.get_list("sweep.m")?.unwrap_or_else(|| vec![2.0]);
    let ps = cfg.get_list("sweep.p")?.unwrap_or_else(|| vec![2.5, 3.0, 3.5]);
    let qs = cfg.get_list("sweep.q")?.unwrap_or_else(|| vec![2.0, 3.0, 4.0]);
    let r0s = cfg.get_list("sweep.r0")?.unwrap_or_else(|| vec![E * E]);
    let settings = SweepSettings {
        t_end: cfg.get("sweep.t_end")?,
        n_cells: cfg.get("sweep.n_cells")?,
    };
    Ok((sweep_grid(&n_dims, &ms, &ps, &qs, &r0s), settings))
}

pub fn write_sweep<W: std::io::Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    output::write_csv(out, SWEEP_HEADER, rows.iter())
}

/// Sweep the residual verifier over several density realizations; used by
/// the robustness checks.
pub fn verify_over_realizations(
    params: &BarrierParams,
    spec: &ProblemSpec,
    realizations: &[DensityModel],
    grid: &GridSpec,
) -> Result<Vec<ResidualReport>> {
    realizations
        .par_iter()
        .map(|d| {
            let s = ProblemSpec { density: d.clone(), ..spec.clone() };
            verifier::scan(params, &s, grid)
        })
        .collect()
}

/// Classify a region count summary for reports.
pub fn region_label(region: Region) -> &'static str {
    match region {
        Region::PositiveCore => "positive_core",
        Region::Cutoff => "cutoff",
        Region::InnerBall => "inner_ball",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked_q2() -> ProblemSpec {
        ProblemSpec::new(4, 2.0, 3.0, DensityModel::exact_power(2.0, 1.0, E * E).unwrap()).unwrap()
    }

    #[test]
    fn exit_codes() {
        let mut r = ExperimentReport::new(ExperimentKind::FeasibilityOnly);
        for (s, c) in [
            (Status::Pass, 0),
            (Status::Exploratory, 0),
            (Status::AssertionFailure, 2),
            (Status::Infeasible, 3),
            (Status::Collapse, 4),
        ] {
            r.status = s;
            assert_eq!(r.exit_code(), c);
        }
    }

    #[test]
    fn infeasible_cell_is_reported() {
        let spec = ProblemSpec::new(4, 2.0, 3.0, DensityModel::exact_power(2.0, 1.0, E).unwrap()).unwrap();
        let rep = run(&ExperimentSpec::new(ExperimentKind::GlobalExistenceQ2, spec)).unwrap();
        assert_eq!(rep.status, Status::Infeasible);
        assert_eq!(rep.exit_code(), 3);
    }

    #[test]
    fn p_not_above_m_is_rejected() {
        let spec = ProblemSpec::new(4, 2.0, 2.0, DensityModel::exterior_power(2.0, 1.0).unwrap()).unwrap();
        assert!(matches!(
            run(&ExperimentSpec::new(ExperimentKind::BlowupQ2, spec)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn feasibility_only_worked_instance() {
        let rep = run(&ExperimentSpec::new(ExperimentKind::FeasibilityOnly, worked_q2())).unwrap();
        assert_eq!(rep.status, Status::Pass);
        assert!(rep.params.unwrap().certified);
    }

    #[test]
    fn empty_sweep_has_header_only() {
        let mut buf = Vec::new();
        write_sweep(&mut buf, &sweep(&[], &SweepSettings::default())).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), SWEEP_HEADER.join(",") + "\n");
    }
}
