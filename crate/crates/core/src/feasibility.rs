//! Parameter-inequality systems behind each barrier family, with
//! deterministic solvers that emit checkable certificates.
//!
//! Every `solve_*` returns parameters together with the report produced by
//! the matching `check_*`, so a certificate is only ever issued for a
//! parameter set that has been re-evaluated from scratch.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::barriers::{BarrierParams, Family};
use crate::error::{Error, Result};
use crate::model::ProblemSpec;

/// Relative rounding allowance for non-strict inequalities that are
/// saturated on purpose (e.g. `0.5 >= 0.5` evaluated through `ln(e^2)`).
const ROUNDING: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    ShiftCondition,
    SuperQ2,
    SubQ2,
    SuperQgt2PLtM,
    SuperQgt2PGtM,
    SuperQgt2PEqM,
}

/// One evaluated inequality `lhs >= rhs` (or `lhs > rhs` when strict).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub strict: bool,
    pub pass: bool,
}

impl Check {
    pub fn ge(id: &str, lhs: f64, rhs: f64) -> Self {
        let margin = lhs - rhs;
        let slack = ROUNDING * (lhs.abs() + rhs.abs());
        Self {
            id: id.to_string(),
            lhs,
            rhs,
            margin,
            strict: false,
            pass: margin.is_finite() && margin >= -slack,
        }
    }

    pub fn gt(id: &str, lhs: f64, rhs: f64) -> Self {
        let margin = lhs - rhs;
        Self {
            id: id.to_string(),
            lhs,
            rhs,
            margin,
            strict: true,
            pass: margin.is_finite() && margin > 0.0,
        }
    }

    /// `lhs <= rhs`, stored with the margin `rhs - lhs`.
    pub fn le(id: &str, lhs: f64, rhs: f64) -> Self {
        let mut c = Self::ge(id, rhs, lhs);
        c.lhs = lhs;
        c.rhs = rhs;
        c
    }

    pub fn lt(id: &str, lhs: f64, rhs: f64) -> Self {
        let mut c = Self::gt(id, rhs, lhs);
        c.lhs = lhs;
        c.rhs = rhs;
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub system: System,
    pub params: Option<BarrierParams>,
    pub checks: Vec<Check>,
    pub feasible: bool,
    /// Admissible `omega` interval `[omega_0, omega_1]` for the `q = 2`
    /// systems, as produced by the solver.
    pub omega_bounds: Option<(f64, f64)>,
    pub notes: Vec<String>,
}

impl FeasibilityReport {
    fn new(system: System, params: Option<BarrierParams>, checks: Vec<Check>) -> Self {
        let feasible = checks.iter().all(|c| c.pass);
        Self { system, params, checks, feasible, omega_bounds: None, notes: Vec::new() }
    }

    pub fn check(&self, id: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn worst_margin(&self) -> f64 {
        self.checks.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min)
    }

    pub fn into_result(self) -> Result<Self> {
        if self.feasible {
            Ok(self)
        } else {
            Err(Error::Infeasible(Box::new(self)))
        }
    }
}

/// Parameters that passed their own check, with the evidence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certified {
    pub params: BarrierParams,
    pub report: FeasibilityReport,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KConstant {
    pub m: f64,
    pub p: f64,
    pub value: f64,
}

/// `K = s^((m-1)/(p-1)) - s^((p+m-2)/(p-1))` with `s = (m-1)/(p+m-2)`.
pub fn compute_k(m: f64, p: f64) -> Result<KConstant> {
    if !(m > 1.0 && p > 1.0) {
        return Err(Error::Domain(format!("K needs m > 1 and p > 1, got m = {m}, p = {p}")));
    }
    let s = (m - 1.0) / (p + m - 2.0);
    // s^e1 - s^e2 = s^e1 (1 - s) since e2 - e1 = 1
    let value = s.powf((m - 1.0) / (p - 1.0)) * (1.0 - s);
    Ok(KConstant { m, p, value })
}

fn require_q(spec: &ProblemSpec, q2: bool) -> Result<()> {
    let q = spec.density.q;
    if q2 && q != 2.0 {
        return Err(Error::Precondition(format!("system needs q = 2, got q = {q}")));
    }
    if !q2 && q <= 2.0 {
        return Err(Error::Domain(format!("system needs q > 2, got q = {q}")));
    }
    Ok(())
}

fn require_p_gt_m(spec: &ProblemSpec) -> Result<()> {
    if spec.p <= spec.m {
        return Err(Error::Precondition(format!(
            "requires p > m, got p = {}, m = {}",
            spec.p, spec.m
        )));
    }
    Ok(())
}

/// `r0 > e` and `k2/k1 < (N-2)(m-1)(p-m)/(p-1) log r0`.
pub fn check_shift_condition(spec: &ProblemSpec) -> FeasibilityReport {
    let (k1, k2, r0) = spec.density.shifted_envelope();
    let (n, m, p) = (spec.n(), spec.m, spec.p);
    let bound = (n - 2.0) * (m - 1.0) * (p - m) / (p - 1.0) * r0.ln();
    let mut report = FeasibilityReport::new(
        System::ShiftCondition,
        None,
        vec![Check::gt("shift_above_e", r0, E), Check::lt("envelope_ratio", k2 / k1, bound)],
    );
    if spec.density.q != 2.0 {
        report.notes.push(format!("the shift condition is stated for q = 2, got q = {}", spec.density.q));
        report.feasible = false;
    }
    report
}

fn super_q2_bracket(spec: &ProblemSpec) -> f64 {
    let (k1, k2, r0) = spec.density.shifted_envelope();
    k1 * (spec.n() - 2.0) - k2 / ((spec.m - 1.0) * r0.ln())
}

/// Cutoff-drift and core-balance inequalities of the `q = 2`
/// supersolution, together with the shift conditions.
pub fn check_super_q2(params: &BarrierParams, spec: &ProblemSpec) -> FeasibilityReport {
    let (_, k2, r0) = spec.density.shifted_envelope();
    let (m, p) = (spec.m, spec.p);
    let omega = params.omega;
    let mut checks = check_shift_condition(spec).checks;
    checks.push(Check::ge(
        "cutoff_drift",
        (p - m) / (p - 1.0),
        omega * m / (m - 1.0) * k2 / r0.ln(),
    ));
    checks.push(Check::ge(
        "core_balance",
        omega * m / (m - 1.0) * super_q2_bracket(spec),
        params.c.powf(p - 1.0) + 1.0 / (p - 1.0),
    ));
    checks.push(Check::gt("C", params.c, 0.0));
    checks.push(Check::gt("T", params.t_horizon, 0.0));
    FeasibilityReport::new(System::SuperQ2, Some(params.clone()), checks)
}

/// Deterministic solve of the `q = 2` supersolution system.
///
/// `omega_0` makes the core-balance left side equal `1/(p-1)`; `omega_1` is
/// the smaller of the saturation point of the cutoff-drift bound and the
/// point where the core-balance left side reaches `2/(p-1)`. The solver takes `omega` at 90% of the way from
/// `omega_0` to `omega_1` and then `C = 0.9 min(1, (LHS36 - 1/(p-1))^(1/(p-1)))`.
pub fn solve_super_q2(spec: &ProblemSpec) -> Result<Certified> {
    require_q(spec, true)?;
    let (m, p) = (spec.m, spec.p);
    let shift = check_shift_condition(spec);
    if p <= m || !shift.feasible {
        let mut report = FeasibilityReport::new(System::SuperQ2, None, shift.checks);
        report.feasible = false;
        if p <= m {
            report.notes.push("the cutoff drift bound has left side (p-m)/(p-1) <= 0".into());
        }
        return Err(Error::Infeasible(Box::new(report)));
    }
    let (_, k2, r0) = spec.density.shifted_envelope();
    let bracket = super_q2_bracket(spec);
    let beta = (p - m) / (p - 1.0);
    let omega_0 = (m - 1.0) / ((p - 1.0) * m * bracket);
    let omega_35 = beta * (m - 1.0) * r0.ln() / (m * k2);
    let omega_1 = omega_35.min(2.0 * omega_0);
    let omega = omega_0 + 0.9 * (omega_1 - omega_0);
    let lhs36 = omega * m / (m - 1.0) * bracket;
    let c = 0.9 * (lhs36 - 1.0 / (p - 1.0)).powf(1.0 / (p - 1.0)).min(1.0);
    let a = c.powf(m - 1.0) / omega;

    let mut params = BarrierParams::super_q2(c, a, 1.0, m, p, r0);
    let mut report = check_super_q2(&params, spec);
    report.omega_bounds = Some((omega_0, omega_1));
    let report = report.into_result()?;
    params.certified = true;
    report_with_params(params, report)
}

fn report_with_params(params: BarrierParams, mut report: FeasibilityReport) -> Result<Certified> {
    report.params = Some(params.clone());
    Ok(Certified { params, report })
}

/// Margins of the two endpoint conditions `phi(0) >= 0`, `phi(1) >= 0` of the
/// `q = 2` supersolution at time `t`, each divided by its common power of
/// `T + t` so that they are directly comparable with the static system.
pub fn check_endpoint_conditions_super_q2(
    params: &BarrierParams,
    spec: &ProblemSpec,
    t: f64,
) -> (f64, f64) {
    let (k1, k2, r0) = spec.density.shifted_envelope();
    let (n, m, p) = (spec.n(), spec.m, spec.p);
    let tt = params.t_horizon + t;
    let zeta = tt.powf(-params.alpha);
    let dzeta = -params.alpha * tt.powf(-params.alpha - 1.0);
    let eta = tt.powf(-params.beta);
    let deta = -params.beta * tt.powf(-params.beta - 1.0);
    let omega = params.c.powf(m - 1.0) / params.a;

    let cond1 = -deta / (eta * eta) - omega * zeta.powf(m - 1.0) * m / (m - 1.0) * k2 / r0.ln();
    let cond2 = dzeta
        + omega * zeta.powf(m) * m / (m - 1.0) * eta * ((n - 2.0) * k1 - k2 / ((m - 1.0) * r0.ln()))
        - params.c.powf(p - 1.0) * zeta.powf(p);
    let scale1 = tt.powf(params.beta - 1.0);
    let scale2 = tt.powf(-p / (p - 1.0));
    (cond1 / scale1, cond2 / scale2)
}

/// Default `rho2`: the supremum of `1/rho` on the closed ball `B_e`.
pub fn default_rho2(spec: &ProblemSpec) -> f64 {
    spec.density.rho2(E)
}

/// Exterior-ball `k2` used by the `q = 2` subsolution.
pub fn sub_k2(spec: &ProblemSpec) -> f64 {
    spec.density.exterior_envelope(E).1
}

/// The two brackets of the subsolution system: outer (`k2`) and inner (`rho2`).
fn sub_brackets(omega: f64, rho2: f64, spec: &ProblemSpec) -> (f64, f64) {
    let (n, m) = (spec.n(), spec.m);
    (
        1.0 + m * sub_k2(spec) * omega * (n - 2.0 + 1.0 / (m - 1.0)),
        1.0 + m * rho2 * omega * n / (E * E),
    )
}

/// Ratio and peak inequalities of the `q = 2` subsolution.
pub fn check_sub_q2(params: &BarrierParams, spec: &ProblemSpec) -> Result<FeasibilityReport> {
    let (m, p) = (spec.m, spec.p);
    let k = compute_k(m, p)?.value;
    let e1 = (p + m - 2.0) / (p - 1.0);
    let (outer, inner) = sub_brackets(params.omega, params.rho2, spec);
    let top = outer.max(inner);
    let checks = vec![
        Check::gt("p_above_m", p, m),
        Check::le("ratio_bound", top, (p + m - 2.0) * params.c.powf(p - 1.0)),
        Check::le(
            "peak_bound",
            k / (m - 1.0).powf(e1) * top.powf(e1),
            (p - m) / ((m - 1.0) * (p - 1.0)) * params.c.powf(m - 1.0),
        ),
        Check::gt("rho2", params.rho2, 0.0),
        Check::gt("T", params.t_horizon, 0.0),
    ];
    Ok(FeasibilityReport::new(System::SubQ2, Some(params.clone()), checks))
}

/// Deterministic solve of the subsolution system: `omega = 1`,
/// `C = 1.1 max(C_ratio, C_peak)` where `C_ratio`, `C_peak` saturate
/// the two inequalities; `T = 1`.
pub fn solve_sub_q2(spec: &ProblemSpec, rho2: f64) -> Result<Certified> {
    require_q(spec, true)?;
    require_p_gt_m(spec)?;
    if !(rho2 > 0.0 && rho2.is_finite()) {
        return Err(Error::Precondition(format!("rho2 = {rho2} must be positive")));
    }
    let (m, p) = (spec.m, spec.p);
    let k = compute_k(m, p)?.value;
    let e1 = (p + m - 2.0) / (p - 1.0);
    let omega = 1.0;
    let (outer, inner) = sub_brackets(omega, rho2, spec);
    let top = outer.max(inner);
    let c_ratio = (top / (p + m - 2.0)).powf(1.0 / (p - 1.0));
    let delta = (p - m) / ((m - 1.0) * (p - 1.0));
    let c_peak = (k / (m - 1.0).powf(e1) * top.powf(e1) / delta).powf(1.0 / (m - 1.0));
    let c = 1.1 * c_ratio.max(c_peak);
    let a = c.powf(m - 1.0) / omega;

    let mut params = BarrierParams::sub_q2(c, a, 1.0, m, p, rho2);
    let mut report = check_sub_q2(&params, spec)?;
    report.omega_bounds = Some((omega, omega));
    report.notes.push(format!("C_ratio = {c_ratio}, C_peak = {c_peak}"));
    let report = report.into_result()?;
    params.certified = true;
    report_with_params(params, report)
}

/// Margins and interior maxima of the `q = 2` subsolution system at time `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubMaxConditions {
    pub sigma: f64,
    pub delta: f64,
    pub gamma: f64,
    pub sigma0: f64,
    /// `delta gamma^((m-1)/(p-1)) - K sigma^((p+m-2)/(p-1))`, normalized.
    pub outer_peak: f64,
    /// `(p+m-2) gamma - (m-1) sigma`, normalized.
    pub outer_argmax: f64,
    pub inner_peak: f64,
    pub inner_argmax: f64,
    /// Maximizer of `phi` on the outer region.
    pub f0: f64,
    /// Maximizer of `psi` on the inner ball.
    pub g0: f64,
}

impl SubMaxConditions {
    pub fn margins(&self) -> [f64; 4] {
        [self.outer_peak, self.outer_argmax, self.inner_peak, self.inner_argmax]
    }

    pub fn all_nonnegative(&self) -> bool {
        self.margins().iter().all(|&x| x >= -ROUNDING)
    }

    /// `phi(F) = sigma F - delta - gamma F^((p+m-2)/(m-1))` (unnormalized).
    pub fn phi(&self, f: f64, m: f64, p: f64) -> f64 {
        self.sigma * f - self.delta - self.gamma * f.powf((p + m - 2.0) / (m - 1.0))
    }

    pub fn psi(&self, g: f64, m: f64, p: f64) -> f64 {
        self.sigma0 * g - self.delta - self.gamma * g.powf((p + m - 2.0) / (m - 1.0))
    }
}

/// Coefficients `sigma, delta, gamma, sigma0` at time `t` and the four
/// interior-maximum conditions. Margins are divided by the matching power of
/// `(T - t)^(-p/(p-1))`, which makes them independent of `t`.
pub fn check_max_conditions_sub_q2(
    params: &BarrierParams,
    spec: &ProblemSpec,
    t: f64,
) -> Result<SubMaxConditions> {
    if t >= params.t_horizon {
        return Err(Error::TimeAtOrBeyondHorizon { t, horizon: params.t_horizon });
    }
    let (n, m, p) = (spec.n(), spec.m, spec.p);
    let k = compute_k(m, p)?.value;
    let k2 = sub_k2(spec);
    let tt = params.t_horizon - t;
    let zeta = tt.powf(-params.alpha);
    let dzeta = params.alpha * tt.powf(-params.alpha - 1.0);
    let eta = tt.powf(-params.beta);
    let dlog_eta = params.beta / tt;
    let omega = params.c.powf(m - 1.0) / params.a;

    let base = dzeta + zeta / (m - 1.0) * dlog_eta;
    let spread = omega * zeta.powf(m) * m / (m - 1.0) * eta;
    let sigma = base + spread * k2 * (n - 2.0 + 1.0 / (m - 1.0));
    let sigma0 = base + spread * params.rho2 * n / (E * E);
    let delta = zeta / (m - 1.0) * dlog_eta;
    let gamma = params.c.powf(p - 1.0) * zeta.powf(p);

    let e1 = (p + m - 2.0) / (p - 1.0);
    let e2 = (m - 1.0) / (p - 1.0);
    let tau = tt.powf(-p / (p - 1.0));
    let max_cond = |s: f64| (delta * gamma.powf(e2) - k * s.powf(e1)) / tau.powf(e1);
    let ratio_cond = |s: f64| ((p + m - 2.0) * gamma - (m - 1.0) * s) / tau;
    let argmax = |s: f64| ((m - 1.0) / (p + m - 2.0) * s / gamma).powf(e2);
    Ok(SubMaxConditions {
        sigma,
        delta,
        gamma,
        sigma0,
        outer_peak: if sigma > 0.0 { max_cond(sigma) } else { f64::NEG_INFINITY },
        outer_argmax: ratio_cond(sigma),
        inner_peak: if sigma0 > 0.0 { max_cond(sigma0) } else { f64::NEG_INFINITY },
        inner_argmax: ratio_cond(sigma0),
        f0: argmax(sigma),
        g0: argmax(sigma0),
    })
}

/// `b = min(N-2, q-2)/2` and `c = r0^(-b p/m)`.
pub fn choose_bbar_cbar(spec: &ProblemSpec) -> Result<(f64, f64)> {
    require_q(spec, false)?;
    let (_, _, r0) = spec.density.shifted_envelope();
    let b = (spec.n() - 2.0).min(spec.density.q - 2.0) / 2.0;
    Ok((b, r0.powf(-b * spec.p / spec.m)))
}

fn qgt2_system(spec: &ProblemSpec) -> System {
    if spec.p < spec.m {
        System::SuperQgt2PLtM
    } else if spec.p > spec.m {
        System::SuperQgt2PGtM
    } else {
        System::SuperQgt2PEqM
    }
}

/// `b k1 (N - 2 - b)`.
fn qgt2_kappa(spec: &ProblemSpec, b: f64) -> f64 {
    let (k1, _, _) = spec.density.shifted_envelope();
    b * k1 * (spec.n() - 2.0 - b)
}

/// Exponent and amplitude conditions, or the `p = m` shift condition, for the `q > 2`
/// supersolution.
pub fn check_super_qgt2(params: &BarrierParams, spec: &ProblemSpec) -> FeasibilityReport {
    let (m, p) = (spec.m, spec.p);
    let (_, _, r0) = spec.density.shifted_envelope();
    let b = params.b_bar;
    let kappa = qgt2_kappa(spec, b);
    let c = params.c;
    let system = qgt2_system(spec);
    let mut checks = vec![
        Check::gt("bbar_positive", b, 0.0),
        Check::lt("bbar_below_limit", b, (spec.n() - 2.0).min(spec.density.q - 2.0)),
        Check::ge("cbar_dominates", params.c_bar, r0.powf(-b * p / m)),
        Check::gt("C", c, 0.0),
    ];
    match system {
        System::SuperQgt2PLtM => {
            checks.push(Check::gt("alpha_positive", params.alpha, 0.0));
            checks.push(Check::gt("horizon_above_one", params.t_horizon, 1.0));
            checks.push(Check::ge("diffusion_beats_reaction", kappa * c.powf(m), params.c_bar * c.powf(p)));
        }
        System::SuperQgt2PGtM => {
            checks.push(Check::ge("alpha_zero.upper", 0.0, params.alpha));
            checks.push(Check::ge("alpha_zero.lower", params.alpha, 0.0));
            checks.push(Check::gt("T", params.t_horizon, 0.0));
            checks.push(Check::ge("diffusion_beats_reaction", kappa * c.powf(m), params.c_bar * c.powf(p)));
        }
        _ => {
            checks.push(Check::ge("alpha_zero.upper", 0.0, params.alpha));
            checks.push(Check::ge("alpha_zero.lower", params.alpha, 0.0));
            checks.push(Check::gt("T", params.t_horizon, 0.0));
            checks.push(Check::le("shift_large_enough", r0.powf(-b * p / m), kappa));
            checks.push(Check::ge("diffusion_beats_reaction", kappa * c.powf(m), params.c_bar * c.powf(p)));
        }
    }
    FeasibilityReport::new(system, Some(params.clone()), checks)
}

/// Deterministic solve for the `q > 2` supersolution.
///
/// * `p < m`: `alpha = 1`, `T = 2`, `C = 1.1 (c/kappa)^(1/(m-p))`.
/// * `p > m`: `alpha = 0`, `T = 1`, `C = 0.9 (kappa/c)^(1/(p-m))`.
/// * `p = m`: `alpha = 0`, `T = 1`, `C = 1`, feasible iff
///   `r0^(-b p/m) <= kappa`.
///
/// Here `kappa = b k1 (N - 2 - b)`.
pub fn solve_super_qgt2(spec: &ProblemSpec, b_bar: f64, c_bar: f64) -> Result<Certified> {
    require_q(spec, false)?;
    let (m, p) = (spec.m, spec.p);
    let (_, _, r0) = spec.density.shifted_envelope();
    let kappa = qgt2_kappa(spec, b_bar);
    let (alpha, t_horizon, c) = match qgt2_system(spec) {
        System::SuperQgt2PLtM => (1.0, 2.0, 1.1 * (c_bar / kappa).powf(1.0 / (m - p))),
        System::SuperQgt2PGtM => (0.0, 1.0, 0.9 * (kappa / c_bar).powf(1.0 / (p - m))),
        _ => (0.0, 1.0, 1.0),
    };
    let mut params = BarrierParams::super_qgt2(c, alpha, t_horizon, b_bar, c_bar, r0);
    let mut report = check_super_qgt2(&params, spec);
    if report.system == System::SuperQgt2PEqM && !report.feasible {
        report.notes.push(format!(
            "p = m needs r0 >= {}",
            kappa.powf(-m / (b_bar * p))
        ));
    }
    let report = report.into_result()?;
    params.certified = true;
    report_with_params(params, report)
}

/// Solve with the default `(b, c)` from [`choose_bbar_cbar`].
pub fn solve_super_qgt2_default(spec: &ProblemSpec) -> Result<Certified> {
    let (b, c) = choose_bbar_cbar(spec)?;
    solve_super_qgt2(spec, b, c)
}

/// Re-run the check matching `params.family`.
pub fn check(params: &BarrierParams, spec: &ProblemSpec) -> Result<FeasibilityReport> {
    match params.family {
        Family::SuperQ2 => Ok(check_super_q2(params, spec)),
        Family::SubQ2 => check_sub_q2(params, spec),
        Family::SuperQgt2 => Ok(check_super_qgt2(params, spec)),
    }
}

/// Solve the system for `family` with default choices.
pub fn solve(family: Family, spec: &ProblemSpec) -> Result<Certified> {
    match family {
        Family::SuperQ2 => solve_super_q2(spec),
        Family::SubQ2 => solve_sub_q2(spec, default_rho2(spec)),
        Family::SuperQgt2 => solve_super_qgt2_default(spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DensityModel;
    use approx::assert_relative_eq;

    fn spec(n: usize, m: f64, p: f64, density: DensityModel) -> ProblemSpec {
        ProblemSpec::new(n, m, p, density).unwrap()
    }

    fn worked_q2() -> ProblemSpec {
        spec(4, 2.0, 3.0, DensityModel::exact_power(2.0, 1.0, E * E).unwrap())
    }

    #[test]
    fn k_constant_values() {
        assert_relative_eq!(compute_k(2.0, 3.0).unwrap().value, 0.384900, epsilon = 1e-6);
        let third: f64 = 1.0 / 3.0;
        assert_relative_eq!(
            compute_k(2.0, 3.0).unwrap().value,
            third.sqrt() - third.powf(1.5),
            max_relative = 1e-14
        );
        assert_relative_eq!(compute_k(2.0, 2.0).unwrap().value, 0.25, max_relative = 1e-14);
        // s^0 - s^1 with s -> 0: the limit is 1
        assert!((compute_k(1.0 + 1e-9, 3.0).unwrap().value - 1.0).abs() < 1e-6);
        assert!(compute_k(1.0, 3.0).is_err());
        assert!(compute_k(2.0, 1.0).is_err());
    }

    #[test]
    fn shift_condition_examples() {
        let r = check_shift_condition(&worked_q2());
        assert!(r.feasible);
        assert_relative_eq!(r.check("envelope_ratio").unwrap().rhs, 2.0, max_relative = 1e-12);

        let at_e = spec(4, 2.0, 3.0, DensityModel::exact_power(2.0, 1.0, E).unwrap());
        assert!(!check_shift_condition(&at_e).feasible);
        let p_eq_m = spec(4, 2.0, 2.0, DensityModel::exact_power(2.0, 1.0, E * E).unwrap());
        assert!(!check_shift_condition(&p_eq_m).feasible);
    }

    #[test]
    fn worked_super_q2_margins() {
        let s = worked_q2();
        let params = BarrierParams::super_q2(0.5, 0.5, 1.0, 2.0, 3.0, E * E);
        assert_relative_eq!(params.omega, 1.0, max_relative = 1e-14);
        // omega = 1/2 needs a = 1 for C = 1/2
        let params = BarrierParams::super_q2(0.5, 1.0, 1.0, 2.0, 3.0, E * E);
        let rep = check_super_q2(&params, &s);
        assert!(rep.feasible, "{rep:#?}");
        assert!(rep.check("cutoff_drift").unwrap().margin.abs() < 1e-12);
        assert_relative_eq!(rep.check("core_balance").unwrap().margin, 0.75, max_relative = 1e-12);
        for t in [0.0, 10.0] {
            let (m1, m2) = check_endpoint_conditions_super_q2(&params, &s, t);
            assert!(m1.abs() < 1e-12);
            assert_relative_eq!(m2, 0.75, max_relative = 1e-10);
        }
        let doubled = BarrierParams::super_q2(0.5, 0.5, 1.0, 2.0, 3.0, E * E);
        assert!(check_endpoint_conditions_super_q2(&doubled, &s, 0.0).0 < 0.0);
    }

    #[test]
    fn solve_super_q2_round_trip() {
        let s = worked_q2();
        let cert = solve_super_q2(&s).unwrap();
        assert!(cert.params.certified);
        assert!(cert.report.feasible);
        let (w0, w1) = cert.report.omega_bounds.unwrap();
        assert!(w0 < cert.params.omega && cert.params.omega <= w1);
        let (m1, m2) = check_endpoint_conditions_super_q2(&cert.params, &s, 3.0);
        assert!(m1 >= 0.0 && m2 >= 0.0);
    }

    #[test]
    fn solve_super_q2_infeasible_cases() {
        let p_eq_m = spec(4, 2.0, 2.0, DensityModel::exact_power(2.0, 1.0, E * E).unwrap());
        assert!(matches!(solve_super_q2(&p_eq_m), Err(Error::Infeasible(_))));
        let wide = DensityModel::new(
            2.0,
            1.0,
            10.0,
            1.1f64.exp(),
            crate::model::DensityForm::Shifted,
            crate::model::DensityProfile::ExactPower(1.0),
        )
        .unwrap();
        let s = spec(4, 2.0, 3.0, wide);
        assert!(!check_shift_condition(&s).feasible);
        assert!(matches!(solve_super_q2(&s), Err(Error::Infeasible(_))));
    }

    #[test]
    fn worked_sub_q2() {
        let s = spec(4, 2.0, 3.0, DensityModel::exterior_power(2.0, 1.0).unwrap());
        let cert = solve_sub_q2(&s, 1.0).unwrap();
        let c = cert.params.c;
        assert_relative_eq!(c, 1.1 * 0.384900 * 7f64.powf(1.5) / 0.5, max_relative = 1e-5);
        assert_relative_eq!(c, 15.68, epsilon = 0.01);
        assert_relative_eq!(cert.params.a, c, max_relative = 1e-14);
        let ratio = cert.report.check("ratio_bound").unwrap();
        assert_relative_eq!(ratio.margin, 3.0 * c * c - 7.0, max_relative = 1e-12);

        let mc = check_max_conditions_sub_q2(&cert.params, &s, 0.0).unwrap();
        assert!(mc.all_nonnegative(), "{mc:?}");
        assert!(mc.f0 > 0.0 && mc.f0 <= 1.0);
        assert!(mc.g0 > 0.0 && mc.g0 <= 1.0);
        let h = 1e-6;
        let dphi = (mc.phi(mc.f0 + h, 2.0, 3.0) - mc.phi(mc.f0 - h, 2.0, 3.0)) / (2.0 * h);
        assert!(dphi.abs() / mc.sigma < 1e-8);

        let later = check_max_conditions_sub_q2(&cert.params, &s, 0.99).unwrap();
        for (x, y) in mc.margins().iter().zip(later.margins()) {
            assert_relative_eq!(*x, y, max_relative = 1e-9);
        }

        let halved = cert.params.with_amplitude(c / 2.0, 2.0);
        let rep = check_sub_q2(&halved, &s).unwrap();
        assert!(rep.check("peak_bound").unwrap().margin < 0.0);

        let p_lt_m = spec(4, 2.0, 1.5, DensityModel::exterior_power(2.0, 1.0).unwrap());
        assert!(matches!(solve_sub_q2(&p_lt_m, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn bbar_cbar_examples() {
        let s = spec(5, 2.0, 3.0, DensityModel::exact_power(4.0, 1.0, 2.0).unwrap());
        let (b, c) = choose_bbar_cbar(&s).unwrap();
        assert_relative_eq!(b, 1.0, max_relative = 1e-14);
        assert_relative_eq!(c, 0.353553, epsilon = 1e-6);
        let unit = spec(5, 1.7, 4.2, DensityModel::exact_power(3.0, 1.0, 1.0).unwrap());
        assert_eq!(choose_bbar_cbar(&unit).unwrap().1, 1.0);
        let q2 = spec(5, 2.0, 3.0, DensityModel::exact_power(2.0, 1.0, 2.0).unwrap());
        assert!(matches!(choose_bbar_cbar(&q2), Err(Error::Domain(_))));
    }

    #[test]
    fn solve_qgt2_cases() {
        let s = spec(5, 2.0, 3.0, DensityModel::exact_power(4.0, 1.0, 2.0).unwrap());
        let cert = solve_super_qgt2_default(&s).unwrap();
        assert_relative_eq!(cert.params.c, 0.9 * 2.0 / 2f64.powf(-1.5), max_relative = 1e-12);
        assert_relative_eq!(cert.params.c, 5.09, epsilon = 0.01);
        assert!(cert.report.check("diffusion_beats_reaction").unwrap().pass);

        let eq = |r0: f64| spec(5, 2.0, 2.0, DensityModel::exact_power(4.0, 1.0, r0).unwrap());
        assert!(solve_super_qgt2(&eq(0.5), 1.0, 0.5f64.powf(-1.0)).is_ok());
        assert!(solve_super_qgt2(&eq(0.49), 1.0, 0.49f64.powf(-1.0)).is_err());

        let low = spec(5, 2.0, 1.5, DensityModel::exact_power(4.0, 1.0, 2.0).unwrap());
        let cert = solve_super_qgt2_default(&low).unwrap();
        assert_eq!(cert.params.alpha, 1.0);
        assert_eq!(cert.params.t_horizon, 2.0);
        assert!(cert.report.check("diffusion_beats_reaction").unwrap().margin > 0.0);
    }

    #[test]
    fn scaling_through_omega() {
        let s = worked_q2();
        let a = check_super_q2(&BarrierParams::super_q2(0.5, 1.0, 1.0, 2.0, 3.0, E * E), &s);
        let b = check_super_q2(&BarrierParams::super_q2(0.25, 0.5, 1.0, 2.0, 3.0, E * E), &s);
        assert_eq!(a.check("cutoff_drift").unwrap().margin, b.check("cutoff_drift").unwrap().margin);
        let shift = a.check("core_balance").unwrap().margin - b.check("core_balance").unwrap().margin;
        assert_relative_eq!(shift, 0.25f64.powi(2) - 0.5f64.powi(2), max_relative = 1e-12);
    }
}
