//! Closed-form barrier families.
//!
//! Three families are implemented, all radial:
//!
//! * `SuperQ2`: `C (T+t)^(-alpha) [1 - log(r + r0)/a (T+t)^(-beta)]_+^(1/(m-1))`,
//!   a compactly supported supersolution for `q = 2`, `p > m`.
//! * `SubQ2`: `C (T-t)^(-alpha) [1 - s(r)/a (T-t)^(-beta)]_+^(1/(m-1))`,
//!   a subsolution glued in `C^1` across `|x| = e` that blows up at `t = T`.
//! * `SuperQgt2`: `C (T+t)^alpha (r + r0)^(-b/m)`, a strictly positive
//!   supersolution for `q > 2`.
//!
//! Every evaluation returns the value together with the exact time
//! derivative and the first two radial derivatives of `u^m`. The exterior of
//! the support is identically zero, derivatives included.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ProblemSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    SuperQ2,
    SubQ2,
    SuperQgt2,
}

impl Family {
    pub fn is_super(self) -> bool {
        !matches!(self, Family::SubQ2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierParams {
    pub family: Family,
    /// Amplitude `C`.
    pub c: f64,
    /// Profile scale `a` (unused for `SuperQgt2`).
    pub a: f64,
    /// Cached `C^(m-1) / a`.
    pub omega: f64,
    /// Time horizon `T`.
    pub t_horizon: f64,
    pub alpha: f64,
    pub beta: f64,
    pub b_bar: f64,
    pub c_bar: f64,
    pub r0: f64,
    /// Bound of `1/rho` on the closed ball `B_e` used by the `SubQ2` system.
    pub rho2: f64,
    /// Set by the feasibility solvers once every inequality has been checked.
    pub certified: bool,
}

impl BarrierParams {
    pub fn super_q2(c: f64, a: f64, t_horizon: f64, m: f64, p: f64, r0: f64) -> Self {
        Self {
            family: Family::SuperQ2,
            c,
            a,
            omega: c.powf(m - 1.0) / a,
            t_horizon,
            alpha: 1.0 / (p - 1.0),
            beta: (p - m) / (p - 1.0),
            b_bar: 0.0,
            c_bar: 0.0,
            r0,
            rho2: 0.0,
            certified: false,
        }
    }

    pub fn sub_q2(c: f64, a: f64, t_horizon: f64, m: f64, p: f64, rho2: f64) -> Self {
        Self {
            family: Family::SubQ2,
            c,
            a,
            omega: c.powf(m - 1.0) / a,
            t_horizon,
            alpha: 1.0 / (p - 1.0),
            beta: (p - m) / (p - 1.0),
            b_bar: 0.0,
            c_bar: 0.0,
            r0: 0.0,
            rho2,
            certified: false,
        }
    }

    pub fn super_qgt2(c: f64, alpha: f64, t_horizon: f64, b_bar: f64, c_bar: f64, r0: f64) -> Self {
        Self {
            family: Family::SuperQgt2,
            c,
            a: 0.0,
            omega: 0.0,
            t_horizon,
            alpha,
            beta: 0.0,
            b_bar,
            c_bar,
            r0,
            rho2: 0.0,
            certified: false,
        }
    }

    /// Copy with a new amplitude at fixed `omega` (so `a` follows `C`); the
    /// certificate is dropped.
    pub fn with_amplitude(&self, c: f64, m: f64) -> Self {
        let mut out = self.clone();
        out.c = c;
        if self.omega > 0.0 {
            out.a = c.powf(m - 1.0) / self.omega;
        }
        out.certified = false;
        out
    }

    /// Copy with a new horizon. The `q = 2` certificates are horizon-free,
    /// so the flag is kept for those families.
    pub fn with_horizon(&self, t_horizon: f64) -> Self {
        let mut out = self.clone();
        out.t_horizon = t_horizon;
        if self.family == Family::SuperQgt2 {
            out.certified = false;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    PositiveCore,
    Cutoff,
    InnerBall,
}

/// Value and exact derivatives of a barrier at one `(r, t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierEval {
    pub value: f64,
    pub du_dt: f64,
    pub dum_dr: f64,
    pub d2um_dr2: f64,
    pub lap_um: f64,
    /// `F` (log profile) or `G` (inner quadratic profile); `1` for `SuperQgt2`.
    pub profile: f64,
    pub region: Region,
}

impl BarrierEval {
    fn cutoff(profile: f64) -> Self {
        Self {
            value: 0.0,
            du_dt: 0.0,
            dum_dr: 0.0,
            d2um_dr2: 0.0,
            lap_um: 0.0,
            profile,
            region: Region::Cutoff,
        }
    }
}

/// Radial Laplacian `(u^m)_rr + (N-1)/r (u^m)_r`; at the origin the
/// `(N-1)/r` term is replaced by its limit.
fn radial_laplacian(n: f64, r: f64, dum_dr: f64, d2um_dr2: f64) -> f64 {
    if r > 0.0 {
        d2um_dr2 + (n - 1.0) / r * dum_dr
    } else if dum_dr == 0.0 {
        n * d2um_dr2
    } else {
        dum_dr.signum() * f64::INFINITY
    }
}

/// `q = 2` supersolution.
pub fn eval_super_q2(params: &BarrierParams, spec: &ProblemSpec, r: f64, t: f64) -> BarrierEval {
    let m = spec.m;
    let k = 1.0 / (m - 1.0);
    let tt = params.t_horizon + t;
    let zeta = tt.powf(-params.alpha);
    let eta = tt.powf(-params.beta);
    let dlog_zeta = -params.alpha / tt;
    let dlog_eta = -params.beta / tt;

    let s = r + params.r0;
    let log_s = s.ln();
    let f = 1.0 - log_s * eta / params.a;
    if f <= 0.0 {
        return BarrierEval::cutoff(f);
    }
    let fk = f.powf(k);
    let fk1 = fk / f;
    let cz = params.c * zeta;
    let value = cz * fk;
    let du_dt = value * dlog_zeta - cz * k * fk1 * log_s * eta * dlog_eta / params.a;
    let x = params.c.powf(m) * zeta.powf(m) * m / (m - 1.0) * eta / params.a;
    let dum_dr = -x * fk / s;
    let d2um_dr2 = x * fk / (s * s) + x * k * fk1 * eta / (params.a * s * s);
    BarrierEval {
        value,
        du_dt,
        dum_dr,
        d2um_dr2,
        lap_um: radial_laplacian(spec.n(), r, dum_dr, d2um_dr2),
        profile: f,
        region: Region::PositiveCore,
    }
}

/// Which piece of the glued `SubQ2` barrier to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubBranch {
    /// Logarithmic profile, meaningful for `r >= e`.
    Outer,
    /// Quadratic profile, meaningful for `r < e`.
    Inner,
}

/// `q = 2` subsolution; the branch is picked from `r`.
pub fn eval_sub_q2(params: &BarrierParams, spec: &ProblemSpec, r: f64, t: f64) -> Result<BarrierEval> {
    let branch = if r >= E { SubBranch::Outer } else { SubBranch::Inner };
    eval_sub_q2_branch(params, spec, r, t, branch)
}

/// One branch of the `q = 2` subsolution, evaluated at any `r > 0`.
pub fn eval_sub_q2_branch(
    params: &BarrierParams,
    spec: &ProblemSpec,
    r: f64,
    t: f64,
    branch: SubBranch,
) -> Result<BarrierEval> {
    if t >= params.t_horizon {
        return Err(Error::TimeAtOrBeyondHorizon { t, horizon: params.t_horizon });
    }
    let m = spec.m;
    let k = 1.0 / (m - 1.0);
    let tt = params.t_horizon - t;
    let zeta = tt.powf(-params.alpha);
    let eta = tt.powf(-params.beta);
    let dlog_zeta = params.alpha / tt;
    let dlog_eta = params.beta / tt;
    let ratio = eta / params.a;

    let level = match branch {
        SubBranch::Outer => r.ln(),
        SubBranch::Inner => (r * r + E * E) / (2.0 * E * E),
    };
    let g = 1.0 - level * ratio;
    if g <= 0.0 {
        return Ok(BarrierEval::cutoff(g));
    }
    let gk = g.powf(k);
    let gk1 = gk / g;
    let cz = params.c * zeta;
    let value = cz * gk;
    let du_dt = value * dlog_zeta - cz * k * gk1 * level * ratio * dlog_eta;
    let x = params.c.powf(m) * zeta.powf(m) * m / (m - 1.0) * ratio;
    let (dum_dr, d2um_dr2, region) = match branch {
        SubBranch::Outer => (
            -x * gk / r,
            x * gk / (r * r) + x * k * gk1 * ratio / (r * r),
            Region::PositiveCore,
        ),
        SubBranch::Inner => {
            let e2 = E * E;
            (
                -x * gk * r / e2,
                -x * gk / e2 + x * k * gk1 * ratio * r * r / (e2 * e2),
                Region::InnerBall,
            )
        }
    };
    Ok(BarrierEval {
        value,
        du_dt,
        dum_dr,
        d2um_dr2,
        lap_um: radial_laplacian(spec.n(), r, dum_dr, d2um_dr2),
        profile: g,
        region,
    })
}

/// `q > 2` supersolution.
pub fn eval_super_qgt2(params: &BarrierParams, spec: &ProblemSpec, r: f64, t: f64) -> BarrierEval {
    let m = spec.m;
    let b = params.b_bar;
    let tt = params.t_horizon + t;
    let zeta = tt.powf(params.alpha);
    let dzeta = if params.alpha == 0.0 {
        0.0
    } else {
        params.alpha * tt.powf(params.alpha - 1.0)
    };
    let s = r + params.r0;
    let shape = s.powf(-b / m);
    let x = params.c.powf(m) * zeta.powf(m);
    let dum_dr = -b * x * s.powf(-b - 1.0);
    let d2um_dr2 = b * (b + 1.0) * x * s.powf(-b - 2.0);
    BarrierEval {
        value: params.c * zeta * shape,
        du_dt: params.c * dzeta * shape,
        dum_dr,
        d2um_dr2,
        lap_um: radial_laplacian(spec.n(), r, dum_dr, d2um_dr2),
        profile: 1.0,
        region: Region::PositiveCore,
    }
}

/// Dispatch on the family.
pub fn eval(params: &BarrierParams, spec: &ProblemSpec, r: f64, t: f64) -> Result<BarrierEval> {
    match params.family {
        Family::SuperQ2 => Ok(eval_super_q2(params, spec, r, t)),
        Family::SubQ2 => eval_sub_q2(params, spec, r, t),
        Family::SuperQgt2 => Ok(eval_super_qgt2(params, spec, r, t)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportRadius {
    Finite(f64),
    Infinite,
}

impl SupportRadius {
    pub fn finite(self) -> Option<f64> {
        match self {
            SupportRadius::Finite(r) => Some(r),
            SupportRadius::Infinite => None,
        }
    }
}

/// Radius of the positivity set at time `t`.
///
/// For `SuperQ2` this is the outer edge of the support; for `SubQ2` it is
/// the radius inside which the subsolution (hence every solution above it)
/// is positive.
pub fn support_radius(params: &BarrierParams, t: f64) -> Result<SupportRadius> {
    match params.family {
        Family::SuperQ2 => {
            let level = params.a * (params.t_horizon + t).powf(params.beta);
            Ok(SupportRadius::Finite((level.exp() - params.r0).max(0.0)))
        }
        Family::SubQ2 => {
            if t >= params.t_horizon {
                return Err(Error::TimeAtOrBeyondHorizon { t, horizon: params.t_horizon });
            }
            let level = params.a * (params.t_horizon - t).powf(params.beta);
            let r = if level >= 1.0 {
                level.exp()
            } else if level > 0.5 {
                E * (2.0 * level - 1.0).sqrt()
            } else {
                0.0
            };
            Ok(SupportRadius::Finite(r))
        }
        Family::SuperQgt2 => Ok(SupportRadius::Infinite),
    }
}

/// Jumps of `u` and of `(u^m)_r` across `|x| = e` between the two `SubQ2`
/// branches.
pub fn interface_flux_match(params: &BarrierParams, spec: &ProblemSpec, t: f64) -> Result<(f64, f64)> {
    interface_jumps_scaled(params, spec, t, 1.0)
}

/// As [`interface_flux_match`], with the inner branch multiplied by
/// `inner_scale` (used to probe the detector).
pub fn interface_jumps_scaled(
    params: &BarrierParams,
    spec: &ProblemSpec,
    t: f64,
    inner_scale: f64,
) -> Result<(f64, f64)> {
    if params.family != Family::SubQ2 {
        return Err(Error::Domain("interface matching applies to the SubQ2 family".into()));
    }
    let outer = eval_sub_q2_branch(params, spec, E, t, SubBranch::Outer)?;
    let inner = eval_sub_q2_branch(params, spec, E, t, SubBranch::Inner)?;
    let scale_m = inner_scale.powf(spec.m);
    Ok((
        (outer.value - inner_scale * inner.value).abs(),
        (outer.dum_dr - scale_m * inner.dum_dr).abs(),
    ))
}
