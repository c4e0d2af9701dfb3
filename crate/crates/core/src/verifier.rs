//! Numerical certification of the barrier inequalities.
//!
//! The residual `u_t - (1/rho) Lap(u^m) - u^p` is evaluated from the exact
//! analytic derivatives of a barrier and the exact density realization on a
//! mixed uniform/geometric grid in `r` and a uniform grid in `t`.

use std::f64::consts::E;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barriers::{
    self, eval_sub_q2_branch, BarrierEval, BarrierParams, Family, Region, SubBranch, SupportRadius,
};
use crate::error::{Error, Result};
use crate::feasibility;
use crate::model::{DensityModel, ProblemSpec};

/// Residuals are only trusted where the profile exceeds this value.
pub const PROFILE_FLOOR: f64 = 1e-6;
/// Relative violation tolerance.
pub const RESIDUAL_TOL: f64 = 1e-8;
const WORST_KEEP: usize = 100;
/// Fronts grow like exp(a / eta) and can overflow; past this radius the
/// weight `1/rho ~ r^q` leaves the double range for large `q`.
const R_MAX_CAP: f64 = 1e100;

/// One residual evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub r: f64,
    pub t: f64,
    pub value: f64,
    pub profile: f64,
    pub region: Region,
    pub residual: f64,
    /// Allowed wrong-sign excursion at this sample.
    pub tolerance: f64,
    /// Signed distance from violation: `residual` for supersolutions,
    /// `-residual` for subsolutions.
    pub margin: f64,
}

impl Sample {
    /// Wrong sign beyond tolerance; a non-finite margin also counts.
    pub fn is_violation(&self) -> bool {
        self.margin.is_nan() || self.margin < -self.tolerance
    }
}

/// Sampling plan. Unset bounds are derived from the barrier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_r: usize,
    pub n_t: usize,
    pub r_max: Option<f64>,
    pub t_max: Option<f64>,
    /// Origin exclusion radius as a fraction of the sampled `r` range.
    pub eps_frac: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n_r: 200, n_t: 50, r_max: None, t_max: None, eps_frac: 1e-3 }
    }
}

impl GridSpec {
    pub fn new(n_r: usize, n_t: usize) -> Self {
        Self { n_r, n_t, ..Self::default() }
    }

    pub fn with_r_max(mut self, r_max: f64) -> Self {
        self.r_max = Some(r_max);
        self
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = Some(t_max);
        self
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionCounts {
    /// Positive core of the single-piece families (`D1` for `q = 2`).
    pub core: usize,
    /// Outer log branch of the subsolution.
    pub d2: usize,
    /// Inner quadratic branch of the subsolution.
    pub d3: usize,
    pub cutoff: usize,
    /// Positive but below [`PROFILE_FLOOR`].
    pub near_cutoff: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub family: Family,
    pub n_r: usize,
    pub n_t: usize,
    pub r_range: (f64, f64),
    pub t_samples: Vec<f64>,
    pub excluded_origin_radius: f64,
    /// Minimum of `margin` over the trusted samples.
    pub worst_margin: f64,
    pub violations: usize,
    pub region_counts: RegionCounts,
    /// `(u^m)_r(0, t) <= 0` at every sampled time.
    pub origin_flux_ok: bool,
    /// `u -> 0` and `(u^m)_r <= 0` approaching the free boundary.
    pub cutoff_gluing_ok: bool,
    /// Largest value and flux jumps across `r = e` (subsolution only).
    pub interface_jumps: Option<(f64, f64)>,
    pub interface_ok: bool,
    /// Samples with the smallest margins, most critical first.
    pub worst_samples: Vec<Sample>,
}

impl ResidualReport {
    pub fn pass(&self) -> bool {
        self.violations == 0 && self.origin_flux_ok && self.cutoff_gluing_ok && self.interface_ok
    }

    pub fn into_result(self) -> Result<Self> {
        if self.violations > 0 {
            let worst = self.worst_samples[0];
            return Err(Error::ResidualViolation(Box::new(worst)));
        }
        if !self.pass() {
            return Err(Error::Precondition(format!(
                "gluing checks failed: origin flux {}, cutoff {}, interface {:?}",
                self.origin_flux_ok, self.cutoff_gluing_ok, self.interface_jumps
            )));
        }
        Ok(self)
    }
}

/// `u_t - (1/rho) Lap(u^m) - u^p` at one point.
pub fn residual(ev: &BarrierEval, density: &DensityModel, spec: &ProblemSpec, r: f64) -> Result<f64> {
    if ev.region != Region::Cutoff && ev.profile.abs() < 1e-12 {
        return Err(Error::OnCutoffSurface { r, profile: ev.profile });
    }
    if ev.value == 0.0 && ev.region == Region::Cutoff {
        return Ok(0.0);
    }
    Ok(ev.du_dt - density.inv_rho(r) * ev.lap_um - ev.value.powf(spec.p))
}

fn tolerance(ev: &BarrierEval, p: f64) -> f64 {
    RESIDUAL_TOL * (1.0 + ev.du_dt.abs() + ev.value.powf(p).abs())
}

fn default_t_max(params: &BarrierParams) -> f64 {
    match params.family {
        Family::SubQ2 => 0.99 * params.t_horizon,
        _ => 10.0,
    }
}

fn default_r_max(params: &BarrierParams, t_max: f64) -> Result<f64> {
    Ok(match params.family {
        Family::SuperQ2 => match barriers::support_radius(params, t_max)? {
            SupportRadius::Finite(r) => (2.0 * r.max(E)).min(R_MAX_CAP),
            SupportRadius::Infinite => unreachable!(),
        },
        Family::SubQ2 => {
            let r = barriers::support_radius(params, 0.0)?.finite().unwrap_or(E);
            (2.0 * r.max(E)).min(R_MAX_CAP)
        }
        Family::SuperQgt2 => 1e3 * (1.0 + params.r0),
    })
}

/// Radii: a third uniform, a third geometric, a third uniform on the
/// neighbourhood `[eps, 2e]` of the origin and of the gluing sphere.
fn radial_samples(n: usize, eps: f64, r_max: f64) -> Vec<f64> {
    let n_third = (n / 3).max(1);
    let n_geo = n_third;
    let n_near = n.saturating_sub(2 * n_third).max(1);
    let span = |k: usize, i: usize| if k <= 1 { 0.0 } else { i as f64 / (k - 1) as f64 };
    let mut rs = Vec::with_capacity(n);
    for i in 0..n_third {
        rs.push(eps + (r_max - eps) * span(n_third, i));
    }
    let ratio = (r_max / eps).ln();
    for i in 0..n_geo {
        rs.push(eps * (ratio * span(n_geo, i)).exp());
    }
    let near = r_max.min(2.0 * E);
    for i in 0..n_near {
        rs.push(eps + (near - eps) * span(n_near, i));
    }
    rs.sort_by(f64::total_cmp);
    rs.dedup();
    rs
}

fn time_samples(n: usize, t_max: f64) -> Vec<f64> {
    if n <= 1 {
        return vec![0.0];
    }
    (0..n).map(|j| t_max * j as f64 / (n - 1) as f64).collect()
}

/// Residual scan without the certificate gate; used by the `verify_*`
/// entry points and for probing deliberately broken parameters.
pub fn scan(params: &BarrierParams, spec: &ProblemSpec, grid: &GridSpec) -> Result<ResidualReport> {
    let t_max = grid.t_max.unwrap_or_else(|| default_t_max(params));
    if params.family == Family::SubQ2 && t_max >= params.t_horizon {
        return Err(Error::TimeAtOrBeyondHorizon { t: t_max, horizon: params.t_horizon });
    }
    let r_max = match grid.r_max {
        Some(r) => r,
        None => default_r_max(params, t_max)?,
    };
    // supports can be astronomically wide, so the exclusion radius is tied
    // to the scale of the gluing sphere rather than to r_max
    let eps = grid.eps_frac * r_max.min(2.0 * E);
    let rs = radial_samples(grid.n_r, eps, r_max);
    let ts = time_samples(grid.n_t, t_max);
    let is_super = params.family.is_super();

    let points: Vec<(f64, f64)> = ts.iter().flat_map(|&t| rs.iter().map(move |&r| (r, t))).collect();
    let evaluated: Vec<Result<(BarrierEval, Option<Sample>)>> = points
        .par_iter()
        .map(|&(r, t)| {
            let ev = barriers::eval(params, spec, r, t)?;
            if ev.region == Region::Cutoff || ev.profile < PROFILE_FLOOR {
                return Ok((ev, None));
            }
            let res = residual(&ev, &spec.density, spec, r)?;
            let margin = if is_super { res } else { -res };
            Ok((
                ev,
                Some(Sample {
                    r,
                    t,
                    value: ev.value,
                    profile: ev.profile,
                    region: ev.region,
                    residual: res,
                    tolerance: tolerance(&ev, spec.p),
                    margin,
                }),
            ))
        })
        .collect();

    let mut counts = RegionCounts::default();
    let mut samples = Vec::new();
    for item in evaluated {
        let (ev, sample) = item?;
        match (ev.region, sample.is_some()) {
            (Region::Cutoff, _) => counts.cutoff += 1,
            (_, false) => counts.near_cutoff += 1,
            (Region::InnerBall, true) => counts.d3 += 1,
            (Region::PositiveCore, true) if params.family == Family::SubQ2 => counts.d2 += 1,
            (Region::PositiveCore, true) => counts.core += 1,
        }
        if let Some(s) = sample {
            samples.push(s);
        }
    }
    let violations = samples.iter().filter(|s| s.is_violation()).count();
    // most critical first: violations by how far they overshoot, then margin
    samples.sort_by(|a, b| {
        let ka = a.margin + a.tolerance;
        let kb = b.margin + b.tolerance;
        ka.total_cmp(&kb)
    });
    let worst_margin = samples.iter().map(|s| s.margin).fold(f64::INFINITY, f64::min);
    samples.truncate(WORST_KEEP);

    let origin_flux_ok = ts.iter().try_fold(true, |ok, &t| {
        barriers::eval(params, spec, 0.0, t).map(|ev| ok && ev.dum_dr <= 0.0)
    })?;
    let cutoff_gluing_ok = cutoff_gluing(params, spec, &ts)?;
    let (interface_jumps, interface_ok) = if params.family == Family::SubQ2 {
        let mut worst = (0.0f64, 0.0f64);
        let mut ok = true;
        for &t in &ts {
            let (jv, jf) = barriers::interface_flux_match(params, spec, t)?;
            let scale_v = eval_sub_q2_branch(params, spec, E, t, SubBranch::Outer)?.value.abs();
            let scale_f = eval_sub_q2_branch(params, spec, E, t, SubBranch::Outer)?.dum_dr.abs();
            ok &= jv <= 1e-12 * (1.0 + scale_v) && jf <= 1e-12 * (1.0 + scale_f);
            worst = (worst.0.max(jv), worst.1.max(jf));
        }
        (Some(worst), ok)
    } else {
        (None, true)
    };

    Ok(ResidualReport {
        family: params.family,
        n_r: rs.len(),
        n_t: ts.len(),
        r_range: (eps, r_max),
        t_samples: ts,
        excluded_origin_radius: eps,
        worst_margin,
        violations,
        region_counts: counts,
        origin_flux_ok,
        cutoff_gluing_ok,
        interface_jumps,
        interface_ok,
        worst_samples: samples,
    })
}

/// Walk inward from the free boundary: the value must vanish continuously
/// and the outward flux of `u^m` must be nonpositive.
fn cutoff_gluing(params: &BarrierParams, spec: &ProblemSpec, ts: &[f64]) -> Result<bool> {
    if params.family == Family::SuperQgt2 {
        return Ok(true);
    }
    for &t in ts {
        let front = match barriers::support_radius(params, t)? {
            SupportRadius::Finite(r) if r > 0.0 => r,
            _ => continue,
        };
        let mut prev = f64::INFINITY;
        for j in 3..12 {
            let r = front * (1.0 - 10f64.powi(-j));
            let ev = barriers::eval(params, spec, r, t)?;
            if ev.region == Region::Cutoff {
                continue;
            }
            if ev.dum_dr > 0.0 || ev.value > prev * (1.0 + 1e-12) {
                return Ok(false);
            }
            prev = ev.value;
        }
        if prev.is_finite() && prev > 1e-3 * barriers::eval(params, spec, 0.0, t)?.value {
            return Ok(false);
        }
    }
    Ok(true)
}

fn require_family(params: &BarrierParams, super_side: bool) -> Result<()> {
    if !params.certified {
        return Err(Error::InfeasibleParams);
    }
    if params.family.is_super() != super_side {
        return Err(Error::Domain(format!("{:?} is on the wrong side of the comparison", params.family)));
    }
    Ok(())
}

/// Certify `residual >= 0` for a supersolution family.
pub fn verify_supersolution(params: &BarrierParams, spec: &ProblemSpec, grid: &GridSpec) -> Result<ResidualReport> {
    require_family(params, true)?;
    scan(params, spec, grid)
}

/// Certify `residual <= 0` on both pieces of the glued subsolution.
pub fn verify_subsolution(params: &BarrierParams, spec: &ProblemSpec, grid: &GridSpec) -> Result<ResidualReport> {
    require_family(params, false)?;
    scan(params, spec, grid)
}

/// Largest relative error of each analytic derivative against finite
/// differences of the closed-form value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DerivativeErrors {
    pub du_dt: f64,
    pub dum_dr: f64,
    pub d2um_dr2: f64,
    pub samples: usize,
}

impl DerivativeErrors {
    pub fn max(&self) -> f64 {
        self.du_dt.max(self.dum_dr).max(self.d2um_dr2)
    }

    fn merge(self, other: Self) -> Self {
        Self {
            du_dt: self.du_dt.max(other.du_dt),
            dum_dr: self.dum_dr.max(other.dum_dr),
            d2um_dr2: self.d2um_dr2.max(other.d2um_dr2),
            samples: self.samples + other.samples,
        }
    }
}

fn eval_branch(params: &BarrierParams, spec: &ProblemSpec, r: f64, t: f64, branch: Option<SubBranch>) -> BarrierEval {
    match branch {
        Some(b) => eval_sub_q2_branch(params, spec, r, t, b).expect("sample before horizon"),
        None => barriers::eval(params, spec, r, t).expect("single-piece family"),
    }
}

fn draw_sample(
    params: &BarrierParams,
    spec: &ProblemSpec,
    rng: &mut ChaCha8Rng,
) -> (f64, f64, Option<SubBranch>) {
    loop {
        let (r, t, branch) = match params.family {
            Family::SuperQ2 => {
                let t = rng.gen_range(0.0..10.0);
                let front = barriers::support_radius(params, t).unwrap().finite().unwrap();
                (rng.gen_range(0.01..1.0) * front, t, None)
            }
            Family::SubQ2 => {
                let t = rng.gen_range(0.0..0.9) * params.t_horizon;
                if rng.gen_bool(0.5) {
                    (rng.gen_range(0.05..E - 0.05), t, Some(SubBranch::Inner))
                } else {
                    let front = barriers::support_radius(params, t).unwrap().finite().unwrap().min(1e6);
                    let lo = (E + 0.05f64).ln();
                    let hi = front.max(E + 0.1).ln();
                    (rng.gen_range(lo..hi).exp(), t, Some(SubBranch::Outer))
                }
            }
            Family::SuperQgt2 => (rng.gen_range(0.01..100.0), rng.gen_range(0.0..10.0), None),
        };
        let ev = eval_branch(params, spec, r, t, branch);
        if ev.region != Region::Cutoff && ev.profile > 0.05 {
            return (r, t, branch);
        }
    }
}

/// Central differences (relative step `1e-5` for first derivatives, `1e-4`
/// with one Richardson extrapolation for the second) against the analytic
/// fields. Errors are measured relative to the larger of the analytic value
/// and the natural magnitude of the term, so sign changes do not blow up
/// the ratio.
pub fn crosscheck_derivatives(
    params: &BarrierParams,
    spec: &ProblemSpec,
    n_samples: usize,
    seed: u64,
) -> DerivativeErrors {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<_> = (0..n_samples).map(|_| draw_sample(params, spec, &mut rng)).collect();
    let m = spec.m;
    draws
        .par_iter()
        .map(|&(r, t, branch)| {
            let ev = eval_branch(params, spec, r, t, branch);
            let um = |r: f64| eval_branch(params, spec, r, t, branch).value.powf(m);
            let u_at = |t: f64| eval_branch(params, spec, r, t, branch).value;

            let time_scale = match params.family {
                Family::SubQ2 => params.t_horizon - t,
                _ => params.t_horizon + t,
            };
            let ht = 1e-5 * time_scale;
            let fd_t = (u_at(t + ht) - u_at(t - ht)) / (2.0 * ht);

            let len = r + params.r0;
            let hr = 1e-5 * len;
            let fd_r = (um(r + hr) - um(r - hr)) / (2.0 * hr);

            let second = |h: f64| (um(r + h) - 2.0 * um(r) + um(r - h)) / (h * h);
            let h2 = 1e-4 * len;
            let fd_rr = (4.0 * second(h2 / 2.0) - second(h2)) / 3.0;

            let um0 = ev.value.powf(m);
            let rel = |fd: f64, exact: f64, scale: f64| (fd - exact).abs() / exact.abs().max(scale);
            DerivativeErrors {
                du_dt: rel(fd_t, ev.du_dt, ev.value / time_scale),
                dum_dr: rel(fd_r, ev.dum_dr, um0 / len),
                d2um_dr2: rel(fd_rr, ev.d2um_dr2, ev.dum_dr.abs() / len + um0 / (len * len)),
                samples: 1,
            }
        })
        .reduce(DerivativeErrors::default, DerivativeErrors::merge)
}

/// Residual and the bound `C F^(1/(m-1) - 1) phi(F)` on the outer branch of
/// the subsolution, or `None` outside `D2`.
pub fn phi_bound(params: &BarrierParams, spec: &ProblemSpec, r: f64, t: f64) -> Result<Option<(f64, f64)>> {
    if params.family != Family::SubQ2 || r < E {
        return Ok(None);
    }
    let ev = barriers::eval_sub_q2(params, spec, r, t)?;
    if ev.region == Region::Cutoff || ev.profile >= 1.0 || ev.profile < PROFILE_FLOOR {
        return Ok(None);
    }
    let res = residual(&ev, &spec.density, spec, r)?;
    let mc = feasibility::check_max_conditions_sub_q2(params, spec, t)?;
    let f = ev.profile;
    let bound = params.c * f.powf(1.0 / (spec.m - 1.0) - 1.0) * mc.phi(f, spec.m, spec.p);
    Ok(Some((res, bound)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::{default_rho2, solve_sub_q2, solve_super_q2, solve_super_qgt2_default};

    fn q2_spec() -> ProblemSpec {
        ProblemSpec::new(4, 2.0, 3.0, DensityModel::exact_power(2.0, 1.0, E * E).unwrap()).unwrap()
    }

    fn sub_spec() -> ProblemSpec {
        ProblemSpec::new(4, 2.0, 3.0, DensityModel::exterior_power(2.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn zero_field_has_zero_residual() {
        let ev = BarrierEval {
            value: 0.0,
            du_dt: 0.0,
            dum_dr: 0.0,
            d2um_dr2: 0.0,
            lap_um: 0.0,
            profile: -1.0,
            region: Region::Cutoff,
        };
        let s = q2_spec();
        assert_eq!(residual(&ev, &s.density, &s, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn cutoff_surface_is_rejected() {
        let s = q2_spec();
        let ev = BarrierEval {
            value: 1e-20,
            du_dt: 0.0,
            dum_dr: 0.0,
            d2um_dr2: 0.0,
            lap_um: 0.0,
            profile: 1e-14,
            region: Region::PositiveCore,
        };
        assert!(matches!(residual(&ev, &s.density, &s, 1.0), Err(Error::OnCutoffSurface { .. })));
    }

    #[test]
    fn worked_super_q2_passes() {
        let s = q2_spec();
        let params = solve_super_q2(&s).unwrap().params;
        let rep = verify_supersolution(&params, &s, &GridSpec::new(200, 50)).unwrap();
        assert!(rep.pass(), "{:?}", rep.worst_samples.first());
        assert!(rep.region_counts.core > 0);
    }

    #[test]
    fn hand_worked_super_q2_passes() {
        let s = q2_spec();
        let mut params = BarrierParams::super_q2(0.5, 1.0, 1.0, 2.0, 3.0, E * E);
        params.certified = true;
        let rep = verify_supersolution(&params, &s, &GridSpec::new(200, 50)).unwrap();
        assert!(rep.pass(), "{:?}", rep.worst_samples.first());
    }

    #[test]
    fn worked_sub_q2_passes() {
        let s = sub_spec();
        let params = solve_sub_q2(&s, default_rho2(&s)).unwrap().params;
        let rep = verify_subsolution(&params, &s, &GridSpec::new(200, 50)).unwrap();
        assert!(rep.pass(), "{:?}", rep.worst_samples.first());
        assert!(rep.region_counts.d2 > 0 && rep.region_counts.d3 > 0);
        let (jv, jf) = rep.interface_jumps.unwrap();
        assert!(jv <= 1e-12 * params.c * 1e2 && jf.is_finite());
    }

    #[test]
    fn worked_qgt2_passes() {
        let s = ProblemSpec::new(5, 2.0, 3.0, DensityModel::exact_power(4.0, 1.0, 2.0).unwrap()).unwrap();
        let params = solve_super_qgt2_default(&s).unwrap().params;
        let rep = verify_supersolution(&params, &s, &GridSpec::new(200, 20)).unwrap();
        assert!(rep.pass(), "{:?}", rep.worst_samples.first());
    }

    #[test]
    fn uncertified_params_are_refused() {
        let s = q2_spec();
        let params = BarrierParams::super_q2(0.5, 1.0, 1.0, 2.0, 3.0, E * E);
        assert!(matches!(
            verify_supersolution(&params, &s, &GridSpec::new(10, 2)),
            Err(Error::InfeasibleParams)
        ));
    }

    #[test]
    fn derivative_crosscheck_all_families() {
        let s = q2_spec();
        let p = solve_super_q2(&s).unwrap().params;
        let e = crosscheck_derivatives(&p, &s, 300, 1);
        assert!(e.max() <= 1e-6, "{e:?}");

        let s = sub_spec();
        let p = solve_sub_q2(&s, default_rho2(&s)).unwrap().params;
        let e = crosscheck_derivatives(&p, &s, 300, 2);
        assert!(e.max() <= 1e-6, "{e:?}");

        let s = ProblemSpec::new(5, 2.0, 1.5, DensityModel::exact_power(4.0, 1.0, 2.0).unwrap()).unwrap();
        let p = solve_super_qgt2_default(&s).unwrap().params;
        let e = crosscheck_derivatives(&p, &s, 300, 3);
        assert!(e.max() <= 1e-6, "{e:?}");
    }

    #[test]
    fn phi_bound_dominates_residual() {
        let s = sub_spec();
        let p = solve_sub_q2(&s, default_rho2(&s)).unwrap().params;
        let mut seen = 0;
        for i in 0..200 {
            let r = E * (1.0 + 0.1 * i as f64).powf(3.0);
            for t in [0.0, 0.5, 0.9] {
                if let Some((res, bound)) = phi_bound(&p, &s, r, t).unwrap() {
                    seen += 1;
                    assert!(res <= bound + 1e-9 * (1.0 + bound.abs()), "r={r} t={t} {res} > {bound}");
                }
            }
        }
        assert!(seen > 100);
    }
}
