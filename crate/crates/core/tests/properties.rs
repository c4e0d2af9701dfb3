//! Invariants as properties over random problems.

mod common;

use std::f64::consts::E;

use proptest::prelude::*;
use wpme::barriers::{self, BarrierParams, Family};
use wpme::config::Config;
use wpme::feasibility;
use wpme::model::{self, DensityModel, DensityProfile, ProblemSpec, RadialGrid};
use wpme::solver::{self, RadialField, Solver, SolverConfig};
use wpme::verifier::{self, GridSpec};

use common::{draw, realizations, rng, with_density};

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::SuperQ2), Just(Family::SubQ2), Just(Family::SuperQgt2)]
}

fn certified(family: Family, seed: u64) -> (ProblemSpec, BarrierParams) {
    let mut r = rng(seed);
    loop {
        let spec = draw(&mut r, family);
        if let Ok(c) = feasibility::solve(family, &spec) {
            return (spec, c.params);
        }
    }
}

/// A time inside the barrier's window.
fn sample_t(params: &BarrierParams, frac: f64) -> f64 {
    match params.family {
        Family::SubQ2 => 0.99 * frac * params.t_horizon,
        _ => 10.0 * frac,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn density_stays_between_walls(seed in 0u64..1000, r in 0.0f64..200.0, q in 2.0f64..6.0, exterior in any::<bool>()) {
        let base = if exterior {
            DensityModel::exterior_power(q, 1.0).unwrap()
        } else {
            DensityModel::exact_power(q, 1.0, 2.0).unwrap()
        };
        let d = DensityModel::new(q, 0.7, 1.9, base.r0, base.form, DensityProfile::Perturbed(seed)).unwrap();
        let inv = 1.0 / model::eval_density(&d, r);
        prop_assert!(inv >= d.lower_wall(r) * (1.0 - 1e-12));
        prop_assert!(inv <= d.upper_wall(r) * (1.0 + 1e-12));
    }

    #[test]
    fn certificates_pass_their_own_check(fam in family(), seed in any::<u64>()) {
        let (spec, params) = certified(fam, seed);
        let report = feasibility::check(&params, &spec).unwrap();
        prop_assert!(report.feasible);
        for c in &report.checks {
            prop_assert!(c.margin >= 0.0, "{} has margin {}", c.id, c.margin);
        }
    }

    #[test]
    fn barriers_nonincreasing_in_r(fam in family(), seed in any::<u64>(), frac in 0.0f64..1.0) {
        let (spec, params) = certified(fam, seed);
        let t = sample_t(&params, frac);
        let r_max = match fam {
            Family::SubQ2 => 3.0 * E,
            _ => 50.0,
        };
        let mut prev = f64::INFINITY;
        for i in 0..=400 {
            let r = r_max * i as f64 / 400.0;
            let v = barriers::eval(&params, &spec, r, t).unwrap().value;
            prop_assert!(v <= prev * (1.0 + 1e-14), "increase at r = {r}: {prev} -> {v}");
            prev = v;
        }
    }

    #[test]
    fn cutoff_value_matches_profile_power(fam in prop_oneof![Just(Family::SuperQ2), Just(Family::SubQ2)], seed in any::<u64>(), frac in 0.0f64..1.0) {
        let (spec, params) = certified(fam, seed);
        let t = sample_t(&params, frac);
        let zeta = match fam {
            Family::SubQ2 => (params.t_horizon - t).powf(-params.alpha),
            _ => (params.t_horizon + t).powf(-params.alpha),
        };
        let front = barriers::support_radius(&params, t).unwrap().finite().unwrap();
        // approach the front from inside
        for k in 1..=20 {
            let r = front * (1.0 - 0.5f64.powi(k));
            let ev = barriers::eval(&params, &spec, r, t).unwrap();
            let bound = params.c * zeta * ev.profile.max(0.0).powf(1.0 / (spec.m - 1.0));
            prop_assert!(ev.value <= bound * (1.0 + 1e-12) + 1e-300);
        }
    }

    #[test]
    fn endpoint_margins_time_uniform(seed in any::<u64>()) {
        let (spec, params) = certified(Family::SuperQ2, seed);
        let t_big = params.t_horizon;
        let (a0, b0) = feasibility::check_endpoint_conditions_super_q2(&params, &spec, 0.0);
        for t in [0.5 * t_big, 0.99 * t_big, 7.0] {
            let (a, b) = feasibility::check_endpoint_conditions_super_q2(&params, &spec, t);
            prop_assert!((a - a0).abs() <= 1e-10 * (1.0 + a0.abs()));
            prop_assert!((b - b0).abs() <= 1e-10 * (1.0 + b0.abs()));
        }
    }

    #[test]
    fn sub_max_margins_time_uniform(seed in any::<u64>()) {
        let (spec, params) = certified(Family::SubQ2, seed);
        let t_big = params.t_horizon;
        let base = feasibility::check_max_conditions_sub_q2(&params, &spec, 0.0).unwrap().margins();
        for t in [0.5 * t_big, 0.99 * t_big] {
            let m = feasibility::check_max_conditions_sub_q2(&params, &spec, t).unwrap().margins();
            for (x, y) in m.iter().zip(&base) {
                prop_assert!((x - y).abs() <= 1e-10 * (1.0 + y.abs()), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn super_q2_margins_depend_on_omega_and_c(seed in any::<u64>(), scale in 0.2f64..0.99) {
        let (spec, params) = certified(Family::SuperQ2, seed);
        // same omega, smaller C: only the C^(p-1) term moves
        let smaller = params.with_amplitude(scale * params.c, spec.m);
        let a = feasibility::check_super_q2(&params, &spec);
        let b = feasibility::check_super_q2(&smaller, &spec);
        let (ca, cb) = (a.check("cutoff_drift").unwrap(), b.check("cutoff_drift").unwrap());
        prop_assert!((ca.margin - cb.margin).abs() <= 1e-12 * (1.0 + ca.margin.abs()));
        let (ka, kb) = (a.check("core_balance").unwrap(), b.check("core_balance").unwrap());
        prop_assert!((ka.lhs - kb.lhs).abs() <= 1e-12 * ka.lhs.abs());
        let shift = params.c.powf(spec.p - 1.0) - smaller.c.powf(spec.p - 1.0);
        prop_assert!(((ka.rhs - kb.rhs) - shift).abs() <= 1e-12 * (1.0 + ka.rhs.abs()));
    }

    #[test]
    fn certified_barriers_have_no_violations(fam in family(), seed in any::<u64>(), real in 0usize..7) {
        let (spec, params) = certified(fam, seed);
        let density = realizations(&spec.density).swap_remove(real);
        let s = with_density(&spec, density);
        let grid = GridSpec::new(60, 12);
        let report = if fam.is_super() {
            verifier::verify_supersolution(&params, &s, &grid)
        } else {
            verifier::verify_subsolution(&params, &s, &grid)
        };
        let report = report.unwrap();
        prop_assert!(report.pass(), "worst margin {}", report.worst_margin);
    }

    #[test]
    fn residual_below_phi_bound(seed in any::<u64>(), rf in 0.0f64..1.0, frac in 0.0f64..1.0) {
        let (spec, params) = certified(Family::SubQ2, seed);
        let t = sample_t(&params, frac);
        let front = barriers::support_radius(&params, t).unwrap().finite().unwrap();
        let log_r = 1.0 + rf * (front.ln().min(100.0) - 1.0).max(0.0);
        let r = log_r.exp();
        if let Some((res, bound)) = verifier::phi_bound(&params, &spec, r, t).unwrap() {
            prop_assert!(res <= bound + 1e-9 * (1.0 + bound.abs()), "{res} > {bound}");
        }
    }

    #[test]
    fn config_round_trips(seed in any::<u64>(), fam in family()) {
        let spec = draw(&mut rng(seed), fam);
        let back: Config = Config::from_problem(&spec).render().parse().unwrap();
        prop_assert_eq!(back.problem().unwrap(), spec);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn initial_data_nonincreasing(fam in family(), seed in any::<u64>()) {
        let (spec, params) = certified(fam, seed);
        let r_max = if fam == Family::SubQ2 { 3.0 * E } else { 50.0 };
        let values: Vec<f64> = (0..=500).map(|i| r_max * i as f64 / 500.0).map(|r| match fam {
            Family::SuperQ2 => model::initial_datum_supersolution_q2(&params, &spec).unwrap()(r),
            Family::SubQ2 => model::initial_datum_subsolution_q2(&params, &spec).unwrap()(r),
            Family::SuperQgt2 => model::initial_datum_supersolution_qgt2(&params, &spec).unwrap()(r),
        }).collect();
        prop_assert!(values.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14)));
    }

    #[test]
    fn solver_keeps_nonnegative(seed in any::<u64>(), width in 0.5f64..3.0, height in 0.1f64..2.0) {
        let spec = draw(&mut rng(seed), Family::SuperQ2);
        let grid = RadialGrid::new(4.0, 100).unwrap();
        let mut cfg = SolverConfig::new(grid, 1e-3);
        cfg.n_snapshots = 5;
        let u0 = RadialField::from_fn(grid, |r| if r < width { height * (1.0 - r / width) } else { 0.0 });
        let traj = Solver::new(&spec, &cfg).unwrap().solve(&u0).unwrap();
        for s in &traj.snapshots {
            prop_assert!(s.u.iter().all(|&v| v >= 0.0));
        }
    }
}

#[test]
fn k_constant_positive_on_grid() {
    for i in 1..=50 {
        for j in 1..=50 {
            let m = 1.0 + 4.0 * i as f64 / 50.0;
            let p = 1.0 + 4.0 * j as f64 / 50.0;
            assert!(feasibility::compute_k(m, p).unwrap().value > 0.0, "K({m}, {p})");
        }
    }
}

#[test]
fn s_profile_glues_at_e() {
    let below = (E * E + E * E) / (2.0 * E * E);
    assert_eq!(model::s_profile(E), 1.0);
    assert!((model::s_profile(E * (1.0 - 1e-15)) - below).abs() <= 1e-14);
    assert!((model::s_profile_dr(E) - 1.0 / E).abs() <= 1e-14);
    assert!((model::s_profile_dr(E * (1.0 - 1e-16)) - 1.0 / E).abs() <= 1e-14);
}

#[test]
fn finite_propagation_against_barenblatt() {
    // unit density, no reaction, Barenblatt data at t = 1/2: the front at
    // t = 1 stays under 3x the matched Barenblatt front
    let (n, m) = (3.0, 2.0);
    let spec = ProblemSpec::new(3, m, 2.0, DensityModel::exact_power(2.0, 1.0, 1.0).unwrap()).unwrap();
    let front = solver::barenblatt_front(n, m, 1.0, 1.0);
    let grid = RadialGrid::new(2.0 * front, 400).unwrap();
    let mut cfg = SolverConfig::new(grid, 0.5);
    cfg.n_snapshots = 1;
    let u0 = RadialField::from_fn(grid, |r| solver::barenblatt(n, m, 1.0, r, 0.5));
    let traj = Solver::porous_medium(&spec, &cfg).unwrap().solve(&u0).unwrap();
    assert!(traj.last().u.iter().rposition(|&v| v > solver::FRONT_LEVEL).unwrap() as f64 * grid.h() < 3.0 * front);
}
