//! Random problem draws shared by the integration tests. Draws carry a
//! perturbed profile so that certificates cover the whole envelope
//! `[k1, k2]`.

#![allow(dead_code)]

use std::f64::consts::E;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use wpme::barriers::Family;
use wpme::model::{DensityForm, DensityModel, DensityProfile, ProblemSpec};

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn envelope(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let k1 = rng.gen_range(0.5..2.0);
    (k1, k1 * rng.gen_range(1.0..1.5))
}

/// `q = 2`, shifted density, `p > m`, with `r0` large enough for the shift
/// condition.
pub fn draw_super_q2(rng: &mut ChaCha8Rng) -> ProblemSpec {
    let n_dim = rng.gen_range(3..=8);
    let m = rng.gen_range(1.2..3.0);
    let p = m + rng.gen_range(0.3..3.0);
    let (k1, k2) = envelope(rng);
    let need = (k2 / k1) * (p - 1.0) / ((n_dim as f64 - 2.0) * (m - 1.0) * (p - m));
    let log_r0 = need.max(1.0) * rng.gen_range(1.2..3.0);
    let density = DensityModel::new(2.0, k1, k2, log_r0.exp(), DensityForm::Shifted, DensityProfile::Perturbed(0))
        .unwrap();
    ProblemSpec::new(n_dim, m, p, density).unwrap()
}

/// `q = 2`, exterior density, `p > m`.
pub fn draw_sub_q2(rng: &mut ChaCha8Rng) -> ProblemSpec {
    let n_dim = rng.gen_range(3..=8);
    let m = rng.gen_range(1.2..3.0);
    let p = m + rng.gen_range(0.3..3.0);
    let (k1, k2) = envelope(rng);
    let density = DensityModel::new(2.0, k1, k2, E, DensityForm::Exterior, DensityProfile::Perturbed(0)).unwrap();
    ProblemSpec::new(n_dim, m, p, density).unwrap()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PVsM {
    Below,
    Above,
    Equal,
}

/// `q > 2`, shifted density with `r0 >= 1`; for `p = m` the shift is raised
/// until the diffusion bound holds.
pub fn draw_super_qgt2(rng: &mut ChaCha8Rng, regime: PVsM) -> ProblemSpec {
    let n_dim = rng.gen_range(3..=8);
    let q = rng.gen_range(2.2..6.0);
    let m = rng.gen_range(1.2..3.0);
    let p = match regime {
        PVsM::Below => rng.gen_range(1.05..m - 0.1),
        PVsM::Above => m + rng.gen_range(0.1..2.0),
        PVsM::Equal => m,
    };
    let (k1, k2) = envelope(rng);
    let mut r0: f64 = rng.gen_range(1.0..5.0);
    if regime == PVsM::Equal {
        let b = (n_dim as f64 - 2.0).min(q - 2.0) / 2.0;
        let kappa = b * k1 * (n_dim as f64 - 2.0 - b);
        r0 = r0.max(kappa.powf(-m / (b * p)) * rng.gen_range(1.0..3.0));
    }
    let density = DensityModel::new(q, k1, k2, r0, DensityForm::Shifted, DensityProfile::Perturbed(0)).unwrap();
    ProblemSpec::new(n_dim, m, p, density).unwrap()
}

pub fn draw(rng: &mut ChaCha8Rng, family: Family) -> ProblemSpec {
    match family {
        Family::SuperQ2 => draw_super_q2(rng),
        Family::SubQ2 => draw_sub_q2(rng),
        Family::SuperQgt2 => {
            let regime = [PVsM::Below, PVsM::Above, PVsM::Equal][rng.gen_range(0..3)];
            draw_super_qgt2(rng, regime)
        }
    }
}

/// ExactPower at `k1` and `k2`, then five perturbed seeds.
pub fn realizations(density: &DensityModel) -> Vec<DensityModel> {
    let mut out = vec![
        density.with_profile(DensityProfile::ExactPower(density.k1)).unwrap(),
        density.with_profile(DensityProfile::ExactPower(density.k2)).unwrap(),
    ];
    out.extend((1..=5).map(|s| density.with_profile(DensityProfile::Perturbed(s)).unwrap()));
    out
}

pub fn with_density(spec: &ProblemSpec, density: DensityModel) -> ProblemSpec {
    ProblemSpec { density, ..spec.clone() }
}
