//! Densities, problem data, radial grids and initial data.

use std::f64::consts::{E, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::barriers::{self, BarrierParams, Family};
use crate::error::{Error, Result};

/// Radial base of the density envelope.
///
/// `Shifted` realizes `1/rho = k (r + r0)^q` and matches the shifted
/// two-sided envelope. `Exterior` realizes `1/rho = k max(r, e)^q`, i.e. the
/// exterior-ball envelope `k1 |x|^q <= 1/rho <= k2 |x|^q` for `|x| >= e`
/// with a flat core inside `B_e`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityForm {
    Shifted,
    Exterior,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityProfile {
    /// Fixed envelope coefficient `k`, which must lie in `[k1, k2]`.
    ExactPower(f64),
    /// Coefficient oscillating between `k1` and `k2`, fixed by the seed.
    Perturbed(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct Oscillation {
    freq: [f64; 2],
    phase: [f64; 2],
}

impl Oscillation {
    fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            freq: [rng.gen_range(0.3..2.0), rng.gen_range(2.0..7.0)],
            phase: [rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI)],
        }
    }

    /// Value in `[0, 1]`.
    fn weight(&self, r: f64) -> f64 {
        let s = 0.7 * (self.freq[0] * r + self.phase[0]).sin()
            + 0.3 * (self.freq[1] * r + self.phase[1]).sin();
        0.5 * (1.0 + s)
    }
}

/// Realization of the density `rho(x) = rho(|x|)` together with its envelope
/// constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityModel {
    pub q: f64,
    pub k1: f64,
    pub k2: f64,
    pub r0: f64,
    pub form: DensityForm,
    pub profile: DensityProfile,
    #[serde(skip)]
    osc: Option<Oscillation>,
}

impl DensityModel {
    pub fn new(
        q: f64,
        k1: f64,
        k2: f64,
        r0: f64,
        form: DensityForm,
        profile: DensityProfile,
    ) -> Result<Self> {
        if !(q >= 2.0 && q.is_finite()) {
            return Err(Error::InvalidProblem(format!("decay order q = {q} must be >= 2")));
        }
        if !(k1 > 0.0 && k2 >= k1 && k2.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "envelope constants need 0 < k1 <= k2, got k1 = {k1}, k2 = {k2}"
            )));
        }
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::InvalidProblem(format!("shift r0 = {r0} must be > 0")));
        }
        let osc = match profile {
            DensityProfile::ExactPower(k) => {
                if !(k >= k1 && k <= k2) {
                    return Err(Error::InvalidProblem(format!(
                        "exact-power coefficient {k} outside [{k1}, {k2}]"
                    )));
                }
                None
            }
            DensityProfile::Perturbed(seed) => Some(Oscillation::from_seed(seed)),
        };
        Ok(Self { q, k1, k2, r0, form, profile, osc })
    }

    /// `1/rho = k (r + r0)^q` with `k1 = k2 = k`.
    pub fn exact_power(q: f64, k: f64, r0: f64) -> Result<Self> {
        Self::new(q, k, k, r0, DensityForm::Shifted, DensityProfile::ExactPower(k))
    }

    /// `1/rho = k max(r, e)^q` with `k1 = k2 = k`.
    pub fn exterior_power(q: f64, k: f64) -> Result<Self> {
        Self::new(q, k, k, E, DensityForm::Exterior, DensityProfile::ExactPower(k))
    }

    /// Same envelope, different realization.
    pub fn with_profile(&self, profile: DensityProfile) -> Result<Self> {
        Self::new(self.q, self.k1, self.k2, self.r0, self.form, profile)
    }

    fn base(&self, r: f64) -> f64 {
        match self.form {
            DensityForm::Shifted => r + self.r0,
            DensityForm::Exterior => r.max(E),
        }
    }

    fn coefficient(&self, r: f64) -> f64 {
        match (self.profile, &self.osc) {
            (DensityProfile::ExactPower(k), _) => k,
            (DensityProfile::Perturbed(_), Some(osc)) => self.k1 + (self.k2 - self.k1) * osc.weight(r),
            (DensityProfile::Perturbed(seed), None) => {
                self.k1 + (self.k2 - self.k1) * Oscillation::from_seed(seed).weight(r)
            }
        }
    }

    /// `1/rho(r)`.
    pub fn inv_rho(&self, r: f64) -> f64 {
        self.coefficient(r) * self.base(r).powf(self.q)
    }

    pub fn rho(&self, r: f64) -> f64 {
        1.0 / self.inv_rho(r)
    }

    /// Lower envelope wall for `1/rho` at radius `r`.
    pub fn lower_wall(&self, r: f64) -> f64 {
        self.k1 * self.base(r).powf(self.q)
    }

    /// Upper envelope wall for `1/rho` at radius `r`.
    pub fn upper_wall(&self, r: f64) -> f64 {
        self.k2 * self.base(r).powf(self.q)
    }

    fn k_range(&self) -> (f64, f64) {
        match self.profile {
            DensityProfile::ExactPower(k) => (k, k),
            DensityProfile::Perturbed(_) => (self.k1, self.k2),
        }
    }

    /// Lower bound `rho1(R)` of `1/rho` on the closed ball of radius `big_r`.
    /// Both realizations attain their minimal base at the origin, so the bound
    /// does not depend on the radius.
    pub fn rho1(&self, _big_r: f64) -> f64 {
        let (klo, _) = self.k_range();
        klo * self.base(0.0).powf(self.q)
    }

    /// Upper bound `rho2(R)` of `1/rho` on the closed ball of radius `big_r`
    /// (the exact supremum for exact-power profiles).
    pub fn rho2(&self, big_r: f64) -> f64 {
        let (_, khi) = self.k_range();
        khi * self.base(big_r).powf(self.q)
    }

    /// Shifted-envelope constants `(k1, k2, r0)` with
    /// `k1 (r + r0)^q <= 1/rho <= k2 (r + r0)^q` everywhere.
    pub fn shifted_envelope(&self) -> (f64, f64, f64) {
        match self.form {
            DensityForm::Shifted => (self.k1, self.k2, self.r0),
            // max(r, e) <= r + e <= 2 max(r, e)
            DensityForm::Exterior => (self.k1 * 2f64.powf(-self.q), self.k2, E),
        }
    }

    /// Exterior-ball constants `(k1, k2)` with
    /// `k1 r^q <= 1/rho <= k2 r^q` for `r >= big_r`.
    pub fn exterior_envelope(&self, big_r: f64) -> (f64, f64) {
        match self.form {
            DensityForm::Shifted => (self.k1, self.k2 * (1.0 + self.r0 / big_r).powf(self.q)),
            DensityForm::Exterior => {
                if big_r >= E {
                    (self.k1, self.k2)
                } else {
                    (self.k1, self.k2 * (E / big_r).powf(self.q))
                }
            }
        }
    }
}

/// Free evaluation entry point: `rho(r)` for `r >= 0`.
pub fn eval_density(model: &DensityModel, r: f64) -> f64 {
    model.rho(r)
}

/// Dimension, exponents and density of one Cauchy problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub n_dim: usize,
    pub m: f64,
    pub p: f64,
    pub density: DensityModel,
}

impl ProblemSpec {
    pub fn new(n_dim: usize, m: f64, p: f64, density: DensityModel) -> Result<Self> {
        if n_dim < 3 {
            return Err(Error::InvalidProblem(format!("dimension N = {n_dim} must be >= 3")));
        }
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidProblem(format!("reaction exponent p = {p} must be > 1")));
        }
        // m = 1 is admissible only in the linear-diffusion case q > 2, p > m.
        let linear_ok = m == 1.0 && density.q > 2.0 && p > m;
        if !(m > 1.0 || linear_ok) || !m.is_finite() {
            return Err(Error::InvalidProblem(format!("diffusion exponent m = {m} not admissible")));
        }
        Ok(Self { n_dim, m, p, density })
    }

    pub fn n(&self) -> f64 {
        self.n_dim as f64
    }
}

/// Uniform nodes `r_i = i h`, `i = 0..=n_cells`, on `[0, r_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub r_max: f64,
    pub n_cells: usize,
}

impl RadialGrid {
    pub fn new(r_max: f64, n_cells: usize) -> Result<Self> {
        if !(r_max > 0.0 && r_max.is_finite()) || n_cells < 2 {
            return Err(Error::InvalidProblem(format!(
                "grid needs r_max > 0 and at least two cells (r_max = {r_max}, n_cells = {n_cells})"
            )));
        }
        Ok(Self { r_max, n_cells })
    }

    pub fn h(&self) -> f64 {
        self.r_max / self.n_cells as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_cells {
            self.r_max
        } else {
            i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n_cells).map(|i| self.node(i)).collect()
    }

    pub fn len(&self) -> usize {
        self.n_cells + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// `s(r) = log r` outside `B_e`, `(r^2 + e^2) / (2 e^2)` inside.
pub fn s_profile(r: f64) -> f64 {
    if r >= E {
        r.ln()
    } else {
        (r * r + E * E) / (2.0 * E * E)
    }
}

/// Radial derivative of [`s_profile`].
pub fn s_profile_dr(r: f64) -> f64 {
    if r >= E {
        1.0 / r
    } else {
        r / (E * E)
    }
}

/// Largest admissible initial datum for the `q = 2` global-existence
/// barrier: the supersolution at `t = 0`.
pub fn initial_datum_supersolution_q2(
    params: &BarrierParams,
    spec: &ProblemSpec,
) -> Result<impl Fn(f64) -> f64 + Send + Sync + Clone> {
    require_certified(params, Family::SuperQ2)?;
    let (params, spec) = (params.clone(), spec.clone());
    Ok(move |r: f64| barriers::eval_super_q2(&params, &spec, r, 0.0).value)
}

/// Smallest initial datum forcing blow-up: the `q = 2` subsolution at `t = 0`.
pub fn initial_datum_subsolution_q2(
    params: &BarrierParams,
    spec: &ProblemSpec,
) -> Result<impl Fn(f64) -> f64 + Send + Sync + Clone> {
    require_certified(params, Family::SubQ2)?;
    let (params, spec) = (params.clone(), spec.clone());
    Ok(move |r: f64| {
        barriers::eval_sub_q2(&params, &spec, r, 0.0)
            .map(|ev| ev.value)
            .unwrap_or(f64::INFINITY)
    })
}

/// Cap for the `q > 2` barrier at `t = 0`; never compactly supported.
pub fn initial_datum_supersolution_qgt2(
    params: &BarrierParams,
    spec: &ProblemSpec,
) -> Result<impl Fn(f64) -> f64 + Send + Sync + Clone> {
    require_certified(params, Family::SuperQgt2)?;
    let (params, spec) = (params.clone(), spec.clone());
    Ok(move |r: f64| barriers::eval_super_qgt2(&params, &spec, r, 0.0).value)
}

fn require_certified(params: &BarrierParams, family: Family) -> Result<()> {
    if params.family != family {
        return Err(Error::Domain(format!(
            "expected {family:?} parameters, got {:?}",
            params.family
        )));
    }
    if !params.certified {
        return Err(Error::InfeasibleParams);
    }
    Ok(())
}
