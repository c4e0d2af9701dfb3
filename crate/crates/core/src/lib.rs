//! Weighted porous medium equation with reaction,
//!
//! ```text
//! rho(x) u_t = Laplacian(u^m) + rho(x) u^p,   1/rho(x) ~ |x|^q,  q >= 2,
//! ```
//!
//! studied through explicit barriers. The crate builds the super- and
//! subsolution families, solves the parameter inequality systems that make
//! them barriers, certifies the differential inequalities numerically and
//! integrates the radial problem to watch solutions stay between the
//! barriers (global existence) or blow up in finite time.
//!
//! Module map:
//!
//! * [`model`]: densities, problem data, radial grids, the `s` profile and
//!   the initial-datum caps/floors.
//! * [`barriers`]: closed-form barrier families with analytic derivatives.
//! * [`feasibility`]: inequality checks and constructive parameter solvers.
//! * [`verifier`]: pointwise residual certification on sample grids.
//! * [`solver`]: explicit radial finite-volume integrator with blow-up
//!   detection and front tracking.
//! * [`experiment`]: end-to-end experiments, regime sweeps and reports.
//! * [`config`]: the flat `key = value` file format shared by all of the above.

pub mod barriers;
pub mod config;
pub mod error;
pub mod experiment;
pub mod feasibility;
pub mod model;
pub mod output;
pub mod solver;
pub mod verifier;

pub use error::{Error, Result};
