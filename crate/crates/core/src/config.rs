//! Flat `key = value` configuration files.
//!
//! ```text
//! # worked q = 2 instance
//! n_dim = 4
//! m = 2
//! p = 3
//! density.q = 2
//! density.k = 1
//! density.r0 = 7.38905609893065
//! solver.n_cells = 2000
//! ```
//!
//! Blank lines and `#` comments are ignored. Keys are dotted paths, values
//! decimal text or bare words. Unknown keys are rejected so that typos do
//! not silently fall back to defaults.

use std::collections::BTreeMap;
use std::f64::consts::E;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::barriers::{BarrierParams, Family};
use crate::error::{Error, Result};
use crate::model::{DensityForm, DensityModel, DensityProfile, ProblemSpec};
use crate::verifier::GridSpec;

const KNOWN: &[&str] = &[
    "n_dim",
    "m",
    "p",
    "density.q",
    "density.k",
    "density.k1",
    "density.k2",
    "density.r0",
    "density.form",
    "density.profile",
    "density.seed",
    "params.family",
    "params.c",
    "params.a",
    "params.t_horizon",
    "params.alpha",
    "params.b_bar",
    "params.c_bar",
    "params.rho2",
    "solver.n_cells",
    "solver.r_max",
    "solver.cfl",
    "solver.u_blowup",
    "solver.dt_min",
    "solver.t_end",
    "solver.n_snapshots",
    "experiment.kind",
    "experiment.data_scale",
    "verify.n_r",
    "verify.n_t",
    "verify.r_max",
    "verify.t_max",
    "verify.eps_frac",
    "sweep.n_dim",
    "sweep.m",
    "sweep.p",
    "sweep.q",
    "sweep.r0",
    "sweep.t_end",
    "sweep.n_cells",
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl FromStr for Config {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim().to_string();
            if !KNOWN.contains(&key.as_str()) {
                return Err(Error::Config(format!("line {}: unknown key `{key}`", lineno + 1)));
            }
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Ok(Self { entries })
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> Result<()> {
        if !KNOWN.contains(&key) {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get_str(key)
            .map(|v| {
                parse_value::<T>(v).ok_or_else(|| Error::Config(format!("`{key}`: cannot parse `{v}`")))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        let Some(raw) = self.get_str(key) else { return Ok(None) };
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|v| parse_value::<T>(v).ok_or_else(|| Error::Config(format!("`{key}`: cannot parse `{v}`"))))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    pub fn density(&self) -> Result<DensityModel> {
        let q = self.get_or("density.q", 2.0)?;
        let k = self.get("density.k")?;
        let k1 = self.get("density.k1")?.or(k).unwrap_or(1.0);
        let k2 = self.get("density.k2")?.or(k).unwrap_or(k1);
        let form = match self.get_str("density.form").unwrap_or("shifted") {
            "shifted" => DensityForm::Shifted,
            "exterior" => DensityForm::Exterior,
            other => return Err(Error::Config(format!("unknown density.form `{other}`"))),
        };
        let r0 = match form {
            DensityForm::Shifted => self.require("density.r0")?,
            DensityForm::Exterior => self.get_or("density.r0", E)?,
        };
        let profile = match self.get_str("density.profile").unwrap_or("exact") {
            "exact" => DensityProfile::ExactPower(k.unwrap_or(k1)),
            "perturbed" => DensityProfile::Perturbed(self.get_or("density.seed", 0u64)?),
            other => return Err(Error::Config(format!("unknown density.profile `{other}`"))),
        };
        DensityModel::new(q, k1, k2, r0, form, profile)
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        ProblemSpec::new(
            self.require("n_dim")?,
            self.require("m")?,
            self.require("p")?,
            self.density()?,
        )
    }

    pub fn family(&self) -> Result<Option<Family>> {
        self.get_str("params.family").map(parse_family).transpose()
    }

    /// Explicit barrier parameters, if `params.family` and `params.c` are set.
    /// The result is uncertified; callers re-run the feasibility check.
    pub fn overrides(&self, spec: &ProblemSpec) -> Result<Option<BarrierParams>> {
        let Some(family) = self.family()? else { return Ok(None) };
        let Some(c) = self.get::<f64>("params.c")? else { return Ok(None) };
        let (m, p) = (spec.m, spec.p);
        let t_horizon = self.get_or("params.t_horizon", 1.0)?;
        let params = match family {
            Family::SuperQ2 => {
                BarrierParams::super_q2(c, self.require("params.a")?, t_horizon, m, p, spec.density.r0)
            }
            Family::SubQ2 => BarrierParams::sub_q2(
                c,
                self.require("params.a")?,
                t_horizon,
                m,
                p,
                self.get_or("params.rho2", spec.density.rho2(E))?,
            ),
            Family::SuperQgt2 => BarrierParams::super_qgt2(
                c,
                self.get_or("params.alpha", 0.0)?,
                t_horizon,
                self.require("params.b_bar")?,
                self.require("params.c_bar")?,
                spec.density.shifted_envelope().2,
            ),
        };
        Ok(Some(params))
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        let d = GridSpec::default();
        Ok(GridSpec {
            n_r: self.get_or("verify.n_r", d.n_r)?,
            n_t: self.get_or("verify.n_t", d.n_t)?,
            r_max: self.get("verify.r_max")?,
            t_max: self.get("verify.t_max")?,
            eps_frac: self.get_or("verify.eps_frac", d.eps_frac)?,
        })
    }

    /// Render back to the file format (sorted keys).
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Config describing `spec`, suitable for [`Config::problem`].
    pub fn from_problem(spec: &ProblemSpec) -> Self {
        let d = &spec.density;
        let mut c = Self::default();
        let mut put = |k: &str, v: String| {
            c.entries.insert(k.to_string(), v);
        };
        put("n_dim", spec.n_dim.to_string());
        put("m", spec.m.to_string());
        put("p", spec.p.to_string());
        put("density.q", d.q.to_string());
        put("density.k1", d.k1.to_string());
        put("density.k2", d.k2.to_string());
        put("density.r0", d.r0.to_string());
        put(
            "density.form",
            match d.form {
                DensityForm::Shifted => "shifted",
                DensityForm::Exterior => "exterior",
            }
            .to_string(),
        );
        match d.profile {
            DensityProfile::ExactPower(k) => {
                put("density.profile", "exact".into());
                put("density.k", k.to_string());
            }
            DensityProfile::Perturbed(seed) => {
                put("density.profile", "perturbed".into());
                put("density.seed", seed.to_string());
            }
        }
        c
    }
}

/// Numbers may be written as `e`, `e^2` or `exp(x)` as well as decimals.
fn parse_value<T: FromStr>(v: &str) -> Option<T> {
    if let Ok(x) = v.parse::<T>() {
        return Some(x);
    }
    let x = if v == "e" {
        E
    } else if let Some(pow) = v.strip_prefix("e^") {
        E.powf(pow.parse::<f64>().ok()?)
    } else {
        v.strip_prefix("exp(")?.strip_suffix(')')?.parse::<f64>().ok()?.exp()
    };
    format!("{x:e}").parse::<T>().ok().or_else(|| x.to_string().parse::<T>().ok())
}

pub fn parse_family(s: &str) -> Result<Family> {
    match s {
        "super_q2" => Ok(Family::SuperQ2),
        "sub_q2" => Ok(Family::SubQ2),
        "super_qgt2" => Ok(Family::SuperQgt2),
        other => Err(Error::Config(format!("unknown family `{other}`"))),
    }
}
