use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wpme::barriers::Family;
use wpme::config::{self, Config};
use wpme::experiment::{self, ExperimentKind, ExperimentSpec, Status};
use wpme::feasibility::{self, Certified};
use wpme::output;
use wpme::verifier;
use wpme::{Error, Result};

#[derive(Parser)]
#[command(name = "wpme", version, about = "Barriers, residual checks and radial simulation for the weighted porous medium equation with reaction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(short, long)]
    config: PathBuf,
    /// Seed for the perturbed density profile; ignored for exact profiles.
    #[arg(long)]
    seed: Option<u64>,
    /// Extra `key=value` settings applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<Config> {
        let mut cfg = Config::load(&self.config)?;
        for kv in &self.sets {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        if let Some(seed) = self.seed {
            cfg.set("density.seed", seed)?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve (or re-check) a barrier parameter system; exit 0 iff feasible.
    Feasibility {
        #[command(flatten)]
        common: Common,
        /// super_q2, sub_q2 or super_qgt2; defaults from q.
        #[arg(long)]
        family: Option<String>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the PDE residual of a certified barrier.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        n_r: Option<usize>,
        #[arg(long)]
        n_t: Option<usize>,
        #[arg(long)]
        eps_frac: Option<f64>,
        /// exact or perturbed
        #[arg(long)]
        profile: Option<String>,
        /// Directory for report.json and worst_samples.csv.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Solve from the barrier-shaped datum and write snapshots and series.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        data_scale: Option<f64>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run a barrier-comparison experiment with assertions.
    Experiment {
        #[command(flatten)]
        common: Common,
        /// Overrides `experiment.kind`.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        data_scale: Option<f64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Regime sweep; writes one CSV row per cell.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// CSV destination; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn default_family(cfg: &Config, flag: &Option<String>) -> Result<Family> {
    if let Some(f) = flag {
        return config::parse_family(f);
    }
    if let Some(f) = cfg.family()? {
        return Ok(f);
    }
    let q: f64 = cfg.get_or("density.q", 2.0)?;
    Ok(if q == 2.0 { Family::SuperQ2 } else { Family::SuperQgt2 })
}

fn certify(cfg: &Config, family: Family) -> Result<std::result::Result<Certified, feasibility::FeasibilityReport>> {
    let spec = cfg.problem()?;
    let result = experiment::certify(family, &spec, &cfg.overrides(&spec)?);
    match result {
        Ok(c) => Ok(Ok(c)),
        Err(Error::Infeasible(rep)) => Ok(Err(*rep)),
        Err(e) => Err(e),
    }
}

fn emit_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => output::write_json(output::create(path)?, value),
        None => output::write_json(std::io::stdout().lock(), value),
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Feasibility { common, family, out } => {
            let cfg = common.load()?;
            let family = default_family(&cfg, &family)?;
            match certify(&cfg, family)? {
                Ok(cert) => {
                    emit_json(&cert, out.as_deref())?;
                    Ok(0)
                }
                Err(report) => {
                    emit_json(&report, out.as_deref())?;
                    Ok(3)
                }
            }
        }
        Command::Verify { common, family, n_r, n_t, eps_frac, profile, out_dir } => {
            let mut cfg = common.load()?;
            if let Some(p) = profile {
                cfg.set("density.profile", p)?;
            }
            let family = default_family(&cfg, &family)?;
            let spec = cfg.problem()?;
            let mut grid = cfg.grid_spec()?;
            grid.n_r = n_r.unwrap_or(grid.n_r);
            grid.n_t = n_t.unwrap_or(grid.n_t);
            grid.eps_frac = eps_frac.unwrap_or(grid.eps_frac);
            let cert = match certify(&cfg, family)? {
                Ok(c) => c,
                Err(report) => {
                    emit_json(&report, None)?;
                    return Ok(3);
                }
            };
            let report = if family.is_super() {
                verifier::verify_supersolution(&cert.params, &spec, &grid)?
            } else {
                verifier::verify_subsolution(&cert.params, &spec, &grid)?
            };
            match &out_dir {
                Some(dir) => {
                    emit_json(&report, Some(&dir.join("report.json")))?;
                    output::write_samples(output::create(&dir.join("worst_samples.csv"))?, &report.worst_samples)?;
                }
                None => emit_json(&report, None)?,
            }
            Ok(if report.pass() { 0 } else { 2 })
        }
        Command::Simulate { common, family, data_scale, out_dir } => {
            let cfg = common.load()?;
            let kind = match default_family(&cfg, &family)? {
                Family::SuperQ2 => ExperimentKind::GlobalExistenceQ2,
                Family::SubQ2 => ExperimentKind::BlowupQ2,
                Family::SuperQgt2 => ExperimentKind::GlobalExistenceQgt2,
            };
            let mut exp = ExperimentSpec::from_config(&cfg, Some(kind))?;
            exp.data_scale = data_scale.unwrap_or(exp.data_scale);
            exp.output_dir = Some(out_dir);
            let report = experiment::run(&exp)?;
            eprintln!("outcome {:?}, {} steps", report.outcome, report.steps);
            Ok(match report.status {
                Status::Infeasible => 3,
                Status::Collapse => 4,
                _ => 0,
            })
        }
        Command::Experiment { common, kind, data_scale, out_dir } => {
            let cfg = common.load()?;
            let kind = kind.map(|k| k.parse()).transpose()?;
            let mut exp = ExperimentSpec::from_config(&cfg, kind)?;
            exp.data_scale = data_scale.unwrap_or(exp.data_scale);
            exp.output_dir = out_dir;
            let report = experiment::run(&exp)?;
            if exp.output_dir.is_none() {
                emit_json(&report, None)?;
            }
            for a in &report.assertions {
                eprintln!("{} {}: {}", if a.pass { "ok  " } else { "FAIL" }, a.name, a.detail);
            }
            eprintln!("status {:?}", report.status);
            Ok(report.exit_code() as u8)
        }
        Command::Sweep { common, out } => {
            let cfg = common.load()?;
            let (cells, settings) = experiment::sweep_from_config(&cfg)?;
            let rows = experiment::sweep(&cells, &settings);
            match out {
                Some(path) => experiment::write_sweep(output::create(&path)?, &rows)?,
                None => experiment::write_sweep(std::io::stdout().lock(), &rows)?,
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            ExitCode::from(1)
        }
    }
}
