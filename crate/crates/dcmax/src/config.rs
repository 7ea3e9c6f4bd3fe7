//! Run configuration. A JSON file supplies any subset of the fields, flags
//! override it, and the resolved result is written next to every output.

use std::path::{Path, PathBuf};

use clap::Args;
use dcmax_core::{LossKind, MMConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{ExperimentConfig, StartPoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Dimension; ignored when `signal` is given.
    pub p: usize,
    /// Defaults to the all-ones vector of length `p`.
    pub signal: Option<Vec<f64>>,
    pub sigma: f64,
    /// Sample sizes; single-instance commands use the first one.
    pub n: Vec<usize>,
    pub reps: usize,
    /// ε of the argmax sets; `None` uses the solver default.
    pub eps: Option<f64>,
    pub prox: f64,
    pub budget: usize,
    pub loss: LossKind,
    /// Radius of the centered ball; `None` means `3‖x̄‖`.
    pub radius: Option<f64>,
    pub start: StartPoint,
    pub tolerance: f64,
    pub max_outer_iterations: usize,
    /// Monte-Carlo draws for `oracle`.
    pub draws: usize,
    /// Query point for `oracle` and `certify`.
    pub x: Option<Vec<f64>>,
    /// Dataset CSV for `solve` and `certify`; generated when absent.
    pub data: Option<PathBuf>,
    /// Experiment report JSON read by `rate` instead of running the study.
    pub report: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = MMConfig::default();
        Self {
            seed: 0,
            p: 20,
            signal: None,
            sigma: 0.1,
            n: vec![400, 800, 1200, 1600, 2000],
            reps: 100,
            eps: None,
            prox: solver.prox,
            budget: solver.budget,
            loss: LossKind::Squared,
            radius: None,
            start: StartPoint::Saddle,
            tolerance: solver.tolerance,
            max_outer_iterations: solver.max_outer_iterations,
            draws: 100_000,
            x: None,
            data: None,
            report: None,
            out: None,
        }
    }
}

/// Flags shared by every subcommand. Each one that is given replaces the
/// corresponding config field.
#[derive(Clone, Debug, Default, Args)]
pub struct Overrides {
    /// JSON config file; flags take precedence over its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub p: Option<usize>,
    /// Comma-separated signal coordinates.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub signal: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Comma-separated sample sizes.
    #[arg(long, global = true, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    #[arg(long, global = true)]
    pub prox: Option<f64>,
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    /// `squared` or `absolute`.
    #[arg(long, global = true, value_parser = parse_loss)]
    pub loss: Option<LossKind>,
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    /// `saddle`, `origin`, or comma-separated coordinates.
    #[arg(long, global = true, value_parser = parse_start, allow_hyphen_values = true)]
    pub start: Option<StartPoint>,
    #[arg(long, global = true)]
    pub draws: Option<usize>,
    /// Comma-separated query point.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

fn parse_loss(s: &str) -> std::result::Result<LossKind, String> {
    match s {
        "squared" => Ok(LossKind::Squared),
        "absolute" => Ok(LossKind::Absolute),
        _ => Err(format!("unknown loss `{s}`, expected `squared` or `absolute`")),
    }
}

fn parse_start(s: &str) -> std::result::Result<StartPoint, String> {
    match s {
        "saddle" => Ok(StartPoint::Saddle),
        "origin" => Ok(StartPoint::Origin),
        _ => s
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| format!("bad start coordinate `{v}`: {e}")))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(|x| StartPoint::Fixed { x }),
    }
}

impl Overrides {
    pub fn apply(&self, config: &mut RunConfig) {
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    config.$field = v.clone().into();
                }
            )*};
        }
        set!(seed, p, sigma, n, reps, prox, budget, loss, start, draws);
        set!(signal, eps, radius, x, data, report, out);
    }

    /// Loads the config file if one is named, then applies the flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        self.apply(&mut config);
        config.normalize();
        config.validate()?;
        Ok(config)
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

impl RunConfig {
    /// Fills `signal` and makes `p` agree with it.
    pub fn normalize(&mut self) {
        match &self.signal {
            Some(s) => self.p = s.len(),
            None => self.signal = Some(vec![1.0; self.p]),
        }
    }

    pub fn signal(&self) -> Vec<f64> {
        self.signal.clone().unwrap_or_else(|| vec![1.0; self.p])
    }

    pub fn first_n(&self) -> usize {
        self.n.first().copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::Config(format!("p must be at least 2, got {}", self.p)));
        }
        if self.n.is_empty() || self.n.contains(&0) {
            return Err(Error::Config("sample sizes must be a nonempty list of positive integers".into()));
        }
        for (name, v) in [("x", &self.x), ("start", &self.start_coordinates())] {
            if let Some(v) = v {
                if v.len() != self.p {
                    return Err(Error::Config(format!("{name} has {} coordinates, expected {}", v.len(), self.p)));
                }
            }
        }
        if let Some(r) = self.radius {
            if !(r > 0.0) {
                return Err(Error::Config(format!("radius must be positive, got {r}")));
            }
        }
        self.solver().validate()?;
        Ok(())
    }

    fn start_coordinates(&self) -> Option<Vec<f64>> {
        match &self.start {
            StartPoint::Fixed { x } => Some(x.clone()),
            _ => None,
        }
    }

    pub fn solver(&self) -> MMConfig {
        MMConfig {
            eps: self.eps,
            prox: self.prox,
            budget: self.budget,
            tolerance: self.tolerance,
            max_outer_iterations: self.max_outer_iterations,
            seed: self.seed,
            ..MMConfig::default()
        }
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            signal: self.signal(),
            sigma: self.sigma,
            sample_sizes: self.n.clone(),
            replications: self.reps,
            base_seed: self.seed,
            loss: self.loss,
            radius: self.radius,
            start: self.start.clone(),
            solver: self.solver(),
        }
    }
}
