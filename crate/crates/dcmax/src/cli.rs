//! The `dcmax` command line.

use std::path::Path;
use std::time::Instant;

use clap::{Parser, Subcommand};
use dcmax_core::phase_oracle::StationaryClassification;
use dcmax_core::{
    build_phase_retrieval_model, certify_strong_dstationarity, empirical_risk, mm_solve, CertifyConfig, Dataset,
    FeasibleSet, PhasePopulation, SolveTrace,
};
use serde::{Deserialize, Serialize};

use crate::config::{Overrides, RunConfig};
use crate::error::{Error, Result};
use crate::experiments::{
    angle_to_signal, distance_to_solutions, fit_rate, generate_phase_dataset, normality_check,
    population_risk_mc, replication_stream, run_consistency_experiment, start_point, ExperimentReport,
    GeneratorSpec, MonteCarloEstimate, RateFit,
};
use crate::io;

#[derive(Debug, Parser)]
#[command(name = "dcmax", version, about = "Difference-of-max-convex risk minimization and phase retrieval experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Closed-form population quantities, optionally at `--x`.
    Oracle,
    /// Write a synthetic phase retrieval dataset as CSV.
    Generate,
    /// Run majorization-minimization on one instance.
    Solve,
    /// Test `--x` for composite ε-strong d-stationarity.
    Certify,
    /// Replicated consistency study over the `--n` grid.
    Experiment,
    /// Fit the log-log slope of median distances against N.
    Rate,
    /// Normalized-statistic summary at the first `--n`.
    Normality,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Oracle => "oracle",
            Command::Generate => "generate",
            Command::Solve => "solve",
            Command::Certify => "certify",
            Command::Experiment => "experiment",
            Command::Rate => "rate",
            Command::Normality => "normality",
        }
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let config = cli.overrides.resolve()?;
    execute(cli.command, &config)?;
    Ok(())
}

fn is_csv(path: Option<&Path>) -> bool {
    path.and_then(Path::extension).is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn execute(command: Command, config: &RunConfig) -> Result<()> {
    let out = config.out.as_deref();
    let name = command.name();
    match command {
        Command::Oracle => io::write_json(io::sink(out)?, name, config, &oracle(config)?),
        Command::Generate => io::write_dataset(io::sink(out)?, config, &single_dataset(config)?),
        Command::Solve => {
            let result = solve(config)?;
            if is_csv(out) {
                io::write_trace(io::sink(out)?, config, &result.trace)
            } else {
                io::write_json(io::sink(out)?, name, config, &result)
            }
        }
        Command::Certify => {
            let data = input_dataset(config)?;
            let x = config.x.clone().ok_or_else(|| Error::Config("certify needs a point (--x)".into()))?;
            let model = build_phase_retrieval_model(config.p)?;
            let cc = CertifyConfig {
                eps: config.eps.unwrap_or(0.0),
                budget: config.budget,
                seed: config.seed,
                ..CertifyConfig::default()
            };
            let cert = certify_strong_dstationarity(&model, config.loss, &data, &feasible(config), &x, &cc)?;
            io::write_json(io::sink(out)?, name, config, &cert)
        }
        Command::Experiment => {
            let report = run_consistency_experiment(&config.experiment())?;
            if is_csv(out) {
                io::write_records(io::sink(out)?, config, &report.records)
            } else {
                io::write_json(io::sink(out)?, name, config, &report)
            }
        }
        Command::Rate => {
            let report = match &config.report {
                Some(path) => io::read_json::<ExperimentReport>(path)?.result,
                None => run_consistency_experiment(&config.experiment())?,
            };
            let fit = fit_rate(&report.medians())?;
            io::write_json(io::sink(out)?, name, config, &RateOutput { medians: report.medians(), fit })
        }
        Command::Normality => {
            let population = PhasePopulation::new(config.signal(), config.sigma)?;
            let summary = normality_check(&config.experiment(), config.first_n(), &population)?;
            io::write_json(io::sink(out)?, name, config, &summary)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateOutput {
    pub medians: Vec<(usize, f64)>,
    pub fit: RateFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleOutput {
    pub signal_norm: f64,
    pub risk_at_signal: f64,
    pub risk_at_origin: f64,
    pub saddle_radius: f64,
    pub saddle_value: f64,
    pub query: Option<OracleQuery>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleQuery {
    pub x: Vec<f64>,
    pub risk: f64,
    /// Absent at the origin.
    pub gradient: Option<Vec<f64>>,
    pub angle_to_solutions: f64,
    pub classification: StationaryClassification,
    pub monte_carlo: MonteCarloEstimate,
}

fn oracle(config: &RunConfig) -> Result<OracleOutput> {
    let pop = PhasePopulation::new(config.signal(), config.sigma)?;
    let query = match &config.x {
        Some(x) => {
            let model = build_phase_retrieval_model(config.p)?;
            Some(OracleQuery {
                x: x.clone(),
                risk: pop.population_risk(x)?,
                gradient: pop.population_gradient(x).ok(),
                angle_to_solutions: pop.angle_to_solutions(x)?,
                classification: pop.classify_stationary(x, 1e-8)?,
                monte_carlo: population_risk_mc(&model, config.loss, &pop.signal, pop.sigma, x, config.draws, config.seed)?,
            })
        }
        None => None,
    };
    Ok(OracleOutput {
        signal_norm: pop.signal_norm(),
        risk_at_signal: pop.population_risk(&pop.signal)?,
        risk_at_origin: pop.population_risk(&vec![0.0; config.p])?,
        saddle_radius: pop.saddle_radius(),
        saddle_value: pop.saddle_value(),
        query,
    })
}

fn feasible(config: &RunConfig) -> FeasibleSet {
    FeasibleSet::Ball { radius: config.experiment().radius() }
}

/// Replication 0 of the first sample size, the same data `experiment` uses.
fn single_dataset(config: &RunConfig) -> Result<Dataset> {
    let n = config.first_n();
    generate_phase_dataset(&GeneratorSpec {
        seed: config.seed,
        stream: replication_stream(n, 0),
        signal: config.signal(),
        sigma: config.sigma,
        n,
    })
}

fn input_dataset(config: &RunConfig) -> Result<Dataset> {
    let data = match &config.data {
        Some(path) => io::load_dataset(path)?,
        None => single_dataset(config)?,
    };
    if data.feature_dim() != config.p {
        return Err(Error::Config(format!("dataset has dimension {}, expected p = {}", data.feature_dim(), config.p)));
    }
    Ok(data)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOutput {
    pub start: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub objective: f64,
    pub distance_to_solutions: f64,
    pub angle_to_signal: f64,
    pub trace: SolveTrace,
}

fn solve(config: &RunConfig) -> Result<SolveOutput> {
    let data = input_dataset(config)?;
    let signal = config.signal();
    let start = start_point(&config.start, &signal, config.seed, config.first_n(), 0);
    let model = build_phase_retrieval_model(config.p)?;
    let clock = Instant::now();
    let (x, mut trace) = mm_solve(&model, config.loss, &data, &feasible(config), &start, &config.solver())?;
    trace.wall_clock_secs = clock.elapsed().as_secs_f64();
    Ok(SolveOutput {
        objective: empirical_risk(&model, config.loss, &data, &x)?,
        distance_to_solutions: distance_to_solutions(&x, &signal),
        angle_to_signal: angle_to_signal(&x, &signal),
        start,
        x_hat: x,
        trace,
    })
}
