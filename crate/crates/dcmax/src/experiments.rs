//! Synthetic phase retrieval data, the replication harness and the
//! statistical summaries computed from it.

use std::f64::consts::PI;
use std::time::Instant;

use dcmax_core::model::sample_losses;
use dcmax_core::rng::Stream;
use dcmax_core::solver::SolveStatus;
use dcmax_core::{
    build_phase_retrieval_model, empirical_risk, mm_solve, Dataset, DifferenceMaxModel, FeasibleSet,
    LossKind, MMConfig, PhasePopulation, Provenance, Verdict,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GENERATOR_NAME: &str = "chacha20/sphere-normalized-gaussian";

/// Stream id reserved for the random start of a replication.
const START_STREAM_BIT: u64 = 1 << 63;

/// Law of `(ξ, z)`: `ξ = ζ/‖ζ‖` with `ζ` standard normal, `z = |x̄ᵀξ| + σε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub seed: u64,
    /// ChaCha stream id; replications use [`replication_stream`].
    pub stream: u64,
    pub signal: Vec<f64>,
    pub sigma: f64,
    pub n: usize,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.signal.len() < 2 {
            return Err(Error::Config(format!("signal dimension must be at least 2, got {}", self.signal.len())));
        }
        if self.signal.iter().any(|v| !v.is_finite()) || self.signal.iter().all(|v| *v == 0.0) {
            return Err(Error::Config("signal must be finite and nonzero".into()));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::Config(format!("sigma must be a finite nonnegative number, got {}", self.sigma)));
        }
        if self.n == 0 {
            return Err(Error::Config("sample count must be positive".into()));
        }
        Ok(())
    }
}

/// Substream of replication `rep` at sample size `n`. Keying by `n` keeps a
/// grid point's data unchanged when other sizes are added to the grid.
pub fn replication_stream(n: usize, rep: usize) -> u64 {
    ((n as u64) << 32) | rep as u64
}

/// Draws one `(ξ, z)` pair; each sample consumes `p` normals for `ζ`, then
/// one for the noise.
fn draw_sample(rng: &mut Stream, signal: &[f64], sigma: f64, xi: &mut [f64]) -> f64 {
    rng.unit_sphere(xi);
    let clean: f64 = signal.iter().zip(xi.iter()).map(|(a, b)| a * b).sum::<f64>().abs();
    clean + sigma * rng.normal()
}

pub fn generate_phase_dataset(spec: &GeneratorSpec) -> Result<Dataset> {
    spec.validate()?;
    let p = spec.signal.len();
    let mut rng = Stream::new(spec.seed, spec.stream);
    let mut features = vec![0.0; spec.n * p];
    let mut responses = Vec::with_capacity(spec.n);
    for row in features.chunks_mut(p) {
        responses.push(draw_sample(&mut rng, &spec.signal, spec.sigma, row));
    }
    let data = Dataset::from_flat(p, features, responses)?;
    Ok(data.with_provenance(Provenance { seed: Some(spec.seed), generator: GENERATOR_NAME.into() }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub draws: usize,
}

/// Sample mean of `h(m(x; ξ); z)` over fresh draws from the phase law, with
/// its standard error. Works for any model whose feature dimension is `p`.
pub fn population_risk_mc(
    model: &DifferenceMaxModel,
    loss: LossKind,
    signal: &[f64],
    sigma: f64,
    x: &[f64],
    draws: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if draws < 100 {
        return Err(Error::Config(format!("at least 100 draws are required, got {draws}")));
    }
    let spec = GeneratorSpec { seed, stream: 0, signal: signal.to_vec(), sigma, n: draws };
    spec.validate()?;
    if model.feature_dim != signal.len() {
        return Err(dcmax_core::Error::DimensionMismatch { expected: model.feature_dim, found: signal.len() }.into());
    }
    dcmax_core::model_value(model, x, &vec![0.0; signal.len()])?;
    let mut rng = Stream::new(seed, 0);
    let mut xi = vec![0.0; signal.len()];
    let (mut mean, mut m2) = (0.0, 0.0);
    for k in 0..draws {
        let z = draw_sample(&mut rng, signal, sigma, &mut xi);
        let value = loss.at(z).value(model.value_unchecked(x, &xi));
        let delta = value - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (value - mean);
    }
    let var = m2 / (draws - 1) as f64;
    Ok(MonteCarloEstimate { estimate: mean, standard_error: (var / draws as f64).sqrt(), draws })
}

/// `(1/N) Σ (ℓₙ − mean)²` of the per-sample losses.
pub fn variance_estimator(model: &DifferenceMaxModel, loss: LossKind, dataset: &Dataset, x: &[f64]) -> Result<f64> {
    if dataset.len() < 2 {
        return Err(dcmax_core::Error::TooFewSamples { needed: 2, found: dataset.len() }.into());
    }
    let losses = sample_losses(model, loss, dataset, x)?;
    Ok(plug_in_variance(&losses))
}

fn plug_in_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// `min(‖x − x̄‖, ‖x + x̄‖)`
pub fn distance_to_solutions(x: &[f64], signal: &[f64]) -> f64 {
    let (mut minus, mut plus) = (0.0, 0.0);
    for (a, b) in x.iter().zip(signal) {
        minus += (a - b) * (a - b);
        plus += (a + b) * (a + b);
    }
    minus.min(plus).sqrt()
}

/// Angle between `x` and `x̄` in `[0, π]`; `π/2` at the origin.
pub fn angle_to_signal(x: &[f64], signal: &[f64]) -> f64 {
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ns = signal.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nx == 0.0 {
        return PI / 2.0;
    }
    let c = x.iter().zip(signal).map(|(a, b)| a * b).sum::<f64>() / (nx * ns);
    c.clamp(-1.0, 1.0).acos()
}

/// The nearer of `±x̄`.
pub fn nearest_solution(x: &[f64], signal: &[f64]) -> Vec<f64> {
    let c: f64 = x.iter().zip(signal).map(|(a, b)| a * b).sum();
    if c >= 0.0 {
        signal.to_vec()
    } else {
        signal.iter().map(|v| -v).collect()
    }
}

/// A point with `x̄ᵀx = 0` and `‖x‖ = (2/π)‖x̄‖`, in a random direction
/// orthogonal to `x̄`.
pub fn saddle_start(signal: &[f64], rng: &mut Stream) -> Vec<f64> {
    let ss: f64 = signal.iter().map(|v| v * v).sum();
    let mut u = vec![0.0; signal.len()];
    loop {
        rng.fill_normal(&mut u);
        let c = u.iter().zip(signal).map(|(a, b)| a * b).sum::<f64>() / ss;
        u.iter_mut().zip(signal).for_each(|(a, b)| *a -= c * b);
        let nu = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nu > 1e-8 {
            let scale = 2.0 / PI * ss.sqrt() / nu;
            u.iter_mut().for_each(|v| *v *= scale);
            return u;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StartPoint {
    /// Random point of the empirical saddle-circle analog.
    Saddle,
    Origin,
    Fixed { x: Vec<f64> },
}

/// Start of replication `rep` at sample size `n`. Saddle starts draw their
/// direction from a stream disjoint from the data stream.
pub fn start_point(start: &StartPoint, signal: &[f64], seed: u64, n: usize, rep: usize) -> Vec<f64> {
    match start {
        StartPoint::Saddle => saddle_start(signal, &mut Stream::new(seed, replication_stream(n, rep) | START_STREAM_BIT)),
        StartPoint::Origin => vec![0.0; signal.len()],
        StartPoint::Fixed { x } => x.clone(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub signal: Vec<f64>,
    pub sigma: f64,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub base_seed: u64,
    pub loss: LossKind,
    /// Radius of the centered ball `X`; `None` means `3‖x̄‖`.
    pub radius: Option<f64>,
    pub start: StartPoint,
    pub solver: MMConfig,
}

impl ExperimentConfig {
    pub fn radius(&self) -> f64 {
        self.radius.unwrap_or_else(|| 3.0 * self.signal.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_sizes.is_empty() {
            return Err(Error::Config("at least one sample size is required".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("at least one replication is required".into()));
        }
        for &n in &self.sample_sizes {
            GeneratorSpec { seed: self.base_seed, stream: 0, signal: self.signal.clone(), sigma: self.sigma, n }.validate()?;
        }
        if let StartPoint::Fixed { x } = &self.start {
            if x.len() != self.signal.len() {
                return Err(dcmax_core::Error::DimensionMismatch { expected: self.signal.len(), found: x.len() }.into());
            }
        }
        self.solver.validate()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub n: usize,
    pub replication: usize,
    pub seed: u64,
    pub stream: u64,
    pub start: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub distance: f64,
    pub angle: f64,
    pub objective: f64,
    pub status: Option<SolveStatus>,
    pub verdict: Option<Verdict>,
    pub iterations: usize,
    pub wall_clock_secs: f64,
    /// Solver error message when the run failed.
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub n: usize,
    pub distance: Quartiles,
    pub objective: Quartiles,
    pub max_angle_to_solutions: f64,
    pub certified: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub records: Vec<ReplicationRecord>,
    pub summaries: Vec<SizeSummary>,
}

impl ExperimentReport {
    pub fn medians(&self) -> Vec<(usize, f64)> {
        self.summaries.iter().map(|s| (s.n, s.distance.median)).collect()
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn quartiles(mut values: Vec<f64>) -> Quartiles {
    values.sort_by(f64::total_cmp);
    Quartiles { q1: quantile(&values, 0.25), median: quantile(&values, 0.5), q3: quantile(&values, 0.75) }
}

fn run_replication(config: &ExperimentConfig, model: &DifferenceMaxModel, n: usize, rep: usize) -> ReplicationRecord {
    let stream = replication_stream(n, rep);
    let spec = GeneratorSpec { seed: config.base_seed, stream, signal: config.signal.clone(), sigma: config.sigma, n };
    let start = start_point(&config.start, &config.signal, config.base_seed, n, rep);
    let mut record = ReplicationRecord {
        n,
        replication: rep,
        seed: config.base_seed,
        stream,
        start: start.clone(),
        x_hat: Vec::new(),
        distance: f64::NAN,
        angle: f64::NAN,
        objective: f64::NAN,
        status: None,
        verdict: None,
        iterations: 0,
        wall_clock_secs: 0.0,
        error: None,
    };
    let set = FeasibleSet::Ball { radius: config.radius() };
    let clock = Instant::now();
    let outcome = generate_phase_dataset(&spec)
        .and_then(|data| Ok(mm_solve(model, config.loss, &data, &set, &start, &config.solver)?));
    record.wall_clock_secs = clock.elapsed().as_secs_f64();
    match outcome {
        Ok((x, trace)) => {
            record.distance = distance_to_solutions(&x, &config.signal);
            record.angle = angle_to_signal(&x, &config.signal);
            record.objective = trace.final_objective();
            record.status = Some(trace.status);
            record.verdict = trace.certificate.as_ref().map(|c| c.verdict);
            record.iterations = trace.steps.last().copied().unwrap_or(0);
            record.x_hat = x;
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

/// Solves every `(N, replication)` instance from a fresh dataset. Runs are
/// independent and execute in parallel; the report is sorted by
/// `(N, replication)` so it does not depend on scheduling.
pub fn run_consistency_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let model = build_phase_retrieval_model(config.signal.len())?;
    let jobs: Vec<(usize, usize)> =
        config.sample_sizes.iter().flat_map(|&n| (0..config.replications).map(move |r| (n, r))).collect();
    let mut records: Vec<ReplicationRecord> =
        jobs.par_iter().map(|&(n, r)| run_replication(config, &model, n, r)).collect();
    records.sort_by_key(|r| (r.n, r.replication));

    let mut sizes = config.sample_sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let summaries = sizes
        .iter()
        .map(|&n| {
            let ok: Vec<&ReplicationRecord> = records.iter().filter(|r| r.n == n && r.error.is_none()).collect();
            SizeSummary {
                n,
                distance: quartiles(ok.iter().map(|r| r.distance).collect()),
                objective: quartiles(ok.iter().map(|r| r.objective).collect()),
                max_angle_to_solutions: ok.iter().map(|r| r.angle.min(PI - r.angle)).fold(0.0, f64::max),
                certified: ok.iter().filter(|r| r.status == Some(SolveStatus::Certified)).count(),
                failed: records.iter().filter(|r| r.n == n && r.error.is_some()).count(),
            }
        })
        .collect();
    Ok(ExperimentReport { records, summaries })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// `None` when some median is not positive, e.g. in noiseless runs.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Root-mean-square residual of the fit.
    pub residual: Option<f64>,
    /// 95% normal-approximation half-width of the slope.
    pub slope_half_width: Option<f64>,
}

/// Least-squares fit of `log median` against `log N`.
pub fn fit_rate(medians: &[(usize, f64)]) -> Result<RateFit> {
    let mut ns: Vec<usize> = medians.iter().map(|m| m.0).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 {
        return Err(Error::Config(format!("a rate fit needs at least 3 distinct sample sizes, got {}", ns.len())));
    }
    if medians.iter().any(|m| !(m.1 > 0.0) || !m.1.is_finite()) {
        return Ok(RateFit { slope: None, intercept: None, residual: None, slope_half_width: None });
    }
    let pts: Vec<(f64, f64)> = medians.iter().map(|&(n, d)| ((n as f64).ln(), d.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let half = if pts.len() > 2 { 1.96 * (sse / (k - 2.0) / sxx).sqrt() } else { f64::NAN };
    Ok(RateFit { slope: Some(slope), intercept: Some(intercept), residual: Some((sse / k).sqrt()), slope_half_width: Some(half) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalityRecord {
    pub replication: usize,
    pub objective: f64,
    pub limit_value: f64,
    pub variance: f64,
    pub statistic: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalitySummary {
    pub n: usize,
    pub mean: f64,
    /// Sample variance with the `1/(R−1)` normalization.
    pub variance: f64,
    pub records: Vec<NormalityRecord>,
    pub skipped: usize,
}

/// Statistics `Tᵣ = √(N / V̂_N(x̂ᵣ)) · (M_N(x̂ᵣ) − M(x∞ᵣ))` with `x∞ᵣ` the
/// nearer of `±x̄` and `M` the closed-form population risk. Replications
/// whose solve failed or whose `V̂_N` vanishes are skipped and counted.
pub fn normality_check(config: &ExperimentConfig, n: usize, population: &PhasePopulation) -> Result<NormalitySummary> {
    if config.replications < 20 {
        return Err(Error::Config(format!("the normality check needs at least 20 replications, got {}", config.replications)));
    }
    if config.loss != LossKind::Squared {
        return Err(Error::Config("the normality check uses the squared loss".into()));
    }
    let config = ExperimentConfig { sample_sizes: vec![n], ..config.clone() };
    let report = run_consistency_experiment(&config)?;
    let model = build_phase_retrieval_model(config.signal.len())?;
    let rows: Vec<Option<NormalityRecord>> = report
        .records
        .par_iter()
        .map(|r| -> Result<Option<NormalityRecord>> {
            if r.error.is_some() {
                return Ok(None);
            }
            let spec = GeneratorSpec { seed: r.seed, stream: r.stream, signal: config.signal.clone(), sigma: config.sigma, n };
            let data = generate_phase_dataset(&spec)?;
            let variance = variance_estimator(&model, config.loss, &data, &r.x_hat)?;
            if !(variance > 0.0) {
                return Ok(None);
            }
            let objective = empirical_risk(&model, config.loss, &data, &r.x_hat)?;
            let limit_value = population.population_risk(&nearest_solution(&r.x_hat, &config.signal))?;
            let statistic = (n as f64 / variance).sqrt() * (objective - limit_value);
            Ok(Some(NormalityRecord { replication: r.replication, objective, limit_value, variance, statistic }))
        })
        .collect::<Result<_>>()?;
    let skipped = rows.iter().filter(|r| r.is_none()).count();
    let records: Vec<NormalityRecord> = rows.into_iter().flatten().collect();
    if records.len() < 2 {
        return Err(Error::Config("too few usable replications for the normality check".into()));
    }
    let k = records.len() as f64;
    let mean = records.iter().map(|r| r.statistic).sum::<f64>() / k;
    let variance = records.iter().map(|r| (r.statistic - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Ok(NormalitySummary { n, mean, variance, records, skipped })
}
