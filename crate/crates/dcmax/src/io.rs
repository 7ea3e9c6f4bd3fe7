//! File formats.
//!
//! Datasets and traces are CSV with a header row. Every file written here
//! starts with a `# config=<json>` comment line holding the resolved run
//! configuration; readers skip `#` lines. JSON outputs wrap the payload as
//! `{"command", "config", "result"}`.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use dcmax_core::{Dataset, Provenance, SolveTrace};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::experiments::ReplicationRecord;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub command: String,
    pub config: RunConfig,
    pub result: T,
}

/// Opens `path`, or stdout when `None`.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => Ok(Box::new(File::create(p).map_err(|e| Error::io(p, e))?)),
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

pub fn write_json<T: Serialize, W: Write>(mut w: W, command: &str, config: &RunConfig, result: &T) -> Result<()> {
    let envelope = Envelope { command: command.to_string(), config: config.clone(), result };
    serde_json::to_writer_pretty(&mut w, &envelope)?;
    writeln!(w).map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Envelope<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

fn write_config_line<W: Write>(w: &mut W, config: &RunConfig) -> Result<()> {
    writeln!(w, "# config={}", serde_json::to_string(config)?).map_err(|e| Error::io("<output>", e))
}

/// Columns `xi_1, …, xi_p, z`.
pub fn write_dataset<W: Write>(mut w: W, config: &RunConfig, data: &Dataset) -> Result<()> {
    write_config_line(&mut w, config)?;
    let mut out = csv::Writer::from_writer(w);
    let p = data.feature_dim();
    let mut header: Vec<String> = (1..=p).map(|i| format!("xi_{i}")).collect();
    header.push("z".into());
    out.write_record(&header)?;
    for (xi, z) in data.samples() {
        out.write_record(xi.iter().chain(std::iter::once(&z)).map(|v| format_f64(*v)))?;
    }
    out.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

/// Shortest representation that parses back to the same `f64`.
fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn read_dataset<R: Read>(r: R) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let header = reader.headers()?.clone();
    let cols = header.len();
    if cols < 2 || header.get(cols - 1) != Some("z") {
        return Err(Error::Format("dataset header must end with a `z` column".into()));
    }
    let p = cols - 1;
    let mut features = Vec::new();
    let mut responses = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let values: Vec<f64> = record
            .iter()
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("row {}: {e}", line + 1)))?;
        features.extend_from_slice(&values[..p]);
        responses.push(values[p]);
    }
    Ok(Dataset::from_flat(p, features, responses)?)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let seed = read_config_line(BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?))
        .map(|c| c.seed);
    let data = read_dataset(BufReader::new(file))?;
    Ok(data.with_provenance(Provenance { seed, generator: format!("file:{}", path.display()) }))
}

/// The configuration recorded in the first line of a file written here.
pub fn read_config_line<R: BufRead>(mut r: R) -> Option<RunConfig> {
    let mut line = String::new();
    r.read_line(&mut line).ok()?;
    serde_json::from_str(line.trim().strip_prefix("# config=")?).ok()
}

/// Columns `iteration, objective, movement, ambiguous, x_1, …, x_p`, one row
/// per recorded step; the `x` columns are empty for steps dropped by
/// thinning.
pub fn write_trace<W: Write>(mut w: W, config: &RunConfig, trace: &SolveTrace) -> Result<()> {
    write_config_line(&mut w, config)?;
    let mut out = csv::Writer::from_writer(w);
    let p = trace.iterates.first().map_or(0, |(_, x)| x.len());
    let mut header: Vec<String> = ["iteration", "objective", "movement", "ambiguous"].map(String::from).to_vec();
    header.extend((1..=p).map(|i| format!("x_{i}")));
    out.write_record(&header)?;
    let mut kept = trace.iterates.iter().peekable();
    for (i, &k) in trace.steps.iter().enumerate() {
        let mut row = vec![
            k.to_string(),
            format_f64(trace.objectives[i]),
            format_f64(trace.movements[i]),
            trace.ambiguous_counts[i].to_string(),
        ];
        match kept.next_if(|(j, _)| *j == k) {
            Some((_, x)) => row.extend(x.iter().map(|v| format_f64(*v))),
            None => row.extend(std::iter::repeat(String::new()).take(p)),
        }
        out.write_record(&row)?;
    }
    out.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

/// One row per replication: `n, replication, stream, distance, angle,
/// objective, status, verdict, iterations, seconds, error`.
pub fn write_records<W: Write>(mut w: W, config: &RunConfig, records: &[ReplicationRecord]) -> Result<()> {
    write_config_line(&mut w, config)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "n", "replication", "stream", "distance", "angle", "objective", "status", "verdict", "iterations", "seconds", "error",
    ])?;
    for r in records {
        let status = r.status.map(|s| serde_json::to_value(s).map(|v| v.as_str().unwrap_or("").to_string())).transpose()?;
        let verdict = r.verdict.map(|s| serde_json::to_value(s).map(|v| v.as_str().unwrap_or("").to_string())).transpose()?;
        out.write_record([
            r.n.to_string(),
            r.replication.to_string(),
            r.stream.to_string(),
            format_f64(r.distance),
            format_f64(r.angle),
            format_f64(r.objective),
            status.unwrap_or_default(),
            verdict.unwrap_or_default(),
            r.iterations.to_string(),
            format_f64(r.wall_clock_secs),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}
