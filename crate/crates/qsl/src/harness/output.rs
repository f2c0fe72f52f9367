use super::{HarnessError, ParityReport, PhaseRow, SweepResult};
use crate::io::{atomic_write, atomic_write_str};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CSV_HEADER: [&str; 9] = ["scenario", "channel", "axis_name", "axis_value", "n_star", "err_lo", "err_hi", "trials", "seed"];

/// One CSV line; `n_star` is empty when the bracket was exhausted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scenario: String,
    pub channel: String,
    pub axis_name: String,
    pub axis_value: f64,
    pub n_star: Option<u64>,
    pub err_lo: f64,
    pub err_hi: f64,
    pub trials: u64,
    pub seed: u64,
}

impl SweepRow {
    pub fn rows(results: &[SweepResult]) -> Vec<SweepRow> {
        results
            .iter()
            .flat_map(|r| {
                r.points.iter().map(move |p| SweepRow {
                    scenario: r.scenario.clone(),
                    channel: r.channel.clone(),
                    axis_name: r.axis_name.clone(),
                    axis_value: p.axis_value,
                    n_star: p.n_star,
                    err_lo: p.err_lo,
                    err_hi: p.err_hi,
                    trials: r.trials,
                    seed: r.seed,
                })
            })
            .collect()
    }
}

/// What a scenario produces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Results {
    Sweeps(Vec<SweepResult>),
    Phase(Vec<PhaseRow>),
    Parity(ParityReport),
}

fn csv_err(e: csv::Error) -> HarnessError {
    HarnessError::Format(e.to_string())
}

pub fn write_sweep_csv(path: &Path, results: &[SweepResult]) -> Result<(), HarnessError> {
    let rows = SweepRow::rows(results);
    let mut buf = Vec::new();
    {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut buf);
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        for row in &rows {
            w.serialize(row).map_err(csv_err)?;
        }
        w.flush()?;
    }
    atomic_write(path, |f| std::io::Write::write_all(f, &buf))?;
    Ok(())
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>, HarnessError> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if header != CSV_HEADER {
        return Err(HarnessError::Format(format!("unexpected header {header:?}")));
    }
    rd.deserialize().map(|r| r.map_err(csv_err)).collect()
}

pub fn write_report_json<T: Serialize>(path: &Path, report: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| HarnessError::Format(e.to_string()))?;
    text.push('\n');
    atomic_write_str(path, &text)?;
    Ok(())
}

/// Curves go to CSV, reports to JSON.
pub fn write_results(path: &Path, results: &Results) -> Result<(), HarnessError> {
    match results {
        Results::Sweeps(s) => write_sweep_csv(path, s),
        other => write_report_json(path, other),
    }
}
