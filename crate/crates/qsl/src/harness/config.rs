//! Declarative experiment configs (TOML or JSON).
//!
//! ```toml
//! scenario = "delta_wedge"
//! seed = 7
//! trials = 400
//! out = "results/delta_wedge.csv"
//!
//! [params]
//! eps_grid = [0.01, 0.02, 0.03]
//! ```

use super::output::Results;
use super::scenarios::*;
use super::{invalid, HarnessError};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const SCENARIOS: [&str; 6] = ["em_field", "delta_wedge", "gaussian_pair", "squeezing_scaling", "phase_feedback", "parity"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    #[serde(default)]
    pub seed: u64,
    /// Overrides the per-point trial count of the scenario.
    #[serde(default)]
    pub trials: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default = "empty_params")]
    pub params: serde_json::Value,
}

fn empty_params() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

pub struct ScenarioOutput {
    pub results: Results,
    pub runtime: f64,
}

fn field_error<E: std::fmt::Display>(prefix: &str, e: serde_path_to_error::Error<E>) -> HarnessError {
    let path = e.path().to_string();
    let field = if path == "." { prefix.to_string() } else if prefix.is_empty() { path } else { format!("{prefix}.{path}") };
    invalid(&field, e.into_inner().to_string())
}

/// Parse a config; the format follows the extension (`.json`, otherwise TOML).
pub fn parse_config(text: &str, json: bool) -> Result<ExperimentConfig, HarnessError> {
    let cfg: ExperimentConfig = if json {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| field_error("", e))?
    } else {
        let de = toml::Deserializer::parse(text).map_err(|e| HarnessError::Format(e.to_string()))?;
        serde_path_to_error::deserialize(de).map_err(|e| field_error("", e))?
    };
    if !SCENARIOS.contains(&cfg.scenario.as_str()) {
        return Err(invalid("scenario", format!("unknown scenario `{}`; expected one of {}", cfg.scenario, SCENARIOS.join(", "))));
    }
    if cfg.trials == Some(0) {
        return Err(invalid("trials", "must be at least 1"));
    }
    typed(&cfg)?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, path.extension().is_some_and(|e| e == "json"))
}

fn params<T: DeserializeOwned>(v: &serde_json::Value) -> Result<T, HarnessError> {
    serde_path_to_error::deserialize(v).map_err(|e| field_error("params", e))
}

enum Typed {
    EmField(EmFieldParams),
    DeltaWedge(DeltaWedgeParams),
    GaussianPair(GaussianPairParams),
    SqueezingScaling(SqueezingScalingParams),
    PhaseFeedback(PhaseFeedbackParams),
    Parity(ParityParams),
}

/// Typed scenario parameters with the config-level trial override applied.
fn typed(cfg: &ExperimentConfig) -> Result<Typed, HarnessError> {
    let v = &cfg.params;
    let t = cfg.trials;
    Ok(match cfg.scenario.as_str() {
        "em_field" => {
            let mut p: EmFieldParams = params(v)?;
            p.search.trials = t.unwrap_or(p.search.trials);
            Typed::EmField(p)
        }
        "delta_wedge" => {
            let mut p: DeltaWedgeParams = params(v)?;
            p.search.trials = t.unwrap_or(p.search.trials);
            Typed::DeltaWedge(p)
        }
        "gaussian_pair" => {
            let mut p: GaussianPairParams = params(v)?;
            p.search.trials = t.unwrap_or(p.search.trials);
            Typed::GaussianPair(p)
        }
        "squeezing_scaling" => {
            let mut p: SqueezingScalingParams = params(v)?;
            p.search.trials = t.unwrap_or(p.search.trials);
            Typed::SqueezingScaling(p)
        }
        "phase_feedback" => {
            let mut p: PhaseFeedbackParams = params(v)?;
            p.trials = t.unwrap_or(p.trials);
            Typed::PhaseFeedback(p)
        }
        "parity" => {
            let mut p: ParityParams = params(v)?;
            p.trials = t.unwrap_or(p.trials);
            Typed::Parity(p)
        }
        other => return Err(invalid("scenario", format!("unknown scenario `{other}`"))),
    })
}

/// Run the configured scenario.
pub fn run_config(cfg: &ExperimentConfig) -> Result<ScenarioOutput, HarnessError> {
    let start = Instant::now();
    let seed = cfg.seed;
    let results = match typed(cfg)? {
        Typed::EmField(p) => Results::Sweeps(scenario_em_field(&p, seed)?),
        Typed::DeltaWedge(p) => Results::Sweeps(scenario_delta_wedge(&p, seed)?),
        Typed::GaussianPair(p) => Results::Sweeps(scenario_gaussian_pair(&p, seed)?),
        Typed::SqueezingScaling(p) => Results::Sweeps(scenario_squeezing_scaling(&p, seed)?),
        Typed::PhaseFeedback(p) => Results::Phase(scenario_phase_feedback(&p, seed)?),
        Typed::Parity(p) => Results::Parity(scenario_parity(&p, seed)?),
    };
    Ok(ScenarioOutput { results, runtime: start.elapsed().as_secs_f64() })
}
