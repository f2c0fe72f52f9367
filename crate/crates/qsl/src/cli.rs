//! The `qsl` command line.
//!
//! Exit codes: 0 on success, 1 on a usage or config error (the message names
//! the offending field), 2 on a runtime failure.

use crate::channels::{
    bell_sample, ChannelError, heterodyne_sample, homodyne_sample, read_record_file, write_record_file, MeasurementRecord, SqueezeParam,
};
use crate::estimators::{estimate, estimate_char, estimate_cov_xp, estimate_phase, EstimatorError, PropertyKernel};
use crate::harness::{
    load_config, read_sweep_csv, run_binary_test, run_config, write_report_json, write_results, HarnessError, Results,
    SweepRow, TestSpec,
};
use crate::io::atomic_write_str;
use crate::ot::{ambiguity_modulus, w1_discrete, w2_gaussian, ModulusFamily, ModulusMeasurement, OtError, PlanarAtom};
use crate::signals::{ComplexAmp, Cov2, DisplacementLaw};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "qsl", version, about = "Bell, homodyne and heterodyne signal-learning simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Default)]
pub struct Common {
    /// Config file (TOML or JSON, by extension).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed; wins over the seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent (except `sample` and `sweep`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, global = true, env = "QSL_DEFAULT_THREADS")]
    pub threads: Option<usize>,
    /// Progress and timing on stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,
}

const SAMPLE_KEYS: &str = "Config keys: law (tagged law object), channel (bell | homodyne | heterodyne), r, theta, n, seed, out.
Flags override config values.";
const TEST_KEYS: &str = "Config keys: spec {h0, h1, channel {channel, r, angles}, rule {rule, k_star}, uses_per_round}, n, trials, seed.";
const SWEEP_KEYS: &str = "Config keys: scenario (em_field | delta_wedge | gaussian_pair | squeezing_scaling | phase_feedback | parity),
seed, trials, out, [params]. Params per scenario:
  em_field: sigma2, delta_over_c, c_grid, r, white_noise, search
  delta_wedge: a, b, eps_grid, r, allow_outside_wedge, search
  gaussian_pair: sigma2, c, eps_grid, r, search
  squeezing_scaling: sigma2, c, r_grid, search
  phase_feedback: thetas, beta [re, im], r, eps, delta, n, trials
  parity: n, delta, trials, n_coherent
  search: target_error, trials, n_lo, n_hi, rel_tol, max_evals";
const MODULUS_KEYS: &str = "Config keys: family {family = gaussian_grid: sigma_x2, sigma_p2, c | delta_grid: a, b, eps},
measurement {angles, r}, eta, budget.";

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a measurement record and write it as CSV.
    #[command(after_help = SAMPLE_KEYS)]
    Sample(SampleArgs),
    /// Estimate a property from a recorded CSV.
    #[command(subcommand)]
    Estimate(EstimateCmd),
    /// Run one binary hypothesis test.
    #[command(after_help = TEST_KEYS)]
    Test(TestArgs),
    /// Run a scenario sweep from a config and write CSV or JSON.
    #[command(after_help = SWEEP_KEYS)]
    Sweep(SweepArgs),
    /// Transport distances and ambiguity brackets.
    #[command(subcommand)]
    Ot(OtCmd),
    /// Summarize a sweep CSV: N_star per point plus slope and spread per curve.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Law as inline JSON, or @path to a JSON file.
    #[arg(long)]
    pub law: Option<String>,
    #[arg(long)]
    pub channel: Option<String>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum EstimateCmd {
    /// Characteristic function at β.
    Char {
        #[arg(long)]
        record: PathBuf,
        /// re,im per mode, modes separated by ';'.
        #[arg(long)]
        beta: String,
    },
    /// x-p covariance.
    Cov {
        #[arg(long)]
        record: PathBuf,
        /// Use the raw second moment.
        #[arg(long)]
        no_mean_subtract: bool,
    },
    /// Rotation of a beacon with reference amplitude β.
    Phase {
        #[arg(long)]
        record: PathBuf,
        /// re,im
        #[arg(long)]
        beta_ref: String,
    },
    /// Any property kernel given as JSON (`{"kernel": "fourier_atom", ...}`) or @path.
    Kernel {
        #[arg(long)]
        record: PathBuf,
        #[arg(long)]
        kernel: String,
    },
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Trials per point; wins over the config.
    #[arg(long)]
    pub trials: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum OtCmd {
    /// W₂ between N(0, Σ(+c)) and N(0, Σ(−c)) with equal marginals σ².
    W2Gaussian {
        #[arg(long)]
        sigma2: f64,
        #[arg(long)]
        c: f64,
    },
    /// W₁ between the XOR delta pairs ½δ(a,b)+½δ(−a,−b) and ½δ(a,−b)+½δ(−a,b).
    W1Xor {
        #[arg(long)]
        a: f64,
        /// Defaults to a.
        #[arg(long)]
        b: Option<f64>,
    },
    /// Bracket on the ambiguity modulus of a law family.
    #[command(after_help = MODULUS_KEYS)]
    Modulus,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Sweep CSV written by `sweep`.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Invalid { .. } | HarnessError::Incompatible(_) | HarnessError::Format(_) => CliError::Config(e.to_string()),
            HarnessError::Channel(c) => c.into(),
            HarnessError::Estimator(c) => c.into(),
            HarnessError::Ot(c) => c.into(),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<EstimatorError> for CliError {
    fn from(e: EstimatorError) -> Self {
        match e {
            EstimatorError::Invalid { .. } | EstimatorError::Dimension { .. } => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<OtError> for CliError {
    fn from(e: OtError) -> Self {
        match e {
            OtError::Invalid { .. } | OtError::NotPsd => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<ChannelError> for CliError {
    fn from(e: ChannelError) -> Self {
        match e {
            ChannelError::Law(_) | ChannelError::Invalid { .. } | ChannelError::WrongChannel { .. } => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

fn config_err(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("invalid value for `{field}`: {msg}"))
}

/// Parse argv and run; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.code()
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let threads = match cli.common.threads {
        Some(0) => return Err(config_err("threads", "must be at least 1")),
        Some(t) => t,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let common = &cli.common;
    pool.install(|| match &cli.command {
        Command::Sample(a) => cmd_sample(common, a),
        Command::Estimate(e) => cmd_estimate(common, e),
        Command::Test(a) => cmd_test(common, a),
        Command::Sweep(a) => cmd_sweep(common, a),
        Command::Ot(o) => cmd_ot(common, o),
        Command::Report(a) => cmd_report(common, a),
    })
}

fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let res = if path.extension().is_some_and(|e| e == "json") {
        serde_path_to_error::deserialize(&mut serde_json::Deserializer::from_str(&text))
            .map_err(|e| config_err(&e.path().to_string(), e.inner()))
    } else {
        let de = toml::Deserializer::parse(&text).map_err(|e| CliError::Config(e.to_string()))?;
        serde_path_to_error::deserialize(de).map_err(|e| config_err(&e.path().to_string(), e.inner()))
    };
    res
}

fn json_arg<T: DeserializeOwned>(field: &str, s: &str) -> Result<T, CliError> {
    let text = match s.strip_prefix('@') {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {p}: {e}")))?,
        None => s.to_string(),
    };
    serde_path_to_error::deserialize(&mut serde_json::Deserializer::from_str(&text)).map_err(|e| {
        let path = e.path().to_string();
        config_err(if path == "." { field } else { &path }, e.inner())
    })
}

fn parse_complex(field: &str, s: &str) -> Result<ComplexAmp, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [re, im] => match (re.parse::<f64>(), im.parse::<f64>()) {
            (Ok(re), Ok(im)) => Ok(ComplexAmp::new(re, im)),
            _ => Err(config_err(field, format!("expected two numbers, got `{s}`"))),
        },
        _ => Err(config_err(field, format!("expected `re,im`, got `{s}`"))),
    }
}

fn emit(common: &Common, value: &serde_json::Value) -> Result<(), CliError> {
    let text = format!("{}\n", serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?);
    match &common.out {
        Some(p) => atomic_write_str(p, &text).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleConfig {
    law: Option<DisplacementLaw>,
    channel: Option<String>,
    r: Option<f64>,
    theta: Option<f64>,
    n: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

fn cmd_sample(common: &Common, a: &SampleArgs) -> Result<(), CliError> {
    let cfg: SampleConfig = match &common.config {
        Some(p) => read_config(p)?,
        None => SampleConfig::default(),
    };
    let law = match &a.law {
        Some(s) => json_arg("law", s)?,
        None => cfg.law.ok_or_else(|| config_err("law", "missing"))?,
    };
    let channel = a.channel.clone().or(cfg.channel).ok_or_else(|| config_err("channel", "missing"))?;
    let n = a.n.or(cfg.n).ok_or_else(|| config_err("n", "missing"))?;
    let seed = common.seed.or(cfg.seed).unwrap_or(0);
    let out = common.out.clone().or(cfg.out).ok_or_else(|| config_err("out", "missing"))?;
    let r = a.r.or(cfg.r);
    let squeeze = |r: Option<f64>| -> Result<SqueezeParam, CliError> {
        SqueezeParam::new(r.ok_or_else(|| config_err("r", "missing"))?).map_err(CliError::from)
    };
    let rec: MeasurementRecord = match channel.as_str() {
        "bell" => bell_sample(&law, squeeze(r)?, n, seed)?,
        "heterodyne" => heterodyne_sample(&law, n, seed)?,
        "homodyne" => {
            let theta = a.theta.or(cfg.theta).ok_or_else(|| config_err("theta", "missing"))?;
            homodyne_sample(&law, theta, squeeze(r)?, n, seed)?
        }
        other => return Err(config_err("channel", format!("unknown channel `{other}`"))),
    };
    write_record_file(&rec, &out)?;
    if common.verbose {
        eprintln!("wrote {} shots to {}", rec.len(), out.display());
    }
    Ok(())
}

fn load_record(path: &Path) -> Result<MeasurementRecord, CliError> {
    if !path.exists() {
        return Err(config_err("record", format!("{} does not exist", path.display())));
    }
    read_record_file(path).map_err(|e| config_err("record", e))
}

fn cmd_estimate(common: &Common, e: &EstimateCmd) -> Result<(), CliError> {
    let est = match e {
        EstimateCmd::Char { record, beta } => {
            let rec = load_record(record)?;
            let beta: Vec<ComplexAmp> =
                beta.split(';').map(|s| parse_complex("beta", s)).collect::<Result<_, _>>()?;
            estimate_char(&rec, &beta)?
        }
        EstimateCmd::Cov { record, no_mean_subtract } => estimate_cov_xp(&load_record(record)?, !no_mean_subtract)?,
        EstimateCmd::Phase { record, beta_ref } => estimate_phase(&load_record(record)?, parse_complex("beta_ref", beta_ref)?)?,
        EstimateCmd::Kernel { record, kernel } => {
            let k: PropertyKernel = json_arg("kernel", kernel)?;
            estimate(&load_record(record)?, &k)?
        }
    };
    emit(common, &est.to_json())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TestConfig {
    spec: TestSpec,
    n: Option<u64>,
    trials: Option<u64>,
    seed: Option<u64>,
}

fn cmd_test(common: &Common, a: &TestArgs) -> Result<(), CliError> {
    let path = common.config.as_ref().ok_or_else(|| config_err("config", "`test` needs --config"))?;
    let cfg: TestConfig = read_config(path)?;
    let n = a.n.or(cfg.n).ok_or_else(|| config_err("n", "missing"))?;
    let trials = a.trials.or(cfg.trials).unwrap_or(400);
    let seed = common.seed.or(cfg.seed).unwrap_or(0);
    let res = run_binary_test(&cfg.spec, n, trials, seed)?;
    emit(common, &serde_json::to_value(&res).map_err(|e| CliError::Runtime(e.to_string()))?)
}

fn cmd_sweep(common: &Common, a: &SweepArgs) -> Result<(), CliError> {
    let path = common.config.as_ref().ok_or_else(|| config_err("config", "`sweep` needs --config"))?;
    let mut cfg = load_config(path).map_err(|e| match e {
        HarnessError::Io(io) => CliError::Config(format!("cannot read {}: {io}", path.display())),
        other => other.into(),
    })?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if a.trials.is_some() {
        cfg.trials = a.trials;
    }
    let out = common.out.clone().or_else(|| cfg.out.clone()).ok_or_else(|| config_err("out", "missing"))?;
    let res = run_config(&cfg)?;
    write_results(&out, &res.results)?;
    if common.verbose {
        eprintln!("{}: {:.1}s, wrote {}", cfg.scenario, res.runtime, out.display());
        if let Results::Sweeps(s) = &res.results {
            for r in s {
                eprintln!("  {} {}: {:.1}s", r.scenario, r.channel, r.runtime);
            }
        }
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModulusConfig {
    family: ModulusFamily,
    measurement: ModulusMeasurement,
    eta: f64,
    #[serde(default = "default_budget")]
    budget: usize,
}

fn default_budget() -> usize {
    2000
}

fn cmd_ot(common: &Common, o: &OtCmd) -> Result<(), CliError> {
    let value = match o {
        OtCmd::W2Gaussian { sigma2, c } => {
            let w2 = w2_gaussian([0.0; 2], &Cov2::new(*sigma2, *sigma2, *c), [0.0; 2], &Cov2::new(*sigma2, *sigma2, -c))
                .map_err(|e| match e {
                    OtError::NotPsd => config_err("c", "need |c| ≤ sigma2 for a valid covariance"),
                    other => other.into(),
                })?;
            serde_json::json!({ "w2": w2 })
        }
        OtCmd::W1Xor { a, b } => {
            let b = b.unwrap_or(*a);
            let p = [PlanarAtom::new(*a, b, 0.5), PlanarAtom::new(-a, -b, 0.5)];
            let q = [PlanarAtom::new(*a, -b, 0.5), PlanarAtom::new(-a, b, 0.5)];
            serde_json::json!({ "w1": w1_discrete(&p, &q)? })
        }
        OtCmd::Modulus => {
            let path = common.config.as_ref().ok_or_else(|| config_err("config", "`ot modulus` needs --config"))?;
            let cfg: ModulusConfig = read_config(path)?;
            ambiguity_modulus(&cfg.family, &cfg.measurement, cfg.eta, cfg.budget)?.to_json()
        }
    };
    emit(common, &value)
}

fn cmd_report(common: &Common, a: &ReportArgs) -> Result<(), CliError> {
    let rows = read_sweep_csv(&a.input).map_err(|e| config_err("input", e))?;
    let mut curves: BTreeMap<(String, String), Vec<&SweepRow>> = BTreeMap::new();
    for r in &rows {
        curves.entry((r.scenario.clone(), r.channel.clone())).or_default().push(r);
    }
    let summary: Vec<serde_json::Value> = curves
        .iter()
        .map(|((scenario, channel), pts)| {
            let resolved: Vec<(f64, f64)> =
                pts.iter().filter_map(|p| p.n_star.map(|n| (p.axis_value, n as f64))).collect();
            let slope = loglog_slope(&resolved);
            let spread = if resolved.len() == pts.len() && !pts.is_empty() {
                let (lo, hi) = resolved.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
                Some(hi / lo)
            } else {
                None
            };
            serde_json::json!({
                "scenario": scenario,
                "channel": channel,
                "axis_name": pts[0].axis_name,
                "axis": pts.iter().map(|p| p.axis_value).collect::<Vec<_>>(),
                "n_star": pts.iter().map(|p| p.n_star).collect::<Vec<_>>(),
                "loglog_slope": slope,
                "spread": spread,
            })
        })
        .collect();
    let value = serde_json::Value::Array(summary);
    if let Some(p) = &common.out {
        write_report_json(p, &value)?;
        Ok(())
    } else {
        emit(common, &value)
    }
}

fn loglog_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = pts.iter().filter(|p| p.0 > 0.0).map(|p| (p.0.ln(), p.1.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
