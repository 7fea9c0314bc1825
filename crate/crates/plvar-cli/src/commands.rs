use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use plvar::evaluate::{one_step_mse, precision_recall};
use plvar::model::detrend;
use plvar::simulate::{draw_series, random_gvar, SimConfig};
use plvar::{learn_structure, Execution, LearnConfig};
use serde::Serialize;

use crate::data::{format_series, read_series};
use crate::error::{CliError, CliResult};
use crate::model_file::{Diagnostics, ModelFile};

#[derive(Debug, Clone)]
pub struct LearnArgs {
    pub data: PathBuf,
    pub max_lag: usize,
    pub gamma: f64,
    pub center: bool,
    pub detrend: bool,
    pub delta: f64,
    pub execution: Execution,
    pub out: PathBuf,
}

/// Summary of a `learn` run, as printed to stdout.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnSummary {
    pub lag: usize,
    pub temporal_edges: usize,
    pub contemporaneous_edges: usize,
    pub seconds: f64,
}

impl std::fmt::Display for LearnSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:<8} {:>6} {:>6} {:>10}", "k", "n_t", "n_c", "time_s")?;
        write!(f, "{:<8} {:>6} {:>6} {:>10.3}", self.lag, self.temporal_edges, self.contemporaneous_edges, self.seconds)
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn learn(args: &LearnArgs) -> CliResult<LearnSummary> {
    let mut series = read_series(&args.data)?;
    if series.len() <= args.max_lag {
        return Err(CliError::Input(format!(
            "{} has {} rows; need more than --max-lag {}",
            args.data.display(),
            series.len(),
            args.max_lag
        )));
    }
    if args.detrend {
        series = detrend(&series).series;
    }
    if args.center {
        series = series.centered().0;
    }
    let config = LearnConfig::new(args.max_lag).gamma(args.gamma).execution(args.execution);
    let mut result = learn_structure(&series, &config)?;
    let (model, fit) = result.fit(&series, args.delta)?.clone();

    let t = &result.timings;
    let timings_ms = BTreeMap::from([
        ("temporal".to_string(), ms(t.temporal)),
        ("contemporaneous".to_string(), ms(t.contemporaneous)),
        ("fit".to_string(), ms(t.fit)),
    ]);
    let diagnostics = Diagnostics {
        objective_per_k: result.temporal.objective_per_k.iter().enumerate().map(|(i, &v)| (i + 1, v)).collect(),
        loglik_trajectory: fit.loglik_trajectory.clone(),
        timings_ms,
    };
    let file = ModelFile::new(&model, &result.structure, Some(args.gamma), Some(diagnostics));
    write_atomic(&args.out, &file.to_json())?;

    Ok(LearnSummary {
        lag: result.structure.lag(),
        temporal_edges: result.structure.temporal_edges().len(),
        contemporaneous_edges: result.structure.contemporaneous_edges().len(),
        seconds: (t.temporal + t.contemporaneous + t.fit).as_secs_f64(),
    })
}

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub d: usize,
    pub k: usize,
    pub q: f64,
    pub n: usize,
    pub seed: u64,
    pub burn_in: usize,
    pub out: PathBuf,
}

/// Writes `<prefix>.csv` and `<prefix>.truth.json`; returns both paths.
pub fn simulate(args: &SimulateArgs) -> CliResult<(PathBuf, PathBuf)> {
    let mut config = SimConfig::new(args.d, args.k, args.q, args.seed);
    config.burn_in = args.burn_in;
    let (model, structure) = random_gvar(&config)?;
    // the series stream is seeded separately from the model stream
    let series = draw_series(&model, args.n, config.burn_in, args.seed.wrapping_add(1))
        .map_err(|e| CliError::Simulation(e.to_string()))?;
    let csv_path = with_suffix(&args.out, ".csv");
    let json_path = with_suffix(&args.out, ".truth.json");
    let truth = ModelFile::new(&model, &structure, None, None);
    write_atomic(&csv_path, &format_series(&series))?;
    write_atomic(&json_path, &truth.to_json())?;
    Ok((csv_path, json_path))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Debug, Clone)]
pub enum EvaluateTarget {
    Truth(PathBuf),
    Test { path: PathBuf, center: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum EvaluateReport {
    Structure {
        temporal_precision: f64,
        temporal_recall: f64,
        contemporaneous_precision: f64,
        contemporaneous_recall: f64,
    },
    Prediction {
        mse: f64,
        temporal_edges: usize,
        contemporaneous_edges: usize,
    },
}

impl std::fmt::Display for EvaluateReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EvaluateReport::Structure {
                temporal_precision,
                temporal_recall,
                contemporaneous_precision,
                contemporaneous_recall,
            } => {
                writeln!(f, "{:<16} {:>10} {:>10}", "part", "precision", "recall")?;
                writeln!(f, "{:<16} {:>10.4} {:>10.4}", "temporal", temporal_precision, temporal_recall)?;
                write!(f, "{:<16} {:>10.4} {:>10.4}", "contemporaneous", contemporaneous_precision, contemporaneous_recall)
            }
            EvaluateReport::Prediction { mse, temporal_edges, contemporaneous_edges } => {
                writeln!(f, "{:>6} {:>6} {:>12}", "n_t", "n_c", "mse")?;
                write!(f, "{:>6} {:>6} {:>12.6}", temporal_edges, contemporaneous_edges, mse)
            }
        }
    }
}

pub fn evaluate(model_path: &Path, target: &EvaluateTarget, json_out: Option<&Path>) -> CliResult<EvaluateReport> {
    let file = ModelFile::read(model_path)?;
    let structure = file.structure()?;
    let report = match target {
        EvaluateTarget::Truth(path) => {
            let truth = ModelFile::read(path)?.structure()?;
            let m = precision_recall(&structure, &truth)?;
            EvaluateReport::Structure {
                temporal_precision: m.temporal.precision,
                temporal_recall: m.temporal.recall,
                contemporaneous_precision: m.contemporaneous.precision,
                contemporaneous_recall: m.contemporaneous.recall,
            }
        }
        EvaluateTarget::Test { path, center } => {
            let mut test = read_series(path)?;
            if *center {
                test = test.centered().0;
            }
            let model = file.model()?;
            EvaluateReport::Prediction {
                mse: one_step_mse(&model, &test)?,
                temporal_edges: structure.temporal_edges().len(),
                contemporaneous_edges: structure.contemporaneous_edges().len(),
            }
        }
    };
    if let Some(out) = json_out {
        let mut text = serde_json::to_string_pretty(&report).expect("report serialises");
        text.push('\n');
        write_atomic(out, &text)?;
    }
    Ok(report)
}

/// Writes through a temporary sibling file so a failure never leaves a
/// partial output behind.
fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let tmp = with_suffix(path, ".tmp");
    let fail = |e: std::io::Error| CliError::Input(format!("cannot write {}: {e}", path.display()));
    std::fs::write(&tmp, contents).map_err(fail)?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        fail(e)
    })
}
