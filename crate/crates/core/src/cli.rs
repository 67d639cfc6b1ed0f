//! Command-line front end: scenario loading, sweeps and CSV output.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use rayon::prelude::*;
use thiserror::Error;

use crate::domain::{validate_config, AttackMode, ConfigError, DetectorKind, ScenarioConfig};
use crate::metrics::{self, MetricsAccumulator};
use crate::sim::{simulate_with, SimError, Sinks};

pub const CSV_HEADER: &str = "scenario,detector,axis,axis_value,seed,density,duration,attack_mode,attack_rate,sent,received,pdr,drop_rate,mean_e2e_delay_s,throughput_pps";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Duration,
    Density,
}

impl Axis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::Duration => "duration",
            Axis::Density => "density",
        }
    }

    /// Default sweep points.
    pub fn default_values(&self) -> Vec<f64> {
        match self {
            Axis::Duration => (1..=6).map(|k| f64::from(k) * 200.0).collect(),
            Axis::Density => {
                let mut v: Vec<f64> = (1..=7).map(|k| f64::from(k) * 20.0).collect();
                v.push(150.0);
                v
            }
        }
    }

    /// `base` with this axis set to `value`.
    pub fn apply(&self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig, RunError> {
        let mut cfg = base.clone();
        match self {
            Axis::Duration => cfg.duration = value,
            Axis::Density => {
                if value.fract() != 0.0 || !(1.0..=f64::from(u32::MAX)).contains(&value) {
                    return Err(RunError::Config(format!(
                        "density sweep value {value} is not a positive integer"
                    )));
                }
                cfg.density = value as u32;
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DetectorChoice {
    Psecure,
    Baseline,
    Both,
}

impl DetectorChoice {
    pub fn kinds(&self) -> Vec<DetectorKind> {
        match self {
            DetectorChoice::Psecure => vec![DetectorKind::PSecure],
            DetectorChoice::Baseline => vec![DetectorKind::Baseline],
            DetectorChoice::Both => DetectorKind::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Io { .. } => 2,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        RunError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.to_string())
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub scenario: String,
    pub detector: DetectorKind,
    pub axis: Option<Axis>,
    pub axis_value: Option<f64>,
    pub seed: u64,
    pub density: u32,
    pub duration: f64,
    pub attack_mode: AttackMode,
    pub attack_rate: Option<f64>,
    pub sent: u64,
    pub received: u64,
    pub pdr: Option<f64>,
    pub drop_rate: Option<f64>,
    pub mean_e2e_delay_s: Option<f64>,
    pub throughput_pps: Option<f64>,
}

impl MetricsRow {
    pub fn from_run(
        cfg: &ScenarioConfig,
        axis: Option<(Axis, f64)>,
        m: &MetricsAccumulator,
    ) -> Self {
        let attacking = cfg.attacker.mode != AttackMode::None;
        Self {
            scenario: cfg.name.clone(),
            detector: cfg.detector,
            axis: axis.map(|a| a.0),
            axis_value: axis.map(|a| a.1),
            seed: cfg.seed,
            density: cfg.density,
            duration: cfg.duration,
            attack_mode: cfg.attacker.mode,
            attack_rate: attacking.then_some(cfg.attacker.rate),
            sent: m.sent,
            received: m.received,
            pdr: metrics::pdr(m),
            drop_rate: metrics::drop_rate(m),
            mean_e2e_delay_s: metrics::mean_e2e_delay(m),
            throughput_pps: metrics::throughput(m),
        }
    }

    pub fn to_csv(&self) -> String {
        fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
            v.map(|v| v.to_string()).unwrap_or_default()
        }
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.scenario,
            self.detector,
            opt(self.axis.map(|a| a.as_str())),
            opt(self.axis_value),
            self.seed,
            self.density,
            self.duration,
            self.attack_mode,
            opt(self.attack_rate),
            self.sent,
            self.received,
            opt(self.pdr),
            opt(self.drop_rate),
            opt(self.mean_e2e_delay_s),
            opt(self.throughput_pps),
        );
        s
    }
}

pub fn write_csv<W: Write>(mut w: W, rows: &[MetricsRow]) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.to_csv())?;
    }
    w.flush()
}

/// One planned run.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub cfg: ScenarioConfig,
    pub axis: Option<(Axis, f64)>,
}

impl RunSpec {
    fn file_stem(&self) -> String {
        match self.axis {
            Some((axis, v)) => format!(
                "{}-{}{}-seed{}",
                self.cfg.detector,
                axis.as_str(),
                v,
                self.cfg.seed
            ),
            None => format!("{}-seed{}", self.cfg.detector, self.cfg.seed),
        }
    }
}

/// Runs in output order: axis value, then seed, then detector. Every
/// configuration is validated before anything runs.
pub fn plan(
    base: &ScenarioConfig,
    sweep: Option<(Axis, &[f64])>,
    seeds: Option<u64>,
    detectors: &[DetectorKind],
) -> Result<Vec<RunSpec>, RunError> {
    if detectors.is_empty() {
        return Err(RunError::Config("no detector selected".into()));
    }
    let seeds: Vec<u64> = match seeds {
        Some(0) => return Err(RunError::Config("--seeds must be at least 1".into())),
        Some(n) => (1..=n).collect(),
        None => vec![base.seed],
    };
    let points: Vec<Option<(Axis, f64)>> = match sweep {
        Some((_, [])) => return Err(RunError::Config("sweep has no values".into())),
        Some((axis, values)) => values.iter().map(|v| Some((axis, *v))).collect(),
        None => vec![None],
    };
    let mut runs = Vec::new();
    for point in points {
        let at = match point {
            Some((axis, v)) => axis.apply(base, v)?,
            None => base.clone(),
        };
        for &seed in &seeds {
            for &detector in detectors {
                let cfg = ScenarioConfig {
                    seed,
                    detector,
                    ..at.clone()
                };
                let violations = validate_config(&cfg);
                if let Some(v) = violations.first() {
                    return Err(RunError::Config(format!(
                        "invalid scenario: {}: {}",
                        v.field, v.rule
                    )));
                }
                runs.push(RunSpec { cfg, axis: point });
            }
        }
    }
    Ok(runs)
}

/// Where per-run trace and verdict files go. With a single run the path is
/// the file itself; otherwise it is a directory holding one file per run.
#[derive(Debug, Clone, Default)]
pub struct Outputs {
    pub trace: Option<PathBuf>,
    pub verdicts: Option<PathBuf>,
}

fn target(path: &Path, single: bool, run: &RunSpec, ext: &str) -> PathBuf {
    if single {
        path.to_path_buf()
    } else {
        path.join(format!("{}.{ext}", run.file_stem()))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, RunError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| RunError::io(path, e))
}

fn execute(run: &RunSpec, outputs: &Outputs, single: bool) -> Result<MetricsRow, RunError> {
    let trace_path = outputs
        .trace
        .as_deref()
        .map(|p| target(p, single, run, "trace"));
    let verdict_path = outputs
        .verdicts
        .as_deref()
        .map(|p| target(p, single, run, "verdicts"));
    let mut trace = trace_path.as_deref().map(create).transpose()?;
    let mut verdicts = verdict_path.as_deref().map(create).transpose()?;
    let sinks = Sinks {
        trace: trace.as_mut().map(|w| w as &mut dyn Write),
        verdicts: verdicts.as_mut().map(|w| w as &mut dyn Write),
    };
    let out = simulate_with(&run.cfg, sinks).map_err(|e| match e {
        SimError::Io(source) => {
            let path = trace_path
                .as_deref()
                .or(verdict_path.as_deref())
                .unwrap_or(Path::new("-"));
            RunError::io(path, source)
        }
        other => RunError::Config(other.to_string()),
    })?;
    Ok(MetricsRow::from_run(&run.cfg, run.axis, &out.metrics))
}

/// Executes `runs` in parallel and returns rows in plan order.
pub fn run_all(runs: &[RunSpec], outputs: &Outputs) -> Result<Vec<MetricsRow>, RunError> {
    let single = runs.len() == 1;
    if !single {
        for dir in [&outputs.trace, &outputs.verdicts].into_iter().flatten() {
            fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
        }
    }
    runs.par_iter()
        .map(|r| execute(r, outputs, single))
        .collect()
}

/// Runs one scenario and returns its row.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<MetricsRow, RunError> {
    let run = RunSpec {
        cfg: cfg.clone(),
        axis: None,
    };
    if let Some(v) = validate_config(cfg).first() {
        return Err(RunError::Config(format!(
            "invalid scenario: {}: {}",
            v.field, v.rule
        )));
    }
    execute(&run, &Outputs::default(), true)
}

#[derive(Debug, Parser)]
#[command(
    name = "vanet-sim",
    version,
    about = "Roadside DoS detection simulator"
)]
pub struct Args {
    /// Scenario file of `key = value` lines.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Sweep one axis over its default points (or --values).
    #[arg(long, value_enum)]
    pub sweep: Option<Axis>,
    /// Comma-separated sweep points overriding the defaults.
    #[arg(long, value_name = "LIST", requires = "sweep")]
    pub values: Option<String>,
    /// Run seeds 1..=N.
    #[arg(long, value_name = "N")]
    pub seeds: Option<u64>,
    #[arg(long, value_enum)]
    pub detector: Option<DetectorChoice>,
    #[arg(long, value_parser = AttackMode::from_str)]
    pub attack: Option<AttackMode>,
    /// CSV destination; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Event trace file, or a directory when several runs are planned.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    /// Phase-1 verdict log file, or a directory when several runs are planned.
    #[arg(long, value_name = "PATH")]
    pub verdict_log: Option<PathBuf>,
}

fn parse_values(list: &str) -> Result<Vec<f64>, RunError> {
    list.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| RunError::Config(format!("sweep value `{}`: {e}", v.trim())))
        })
        .collect()
}

/// Full CLI behaviour after argument parsing.
pub fn run(args: &Args) -> Result<(), RunError> {
    let mut base = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
            ScenarioConfig::from_text(&text)?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(mode) = args.attack {
        base.attacker.mode = mode;
    }
    let detectors = args
        .detector
        .map_or_else(|| vec![base.detector], |d| d.kinds());
    let values = match (args.sweep, &args.values) {
        (Some(_), Some(list)) => parse_values(list)?,
        (Some(axis), None) => axis.default_values(),
        (None, _) => Vec::new(),
    };
    let sweep = args.sweep.map(|axis| (axis, values.as_slice()));
    let runs = plan(&base, sweep, args.seeds, &detectors)?;
    let outputs = Outputs {
        trace: args.trace.clone(),
        verdicts: args.verdict_log.clone(),
    };
    let rows = run_all(&runs, &outputs)?;
    match &args.out {
        Some(path) => write_csv(create(path)?, &rows).map_err(|e| RunError::io(path, e)),
        None => write_csv(io::stdout().lock(), &rows)
            .map_err(|e| RunError::io(Path::new("<stdout>"), e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_axes() {
        assert_eq!(
            Axis::Duration.default_values(),
            vec![200.0, 400.0, 600.0, 800.0, 1000.0, 1200.0]
        );
        assert_eq!(
            Axis::Density.default_values(),
            vec![20.0, 40.0, 60.0, 80.0, 100.0, 120.0, 140.0, 150.0]
        );
    }

    #[test]
    fn header_has_fifteen_columns() {
        assert_eq!(CSV_HEADER.split(',').count(), 15);
    }

    #[test]
    fn absent_values_are_empty_fields() {
        let cfg = ScenarioConfig::default();
        let idle = MetricsAccumulator {
            elapsed: 200.0,
            ..Default::default()
        };
        let row = MetricsRow::from_run(&cfg, None, &idle);
        assert_eq!(row.to_csv(), "default,psecure,,,1,100,200,none,,0,0,,,,0");
        let unobserved = MetricsRow::from_run(&cfg, None, &MetricsAccumulator::default());
        assert!(unobserved.to_csv().ends_with(",0,0,,,,"));
    }

    #[test]
    fn plan_orders_by_value_seed_detector() {
        let base = ScenarioConfig::default();
        let runs = plan(
            &base,
            Some((Axis::Density, &[40.0, 20.0])),
            Some(2),
            &DetectorKind::ALL,
        )
        .unwrap();
        let keys: Vec<(u32, u64, DetectorKind)> = runs
            .iter()
            .map(|r| (r.cfg.density, r.cfg.seed, r.cfg.detector))
            .collect();
        assert_eq!(
            keys,
            vec![
                (40, 1, DetectorKind::PSecure),
                (40, 1, DetectorKind::Baseline),
                (40, 2, DetectorKind::PSecure),
                (40, 2, DetectorKind::Baseline),
                (20, 1, DetectorKind::PSecure),
                (20, 1, DetectorKind::Baseline),
                (20, 2, DetectorKind::PSecure),
                (20, 2, DetectorKind::Baseline),
            ]
        );
    }

    #[test]
    fn plan_rejects_bad_input() {
        let base = ScenarioConfig::default();
        let one = [DetectorKind::PSecure];
        assert!(plan(&base, None, Some(0), &one).is_err());
        assert!(plan(&base, Some((Axis::Density, &[])), None, &one).is_err());
        assert!(plan(&base, Some((Axis::Density, &[12.5])), None, &one).is_err());
        assert!(plan(&base, Some((Axis::Duration, &[-1.0])), None, &one).is_err());
        assert!(plan(&base, None, None, &[]).is_err());
    }
}
