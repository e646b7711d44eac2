//! Command-line front end: loads curve and limits files (or a built-in
//! fixture), runs the scheduler and reports each stage.

use clap::{Parser, ValueEnum};
use nurbsfeed::format::sig9;
use nurbsfeed::interp::{read_csv, run_stats, sample_trajectory, write_csv};
use nurbsfeed::scheduler::{feedrate_limit_at, find_breakpoints, schedule_curve_with, DEFAULT_SAMPLES};
use nurbsfeed::{fixtures, KinematicLimits, NurbsCurve};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Schedule the curve, write the trajectory CSV to --out, print stats.
    Schedule,
    /// Print breakpoint parameters and their feedrate caps.
    Breakpoints,
    /// Print the scheduled S-curve of every sub-curve.
    Profile,
    /// Recompute run statistics from the trajectory CSV at --out.
    Stats,
    /// Write a built-in fixture as a curve file to --out (or stdout).
    Fixture,
}

#[derive(Debug, Parser)]
#[command(name = "nurbsfeed", version, about = "Jerk-limited feedrate scheduling for planar NURBS toolpaths")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Curve file (JSON: degree, control_points, weights, knots).
    #[arg(long)]
    pub curve: Option<PathBuf>,
    /// Built-in curve instead of --curve: trident, line50, butterfly_partial.
    #[arg(long, conflicts_with = "curve")]
    pub fixture: Option<String>,
    /// Limits file (JSON keys F, A_t, A_n, J_t, J_n, delta, T_s); missing fields take defaults.
    #[arg(long)]
    pub limits: Option<PathBuf>,
    /// Trajectory CSV, written by `schedule` and read by `stats`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Grid size of the breakpoint scan.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CurveSource {
    File(PathBuf),
    Fixture(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub curve: Option<CurveSource>,
    pub limits_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub samples: usize,
}

impl Cli {
    pub fn into_config(self) -> RunConfig {
        let curve = match (self.curve, self.fixture) {
            (Some(path), _) => Some(CurveSource::File(path)),
            (None, Some(name)) => Some(CurveSource::Fixture(name)),
            (None, None) => None,
        };
        RunConfig { command: self.command, curve, limits_path: self.limits, output_path: self.out, samples: self.samples }
    }
}

/// Failure reported as `error: <kind>: <message>` on one line.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    fn new(kind: &'static str, message: impl fmt::Display) -> Self {
        CliError { kind, message: message.to_string() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for CliError {}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::new("io", format!("{}: {e}", path.display()))
}

pub fn load_curve(source: &CurveSource) -> Result<NurbsCurve, CliError> {
    match source {
        CurveSource::Fixture(name) => fixtures::load_fixture(name).ok_or_else(|| {
            CliError::new("usage", format!("unknown fixture `{name}`; known: {}", fixtures::NAMES.join(", ")))
        }),
        CurveSource::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            serde_json::from_str(&text).map_err(|e| CliError::new("curve", format!("{}: {e}", path.display())))
        }
    }
}

pub fn load_limits(path: Option<&Path>) -> Result<KinematicLimits, CliError> {
    let limits = match path {
        None => KinematicLimits::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            serde_json::from_str(&text).map_err(|e| CliError::new("limits", format!("{}: {e}", path.display())))?
        }
    };
    limits.validate().map_err(|e| CliError::new("limits", e))?;
    Ok(limits)
}

fn require_curve(config: &RunConfig) -> Result<NurbsCurve, CliError> {
    let source = config.curve.as_ref().ok_or_else(|| CliError::new("usage", "--curve PATH or --fixture NAME is required"))?;
    load_curve(source)
}

fn require_out(config: &RunConfig) -> Result<&Path, CliError> {
    config.output_path.as_deref().ok_or_else(|| CliError::new("usage", "--out PATH is required"))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::new("io", e))
}

pub fn run(config: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    if config.samples < 100 {
        return Err(CliError::new("usage", format!("--samples must be >= 100, got {}", config.samples)));
    }
    match config.command {
        Command::Schedule => {
            let path = require_out(config)?;
            let curve = require_curve(config)?;
            let limits = load_limits(config.limits_path.as_deref())?;
            let plan = schedule_curve_with(&curve, &limits, config.samples).map_err(|e| CliError::new("schedule", e))?;
            let points = sample_trajectory(&curve, &plan, &limits).map_err(|e| CliError::new("schedule", e))?;
            let mut csv = Vec::new();
            write_csv(&points, &mut csv).map_err(|e| CliError::new("io", e))?;
            std::fs::write(path, &csv).map_err(|e| io_error(path, e))?;
            // stats come from the written text so that `stats` reproduces them
            let written = read_csv(csv.as_slice()).map_err(|e| CliError::new("csv", e))?;
            emit(out, &run_stats(&written).to_text())
        }
        Command::Breakpoints => {
            let curve = require_curve(config)?;
            let limits = load_limits(config.limits_path.as_deref())?;
            let breakpoints = find_breakpoints(&curve, &limits, config.samples).map_err(|e| CliError::new("schedule", e))?;
            let mut text = String::from("u,v_limit\n");
            for u in breakpoints {
                let cap = feedrate_limit_at(&curve, u, &limits).map_err(|e| CliError::new("curve", e))?;
                text.push_str(&format!("{},{}\n", sig9(u), sig9(cap)));
            }
            emit(out, &text)
        }
        Command::Profile => {
            let curve = require_curve(config)?;
            let limits = load_limits(config.limits_path.as_deref())?;
            let plan = schedule_curve_with(&curve, &limits, config.samples).map_err(|e| CliError::new("schedule", e))?;
            let mut text = String::from("index,case,v_start,v_peak,v_end,T1,T2,T3,T4,T5,T6,T7,A1,A2\n");
            for (i, (sub, p)) in plan.sub_curves.iter().zip(&plan.profiles).enumerate() {
                let case = sub.case.map_or_else(|| "NONE".to_string(), |c| c.to_string());
                let mut row = vec![i.to_string(), case, sig9(p.v_s), sig9(p.v_peak), sig9(p.v_e)];
                row.extend(p.durations.iter().map(|&d| sig9(d)));
                row.push(sig9(p.a1));
                row.push(sig9(p.a2));
                text.push_str(&row.join(","));
                text.push('\n');
            }
            emit(out, &text)
        }
        Command::Stats => {
            let path = require_out(config)?;
            let file = std::fs::File::open(path).map_err(|e| io_error(path, e))?;
            let points = read_csv(std::io::BufReader::new(file)).map_err(|e| CliError::new("csv", e))?;
            emit(out, &run_stats(&points).to_text())
        }
        Command::Fixture => {
            let curve = require_curve(config)?;
            let mut json = serde_json::to_string_pretty(&curve).map_err(|e| CliError::new("curve", e))?;
            json.push('\n');
            match &config.output_path {
                Some(path) => std::fs::write(path, json).map_err(|e| io_error(path, e)),
                None => emit(out, &json),
            }
        }
    }
}
