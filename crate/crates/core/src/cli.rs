//! Scenario files and the `pidelay` command line.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! [plant]
//! numerator = [1.0]          # E(s), ascending powers, physical time
//! denominator = [1.0, 1.0]   # A(s), ascending powers, physical time
//! delay = 1.0                # transport delay L
//!
//! [pid]
//! k = 0.0
//! k_i = 0.5
//! k_d = 0.0
//!
//! [initial]
//! steady = 1.0               # or `knots` + `segments` (global time on [-1, 0])
//!
//! [[setpoint]]
//! time = 0.0
//! value = 0.0
//!
//! [output]
//! horizon = 10               # delay intervals to solve
//! dt = 0.01
//! band = 0.05
//! ```
//!
//! Plant and PID coefficients are given in physical time and normalized with
//! `delay`; every other time (setpoint times, `dt`, the CSV `t` column and the
//! reported metrics) is measured in delay units.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::closed_loop::{build_closed_loop, DdeSystem, PidParams, PlantModel};
use crate::error::{Error, Result};
use crate::exp_poly::ExpPoly;
use crate::metrics::{compute_metrics, ResponseMetrics};
use crate::stepper::{solve, ForcingTerm, InitialCondition, PiecewiseSolution};
use crate::verify::{self, Level};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
    #[serde(default = "one")]
    pub delay: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidSection {
    #[serde(default)]
    pub k: f64,
    #[serde(default)]
    pub k_i: f64,
    #[serde(default)]
    pub k_d: f64,
}

/// One mode `e^{root t} Σ_i coeffs[i] t^i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub root: f64,
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steady: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knots: Option<Vec<f64>>,
    /// Per knot interval, the modes of the history in global time `t ∈ [-1, 0]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<Vec<ModeSpec>>>,
    /// Setpoint before the first step; defaults to `steady`, else 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setpoint: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetpointStep {
    pub time: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_band")]
    pub band: f64,
}

fn default_horizon() -> usize {
    10
}

fn default_dt() -> f64 {
    0.01
}

fn default_band() -> f64 {
    0.05
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { horizon: default_horizon(), dt: default_dt(), band: default_band() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub plant: PlantSection,
    pub pid: PidSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub setpoint: Vec<SetpointStep>,
    #[serde(default)]
    pub output: OutputSection,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    fn validate(&self) -> Result<()> {
        if self.setpoint.iter().any(|s| !(s.time >= 0.0)) {
            return Err(Error::Config("setpoint times must be non-negative".into()));
        }
        if self.output.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if !(self.output.dt > 0.0) {
            return Err(Error::Config("dt must be positive".into()));
        }
        let init = &self.initial;
        match (init.steady, &init.knots, &init.segments) {
            (Some(_), None, None) | (None, None, None) | (None, Some(_), Some(_)) => Ok(()),
            _ => Err(Error::Config(
                "initial condition takes either `steady` or both `knots` and `segments`".into(),
            )),
        }
    }

    /// Delay-normalized closed loop.
    pub fn system(&self) -> Result<DdeSystem> {
        let delay = self.plant.delay;
        let plant = PlantModel::new(self.plant.numerator.clone(), self.plant.denominator.clone())?
            .normalized(delay)?;
        let pid = PidParams::new(self.pid.k, self.pid.k_i, self.pid.k_d)?.normalized(delay)?;
        build_closed_loop(&pid, &plant)
    }

    pub fn initial_condition(&self) -> Result<InitialCondition> {
        match (&self.initial.knots, &self.initial.segments) {
            (Some(knots), Some(segments)) => {
                let segments = segments
                    .iter()
                    .map(|modes| ExpPoly::from_terms(modes.iter().map(|m| (m.root, m.coeffs.clone()))))
                    .collect();
                InitialCondition::from_global(knots.clone(), segments)
            }
            _ => Ok(InitialCondition::steady(self.initial.steady.unwrap_or(0.0))),
        }
    }

    pub fn initial_setpoint(&self) -> f64 {
        self.initial.setpoint.or(self.initial.steady).unwrap_or(0.0)
    }

    pub fn forcing(&self) -> Result<ForcingTerm> {
        let steps: Vec<(f64, f64)> = self.setpoint.iter().map(|s| (s.time, s.value)).collect();
        ForcingTerm::steps(self.initial_setpoint(), &steps)
    }

    /// Setpoint after the last step.
    pub fn final_setpoint(&self) -> f64 {
        let mut steps = self.setpoint.clone();
        steps.sort_by(|a, b| a.time.total_cmp(&b.time));
        steps.last().map_or(self.initial_setpoint(), |s| s.value)
    }

    pub fn solve(&self) -> Result<(DdeSystem, PiecewiseSolution)> {
        let system = self.system()?;
        let sol = solve(&system, &self.initial_condition()?, &self.forcing()?, self.output.horizon)?;
        Ok((system, sol))
    }
}

/// Formats with 17 significant digits; negative zero prints as zero.
pub fn fmt_float(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub csv: String,
    pub metrics: ResponseMetrics,
}

/// Samples the analytic response every `output.dt` over `[0, horizon]` and
/// computes the step metrics against the final setpoint.
pub fn cmd_simulate(cfg: &ScenarioConfig) -> Result<SimulationOutput> {
    let (_, sol) = cfg.solve()?;
    let horizon = cfg.output.horizon as f64;
    let dt = cfg.output.dt;
    let count = (horizon / dt + 1e-9).floor() as usize;
    let mut csv = String::from("t,y\n");
    for i in 0..=count {
        let t = (i as f64 * dt).min(horizon);
        let y = sol.value(t).expect("sample inside solved range");
        writeln!(csv, "{},{}", fmt_float(t), fmt_float(y)).unwrap();
    }
    let metrics = compute_metrics(&sol, cfg.final_setpoint(), horizon, cfg.output.band)?;
    Ok(SimulationOutput { csv, metrics })
}

pub fn format_metrics(m: &ResponseMetrics) -> String {
    let opt = |v: Option<f64>| v.map_or("none".to_string(), fmt_float);
    format!(
        "overshoot = {}\nsettling_time = {}\nband = {}\niae = {}\ndecay_ratio = {}\ndeadbeat = {}\n",
        fmt_float(m.overshoot),
        opt(m.settling_time),
        m.band,
        fmt_float(m.iae),
        opt(m.decay_ratio),
        m.deadbeat
    )
}

/// Coefficient table `p,root,i,G` of segment `(n, k)`; zero coefficients are omitted.
pub fn cmd_coeffs(cfg: &ScenarioConfig, n: usize, k: usize) -> Result<String> {
    if n > cfg.output.horizon {
        return Err(Error::HorizonExceedsSolution { horizon: n as f64, solved: cfg.output.horizon });
    }
    let (_, sol) = cfg.solve()?;
    let rows = sol
        .coefficient_rows(n, k)
        .ok_or_else(|| Error::InvalidArgument(format!("no segment (n = {n}, k = {k})")))?;
    let mut out = String::from("p,root,i,G\n");
    for row in rows.iter().filter(|r| r.value != 0.0) {
        writeln!(out, "{},{},{},{}", row.p, fmt_float(row.root), row.i, fmt_float(row.value)).unwrap();
    }
    Ok(out)
}

/// Characteristic roots `p,root`, null root first.
pub fn cmd_roots(cfg: &ScenarioConfig) -> Result<String> {
    let system = cfg.system()?;
    let mut out = String::from("p,root\n");
    for (p, r) in system.roots().iter().enumerate() {
        writeln!(out, "{},{}", p + 1, fmt_float(*r)).unwrap();
    }
    Ok(out)
}

#[derive(Debug, Parser)]
#[command(name = "pidelay", about = "Exact setpoint responses of delayed PID loops")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the response as CSV and report step metrics.
    Simulate(SimulateArgs),
    /// Dump the coefficients of one solution segment.
    Coeffs(CoeffsArgs),
    /// Print the characteristic roots of the closed loop.
    Roots(ConfigArgs),
    /// Run the self-check suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub band: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CoeffsArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Delay interval `n` (1-based; 0 is the history).
    #[arg(long)]
    pub interval: usize,
    /// Sub-interval `k` (1-based).
    #[arg(long, default_value_t = 1)]
    pub segment: usize,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LevelArg {
    Quick,
    Full,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = LevelArg::Quick)]
    pub level: LevelArg,
    #[arg(long, default_value_t = verify::DEFAULT_SEED)]
    pub seed: u64,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(|e| Error::Io(e.to_string())),
    }
}

fn load_with(path: &Path, horizon: Option<usize>, dt: Option<f64>, band: Option<f64>) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(h) = horizon {
        cfg.output.horizon = h;
    }
    if let Some(dt) = dt {
        cfg.output.dt = dt;
    }
    if let Some(band) = band {
        cfg.output.band = band;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Executes one parsed command, writing results to `stdout` and diagnostics
/// or the metrics block to `stderr`. Returns the process exit code.
pub fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let outcome: Result<i32> = (|| match cli.command {
        Command::Simulate(args) => {
            let cfg = load_with(&args.config, args.horizon, args.dt, args.band)?;
            let sim = cmd_simulate(&cfg)?;
            emit(&sim.csv, args.out.as_deref(), stdout)?;
            let block = format_metrics(&sim.metrics);
            let sink: &mut dyn Write = if args.out.is_some() { stdout } else { stderr };
            sink.write_all(block.as_bytes()).map_err(|e| Error::Io(e.to_string()))?;
            Ok(EXIT_OK)
        }
        Command::Coeffs(args) => {
            let cfg = load_with(&args.config, args.horizon, None, None)?;
            emit(&cmd_coeffs(&cfg, args.interval, args.segment)?, args.out.as_deref(), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Roots(args) => {
            let cfg = ScenarioConfig::load(&args.config)?;
            emit(&cmd_roots(&cfg)?, None, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Verify(args) => {
            let level = match args.level {
                LevelArg::Quick => Level::Quick,
                LevelArg::Full => Level::Full,
            };
            let report = verify::run(level, args.seed);
            emit(&report.to_string(), None, stdout)?;
            Ok(if report.passed() { EXIT_OK } else { EXIT_VERIFY })
        }
    })();
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_INPUT
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli, stdout, stderr),
        Err(e) => {
            let _ = write!(stderr, "{e}");
            if e.use_stderr() {
                EXIT_INPUT
            } else {
                EXIT_OK
            }
        }
    }
}
