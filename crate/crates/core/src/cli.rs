//! Command-line front end: `enhance`, `metrics`, `profile`, `pareto` and
//! `simulate`. JSON goes to stdout or `--out`; diagnostics go to stderr.
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::controller::{
    enumerate_configs, load_regressor, pareto_front, regressor_features, regressor_predict, ConfigEvaluator,
    ObjectivePoint,
};
use crate::energy::{load_platform, CacheSource, CacheState};
use crate::harness::{load_budget_trace, run_simulation, BudgetPolicy, SimulationOptions};
use crate::imageio::{load_frame, load_sequence, save_sequence, FrameSequence, Resolution};
use crate::metrics::{compare, sequence_report};
use crate::net::{load_weights, LayerKind};
use crate::scheduler::{enhance_sequence, ReuseConfig};

type BoxError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, Parser)]
#[command(name = "enlight", version, about = "Low-light video enhancement with energy-aware adaptation")]
struct Cli {
    /// Worker threads for parallel stages (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Enhance a directory of frames and write a per-frame plan.
    Enhance(EnhanceArgs),
    /// Quality and temporal-stability metrics for a frame or a sequence.
    Metrics(MetricsArgs),
    /// Per-layer MAC, memory-access and energy table.
    Profile(ProfileArgs),
    /// Evaluate all configurations on a sample and report the frontier.
    Pareto(ParetoArgs),
    /// Play a budget trace against a sequence.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct EnhanceArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    weights: PathBuf,
    #[arg(long, default_value_t = 0)]
    theta_f: u8,
    #[arg(long, default_value_t = 0)]
    theta_l: u8,
    /// One of 1, 1/2, 1/3.
    #[arg(long, default_value = "1")]
    theta_d: Resolution,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    /// Frame file or directory of frames.
    #[arg(long)]
    input: PathBuf,
    /// Reference frame or directory, matching `--input`.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProfileArgs {
    #[arg(long)]
    weights: PathBuf,
    /// Input size as HxW, e.g. 270x480.
    #[arg(long, value_parser = parse_hw)]
    resolution: (usize, usize),
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    platform: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ParetoArgs {
    #[arg(long)]
    weights: PathBuf,
    #[arg(long)]
    sample: PathBuf,
    #[arg(long)]
    platform: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    /// Predict (Q, E) with a regressor instead of running every configuration.
    #[arg(long)]
    regressor: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    weights: PathBuf,
    #[arg(long)]
    platform: PathBuf,
    /// Report path; a CSV flattening is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
    #[arg(long, default_value_t = 1.0)]
    check_period: f64,
    /// Budget per frame as a multiple of `supply · E(0, 0, 1)`.
    #[arg(long, default_value_t = 1.0)]
    budget_scale: f64,
    #[arg(long, default_value_t = 16)]
    sample_frames: usize,
    #[arg(long)]
    regressor: Option<PathBuf>,
}

fn parse_hw(s: &str) -> Result<(usize, usize), String> {
    let (h, w) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected HxW, got {s:?}"))?;
    let h: usize = h.trim().parse().map_err(|_| format!("bad height in {s:?}"))?;
    let w: usize = w.trim().parse().map_err(|_| format!("bad width in {s:?}"))?;
    if h == 0 || w == 0 {
        return Err(format!("zero dimension in {s:?}"));
    }
    Ok((h, w))
}

/// Runs the command line with process stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let result = match pool.build() {
        Ok(pool) => pool.install(|| dispatch(cli.command, &mut out, &mut err)),
        Err(e) => Err(e.into()),
    };
    let _ = stdout.write_all(&out);
    let _ = stderr.write_all(&err);
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), BoxError> {
    match command {
        Command::Enhance(a) => enhance(a, stdout, stderr),
        Command::Metrics(a) => metrics(a, stdout),
        Command::Profile(a) => profile(a, stdout),
        Command::Pareto(a) => pareto(a, stdout, stderr),
        Command::Simulate(a) => simulate(a, stdout, stderr),
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), BoxError> {
    let json = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => std::fs::write(path, json + "\n")?,
        None => writeln!(stdout, "{json}")?,
    }
    Ok(())
}

fn enhance(a: EnhanceArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), BoxError> {
    let spec = load_weights(&a.weights)?;
    let config = ReuseConfig::new(a.theta_f, a.theta_l, a.theta_d)?;
    let seq = load_sequence(&a.input)?;
    let out = enhance_sequence(&seq, &spec, config)?;
    std::fs::create_dir_all(&a.output)?;
    let written = save_sequence(&out.frames, &a.output)?;
    let plan = out.plan_file(config);
    std::fs::write(a.output.join("plan.json"), serde_json::to_string_pretty(&plan)? + "\n")?;
    writeln!(stderr, "enhanced {} frames under {config}", written.len())?;
    #[derive(Serialize)]
    struct Summary {
        config: ReuseConfig,
        frames: usize,
        network_runs: usize,
        mean_latency_ms: f64,
    }
    let summary = Summary {
        config,
        frames: written.len(),
        network_runs: out.network_runs(),
        mean_latency_ms: out.latency.mean_ms(),
    };
    emit(&summary, None, stdout)
}

fn metrics(a: MetricsArgs, stdout: &mut dyn Write) -> Result<(), BoxError> {
    let report = if a.input.is_dir() {
        let seq = load_sequence(&a.input)?;
        let reference = a.reference.as_ref().map(load_sequence).transpose()?;
        sequence_report(&seq, reference.as_ref())?
    } else {
        let reference = a.reference.as_ref().ok_or("a single frame needs --reference")?;
        compare(&load_frame(reference)?, &load_frame(&a.input)?)?
    };
    emit(&report, a.out.as_deref(), stdout)
}

#[derive(Serialize)]
struct ProfileRow {
    layer: usize,
    kind: LayerKind,
    #[serde(rename = "C")]
    macs: u64,
    #[serde(rename = "M")]
    mem_accesses: u64,
    #[serde(rename = "E")]
    energy: f64,
}

#[derive(Serialize)]
struct ProfileReport {
    resolution: [usize; 2],
    epsilon: f64,
    layers: Vec<ProfileRow>,
    total: f64,
}

fn profile(a: ProfileArgs, stdout: &mut dyn Write) -> Result<(), BoxError> {
    let spec = load_weights(&a.weights)?;
    let units = load_platform(&a.platform)?.units()?;
    let cache = CacheState::new(a.epsilon, CacheSource::Measured)?;
    let (h, w) = a.resolution;
    let profiler = crate::energy::EnergyProfiler::new(&spec, h, w, units);
    let layers: Vec<ProfileRow> = profiler
        .profile(&spec, cache)
        .into_iter()
        .map(|p| ProfileRow { layer: p.layer, kind: p.kind, macs: p.macs, mem_accesses: p.mem_accesses, energy: p.energy })
        .collect();
    let total = layers.iter().map(|r| r.energy).sum();
    emit(&ProfileReport { resolution: [h, w], epsilon: a.epsilon, layers, total }, a.out.as_deref(), stdout)
}

#[derive(Serialize)]
struct ParetoReport {
    epsilon: f64,
    points: Vec<ObjectivePoint>,
    frontier: Vec<ObjectivePoint>,
}

fn pareto(a: ParetoArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), BoxError> {
    let spec = load_weights(&a.weights)?;
    let units = load_platform(&a.platform)?.units()?;
    let cache = CacheState::new(a.epsilon, CacheSource::Measured)?;
    let sample = load_sequence(&a.sample)?;
    let points = match &a.regressor {
        Some(path) => {
            let reg = load_regressor(path)?;
            let frames = sample.frames();
            let features = regressor_features(&frames[frames.len() - 1], &frames[0])?;
            regressor_predict(&reg, &features)?
        }
        None => ConfigEvaluator::new(&spec, &sample, units)?.table()?.points(cache)?,
    };
    let frontier = pareto_front(&points)?;
    writeln!(stderr, "{} of {} configurations on the frontier", frontier.len(), enumerate_configs().len())?;
    emit(&ParetoReport { epsilon: a.epsilon, points, frontier }, a.out.as_deref(), stdout)
}

fn simulate(a: SimulateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), BoxError> {
    let spec = load_weights(&a.weights)?;
    let preset = load_platform(&a.platform)?;
    let trace = load_budget_trace(&a.trace)?;
    let seq: FrameSequence = load_sequence(&a.input)?.with_frame_rate(a.fps);
    let options = SimulationOptions {
        fps: a.fps,
        check_period_s: a.check_period,
        budget: BudgetPolicy::SupplyScaled { scale: a.budget_scale },
        sample_frames: a.sample_frames,
        peak_mac_rate_per_ms: preset.peak_mac_rate_per_ms,
        regressor: a.regressor.as_ref().map(load_regressor).transpose()?,
    };
    let report = run_simulation(&seq, &trace, &spec, preset.units()?, &options)?;
    writeln!(
        stderr,
        "{} frames, {} intervals, {} adaptations",
        report.totals.frames,
        report.intervals.len(),
        report.totals.adaptations
    )?;
    match &a.out {
        Some(path) => {
            std::fs::write(path, report.to_json() + "\n")?;
            std::fs::write(path.with_extension("csv"), report.to_csv())?;
        }
        None => writeln!(stdout, "{}", report.to_json())?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hw_flag() {
        assert_eq!(parse_hw("270x480"), Ok((270, 480)));
        assert!(parse_hw("270").is_err());
        assert!(parse_hw("0x5").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_with(["enlight", "enhance", "--input", "a", "--output", "b"], &mut out, &mut err);
        assert_eq!(code, 1);
        assert!(String::from_utf8(err).unwrap().contains("--weights"));
        let mut err = Vec::new();
        assert_eq!(run_with(["enlight", "profile", "--bogus"], &mut out, &mut err), 1);
        let mut err = Vec::new();
        assert_eq!(run_with(["enlight", "enhance", "--theta-d", "1/4"], &mut out, &mut err), 1);
    }

    #[test]
    fn runtime_errors_exit_two() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_with(
            ["enlight", "enhance", "--input", "/nonexistent", "--output", "/tmp/x", "--weights", "/nonexistent.json"],
            &mut out,
            &mut err,
        );
        assert_eq!(code, 2);
        assert!(String::from_utf8(err).unwrap().starts_with("error:"));
    }
}
