//! Closed-loop simulation: plays a budget trace against a frame sequence,
//! checking the budget once per period and enhancing every frame under the
//! configuration active at that time.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{
    control_step, quality_from_psnr, regressor_features, regressor_predict, BudgetSnapshot, ConfigEvaluator,
    ControllerError, ControllerState, ObjectiveTable, RegressorSpec,
};
use crate::energy::{EnergyError, EnergyProfiler, EnergyUnitCosts};
use crate::imageio::{FrameSequence, ImageIoError};
use crate::metrics::psnr;
use crate::net::NetworkSpec;
use crate::scheduler::{FrameAction, ReuseConfig, Scheduler, SchedulerError};

/// Cache-hit-rate floor used by the latency model.
const MIN_LATENCY_EPSILON: f64 = 0.05;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("budget trace is empty")]
    EmptyTrace,
    #[error("budget trace starts at {0} s, after the first frame")]
    TraceStartsLate(f64),
    #[error("budget trace ends at {last} s but the video needs a check at {needed} s")]
    TraceTooShort { last: f64, needed: f64 },
    #[error("malformed budget trace: {0}")]
    InvalidTrace(String),
    #[error("invalid simulation option: {0}")]
    InvalidOption(String),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Image(#[from] ImageIoError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Parses a `time_s,supply_fraction,epsilon` CSV with header.
pub fn parse_budget_trace(csv_text: &str) -> Result<Vec<BudgetSnapshot>, HarnessError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(csv_text.as_bytes());
    let mut rows: Vec<BudgetSnapshot> = Vec::new();
    for (i, row) in reader.deserialize::<BudgetSnapshot>().enumerate() {
        let row = row.map_err(|e| HarnessError::InvalidTrace(e.to_string()))?;
        let row = BudgetSnapshot::new(row.time_s, row.supply_fraction, row.epsilon)
            .map_err(|e| HarnessError::InvalidTrace(format!("row {}: {e}", i + 1)))?;
        if !row.time_s.is_finite() || rows.last().is_some_and(|p| row.time_s < p.time_s) {
            return Err(HarnessError::InvalidTrace(format!("row {}: time {} out of order", i + 1, row.time_s)));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn load_budget_trace(path: impl AsRef<Path>) -> Result<Vec<BudgetSnapshot>, HarnessError> {
    parse_budget_trace(&std::fs::read_to_string(path)?)
}

/// Per-frame energy budget at a check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BudgetPolicy {
    /// `scale · supply_fraction · E(0, 0, 1)` at the snapshot's ε.
    SupplyScaled { scale: f64 },
    /// A constant budget.
    Fixed(f64),
}

impl Default for BudgetPolicy {
    fn default() -> Self {
        BudgetPolicy::SupplyScaled { scale: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOptions {
    /// Used when the sequence carries no frame rate.
    pub fps: f64,
    pub check_period_s: f64,
    pub budget: BudgetPolicy,
    /// Leading frames used to measure configuration quality.
    pub sample_frames: usize,
    pub peak_mac_rate_per_ms: f64,
    /// Replaces the exhaustive quality oracle when set.
    pub regressor: Option<RegressorSpec>,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            fps: 30.0,
            check_period_s: 1.0,
            budget: BudgetPolicy::default(),
            sample_frames: 16,
            peak_mac_rate_per_ms: 1e6,
            regressor: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalReport {
    pub time_s: f64,
    pub supply_fraction: f64,
    pub epsilon: f64,
    pub active_config: ReuseConfig,
    pub frames: usize,
    pub predicted_energy_per_frame: f64,
    #[serde(rename = "measured_quality_Q")]
    pub measured_quality: f64,
    pub mean_latency_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationTotals {
    pub frames: usize,
    /// Number of checks that changed the active configuration.
    pub adaptations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub intervals: Vec<IntervalReport>,
    pub totals: SimulationTotals,
}

impl SimulationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per interval, configuration split into columns.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "time_s",
            "supply_fraction",
            "epsilon",
            "theta_f",
            "theta_l",
            "theta_d",
            "frames",
            "predicted_energy_per_frame",
            "measured_quality_Q",
            "mean_latency_ms",
        ])
        .expect("in-memory write");
        for r in &self.intervals {
            w.write_record([
                r.time_s.to_string(),
                r.supply_fraction.to_string(),
                r.epsilon.to_string(),
                r.active_config.theta_f.to_string(),
                r.active_config.theta_l.to_string(),
                r.active_config.theta_d.to_string(),
                r.frames.to_string(),
                r.predicted_energy_per_frame.to_string(),
                r.measured_quality.to_string(),
                r.mean_latency_ms.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// Latest snapshot at or before `t`.
fn snapshot_at(trace: &[BudgetSnapshot], t: f64) -> BudgetSnapshot {
    let idx = trace.partition_point(|s| s.time_s <= t);
    trace[idx.saturating_sub(1)]
}

/// Frame index ranges, one per check period.
fn intervals(n: usize, fps: f64, period: f64) -> Vec<std::ops::Range<usize>> {
    let slot = |i: usize| ((i as f64 / fps) / period + 1e-9).floor() as usize;
    let count = if n == 0 { 0 } else { slot(n - 1) + 1 };
    let mut out = vec![0..0; count];
    for i in 0..n {
        let r = &mut out[slot(i)];
        if r.start == r.end {
            *r = i..i + 1;
        } else {
            r.end = i + 1;
        }
    }
    out
}

pub fn run_simulation(
    seq: &FrameSequence,
    trace: &[BudgetSnapshot],
    spec: &NetworkSpec,
    units: EnergyUnitCosts,
    options: &SimulationOptions,
) -> Result<SimulationReport, HarnessError> {
    if trace.is_empty() {
        return Err(HarnessError::EmptyTrace);
    }
    let fps = seq.frame_rate().unwrap_or(options.fps);
    if !(fps > 0.0 && fps.is_finite()) {
        return Err(HarnessError::InvalidOption(format!("frame rate {fps}")));
    }
    let period = options.check_period_s;
    if !(period > 0.0 && period.is_finite()) {
        return Err(HarnessError::InvalidOption(format!("check period {period}")));
    }
    if options.peak_mac_rate_per_ms.is_nan() || options.peak_mac_rate_per_ms <= 0.0 {
        return Err(EnergyError::NonPositivePeak(options.peak_mac_rate_per_ms).into());
    }
    if trace[0].time_s > 0.0 {
        return Err(HarnessError::TraceStartsLate(trace[0].time_s));
    }
    let ranges = intervals(seq.len(), fps, period);
    let last_check = (ranges.len() - 1) as f64 * period;
    let trace_end = trace[trace.len() - 1].time_s;
    if trace_end < last_check {
        return Err(HarnessError::TraceTooShort { last: trace_end, needed: last_check });
    }

    let (h, w) = seq.dims();
    let profiler = EnergyProfiler::new(spec, h, w, units);
    let nominal = ((fps * period).round() as usize).max(1);
    let oracle = match options.regressor {
        Some(_) => None,
        None => {
            let take = options.sample_frames.min(seq.len());
            let sample = FrameSequence::new(seq.frames()[..take].to_vec())?;
            let table = ConfigEvaluator::new(spec, &sample, units)?.table()?;
            match table {
                ObjectiveTable::Analytic { qualities, profiler, .. } => {
                    Some(ObjectiveTable::Analytic { qualities, profiler, n_frames: nominal })
                }
                other => Some(other),
            }
        }
    };

    let mut scheduler = Scheduler::new(spec, ReuseConfig::FULL)?;
    let mut reference = Scheduler::new(spec, ReuseConfig::FULL)?;
    let mut state: Option<ControllerState> = None;
    let mut last_keyframe = 0usize;
    let mut adaptations = 0;
    let mut reports = Vec::with_capacity(ranges.len());

    for (k, range) in ranges.into_iter().enumerate() {
        if range.is_empty() {
            continue;
        }
        let t = k as f64 * period;
        let snap = snapshot_at(trace, t);
        let cache = snap.cache();
        let table = match (&oracle, &options.regressor) {
            (Some(table), _) => table.clone(),
            (None, Some(reg)) => {
                let features = regressor_features(&seq.frames()[range.start], &seq.frames()[last_keyframe])?;
                ObjectiveTable::Predicted(regressor_predict(reg, &features)?)
            }
            (None, None) => unreachable!("oracle built when no regressor"),
        };
        let current = match state.take() {
            Some(s) => s,
            None => ControllerState::new(table.frontier(cache)?, period),
        };
        let m = range.len();
        let demand = profiler.per_frame(&current.active_config, m, cache)?;
        let budget = match options.budget {
            BudgetPolicy::SupplyScaled { scale } => {
                scale * snap.supply_fraction * profiler.per_frame(&ReuseConfig::FULL, m, cache)?
            }
            BudgetPolicy::Fixed(b) => b,
        };
        let next = control_step(&current, &snap, demand, budget, &table)?;
        if next.active_config != current.active_config {
            adaptations += 1;
        }
        let config = next.active_config;
        scheduler.begin_segment(config)?;

        let mut quality = 0.0;
        for i in range.clone() {
            let frame = &seq.frames()[i];
            let out = scheduler.process(frame)?;
            if out.plan.action != FrameAction::ReuseMap {
                last_keyframe = i;
            }
            let r = reference.process(frame)?;
            quality += quality_from_psnr(psnr(&r.frame, &out.frame)?);
        }
        let macs_per_frame = profiler.executed_macs(&config, m) / m as f64;
        let rate = options.peak_mac_rate_per_ms * snap.epsilon.max(MIN_LATENCY_EPSILON);
        reports.push(IntervalReport {
            time_s: t,
            supply_fraction: snap.supply_fraction,
            epsilon: snap.epsilon,
            active_config: config,
            frames: m,
            predicted_energy_per_frame: profiler.per_frame(&config, m, cache)?,
            measured_quality: quality / m as f64,
            mean_latency_ms: macs_per_frame / rate,
        });
        state = Some(next);
    }

    Ok(SimulationReport { intervals: reports, totals: SimulationTotals { frames: seq.len(), adaptations } })
}
