//! Energy-aware adaptation: evaluate every [`ReuseConfig`] offline, keep the
//! Pareto frontier of (quality, energy), and pick a point online from the
//! current energy supply and cache-hit-rate.

mod pareto;
mod regressor;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use pareto::pareto_front;
pub use regressor::{
    load_regressor, regressor_features, regressor_predict, FcKind, FcLayer, RegressorSpec, FEATURE_LEN, FEATURE_SIDE,
};

use crate::energy::{CacheState, EnergyError, EnergyProfiler, EnergyUnitCosts};
use crate::imageio::{Frame, FrameSequence, ImageIoError, Resolution};
use crate::metrics::{psnr, MetricsError};
use crate::net::NetworkSpec;
use crate::scheduler::{enhance_sequence, ReuseConfig, SchedulerError, MAX_THETA_F, MAX_THETA_L};

/// PSNR that maps to quality 1.
pub const QUALITY_FULL_SCALE_DB: f64 = 50.0;

#[derive(Debug, Error)]
pub enum ControllerError {
    #[error("no points to filter")]
    EmptyPoints,
    #[error("point for {0} has a non-finite coordinate")]
    NonFinitePoint(String),
    #[error("config {config} needs at least {needed} sample frames, got {actual}")]
    SampleTooShort { config: String, needed: usize, actual: usize },
    #[error("feature vector has {actual} values, regressor expects {expected}")]
    FeatureLength { expected: usize, actual: usize },
    #[error("malformed regressor: {0}")]
    Regressor(String),
    #[error("supply fraction {0} outside [0, 1]")]
    SupplyOutOfRange(f64),
    #[error("weight {0} outside [0, 1]")]
    LambdaOutOfRange(f64),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Image(#[from] ImageIoError),
}

/// All 132 configurations: `θ_f` outermost, then `θ_l`, then `θ_d`.
pub fn enumerate_configs() -> Vec<ReuseConfig> {
    let mut out = Vec::with_capacity(132);
    for f in 0..=MAX_THETA_F {
        for l in 0..=MAX_THETA_L {
            for d in Resolution::ALL {
                out.push(ReuseConfig { theta_f: f, theta_l: l, theta_d: d });
            }
        }
    }
    out
}

/// A configuration with its quality proxy and per-frame energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePoint {
    pub config: ReuseConfig,
    #[serde(rename = "Q")]
    pub quality: f64,
    #[serde(rename = "E")]
    pub energy: f64,
}

/// `min(psnr / 50, 1)`.
pub fn quality_from_psnr(db: f64) -> f64 {
    (db / QUALITY_FULL_SCALE_DB).min(1.0)
}

/// Mean per-frame quality of `output` against `reference`.
pub fn sequence_quality(output: &[Frame], reference: &[Frame]) -> Result<f64, ControllerError> {
    let mut sum = 0.0;
    for (o, r) in output.iter().zip(reference) {
        sum += quality_from_psnr(psnr(r, o)?);
    }
    Ok(sum / output.len().max(1) as f64)
}

/// Scores configurations on a fixed sample against the `(0, 0, 1)` output.
#[derive(Debug, Clone)]
pub struct ConfigEvaluator<'a> {
    spec: &'a NetworkSpec,
    sample: &'a FrameSequence,
    reference: Vec<Frame>,
    profiler: EnergyProfiler,
}

impl<'a> ConfigEvaluator<'a> {
    pub fn new(spec: &'a NetworkSpec, sample: &'a FrameSequence, units: EnergyUnitCosts) -> Result<Self, ControllerError> {
        let reference = enhance_sequence(sample, spec, ReuseConfig::FULL)?.frames.into_frames();
        let (h, w) = sample.dims();
        Ok(Self { spec, sample, reference, profiler: EnergyProfiler::new(spec, h, w, units) })
    }

    pub fn profiler(&self) -> &EnergyProfiler {
        &self.profiler
    }

    pub fn sample_len(&self) -> usize {
        self.sample.len()
    }

    pub fn quality(&self, config: ReuseConfig) -> Result<f64, ControllerError> {
        let needed = config.theta_f as usize + 2;
        if self.sample.len() < needed {
            return Err(ControllerError::SampleTooShort { config: config.to_string(), needed, actual: self.sample.len() });
        }
        let out = enhance_sequence(self.sample, self.spec, config)?;
        sequence_quality(out.frames.frames(), &self.reference)
    }

    pub fn energy(&self, config: ReuseConfig, cache: CacheState) -> Result<f64, ControllerError> {
        Ok(self.profiler.per_frame(&config, self.sample.len(), cache)?)
    }

    pub fn evaluate(&self, config: ReuseConfig, cache: CacheState) -> Result<ObjectivePoint, ControllerError> {
        Ok(ObjectivePoint { config, quality: self.quality(config)?, energy: self.energy(config, cache)? })
    }

    /// Qualities of all configurations, evaluated in parallel.
    pub fn table(&self) -> Result<ObjectiveTable, ControllerError> {
        let qualities = enumerate_configs()
            .into_par_iter()
            .map(|c| self.quality(c).map(|q| (c, q)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ObjectiveTable::Analytic { qualities, profiler: self.profiler.clone(), n_frames: self.sample.len() })
    }
}

/// One-shot form of [`ConfigEvaluator::evaluate`].
pub fn evaluate_config(
    config: ReuseConfig,
    spec: &NetworkSpec,
    sample: &FrameSequence,
    cache: CacheState,
    units: EnergyUnitCosts,
) -> Result<ObjectivePoint, ControllerError> {
    ConfigEvaluator::new(spec, sample, units)?.evaluate(config, cache)
}

/// Objective values for every configuration.
#[derive(Debug, Clone)]
pub enum ObjectiveTable {
    /// Measured quality; energy priced from the analytic model at query time.
    Analytic { qualities: Vec<(ReuseConfig, f64)>, profiler: EnergyProfiler, n_frames: usize },
    /// Fixed points, e.g. from the regressor.
    Predicted(Vec<ObjectivePoint>),
}

impl ObjectiveTable {
    pub fn points(&self, cache: CacheState) -> Result<Vec<ObjectivePoint>, ControllerError> {
        match self {
            ObjectiveTable::Analytic { qualities, profiler, n_frames } => qualities
                .iter()
                .map(|&(config, quality)| {
                    Ok(ObjectivePoint { config, quality, energy: profiler.per_frame(&config, *n_frames, cache)? })
                })
                .collect(),
            ObjectiveTable::Predicted(points) => Ok(points.clone()),
        }
    }

    pub fn frontier(&self, cache: CacheState) -> Result<Vec<ObjectivePoint>, ControllerError> {
        pareto_front(&self.points(cache)?)
    }
}

/// `clamp(1 - supply, 0.05, 0.95)`.
pub fn select_lambda(supply_fraction: f64) -> Result<f64, ControllerError> {
    if !(0.0..=1.0).contains(&supply_fraction) {
        return Err(ControllerError::SupplyOutOfRange(supply_fraction));
    }
    Ok((1.0 - supply_fraction).clamp(0.05, 0.95))
}

/// Minimizes `λ·Ê + (1-λ)·(1-Q)` with `Ê` min-max normalized over `pareto`.
/// Ties go to lower energy, then to earlier enumeration order.
pub fn select_config(pareto: &[ObjectivePoint], lambda: f64) -> Result<ReuseConfig, ControllerError> {
    if pareto.is_empty() {
        return Err(ControllerError::EmptyPoints);
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(ControllerError::LambdaOutOfRange(lambda));
    }
    let lo = pareto.iter().map(|p| p.energy).fold(f64::INFINITY, f64::min);
    let hi = pareto.iter().map(|p| p.energy).fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let score = |p: &ObjectivePoint| {
        let e = if span > 0.0 { (p.energy - lo) / span } else { 0.0 };
        lambda * e + (1.0 - lambda) * (1.0 - p.quality)
    };
    let best = pareto
        .iter()
        .min_by(|a, b| {
            score(a)
                .total_cmp(&score(b))
                .then(a.energy.total_cmp(&b.energy))
                .then(a.config.ordinal().cmp(&b.config.ordinal()))
        })
        .expect("non-empty");
    Ok(best.config)
}

/// Energy supply and cache-hit-rate observed at one check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetSnapshot {
    pub time_s: f64,
    pub supply_fraction: f64,
    pub epsilon: f64,
}

impl BudgetSnapshot {
    pub fn new(time_s: f64, supply_fraction: f64, epsilon: f64) -> Result<Self, ControllerError> {
        if !(0.0..=1.0).contains(&supply_fraction) {
            return Err(ControllerError::SupplyOutOfRange(supply_fraction));
        }
        CacheState::new(epsilon, crate::energy::CacheSource::Trace)?;
        Ok(Self { time_s, supply_fraction, epsilon })
    }

    pub fn cache(&self) -> CacheState {
        CacheState::new(self.epsilon, crate::energy::CacheSource::Trace).expect("validated in new")
    }
}

/// Published by the controller, read by the scheduler at frame boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    pub pareto: Vec<ObjectivePoint>,
    pub lambda: f64,
    pub active_config: ReuseConfig,
    pub check_period_s: f64,
}

impl ControllerState {
    /// Starts at full quality: `λ = 0.05`, config `(0, 0, 1)`.
    pub fn new(pareto: Vec<ObjectivePoint>, check_period_s: f64) -> Self {
        Self { pareto, lambda: 0.05, active_config: ReuseConfig::FULL, check_period_s }
    }
}

/// Re-selects the configuration when `predicted_demand` exceeds `supply_budget`.
pub fn control_step(
    state: &ControllerState,
    snapshot: &BudgetSnapshot,
    predicted_demand: f64,
    supply_budget: f64,
    table: &ObjectiveTable,
) -> Result<ControllerState, ControllerError> {
    if predicted_demand <= supply_budget {
        return Ok(state.clone());
    }
    let lambda = select_lambda(snapshot.supply_fraction)?;
    let pareto = table.frontier(snapshot.cache())?;
    let active_config = select_config(&pareto, lambda)?;
    Ok(ControllerState { pareto, lambda, active_config, check_period_s: state.check_period_s })
}
