//! Runs enhancement over a frame stream under a [`ReuseConfig`]:
//! keyframes run the network (optionally reusing leading activations and at
//! reduced resolution), frames in between reuse the last exponent map.

mod config;

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{action_at, expand_config, layer_mask, FrameAction, FramePlan, ReuseConfig, MAX_THETA_F, MAX_THETA_L};

use crate::curves::{apply_gamma_curve, CurveError, GammaMap};
use crate::imageio::{resample, Frame, FrameSequence, ImageIoError, Resolution, Scale};
use crate::net::{forward_partial, ActivationCache, NetError, NetworkSpec};

#[derive(Debug, Error)]
pub enum SchedulerError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Image(#[from] ImageIoError),
    #[error("theta_l = {theta_l} but the network has only {layers} layers")]
    ReuseTooDeep { theta_l: u8, layers: usize },
}

/// Result of processing one frame.
#[derive(Debug, Clone)]
pub struct FrameOutput {
    pub frame: Frame,
    pub gamma: Arc<GammaMap>,
    pub plan: FramePlan,
    /// Which network layers ran for this frame.
    pub executed: Vec<bool>,
    pub latency_ms: f64,
}

/// Streaming executor. One instance per stream; not shared between threads.
#[derive(Debug)]
pub struct Scheduler<'a> {
    spec: &'a NetworkSpec,
    config: ReuseConfig,
    cache: Option<ActivationCache>,
    gamma: Option<Arc<GammaMap>>,
    position: usize,
    frame_index: usize,
}

impl<'a> Scheduler<'a> {
    pub fn new(spec: &'a NetworkSpec, config: ReuseConfig) -> Result<Self, SchedulerError> {
        check_depth(spec, &config)?;
        Ok(Self { spec, config, cache: None, gamma: None, position: 0, frame_index: 0 })
    }

    pub fn config(&self) -> ReuseConfig {
        self.config
    }

    /// Switches configuration at a frame boundary. The next frame starts a new
    /// plan and therefore runs the full network.
    pub fn begin_segment(&mut self, config: ReuseConfig) -> Result<(), SchedulerError> {
        check_depth(self.spec, &config)?;
        self.config = config;
        self.position = 0;
        Ok(())
    }

    pub fn process(&mut self, frame: &Frame) -> Result<FrameOutput, SchedulerError> {
        let start = Instant::now();
        let action = match (action_at(&self.config, self.position), &self.gamma) {
            // nothing to reuse yet
            (FrameAction::ReuseMap, None) => FrameAction::FullCompute,
            (a, _) => a,
        };
        let layers = self.spec.layer_count();
        let (gamma, executed) = match action {
            FrameAction::ReuseMap => {
                (self.gamma.clone().expect("checked above"), vec![false; layers])
            }
            FrameAction::FullCompute | FrameAction::PartialCompute => {
                let reuse = if action == FrameAction::PartialCompute { self.config.theta_l as usize } else { 0 };
                let small;
                let input = if self.config.theta_d == Resolution::Full {
                    frame
                } else {
                    small = resample(frame, Scale::Factor(self.config.theta_d))?;
                    &small
                };
                let (g, cache) = forward_partial(self.spec, input, self.cache.take(), reuse)?;
                let executed = cache.fresh().to_vec();
                self.cache = Some(cache);
                let (h, w) = frame.dims();
                let g = Arc::new(g.resize(h, w)?);
                self.gamma = Some(Arc::clone(&g));
                (g, executed)
            }
        };
        let out = apply_gamma_curve(frame, &gamma)?;
        let plan = FramePlan { frame_index: self.frame_index, action, resolution_factor: self.config.theta_d };
        self.position += 1;
        self.frame_index += 1;
        Ok(FrameOutput {
            frame: out,
            gamma,
            plan,
            executed,
            latency_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }
}

fn check_depth(spec: &NetworkSpec, config: &ReuseConfig) -> Result<(), SchedulerError> {
    if config.theta_l as usize >= spec.layer_count() {
        return Err(SchedulerError::ReuseTooDeep { theta_l: config.theta_l, layers: spec.layer_count() });
    }
    Ok(())
}

/// Wall-clock time per frame.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyLog {
    pub per_frame_ms: Vec<f64>,
}

impl LatencyLog {
    pub fn mean_ms(&self) -> f64 {
        if self.per_frame_ms.is_empty() {
            return 0.0;
        }
        self.per_frame_ms.iter().sum::<f64>() / self.per_frame_ms.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct EnhancedSequence {
    pub frames: FrameSequence,
    pub plans: Vec<FramePlan>,
    pub latency: LatencyLog,
    pub gamma_maps: Vec<Arc<GammaMap>>,
    /// Per frame, which network layers ran.
    pub executed: Vec<Vec<bool>>,
}

impl EnhancedSequence {
    /// Number of frames on which the network ran at all.
    pub fn network_runs(&self) -> usize {
        self.executed.iter().filter(|m| m.iter().any(|&x| x)).count()
    }
}

pub fn enhance_sequence(
    seq: &FrameSequence,
    spec: &NetworkSpec,
    config: ReuseConfig,
) -> Result<EnhancedSequence, SchedulerError> {
    let mut scheduler = Scheduler::new(spec, config)?;
    let mut frames = Vec::with_capacity(seq.len());
    let mut plans = Vec::with_capacity(seq.len());
    let mut latency = LatencyLog::default();
    let mut gamma_maps = Vec::with_capacity(seq.len());
    let mut executed = Vec::with_capacity(seq.len());
    for frame in seq {
        let out = scheduler.process(frame)?;
        frames.push(out.frame);
        plans.push(out.plan);
        latency.per_frame_ms.push(out.latency_ms);
        gamma_maps.push(out.gamma);
        executed.push(out.executed);
    }
    let mut frames = FrameSequence::new(frames)?;
    if let Some(fps) = seq.frame_rate() {
        frames = frames.with_frame_rate(fps);
    }
    Ok(EnhancedSequence { frames, plans, latency, gamma_maps, executed })
}

/// Serialized alongside enhanced frames.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanRecord {
    #[serde(flatten)]
    pub plan: FramePlan,
    pub latency_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanFile {
    pub config: ReuseConfig,
    pub frames: Vec<PlanRecord>,
}

impl EnhancedSequence {
    pub fn plan_file(&self, config: ReuseConfig) -> PlanFile {
        let frames = self
            .plans
            .iter()
            .zip(&self.latency.per_frame_ms)
            .map(|(plan, &latency_ms)| PlanRecord { plan: *plan, latency_ms })
            .collect();
        PlanFile { config, frames }
    }
}
