//! Analytic layer-wise energy model.
//!
//! Per layer, `E_l = δ_C·C_l + ε·δ_cache·M_l + (1-ε)·δ_DRAM·M_l + δ_SM·M_l`
//! with MAC count `C_l` and memory-access count `M_l` derived from the layer
//! shape. Over a run, each executed (frame, layer) pair contributes
//! `E_l·θ_d`, with counts taken at the full input resolution. Energies are in
//! units of one MAC (`δ_C = 1`).

mod platform;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use platform::{load_cache_trace, load_platform, parse_cache_trace, EnergyUnitCosts, Platform, PlatformPreset};

use crate::net::{LayerKind, LayerSpec, NetworkSpec};
use crate::scheduler::{expand_config, layer_mask, ReuseConfig};

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("theta_l = {theta_l} leaves no layer to compute in a {layers}-layer network")]
    InconsistentConfig { theta_l: u8, layers: usize },
    #[error("peak MAC rate must be positive, got {0}")]
    NonPositivePeak(f64),
    #[error("measured MAC rate must be non-negative, got {0}")]
    NegativeRate(f64),
    #[error("cache-hit-rate {0} outside [0, 1]")]
    EpsilonOutOfRange(f64),
    #[error("invalid unit costs: {0}")]
    InvalidCosts(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed platform preset: {0}")]
    Preset(String),
    #[error("malformed cache trace: {0}")]
    Trace(String),
}

/// MAC and memory-access counts of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerCost {
    pub macs: u64,
    pub mem_accesses: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheSource {
    Trace,
    Measured,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CacheState {
    pub epsilon: f64,
    pub source: CacheSource,
}

impl CacheState {
    pub fn new(epsilon: f64, source: CacheSource) -> Result<Self, EnergyError> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(EnergyError::EpsilonOutOfRange(epsilon));
        }
        Ok(Self { epsilon, source })
    }
}

/// `K²·(Cin/groups)·Cout·H·W` for convolutions, zero for activations.
pub fn mac_count(layer: &LayerSpec, h: usize, w: usize) -> u64 {
    match layer.kind {
        LayerKind::Conv => (layer.k * layer.k * (layer.cin / layer.groups) * layer.cout * h * w) as u64,
        LayerKind::Activation => 0,
    }
}

/// `2·Cout·(Cin/groups)·H·W·K² + Cout·H·W` for convolutions (operand reads
/// plus output writes); `2·C·H·W` for activations.
pub fn mem_access_count(layer: &LayerSpec, h: usize, w: usize) -> u64 {
    match layer.kind {
        LayerKind::Conv => {
            let hw = (h * w) as u64;
            2 * (layer.cout * (layer.cin / layer.groups) * layer.k * layer.k) as u64 * hw + layer.cout as u64 * hw
        }
        LayerKind::Activation => 2 * (layer.cout * h * w) as u64,
    }
}

pub fn layer_cost(layer: &LayerSpec, h: usize, w: usize) -> LayerCost {
    LayerCost { macs: mac_count(layer, h, w), mem_accesses: mem_access_count(layer, h, w) }
}

pub fn layer_energy(cost: LayerCost, cache: CacheState, units: &EnergyUnitCosts) -> f64 {
    let c = cost.macs as f64;
    let m = cost.mem_accesses as f64;
    let eps = cache.epsilon;
    units.delta_c * c + eps * units.delta_cache * m + (1.0 - eps) * units.delta_dram * m + units.delta_sm * m
}

/// Energy of `n_frames` frames enhanced under `config` at input size `h x w`.
pub fn total_energy(
    spec: &NetworkSpec,
    config: &ReuseConfig,
    n_frames: usize,
    cache: CacheState,
    units: &EnergyUnitCosts,
    h: usize,
    w: usize,
) -> Result<f64, EnergyError> {
    EnergyProfiler::new(spec, h, w, *units).total(config, n_frames, cache)
}

/// `ε = clamp(measured / peak, 0, 1)`.
pub fn estimate_cache_hit_rate(measured_mac_rate: f64, peak_mac_rate: f64) -> Result<CacheState, EnergyError> {
    if peak_mac_rate.is_nan() || peak_mac_rate <= 0.0 {
        return Err(EnergyError::NonPositivePeak(peak_mac_rate));
    }
    if measured_mac_rate.is_nan() || measured_mac_rate < 0.0 {
        return Err(EnergyError::NegativeRate(measured_mac_rate));
    }
    CacheState::new((measured_mac_rate / peak_mac_rate).clamp(0.0, 1.0), CacheSource::Measured)
}

/// One row of a per-layer profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerProfile {
    pub layer: usize,
    pub kind: LayerKind,
    pub macs: u64,
    pub mem_accesses: u64,
    pub energy: f64,
}

/// Layer counts for one network at one input size, priced on demand.
#[derive(Debug, Clone)]
pub struct EnergyProfiler {
    costs: Vec<LayerCost>,
    units: EnergyUnitCosts,
    dims: (usize, usize),
}

impl EnergyProfiler {
    pub fn new(spec: &NetworkSpec, h: usize, w: usize, units: EnergyUnitCosts) -> Self {
        let costs = spec.layers().iter().map(|l| layer_cost(l, h, w)).collect();
        Self { costs, units, dims: (h, w) }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn units(&self) -> &EnergyUnitCosts {
        &self.units
    }

    pub fn costs(&self) -> &[LayerCost] {
        &self.costs
    }

    pub fn layer_energies(&self, cache: CacheState) -> Vec<f64> {
        self.costs.iter().map(|&c| layer_energy(c, cache, &self.units)).collect()
    }

    pub fn profile(&self, spec: &NetworkSpec, cache: CacheState) -> Vec<LayerProfile> {
        spec.layers()
            .iter()
            .zip(&self.costs)
            .enumerate()
            .map(|(i, (layer, cost))| LayerProfile {
                layer: i,
                kind: layer.kind,
                macs: cost.macs,
                mem_accesses: cost.mem_accesses,
                energy: layer_energy(*cost, cache, &self.units),
            })
            .collect()
    }

    /// Sum over planned frames and executed layers of `E_l·θ_d`.
    pub fn total(&self, config: &ReuseConfig, n_frames: usize, cache: CacheState) -> Result<f64, EnergyError> {
        let layers = self.costs.len();
        if config.theta_l as usize >= layers {
            return Err(EnergyError::InconsistentConfig { theta_l: config.theta_l, layers });
        }
        let energies = self.layer_energies(cache);
        let theta_d = config.theta_d.factor();
        let mut total = 0.0;
        for plan in expand_config(config, n_frames) {
            let mask = layer_mask(plan.action, layers, config.theta_l);
            for (e, run) in energies.iter().zip(mask) {
                if run {
                    total += e * theta_d;
                }
            }
        }
        Ok(total)
    }

    /// [`total`](Self::total) divided by the frame count.
    pub fn per_frame(&self, config: &ReuseConfig, n_frames: usize, cache: CacheState) -> Result<f64, EnergyError> {
        if n_frames == 0 {
            return Ok(0.0);
        }
        Ok(self.total(config, n_frames, cache)? / n_frames as f64)
    }

    /// MACs executed over a run, scaled by `θ_d` like the energy estimate.
    pub fn executed_macs(&self, config: &ReuseConfig, n_frames: usize) -> f64 {
        let layers = self.costs.len();
        expand_config(config, n_frames)
            .iter()
            .map(|plan| {
                let mask = layer_mask(plan.action, layers, config.theta_l);
                self.costs.iter().zip(mask).filter(|(_, run)| *run).map(|(c, _)| c.macs as f64).sum::<f64>()
            })
            .sum::<f64>()
            * config.theta_d.factor()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imageio::Resolution;
    use crate::net::{demo_network, LayerSpec};

    fn eps(e: f64) -> CacheState {
        CacheState::new(e, CacheSource::Trace).unwrap()
    }

    #[test]
    fn mac_counts() {
        assert_eq!(mac_count(&LayerSpec::conv(3, 1, 1, vec![0]), 4, 4), 144);
        assert_eq!(mac_count(&LayerSpec::conv(1, 3, 1, vec![0]), 2, 2), 12);
        assert_eq!(mac_count(&LayerSpec::relu(4, 0), 7, 9), 0);
    }

    #[test]
    fn memory_counts() {
        assert_eq!(mem_access_count(&LayerSpec::conv(3, 1, 1, vec![0]), 4, 4), 304);
        assert_eq!(mem_access_count(&LayerSpec::conv(1, 3, 1, vec![0]), 2, 2), 28);
        assert_eq!(mem_access_count(&LayerSpec::relu(4, 0), 2, 2), 32);
    }

    #[test]
    fn layer_energy_values() {
        let cost = LayerCost { macs: 100, mem_accesses: 10 };
        assert_eq!(layer_energy(cost, eps(0.5), &EnergyUnitCosts::gpu()), 1150.0);
        assert_eq!(layer_energy(cost, eps(1.0), &EnergyUnitCosts::gpu()), 180.0);
        assert_eq!(layer_energy(cost, eps(1.0), &EnergyUnitCosts::cpu()), 160.0);
    }

    #[test]
    fn cache_hit_rate() {
        assert_eq!(estimate_cache_hit_rate(50.0, 100.0).unwrap().epsilon, 0.5);
        assert_eq!(estimate_cache_hit_rate(120.0, 100.0).unwrap().epsilon, 1.0);
        assert_eq!(estimate_cache_hit_rate(0.0, 100.0).unwrap().epsilon, 0.0);
        assert!(matches!(estimate_cache_hit_rate(1.0, 0.0), Err(EnergyError::NonPositivePeak(_))));
        assert!(matches!(estimate_cache_hit_rate(-1.0, 10.0), Err(EnergyError::NegativeRate(_))));
    }

    /// Energy of a network whose only layer costs exactly `e` units at ε = 1 on CPU.
    fn single_layer_profiler() -> (EnergyProfiler, CacheState) {
        // 1x1 conv 3→3 on a 1x1 frame: C = 9, M = 2·9 + 3 = 21 → 9 + 6·21 = 135
        let layer = LayerSpec::conv(1, 3, 3, vec![0]);
        let spec = NetworkSpec::new(vec![layer], (0.25, 4.0)).unwrap();
        (EnergyProfiler::new(&spec, 1, 1, EnergyUnitCosts::cpu()), eps(1.0))
    }

    #[test]
    fn frame_reuse_and_downsampling_scale_total() {
        let (p, cache) = single_layer_profiler();
        let e = p.layer_energies(cache)[0];
        assert_eq!(e, 135.0);
        let reuse = ReuseConfig::new(1, 0, Resolution::Full).unwrap();
        assert_eq!(p.total(&reuse, 2, cache).unwrap(), e);
        let half = ReuseConfig::new(1, 0, Resolution::Half).unwrap();
        assert_eq!(p.total(&half, 2, cache).unwrap(), e / 2.0);
        assert_eq!(p.total(&ReuseConfig::FULL, 5, cache).unwrap(), 5.0 * e);
    }

    #[test]
    fn inconsistent_theta_l() {
        let (p, cache) = single_layer_profiler();
        let c = ReuseConfig::new(0, 1, Resolution::Full).unwrap();
        assert!(matches!(p.total(&c, 2, cache), Err(EnergyError::InconsistentConfig { .. })));
    }

    #[test]
    fn no_skipping_is_sum_of_layers() {
        let net = demo_network();
        let p = EnergyProfiler::new(&net, 27, 48, EnergyUnitCosts::gpu());
        let cache = eps(0.7);
        let sum: f64 = p.layer_energies(cache).iter().sum();
        let total = p.total(&ReuseConfig::FULL, 3, cache).unwrap();
        assert!((total - 3.0 * sum).abs() <= 1e-9 * total);
    }

    #[test]
    fn skipping_removes_exact_terms() {
        let net = demo_network();
        let p = EnergyProfiler::new(&net, 20, 30, EnergyUnitCosts::gpu());
        let cache = eps(0.4);
        let energies = p.layer_energies(cache);
        // frames 1 and 2 reuse the leading two layers
        let partial = ReuseConfig::new(0, 2, Resolution::Full).unwrap();
        let full = p.total(&ReuseConfig::FULL, 3, cache).unwrap();
        let skipped = 2.0 * (energies[0] + energies[1]);
        assert!((full - p.total(&partial, 3, cache).unwrap() - skipped).abs() < 1e-6);
    }

    #[test]
    fn energy_drops_as_hit_rate_rises() {
        let net = demo_network();
        let p = EnergyProfiler::new(&net, 10, 10, EnergyUnitCosts::cpu());
        let mut last = f64::INFINITY;
        for i in 0..=10 {
            let e = p.total(&ReuseConfig::FULL, 1, eps(i as f64 / 10.0)).unwrap();
            assert!(e < last);
            last = e;
        }
    }
}
