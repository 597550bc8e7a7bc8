use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CacheSource, CacheState, EnergyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    Cpu,
    Gpu,
}

/// Unit energy per MAC, cache access, DRAM access and shared-memory access.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyUnitCosts {
    pub delta_c: f64,
    pub delta_cache: f64,
    pub delta_dram: f64,
    pub delta_sm: f64,
    pub platform: Platform,
}

impl EnergyUnitCosts {
    /// 1 : 6 : 200 : 2
    pub fn gpu() -> Self {
        Self { delta_c: 1.0, delta_cache: 6.0, delta_dram: 200.0, delta_sm: 2.0, platform: Platform::Gpu }
    }

    /// 1 : 6 : 200, no shared memory.
    pub fn cpu() -> Self {
        Self { delta_c: 1.0, delta_cache: 6.0, delta_dram: 200.0, delta_sm: 0.0, platform: Platform::Cpu }
    }

    pub fn new(platform: Platform, costs: [f64; 4]) -> Result<Self, EnergyError> {
        if costs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(EnergyError::InvalidCosts(format!("{costs:?} must be finite and non-negative")));
        }
        if platform == Platform::Cpu && costs[3] != 0.0 {
            return Err(EnergyError::InvalidCosts("cpu platforms have no shared memory (delta_sm must be 0)".into()));
        }
        let [delta_c, delta_cache, delta_dram, delta_sm] = costs;
        Ok(Self { delta_c, delta_cache, delta_dram, delta_sm, platform })
    }

    pub fn preset(platform: Platform) -> Self {
        match platform {
            Platform::Cpu => Self::cpu(),
            Platform::Gpu => Self::gpu(),
        }
    }
}

/// Offline platform profile: unit costs plus the MAC throughput at a 100%
/// cache-hit-rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformPreset {
    pub platform: Platform,
    pub unit_costs: [f64; 4],
    pub peak_mac_rate_per_ms: f64,
}

impl PlatformPreset {
    pub fn units(&self) -> Result<EnergyUnitCosts, EnergyError> {
        EnergyUnitCosts::new(self.platform, self.unit_costs)
    }

    pub fn parse(json: &str) -> Result<Self, EnergyError> {
        let preset: PlatformPreset = serde_json::from_str(json).map_err(|e| EnergyError::Preset(e.to_string()))?;
        preset.units()?;
        if !(preset.peak_mac_rate_per_ms > 0.0 && preset.peak_mac_rate_per_ms.is_finite()) {
            return Err(EnergyError::NonPositivePeak(preset.peak_mac_rate_per_ms));
        }
        Ok(preset)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("preset serializes")
    }
}

pub fn load_platform(path: impl AsRef<Path>) -> Result<PlatformPreset, EnergyError> {
    PlatformPreset::parse(&std::fs::read_to_string(path)?)
}

#[derive(Deserialize)]
struct TraceRow {
    time_s: f64,
    epsilon: f64,
}

/// Parses a `time_s,epsilon` CSV with header; times must be non-decreasing.
pub fn parse_cache_trace(csv_text: &str) -> Result<Vec<(f64, CacheState)>, EnergyError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(csv_text.as_bytes());
    let mut rows = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for (i, row) in reader.deserialize::<TraceRow>().enumerate() {
        let row = row.map_err(|e| EnergyError::Trace(e.to_string()))?;
        if !(row.time_s.is_finite() && row.time_s >= last) {
            return Err(EnergyError::Trace(format!("row {}: time {} out of order", i + 1, row.time_s)));
        }
        last = row.time_s;
        rows.push((row.time_s, CacheState::new(row.epsilon, CacheSource::Trace)?));
    }
    Ok(rows)
}

pub fn load_cache_trace(path: impl AsRef<Path>) -> Result<Vec<(f64, CacheState)>, EnergyError> {
    parse_cache_trace(&std::fs::read_to_string(path)?)
}
