//! Portable JSON weights:
//!
//! ```json
//! {"version": 1, "gamma_range": [0.25, 4.0],
//!  "layers": [{"kind": "conv", "k": 1, "cin": 3, "cout": 1, "stride": 1,
//!              "padding": 0, "groups": 1, "dense_inputs": [0],
//!              "weights": [...], "bias": [...]}]}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LayerSpec, NetError, NetworkSpec, DEFAULT_GAMMA_RANGE};

const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsFile {
    version: u32,
    #[serde(default = "default_range")]
    gamma_range: [f64; 2],
    layers: Vec<LayerSpec>,
}

fn default_range() -> [f64; 2] {
    [DEFAULT_GAMMA_RANGE.0, DEFAULT_GAMMA_RANGE.1]
}

pub fn parse_weights(json: &str) -> Result<NetworkSpec, NetError> {
    let file: WeightsFile = serde_json::from_str(json).map_err(|e| NetError::Malformed(e.to_string()))?;
    if file.version != FORMAT_VERSION {
        return Err(NetError::Malformed(format!("unsupported version {}", file.version)));
    }
    NetworkSpec::new(file.layers, (file.gamma_range[0], file.gamma_range[1]))
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<NetworkSpec, NetError> {
    parse_weights(&std::fs::read_to_string(path)?)
}

pub fn to_json(spec: &NetworkSpec) -> String {
    let file = WeightsFile {
        version: FORMAT_VERSION,
        gamma_range: [spec.gamma_range.0, spec.gamma_range.1],
        layers: spec.layers.clone(),
    };
    serde_json::to_string_pretty(&file).expect("weights serialize")
}

pub fn save_weights(spec: &NetworkSpec, path: impl AsRef<Path>) -> Result<(), NetError> {
    std::fs::write(path, to_json(spec))?;
    Ok(())
}
