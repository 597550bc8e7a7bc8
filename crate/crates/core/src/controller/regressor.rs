//! Two-layer (Q, E) regressor, inference only.
//!
//! ```json
//! {"version": 1,
//!  "layers": [{"kind": "fc", "cin": 512, "cout": 64, "weights": [...], "bias": [...]},
//!             {"kind": "fc", "cin": 64, "cout": 264, "weights": [...], "bias": [...]}]}
//! ```
//!
//! Weights are output-major. The input is two 16x16 luminance maps (current
//! frame, then previous keyframe), row-major. The output holds one `(Q, E)`
//! pair per configuration in [`enumerate_configs`] order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{enumerate_configs, ControllerError, ObjectivePoint};
use crate::imageio::{resample_channels, Frame};

/// Side of each downsampled luminance map.
pub const FEATURE_SIDE: usize = 16;
pub const FEATURE_LEN: usize = 2 * FEATURE_SIDE * FEATURE_SIDE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FcKind {
    Fc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FcLayer {
    pub kind: FcKind,
    pub cin: usize,
    pub cout: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl FcLayer {
    pub fn new(cin: usize, cout: usize, weights: Vec<f64>, bias: Vec<f64>) -> Self {
        Self { kind: FcKind::Fc, cin, cout, weights, bias }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.cin)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressorSpec {
    pub version: u32,
    pub layers: [FcLayer; 2],
}

impl RegressorSpec {
    pub fn new(hidden: FcLayer, output: FcLayer) -> Result<Self, ControllerError> {
        let spec = Self { version: 1, layers: [hidden, output] };
        spec.validate()?;
        Ok(spec)
    }

    pub fn output_len() -> usize {
        2 * enumerate_configs().len()
    }

    fn validate(&self) -> Result<(), ControllerError> {
        let bad = |msg: String| Err(ControllerError::Regressor(msg));
        if self.version != 1 {
            return bad(format!("unsupported version {}", self.version));
        }
        let [a, b] = &self.layers;
        if a.cin != FEATURE_LEN {
            return bad(format!("first layer takes {} inputs, features have {FEATURE_LEN}", a.cin));
        }
        if b.cin != a.cout {
            return bad(format!("second layer takes {} inputs, first layer gives {}", b.cin, a.cout));
        }
        if b.cout != Self::output_len() {
            return bad(format!("output has {} values, expected {}", b.cout, Self::output_len()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.weights.len() != l.cin * l.cout || l.bias.len() != l.cout {
                return bad(format!("layer {i}: parameter lengths do not match {}x{}", l.cout, l.cin));
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return bad(format!("layer {i}: non-finite parameter"));
            }
        }
        Ok(())
    }

    pub fn parse(json: &str) -> Result<Self, ControllerError> {
        let spec: Self = serde_json::from_str(json).map_err(|e| ControllerError::Regressor(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("regressor serializes")
    }
}

pub fn load_regressor(path: impl AsRef<Path>) -> Result<RegressorSpec, ControllerError> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| ControllerError::Regressor(format!("{}: {e}", path.as_ref().display())))?;
    RegressorSpec::parse(&text)
}

/// Downsampled luminance of `current` followed by that of `previous_keyframe`.
pub fn regressor_features(current: &Frame, previous_keyframe: &Frame) -> Result<Vec<f64>, ControllerError> {
    let mut out = Vec::with_capacity(FEATURE_LEN);
    for f in [current, previous_keyframe] {
        let (h, w) = f.dims();
        out.extend(resample_channels(&f.luminance(), h, w, 1, FEATURE_SIDE, FEATURE_SIDE)?);
    }
    Ok(out)
}

/// FC, ReLU, FC. `Q` is clamped to `[0, 1]` and `E` to `>= 0`.
pub fn regressor_predict(reg: &RegressorSpec, features: &[f64]) -> Result<Vec<ObjectivePoint>, ControllerError> {
    if features.len() != reg.layers[0].cin {
        return Err(ControllerError::FeatureLength { expected: reg.layers[0].cin, actual: features.len() });
    }
    let hidden: Vec<f64> = reg.layers[0].apply(features).into_iter().map(|v| v.max(0.0)).collect();
    let out = reg.layers[1].apply(&hidden);
    Ok(enumerate_configs()
        .into_iter()
        .zip(out.chunks_exact(2))
        .map(|(config, qe)| ObjectivePoint { config, quality: qe[0].clamp(0.0, 1.0), energy: qe[1].max(0.0) })
        .collect())
}
