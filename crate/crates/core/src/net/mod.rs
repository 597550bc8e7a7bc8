//! The exponent-map network: a small densely connected convolution stack
//! whose 3-channel output is mapped to per-pixel exponents.
//!
//! Layers are executed in order. Each layer reads the channel-wise
//! concatenation of earlier tensors named by `dense_inputs`, where tensor 0
//! is the raw RGB frame and tensor `i` is the output of layer `i`. The last
//! tensor's raw values `y` become `Γ = exp(clamp(y, ln Γ_min, ln Γ_max))`.

mod forward;
mod presets;
mod weights;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use forward::{forward, forward_partial, ActivationCache, Tensor};
pub use presets::{demo_network, zero_network};
pub use weights::{load_weights, parse_weights, save_weights, to_json};

use crate::curves::{GAMMA_MAX, GAMMA_MIN};

#[derive(Debug, Error)]
pub enum NetError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed weights file: {0}")]
    Malformed(String),
    #[error("layer {layer}: declared cin {declared} but dense inputs provide {provided} channels")]
    ChannelMismatch { layer: usize, declared: usize, provided: usize },
    #[error("network must end in a 3-channel tensor, found {0}")]
    FinalChannels(usize),
    #[error("layer {layer}: {reason}")]
    InvalidLayer { layer: usize, reason: String },
    #[error("invalid gamma range [{0}, {1}]")]
    GammaRange(f64, f64),
    #[error("activation cache is for {cached:?} with {layers} layers, frame is {frame:?}")]
    CacheMismatch { cached: (usize, usize), frame: (usize, usize), layers: usize },
    #[error("cannot reuse {reuse} layers of a {layers}-layer network")]
    ReuseOutOfRange { reuse: usize, layers: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Conv,
    /// Element-wise ReLU.
    Activation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PaddingMode {
    #[default]
    Zeros,
    /// Mirror without repeating the edge sample.
    Reflect,
}

/// One layer. Convolution weights are laid out `[cout][cin / groups][k][k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub k: usize,
    pub cin: usize,
    pub cout: usize,
    pub stride: usize,
    pub padding: usize,
    #[serde(default, skip_serializing_if = "is_zeros")]
    pub padding_mode: PaddingMode,
    pub groups: usize,
    pub dense_inputs: Vec<usize>,
    #[serde(default)]
    pub weights: Vec<f64>,
    #[serde(default)]
    pub bias: Vec<f64>,
}

fn is_zeros(m: &PaddingMode) -> bool {
    *m == PaddingMode::Zeros
}

impl LayerSpec {
    pub fn conv(k: usize, cin: usize, cout: usize, dense_inputs: Vec<usize>) -> Self {
        Self {
            kind: LayerKind::Conv,
            k,
            cin,
            cout,
            stride: 1,
            padding: k / 2,
            padding_mode: PaddingMode::Zeros,
            groups: 1,
            dense_inputs,
            weights: vec![0.0; cout * cin * k * k],
            bias: vec![0.0; cout],
        }
    }

    pub fn relu(channels: usize, input: usize) -> Self {
        Self {
            kind: LayerKind::Activation,
            k: 1,
            cin: channels,
            cout: channels,
            stride: 1,
            padding: 0,
            padding_mode: PaddingMode::Zeros,
            groups: 1,
            dense_inputs: vec![input],
            weights: Vec::new(),
            bias: Vec::new(),
        }
    }

    pub fn with_padding_mode(mut self, mode: PaddingMode) -> Self {
        self.padding_mode = mode;
        self
    }

    pub fn with_params(mut self, weights: Vec<f64>, bias: Vec<f64>) -> Self {
        self.weights = weights;
        self.bias = bias;
        self
    }

    pub fn expected_weight_len(&self) -> usize {
        match self.kind {
            LayerKind::Conv => self.cout * (self.cin / self.groups.max(1)) * self.k * self.k,
            LayerKind::Activation => 0,
        }
    }

    fn validate(&self, index: usize) -> Result<(), NetError> {
        let invalid = |reason: String| NetError::InvalidLayer { layer: index, reason };
        if self.k == 0 || self.cin == 0 || self.cout == 0 {
            return Err(invalid("k, cin and cout must be positive".into()));
        }
        if self.groups == 0 || !self.cin.is_multiple_of(self.groups) || !self.cout.is_multiple_of(self.groups) {
            return Err(invalid(format!("groups {} must divide cin {} and cout {}", self.groups, self.cin, self.cout)));
        }
        if self.stride != 1 {
            return Err(invalid(format!("stride {} unsupported; exponent maps need full resolution", self.stride)));
        }
        match self.kind {
            LayerKind::Conv => {
                if self.k.is_multiple_of(2) || 2 * self.padding != self.k - 1 {
                    return Err(invalid(format!("k={} with padding={} does not preserve size", self.k, self.padding)));
                }
                if self.weights.len() != self.expected_weight_len() {
                    return Err(NetError::Malformed(format!(
                        "layer {index}: expected {} weights, found {}",
                        self.expected_weight_len(),
                        self.weights.len()
                    )));
                }
                if self.bias.len() != self.cout {
                    return Err(NetError::Malformed(format!(
                        "layer {index}: expected {} biases, found {}",
                        self.cout,
                        self.bias.len()
                    )));
                }
                if self.weights.iter().chain(&self.bias).any(|v| !v.is_finite()) {
                    return Err(NetError::Malformed(format!("layer {index}: non-finite parameter")));
                }
            }
            LayerKind::Activation => {
                if self.cin != self.cout {
                    return Err(invalid("activation must keep the channel count".into()));
                }
                if !self.weights.is_empty() || !self.bias.is_empty() {
                    return Err(NetError::Malformed(format!("layer {index}: activation carries parameters")));
                }
            }
        }
        Ok(())
    }
}

/// A validated network description.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    layers: Vec<LayerSpec>,
    gamma_range: (f64, f64),
}

impl NetworkSpec {
    /// Validates channel arithmetic, dense links and the exponent range.
    pub fn new(layers: Vec<LayerSpec>, gamma_range: (f64, f64)) -> Result<Self, NetError> {
        let (lo, hi) = gamma_range;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= 1.0 && hi >= 1.0) {
            return Err(NetError::GammaRange(lo, hi));
        }
        if layers.is_empty() {
            return Err(NetError::Malformed("no layers".into()));
        }
        // channel count of every tensor; tensor 0 is the RGB input
        let mut channels = vec![3usize];
        for (i, layer) in layers.iter().enumerate() {
            layer.validate(i)?;
            if layer.dense_inputs.is_empty() {
                return Err(NetError::InvalidLayer { layer: i, reason: "no dense inputs".into() });
            }
            let mut provided = 0;
            for &t in &layer.dense_inputs {
                let c = channels.get(t).ok_or_else(|| NetError::InvalidLayer {
                    layer: i,
                    reason: format!("dense input {t} is not an earlier tensor"),
                })?;
                provided += c;
            }
            if provided != layer.cin {
                return Err(NetError::ChannelMismatch { layer: i, declared: layer.cin, provided });
            }
            channels.push(layer.cout);
        }
        let last = *channels.last().expect("at least one layer");
        if last != 3 {
            return Err(NetError::FinalChannels(last));
        }
        Ok(Self { layers, gamma_range })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn gamma_range(&self) -> (f64, f64) {
        self.gamma_range
    }

    /// Number of convolution layers.
    pub fn conv_count(&self) -> usize {
        self.layers.iter().filter(|l| l.kind == LayerKind::Conv).count()
    }
}

/// Default exponent range when none is given.
pub const DEFAULT_GAMMA_RANGE: (f64, f64) = (GAMMA_MIN, GAMMA_MAX);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_topology_validates() {
        let net = zero_network();
        assert_eq!(net.conv_count(), 5);
        assert_eq!(net.layers().last().unwrap().cout, 3);
        let cins: Vec<usize> = net.layers().iter().filter(|l| l.kind == LayerKind::Conv).map(|l| l.cin).collect();
        assert_eq!(cins, vec![3, 1, 4, 1, 4]);
    }

    #[test]
    fn channel_mismatch_detected() {
        let mut layers = zero_network().layers().to_vec();
        // block-2 1x1 conv declared with the wrong input width
        let l = &mut layers[4];
        l.cin = 3;
        l.weights = vec![0.0; 3];
        assert!(matches!(
            NetworkSpec::new(layers, DEFAULT_GAMMA_RANGE),
            Err(NetError::ChannelMismatch { layer: 4, declared: 3, provided: 4 })
        ));
    }

    #[test]
    fn final_channels_checked() {
        let layers = vec![LayerSpec::conv(1, 3, 1, vec![0])];
        assert!(matches!(NetworkSpec::new(layers, DEFAULT_GAMMA_RANGE), Err(NetError::FinalChannels(1))));
    }

    #[test]
    fn layer_shape_errors() {
        let mut bad = LayerSpec::conv(3, 3, 3, vec![0]);
        bad.padding = 0;
        assert!(matches!(NetworkSpec::new(vec![bad], DEFAULT_GAMMA_RANGE), Err(NetError::InvalidLayer { .. })));
        let mut strided = LayerSpec::conv(1, 3, 3, vec![0]);
        strided.stride = 2;
        assert!(matches!(NetworkSpec::new(vec![strided], DEFAULT_GAMMA_RANGE), Err(NetError::InvalidLayer { .. })));
        let mut grouped = LayerSpec::conv(1, 3, 3, vec![0]);
        grouped.groups = 2;
        assert!(matches!(NetworkSpec::new(vec![grouped], DEFAULT_GAMMA_RANGE), Err(NetError::InvalidLayer { .. })));
        let forward_ref = LayerSpec::conv(1, 3, 3, vec![1]);
        assert!(matches!(NetworkSpec::new(vec![forward_ref], DEFAULT_GAMMA_RANGE), Err(NetError::InvalidLayer { .. })));
        assert!(matches!(
            NetworkSpec::new(vec![LayerSpec::conv(1, 3, 3, vec![0])], (2.0, 4.0)),
            Err(NetError::GammaRange(..))
        ));
    }
}
