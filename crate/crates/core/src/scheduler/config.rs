use std::fmt;

use serde::{Deserialize, Serialize};

use crate::imageio::Resolution;

/// Largest number of frames that may reuse one keyframe's exponent map.
pub const MAX_THETA_F: u8 = 10;
/// Largest number of leading layers that may be reused.
pub const MAX_THETA_L: u8 = 3;

/// The three adaptation knobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawConfig")]
pub struct ReuseConfig {
    /// Frames that reuse the previous exponent map after each keyframe.
    pub theta_f: u8,
    /// Leading layers taken from the activation cache on keyframes.
    pub theta_l: u8,
    /// Input down-sampling rate.
    pub theta_d: Resolution,
}

#[derive(Deserialize)]
struct RawConfig {
    theta_f: u8,
    theta_l: u8,
    theta_d: Resolution,
}

impl TryFrom<RawConfig> for ReuseConfig {
    type Error = String;

    fn try_from(raw: RawConfig) -> Result<Self, Self::Error> {
        ReuseConfig::new(raw.theta_f, raw.theta_l, raw.theta_d)
    }
}

impl ReuseConfig {
    /// No reuse at full resolution.
    pub const FULL: ReuseConfig = ReuseConfig { theta_f: 0, theta_l: 0, theta_d: Resolution::Full };

    pub fn new(theta_f: u8, theta_l: u8, theta_d: Resolution) -> Result<Self, String> {
        if theta_f > MAX_THETA_F {
            return Err(format!("theta_f must be in 0..={MAX_THETA_F}, got {theta_f}"));
        }
        if theta_l > MAX_THETA_L {
            return Err(format!("theta_l must be in 0..={MAX_THETA_L}, got {theta_l}"));
        }
        Ok(Self { theta_f, theta_l, theta_d })
    }

    /// Position in [`enumerate_configs`](crate::controller::enumerate_configs) order.
    pub fn ordinal(&self) -> usize {
        let d = Resolution::ALL.iter().position(|r| *r == self.theta_d).expect("known resolution");
        (self.theta_f as usize * (MAX_THETA_L as usize + 1) + self.theta_l as usize) * 3 + d
    }
}

impl fmt::Display for ReuseConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.theta_f, self.theta_l, self.theta_d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameAction {
    /// Run every layer.
    FullCompute,
    /// Run the network with the leading `theta_l` layers taken from cache.
    PartialCompute,
    /// Apply the most recent exponent map without running the network.
    ReuseMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FramePlan {
    pub frame_index: usize,
    pub action: FrameAction,
    pub resolution_factor: Resolution,
}

/// Action for the `position`-th frame of a run under `config`.
pub fn action_at(config: &ReuseConfig, position: usize) -> FrameAction {
    if !position.is_multiple_of(config.theta_f as usize + 1) {
        FrameAction::ReuseMap
    } else if position == 0 || config.theta_l == 0 {
        FrameAction::FullCompute
    } else {
        FrameAction::PartialCompute
    }
}

/// Keyframes every `theta_f + 1` frames, reuse in between.
pub fn expand_config(config: &ReuseConfig, n_frames: usize) -> Vec<FramePlan> {
    (0..n_frames)
        .map(|i| FramePlan { frame_index: i, action: action_at(config, i), resolution_factor: config.theta_d })
        .collect()
}

/// Which layers execute for a frame with the given action.
pub fn layer_mask(action: FrameAction, layer_count: usize, theta_l: u8) -> Vec<bool> {
    match action {
        FrameAction::FullCompute => vec![true; layer_count],
        FrameAction::PartialCompute => (0..layer_count).map(|l| l >= theta_l as usize).collect(),
        FrameAction::ReuseMap => vec![false; layer_count],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use FrameAction::*;

    fn actions(c: ReuseConfig, n: usize) -> Vec<FrameAction> {
        expand_config(&c, n).into_iter().map(|p| p.action).collect()
    }

    #[test]
    fn no_frame_reuse_computes_every_frame() {
        let c = ReuseConfig::new(0, 0, Resolution::Full).unwrap();
        assert_eq!(actions(c, 3), vec![FullCompute; 3]);
        let c = ReuseConfig::new(0, 2, Resolution::Full).unwrap();
        assert_eq!(actions(c, 3), vec![FullCompute, PartialCompute, PartialCompute]);
    }

    #[test]
    fn period_two() {
        let c = ReuseConfig::new(1, 0, Resolution::Half).unwrap();
        assert_eq!(actions(c, 4), vec![FullCompute, ReuseMap, FullCompute, ReuseMap]);
        assert!(expand_config(&c, 4).iter().all(|p| p.resolution_factor == Resolution::Half));
    }

    #[test]
    fn period_longer_than_sequence() {
        let c = ReuseConfig::new(10, 1, Resolution::Full).unwrap();
        assert_eq!(actions(c, 5), vec![FullCompute, ReuseMap, ReuseMap, ReuseMap, ReuseMap]);
    }

    #[test]
    fn validation_and_serde() {
        assert!(ReuseConfig::new(11, 0, Resolution::Full).is_err());
        assert!(ReuseConfig::new(0, 4, Resolution::Full).is_err());
        let c = ReuseConfig::new(2, 1, Resolution::Third).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, r#"{"theta_f":2,"theta_l":1,"theta_d":"1/3"}"#);
        assert_eq!(serde_json::from_str::<ReuseConfig>(&json).unwrap(), c);
        assert!(serde_json::from_str::<ReuseConfig>(r#"{"theta_f":12,"theta_l":1,"theta_d":"1"}"#).is_err());
    }

    #[test]
    fn masks() {
        assert_eq!(layer_mask(PartialCompute, 5, 2), vec![false, false, true, true, true]);
        assert_eq!(layer_mask(ReuseMap, 2, 0), vec![false, false]);
        assert_eq!(layer_mask(FullCompute, 2, 1), vec![true, true]);
    }
}
