use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial dimension used in the level-dependent threshold.
const DIM: i32 = 2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    Constant,
    #[default]
    Harten,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub mode: ThresholdMode,
    /// Level-independent threshold of the constant mode.
    pub epsilon: f64,
    /// Base threshold of the Harten mode.
    pub epsilon0: f64,
    pub domain_area: f64,
    pub max_level: u8,
}

impl ThresholdPolicy {
    pub fn constant(epsilon: f64, max_level: u8) -> Self {
        Self {
            mode: ThresholdMode::Constant,
            epsilon,
            epsilon0: epsilon,
            domain_area: 4.0,
            max_level,
        }
    }

    pub fn harten(epsilon0: f64, domain_area: f64, max_level: u8) -> Self {
        Self {
            mode: ThresholdMode::Harten,
            epsilon: epsilon0,
            epsilon0,
            domain_area,
            max_level,
        }
    }

    /// Threshold for the details of the children of a level-`level` node,
    /// `0 <= level <= L - 1`.
    pub fn level(&self, level: u8) -> Result<f64> {
        threshold_level(self, level)
    }
}

/// `eps` in constant mode, `(eps0 / |Omega|) 2^{d (level - L + 1)}` in Harten mode.
pub fn threshold_level(policy: &ThresholdPolicy, level: u8) -> Result<f64> {
    if policy.max_level == 0 || level >= policy.max_level {
        return Err(Error::LevelOutOfRange {
            level,
            max: policy.max_level.saturating_sub(1),
        });
    }
    Ok(match policy.mode {
        ThresholdMode::Constant => policy.epsilon,
        ThresholdMode::Harten => {
            let e = DIM * (level as i32 - policy.max_level as i32 + 1);
            policy.epsilon0 / policy.domain_area * 2f64.powi(e)
        }
    })
}
