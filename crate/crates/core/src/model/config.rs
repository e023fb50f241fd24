use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Architecture hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub channels: usize,
    pub n_modules: usize,
    pub dw_kernel: usize,
    pub pointwise_per_module: usize,
    pub scale: usize,
    #[serde(default)]
    pub share_module_weights: bool,
    #[serde(default = "default_true")]
    pub final_linear: bool,
}

fn default_true() -> bool {
    true
}

impl ModelConfig {
    /// Five DSC modules with three pointwise layers each.
    pub fn dscr(channels: usize) -> Self {
        ModelConfig {
            channels,
            n_modules: 5,
            dw_kernel: 5,
            pointwise_per_module: 3,
            scale: 4,
            share_module_weights: false,
            final_linear: true,
        }
    }

    /// Lightweight variant: a single DSC module with one pointwise layer.
    pub fn dscr_small(channels: usize) -> Self {
        ModelConfig { n_modules: 1, pointwise_per_module: 1, ..Self::dscr(channels) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 {
            return Err(invalid("channels must be >= 1"));
        }
        if self.n_modules == 0 {
            return Err(invalid("n_modules must be >= 1"));
        }
        if self.dw_kernel % 2 == 0 {
            return Err(invalid(format!("dw_kernel must be odd, got {}", self.dw_kernel)));
        }
        if self.pointwise_per_module == 0 {
            return Err(invalid("pointwise_per_module must be >= 1"));
        }
        if self.scale < 2 {
            return Err(invalid(format!("scale must be >= 2, got {}", self.scale)));
        }
        Ok(())
    }

    /// Number of modules that own separate weights.
    pub fn stored_modules(&self) -> usize {
        if self.share_module_weights {
            1
        } else {
            self.n_modules
        }
    }

    pub fn params_per_module(&self) -> usize {
        let (c, k) = (self.channels, self.dw_kernel);
        (k * k * c + c) + self.pointwise_per_module * (c * c + c)
    }
}

/// Exact number of trainable scalars: `L · [(k²C + C) + m_p · (C² + C)]`,
/// with `L` replaced by 1 when modules share weights.
pub fn param_count(config: &ModelConfig) -> usize {
    config.stored_modules() * config.params_per_module()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_counts() {
        assert_eq!(param_count(&ModelConfig::dscr_small(480)), 243_360);
        assert_eq!(param_count(&ModelConfig::dscr_small(497)), 260_428);
    }

    #[test]
    fn full_counts() {
        assert_eq!(param_count(&ModelConfig::dscr(497)), 3_777_200);
        assert_eq!(param_count(&ModelConfig::dscr(480)), 3_525_600);
    }

    #[test]
    fn shared_counts_one_module() {
        let mut c = ModelConfig::dscr(10);
        let full = param_count(&c);
        c.share_module_weights = true;
        assert_eq!(param_count(&c) * 5, full);
    }

    #[test]
    fn validation() {
        assert!(ModelConfig { dw_kernel: 4, ..ModelConfig::dscr(3) }.validate().is_err());
        assert!(ModelConfig { n_modules: 0, ..ModelConfig::dscr(3) }.validate().is_err());
        assert!(ModelConfig { channels: 0, ..ModelConfig::dscr(3) }.validate().is_err());
        assert!(ModelConfig::dscr_small(3).validate().is_ok());
    }
}
