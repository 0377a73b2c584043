//! Named desk-scale operating points so the standard experiments are one
//! command. `tiny` pins its codebook dimensions for fast smoke runs; `small`
//! derives them from the rate backoff so doubling n exercises the sizing
//! formulas.

use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, PowerPolicy};
use crate::params::ThetaLimit;

/// Looks up a named preset.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    match name {
        "tiny" => Ok(ExperimentConfig {
            n: 16,
            ell: 4,
            alpha: 0.5,
            power: 10.0,
            epsilon: 0.3,
            n0_override: Some(8),
            m_override: Some(2),
            trials: 200,
            ..ExperimentConfig::default()
        }),
        "small" => Ok(ExperimentConfig {
            n: 16,
            ell: 8,
            alpha: 0.5,
            power: 1.0,
            epsilon: 0.3,
            theta_limit: Some(ThetaLimit::Vanishing),
            power_policy: PowerPolicy::Resample,
            trials: 2000,
            ..ExperimentConfig::default()
        }),
        other => Err(Error::domain(format!("unknown preset '{other}' (tiny or small)"))),
    }
}
