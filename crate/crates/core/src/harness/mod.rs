//! Experiment orchestration: configuration, Monte Carlo error-probability
//! estimation, the capacity-curve figure, and the scheme-validation battery.
//!
//! Everything here is deterministic given the experiment seed. Per-trial
//! randomness comes from counter-keyed streams, so the trial loop can run on
//! a thread pool without changing any output, and trials at different
//! blocklengths share their activity patterns, message draws, and noise
//! prefixes for low-variance paired comparisons.

mod config;
mod fig1;
mod montecarlo;
mod presets;
mod validate;

pub use config::{
    parse_config, parse_config_str, CodebookMode, ExperimentConfig, PowerPolicy,
    ResolvedExperiment,
};
pub use fig1::{run_fig1, Fig1Output};
pub use montecarlo::{
    estimate_error_probability, run_trial, trial_is_error, trials_csv, wilson_half_width,
    ErrorEstimate, TrialResult,
};
pub use presets::preset;
pub use validate::{run_scheme_validation, validation_csv, ValidationPoint, ValidationReport};
