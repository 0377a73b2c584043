//! Capacity calculus, error exponents, and a two-stage achievable scheme for
//! the Gaussian many-access channel: `ell` users, each independently active
//! with probability `alpha` per block, sharing one real AWGN channel of
//! blocklength `n` under a per-codeword mean-square power limit `P`.
//!
//! The crate has three layers:
//!
//! * closed-form calculus ([`capacity`], [`exponent`]): per-user capacity
//!   `C(n)`, the genie-aided rate `C1(n)`, the activity penalty `theta`,
//!   random-coding exponents, and union bounds;
//! * the constructive scheme ([`codec`], [`channel`], [`detector`]):
//!   signature-prefixed Gaussian codebooks, the noisy superposition channel,
//!   activity detection by constrained least squares, and maximum-likelihood
//!   message decoding, each with an exhaustive (certified) and a scalable
//!   solver;
//! * the experiment harness ([`harness`], [`report`]): deterministic Monte
//!   Carlo with paired random streams, capacity sweeps, and CSV/SVG output.
//!
//! All rates are handled internally in nats; bits appear only in display
//! paths as `nats / ln 2`.

pub mod capacity;
pub mod channel;
pub mod codec;
pub mod detector;
pub mod error;
pub mod exponent;
pub mod harness;
pub mod params;
pub mod report;
pub mod rng;

pub use error::{Error, Result};
pub use params::{GrowthForm, RegimeCase, ScalingLaw, SystemParams, ThetaLimit, Units};
