//! The memoryless Gaussian many-access channel: activity and message
//! sampling, and noisy superposition of the active users' codewords.
//!
//! The channel output is `y = sum over active users of s_u(w_u) + z` with
//! `z` i.i.d. standard Gaussian; the noise variance is normalized to 1, so
//! the power limit plays the role of an SNR. A variance switch exists for
//! zero-noise diagnostics only.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::codec::{CodebookSet, TransmittedState};
use crate::error::{Error, Result};
use crate::rng;

/// One received block, split at the signature boundary, together with the
/// state that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelOutput {
    y: Vec<f64>,
    n0: u32,
    truth: TransmittedState,
}

impl ChannelOutput {
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// The first `n0` entries: the part carrying the signatures.
    pub fn y_a(&self) -> &[f64] {
        &self.y[..self.n0 as usize]
    }

    /// The remaining entries: the part carrying the messages.
    pub fn y_b(&self) -> &[f64] {
        &self.y[self.n0 as usize..]
    }

    pub fn n0(&self) -> u32 {
        self.n0
    }

    pub fn truth(&self) -> &TransmittedState {
        &self.truth
    }
}

/// Draws one block's user state: each of the `ell` users is active with
/// probability `alpha`, and an active user picks a message uniformly from
/// `1..=m`.
///
/// Activity coins and message picks come from separate streams so that two
/// experiments sharing a seed see identical activity patterns even when
/// their codebook sizes differ.
pub fn sample_state(
    ell: u32,
    alpha: f64,
    m: u32,
    activity_rng: &mut ChaCha8Rng,
    message_rng: &mut ChaCha8Rng,
) -> Result<TransmittedState> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::domain(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    if m < 1 {
        return Err(Error::domain("need at least one message"));
    }
    let active: Vec<bool> = (0..ell).map(|_| activity_rng.random::<f64>() < alpha).collect();
    let messages = active
        .into_iter()
        .map(|a| if a { message_rng.random_range(1..=m) } else { 0 })
        .collect();
    Ok(TransmittedState::new(messages))
}

/// Superposes the active codewords and adds `N(0, noise_sigma^2)` noise.
/// `noise_sigma = 0` is the exact-superposition diagnostic.
pub fn transmit(
    codebooks: &CodebookSet,
    state: &TransmittedState,
    noise_sigma: f64,
    noise_rng: &mut ChaCha8Rng,
) -> Result<ChannelOutput> {
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::domain(format!("noise sigma must be nonnegative, got {noise_sigma}")));
    }
    let n = codebooks.spec().n as usize;
    let mut y = vec![0.0; n];
    codebooks.superpose_into(state, &mut y)?;
    if noise_sigma > 0.0 {
        let mut z = vec![0.0; n];
        rng::fill_gaussian(noise_rng, noise_sigma, &mut z);
        for (yi, zi) in y.iter_mut().zip(&z) {
            *yi += zi;
        }
    }
    Ok(ChannelOutput { y, n0: codebooks.spec().n0, truth: state.clone() })
}
