//! Codebook construction: per-user signatures, message-bearing Gaussian
//! codewords, the signature-length and codeword-count sizing rules, power
//! accounting, encoding, and a binary dump format.
//!
//! Each of the `ell` users holds `m` codewords of length `n`. All of a user's
//! codewords share the same length-`n0` signature prefix; the remaining
//! `n - n0` positions carry the message. Entries are i.i.d. `N(0, p_prime)`
//! with `p_prime` strictly below the channel's power limit so that the
//! mean-square constraint holds with high probability, and violations are
//! tracked rather than silently ignored.

use std::io::{Read, Write};

use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::params::{SystemParams, ThetaLimit};
use crate::rng::{self, domain};

/// Per-user message indices for one block: entry `w = 0` means the user is
/// idle (transmits nothing), `w` in `1..=m` selects a codeword.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransmittedState {
    messages: Vec<u32>,
}

impl TransmittedState {
    pub fn new(messages: Vec<u32>) -> Self {
        TransmittedState { messages }
    }

    pub fn messages(&self) -> &[u32] {
        &self.messages
    }

    pub fn user_count(&self) -> u32 {
        self.messages.len() as u32
    }

    /// Indices of active users, ascending.
    pub fn support(&self) -> Vec<u32> {
        self.messages
            .iter()
            .enumerate()
            .filter(|&(_, &w)| w != 0)
            .map(|(u, _)| u as u32)
            .collect()
    }

    pub fn active_count(&self) -> usize {
        self.messages.iter().filter(|&&w| w != 0).count()
    }
}

/// The signature half of a codebook: `ell` rows of length `n0`, one per
/// user. Kept as its own type so stage-1 experiments can run without
/// message parts existing at all.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureSet {
    ell: u32,
    n0: u32,
    data: Vec<f64>,
}

impl SignatureSet {
    /// Draws `ell` signatures of length `n0` with i.i.d. `N(0, p_prime)`
    /// entries. User `u`'s signature depends only on `(seed, u)`, never on
    /// `ell` or `n0`: adding users or lengthening signatures extends the
    /// existing draws instead of reshuffling them.
    pub fn generate(ell: u32, n0: u32, p_prime: f64, seed: u64) -> Result<Self> {
        if ell < 1 {
            return Err(Error::domain("signature set needs at least one user"));
        }
        if !(p_prime > 0.0) || !p_prime.is_finite() {
            return Err(Error::domain(format!("signature power must be positive, got {p_prime}")));
        }
        let sigma = p_prime.sqrt();
        let data = draw_rows(ell, n0, sigma, |u| [seed, domain::CODEBOOK, u as u64, 0, 0]);
        Ok(SignatureSet { ell, n0, data })
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn n0(&self) -> u32 {
        self.n0
    }

    pub fn signature(&self, user: u32) -> &[f64] {
        let w = self.n0 as usize;
        &self.data[user as usize * w..(user as usize + 1) * w]
    }

    fn from_parts(ell: u32, n0: u32, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), ell as usize * n0 as usize);
        SignatureSet { ell, n0, data }
    }
}

fn draw_rows(
    rows: u32,
    cols: u32,
    sigma: f64,
    label: impl Fn(u32) -> [u64; 5] + Sync,
) -> Vec<f64> {
    let width = cols as usize;
    let mut data = vec![0.0; rows as usize * width];
    data.par_chunks_mut(width.max(1))
        .enumerate()
        .for_each(|(u, chunk)| {
            if width > 0 {
                let mut stream = rng::stream(&label(u as u32));
                rng::fill_gaussian(&mut stream, sigma, chunk);
            }
        });
    data
}

/// Dimensions and draw power of a codebook.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodebookSpec {
    pub ell: u32,
    pub n: u32,
    pub n0: u32,
    pub m: u32,
    pub p_prime: f64,
}

impl CodebookSpec {
    pub fn new(ell: u32, n: u32, n0: u32, m: u32, p_prime: f64) -> Result<Self> {
        if ell < 1 || n < 1 || m < 1 {
            return Err(Error::domain("codebook needs ell >= 1, n >= 1, m >= 1"));
        }
        if n0 >= n {
            return Err(Error::infeasible(format!(
                "signature length {n0} leaves no message positions in blocklength {n}"
            )));
        }
        if !(p_prime > 0.0) || !p_prime.is_finite() {
            return Err(Error::domain(format!("codebook power must be positive, got {p_prime}")));
        }
        Ok(CodebookSpec { ell, n, n0, m, p_prime })
    }

    pub fn message_len(&self) -> usize {
        (self.n - self.n0) as usize
    }
}

/// A full codebook: shared signatures plus per-user, per-message codeword
/// tails, with cached energies for power accounting. Immutable in normal
/// use; [`CodebookSet::regenerate_user`] exists for the resample policy.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookSet {
    spec: CodebookSpec,
    seed: u64,
    attempts: Vec<u32>,
    signatures: SignatureSet,
    /// Message tails, user-major then codeword-major: the tail of user `u`,
    /// codeword `w` starts at `(u * m + w - 1) * message_len`.
    message: Vec<f64>,
    sig_energy: Vec<f64>,
    msg_energy: Vec<f64>,
}

impl CodebookSet {
    /// Draws the whole codebook from `(seed, user, codeword)`-keyed streams.
    /// Signatures are codeword index 0; messages are 1..=m. Keying by ids
    /// rather than position makes user `u`'s codebook independent of `ell`
    /// and makes shorter blocklengths exact prefixes of longer ones.
    pub fn generate(spec: CodebookSpec, seed: u64) -> Result<Self> {
        // n0 = 0 is legal for a codebook: genie experiments skip stage 1.
        let signatures = SignatureSet::generate(spec.ell, spec.n0, spec.p_prime, seed)?;
        let attempts = vec![0u32; spec.ell as usize];
        let message = draw_message_block(&spec, seed, &attempts);
        let mut cb = CodebookSet {
            spec,
            seed,
            attempts,
            signatures,
            message,
            sig_energy: Vec::new(),
            msg_energy: Vec::new(),
        };
        cb.recompute_energies();
        Ok(cb)
    }

    pub fn spec(&self) -> &CodebookSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn signatures(&self) -> &SignatureSet {
        &self.signatures
    }

    /// Message tail of codeword `w` (1-based) of `user`.
    pub fn message_part(&self, user: u32, w: u32) -> &[f64] {
        debug_assert!((1..=self.spec.m).contains(&w));
        let len = self.spec.message_len();
        let start = (user as usize * self.spec.m as usize + w as usize - 1) * len;
        &self.message[start..start + len]
    }

    /// Squared norm of the full codeword `[signature; tail(w)]`.
    pub fn codeword_energy(&self, user: u32, w: u32) -> f64 {
        self.sig_energy[user as usize]
            + self.msg_energy[user as usize * self.spec.m as usize + w as usize - 1]
    }

    /// `(1/n) * energy`: the quantity the power constraint bounds.
    pub fn codeword_mean_square(&self, user: u32, w: u32) -> f64 {
        self.codeword_energy(user, w) / self.spec.n as f64
    }

    /// Whether every codeword of `user` meets the mean-square limit.
    pub fn power_ok_user(&self, user: u32, limit: f64) -> bool {
        (1..=self.spec.m).all(|w| self.codeword_mean_square(user, w) <= limit)
    }

    /// Whether the specific transmitted codeword `(user, w)` breaks the limit.
    pub fn transmitted_violates(&self, user: u32, w: u32, limit: f64) -> bool {
        self.codeword_mean_square(user, w) > limit
    }

    /// Users with at least one violating codeword.
    pub fn violating_users(&self, limit: f64) -> Vec<u32> {
        (0..self.spec.ell).filter(|&u| !self.power_ok_user(u, limit)).collect()
    }

    /// Redraws all of `user`'s codewords (signature included) from the next
    /// attempt-keyed stream. Used by the resample power policy.
    pub fn regenerate_user(&mut self, user: u32) {
        let u = user as usize;
        self.attempts[u] += 1;
        let attempt = self.attempts[u] as u64;
        let seed = self.seed;
        let sigma = self.spec.p_prime.sqrt();
        let n0 = self.spec.n0 as usize;
        let sig = &mut self.signatures.data[u * n0..(u + 1) * n0];
        rng::fill_gaussian(
            &mut rng::stream(&[seed, domain::CODEBOOK, user as u64, 0, attempt]),
            sigma,
            sig,
        );
        self.sig_energy[u] = sig.iter().map(|x| x * x).sum();
        let len = self.spec.message_len();
        let m = self.spec.m as usize;
        for w in 1..=m {
            let start = (u * m + w - 1) * len;
            let tail = &mut self.message[start..start + len];
            rng::fill_gaussian(
                &mut rng::stream(&[seed, domain::CODEBOOK, user as u64, w as u64, attempt]),
                sigma,
                tail,
            );
            self.msg_energy[u * m + w - 1] = tail.iter().map(|x| x * x).sum();
        }
    }

    /// Expands a state into per-user codewords of length `n`: the all-zero
    /// vector for idle users, `[signature; tail(w)]` otherwise.
    pub fn encode(&self, state: &TransmittedState) -> Result<Vec<Vec<f64>>> {
        self.check_state(state)?;
        let n = self.spec.n as usize;
        let n0 = self.spec.n0 as usize;
        let mut out = Vec::with_capacity(state.messages().len());
        for (u, &w) in state.messages().iter().enumerate() {
            let mut cw = vec![0.0; n];
            if w != 0 {
                cw[..n0].copy_from_slice(self.signatures.signature(u as u32));
                cw[n0..].copy_from_slice(self.message_part(u as u32, w));
            }
            out.push(cw);
        }
        Ok(out)
    }

    /// Adds the superposition of the active codewords into `y`, in ascending
    /// user order. The fixed order makes noiseless transmission bit-for-bit
    /// reproducible, which the zero-noise diagnostics rely on.
    pub(crate) fn superpose_into(&self, state: &TransmittedState, y: &mut [f64]) -> Result<()> {
        self.check_state(state)?;
        debug_assert_eq!(y.len(), self.spec.n as usize);
        let n0 = self.spec.n0 as usize;
        for (u, &w) in state.messages().iter().enumerate() {
            if w != 0 {
                let sig = self.signatures.signature(u as u32);
                for (yi, si) in y[..n0].iter_mut().zip(sig) {
                    *yi += si;
                }
                let tail = self.message_part(u as u32, w);
                for (yi, si) in y[n0..].iter_mut().zip(tail) {
                    *yi += si;
                }
            }
        }
        Ok(())
    }

    fn check_state(&self, state: &TransmittedState) -> Result<()> {
        if state.user_count() != self.spec.ell {
            return Err(Error::domain(format!(
                "state covers {} users, codebook has {}",
                state.user_count(),
                self.spec.ell
            )));
        }
        if let Some(&w) = state.messages().iter().find(|&&w| w > self.spec.m) {
            return Err(Error::domain(format!(
                "message index {w} exceeds codebook size {}",
                self.spec.m
            )));
        }
        Ok(())
    }

    fn recompute_energies(&mut self) {
        let m = self.spec.m as usize;
        let len = self.spec.message_len();
        self.sig_energy = (0..self.spec.ell)
            .map(|u| self.signatures.signature(u).iter().map(|x| x * x).sum())
            .collect();
        self.msg_energy = (0..self.spec.ell as usize * m)
            .map(|i| self.message[i * len..(i + 1) * len].iter().map(|x| x * x).sum())
            .collect();
    }

    /// Serializes as a 32-byte header (magic `MNCB`, format version, n, n0,
    /// ell, m as little-endian u32, seed as u64) followed by the signature
    /// block (user-major) and the message block (user-major, codeword-major),
    /// all entries little-endian f64.
    pub fn dump<W: Write>(&self, mut w: W) -> Result<()> {
        let mut buf = Vec::with_capacity(32 + 8 * (self.signatures.data.len() + self.message.len()));
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        buf.extend_from_slice(&self.spec.n.to_le_bytes());
        buf.extend_from_slice(&self.spec.n0.to_le_bytes());
        buf.extend_from_slice(&self.spec.ell.to_le_bytes());
        buf.extend_from_slice(&self.spec.m.to_le_bytes());
        buf.extend_from_slice(&self.seed.to_le_bytes());
        for x in self.signatures.data.iter().chain(self.message.iter()) {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Reads a dumped codebook back, recomputing energies from the data.
    /// The format does not store the draw power, so the restored spec
    /// records the empirical per-entry variance in its place; use
    /// [`CodebookSet::load_with_power`] to record the nominal value instead.
    pub fn load<R: Read>(r: R) -> Result<Self> {
        Self::load_with_power(r, None)
    }

    /// [`CodebookSet::load`] with an explicit draw power to record in the
    /// restored spec (the file format does not store it).
    pub fn load_with_power<R: Read>(mut r: R, p_prime: Option<f64>) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() < 32 {
            return Err(Error::Format("file shorter than the 32-byte header".into()));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Format("bad magic; not a codebook dump".into()));
        }
        let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
        let version = u32_at(4);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format version {version} (expected {FORMAT_VERSION})"
            )));
        }
        let n = u32_at(8);
        let n0 = u32_at(12);
        let ell = u32_at(16);
        let m = u32_at(20);
        let seed = u64::from_le_bytes(bytes[24..32].try_into().unwrap());
        if ell < 1 || n < 1 || m < 1 || n0 >= n {
            return Err(Error::Format(format!(
                "inconsistent header: n = {n}, n0 = {n0}, ell = {ell}, m = {m}"
            )));
        }
        let sig_count = ell as usize * n0 as usize;
        let msg_count = ell as usize * m as usize * (n - n0) as usize;
        let expected = 32 + 8 * (sig_count + msg_count);
        if bytes.len() != expected {
            return Err(Error::Format(format!(
                "payload is {} bytes, header implies {expected}",
                bytes.len()
            )));
        }
        let mut values = bytes[32..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let sig_data: Vec<f64> = values.by_ref().take(sig_count).collect();
        let message: Vec<f64> = values.collect();
        let p_prime = p_prime.unwrap_or_else(|| {
            let total: f64 = sig_data.iter().chain(&message).map(|x| x * x).sum();
            let entries = (sig_count + msg_count).max(1);
            let var = total / entries as f64;
            if var > 0.0 { var } else { 1.0 }
        });
        let spec = CodebookSpec { ell, n, n0, m, p_prime };
        let mut cb = CodebookSet {
            spec,
            seed,
            attempts: vec![0; ell as usize],
            signatures: SignatureSet::from_parts(ell, n0, sig_data),
            message,
            sig_energy: Vec::new(),
            msg_energy: Vec::new(),
        };
        cb.recompute_energies();
        Ok(cb)
    }
}

const MAGIC: &[u8; 4] = b"MNCB";
const FORMAT_VERSION: u32 = 1;

fn draw_message_block(spec: &CodebookSpec, seed: u64, attempts: &[u32]) -> Vec<f64> {
    let len = spec.message_len();
    let m = spec.m as usize;
    let sigma = spec.p_prime.sqrt();
    let mut data = vec![0.0; spec.ell as usize * m * len];
    data.par_chunks_mut(len.max(1))
        .enumerate()
        .for_each(|(i, chunk)| {
            if len > 0 {
                let (u, w) = (i / m, i % m + 1);
                let mut stream = rng::stream(&[
                    seed,
                    domain::CODEBOOK,
                    u as u64,
                    w as u64,
                    attempts[u] as u64,
                ]);
                rng::fill_gaussian(&mut stream, sigma, chunk);
            }
        });
    data
}

/// Ceiling with a relative slop guard: values within 1e-9 (relative) of an
/// integer round to it instead of jumping a full unit up. Guards sizing
/// formulas like `0.1 * 1000`, which lands at 100.00000000000001 in floating
/// point but means exactly 100.
fn ceil_guard(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Signature length `n0`: `epsilon * n` when the penalty ratio vanishes
/// asymptotically, `(1 + epsilon / ln(1 + kP)) * theta_n * n` otherwise.
/// Rounded up and clamped below at 1; an operating point whose formula
/// reaches `n` has no room left for messages and is rejected.
pub fn signature_length(
    params: &SystemParams,
    epsilon: f64,
    theta_n: f64,
    limit: ThetaLimit,
) -> Result<u32> {
    if !(0.0 < epsilon && epsilon < 1.0) {
        return Err(Error::domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(theta_n >= 0.0) || !theta_n.is_finite() {
        return Err(Error::domain(format!("theta must be a nonnegative real, got {theta_n}")));
    }
    let n = params.n as f64;
    let raw = match limit {
        ThetaLimit::Vanishing => epsilon * n,
        ThetaLimit::NonVanishing => {
            let k = params.k();
            if k <= 0.0 {
                return Err(Error::domain("signature sizing needs k > 0"));
            }
            (1.0 + epsilon / (k * params.power).ln_1p()) * theta_n * n
        }
    };
    let n0 = ceil_guard(raw).max(1.0);
    if n0 >= n {
        return Err(Error::infeasible(format!(
            "signature length {n0} would consume the whole blocklength {n}"
        )));
    }
    Ok(n0 as u32)
}

/// Codeword count `M = ceil(exp(log M))` with
/// `log M = (1 - epsilon) C(n)` when the penalty ratio vanishes and
/// `log M = C(n) - epsilon n / k` otherwise. A nonpositive `log M` means no
/// positive rate survives the backoff.
pub fn codeword_count(
    params: &SystemParams,
    epsilon: f64,
    capacity_nats: f64,
    limit: ThetaLimit,
) -> Result<u64> {
    if !(0.0 < epsilon && epsilon < 1.0) {
        return Err(Error::domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(capacity_nats >= 0.0) || !capacity_nats.is_finite() {
        return Err(Error::domain(format!("capacity must be nonnegative, got {capacity_nats}")));
    }
    let log_m = match limit {
        ThetaLimit::Vanishing => (1.0 - epsilon) * capacity_nats,
        ThetaLimit::NonVanishing => {
            let k = params.k();
            if k <= 0.0 {
                return Err(Error::domain("codeword sizing needs k > 0"));
            }
            capacity_nats - epsilon * params.n as f64 / k
        }
    };
    if log_m <= 0.0 {
        return Err(Error::infeasible(format!(
            "rate allocation leaves log M = {log_m} <= 0; no positive rate at this point"
        )));
    }
    let m = log_m.exp();
    if !(m < u64::MAX as f64) {
        return Err(Error::domain(format!("codeword count ceil(e^{log_m}) does not fit in a u64")));
    }
    Ok(ceil_guard(m) as u64)
}

/// Probability that one codeword of length `len` with i.i.d. `N(0, p_prime)`
/// entries exceeds mean-square power `power`: the upper tail of a chi-square
/// with `len` degrees of freedom at `len * power / p_prime`.
pub fn power_violation_probability(len: u32, power: f64, p_prime: f64) -> Result<f64> {
    if len < 1 {
        return Err(Error::domain("codeword length must be at least 1"));
    }
    if !(power > 0.0) || !(p_prime > 0.0) {
        return Err(Error::domain("power levels must be positive"));
    }
    let chi = ChiSquared::new(len as f64)
        .map_err(|e| Error::domain(format!("chi-square setup failed: {e}")))?;
    Ok(chi.sf(len as f64 * power / p_prime))
}
