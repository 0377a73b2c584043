//! Two-stage receiver: activity detection by support-constrained least
//! squares on the signature part, then maximum-likelihood message decoding
//! on the message part restricted to the detected support.
//!
//! Both stages ship two solvers. The exhaustive ones enumerate every
//! candidate (guarded at 1e7) and certify a global minimum with
//! deterministic lexicographic tie-breaking; the greedy detector and the
//! cyclic-coordinate-descent decoder scale past the guard but certify
//! nothing and are validated against the exhaustive ones on small instances.

use crate::codec::{CodebookSet, SignatureSet};
use crate::error::{Error, Result};

/// Which solver produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exhaustive,
    Greedy,
    Iterative,
}

/// Solver choices for the two stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    Exhaustive,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderKind {
    Exhaustive,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Strategy {
    pub detector: DetectorKind,
    pub decoder: DecoderKind,
}

impl Default for Strategy {
    fn default() -> Self {
        Strategy { detector: DetectorKind::Exhaustive, decoder: DecoderKind::Exhaustive }
    }
}

impl std::str::FromStr for DetectorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(DetectorKind::Exhaustive),
            "greedy" => Ok(DetectorKind::Greedy),
            other => Err(Error::domain(format!(
                "unknown detector '{other}' (exhaustive or greedy)"
            ))),
        }
    }
}

impl std::str::FromStr for DecoderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(DecoderKind::Exhaustive),
            "iterative" => Ok(DecoderKind::Iterative),
            other => Err(Error::domain(format!(
                "unknown decoder '{other}' (exhaustive or iterative)"
            ))),
        }
    }
}

/// Result of stage 1: the detected active set and the residual it leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    /// Detected users, ascending.
    pub support: Vec<u32>,
    /// `|| y_a - sum of selected signatures ||^2`.
    pub objective: f64,
    pub method: Method,
    /// Whether the solver certifies a global minimum.
    pub exact: bool,
}

/// Result of stage 2: one message per detected user and the residual.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// `(user, message)` pairs in ascending user order.
    pub assignments: Vec<(u32, u32)>,
    /// `|| y_b - sum of selected message tails ||^2`.
    pub objective: f64,
    pub method: Method,
    pub exact: bool,
}

/// Budget limit on how many exhaustive candidates a solver may enumerate.
pub const ENUMERATION_GUARD: u128 = 10_000_000;

/// Support-slack schedule `min(1/2, k^(-1/3))`: tight enough that
/// `delta^2 k` diverges and `delta ln k` vanishes, and clamped to 1/2 for
/// k <= 8 where the root exceeds it.
pub fn delta_n(k: f64) -> Result<f64> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::domain(format!("mean active count must be positive, got {k}")));
    }
    Ok(0.5f64.min(k.powf(-1.0 / 3.0)))
}

/// Floor with a relative slop guard, mirroring the ceiling guard used by the
/// sizing formulas: values within 1e-9 of an integer are taken as it.
fn floor_guard(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.floor()
    }
}

/// The stage-1 support budget `floor((1 + 2 delta) k)`.
pub fn support_budget(k: f64, delta: f64) -> u32 {
    floor_guard((1.0 + 2.0 * delta) * k).max(0.0) as u32
}

/// Number of supports an exhaustive detection would enumerate:
/// `sum over j = 0..=budget of C(ell, j)`, saturating.
pub fn detection_candidates(ell: u32, budget: u32) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for j in 0..=budget.min(ell) {
        total = total.saturating_add(binom);
        if total > ENUMERATION_GUARD * 1000 {
            return u128::MAX;
        }
        // C(ell, j+1) = C(ell, j) * (ell - j) / (j + 1), exact at every step.
        binom = binom.saturating_mul((ell - j) as u128) / (j + 1) as u128;
    }
    total
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

struct Best {
    objective: f64,
    support: Vec<u32>,
}

/// Solves the stage-1 program exactly: over all binary activity patterns
/// with at most `(1 + 2 delta) k` active users, minimize
/// `|| y_a - sum of selected signatures ||^2`.
///
/// Candidates are visited in lexicographic support order and only a strictly
/// smaller objective replaces the incumbent, so ties resolve to the
/// lexicographically smallest support.
pub fn detect_activity_exhaustive(
    y_a: &[f64],
    signatures: &SignatureSet,
    k: f64,
    delta: f64,
) -> Result<DetectionResult> {
    check_detection_shapes(y_a, signatures, k, delta)?;
    let ell = signatures.ell();
    let budget = support_budget(k, delta).min(ell);
    let candidates = detection_candidates(ell, budget);
    if candidates > ENUMERATION_GUARD {
        return Err(Error::GuardExceeded { candidates, limit: ENUMERATION_GUARD });
    }
    let n0 = y_a.len();
    // Per-depth residual buffers: depth d holds y_a minus the d selected
    // signatures, so sibling branches never see each other's arithmetic.
    let mut bufs = vec![vec![0.0f64; n0]; budget as usize + 1];
    bufs[0].copy_from_slice(y_a);
    let mut best = Best { objective: f64::INFINITY, support: Vec::new() };
    let mut support = Vec::with_capacity(budget as usize);
    dfs_detect(0, 0, budget, signatures, &mut bufs, &mut support, &mut best);
    Ok(DetectionResult {
        support: best.support,
        objective: best.objective,
        method: Method::Exhaustive,
        exact: true,
    })
}

fn dfs_detect(
    depth: u32,
    start: u32,
    budget: u32,
    signatures: &SignatureSet,
    bufs: &mut [Vec<f64>],
    support: &mut Vec<u32>,
    best: &mut Best,
) {
    let d = depth as usize;
    let obj = norm_sq(&bufs[d]);
    if obj < best.objective {
        best.objective = obj;
        best.support = support.clone();
    }
    if depth == budget {
        return;
    }
    for j in start..signatures.ell() {
        {
            let (head, tail) = bufs.split_at_mut(d + 1);
            let sig = signatures.signature(j);
            for ((dst, src), s) in tail[0].iter_mut().zip(&head[d]).zip(sig) {
                *dst = src - s;
            }
        }
        support.push(j);
        dfs_detect(depth + 1, j + 1, budget, signatures, bufs, support, best);
        support.pop();
    }
}

/// Scalable stage-1 surrogate: forward selection up to the support budget
/// (adding, at a unit coefficient, the signature that most reduces the
/// residual), then backward pruning of entries whose removal does not
/// increase it. Never certifies optimality.
pub fn detect_activity_greedy(
    y_a: &[f64],
    signatures: &SignatureSet,
    k: f64,
    delta: f64,
) -> Result<DetectionResult> {
    check_detection_shapes(y_a, signatures, k, delta)?;
    let ell = signatures.ell();
    let budget = support_budget(k, delta).min(ell);
    let mut residual = y_a.to_vec();
    let mut selected: Vec<u32> = Vec::new();

    while (selected.len() as u32) < budget {
        // Reduction from subtracting signature j: 2 <r, s_j> - ||s_j||^2.
        let mut best_gain = 0.0f64;
        let mut best_j: Option<u32> = None;
        for j in 0..ell {
            if selected.contains(&j) {
                continue;
            }
            let sig = signatures.signature(j);
            let dot: f64 = residual.iter().zip(sig).map(|(r, s)| r * s).sum();
            let gain = 2.0 * dot - norm_sq(sig);
            if gain > best_gain {
                best_gain = gain;
                best_j = Some(j);
            }
        }
        let Some(j) = best_j else { break };
        for (r, s) in residual.iter_mut().zip(signatures.signature(j)) {
            *r -= s;
        }
        selected.push(j);
    }

    // Prune while a removal leaves the residual no larger.
    loop {
        let current = norm_sq(&residual);
        let mut removed = false;
        for idx in 0..selected.len() {
            let sig = signatures.signature(selected[idx]);
            let dot: f64 = residual.iter().zip(sig).map(|(r, s)| r * s).sum();
            let after = current + 2.0 * dot + norm_sq(sig);
            if after <= current {
                for (r, s) in residual.iter_mut().zip(sig) {
                    *r += s;
                }
                selected.remove(idx);
                removed = true;
                break;
            }
        }
        if !removed {
            break;
        }
    }

    selected.sort_unstable();
    // Recompute the objective from the final support so reported values do
    // not carry incremental drift.
    let mut fresh = y_a.to_vec();
    for &j in &selected {
        for (r, s) in fresh.iter_mut().zip(signatures.signature(j)) {
            *r -= s;
        }
    }
    Ok(DetectionResult {
        support: selected,
        objective: norm_sq(&fresh),
        method: Method::Greedy,
        exact: false,
    })
}

fn check_detection_shapes(
    y_a: &[f64],
    signatures: &SignatureSet,
    k: f64,
    delta: f64,
) -> Result<()> {
    if y_a.len() != signatures.n0() as usize {
        return Err(Error::domain(format!(
            "observation length {} does not match signature length {}",
            y_a.len(),
            signatures.n0()
        )));
    }
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::domain(format!("mean active count must be nonnegative, got {k}")));
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::domain(format!("support slack must be nonnegative, got {delta}")));
    }
    Ok(())
}

/// Number of message tuples an exhaustive decode would enumerate.
pub fn decode_candidates(m: u32, support_size: usize) -> u128 {
    (m as u128).checked_pow(support_size as u32).unwrap_or(u128::MAX)
}

/// Exact ML decoding: over all assignments of one message per detected user,
/// minimize `|| y_b - sum of selected tails ||^2`. Ties resolve to the
/// lexicographically smallest message vector.
pub fn decode_messages_exhaustive(
    y_b: &[f64],
    codebooks: &CodebookSet,
    support: &[u32],
) -> Result<DecodeResult> {
    check_decode_shapes(y_b, codebooks, support)?;
    if support.is_empty() {
        return Ok(DecodeResult {
            assignments: Vec::new(),
            objective: norm_sq(y_b),
            method: Method::Exhaustive,
            exact: true,
        });
    }
    let m = codebooks.spec().m;
    let candidates = decode_candidates(m, support.len());
    if candidates > ENUMERATION_GUARD {
        return Err(Error::GuardExceeded { candidates, limit: ENUMERATION_GUARD });
    }
    let len = y_b.len();
    let mut bufs = vec![vec![0.0f64; len]; support.len() + 1];
    bufs[0].copy_from_slice(y_b);
    let mut best_obj = f64::INFINITY;
    let mut best_assign: Vec<u32> = Vec::new();
    let mut current = vec![0u32; support.len()];
    dfs_decode(
        0,
        support,
        codebooks,
        &mut bufs,
        &mut current,
        &mut best_obj,
        &mut best_assign,
    );
    Ok(DecodeResult {
        assignments: support.iter().copied().zip(best_assign).collect(),
        objective: best_obj,
        method: Method::Exhaustive,
        exact: true,
    })
}

fn dfs_decode(
    depth: usize,
    support: &[u32],
    codebooks: &CodebookSet,
    bufs: &mut [Vec<f64>],
    current: &mut [u32],
    best_obj: &mut f64,
    best_assign: &mut Vec<u32>,
) {
    if depth == support.len() {
        let obj = norm_sq(&bufs[depth]);
        if obj < *best_obj {
            *best_obj = obj;
            best_assign.clear();
            best_assign.extend_from_slice(current);
        }
        return;
    }
    let user = support[depth];
    for w in 1..=codebooks.spec().m {
        {
            let (head, tail) = bufs.split_at_mut(depth + 1);
            let t = codebooks.message_part(user, w);
            for ((dst, src), s) in tail[0].iter_mut().zip(&head[depth]).zip(t) {
                *dst = src - s;
            }
        }
        current[depth] = w;
        dfs_decode(depth + 1, support, codebooks, bufs, current, best_obj, best_assign);
    }
}

/// Scalable stage-2 surrogate: cyclic coordinate descent over users,
/// starting from message 1 everywhere and, per user, picking the message
/// that minimizes the residual with the others held fixed. Runs until a full
/// sweep changes nothing or 50 sweeps elapse. The objective is non-increasing
/// by construction, which every update asserts.
pub fn decode_messages_iterative(
    y_b: &[f64],
    codebooks: &CodebookSet,
    support: &[u32],
) -> Result<DecodeResult> {
    check_decode_shapes(y_b, codebooks, support)?;
    let exact = support.len() <= 1;
    if support.is_empty() {
        return Ok(DecodeResult {
            assignments: Vec::new(),
            objective: norm_sq(y_b),
            method: Method::Iterative,
            exact,
        });
    }
    let m = codebooks.spec().m;
    let mut assign = vec![1u32; support.len()];
    let mut residual = y_b.to_vec();
    for &u in support {
        for (r, s) in residual.iter_mut().zip(codebooks.message_part(u, 1)) {
            *r -= s;
        }
    }
    let mut objective = norm_sq(&residual);

    for _sweep in 0..50 {
        let mut changed = false;
        for (i, &u) in support.iter().enumerate() {
            // Lift user u out of the residual, then rescan its alphabet.
            for (r, s) in residual.iter_mut().zip(codebooks.message_part(u, assign[i])) {
                *r += s;
            }
            let mut best_w = 1u32;
            let mut best_val = f64::INFINITY;
            for w in 1..=m {
                let tail = codebooks.message_part(u, w);
                let val: f64 =
                    residual.iter().zip(tail).map(|(r, s)| (r - s) * (r - s)).sum();
                if val < best_val {
                    best_val = val;
                    best_w = w;
                }
            }
            assert!(
                best_val <= objective + 1e-9 * objective.max(1.0),
                "coordinate update raised the objective: {objective} -> {best_val}"
            );
            if best_w != assign[i] {
                assign[i] = best_w;
                changed = true;
            }
            for (r, s) in residual.iter_mut().zip(codebooks.message_part(u, best_w)) {
                *r -= s;
            }
            objective = best_val;
        }
        if !changed {
            break;
        }
    }

    // Report a drift-free objective recomputed from the final assignment.
    let mut fresh = y_b.to_vec();
    for (i, &u) in support.iter().enumerate() {
        for (r, s) in fresh.iter_mut().zip(codebooks.message_part(u, assign[i])) {
            *r -= s;
        }
    }
    Ok(DecodeResult {
        assignments: support.iter().copied().zip(assign).collect(),
        objective: norm_sq(&fresh),
        method: Method::Iterative,
        exact,
    })
}

fn check_decode_shapes(y_b: &[f64], codebooks: &CodebookSet, support: &[u32]) -> Result<()> {
    if y_b.len() != codebooks.spec().message_len() {
        return Err(Error::domain(format!(
            "observation length {} does not match message length {}",
            y_b.len(),
            codebooks.spec().message_len()
        )));
    }
    if support.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("support must be strictly ascending"));
    }
    if let Some(&u) = support.iter().find(|&&u| u >= codebooks.spec().ell) {
        return Err(Error::domain(format!(
            "support user {u} outside the codebook's {} users",
            codebooks.spec().ell
        )));
    }
    Ok(())
}

/// Runs both stages: detection on the signature part, then message decoding
/// on the message part restricted to the detected support. Decoding falls
/// back to the iterative solver when the detected support pushes the
/// exhaustive decoder past its enumeration guard; detection guard errors
/// propagate, since the detection search space is fixed by the config and
/// should have been checked up front.
pub fn two_stage_decode(
    output: &crate::channel::ChannelOutput,
    codebooks: &CodebookSet,
    k: f64,
    strategy: Strategy,
) -> Result<(DetectionResult, DecodeResult)> {
    let delta = delta_n(k.max(1.0))?;
    let detection = match strategy.detector {
        DetectorKind::Exhaustive => {
            detect_activity_exhaustive(output.y_a(), codebooks.signatures(), k, delta)?
        }
        DetectorKind::Greedy => {
            detect_activity_greedy(output.y_a(), codebooks.signatures(), k, delta)?
        }
    };
    let decode = match strategy.decoder {
        DecoderKind::Exhaustive => {
            match decode_messages_exhaustive(output.y_b(), codebooks, &detection.support) {
                Err(Error::GuardExceeded { .. }) => {
                    decode_messages_iterative(output.y_b(), codebooks, &detection.support)?
                }
                other => other?,
            }
        }
        DecoderKind::Iterative => {
            decode_messages_iterative(output.y_b(), codebooks, &detection.support)?
        }
    };
    Ok((detection, decode))
}
