//! Random-coding error-exponent machinery for maximum-likelihood decoding
//! with known user activities: the Gallager-style function `E0`, the
//! per-error-fraction exponent `f(gamma, rho)`, the min-max exponent `Er`,
//! the achievable message length, property certification, and the union
//! error bound that combines the ML term with the power-violation term.

use rayon::prelude::*;

use crate::capacity::h2_raw;
use crate::codec::power_violation_probability;
use crate::error::{Error, Result};

/// Parameters of one exponent evaluation: blocklength `n`, active-user count
/// `k`, codebook power `p_prime` (drawn below the channel's limit), and the
/// per-user message length `v` in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentParams {
    pub n: u32,
    pub k: u32,
    pub p_prime: f64,
    pub v: f64,
}

impl ExponentParams {
    pub fn new(n: u32, k: u32, p_prime: f64, v: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::domain("blocklength n must be at least 1"));
        }
        if k < 1 {
            return Err(Error::domain("active-user count k must be at least 1"));
        }
        if !(p_prime > 0.0) || !p_prime.is_finite() {
            return Err(Error::domain(format!("codebook power must be positive, got {p_prime}")));
        }
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::domain(format!("message length must be nonnegative, got {v}")));
        }
        Ok(ExponentParams { n, k, p_prime, v })
    }
}

fn e0_raw(gamma: f64, rho: f64, kp: f64) -> f64 {
    rho / 2.0 * (gamma * kp / (rho + 1.0)).ln_1p()
}

/// `E0(gamma, rho) = (rho/2) ln(1 + gamma k P' / (rho + 1))` in nats per
/// channel use, for `gamma` in (0, 1], `rho` in [0, 1], and `kp = k * P'`.
pub fn e0(gamma: f64, rho: f64, kp: f64) -> f64 {
    debug_assert!(gamma > 0.0 && gamma <= 1.0, "gamma out of (0, 1]: {gamma}");
    debug_assert!((0.0..=1.0).contains(&rho), "rho out of [0, 1]: {rho}");
    debug_assert!(kp >= 0.0, "kp negative: {kp}");
    e0_raw(gamma, rho, kp)
}

/// The exponent of the probability that exactly a fraction `gamma` of the `k`
/// active users is decoded wrongly:
/// `f = E0(gamma, rho) - (k/n) H2(gamma) - gamma rho (k/n) v`.
pub fn f_exponent(gamma: f64, rho: f64, params: &ExponentParams) -> f64 {
    let k_over_n = params.k as f64 / params.n as f64;
    e0(gamma, rho, params.k as f64 * params.p_prime)
        - k_over_n * h2_raw(gamma)
        - gamma * rho * k_over_n * params.v
}

/// Maximizes `f(gamma, .)` over `rho` in [0, 1].
///
/// `f` is concave in `rho` (`E0` is concave, the subtracted terms are linear),
/// so a ternary search converges; it runs until the bracket is below 1e-9,
/// and the result is cross-checked against the exact endpoints and a
/// 1001-point coarse grid so a boundary maximum is returned exactly.
pub fn max_over_rho(gamma: f64, params: &ExponentParams) -> (f64, f64) {
    let f = |rho: f64| f_exponent(gamma, rho, params);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-9 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let mut best_rho = 0.0;
    let mut best_val = f(0.0);
    let mut consider = |rho: f64, val: f64| {
        if val > best_val {
            best_rho = rho;
            best_val = val;
        }
    };
    consider(1.0, f(1.0));
    let mid = 0.5 * (lo + hi);
    consider(mid, f(mid));
    // Coarse-grid safety net; under concavity it never wins, but it turns a
    // hypothetical search failure into a visible value change.
    for i in 0..=1000 {
        let rho = i as f64 / 1000.0;
        consider(rho, f(rho));
    }
    (best_rho, best_val)
}

/// One row of the exponent table: `gamma = k / k_total` with the maximizing
/// `rho` and the value `f(gamma, rho*)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaRow {
    pub k: u32,
    pub gamma: f64,
    pub rho_star: f64,
    pub f_star: f64,
}

/// Result of the min-max exponent evaluation. `er` may be negative: a
/// negative value means the union bound does not decay at these parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentResult {
    pub er: f64,
    pub argmin_gamma: f64,
    pub rows: Vec<GammaRow>,
}

/// `Er = min over gamma of max over rho of f(gamma, rho)`, with `gamma`
/// ranging over the exact error fractions `j / k` for `j = 1..k` (the number
/// of wrongly decoded users is an integer, so the minimum is over a discrete
/// grid, not a continuum). Ties in the minimum go to the smallest `j`.
pub fn error_exponent_er(params: &ExponentParams) -> Result<ExponentResult> {
    let k_total = params.k;
    let rows: Vec<GammaRow> = (1..=k_total)
        .into_par_iter()
        .map(|j| {
            let gamma = j as f64 / k_total as f64;
            let (rho_star, f_star) = max_over_rho(gamma, params);
            GammaRow { k: j, gamma, rho_star, f_star }
        })
        .collect();
    let mut best = 0usize;
    for (i, row) in rows.iter().enumerate() {
        if row.f_star < rows[best].f_star {
            best = i;
        }
    }
    Ok(ExponentResult { er: rows[best].f_star, argmin_gamma: rows[best].gamma, rows })
}

/// Achievable per-user message length in nats for `k` known-active users at
/// codebook power `p_prime` with rate backoff `epsilon`:
/// `v(n) = n/(2k) (ln(1 + k P') - epsilon)`.
pub fn achievable_message_length(n: u32, k: u32, p_prime: f64, epsilon: f64) -> Result<f64> {
    if n < 1 || k < 1 {
        return Err(Error::domain("need n >= 1 and k >= 1"));
    }
    if !(p_prime > 0.0) || !p_prime.is_finite() {
        return Err(Error::domain(format!("codebook power must be positive, got {p_prime}")));
    }
    let cap = (k as f64 * p_prime).ln_1p();
    if !(0.0..cap).contains(&epsilon) {
        return Err(Error::domain(format!(
            "epsilon must lie in [0, ln(1 + kP') = {cap}), got {epsilon}"
        )));
    }
    Ok(n as f64 / (2.0 * k as f64) * (cap - epsilon))
}

/// Certification report for the three structural properties of `E0`:
/// monotone in `rho` (P1), concave in `rho` (P2), and slope
/// `(1/2) ln(1 + gamma k P')` at `rho = 0` (P3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropertyReport {
    pub points: usize,
    pub p1_violations: usize,
    pub p2_violations: usize,
    pub p3_violations: usize,
    /// Smallest forward difference seen while checking P1 (must be >= -1e-12).
    pub worst_p1_slack: f64,
    /// Smallest midpoint-concavity margin seen while checking P2 (same bound).
    pub worst_p2_slack: f64,
    /// Largest deviation between the finite-difference slope at 0 and the
    /// analytic value (must be <= 1e-6).
    pub worst_p3_error: f64,
}

impl PropertyReport {
    pub fn all_pass(&self) -> bool {
        self.p1_violations == 0 && self.p2_violations == 0 && self.p3_violations == 0
    }
}

/// Checks P1 by consecutive differences and P2 by midpoint concavity on a
/// 65-point `rho` grid, and P3 by a central finite difference with step 1e-5
/// against `(1/2) ln(1 + gamma kp)`, at every `(gamma, kp)` pair of the given
/// grids.
pub fn certify_e0_properties(kp_grid: &[f64], gamma_grid: &[f64]) -> PropertyReport {
    const SLACK: f64 = 1e-12;
    const FD_TOL: f64 = 1e-6;
    const FD_H: f64 = 1e-5;
    let mut report = PropertyReport {
        points: 0,
        p1_violations: 0,
        p2_violations: 0,
        p3_violations: 0,
        worst_p1_slack: f64::INFINITY,
        worst_p2_slack: f64::INFINITY,
        worst_p3_error: 0.0,
    };
    let rho_grid: Vec<f64> = (0..=64).map(|i| i as f64 / 64.0).collect();
    for &kp in kp_grid {
        for &gamma in gamma_grid {
            report.points += 1;
            let vals: Vec<f64> = rho_grid.iter().map(|&r| e0_raw(gamma, r, kp)).collect();
            let mut p1_ok = true;
            for w in vals.windows(2) {
                let d = w[1] - w[0];
                report.worst_p1_slack = report.worst_p1_slack.min(d);
                if d < -SLACK {
                    p1_ok = false;
                }
            }
            if !p1_ok {
                report.p1_violations += 1;
            }
            let mut p2_ok = true;
            for w in vals.windows(3) {
                let margin = w[1] - 0.5 * (w[0] + w[2]);
                report.worst_p2_slack = report.worst_p2_slack.min(margin);
                if margin < -SLACK {
                    p2_ok = false;
                }
            }
            if !p2_ok {
                report.p2_violations += 1;
            }
            // The formula extends smoothly to small negative rho, so a
            // central difference straddling 0 is valid.
            let fd = (e0_raw(gamma, FD_H, kp) - e0_raw(gamma, -FD_H, kp)) / (2.0 * FD_H);
            let analytic = 0.5 * (gamma * kp).ln_1p();
            let err = (fd - analytic).abs();
            report.worst_p3_error = report.worst_p3_error.max(err);
            if err > FD_TOL {
                report.p3_violations += 1;
            }
        }
    }
    report
}

/// The two terms of the union error bound and their clamped sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnionBound {
    /// `min(1, sum over j of exp(-n f(j/k, rho*)))`: the maximum-likelihood
    /// decoding term, summed over the number of users in error.
    pub ml_term: f64,
    /// Probability that any of the `k` users' `ceil(exp(v))` codewords
    /// violates the mean-square power limit.
    pub power_term: f64,
    /// `min(1, ml_term + power_term)`.
    pub total: f64,
}

/// Union bound on the block error probability of genie-aided ML decoding:
/// the decoding term from the exponent table plus the power-violation term
/// for codebooks drawn at `p_prime` under the limit `power_limit`.
pub fn union_error_bound(params: &ExponentParams, power_limit: f64) -> Result<UnionBound> {
    if !(power_limit > params.p_prime) {
        return Err(Error::domain(format!(
            "power limit {power_limit} must exceed the codebook power {}",
            params.p_prime
        )));
    }
    let er = error_exponent_er(params)?;
    let n = params.n as f64;
    let ml_sum: f64 = er.rows.iter().map(|row| (-n * row.f_star).exp()).sum();
    let ml_term = ml_sum.min(1.0);

    let p_cw = power_violation_probability(params.n, power_limit, params.p_prime)?;
    let m = params.v.exp().ceil();
    let power_term = if p_cw <= 0.0 {
        0.0
    } else {
        let log_all_ok = params.k as f64 * m * (-p_cw).ln_1p();
        -log_all_ok.exp_m1()
    };
    Ok(UnionBound { ml_term, power_term, total: (ml_term + power_term).min(1.0) })
}
