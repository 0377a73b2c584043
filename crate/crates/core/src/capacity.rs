//! Closed-form capacity calculus: binary entropy, the genie-aided rate
//! `C1(n)`, the activity penalty ratio `theta`, the symmetric per-user
//! capacity `C(n)`, regime classification, and capacity sweeps.

use crate::error::{Error, Result};
use crate::params::{GrowthForm, RegimeCase, ScalingLaw, SystemParams, ThetaLimit, Units};

/// Binary entropy in nats: `-p ln p - (1-p) ln(1-p)`, with the endpoint
/// values 0 at `p = 0` and `p = 1` taken by continuity.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("probability must lie in [0, 1], got {p}")));
    }
    Ok(h2_raw(p))
}

/// Entropy kernel without the domain check; endpoints map to 0.
pub(crate) fn h2_raw(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
    }
}

/// Genie-aided per-user rate `C1(n) = n/(2k) * ln(1 + kP)` in nats: the
/// symmetric share of the sum capacity when the identities of the `k` active
/// users are known.
pub fn c1(params: &SystemParams) -> Result<f64> {
    let k = params.k();
    if k <= 0.0 {
        return Err(Error::domain(
            "c1 needs a positive mean active count; with k = 0 use the bounded-k path",
        ));
    }
    Ok(params.n as f64 / (2.0 * k) * (k * params.power).ln_1p())
}

/// Activity penalty ratio `theta = 2 ell H2(alpha) / (n ln(1 + alpha ell P))`:
/// the fraction of `C1` spent identifying who is active. Algebraically equal
/// to `H2(alpha) / (alpha C1)`.
pub fn theta(params: &SystemParams) -> Result<f64> {
    let k = params.k();
    if k <= 0.0 {
        return Err(Error::domain("theta needs a positive mean active count"));
    }
    let h = binary_entropy(params.alpha)?;
    Ok(2.0 * params.ell * h / (params.n as f64 * (k * params.power).ln_1p()))
}

/// Capacity value of a report: a finite number of nats, or the symbolic
/// bounded-k statement that `C(n)` is sublinear in `n` with no canonical
/// finite value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CapacityValue {
    Nats(f64),
    SublinearInN,
}

impl CapacityValue {
    pub fn as_nats(&self) -> Option<f64> {
        match self {
            CapacityValue::Nats(v) => Some(*v),
            CapacityValue::SublinearInN => None,
        }
    }
}

/// Everything the capacity calculus can say about one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityReport {
    pub regime: RegimeCase,
    pub c1: Option<f64>,
    pub theta: Option<f64>,
    pub capacity: CapacityValue,
    /// Display units; all stored values are nats.
    pub units: Units,
}

impl CapacityReport {
    /// Same report, displayed in the given units.
    pub fn with_units(mut self, units: Units) -> Self {
        self.units = units;
        self
    }
}

impl std::fmt::Display for CapacityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let u = self.units;
        writeln!(f, "regime       {}", self.regime.label())?;
        match self.c1 {
            Some(v) => writeln!(f, "c1           {} {}", u.from_nats(v), u.label())?,
            None => writeln!(f, "c1           undefined (k = 0)")?,
        }
        match self.theta {
            Some(v) => writeln!(f, "theta        {v}")?,
            None => writeln!(f, "theta        undefined (k = 0)")?,
        }
        match self.capacity {
            CapacityValue::Nats(v) => write!(f, "capacity     {} {}", u.from_nats(v), u.label()),
            CapacityValue::SublinearInN => {
                write!(f, "capacity     o(n) (bounded k; see bounded_k_message_length)")
            }
        }
    }
}

/// Symmetric per-user capacity at one operating point.
///
/// * Case 1 (unbounded `k`): `C(n) = (C1(n) - H2(alpha)/alpha)^+`, equal to
///   `(1 - theta)^+ C1(n)`.
/// * Case 2 (bounded `k`, unbounded `ell`): sublinear in `n`; reported
///   symbolically, with [`bounded_k_message_length`] giving the constructive
///   achievable length for a chosen divergence rate `s_n`.
/// * Case 3 (`ell <= ell0`): `C(n) = n/(2 ell0) * ln(1 + ell0 P)`, the
///   worst case of every user active.
pub fn symmetric_capacity(params: &SystemParams, regime: RegimeCase) -> Result<CapacityReport> {
    let k = params.k();
    let (c1_v, theta_v) = if k > 0.0 {
        (Some(c1(params)?), Some(theta(params)?))
    } else {
        (None, None)
    };
    let capacity = match regime {
        RegimeCase::UnboundedK => {
            let c1_v = c1_v.ok_or_else(|| {
                Error::domain("case-1 capacity needs a positive mean active count")
            })?;
            let penalty = binary_entropy(params.alpha)? / params.alpha;
            CapacityValue::Nats((c1_v - penalty).max(0.0))
        }
        RegimeCase::BoundedKUnboundedEll => CapacityValue::SublinearInN,
        RegimeCase::BoundedEll => {
            let ell0 = params.ell;
            CapacityValue::Nats(params.n as f64 / (2.0 * ell0) * (ell0 * params.power).ln_1p())
        }
    };
    Ok(CapacityReport { regime, c1: c1_v, theta: theta_v, capacity, units: Units::Nats })
}

/// Achievable per-user message length in the bounded-k regime:
/// `n/(2 s_n) * ln(s_n)` nats for any unboundedly increasing `s_n`. The
/// choice of `s_n` is the caller's; no canonical finite-n value exists.
pub fn bounded_k_message_length(n: u32, s_n: f64) -> Result<f64> {
    if !(s_n > 1.0) {
        return Err(Error::domain(format!("s_n must exceed 1, got {s_n}")));
    }
    Ok(n as f64 / (2.0 * s_n) * s_n.ln())
}

/// Asymptotic diagnostics for a scaling law.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub regime: RegimeCase,
    /// `k_n = O(n)`: growth exponent of `k` at most 1.
    pub assumption1_ok: bool,
    /// `ell_n` does not grow exponentially relative to `k_n`; probed as
    /// `ell_n exp(-0.01 k_n)` failing to decrease anywhere on the grid.
    /// Only meaningful in the unbounded-k regime; reported true elsewhere.
    pub assumption2_ok: bool,
    pub theta_limit: ThetaLimit,
    pub notes: Vec<String>,
}

fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let (x0, y0) = points[0];
    let (x1, y1) = points[points.len() - 1];
    (y1.ln() - y0.ln()) / (x1.ln() - x0.ln())
}

/// Classifies a scaling law into the three capacity cases and checks the two
/// asymptotic assumptions on a probe grid.
///
/// Power-law forms are classified from their exponents; tables fall back to a
/// log-log slope heuristic over the probes (slope above 0.05 counts as
/// unbounded). Assumption diagnostics are asymptotic statements, so short or
/// narrow probe grids can mislead them; the built-in grid spans 100 to 1e5.
pub fn classify_regime(law: &ScalingLaw, n_probe: &[u32]) -> Result<RegimeReport> {
    if n_probe.is_empty() {
        return Err(Error::domain("probe grid must be nonempty"));
    }
    let mut notes = Vec::new();

    // Reject inconsistent laws and collect probe values.
    let mut ell_pts = Vec::with_capacity(n_probe.len());
    let mut k_pts = Vec::with_capacity(n_probe.len());
    for &n in n_probe {
        let p = law.params_at(n)?;
        ell_pts.push((n as f64, p.ell));
        k_pts.push((n as f64, p.k()));
    }

    let (k_unbounded, k_growth_exp) = match &law.k_of_n {
        GrowthForm::PowerLaw { exp, .. } => (*exp > 0.0, *exp),
        GrowthForm::Table(_) => {
            let s = if k_pts.len() >= 2 { loglog_slope(&k_pts) } else { 0.0 };
            (s > 0.05, s)
        }
    };
    let ell_unbounded = match &law.ell_of_n {
        GrowthForm::PowerLaw { exp, .. } => *exp > 0.0,
        GrowthForm::Table(_) => ell_pts.len() >= 2 && loglog_slope(&ell_pts) > 0.05,
    };

    let regime = if k_unbounded {
        RegimeCase::UnboundedK
    } else if ell_unbounded {
        RegimeCase::BoundedKUnboundedEll
    } else {
        RegimeCase::BoundedEll
    };

    let assumption1_ok = k_growth_exp <= 1.0 + 1e-12;
    if !assumption1_ok {
        notes.push(format!(
            "k grows like n^{k_growth_exp:.3}, faster than n: the capacity formulas assume k = O(n)"
        ));
    }

    let assumption2_ok = if regime == RegimeCase::UnboundedK {
        // Violated only if ell * exp(-0.01 k) never decreases across the grid.
        let vals: Vec<f64> = ell_pts
            .iter()
            .zip(&k_pts)
            .map(|(&(_, ell), &(_, k))| ell * (-0.01 * k).exp())
            .collect();
        let non_decreasing = vals.windows(2).all(|w| w[1] >= w[0]);
        if non_decreasing && vals.len() >= 2 {
            notes.push(
                "ell appears to grow exponentially relative to k (ell*exp(-0.01 k) never \
                 decreases on the probe grid)"
                    .to_string(),
            );
            false
        } else {
            true
        }
    } else {
        notes.push("exponential-growth check not applicable: k is bounded".to_string());
        true
    };

    Ok(RegimeReport {
        regime,
        assumption1_ok,
        assumption2_ok,
        theta_limit: law.theta_limit()?,
        notes,
    })
}

/// One row of a capacity sweep. Stored in nats; `capacity_bits` is derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub n: u32,
    pub ell: f64,
    pub alpha: f64,
    pub k: f64,
    pub c1_nats: f64,
    pub theta: f64,
    pub capacity_nats: f64,
}

impl SweepRow {
    pub fn capacity_bits(&self) -> f64 {
        self.capacity_nats / std::f64::consts::LN_2
    }
}

/// Evaluates `C1`, `theta`, and the finite-n capacity expression
/// `(C1 - H2(alpha)/alpha)^+` at every grid point of a scaling law.
///
/// This is a finite-n evaluation tool: it applies the case-1 expression at
/// each point regardless of the law's asymptotic class, which is exactly what
/// capacity-versus-blocklength plots need. Each grid point must have `k > 0`.
pub fn sweep_capacity(law: &ScalingLaw, n_grid: &[u32]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let p = law.params_at(n)?;
        let k = p.k();
        if k <= 0.0 {
            return Err(Error::domain(format!("sweep needs k > 0 at every point; k = 0 at n = {n}")));
        }
        let c1_v = c1(&p)?;
        let theta_v = theta(&p)?;
        let penalty = binary_entropy(p.alpha)? / p.alpha;
        rows.push(SweepRow {
            n,
            ell: p.ell,
            alpha: p.alpha,
            k,
            c1_nats: c1_v,
            theta: theta_v,
            capacity_nats: (c1_v - penalty).max(0.0),
        });
    }
    Ok(rows)
}

/// `points` log-spaced integers covering `[n_min, n_max]`, deduplicated after
/// rounding.
pub fn log_grid(n_min: u32, n_max: u32, points: usize) -> Result<Vec<u32>> {
    if n_min < 1 || n_max < n_min || points < 1 {
        return Err(Error::domain("log grid needs 1 <= n_min <= n_max and points >= 1"));
    }
    if points == 1 || n_min == n_max {
        return Ok(vec![n_min]);
    }
    let (lo, hi) = ((n_min as f64).ln(), (n_max as f64).ln());
    let mut grid: Vec<u32> = (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            (lo + t * (hi - lo)).exp().round() as u32
        })
        .collect();
    grid.dedup();
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn binary_entropy_endpoints_and_symmetry_peak() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(0.5).unwrap(), std::f64::consts::LN_2);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn binary_entropy_frozen_values() {
        // Independent high-precision evaluations.
        assert!(close(binary_entropy(0.0025).unwrap(), 0.017475533760343134, 1e-14));
        assert!(close(binary_entropy(0.25).unwrap(), 0.5623351446188083, 1e-14));
    }

    #[test]
    fn c1_frozen_values() {
        let p = SystemParams::new(100, 10_000.0, 0.0025, 2.0).unwrap();
        // n/(2k) ln(1+kP) = 2 ln 51.
        assert!(close(c1(&p).unwrap(), 7.8636512654486515, 1e-14));
        let p = SystemParams::new(50, 50.0, 1.0, 1.0).unwrap();
        // 0.5 ln 51.
        assert!(close(c1(&p).unwrap(), 1.9659128163621629, 1e-14));
    }

    #[test]
    fn c1_rejects_zero_k() {
        let p = SystemParams::new(100, 10.0, 0.0, 2.0).unwrap();
        assert!(c1(&p).is_err());
    }

    #[test]
    fn c1_vanishes_with_power() {
        let p = SystemParams::new(100, 1.0, 1.0, 1e-12).unwrap();
        assert!(c1(&p).unwrap() < 1e-9);
    }

    #[test]
    fn theta_frozen_values() {
        let p = SystemParams::new(100, 10_000.0, 0.0025, 2.0).unwrap();
        assert!(close(theta(&p).unwrap(), 0.8889272003771184, 1e-13));
        let p = SystemParams::new(1000, 1e9, 2.5e-7, 2.0).unwrap();
        let th = theta(&p).unwrap();
        assert!(close(th, 1.303106914832238, 1e-13));
        assert!(th > 1.0);
    }

    #[test]
    fn theta_zero_at_full_activity() {
        let p = SystemParams::new(64, 16.0, 1.0, 3.0).unwrap();
        assert_eq!(theta(&p).unwrap(), 0.0);
    }

    #[test]
    fn theta_two_routes_agree() {
        let p = SystemParams::new(100, 10_000.0, 0.0025, 2.0).unwrap();
        let direct = theta(&p).unwrap();
        let via_c1 = binary_entropy(p.alpha).unwrap() / (p.alpha * c1(&p).unwrap());
        assert!(close(direct, via_c1, 1e-14));
    }

    #[test]
    fn capacity_case1_frozen_value() {
        let p = SystemParams::new(100, 10_000.0, 0.0025, 2.0).unwrap();
        let r = symmetric_capacity(&p, RegimeCase::UnboundedK).unwrap();
        let c = r.capacity.as_nats().unwrap();
        assert!(close(c, 0.8734377613113979, 1e-13));
        // Matches the (1 - theta)^+ C1 route.
        let alt = (1.0 - r.theta.unwrap()).max(0.0) * r.c1.unwrap();
        assert!(close(c, alt, 1e-12));
    }

    #[test]
    fn capacity_clamps_to_zero_when_theta_exceeds_one() {
        let p = SystemParams::new(1000, 1e9, 2.5e-7, 2.0).unwrap();
        let r = symmetric_capacity(&p, RegimeCase::UnboundedK).unwrap();
        assert!(r.theta.unwrap() > 1.0);
        assert_eq!(r.capacity.as_nats().unwrap(), 0.0);
    }

    #[test]
    fn capacity_equals_c1_at_full_activity() {
        let p = SystemParams::new(50, 50.0, 1.0, 1.0).unwrap();
        let r = symmetric_capacity(&p, RegimeCase::UnboundedK).unwrap();
        assert_eq!(r.capacity.as_nats().unwrap(), r.c1.unwrap());
    }

    #[test]
    fn capacity_case3_uses_worst_case_ell() {
        let p = SystemParams::new(64, 8.0, 0.5, 1.0).unwrap();
        let r = symmetric_capacity(&p, RegimeCase::BoundedEll).unwrap();
        // n/(2*8) ln(1+8) = 4 ln 9.
        assert!(close(r.capacity.as_nats().unwrap(), 4.0 * 9.0f64.ln(), 1e-14));
    }

    #[test]
    fn capacity_case2_is_symbolic() {
        let p = SystemParams::new(100, 10_000.0, 0.0005, 2.0).unwrap();
        let r = symmetric_capacity(&p, RegimeCase::BoundedKUnboundedEll).unwrap();
        assert_eq!(r.capacity, CapacityValue::SublinearInN);
        assert!(r.c1.is_some());
    }

    #[test]
    fn bounded_k_length_frozen_values() {
        assert!(close(bounded_k_message_length(100, std::f64::consts::E).unwrap(), 18.393972058572118, 1e-14));
        assert!(close(bounded_k_message_length(64, 4.0).unwrap(), 11.090354888959125, 1e-14));
        assert!(bounded_k_message_length(100, 1.0).is_err());
        assert!(bounded_k_message_length(100, 0.5).is_err());
        // Large s_n drives the length to 0.
        assert!(bounded_k_message_length(100, 1e12).unwrap() < 1.4e-9);
    }

    #[test]
    fn classify_polynomial_case1() {
        let law = ScalingLaw::new(
            GrowthForm::power_law(1.0, 2.0).unwrap(),
            GrowthForm::power_law(0.25, 1.0).unwrap(),
            2.0,
        )
        .unwrap();
        let grid = law.shared_probe_grid();
        let r = classify_regime(&law, &grid).unwrap();
        assert_eq!(r.regime, RegimeCase::UnboundedK);
        assert!(r.assumption1_ok);
        assert!(r.assumption2_ok);
    }

    #[test]
    fn classify_constant_k_case2() {
        let law = ScalingLaw::new(
            GrowthForm::power_law(1.0, 2.0).unwrap(),
            GrowthForm::power_law(5.0, 0.0).unwrap(),
            2.0,
        )
        .unwrap();
        let r = classify_regime(&law, &law.shared_probe_grid()).unwrap();
        assert_eq!(r.regime, RegimeCase::BoundedKUnboundedEll);
    }

    #[test]
    fn classify_constant_ell_case3() {
        let law = ScalingLaw::new(
            GrowthForm::power_law(8.0, 0.0).unwrap(),
            GrowthForm::power_law(4.0, 0.0).unwrap(),
            2.0,
        )
        .unwrap();
        let r = classify_regime(&law, &law.shared_probe_grid()).unwrap();
        assert_eq!(r.regime, RegimeCase::BoundedEll);
    }

    #[test]
    fn classify_flags_superlinear_k() {
        let law = ScalingLaw::new(
            GrowthForm::power_law(1.0, 3.0).unwrap(),
            GrowthForm::power_law(1.0, 1.5).unwrap(),
            2.0,
        )
        .unwrap();
        let r = classify_regime(&law, &law.shared_probe_grid()).unwrap();
        assert!(!r.assumption1_ok);
    }

    #[test]
    fn classify_flags_exponential_ell_table() {
        // ell = e^k with k = ln-spaced: ell*exp(-0.01k) keeps growing.
        let ns = [100u32, 1000, 10_000, 100_000];
        let k_rows: Vec<(u32, f64)> = ns.iter().map(|&n| (n, (n as f64).sqrt())).collect();
        let ell_rows: Vec<(u32, f64)> =
            ns.iter().map(|&n| (n, (n as f64).sqrt().exp())).collect();
        let law = ScalingLaw::new(
            GrowthForm::table(ell_rows).unwrap(),
            GrowthForm::table(k_rows).unwrap(),
            2.0,
        )
        .unwrap();
        let r = classify_regime(&law, &ns).unwrap();
        assert_eq!(r.regime, RegimeCase::UnboundedK);
        assert!(!r.assumption2_ok);
    }

    #[test]
    fn sweep_frozen_spot_value() {
        // P = 2, k = n/4, ell = n: at n = 100, C = 5.6143 nats.
        let law = ScalingLaw::new(
            GrowthForm::power_law(1.0, 1.0).unwrap(),
            GrowthForm::power_law(0.25, 1.0).unwrap(),
            2.0,
        )
        .unwrap();
        let rows = sweep_capacity(&law, &[100]).unwrap();
        assert!(close(rows[0].capacity_nats, 5.614310686973418, 1e-13));
        assert_eq!(rows[0].alpha, 0.25);
        assert_eq!(rows[0].k, 25.0);
    }

    #[test]
    fn sweep_increasing_in_n_for_linear_ell() {
        let law = ScalingLaw::new(
            GrowthForm::power_law(1.0, 1.0).unwrap(),
            GrowthForm::power_law(0.25, 1.0).unwrap(),
            2.0,
        )
        .unwrap();
        let grid = log_grid(100, 10_000, 25).unwrap();
        let rows = sweep_capacity(&law, &grid).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].capacity_nats > w[0].capacity_nats);
        }
    }

    #[test]
    fn sweep_monotone_in_ell_growth() {
        let mk = |b: f64| {
            ScalingLaw::new(
                GrowthForm::power_law(1.0, b).unwrap(),
                GrowthForm::power_law(0.25, 1.0).unwrap(),
                2.0,
            )
            .unwrap()
        };
        let grid = log_grid(100, 10_000, 25).unwrap();
        let fast = sweep_capacity(&mk(2.0), &grid).unwrap();
        let slow = sweep_capacity(&mk(1.0), &grid).unwrap();
        for (s, f) in slow.iter().zip(&fast) {
            assert!(s.capacity_nats > f.capacity_nats);
        }
    }

    #[test]
    fn log_grid_covers_endpoints() {
        let g = log_grid(100, 10_000, 25).unwrap();
        assert_eq!(*g.first().unwrap(), 100);
        assert_eq!(*g.last().unwrap(), 10_000);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn bits_column_is_exact_division() {
        let row = SweepRow {
            n: 100,
            ell: 100.0,
            alpha: 0.25,
            k: 25.0,
            c1_nats: 7.0,
            theta: 0.2,
            capacity_nats: 5.614310686973418,
        };
        assert_eq!(row.capacity_bits(), 5.614310686973418 / std::f64::consts::LN_2);
    }
}
