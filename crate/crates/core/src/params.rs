//! Operating points and scaling laws.

use crate::error::{Error, Result};

/// One operating point of the channel: blocklength, user count, activity
/// probability, and the power limit. Every closed-form formula reads from
/// this.
///
/// `ell` is real-valued so that sweeps can evaluate laws like `ell = n^1.5`
/// exactly; simulation paths, which need an integer user count, take `u32`
/// separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub n: u32,
    pub ell: f64,
    pub alpha: f64,
    pub power: f64,
}

impl SystemParams {
    pub fn new(n: u32, ell: f64, alpha: f64, power: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::domain("blocklength n must be at least 1"));
        }
        if !(ell >= 1.0) || !ell.is_finite() {
            return Err(Error::domain(format!("user count ell must be >= 1, got {ell}")));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::domain(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::domain(format!("power must be positive, got {power}")));
        }
        Ok(SystemParams { n, ell, alpha, power })
    }

    /// Mean number of active users, `k = alpha * ell`. Recomputed on demand,
    /// never stored, so it cannot drift from its definition.
    pub fn k(&self) -> f64 {
        self.alpha * self.ell
    }
}

/// Display units for rates. All arithmetic stays in nats; bits are derived at
/// the display boundary as `nats / ln 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Units {
    #[default]
    Nats,
    Bits,
}

impl Units {
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            Units::Nats => nats,
            Units::Bits => nats / std::f64::consts::LN_2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
        }
    }
}

impl std::str::FromStr for Units {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nats" => Ok(Units::Nats),
            "bits" => Ok(Units::Bits),
            other => Err(Error::domain(format!("unknown units '{other}' (nats or bits)"))),
        }
    }
}

/// A parametric growth map `n -> value`, either a power law `coef * n^exp` or
/// an explicit table of `(n, value)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub enum GrowthForm {
    PowerLaw { coef: f64, exp: f64 },
    Table(Vec<(u32, f64)>),
}

impl GrowthForm {
    pub fn power_law(coef: f64, exp: f64) -> Result<Self> {
        if !(coef > 0.0) || !coef.is_finite() {
            return Err(Error::domain(format!("power-law coefficient must be positive, got {coef}")));
        }
        if !(exp >= 0.0) || !exp.is_finite() {
            return Err(Error::domain(format!("power-law exponent must be nonnegative, got {exp}")));
        }
        Ok(GrowthForm::PowerLaw { coef, exp })
    }

    pub fn table(rows: Vec<(u32, f64)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::domain("growth table must be nonempty"));
        }
        if rows.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::domain("growth table must have strictly increasing n"));
        }
        if rows.iter().any(|&(_, v)| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::domain("growth table values must be positive"));
        }
        Ok(GrowthForm::Table(rows))
    }

    /// Evaluates the form at blocklength `n`. Tables are exact lookups; a
    /// missing `n` is an error rather than an interpolation.
    pub fn eval(&self, n: u32) -> Result<f64> {
        match self {
            GrowthForm::PowerLaw { coef, exp } => Ok(coef * (n as f64).powf(*exp)),
            GrowthForm::Table(rows) => rows
                .iter()
                .find(|&&(tn, _)| tn == n)
                .map(|&(_, v)| v)
                .ok_or_else(|| Error::domain(format!("growth table has no entry for n = {n}"))),
        }
    }

    fn probe_grid(&self) -> Vec<u32> {
        match self {
            GrowthForm::PowerLaw { .. } => vec![100, 316, 1000, 3162, 10_000, 31_623, 100_000],
            GrowthForm::Table(rows) => rows.iter().map(|&(n, _)| n).collect(),
        }
    }
}

/// The capacity's case split, following how the user population scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeCase {
    /// Case 1: the mean active count `k_n` is unbounded.
    UnboundedK,
    /// Case 2: `ell_n` unbounded but `k_n` bounded; the per-user capacity is
    /// sublinear in `n` with no canonical finite value.
    BoundedKUnboundedEll,
    /// Case 3: `ell_n <= ell0` for all `n`.
    BoundedEll,
}

impl RegimeCase {
    pub fn label(self) -> &'static str {
        match self {
            RegimeCase::UnboundedK => "case1-unbounded-k",
            RegimeCase::BoundedKUnboundedEll => "case2-bounded-k-unbounded-ell",
            RegimeCase::BoundedEll => "case3-bounded-ell",
        }
    }
}

impl std::str::FromStr for RegimeCase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "case1" | "unbounded-k" => Ok(RegimeCase::UnboundedK),
            "case2" | "bounded-k" => Ok(RegimeCase::BoundedKUnboundedEll),
            "case3" | "bounded-ell" => Ok(RegimeCase::BoundedEll),
            other => Err(Error::domain(format!(
                "unknown regime '{other}' (case1, case2, or case3)"
            ))),
        }
    }
}

/// Whether the penalty ratio `theta_n` vanishes as `n` grows. The signature
/// length and codeword count formulas branch on this asymptotic fact, which a
/// single operating point cannot decide; it comes from the scaling law or
/// from an explicit user assertion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaLimit {
    Vanishing,
    NonVanishing,
}

impl std::str::FromStr for ThetaLimit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanishing" => Ok(ThetaLimit::Vanishing),
            "nonvanishing" | "non-vanishing" => Ok(ThetaLimit::NonVanishing),
            other => Err(Error::domain(format!(
                "unknown theta limit '{other}' (vanishing or nonvanishing)"
            ))),
        }
    }
}

/// Parametric map `n -> (ell_n, k_n)` plus the power limit: the input to
/// asymptotic classification and capacity sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingLaw {
    pub ell_of_n: GrowthForm,
    pub k_of_n: GrowthForm,
    pub power: f64,
}

impl ScalingLaw {
    pub fn new(ell_of_n: GrowthForm, k_of_n: GrowthForm, power: f64) -> Result<Self> {
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::domain(format!("power must be positive, got {power}")));
        }
        Ok(ScalingLaw { ell_of_n, k_of_n, power })
    }

    /// Instantiates the law at one blocklength. Rejects points where
    /// `k_n > ell_n` (the implied activity probability would exceed 1).
    pub fn params_at(&self, n: u32) -> Result<SystemParams> {
        let ell = self.ell_of_n.eval(n)?;
        let k = self.k_of_n.eval(n)?;
        if k > ell {
            return Err(Error::domain(format!(
                "law gives k = {k} > ell = {ell} at n = {n}"
            )));
        }
        SystemParams::new(n, ell, k / ell, self.power)
    }

    /// Decides whether `theta_n` vanishes under this law.
    ///
    /// For a power-law pair `ell = a n^b`, `k = c n^d` the small-alpha
    /// expansion `ell H2(alpha) ~ k (ln(ell/k) + 1)` gives
    /// `theta ~ 2 k (ln(ell/k) + 1) / (n ln(1 + k P))`, so theta vanishes
    /// exactly when `d < 1`, or when `b = d` (alpha constant); at `d = 1`
    /// with `b > d` it tends to the positive constant `2c(b - d)`. Tables
    /// fall back to a finite-probe trend heuristic (vanishing when the
    /// log-log slope of theta over the probe grid is clearly negative).
    pub fn theta_limit(&self) -> Result<ThetaLimit> {
        use GrowthForm::PowerLaw;
        if let (PowerLaw { exp: b, .. }, PowerLaw { exp: d, .. }) = (&self.ell_of_n, &self.k_of_n) {
            if *d < 1.0 || (b - d).abs() < 1e-12 {
                return Ok(ThetaLimit::Vanishing);
            }
            return Ok(ThetaLimit::NonVanishing);
        }
        // Trend heuristic over the coarsest shared probe grid.
        let grid = self.shared_probe_grid();
        let mut points = Vec::new();
        for &n in &grid {
            let p = self.params_at(n)?;
            if p.k() > 0.0 {
                let th = crate::capacity::theta(&p)?;
                if th > 0.0 {
                    points.push(((n as f64).ln(), th.ln()));
                }
            }
        }
        if points.len() < 2 {
            return Ok(ThetaLimit::NonVanishing);
        }
        let (x0, y0) = points[0];
        let (x1, y1) = points[points.len() - 1];
        let slope = (y1 - y0) / (x1 - x0);
        Ok(if slope < -0.02 { ThetaLimit::Vanishing } else { ThetaLimit::NonVanishing })
    }

    pub(crate) fn shared_probe_grid(&self) -> Vec<u32> {
        match (&self.ell_of_n, &self.k_of_n) {
            (GrowthForm::Table(a), _) => a.iter().map(|&(n, _)| n).collect(),
            (_, GrowthForm::Table(b)) => b.iter().map(|&(n, _)| n).collect(),
            _ => self.ell_of_n.probe_grid(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_is_recomputed_product() {
        let p = SystemParams::new(100, 10_000.0, 0.0025, 2.0).unwrap();
        assert_eq!(p.k(), 0.0025 * 10_000.0);
        assert_eq!(p.k(), 25.0);
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::new(0, 10.0, 0.5, 1.0).is_err());
        assert!(SystemParams::new(10, 0.5, 0.5, 1.0).is_err());
        assert!(SystemParams::new(10, 10.0, -0.1, 1.0).is_err());
        assert!(SystemParams::new(10, 10.0, 1.5, 1.0).is_err());
        assert!(SystemParams::new(10, 10.0, 0.5, 0.0).is_err());
        assert!(SystemParams::new(10, 10.0, 0.0, 1.0).is_ok());
        assert!(SystemParams::new(10, 10.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn law_rejects_k_above_ell() {
        let law = ScalingLaw::new(
            GrowthForm::power_law(1.0, 0.5).unwrap(),
            GrowthForm::power_law(0.25, 1.0).unwrap(),
            2.0,
        )
        .unwrap();
        // At n = 100: ell = 10, k = 25.
        assert!(law.params_at(100).is_err());
    }

    #[test]
    fn table_lookup_is_exact() {
        let t = GrowthForm::table(vec![(100, 8.0), (200, 8.0)]).unwrap();
        assert_eq!(t.eval(200).unwrap(), 8.0);
        assert!(t.eval(150).is_err());
        assert!(GrowthForm::table(vec![(100, 8.0), (100, 9.0)]).is_err());
        assert!(GrowthForm::table(vec![]).is_err());
    }

    #[test]
    fn theta_limit_power_law_cases() {
        let law = |b: f64, c: f64, d: f64| {
            ScalingLaw::new(
                GrowthForm::power_law(1.0, b).unwrap(),
                GrowthForm::power_law(c, d).unwrap(),
                2.0,
            )
            .unwrap()
        };
        // k = n/4 with ell in {n, n^1.5, n^2, n^3}: d = 1, so only b = d vanishes.
        assert_eq!(law(1.0, 0.25, 1.0).theta_limit().unwrap(), ThetaLimit::Vanishing);
        assert_eq!(law(1.5, 0.25, 1.0).theta_limit().unwrap(), ThetaLimit::NonVanishing);
        assert_eq!(law(2.0, 0.25, 1.0).theta_limit().unwrap(), ThetaLimit::NonVanishing);
        // Sublinear k vanishes regardless of ell growth.
        assert_eq!(law(2.0, 1.0, 0.5).theta_limit().unwrap(), ThetaLimit::Vanishing);
        assert_eq!(law(3.0, 5.0, 0.0).theta_limit().unwrap(), ThetaLimit::Vanishing);
    }

    #[test]
    fn units_conversion_is_exact_division() {
        let nats = 0.8734377613113979;
        assert_eq!(Units::Bits.from_nats(nats), nats / std::f64::consts::LN_2);
        assert_eq!(Units::Nats.from_nats(nats), nats);
    }
}
