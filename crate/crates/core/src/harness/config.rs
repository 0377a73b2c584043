//! Experiment configuration: defaults, `key = value` file parsing, and
//! resolution of a raw config into concrete codebook dimensions.

use std::path::Path;

use crate::codec::{codeword_count, signature_length, CodebookSpec};
use crate::detector::{
    delta_n, detection_candidates, support_budget, DetectorKind, Strategy, ENUMERATION_GUARD,
};
use crate::error::{Error, Result};
use crate::params::{SystemParams, ThetaLimit, Units};
use crate::report::Csv;

/// What to do with trials whose transmitted codewords exceed the power
/// limit. The union bound charges the violation probability as error, so
/// `ChargeAsError` is the faithful default; `Resample` redraws the offending
/// user's codebook until the transmitted tuple satisfies the constraint,
/// isolating receiver performance from the draw power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PowerPolicy {
    #[default]
    ChargeAsError,
    Resample,
}

impl PowerPolicy {
    pub fn label(self) -> &'static str {
        match self {
            PowerPolicy::ChargeAsError => "charge-as-error",
            PowerPolicy::Resample => "resample",
        }
    }
}

impl std::str::FromStr for PowerPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "charge-as-error" | "charge" => Ok(PowerPolicy::ChargeAsError),
            "resample" => Ok(PowerPolicy::Resample),
            other => Err(Error::domain(format!(
                "unknown power policy '{other}' (charge-as-error or resample)"
            ))),
        }
    }
}

/// Whether each trial draws its own codebook (averaging over the ensemble,
/// as the random-coding argument does) or all trials share one draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CodebookMode {
    #[default]
    FreshPerTrial,
    Fixed,
}

impl CodebookMode {
    pub fn label(self) -> &'static str {
        match self {
            CodebookMode::FreshPerTrial => "fresh-per-trial",
            CodebookMode::Fixed => "fixed",
        }
    }
}

impl std::str::FromStr for CodebookMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fresh-per-trial" | "fresh" => Ok(CodebookMode::FreshPerTrial),
            "fixed" => Ok(CodebookMode::Fixed),
            other => Err(Error::domain(format!(
                "unknown codebook mode '{other}' (fresh-per-trial or fixed)"
            ))),
        }
    }
}

/// One Monte Carlo operating point. Codebook dimensions are derived from
/// the rate backoff unless explicitly overridden.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: u32,
    pub ell: u32,
    pub alpha: f64,
    pub power: f64,
    /// Rate backoff used by the sizing formulas.
    pub epsilon: f64,
    /// Fraction by which the codebook draw power is reduced below the limit.
    pub power_margin: f64,
    /// Fixed signature length instead of the derived one. Zero is legal and
    /// disables stage-1 observations entirely.
    pub n0_override: Option<u32>,
    /// Fixed alphabet size instead of the derived one.
    pub m_override: Option<u32>,
    /// Which sizing branch to use. Defaults to the vanishing-penalty branch.
    pub theta_limit: Option<ThetaLimit>,
    pub trials: u64,
    pub seed: u64,
    pub strategy: Strategy,
    pub power_policy: PowerPolicy,
    pub codebook_mode: CodebookMode,
    pub noise_sigma: f64,
    pub units: Units,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 32,
            ell: 8,
            alpha: 0.5,
            power: 1.0,
            epsilon: 0.3,
            power_margin: 0.05,
            n0_override: None,
            m_override: None,
            theta_limit: None,
            trials: 1000,
            seed: 1,
            strategy: Strategy::default(),
            power_policy: PowerPolicy::default(),
            codebook_mode: CodebookMode::default(),
            noise_sigma: 1.0,
            units: Units::default(),
        }
    }
}

impl ExperimentConfig {
    /// Applies one `key = value` assignment. `line` is for error reporting.
    fn apply(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        fn bad<T>(line: usize, key: &str, value: &str) -> Result<T> {
            Err(Error::Config {
                line,
                msg: format!("invalid value '{value}' for key '{key}'"),
            })
        }
        macro_rules! parse {
            ($ty:ty) => {
                match value.parse::<$ty>() {
                    Ok(v) => v,
                    Err(_) => return bad(line, key, value),
                }
            };
        }
        match key {
            "n" => self.n = parse!(u32),
            "ell" => self.ell = parse!(u32),
            "alpha" => self.alpha = parse!(f64),
            "power" => self.power = parse!(f64),
            "epsilon" => self.epsilon = parse!(f64),
            "power_margin" => self.power_margin = parse!(f64),
            "n0" => self.n0_override = Some(parse!(u32)),
            "m" => self.m_override = Some(parse!(u32)),
            "theta_limit" => self.theta_limit = Some(parse!(ThetaLimit)),
            "trials" => self.trials = parse!(u64),
            "seed" => self.seed = parse!(u64),
            "detector" => self.strategy.detector = parse!(DetectorKind),
            "decoder" => self.strategy.decoder = parse!(crate::detector::DecoderKind),
            "power_policy" => self.power_policy = parse!(PowerPolicy),
            "codebook_mode" => self.codebook_mode = parse!(CodebookMode),
            "noise_sigma" => self.noise_sigma = parse!(f64),
            "units" => self.units = parse!(Units),
            other => {
                return Err(Error::Config { line, msg: format!("unknown key '{other}'") });
            }
        }
        Ok(())
    }

    /// Computes concrete codebook dimensions and prechecks every guard that
    /// should fail before any trial runs.
    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        if self.trials < 1 {
            return Err(Error::domain("trials must be at least 1"));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::domain(format!(
                "noise sigma must be nonnegative, got {}",
                self.noise_sigma
            )));
        }
        if !(self.power_margin >= 0.0 && self.power_margin < 1.0) {
            return Err(Error::domain(format!(
                "power margin must lie in [0, 1), got {}",
                self.power_margin
            )));
        }
        let params = SystemParams::new(self.n, self.ell as f64, self.alpha, self.power)?;
        let k = params.k();
        let p_prime = (1.0 - self.power_margin) * self.power;
        let limit_kind = self.theta_limit.unwrap_or(ThetaLimit::Vanishing);

        let (theta, capacity_nats) = if k > 0.0 {
            let theta = crate::capacity::theta(&params)?;
            let report =
                crate::capacity::symmetric_capacity(&params, crate::RegimeCase::UnboundedK)?;
            (Some(theta), report.capacity.as_nats())
        } else {
            (None, None)
        };

        let n0 = match self.n0_override {
            Some(n0) => n0,
            None => {
                let theta = theta.ok_or_else(|| {
                    Error::infeasible("alpha = 0 gives no sizing rule; set n0 explicitly")
                })?;
                signature_length(&params, self.epsilon, theta, limit_kind)?
            }
        };
        let m = match self.m_override {
            Some(m) => {
                if m < 1 {
                    return Err(Error::domain("alphabet size must be at least 1"));
                }
                m
            }
            None => {
                let capacity = capacity_nats.ok_or_else(|| {
                    Error::infeasible("alpha = 0 gives no rate; set m explicitly")
                })?;
                let m = codeword_count(&params, self.epsilon, capacity, limit_kind)?;
                u32::try_from(m).map_err(|_| {
                    Error::infeasible(format!("alphabet size {m} exceeds the u32 codebook limit"))
                })?
            }
        };
        let spec = CodebookSpec::new(self.ell, self.n, n0, m, p_prime)?;

        let delta = delta_n(k.max(1.0))?;
        let budget = support_budget(k, delta).min(self.ell);
        if self.strategy.detector == DetectorKind::Exhaustive {
            let candidates = detection_candidates(self.ell, budget);
            if candidates > ENUMERATION_GUARD {
                return Err(Error::GuardExceeded { candidates, limit: ENUMERATION_GUARD });
            }
        }

        Ok(ResolvedExperiment {
            config: self.clone(),
            k,
            p_prime,
            theta,
            capacity_nats,
            delta,
            budget,
            spec,
        })
    }
}

/// A config with all derived quantities pinned down.
#[derive(Debug, Clone)]
pub struct ResolvedExperiment {
    pub config: ExperimentConfig,
    /// Mean active users `alpha * ell`.
    pub k: f64,
    /// Codebook draw power `(1 - margin) * power`.
    pub p_prime: f64,
    pub theta: Option<f64>,
    pub capacity_nats: Option<f64>,
    /// Stage-1 support slack and resulting budget.
    pub delta: f64,
    pub budget: u32,
    pub spec: CodebookSpec,
}

impl ResolvedExperiment {
    /// Echoes the full resolved configuration into CSV metadata so every
    /// output file names the experiment that produced it.
    pub fn describe_into(&self, csv: &mut Csv) {
        let c = &self.config;
        csv.meta("n", c.n)
            .meta("ell", c.ell)
            .meta("alpha", c.alpha)
            .meta("power", c.power)
            .meta("epsilon", c.epsilon)
            .meta("power_margin", c.power_margin)
            .meta("n0", self.spec.n0)
            .meta("m", self.spec.m)
            .meta("p_prime", self.p_prime)
            .meta("k", self.k)
            .meta("support_budget", self.budget)
            .meta("trials", c.trials)
            .meta("seed", c.seed)
            .meta(
                "detector",
                match c.strategy.detector {
                    DetectorKind::Exhaustive => "exhaustive",
                    DetectorKind::Greedy => "greedy",
                },
            )
            .meta(
                "decoder",
                match c.strategy.decoder {
                    crate::detector::DecoderKind::Exhaustive => "exhaustive",
                    crate::detector::DecoderKind::Iterative => "iterative",
                },
            )
            .meta("power_policy", c.power_policy.label())
            .meta("codebook_mode", c.codebook_mode.label())
            .meta("noise_sigma", c.noise_sigma)
            .meta("units", c.units.label());
        if let Some(theta) = self.theta {
            csv.meta("theta", theta);
        }
        if let Some(cap) = self.capacity_nats {
            csv.meta("capacity_nats", cap);
        }
    }
}

/// Parses `key = value` lines onto an existing config. Blank lines and lines
/// starting with `#` are skipped. Unknown keys and malformed values fail
/// with their line number.
pub fn parse_config_str(text: &str, base: ExperimentConfig) -> Result<ExperimentConfig> {
    let mut cfg = base;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(Error::Config {
                line,
                msg: format!("expected 'key = value', got '{trimmed}'"),
            });
        };
        cfg.apply(key.trim(), value.trim(), line)?;
    }
    Ok(cfg)
}

/// Reads a config file onto the defaults.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text, ExperimentConfig::default())
}
