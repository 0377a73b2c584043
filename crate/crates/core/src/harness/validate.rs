//! Scheme-validation battery: three desk-scale experiments checking the
//! directions the asymptotic results predict.
//!
//! (a) stage-1 only: detection error rate against signature length at fixed
//!     users and activity, expected non-increasing, with the zero-length
//!     edge matching the no-observation prior guess;
//! (b) genie-aided stage 2: with identities known, message error rate
//!     against blocklength at the fixed alphabet, expected decreasing under
//!     union-bound accounting (power violations charged);
//! (c) end to end: the `small` preset at n and 2n, expected to improve.
//!
//! All three use common random numbers across their grids: activity,
//! messages, and noise prefixes are shared trial-for-trial.

use rayon::prelude::*;

use crate::channel::transmit;
use crate::codec::{CodebookSet, CodebookSpec, SignatureSet, TransmittedState};
use crate::detector::{decode_messages_exhaustive, delta_n, detect_activity_exhaustive};
use crate::error::Result;
use crate::harness::config::{ExperimentConfig, PowerPolicy};
use crate::harness::montecarlo::{estimate_error_probability, wilson_half_width};
use crate::harness::presets::preset;
use crate::report::{fmt_f64, Csv};
use crate::rng::{self, domain};

/// One grid point of one sub-experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationPoint {
    /// Grid coordinate: n0 for stage 1, n for the others.
    pub x: u32,
    pub trials: u64,
    pub errors: u64,
    pub rate: f64,
    pub half_width: f64,
}

fn point(x: u32, errors: u64, trials: u64) -> ValidationPoint {
    ValidationPoint {
        x,
        trials,
        errors,
        rate: errors as f64 / trials as f64,
        half_width: wilson_half_width(errors, trials),
    }
}

/// Results plus the trend verdicts the experiments are run for.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub seed: u64,
    pub trials: u64,
    pub stage1: Vec<ValidationPoint>,
    pub genie: Vec<ValidationPoint>,
    pub end2end: Vec<ValidationPoint>,
    /// Rate over the positive-n0 grid never increases as n0 grows.
    pub stage1_nonincreasing: bool,
    /// Expected error rate with no observations: the chance any user is
    /// active at all.
    pub stage1_prior_rate: f64,
    /// The n0 = 0 edge sits within 0.02 of the prior-guess rate.
    pub stage1_edge_matches_prior: bool,
    pub genie_strictly_decreasing: bool,
    pub end2end_improves: bool,
}

const STAGE1_ELL: u32 = 16;
const STAGE1_ALPHA: f64 = 0.25;
const STAGE1_POWER: f64 = 10.0;
const STAGE1_GRID: [u32; 5] = [0, 8, 16, 32, 64];
const GENIE_USERS: u32 = 2;
const GENIE_M: u32 = 2;
const GENIE_POWER: f64 = 100.0;
const GENIE_GRID: [u32; 3] = [16, 32, 64];
const END2END_GRID: [u32; 2] = [16, 32];

/// Stage-1 experiment: per trial, draw fresh signatures at the full power,
/// superpose the active ones, add unit noise, and run exhaustive detection.
/// Signature and noise streams extend as n0 grows, so each trial sees nested
/// observations across the grid.
fn stage1_error(seed: u64, trial: u64, n0: u32) -> Result<bool> {
    use rand::Rng;
    let mut activity = rng::stream(&[seed, domain::ACTIVITY, trial]);
    let active: Vec<u32> =
        (0..STAGE1_ELL).filter(|_| activity.random::<f64>() < STAGE1_ALPHA).collect();

    let sig_seed = rng::derive(&[seed, domain::INSTANCE, trial]);
    let sigs = SignatureSet::generate(STAGE1_ELL, n0, STAGE1_POWER, sig_seed)?;
    let mut y = vec![0.0f64; n0 as usize];
    for &u in &active {
        for (yi, s) in y.iter_mut().zip(sigs.signature(u)) {
            *yi += s;
        }
    }
    let mut noise = rng::stream(&[seed, domain::NOISE, trial]);
    let mut z = vec![0.0f64; n0 as usize];
    rng::fill_gaussian(&mut noise, 1.0, &mut z);
    for (yi, zi) in y.iter_mut().zip(&z) {
        *yi += zi;
    }

    let k = STAGE1_ALPHA * STAGE1_ELL as f64;
    let det = detect_activity_exhaustive(&y, &sigs, k, delta_n(k)?)?;
    Ok(det.support != active)
}

/// Genie-aided experiment: both users known active, message part only,
/// exhaustive ML over the 4 message pairs, union-bound error accounting.
fn genie_error(seed: u64, trial: u64, n: u32) -> Result<bool> {
    use rand::Rng;
    let p_prime = 0.95 * GENIE_POWER;
    let spec = CodebookSpec::new(GENIE_USERS, n, 0, GENIE_M, p_prime)?;
    let cb_seed = rng::derive(&[seed, domain::INSTANCE, trial]);
    let cb = CodebookSet::generate(spec, cb_seed)?;

    let mut messages = rng::stream(&[seed, domain::MESSAGES, trial]);
    let truth: Vec<u32> = (0..GENIE_USERS).map(|_| messages.random_range(1..=GENIE_M)).collect();
    let state = TransmittedState::new(truth.clone());

    let mut noise = rng::stream(&[seed, domain::NOISE, trial]);
    let output = transmit(&cb, &state, 1.0, &mut noise)?;
    let dec = decode_messages_exhaustive(output.y_b(), &cb, &[0, 1])?;
    let decoded: Vec<u32> = dec.assignments.iter().map(|&(_, w)| w).collect();

    let violated =
        (0..GENIE_USERS).any(|u| cb.transmitted_violates(u, truth[u as usize], GENIE_POWER));
    Ok(decoded != truth || violated)
}

fn count_errors<F>(trials: u64, f: F) -> Result<u64>
where
    F: Fn(u64) -> Result<bool> + Sync + Send,
{
    let flags: Vec<Result<bool>> = (0..trials).into_par_iter().map(f).collect();
    let mut errors = 0;
    for flag in flags {
        if flag? {
            errors += 1;
        }
    }
    Ok(errors)
}

/// Runs all three sub-experiments at the given seed and trial count.
pub fn run_scheme_validation(seed: u64, trials: u64) -> Result<ValidationReport> {
    let mut stage1 = Vec::new();
    for n0 in STAGE1_GRID {
        let errors = count_errors(trials, |t| stage1_error(seed, t, n0))?;
        stage1.push(point(n0, errors, trials));
    }
    let positive = &stage1[1..];
    let stage1_nonincreasing = positive.windows(2).all(|w| w[1].errors <= w[0].errors);
    let stage1_prior_rate = 1.0 - (1.0 - STAGE1_ALPHA).powi(STAGE1_ELL as i32);
    let stage1_edge_matches_prior = (stage1[0].rate - stage1_prior_rate).abs() <= 0.02;

    let mut genie = Vec::new();
    for n in GENIE_GRID {
        let errors = count_errors(trials, |t| genie_error(seed, t, n))?;
        genie.push(point(n, errors, trials));
    }
    let genie_strictly_decreasing = genie.windows(2).all(|w| w[1].errors < w[0].errors);

    let mut end2end = Vec::new();
    for n in END2END_GRID {
        let cfg = ExperimentConfig {
            n,
            seed,
            trials,
            power_policy: PowerPolicy::Resample,
            ..preset("small")?
        };
        let exp = cfg.resolve()?;
        let (est, _) = estimate_error_probability(&exp)?;
        end2end.push(point(n, est.errors, trials));
    }
    let end2end_improves = end2end[1].errors < end2end[0].errors;

    Ok(ValidationReport {
        seed,
        trials,
        stage1,
        genie,
        end2end,
        stage1_nonincreasing,
        stage1_prior_rate,
        stage1_edge_matches_prior,
        genie_strictly_decreasing,
        end2end_improves,
    })
}

/// Renders the battery as one table with the verdicts in the metadata.
pub fn validation_csv(report: &ValidationReport) -> Csv {
    let mut csv = Csv::new("experiment,x,trials,errors,rate,wilson_half_width");
    csv.meta("seed", report.seed)
        .meta("trials", report.trials)
        .meta("stage1_nonincreasing", report.stage1_nonincreasing)
        .meta("stage1_prior_rate", fmt_f64(report.stage1_prior_rate))
        .meta("stage1_edge_matches_prior", report.stage1_edge_matches_prior)
        .meta("genie_strictly_decreasing", report.genie_strictly_decreasing)
        .meta("end2end_improves", report.end2end_improves)
        .meta(
            "stage1_setup",
            format!("ell={STAGE1_ELL} alpha={STAGE1_ALPHA} power={STAGE1_POWER} x=n0"),
        )
        .meta(
            "genie_setup",
            format!("k={GENIE_USERS} m={GENIE_M} power={GENIE_POWER} x=n"),
        )
        .meta("end2end_setup", "small preset, x=n");
    for (name, points) in [
        ("stage1", &report.stage1),
        ("genie", &report.genie),
        ("end2end", &report.end2end),
    ] {
        for p in points {
            csv.row(&[
                name.to_string(),
                p.x.to_string(),
                p.trials.to_string(),
                p.errors.to_string(),
                fmt_f64(p.rate),
                fmt_f64(p.half_width),
            ]);
        }
    }
    csv
}
