//! Seeded Monte Carlo simulation of DD, CPN and greedy receivers.
//!
//! Every trial draws from its own ChaCha8 streams keyed by the master seed
//! and the trial index, so results do not depend on how trials are spread
//! over threads. The channel (pulse position and clicks) and the receiver's
//! own tie-breaking use separate streams.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, ClickModel};
use crate::error::{Error, Result};
use crate::greedy::{run_frame, PolicyTable};

/// Trial count used for ordinary sweep points.
pub const DEFAULT_TRIALS: u64 = 100_000;
/// Trial count used for photon-starved points.
pub const PHOTON_STARVED_TRIALS: u64 = 1_000_000;

#[derive(Debug, Clone)]
pub enum ReceiverConfig {
    Dd,
    Cpn {
        beta: f64,
    },
    Greedy {
        beta_in: f64,
        table: Option<Arc<PolicyTable>>,
    },
}

impl ReceiverConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ReceiverConfig::Dd => "dd",
            ReceiverConfig::Cpn { .. } => "cpn",
            ReceiverConfig::Greedy { .. } => "greedy",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub trials: u64,
    pub master_seed: u64,
    pub receiver: ReceiverConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub p_error_hat: f64,
    /// Bernoulli standard error `sqrt(p (1 - p) / trials)`.
    pub sigma: f64,
    /// Standard deviation of the sample mean with the `n - 1` estimator.
    pub sample_sigma: f64,
    pub trials: u64,
    pub errors: u64,
}

impl SimResult {
    pub fn from_counts(errors: u64, trials: u64) -> Self {
        let n = trials as f64;
        let p = errors as f64 / n;
        let var = p * (1.0 - p);
        let sample_sigma = if trials > 1 {
            (var / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            p_error_hat: p,
            sigma: (var / n).sqrt(),
            sample_sigma,
            trials,
            errors,
        }
    }

    /// Half-width of the reported error bar, `3 sigma`.
    pub fn errorbar(&self) -> f64 {
        3.0 * self.sigma
    }

    pub fn interval(&self) -> (f64, f64) {
        (
            self.p_error_hat - self.errorbar(),
            self.p_error_hat + self.errorbar(),
        )
    }
}

/// Counter-based generator for stream `stream` of `master_seed`.
pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

fn channel_rng(key: &[u8; 32], trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(*key);
    rng.set_stream(2 * trial);
    rng
}

fn receiver_rng(key: &[u8; 32], trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(*key);
    rng.set_stream(2 * trial + 1);
    rng
}

/// Direct-detection decision on a click pattern: the clicked slot if it is
/// unique, a uniform pick among clicked slots otherwise, and a uniform guess
/// over all slots when nothing clicked. Slots are 1-based.
pub fn dd_decide(pattern: &[bool], rng: &mut impl Rng) -> usize {
    let clicked: Vec<usize> = (1..=pattern.len()).filter(|&s| pattern[s - 1]).collect();
    match clicked.len() {
        0 => rng.gen_range(1..=pattern.len()),
        1 => clicked[0],
        n => clicked[rng.gen_range(0..n)],
    }
}

/// Conditional pulse nulling over `m` slots.
///
/// Slots are displaced by `beta` until the first no-click at slot `k`; the
/// remaining slots are detected undisplaced. The output is `k` when nothing
/// clicks afterwards, the DD decision on the later slots otherwise, and a
/// uniform guess when every nulled slot clicked.
pub fn cpn_decide(
    m: usize,
    beta: f64,
    mut outcome: impl FnMut(usize, f64) -> bool,
    rng: &mut impl Rng,
) -> usize {
    let Some(k) = (1..=m).find(|&slot| !outcome(slot, beta)) else {
        return rng.gen_range(1..=m);
    };
    let later: Vec<usize> = (k + 1..=m).filter(|&slot| outcome(slot, 0.0)).collect();
    match later.len() {
        0 => k,
        1 => later[0],
        n => later[rng.gen_range(0..n)],
    }
}

/// Simulates `config.trials` frames over the Poissonian channel `params`.
pub fn simulate(params: &ChannelParams, config: &SimConfig) -> Result<SimResult> {
    params.validate()?;
    if let ReceiverConfig::Greedy {
        table: Some(table), ..
    } = &config.receiver
    {
        if let Some(built_for) = table.params() {
            if !built_for.same_statistics(params) {
                return Err(Error::config(format!(
                    "policy table was built for alpha={} nb={} delta={}, simulation uses alpha={} nb={} delta={}",
                    built_for.alpha, built_for.n_b, built_for.delta, params.alpha, params.n_b, params.delta
                )));
            }
        }
    }
    simulate_with_model(params.m, &params.click_model(), config)
}

/// Simulates `config.trials` frames of order `m` under any click model.
pub fn simulate_with_model(
    m: usize,
    model: &impl ClickModel,
    config: &SimConfig,
) -> Result<SimResult> {
    if m < 1 {
        return Err(Error::domain("PPM order must be >= 1"));
    }
    if config.trials < 1 {
        return Err(Error::config("at least one trial is required"));
    }
    let key = ChaCha8Rng::seed_from_u64(config.master_seed).get_seed();
    let errors: u64 = match &config.receiver {
        ReceiverConfig::Dd => {
            let zero = model.probs(0.0);
            count_errors(config.trials, |trial| {
                let mut chan = channel_rng(&key, trial);
                let x = chan.gen_range(1..=m);
                let pattern: Vec<bool> = (1..=m)
                    .map(|slot| chan.gen::<f64>() < if slot == x { zero.p_bar } else { zero.q_bar })
                    .collect();
                dd_decide(&pattern, &mut receiver_rng(&key, trial)) != x
            })
        }
        ReceiverConfig::Cpn { beta } => {
            check_displacement(*beta)?;
            let zero = model.probs(0.0);
            let nulled = model.probs(*beta);
            count_errors(config.trials, |trial| {
                let mut chan = channel_rng(&key, trial);
                let x = chan.gen_range(1..=m);
                let outcome = |slot: usize, b: f64| {
                    let s = if b == 0.0 { &zero } else { &nulled };
                    chan.gen::<f64>() < if slot == x { s.p_bar } else { s.q_bar }
                };
                cpn_decide(m, *beta, outcome, &mut receiver_rng(&key, trial)) != x
            })
        }
        ReceiverConfig::Greedy { beta_in, table } => {
            check_displacement(*beta_in)?;
            let table = table
                .as_ref()
                .ok_or_else(|| Error::config("greedy simulation requires a policy table"))?;
            count_errors(config.trials, |trial| {
                let mut chan = channel_rng(&key, trial);
                let x = chan.gen_range(1..=m);
                let outcome = |slot: usize, b: f64| {
                    let click = if slot == x {
                        model.p_bar(b)
                    } else {
                        model.q_bar(b)
                    };
                    chan.gen::<f64>() < click
                };
                run_frame(m, *beta_in, table.as_ref(), outcome, model) != x
            })
        }
    };
    Ok(SimResult::from_counts(errors, config.trials))
}

fn check_displacement(beta: f64) -> Result<()> {
    if beta.is_finite() && beta >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "displacement must be finite and >= 0, got {beta}"
        )))
    }
}

fn count_errors(trials: u64, wrong: impl Fn(u64) -> bool + Sync) -> u64 {
    (0..trials).into_par_iter().filter(|&t| wrong(t)).count() as u64
}
