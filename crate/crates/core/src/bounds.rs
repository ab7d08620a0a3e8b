//! Closed-form error probabilities of the reference receivers.
//!
//! Direct detection (DD) and conditional pulse nulling (CPN) are evaluated
//! as sums of non-negative error-path probabilities. This form is exact for
//! every parameter set, including the noiseless case where the textbook
//! closed forms divide by `1 - q_0 = 0`, and it keeps full relative accuracy
//! when the error probability is far below machine epsilon. The textbook
//! closed forms are kept as [`dd_error_closed_form`] and
//! [`cpn_error_closed_form`].

use serde::{Deserialize, Serialize};

use crate::channel::{ClickModel, SlotProbs};
use crate::error::{Error, Result};
use crate::search::ScalarSearchConfig;

/// Denominators below this are treated as degenerate.
pub const DEGENERATE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    Helstrom,
    Dd,
    Cpn,
    CpnOpt,
    GreedyLimit,
}

impl BoundMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundMethod::Helstrom => "helstrom",
            BoundMethod::Dd => "dd",
            BoundMethod::Cpn => "cpn",
            BoundMethod::CpnOpt => "cpn_opt",
            BoundMethod::GreedyLimit => "greedy_limit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub p_error: f64,
    pub method: BoundMethod,
    /// Nulling displacement, for the CPN variants.
    pub beta_used: Option<f64>,
}

fn check_order(m: usize) -> Result<()> {
    if m < 1 {
        Err(Error::domain("PPM order must be >= 1"))
    } else {
        Ok(())
    }
}

/// Helstrom bound for noiseless PPM with `n = |alpha|^2` photons per pulse.
pub fn helstrom_error(m: usize, n: f64) -> Result<f64> {
    check_order(m)?;
    if !(n.is_finite() && n >= 0.0) {
        return Err(Error::domain(format!(
            "photon number must be finite and >= 0, got {n}"
        )));
    }
    let mf = m as f64;
    let overlap = (-n).exp();
    let a = (1.0 + (mf - 1.0) * overlap).sqrt();
    let b = (-(-n).exp_m1()).sqrt();
    // a - b = (a^2 - b^2) / (a + b) = M e^{-n} / (a + b)
    Ok((mf - 1.0) * (overlap / (a + b)).powi(2))
}

/// `1 - q^j` for `j >= 0` without cancellation when `q` is close to one.
fn one_minus_pow(ln_q: f64, j: usize) -> f64 {
    if j == 0 {
        0.0
    } else {
        -(ln_q * j as f64).exp_m1()
    }
}

fn ln_no_click(s_bar: f64) -> f64 {
    (-s_bar).ln_1p()
}

/// Probability that a uniform tie-break among clicked slots misses the
/// pulse, given the pulse clicked and `n - 1` empty slots were also
/// measured: `1 - E[1 / (1 + C)]` with `C ~ Bin(n - 1, 1 - q)`.
///
/// Returns the values for `n = 0..=max_n` (`n = 0` maps to 0).
pub fn tie_break_losses(q_bar: f64, max_n: usize) -> Vec<f64> {
    let ln_q = ln_no_click(q_bar);
    let mut losses = Vec::with_capacity(max_n + 1);
    losses.push(0.0);
    // (1/n) * sum_{j<n} (1 - q^j)
    let mut partial = 0.0;
    for n in 1..=max_n {
        partial += one_minus_pow(ln_q, n - 1);
        losses.push(partial / n as f64);
    }
    losses
}

/// Direct-detection error probability.
pub fn dd_error(m: usize, model: &impl ClickModel) -> Result<f64> {
    check_order(m)?;
    let s = model.probs(0.0);
    Ok(dd_error_from_probs(m, &s))
}

pub(crate) fn dd_error_from_probs(m: usize, s: &SlotProbs) -> f64 {
    let mf = m as f64;
    let ln_q = ln_no_click(s.q_bar);
    let loss = tie_break_losses(s.q_bar, m)[m];
    // Pulse missed: correct only by guessing when nothing else clicked.
    let missed = s.p * (1.0 - (1.0 - one_minus_pow(ln_q, m - 1)) / mf);
    missed + s.p_bar * loss
}

/// Direct-detection error in its closed form; `None` when `1 - q_0` is
/// below [`DEGENERATE_EPS`].
pub fn dd_error_closed_form(m: usize, model: &impl ClickModel) -> Result<Option<f64>> {
    check_order(m)?;
    let SlotProbs { q, q_bar, p, p_bar } = model.probs(0.0);
    if q_bar < DEGENERATE_EPS {
        return Ok(None);
    }
    let mf = m as f64;
    let mi = m as i32;
    Ok(Some(
        ((mf - p * q.powi(mi - 1)) * q_bar - p_bar * (1.0 - q.powi(mi))) / (mf * q_bar),
    ))
}

/// Precomputed displacement-independent parts of the CPN error.
struct CpnEvaluator {
    m: usize,
    zero: SlotProbs,
    ln_q0: f64,
    losses: Vec<f64>,
}

impl CpnEvaluator {
    fn new(m: usize, model: &impl ClickModel) -> Self {
        let zero = model.probs(0.0);
        Self {
            m,
            zero,
            ln_q0: ln_no_click(zero.q_bar),
            losses: tie_break_losses(zero.q_bar, m),
        }
    }

    /// Sum over the pulse position `x` of the error-path probabilities:
    /// switchover at `k < x` followed by a DD failure, switchover at `x`
    /// followed by a noise click, or the pulse slot clicking while nulled.
    fn error(&self, nulled: &SlotProbs) -> f64 {
        let m = self.m;
        let mf = m as f64;
        let z = &self.zero;
        let c = nulled.q_bar;
        let mut total = 0.0;
        let mut c_pow = 1.0; // c^{x-1}
        for x in 1..=m {
            // Switchover at slot k = x; the remaining x < k' <= m are all DD.
            let rest = m - x;
            let early = c_pow * nulled.q * (z.p + z.p_bar * self.losses[rest]) * rest as f64;
            let at_pulse = c_pow * nulled.p * one_minus_pow(self.ln_q0, rest);
            let clicked = c_pow * nulled.p_bar * (1.0 - c.powi(rest as i32) / mf);
            // `early` is the k = x term of sum_k (M - k) a_k, regrouped by k.
            total += early + at_pulse + clicked;
            c_pow *= c;
        }
        total / mf
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "nulling displacement must be finite and >= 0, got {beta}"
        )))
    }
}

/// Conditional pulse nulling error with nulling displacement `beta`.
pub fn cpn_error(m: usize, beta: f64, model: &impl ClickModel) -> Result<f64> {
    check_order(m)?;
    check_beta(beta)?;
    Ok(CpnEvaluator::new(m, model).error(&model.probs(beta)))
}

/// CPN error in its closed form; `None` when `1 - q_0` or
/// `1 - q_beta - q_0` is below [`DEGENERATE_EPS`] in magnitude.
pub fn cpn_error_closed_form(m: usize, beta: f64, model: &impl ClickModel) -> Result<Option<f64>> {
    check_order(m)?;
    check_beta(beta)?;
    let z = model.probs(0.0);
    let b = model.probs(beta);
    let denom_shift = b.q_bar - z.q;
    if z.q_bar.abs() < DEGENERATE_EPS || denom_shift.abs() < DEGENERATE_EPS {
        return Ok(None);
    }
    let mf = m as f64;
    let mi = m as i32;
    let numerator = (z.p_bar - mf * z.q_bar) * (z.q - b.q_bar)
        + z.q_bar * b.q_bar.powi(mi - 1) * (b.p_bar * z.q - z.p * b.q_bar)
        + z.q.powi(mi) * (b.p * z.q_bar - z.p_bar * b.q);
    Ok(Some(numerator / (mf * z.q_bar * denom_shift)))
}

/// CPN error minimized over the nulling displacement.
pub fn cpn_error_optimized(
    m: usize,
    model: &impl ClickModel,
    search: &ScalarSearchConfig,
) -> Result<BoundResult> {
    check_order(m)?;
    let (_, hi) = search.interval(model.amplitude());
    if hi < model.amplitude() {
        return Err(Error::domain(format!(
            "search interval [0, {hi}] does not contain the pulse amplitude {}",
            model.amplitude()
        )));
    }
    if m == 1 {
        return Ok(BoundResult {
            p_error: 0.0,
            method: BoundMethod::CpnOpt,
            beta_used: Some(model.amplitude()),
        });
    }
    let evaluator = CpnEvaluator::new(m, model);
    let (beta, p_error) = search.minimize_displacement(model.amplitude(), |beta| {
        evaluator.error(&model.probs(beta))
    });
    // The scan may straddle exact nulling; never report worse than it.
    let at_alpha = evaluator.error(&model.probs(model.amplitude()));
    let (beta, p_error) = if at_alpha < p_error {
        (model.amplitude(), at_alpha)
    } else {
        (beta, p_error)
    };
    Ok(BoundResult {
        p_error,
        method: BoundMethod::CpnOpt,
        beta_used: Some(beta),
    })
}

/// Strong-pulse limit of the greedy receiver initialised with
/// `beta_in = alpha`: the pulse-slot click probability under nulling times
/// the DD error with a pulse that always clicks.
pub fn greedy_strong_pulse_limit(m: usize, model: &impl ClickModel) -> Result<f64> {
    check_order(m)?;
    let zero = model.probs(0.0);
    if zero.q_bar < DEGENERATE_EPS {
        return Ok(0.0);
    }
    let nulled_pulse_click = model.p_bar(model.amplitude());
    Ok(nulled_pulse_click * tie_break_losses(zero.q_bar, m)[m])
}

/// Strong-pulse limit in its closed form; `None` when degenerate.
pub fn greedy_strong_pulse_limit_closed_form(
    m: usize,
    model: &impl ClickModel,
) -> Result<Option<f64>> {
    check_order(m)?;
    let SlotProbs { q, q_bar, .. } = model.probs(0.0);
    if q_bar < DEGENERATE_EPS {
        return Ok(None);
    }
    let mf = m as f64;
    let p_bar_alpha = model.p_bar(model.amplitude());
    Ok(Some(
        p_bar_alpha * (-1.0 + mf - mf * q + q.powi(m as i32)) / (mf * q_bar),
    ))
}
