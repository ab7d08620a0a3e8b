//! The greedy revision-ratio receiver.
//!
//! After `k` slots the receiver remembers only its current estimate and the
//! revision ratio `r`: the factor that turns the joint probability of "the
//! estimate is correct" into the joint probability of "an unmeasured slot
//! holds the pulse". For the next slot it picks the displacement and the
//! keep/update rule that maximize the expected correct-estimate probability
//! right after that slot:
//!
//! * option A keeps the estimate on a no-click and moves it to the new slot
//!   on a click, multiplying the correct probability by `q + r (1 - p)`;
//! * option B moves on a no-click and keeps on a click, multiplying it by
//!   `r p + (1 - q)`.
//!
//! The choice depends on `r` alone, so it is tabulated once per channel in a
//! [`PolicyTable`].

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, ClickModel, SlotProbs};
use crate::error::{Error, Result};
use crate::search::{refine_peaks, GridConfig, ScalarSearchConfig};

/// Smallest revision ratio kept by the receiver.
pub const RATIO_MIN: f64 = 1e-16;
/// Largest revision ratio kept by the receiver.
pub const RATIO_MAX: f64 = 1e16;

/// Relative tolerance under which two option values count as tied.
const TIE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GreedyOption {
    /// Keep on no-click, update on click.
    A,
    /// Update on no-click, keep on click.
    B,
}

impl fmt::Display for GreedyOption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GreedyOption::A => "A",
            GreedyOption::B => "B",
        })
    }
}

impl FromStr for GreedyOption {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(GreedyOption::A),
            "B" | "b" => Ok(GreedyOption::B),
            other => Err(Error::config(format!("unknown greedy option {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyAction {
    pub option: GreedyOption,
    pub beta: f64,
}

/// The receiver's entire memory between slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyState {
    /// Current estimate, 1-based.
    pub estimate: usize,
    /// Revision ratio.
    pub ratio: f64,
}

/// Ratio `num / den` clamped to `[RATIO_MIN, RATIO_MAX]`; a zero
/// denominator (a zero-probability branch) maps to the upper bound.
pub fn clamp_ratio(num: f64, den: f64) -> f64 {
    if den <= 0.0 {
        return RATIO_MAX;
    }
    let r = num / den;
    if r.is_nan() {
        RATIO_MAX
    } else {
        r.clamp(RATIO_MIN, RATIO_MAX)
    }
}

/// Expected multipliers `(p_A, p_B)` of the correct-estimate probability.
pub fn branch_multipliers(r: f64, beta: f64, model: &impl ClickModel) -> (f64, f64) {
    multipliers(r, &model.probs(beta))
}

fn multipliers(r: f64, s: &SlotProbs) -> (f64, f64) {
    (s.q + r * s.p_bar, r * s.p + s.q_bar)
}

/// Anything that maps a revision ratio to the next action.
pub trait GreedyPolicy {
    fn action(&self, ratio: f64) -> GreedyAction;
}

/// A greedy action together with the multiplier it achieves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyDecision {
    pub action: GreedyAction,
    pub value: f64,
}

/// Exact greedy choice for one click model.
///
/// Click probabilities on the bracketing scan are computed once, so
/// repeated choices (table construction, tree evaluation) only pay for the
/// golden-section refinement.
pub struct GreedyChooser<'a, C: ClickModel> {
    model: &'a C,
    search: ScalarSearchConfig,
    upper: f64,
    points: Vec<f64>,
    probs: Vec<SlotProbs>,
}

impl<'a, C: ClickModel> GreedyChooser<'a, C> {
    pub fn new(model: &'a C, search: &ScalarSearchConfig) -> Self {
        let (_, hi) = search.interval(model.amplitude());
        let points = search.displacement_scan(model.amplitude());
        let probs = points.iter().map(|&b| model.probs(b)).collect();
        Self {
            model,
            search: *search,
            upper: hi,
            points,
            probs,
        }
    }

    pub fn model(&self) -> &C {
        self.model
    }

    /// Option and displacement maximizing `max(p_A, p_B)` at ratio `r`.
    pub fn choose(&self, r: f64) -> GreedyDecision {
        let mut values_a = Vec::with_capacity(self.points.len());
        let mut values_b = Vec::with_capacity(self.points.len());
        for s in &self.probs {
            let (a, b) = multipliers(r, s);
            values_a.push(a);
            values_b.push(b);
        }
        let tol = self.search.tolerance;
        let (beta_a, value_a) = refine_peaks(&self.points, &values_a, tol, |b| {
            multipliers(r, &self.model.probs(b)).0
        });
        let (beta_b, value_b) = refine_peaks(&self.points, &values_b, tol, |b| {
            multipliers(r, &self.model.probs(b)).1
        });
        // Order matters for ties: smaller displacement first, A before B.
        let mut candidates = [
            GreedyDecision {
                action: GreedyAction {
                    option: GreedyOption::A,
                    beta: beta_a,
                },
                value: value_a,
            },
            GreedyDecision {
                action: GreedyAction {
                    option: GreedyOption::B,
                    beta: beta_b,
                },
                value: value_b,
            },
            // beta -> infinity: every slot clicks, so A always updates and B always keeps.
            GreedyDecision {
                action: GreedyAction {
                    option: GreedyOption::A,
                    beta: self.upper,
                },
                value: r,
            },
            GreedyDecision {
                action: GreedyAction {
                    option: GreedyOption::B,
                    beta: self.upper,
                },
                value: 1.0,
            },
        ];
        candidates.sort_by(|x, y| {
            x.action
                .beta
                .total_cmp(&y.action.beta)
                .then_with(|| (x.action.option as u8).cmp(&(y.action.option as u8)))
        });
        let mut best = candidates[0];
        for c in &candidates[1..] {
            if c.value > best.value * (1.0 + TIE_RTOL) {
                best = *c;
            }
        }
        best
    }
}

impl<C: ClickModel> GreedyPolicy for GreedyChooser<'_, C> {
    fn action(&self, ratio: f64) -> GreedyAction {
        self.choose(ratio).action
    }
}

/// Greedy choice at ratio `r`.
pub fn greedy_choice(r: f64, model: &impl ClickModel, search: &ScalarSearchConfig) -> GreedyAction {
    GreedyChooser::new(model, search).choose(r).action
}

/// State after adopting slot 1, measured with displacement `beta_in`.
pub fn initial_state(beta_in: f64, clicked: bool, model: &impl ClickModel) -> Result<GreedyState> {
    if !(beta_in.is_finite() && beta_in >= 0.0) {
        return Err(Error::domain(format!(
            "initial displacement must be finite and >= 0, got {beta_in}"
        )));
    }
    Ok(initial_state_unchecked(beta_in, clicked, model))
}

fn initial_state_unchecked(beta_in: f64, clicked: bool, model: &impl ClickModel) -> GreedyState {
    let s = model.probs(beta_in);
    let ratio = if clicked {
        clamp_ratio(s.q_bar, s.p_bar)
    } else {
        clamp_ratio(s.q, s.p)
    };
    GreedyState { estimate: 1, ratio }
}

/// Applies the keep/update rule of `action` to the outcome of `slot`.
pub fn update_state(
    state: GreedyState,
    action: GreedyAction,
    clicked: bool,
    slot: usize,
    model: &impl ClickModel,
) -> GreedyState {
    match (action.option, clicked) {
        (GreedyOption::A, false) | (GreedyOption::B, true) => state,
        (GreedyOption::A, true) => GreedyState {
            estimate: slot,
            ratio: clamp_ratio(model.q_bar(action.beta), model.p_bar(action.beta)),
        },
        (GreedyOption::B, false) => GreedyState {
            estimate: slot,
            ratio: clamp_ratio(model.q(action.beta), model.p(action.beta)),
        },
    }
}

/// Runs the receiver over one frame of `m` slots.
///
/// `outcome(slot, beta)` reports whether the detector clicked in `slot`
/// (1-based) under displacement `beta`. Returns the final estimate.
pub fn run_frame(
    m: usize,
    beta_in: f64,
    policy: &impl GreedyPolicy,
    mut outcome: impl FnMut(usize, f64) -> bool,
    model: &impl ClickModel,
) -> usize {
    let first = outcome(1, beta_in);
    let mut state = initial_state_unchecked(beta_in, first, model);
    for slot in 2..=m {
        let action = policy.action(state.ratio);
        let clicked = outcome(slot, action.beta);
        state = update_state(state, action, clicked, slot, model);
    }
    state.estimate
}

/// Greedy actions tabulated on a log-spaced grid of revision ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    ratios: Vec<f64>,
    log_ratios: Vec<f64>,
    actions: Vec<GreedyAction>,
    params: Option<ChannelParams>,
}

/// Builds the policy table of `model` over the ratio grid.
pub fn build_policy_table(
    model: &impl ClickModel,
    grid: &GridConfig,
    search: &ScalarSearchConfig,
) -> Result<PolicyTable> {
    let ratios = grid.values()?;
    let chooser = GreedyChooser::new(model, search);
    let actions = ratios
        .par_iter()
        .map(|&r| chooser.choose(r).action)
        .collect();
    PolicyTable::new(ratios, actions)
}

impl PolicyTable {
    pub fn new(ratios: Vec<f64>, actions: Vec<GreedyAction>) -> Result<Self> {
        if ratios.len() < 2 || ratios.len() != actions.len() {
            return Err(Error::config(format!(
                "policy table needs >= 2 entries and matching lengths, got {} ratios and {} actions",
                ratios.len(),
                actions.len()
            )));
        }
        if ratios[0] <= 0.0 || ratios.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config(
                "policy table ratios must be positive and strictly increasing",
            ));
        }
        let log_ratios = ratios.iter().map(|r| r.ln()).collect();
        Ok(Self {
            ratios,
            log_ratios,
            actions,
            params: None,
        })
    }

    /// Attaches the channel the table was built for.
    pub fn with_params(mut self, params: ChannelParams) -> Self {
        self.params = Some(params);
        self
    }

    pub fn params(&self) -> Option<&ChannelParams> {
        self.params.as_ref()
    }

    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratios.is_empty()
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn actions(&self) -> &[GreedyAction] {
        &self.actions
    }

    /// Index of the entry nearest to `r` in log space.
    ///
    /// Out-of-range ratios clamp to the end entries; an exact tie between
    /// two neighbours resolves to the lower index.
    pub fn lookup_index(&self, r: f64) -> usize {
        let last = self.ratios.len() - 1;
        if !(r > self.ratios[0]) {
            return 0;
        }
        if r >= self.ratios[last] {
            return last;
        }
        let lr = r.ln();
        let upper = self.log_ratios.partition_point(|&l| l <= lr).clamp(1, last);
        let lower = upper - 1;
        let below = lr - self.log_ratios[lower];
        let above = self.log_ratios[upper] - lr;
        let cell = self.log_ratios[upper] - self.log_ratios[lower];
        if above < below - 1e-9 * cell {
            upper
        } else {
            lower
        }
    }

    pub fn lookup(&self, r: f64) -> GreedyAction {
        self.actions[self.lookup_index(r)]
    }

    /// Writes the table as CSV preceded by a versioned metadata line.
    ///
    /// Values are written in shortest round-trip form so a reloaded table
    /// is bit-identical.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        write!(out, "# ppmrx-lut v1")?;
        if let Some(p) = &self.params {
            write!(out, " alpha={} nb={} delta={}", p.alpha, p.n_b, p.delta)?;
        }
        writeln!(
            out,
            " r_min={} r_max={} points={}",
            self.ratios[0],
            self.ratios[self.ratios.len() - 1],
            self.ratios.len()
        )?;
        writeln!(out, "r,option,beta")?;
        for (r, a) in self.ratios.iter().zip(&self.actions) {
            writeln!(out, "{r},{},{}", a.option, a.beta)?;
        }
        Ok(())
    }

    pub fn read_csv(input: impl BufRead) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::config("empty policy table file"))??;
        let meta = header
            .strip_prefix("# ppmrx-lut v1")
            .ok_or_else(|| Error::config(format!("unsupported policy table header {header:?}")))?;
        let mut alpha = None;
        let mut n_b = None;
        let mut delta = None;
        let mut points = None;
        for token in meta.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| Error::config(format!("malformed header token {token:?}")))?;
            match key {
                "alpha" => alpha = Some(parse_f64(value)?),
                "nb" => n_b = Some(parse_f64(value)?),
                "delta" => delta = Some(parse_f64(value)?),
                "points" => {
                    points = Some(
                        value
                            .parse::<usize>()
                            .map_err(|_| Error::config(format!("bad point count {value:?}")))?,
                    )
                }
                _ => {}
            }
        }
        match lines.next() {
            Some(Ok(cols)) if cols.trim() == "r,option,beta" => {}
            _ => {
                return Err(Error::config(
                    "policy table is missing the r,option,beta header",
                ))
            }
        }
        let mut ratios = Vec::new();
        let mut actions = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let (Some(r), Some(option), Some(beta), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(Error::config(format!(
                    "malformed policy table row {line:?}"
                )));
            };
            ratios.push(parse_f64(r)?);
            actions.push(GreedyAction {
                option: option.parse()?,
                beta: parse_f64(beta)?,
            });
        }
        if let Some(points) = points {
            if points != ratios.len() {
                return Err(Error::config(format!(
                    "policy table header announces {points} rows, found {}",
                    ratios.len()
                )));
            }
        }
        let mut table = Self::new(ratios, actions)?;
        if let (Some(alpha), Some(n_b), Some(delta)) = (alpha, n_b, delta) {
            // PPM order does not enter the table.
            table.params = Some(ChannelParams::new(alpha, n_b, delta, 1)?);
        }
        Ok(table)
    }
}

impl GreedyPolicy for PolicyTable {
    fn action(&self, ratio: f64) -> GreedyAction {
        self.lookup(ratio)
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::config(format!("cannot parse number {s:?}")))
}
