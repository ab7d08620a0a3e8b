//! Exact error probabilities of adaptive displacement receivers.
//!
//! Every node of a displacement decision tree carries the joint
//! probabilities of the observed outcomes with each pulse position. Three
//! numbers summarize them:
//!
//! * `est`: the current estimate holds the pulse;
//! * `future`: one particular unmeasured slot holds the pulse (all
//!   unmeasured slots share this value);
//! * `others`: some measured slot other than the estimate holds the pulse.
//!
//! A measurement multiplies every hypothesis by its no-click or click
//! probability, and all measured slots see the same empty-slot factor. The
//! ordering among measured candidates therefore never changes, so only the
//! best one matters and the ratio `s = est / future` is a sufficient
//! statistic for the optimal receiver. [`DpValueFunction`] solves the
//! resulting one-dimensional backward induction;
//! [`brute_force_tree_error`] optimizes the unrestricted tree for tiny
//! orders and serves as its check.

use rayon::prelude::*;

use crate::channel::{ClickModel, SlotProbs};
use crate::error::{Error, Result};
use crate::greedy::{clamp_ratio, GreedyChooser, GreedyOption, PolicyTable};
use crate::search::{linspace, GridConfig, ScalarSearchConfig};

/// Largest order evaluated by full tree recursion.
pub const DEFAULT_EXACT_CAP: usize = 20;
/// Largest order accepted by the brute-force tree optimizer.
pub const BRUTE_FORCE_CAP: usize = 3;
/// Number of scan points when optimizing the initial displacement.
pub const BETA_IN_CANDIDATES: usize = 64;
/// Extra candidates on `[0, 2 alpha]` for weak pulses.
pub const BETA_IN_FINE_CANDIDATES: usize = 16;
/// Minimum number of ratio samples of the backward induction.
pub const MIN_DP_POINTS: usize = 512;

/// Subtrees with at least this many remaining slots are split across threads.
const PARALLEL_DEPTH: usize = 10;

/// Joint probabilities carried by one tree node.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TreeWeights {
    pub est: f64,
    pub future: f64,
    pub others: f64,
}

impl TreeWeights {
    /// Revision ratio of the greedy receiver at this node.
    pub fn ratio(&self) -> f64 {
        clamp_ratio(self.future, self.est)
    }

    /// Total probability of the node's outcome history.
    pub fn mass(&self, unmeasured: usize) -> f64 {
        self.est + unmeasured as f64 * self.future + self.others
    }

    /// Children `(no_click, click)` under a greedy action. The measured
    /// slot joins `others` when the estimate is kept and the old estimate
    /// joins them when it is replaced.
    fn branch(&self, option: GreedyOption, s: &SlotProbs) -> (Self, Self) {
        let keep = |pulse: f64, empty: f64| Self {
            est: self.est * empty,
            future: self.future * empty,
            others: self.others * empty + self.future * pulse,
        };
        let update = |pulse: f64, empty: f64| Self {
            est: self.future * pulse,
            future: self.future * empty,
            others: (self.others + self.est) * empty,
        };
        match option {
            GreedyOption::A => (keep(s.p, s.q), update(s.p_bar, s.q_bar)),
            GreedyOption::B => (update(s.p, s.q), keep(s.p_bar, s.q_bar)),
        }
    }

    /// Nodes after the first slot, which is always adopted as the estimate.
    fn first_slot(m: usize, s: &SlotProbs) -> (Self, Self) {
        let mf = m as f64;
        let make = |pulse: f64, empty: f64| Self {
            est: pulse / mf,
            future: empty / mf,
            others: 0.0,
        };
        (make(s.p, s.q), make(s.p_bar, s.q_bar))
    }
}

fn check_order(m: usize) -> Result<()> {
    if m < 1 {
        Err(Error::domain("PPM order must be >= 1"))
    } else {
        Ok(())
    }
}

fn check_beta_in(beta_in: f64) -> Result<()> {
    if beta_in.is_finite() && beta_in >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "initial displacement must be finite and >= 0, got {beta_in}"
        )))
    }
}

/// Error mass (sum of `others` over leaves) below `node`.
fn greedy_subtree<C: ClickModel>(
    chooser: &GreedyChooser<'_, C>,
    node: TreeWeights,
    slot: usize,
    m: usize,
) -> f64 {
    if slot > m {
        return node.others;
    }
    let action = chooser.choose(node.ratio()).action;
    let s = chooser.model().probs(action.beta);
    let (no_click, click) = node.branch(action.option, &s);
    if m - slot >= PARALLEL_DEPTH {
        let (a, b) = rayon::join(
            || greedy_subtree(chooser, no_click, slot + 1, m),
            || greedy_subtree(chooser, click, slot + 1, m),
        );
        a + b
    } else {
        greedy_subtree(chooser, no_click, slot + 1, m) + greedy_subtree(chooser, click, slot + 1, m)
    }
}

/// Error probability of the greedy receiver by full decision-tree recursion.
///
/// Every node applies the exact greedy choice. The error is accumulated
/// from the probabilities of wrong hypotheses at the leaves, so it stays
/// accurate when it is many orders of magnitude below one.
pub fn greedy_exact_error(
    m: usize,
    beta_in: f64,
    model: &impl ClickModel,
    search: &ScalarSearchConfig,
) -> Result<f64> {
    greedy_exact_error_capped(m, beta_in, model, search, DEFAULT_EXACT_CAP)
}

pub fn greedy_exact_error_capped(
    m: usize,
    beta_in: f64,
    model: &impl ClickModel,
    search: &ScalarSearchConfig,
    cap: usize,
) -> Result<f64> {
    check_order(m)?;
    check_beta_in(beta_in)?;
    if m > cap {
        return Err(Error::Capacity(format!(
            "exact greedy tree for M={m} exceeds the cap of {cap} slots; use the Monte Carlo backend"
        )));
    }
    let chooser = GreedyChooser::new(model, search);
    Ok(greedy_exact_with(&chooser, m, beta_in))
}

fn greedy_exact_with<C: ClickModel>(chooser: &GreedyChooser<'_, C>, m: usize, beta_in: f64) -> f64 {
    if m == 1 {
        return 0.0;
    }
    let (no_click, click) = TreeWeights::first_slot(m, &chooser.model().probs(beta_in));
    greedy_subtree(chooser, no_click, 2, m) + greedy_subtree(chooser, click, 2, m)
}

/// Total probability mass of the greedy tree after each slot (index `d`
/// holds the sum over all nodes at depth `d`, `d = 1..=m`). Each entry is
/// one up to rounding.
pub fn greedy_tree_mass_by_depth(
    m: usize,
    beta_in: f64,
    model: &impl ClickModel,
    search: &ScalarSearchConfig,
) -> Result<Vec<f64>> {
    check_order(m)?;
    check_beta_in(beta_in)?;
    if m > DEFAULT_EXACT_CAP {
        return Err(Error::Capacity(format!(
            "tree audit for M={m} exceeds the cap"
        )));
    }
    let chooser = GreedyChooser::new(model, search);
    let (a, b) = TreeWeights::first_slot(m, &model.probs(beta_in));
    let mut level = vec![a, b];
    let mut masses = vec![0.0, level.iter().map(|w| w.mass(m - 1)).sum()];
    for slot in 2..=m {
        let mut next = Vec::with_capacity(level.len() * 2);
        for node in &level {
            let action = chooser.choose(node.ratio()).action;
            let (x, y) = node.branch(action.option, &model.probs(action.beta));
            next.push(x);
            next.push(y);
        }
        masses.push(next.iter().map(|w| w.mass(m - slot)).sum());
        level = next;
    }
    Ok(masses)
}

/// Candidate initial displacements: a uniform scan of the search interval,
/// a few points on `[0, 2 alpha]` for weak pulses, and `0` and `alpha`.
pub fn beta_in_candidates(model: &impl ClickModel, search: &ScalarSearchConfig) -> Vec<f64> {
    let alpha = model.amplitude();
    let (lo, hi) = search.interval(alpha);
    let mut candidates = linspace(lo, hi, BETA_IN_CANDIDATES);
    if 2.0 * alpha < hi / 4.0 {
        candidates.extend(linspace(lo, 2.0 * alpha, BETA_IN_FINE_CANDIDATES));
    }
    candidates.extend([0.0, alpha]);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    candidates
}

/// Minimizes `error(beta_in)` over the candidate scan, then refines by
/// golden section between the neighbours of the best candidate.
pub(crate) fn minimize_beta_in(
    candidates: &[f64],
    tolerance: f64,
    error: impl Fn(f64) -> f64 + Sync,
) -> (f64, f64) {
    let values: Vec<f64> = candidates.par_iter().map(|&b| error(b)).collect();
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    let a = candidates[best.saturating_sub(1)];
    let b = candidates[(best + 1).min(candidates.len() - 1)];
    let (x, neg) = crate::search::golden_section_max(a, b, tolerance, |x| -error(x));
    if -neg < values[best] {
        (-neg, x)
    } else {
        (values[best], candidates[best])
    }
}

/// Greedy error minimized over the initial displacement; returns
/// `(p_error, beta_in)`.
pub fn greedy_exact_optimized(
    m: usize,
    model: &impl ClickModel,
    search: &ScalarSearchConfig,
) -> Result<(f64, f64)> {
    check_order(m)?;
    if m > DEFAULT_EXACT_CAP {
        return Err(Error::Capacity(format!(
            "exact greedy tree for M={m} exceeds the cap of {DEFAULT_EXACT_CAP} slots; use the Monte Carlo backend"
        )));
    }
    if m == 1 {
        return Ok((0.0, model.amplitude()));
    }
    let chooser = GreedyChooser::new(model, search);
    let candidates = beta_in_candidates(model, search);
    Ok(minimize_beta_in(&candidates, search.tolerance, |b| {
        greedy_exact_with(&chooser, m, b)
    }))
}

/// Exact error probability of the greedy receiver driven by a policy table.
///
/// With a table the stored revision ratio can only take `len + 2` values:
/// the two initial ratios and, for every table entry, the ratio adopted
/// when that entry's action updates the estimate. Node weights enter all
/// transitions linearly, so summing them per stored ratio evaluates the
/// `2^M` tree in `O(M * len)` operations.
pub fn greedy_lut_error(
    m: usize,
    beta_in: f64,
    table: &PolicyTable,
    model: &impl ClickModel,
) -> Result<f64> {
    check_order(m)?;
    check_beta_in(beta_in)?;
    if m == 1 {
        return Ok(0.0);
    }
    let n = table.len();
    let probs: Vec<SlotProbs> = table
        .actions()
        .iter()
        .map(|a| model.probs(a.beta))
        .collect();
    // Ratio adopted after the updating outcome of each entry's action.
    let mut ratios: Vec<f64> = table
        .actions()
        .iter()
        .zip(&probs)
        .map(|(a, s)| match a.option {
            GreedyOption::A => clamp_ratio(s.q_bar, s.p_bar),
            GreedyOption::B => clamp_ratio(s.q, s.p),
        })
        .collect();
    let first = model.probs(beta_in);
    ratios.push(clamp_ratio(first.q, first.p));
    ratios.push(clamp_ratio(first.q_bar, first.p_bar));
    let entry: Vec<usize> = ratios.iter().map(|&r| table.lookup_index(r)).collect();

    let mut weights = vec![TreeWeights::default(); n + 2];
    let (no_click, click) = TreeWeights::first_slot(m, &first);
    weights[n] = no_click;
    weights[n + 1] = click;
    let add = |w: &mut TreeWeights, v: TreeWeights| {
        w.est += v.est;
        w.future += v.future;
        w.others += v.others;
    };
    for _slot in 2..=m {
        let mut next = vec![TreeWeights::default(); n + 2];
        for (state, w) in weights.iter().enumerate() {
            if w.est == 0.0 && w.future == 0.0 && w.others == 0.0 {
                continue;
            }
            let i = entry[state];
            let option = table.actions()[i].option;
            let (no_click, click) = w.branch(option, &probs[i]);
            let (kept, moved) = match option {
                GreedyOption::A => (no_click, click),
                GreedyOption::B => (click, no_click),
            };
            add(&mut next[state], kept);
            add(&mut next[i], moved);
        }
        weights = next;
    }
    Ok(weights.iter().map(|w| w.others).sum())
}

/// Table-driven greedy error minimized over the initial displacement;
/// returns `(p_error, beta_in)`.
pub fn greedy_lut_optimized(
    m: usize,
    table: &PolicyTable,
    model: &impl ClickModel,
    search: &ScalarSearchConfig,
) -> Result<(f64, f64)> {
    check_order(m)?;
    if m == 1 {
        return Ok((0.0, model.amplitude()));
    }
    let candidates = beta_in_candidates(model, search);
    Ok(minimize_beta_in(&candidates, search.tolerance, |b| {
        greedy_lut_error(m, b, table, model).unwrap_or(f64::INFINITY)
    }))
}

/// Default ratio grid of the backward induction.
pub fn default_dp_grid() -> GridConfig {
    GridConfig::default().with_points(16_384)
}

/// Value function of the optimal adaptive receiver.
///
/// `v_k(s)` is the best achievable sum of leaf `est` weights, in units of
/// `future`, with `k` slots left and current ratio `s = est / future`:
///
/// `v_0(s) = s`,
/// `v_k(s) = max_beta q v_{k-1}(max(s, p/q)) + q' v_{k-1}(max(s, p'/q'))`
/// with primes marking click probabilities. The stored quantity is the
/// excess `h_k(s) = v_k(s) - s`, which is bounded by `k`, flat at both ends
/// of the grid and interpolated linearly in `ln s`.
#[derive(Debug, Clone)]
pub struct DpValueFunction {
    log_min: f64,
    log_step: f64,
    s_grid: Vec<f64>,
    /// `excess[k][i] = h_k(s_grid[i])`.
    excess: Vec<Vec<f64>>,
    /// `v_k(0)` for every `k`.
    at_zero: Vec<f64>,
}

impl DpValueFunction {
    pub fn solve(
        m: usize,
        model: &impl ClickModel,
        grid: &GridConfig,
        search: &ScalarSearchConfig,
    ) -> Result<Self> {
        check_order(m)?;
        if grid.points < MIN_DP_POINTS {
            return Err(Error::domain(format!(
                "backward induction needs at least {MIN_DP_POINTS} ratio samples, got {}",
                grid.points
            )));
        }
        let s_grid = grid.values()?;
        let log_min = grid.min.ln();
        let log_step = (grid.max.ln() - log_min) / (grid.points - 1) as f64;
        let scan = search.displacement_scan(model.amplitude());
        let scan_probs: Vec<SlotProbs> = scan.iter().map(|&b| model.probs(b)).collect();

        let mut vf = Self {
            log_min,
            log_step,
            s_grid,
            excess: vec![vec![0.0; grid.points]],
            at_zero: vec![0.0],
        };
        for k in 1..=m {
            let prev = &vf.excess[k - 1];
            let best_excess = |s: f64| -> f64 {
                let objective = |sp: &SlotProbs| vf.step_excess(prev, s, sp);
                let values: Vec<f64> = scan_probs.iter().map(objective).collect();
                crate::search::refine_peaks(&scan, &values, search.tolerance, |b| {
                    objective(&model.probs(b))
                })
                .1
            };
            let row: Vec<f64> = vf.s_grid.par_iter().map(|&s| best_excess(s)).collect();
            let zero = best_excess(0.0);
            vf.check_row(k, &row, search.tolerance)?;
            vf.excess.push(row);
            vf.at_zero.push(zero);
        }
        Ok(vf)
    }

    fn interpolate(&self, row: &[f64], s: f64) -> f64 {
        let last = row.len() - 1;
        if !(s > self.s_grid[0]) {
            return row[0];
        }
        if s >= self.s_grid[last] {
            return row[last];
        }
        let t = (s.ln() - self.log_min) / self.log_step;
        let i = (t.floor() as usize).min(last - 1);
        let frac = (t - i as f64).clamp(0.0, 1.0);
        row[i] + (row[i + 1] - row[i]) * frac
    }

    /// `E[v_{k-1}(s')] - s` for one measurement with probabilities `sp`.
    fn step_excess(&self, prev: &[f64], s: f64, sp: &SlotProbs) -> f64 {
        let mut total = 0.0;
        for (empty, pulse) in [(sp.q, sp.p), (sp.q_bar, sp.p_bar)] {
            if empty > 0.0 {
                let next = s.max(pulse / empty);
                total += (pulse - empty * s).max(0.0) + empty * self.interpolate(prev, next);
            } else {
                // An empty slot never shows this outcome: a pulse seen here is certain.
                total += pulse;
            }
        }
        total
    }

    /// Flags drops larger than the displacement search can explain: the
    /// objective is Lipschitz in `beta` with a constant of order one per
    /// unit of value, so stopping within `search_tol` costs at most a few
    /// `search_tol` in value.
    fn check_row(&self, k: usize, row: &[f64], search_tol: f64) -> Result<()> {
        let prev = &self.excess[k - 1];
        for i in 0..row.len() {
            let v = self.s_grid[i] + row[i];
            let tol = (1e-9 + 4.0 * search_tol) * (1.0 + v);
            if !row[i].is_finite() || row[i] < prev[i] - tol {
                return Err(Error::Diagnostic(format!(
                    "value function decreased with more slots at s={:e} (k={k}); refine the ratio grid",
                    self.s_grid[i]
                )));
            }
            if i > 0 && v < self.s_grid[i - 1] + row[i - 1] - tol {
                return Err(Error::Diagnostic(format!(
                    "value function not monotone in s near s={:e} (k={k}, drop {:e}); refine the ratio grid",
                    self.s_grid[i],
                    self.s_grid[i - 1] + row[i - 1] - v
                )));
            }
        }
        Ok(())
    }

    pub fn max_remaining(&self) -> usize {
        self.excess.len() - 1
    }

    /// `v_k(s)`; `s = 0` uses the directly optimized start value.
    pub fn value(&self, k: usize, s: f64) -> f64 {
        if s == 0.0 {
            self.at_zero[k]
        } else {
            s + self.interpolate(&self.excess[k], s)
        }
    }

    /// Error probability of the optimal receiver over `k` slots.
    pub fn error(&self, k: usize) -> f64 {
        if k <= 1 {
            return 0.0;
        }
        (1.0 - self.at_zero[k] / k as f64).max(0.0)
    }
}

/// Error probability of the numerically optimal adaptive displacement
/// receiver, by backward induction over the ratio statistic.
pub fn optimal_adaptive_error(
    m: usize,
    model: &impl ClickModel,
    grid: &GridConfig,
    search: &ScalarSearchConfig,
) -> Result<f64> {
    Ok(DpValueFunction::solve(m, model, grid, search)?.error(m))
}

/// Error probability of the best general displacement decision tree for
/// `m <= 3`, optimizing every node's displacement by nested search and every
/// leaf's estimate by taking the most likely hypothesis.
pub fn brute_force_tree_error(
    m: usize,
    model: &impl ClickModel,
    search: &ScalarSearchConfig,
) -> Result<f64> {
    check_order(m)?;
    if m > BRUTE_FORCE_CAP {
        return Err(Error::Capacity(format!(
            "brute-force tree optimization is limited to M <= {BRUTE_FORCE_CAP}, got {m}"
        )));
    }
    if m == 1 {
        return Ok(0.0);
    }
    let prior = vec![1.0 / m as f64; m];
    let correct = tree_value(model, search, &prior, 0);
    Ok((1.0 - correct).max(0.0))
}

/// Best expected probability of a correct final estimate from a node whose
/// hypotheses have joint weights `weights`, with slots `slot..` unmeasured.
fn tree_value(
    model: &impl ClickModel,
    search: &ScalarSearchConfig,
    weights: &[f64],
    slot: usize,
) -> f64 {
    if slot == weights.len() {
        return weights.iter().copied().fold(0.0, f64::max);
    }
    let value = |beta: f64| {
        let s = model.probs(beta);
        let no_click: Vec<f64> = weights
            .iter()
            .enumerate()
            .map(|(j, w)| w * if j == slot { s.p } else { s.q })
            .collect();
        let click: Vec<f64> = weights
            .iter()
            .enumerate()
            .map(|(j, w)| w * if j == slot { s.p_bar } else { s.q_bar })
            .collect();
        tree_value(model, search, &no_click, slot + 1) + tree_value(model, search, &click, slot + 1)
    };
    search.maximize_displacement(model.amplitude(), value).1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{cpn_error, helstrom_error};
    use crate::channel::ChannelParams;
    use crate::greedy::{build_policy_table, run_frame, GreedyChooser};
    use approx::assert_abs_diff_eq;

    fn model(n: f64, n_b: f64, delta: f64) -> crate::PoissonClickModel {
        ChannelParams::from_photons(n, n_b, delta, 4)
            .unwrap()
            .click_model()
    }

    /// Sums the probability of every outcome path of `run_frame` with the
    /// exact greedy choice.
    fn enumerate_frames(m: usize, beta_in: f64, model: &crate::PoissonClickModel) -> f64 {
        let search = ScalarSearchConfig::default();
        let chooser = GreedyChooser::new(model, &search);
        let mut error = 0.0;
        for x in 1..=m {
            for pattern in 0u32..(1 << m) {
                let mut prob = 1.0 / m as f64;
                let y = run_frame(
                    m,
                    beta_in,
                    &chooser,
                    |slot, beta| {
                        let clicked = pattern >> (slot - 1) & 1 == 1;
                        let s = model.probs(beta);
                        prob *= match (slot == x, clicked) {
                            (true, true) => s.p_bar,
                            (true, false) => s.p,
                            (false, true) => s.q_bar,
                            (false, false) => s.q,
                        };
                        clicked
                    },
                    model,
                );
                if y != x {
                    error += prob;
                }
            }
        }
        error
    }

    #[test]
    fn single_slot_is_error_free() {
        let m = model(0.5, 0.1, 0.0);
        let search = ScalarSearchConfig::default();
        assert_eq!(greedy_exact_error(1, 0.3, &m, &search).unwrap(), 0.0);
        assert_eq!(greedy_exact_optimized(1, &m, &search).unwrap().0, 0.0);
        assert_eq!(
            optimal_adaptive_error(1, &m, &default_dp_grid(), &search).unwrap(),
            0.0
        );
        assert_eq!(brute_force_tree_error(1, &m, &search).unwrap(), 0.0);
    }

    #[test]
    fn tree_matches_frame_enumeration() {
        for (n, n_b, delta, beta_in) in [
            (1.0, 0.0, 0.0, 0.4),
            (0.3, 0.002, 0.1, 0.0),
            (2.5, 0.2, 0.0, 1.2),
        ] {
            let m = model(n, n_b, delta);
            for order in [2usize, 3, 5] {
                let tree =
                    greedy_exact_error(order, beta_in, &m, &ScalarSearchConfig::default()).unwrap();
                assert_abs_diff_eq!(tree, enumerate_frames(order, beta_in, &m), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn probability_mass_is_conserved() {
        let m = model(0.8, 0.01, 0.1);
        let masses = greedy_tree_mass_by_depth(7, 0.5, &m, &ScalarSearchConfig::default()).unwrap();
        for mass in &masses[1..] {
            assert_abs_diff_eq!(*mass, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn capacity_limits() {
        let m = model(1.0, 0.0, 0.0);
        let search = ScalarSearchConfig::default();
        assert!(matches!(
            greedy_exact_error(21, 0.0, &m, &search),
            Err(Error::Capacity(_))
        ));
        assert!(matches!(
            greedy_exact_error_capped(5, 0.0, &m, &search, 4),
            Err(Error::Capacity(_))
        ));
        assert!(matches!(
            brute_force_tree_error(4, &m, &search),
            Err(Error::Capacity(_))
        ));
        assert!(
            optimal_adaptive_error(2, &m, &GridConfig::default().with_points(100), &search)
                .is_err()
        );
    }

    #[test]
    fn binary_greedy_is_bracketed() {
        let m = model(1.0, 0.0, 0.0);
        let (pe, _) = greedy_exact_optimized(2, &m, &ScalarSearchConfig::default()).unwrap();
        let lower = helstrom_error(2, 1.0).unwrap();
        let upper = cpn_error(2, 1.0, &m).unwrap();
        assert!(
            pe >= lower - 1e-12 && pe <= upper + 1e-12,
            "{lower} <= {pe} <= {upper}"
        );
        assert_abs_diff_eq!(lower, 0.035_063, epsilon = 1e-6);
    }

    #[test]
    fn optimized_dominates_endpoints() {
        let m = model(2.0, 0.002, 0.1);
        let search = ScalarSearchConfig::default();
        let (best, _) = greedy_exact_optimized(4, &m, &search).unwrap();
        assert!(best <= greedy_exact_error(4, m.amplitude(), &m, &search).unwrap());
        assert!(best <= greedy_exact_error(4, 0.0, &m, &search).unwrap());
    }

    #[test]
    fn lut_evaluation_matches_lut_frames() {
        let m = model(1.2, 0.01, 0.05);
        let search = ScalarSearchConfig::default();
        let table =
            build_policy_table(&m, &GridConfig::default().with_points(200), &search).unwrap();
        for order in [2usize, 4, 7] {
            let mut error = 0.0;
            for x in 1..=order {
                for pattern in 0u32..(1 << order) {
                    let mut prob = 1.0 / order as f64;
                    let y = run_frame(
                        order,
                        0.6,
                        &table,
                        |slot, beta| {
                            let clicked = pattern >> (slot - 1) & 1 == 1;
                            let s = m.probs(beta);
                            prob *= match (slot == x, clicked) {
                                (true, true) => s.p_bar,
                                (true, false) => s.p,
                                (false, true) => s.q_bar,
                                (false, false) => s.q,
                            };
                            clicked
                        },
                        &m,
                    );
                    if y != x {
                        error += prob;
                    }
                }
            }
            assert_abs_diff_eq!(
                greedy_lut_error(order, 0.6, &table, &m).unwrap(),
                error,
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn lut_converges_to_exact_choice() {
        let search = ScalarSearchConfig::default();
        for (n, n_b, delta) in [(0.5, 0.0, 0.0), (2.0, 0.002, 0.1), (4.0, 0.2, 0.0)] {
            let m = model(n, n_b, delta);
            let table = build_policy_table(&m, &GridConfig::default(), &search).unwrap();
            for order in [4usize, 8] {
                let exact = greedy_exact_error(order, m.amplitude(), &m, &search).unwrap();
                let lut = greedy_lut_error(order, m.amplitude(), &table, &m).unwrap();
                assert!(
                    (exact - lut).abs() <= 1e-4,
                    "n={n} M={order}: {exact} vs {lut}"
                );
            }
        }
    }

    #[test]
    fn dp_value_function_properties() {
        let m = model(1.0, 0.002, 0.0);
        let vf = DpValueFunction::solve(4, &m, &default_dp_grid(), &ScalarSearchConfig::default())
            .unwrap();
        assert_eq!(vf.max_remaining(), 4);
        for s in [1e-10, 1e-3, 0.5, 1.0, 7.0, 1e5] {
            let mut prev = s;
            assert_eq!(vf.value(0, s), s);
            for k in 1..=4 {
                let v = vf.value(k, s);
                assert!(v >= prev - 1e-12, "v_{k}({s}) = {v} < {prev}");
                assert!(v <= s + k as f64 + 1e-9);
                prev = v;
            }
        }
        assert_abs_diff_eq!(vf.value(1, 0.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dp_matches_brute_force_for_tiny_orders() {
        let search = ScalarSearchConfig::default().with_grid_points(64);
        for (n, n_b, delta) in [(1.0, 0.0, 0.0), (0.2, 0.002, 0.1), (3.0, 0.2, 0.0)] {
            let m = model(n, n_b, delta);
            for order in [2usize, 3] {
                let dp = optimal_adaptive_error(
                    order,
                    &m,
                    &default_dp_grid(),
                    &ScalarSearchConfig::default(),
                )
                .unwrap();
                let brute = brute_force_tree_error(order, &m, &search).unwrap();
                assert!(
                    (dp - brute).abs() <= 1e-4,
                    "n={n} M={order}: dp {dp} brute {brute}"
                );
            }
        }
    }

    #[test]
    fn brute_force_respects_bounds() {
        let search = ScalarSearchConfig::default().with_grid_points(64);
        for n in [0.05, 0.5, 2.0] {
            let m = model(n, 0.0, 0.0);
            let brute = brute_force_tree_error(2, &m, &search).unwrap();
            assert!(brute >= helstrom_error(2, n).unwrap() - 1e-9);
            let cpn = crate::bounds::cpn_error_optimized(2, &m, &ScalarSearchConfig::default())
                .unwrap()
                .p_error;
            let dd = crate::bounds::dd_error(2, &m).unwrap();
            let (greedy, _) =
                greedy_exact_optimized(2, &m, &ScalarSearchConfig::default()).unwrap();
            assert!(brute <= dd.min(cpn).min(greedy) + 1e-9);
        }
    }
}
