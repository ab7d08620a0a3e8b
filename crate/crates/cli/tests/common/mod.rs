//! Independent oracles that enumerate every click/no-click pattern.
#![allow(dead_code)]

use ppmrx_core::ClickModel;

/// Probability of one slot outcome.
fn slot_prob(model: &impl ClickModel, beta: f64, is_pulse: bool, clicked: bool) -> f64 {
    match (is_pulse, clicked) {
        (true, true) => 1.0 - model.p(beta),
        (true, false) => model.p(beta),
        (false, true) => 1.0 - model.q(beta),
        (false, false) => model.q(beta),
    }
}

/// Probability that a uniform choice among `candidates` hits `x`.
fn hit(candidates: &[usize], x: usize) -> f64 {
    if candidates.contains(&x) {
        1.0 / candidates.len() as f64
    } else {
        0.0
    }
}

/// Direct detection: all slots undisplaced; uniform among clicked slots,
/// uniform over all slots when nothing clicked.
pub fn dd_enumerated(m: usize, model: &impl ClickModel) -> f64 {
    let mut correct = 0.0;
    for x in 0..m {
        for pattern in 0u64..(1 << m) {
            let clicked: Vec<bool> = (0..m).map(|j| pattern >> j & 1 == 1).collect();
            let prob: f64 = (0..m)
                .map(|j| slot_prob(model, 0.0, j == x, clicked[j]))
                .product();
            let clicks: Vec<usize> = (0..m).filter(|&j| clicked[j]).collect();
            let p_hit = if clicks.is_empty() {
                1.0 / m as f64
            } else {
                hit(&clicks, x)
            };
            correct += prob * p_hit / m as f64;
        }
    }
    1.0 - correct
}

/// Conditional pulse nulling: displace by `beta` until the first no-click
/// at slot k, then detect the rest undisplaced. Output k if nothing clicks
/// afterwards, a uniform pick among later clicks otherwise, and a uniform
/// guess when no switchover happens.
pub fn cpn_enumerated(m: usize, beta: f64, model: &impl ClickModel) -> f64 {
    let mut correct = 0.0;
    for x in 0..m {
        for pattern in 0u64..(1 << m) {
            let clicked: Vec<bool> = (0..m).map(|j| pattern >> j & 1 == 1).collect();
            let switchover = (0..m).find(|&j| !clicked[j]);
            let mut prob = 1.0;
            for j in 0..m {
                let displacement = match switchover {
                    Some(k) if j > k => 0.0,
                    _ => beta,
                };
                prob *= slot_prob(model, displacement, j == x, clicked[j]);
            }
            let p_hit = match switchover {
                None => 1.0 / m as f64,
                Some(k) => {
                    let later: Vec<usize> = (k + 1..m).filter(|&j| clicked[j]).collect();
                    if later.is_empty() {
                        if k == x {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        hit(&later, x)
                    }
                }
            };
            correct += prob * p_hit / m as f64;
        }
    }
    1.0 - correct
}
