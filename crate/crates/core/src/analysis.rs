//! Scaling fits and decibel gaps over sweep records.

use std::collections::BTreeMap;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bounds::greedy_strong_pulse_limit;
use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::record::{format_sig, EvalMethod, ReceiverKind, SweepRecord};

/// Fewest points a fit window may hold.
pub const MIN_FIT_POINTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    /// Slope of `ln((M-1)/M - P_e)` against `ln n`.
    PhotonStarved,
    /// Median of the tail compared with the strong-pulse limit.
    StrongPulse,
}

impl FromStr for FitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "photon_starved" => Ok(FitMode::PhotonStarved),
            "strong_pulse" => Ok(FitMode::StrongPulse),
            other => Err(Error::config(format!("unknown fit mode '{other}'"))),
        }
    }
}

/// Inclusive photon-number window of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub n_min: f64,
    pub n_max: f64,
}

impl FitWindow {
    pub const PHOTON_STARVED: FitWindow = FitWindow {
        n_min: 1e-3,
        n_max: 1e-1,
    };
    pub const ALL: FitWindow = FitWindow {
        n_min: 0.0,
        n_max: f64::INFINITY,
    };

    pub fn contains(&self, n: f64) -> bool {
        n >= self.n_min && n <= self.n_max
    }
}

/// Power-law fit `(M-1)/M - P_e ~ prefactor * n^slope`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub receiver: ReceiverKind,
    pub method: EvalMethod,
    pub m: usize,
    pub nb: f64,
    pub delta: f64,
    pub points: usize,
    pub slope: f64,
    pub prefactor: f64,
    pub r_squared: f64,
}

/// Plateau level of the tail and the strong-pulse limit at the same points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauFit {
    pub receiver: ReceiverKind,
    pub method: EvalMethod,
    pub m: usize,
    pub nb: f64,
    pub delta: f64,
    pub points: usize,
    pub plateau: f64,
    pub limit: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitReport {
    PhotonStarved(Vec<SlopeFit>),
    StrongPulse(Vec<PlateauFit>),
}

impl FitReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        match self {
            FitReport::PhotonStarved(fits) => {
                w.write_record([
                    "receiver",
                    "method",
                    "m",
                    "nb",
                    "delta",
                    "points",
                    "slope",
                    "prefactor",
                    "r_squared",
                ])?;
                for f in fits {
                    w.write_record([
                        f.receiver.to_string(),
                        f.method.to_string(),
                        f.m.to_string(),
                        format_sig(f.nb),
                        format_sig(f.delta),
                        f.points.to_string(),
                        format_sig(f.slope),
                        format_sig(f.prefactor),
                        format_sig(f.r_squared),
                    ])?;
                }
            }
            FitReport::StrongPulse(fits) => {
                w.write_record([
                    "receiver", "method", "m", "nb", "delta", "points", "plateau", "limit", "ratio",
                ])?;
                for f in fits {
                    w.write_record([
                        f.receiver.to_string(),
                        f.method.to_string(),
                        f.m.to_string(),
                        format_sig(f.nb),
                        format_sig(f.delta),
                        f.points.to_string(),
                        format_sig(f.plateau),
                        format_sig(f.limit),
                        format_sig(f.ratio),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

type SeriesKey = (ReceiverKind, EvalMethod, usize, u64, u64);

/// Splits records into curves of one receiver and channel, in order of
/// first appearance, each sorted by `n` and restricted to `window`.
fn series(records: &[SweepRecord], window: FitWindow) -> Vec<(SeriesKey, Vec<SweepRecord>)> {
    let mut order: Vec<SeriesKey> = Vec::new();
    let mut groups: BTreeMap<SeriesKey, Vec<SweepRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| window.contains(r.n)) {
        let key = (r.receiver, r.method, r.m, r.nb.to_bits(), r.delta.to_bits());
        groups.entry(key).or_insert_with(|| {
            order.push(key);
            Vec::new()
        });
        groups.get_mut(&key).unwrap().push(*r);
    }
    order
        .into_iter()
        .map(|key| {
            let mut rows = groups.remove(&key).unwrap();
            rows.sort_by(|a, b| a.n.total_cmp(&b.n));
            (key, rows)
        })
        .collect()
}

/// Rejects curves whose error rises with `n` by more than the combined
/// three-sigma bars of neighbouring points.
fn check_monotone(rows: &[SweepRecord]) -> Result<()> {
    for w in rows.windows(2) {
        let slack = 3.0 * (w[0].sigma + w[1].sigma) + 1e-12 * w[0].p_error.max(1e-300);
        if w[1].p_error > w[0].p_error + slack {
            return Err(Error::Diagnostic(format!(
                "{} error increases with n: {} at n={} then {} at n={}",
                w[0].receiver, w[0].p_error, w[0].n, w[1].p_error, w[1].n
            )));
        }
    }
    Ok(())
}

fn check_count(rows: &[SweepRecord]) -> Result<()> {
    if rows.len() < MIN_FIT_POINTS {
        return Err(Error::domain(format!(
            "{} series at M={} has {} points in the fit window, need at least {MIN_FIT_POINTS}",
            rows[0].receiver,
            rows[0].m,
            rows.len()
        )));
    }
    Ok(())
}

/// Ordinary least squares `y = a + b x`; returns `(a, b, r^2)`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    (my - slope * mx, slope, r2)
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

/// Fits every receiver curve found in `records` inside `window`.
pub fn fit_scaling(records: &[SweepRecord], mode: FitMode, window: FitWindow) -> Result<FitReport> {
    let groups = series(records, window);
    match mode {
        FitMode::PhotonStarved => groups
            .iter()
            .map(|(_, rows)| fit_slope(rows))
            .collect::<Result<_>>()
            .map(FitReport::PhotonStarved),
        FitMode::StrongPulse => groups
            .iter()
            .map(|(_, rows)| fit_plateau(rows))
            .collect::<Result<_>>()
            .map(FitReport::StrongPulse),
    }
}

fn fit_slope(rows: &[SweepRecord]) -> Result<SlopeFit> {
    check_count(rows)?;
    check_monotone(rows)?;
    let head = rows[0];
    let guess = (head.m as f64 - 1.0) / head.m as f64;
    let mut x = Vec::with_capacity(rows.len());
    let mut y = Vec::with_capacity(rows.len());
    for r in rows {
        let gain = guess - r.p_error;
        if !(gain > 0.0 && r.n > 0.0) {
            return Err(Error::Diagnostic(format!(
                "{} at n={} is not below the guessing error (P_e={})",
                r.receiver, r.n, r.p_error
            )));
        }
        x.push(r.n.ln());
        y.push(gain.ln());
    }
    let (intercept, slope, r_squared) = least_squares(&x, &y);
    Ok(SlopeFit {
        receiver: head.receiver,
        method: head.method,
        m: head.m,
        nb: head.nb,
        delta: head.delta,
        points: rows.len(),
        slope,
        prefactor: intercept.exp(),
        r_squared,
    })
}

fn fit_plateau(rows: &[SweepRecord]) -> Result<PlateauFit> {
    check_count(rows)?;
    check_monotone(rows)?;
    let head = rows[0];
    let mut levels: Vec<f64> = rows.iter().map(|r| r.p_error).collect();
    let mut limits = rows
        .iter()
        .map(|r| {
            let params = ChannelParams::from_photons(r.n, r.nb, r.delta, r.m)?;
            greedy_strong_pulse_limit(r.m, &params.click_model())
        })
        .collect::<Result<Vec<f64>>>()?;
    let plateau = median(&mut levels);
    let limit = median(&mut limits);
    Ok(PlateauFit {
        receiver: head.receiver,
        method: head.method,
        m: head.m,
        nb: head.nb,
        delta: head.delta,
        points: rows.len(),
        plateau,
        limit,
        ratio: plateau / limit,
    })
}

/// Ratio of two error probabilities in decibels, `10 log10(p1 / p2)`.
pub fn db_gap(p1: f64, p2: f64) -> Result<f64> {
    for p in [p1, p2] {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::domain(format!(
                "error probabilities must lie in (0, 1], got {p}"
            )));
        }
    }
    Ok(10.0 * (p1 / p2).log10())
}

/// First-order standard error of [`db_gap`] from independent errors.
pub fn db_gap_sigma(p1: f64, sigma1: f64, p2: f64, sigma2: f64) -> f64 {
    10.0 / std::f64::consts::LN_10 * ((sigma1 / p1).powi(2) + (sigma2 / p2).powi(2)).sqrt()
}

/// Gap of one receiver to a reference curve at one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbGapRow {
    pub receiver: ReceiverKind,
    pub reference: ReceiverKind,
    pub m: usize,
    pub n: f64,
    pub nb: f64,
    pub delta: f64,
    pub p_error: f64,
    pub p_reference: f64,
    pub gap_db: f64,
    pub sigma_db: f64,
}

/// Gaps of every non-reference row to the reference row at the same
/// `(M, n, N_b, delta)`. Points without a reference row are skipped.
pub fn db_gap_report(records: &[SweepRecord], reference: ReceiverKind) -> Result<Vec<DbGapRow>> {
    let point = |r: &SweepRecord| (r.m, r.n.to_bits(), r.nb.to_bits(), r.delta.to_bits());
    let refs: BTreeMap<_, &SweepRecord> = records
        .iter()
        .filter(|r| r.receiver == reference)
        .map(|r| (point(r), r))
        .collect();
    let mut rows = Vec::new();
    for r in records.iter().filter(|r| r.receiver != reference) {
        let Some(base) = refs.get(&point(r)) else {
            continue;
        };
        rows.push(DbGapRow {
            receiver: r.receiver,
            reference,
            m: r.m,
            n: r.n,
            nb: r.nb,
            delta: r.delta,
            p_error: r.p_error,
            p_reference: base.p_error,
            gap_db: db_gap(r.p_error, base.p_error)?,
            sigma_db: db_gap_sigma(r.p_error, r.sigma, base.p_error, base.sigma),
        });
    }
    Ok(rows)
}

pub fn write_db_gaps<W: Write>(out: W, rows: &[DbGapRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record([
        "receiver",
        "reference",
        "m",
        "n",
        "nb",
        "delta",
        "p_error",
        "p_reference",
        "gap_db",
        "sigma_db",
    ])?;
    for r in rows {
        w.write_record([
            r.receiver.to_string(),
            r.reference.to_string(),
            r.m.to_string(),
            format_sig(r.n),
            format_sig(r.nb),
            format_sig(r.delta),
            format_sig(r.p_error),
            format_sig(r.p_reference),
            format_sig(r.gap_db),
            format_sig(r.sigma_db),
        ])?;
    }
    w.flush()?;
    Ok(())
}
