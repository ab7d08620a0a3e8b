//! Sweep output rows and their CSV / JSON-lines serialization.
//!
//! Floating-point columns are written with 9 significant digits, so a
//! written file reads back as the quantized record, not the original.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SIGNIFICANT_DIGITS: usize = 9;

pub const CSV_HEADER: [&str; 11] = [
    "receiver", "m", "n", "nb", "delta", "beta", "p_error", "sigma", "trials", "seed", "method",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverKind {
    Helstrom,
    Dd,
    Cpn,
    CpnOpt,
    Greedy,
    GreedyLimit,
    Optimal,
}

impl ReceiverKind {
    pub const ALL: [ReceiverKind; 7] = [
        ReceiverKind::Helstrom,
        ReceiverKind::Dd,
        ReceiverKind::Cpn,
        ReceiverKind::CpnOpt,
        ReceiverKind::Greedy,
        ReceiverKind::GreedyLimit,
        ReceiverKind::Optimal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReceiverKind::Helstrom => "helstrom",
            ReceiverKind::Dd => "dd",
            ReceiverKind::Cpn => "cpn",
            ReceiverKind::CpnOpt => "cpn_opt",
            ReceiverKind::Greedy => "greedy",
            ReceiverKind::GreedyLimit => "greedy_limit",
            ReceiverKind::Optimal => "optimal",
        }
    }
}

impl fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReceiverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == key)
            .ok_or_else(|| Error::config(format!("unknown receiver '{s}'")))
    }
}

/// How a value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMethod {
    /// Closed-form or finite-sum formula.
    Formula,
    /// Exact enumeration of the greedy decision tree.
    Exact,
    /// Monte Carlo simulation.
    Mc,
    /// Dynamic program over the posterior ratio.
    Dp,
    /// Brute-force optimization over the full decision tree.
    Brute,
}

impl EvalMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalMethod::Formula => "formula",
            EvalMethod::Exact => "exact",
            EvalMethod::Mc => "mc",
            EvalMethod::Dp => "dp",
            EvalMethod::Brute => "brute",
        }
    }
}

impl fmt::Display for EvalMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub receiver: ReceiverKind,
    pub m: usize,
    pub n: f64,
    pub nb: f64,
    pub delta: f64,
    /// Displacement used: `beta` for CPN, `beta_in` for greedy.
    pub beta: Option<f64>,
    pub p_error: f64,
    /// Monte Carlo standard error; zero for deterministic methods.
    pub sigma: f64,
    /// Monte Carlo trial count; zero for deterministic methods.
    pub trials: u64,
    pub seed: Option<u64>,
    pub method: EvalMethod,
}

impl SweepRecord {
    pub fn deterministic(
        receiver: ReceiverKind,
        method: EvalMethod,
        m: usize,
        n: f64,
        nb: f64,
        delta: f64,
        beta: Option<f64>,
        p_error: f64,
    ) -> Self {
        Self {
            receiver,
            m,
            n,
            nb,
            delta,
            beta,
            p_error,
            sigma: 0.0,
            trials: 0,
            seed: None,
            method,
        }
    }

    /// The record as it reads back after being written.
    pub fn quantized(&self) -> Self {
        Self {
            n: quantize(self.n),
            nb: quantize(self.nb),
            delta: quantize(self.delta),
            beta: self.beta.map(quantize),
            p_error: quantize(self.p_error),
            sigma: quantize(self.sigma),
            ..*self
        }
    }

    fn csv_fields(&self) -> [String; 11] {
        [
            self.receiver.to_string(),
            self.m.to_string(),
            format_sig(self.n),
            format_sig(self.nb),
            format_sig(self.delta),
            self.beta.map(format_sig).unwrap_or_default(),
            format_sig(self.p_error),
            format_sig(self.sigma),
            self.trials.to_string(),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            self.method.to_string(),
        ]
    }
}

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn quantize(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

/// Shortest decimal text of `quantize(x)`; exponent form outside `[1e-4, 1e9)`.
pub fn format_sig(x: f64) -> String {
    let q = quantize(x);
    if q == 0.0 || !q.is_finite() || (1e-4..1e9).contains(&q.abs()) {
        format!("{q}")
    } else {
        format!("{q:e}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" | "jsonl" => Ok(OutputFormat::Json),
            other => Err(Error::config(format!("unknown output format '{other}'"))),
        }
    }
}

/// Writes records as CSV with a single header line and LF line endings.
pub fn write_csv<W: Write>(out: W, records: &[SweepRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.csv_fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one JSON object per line with quantized values.
pub fn write_json_lines<W: Write>(mut out: W, records: &[SweepRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, &r.quantized())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_records<W: Write>(
    out: W,
    records: &[SweepRecord],
    format: OutputFormat,
) -> Result<()> {
    match format {
        OutputFormat::Csv => write_csv(out, records),
        OutputFormat::Json => write_json_lines(out, records),
    }
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<SweepRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.iter().ne(CSV_HEADER) {
        return Err(Error::config(format!(
            "unexpected CSV header: {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn read_json_lines<R: BufRead>(input: R) -> Result<Vec<SweepRecord>> {
    let mut records = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            records.push(serde_json::from_str(&line)?);
        }
    }
    Ok(records)
}

/// Reads either format, choosing JSON when the first non-blank byte is `{`.
pub fn read_records<R: BufRead>(mut input: R) -> Result<Vec<SweepRecord>> {
    let first = input
        .fill_buf()?
        .iter()
        .find(|b| !b.is_ascii_whitespace())
        .copied();
    if first == Some(b'{') {
        read_json_lines(input)
    } else {
        read_csv(input)
    }
}
