//! Receiver sweeps over a log-spaced photon-number grid.

use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    cpn_error, cpn_error_optimized, dd_error, greedy_strong_pulse_limit, helstrom_error,
};
use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::exact::{
    default_dp_grid, greedy_exact_error, greedy_exact_optimized, greedy_lut_optimized,
    optimal_adaptive_error, DEFAULT_EXACT_CAP,
};
use crate::greedy::build_policy_table;
use crate::montecarlo::{simulate, ReceiverConfig, SimConfig, DEFAULT_TRIALS};
use crate::record::{EvalMethod, ReceiverKind, SweepRecord};
use crate::search::{logspace, GridConfig, ScalarSearchConfig};

/// Largest order evaluated with the exact greedy tree in automatic mode.
pub const AUTO_EXACT_MAX_M: usize = 12;

/// Background noise used by the `fig5` preset. The deep-space link
/// parameters behind that scenario are not published in usable form, so
/// this value is a stand-in and should be overridden for real studies.
pub const FIG5_PLACEHOLDER_NB: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Exact tree for `M <= 12`, Monte Carlo above.
    #[default]
    Auto,
    Exact,
    MonteCarlo,
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "auto" => Ok(Backend::Auto),
            "exact" => Ok(Backend::Exact),
            "mc" | "monte_carlo" | "montecarlo" => Ok(Backend::MonteCarlo),
            other => Err(Error::config(format!("unknown backend '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Fig3a,
    Fig3b,
    Fig4a,
    Fig4b,
    Fig5,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Fig3a,
        Preset::Fig3b,
        Preset::Fig4a,
        Preset::Fig4b,
        Preset::Fig5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Fig3a => "fig3a",
            Preset::Fig3b => "fig3b",
            Preset::Fig4a => "fig4a",
            Preset::Fig4b => "fig4b",
            Preset::Fig5 => "fig5",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == key)
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown preset '{s}' (expected fig3a, fig3b, fig4a, fig4b or fig5)"
                ))
            })
    }
}

/// Log-spaced photon-number grid; `points == 0` is an empty sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonGrid {
    pub n_min: f64,
    pub n_max: f64,
    pub points: usize,
}

impl PhotonGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.points == 0 {
            return Ok(Vec::new());
        }
        logspace(self.n_min, self.n_max, self.points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub m: usize,
    pub grid: PhotonGrid,
    pub nb_values: Vec<f64>,
    pub delta_values: Vec<f64>,
    pub receivers: Vec<ReceiverKind>,
    pub backend: Backend,
    pub trials: u64,
    pub seed: u64,
    /// Fixed CPN displacement; `alpha` when unset.
    pub beta: Option<f64>,
    /// Fixed greedy initial displacement; optimized when unset.
    pub beta_in: Option<f64>,
    /// Ratio grid of the greedy policy table used by Monte Carlo.
    pub lut: GridConfig,
    pub dp_grid: GridConfig,
    pub search: ScalarSearchConfig,
}

impl SweepConfig {
    pub fn new(
        m: usize,
        grid: PhotonGrid,
        nb: f64,
        delta: f64,
        receivers: Vec<ReceiverKind>,
    ) -> Self {
        Self {
            m,
            grid,
            nb_values: vec![nb],
            delta_values: vec![delta],
            receivers,
            backend: Backend::Auto,
            trials: DEFAULT_TRIALS,
            seed: 0,
            beta: None,
            beta_in: None,
            lut: GridConfig::default(),
            dp_grid: default_dp_grid(),
            search: ScalarSearchConfig::default(),
        }
    }

    pub fn preset(preset: Preset) -> Self {
        use ReceiverKind::*;
        let fig3 = |nb| {
            let grid = PhotonGrid {
                n_min: 1e-2,
                n_max: 10.0,
                points: 16,
            };
            let mut cfg = SweepConfig::new(4, grid, nb, 0.0, vec![Dd, CpnOpt, Greedy, Optimal]);
            cfg.delta_values = vec![0.0, 0.1];
            cfg
        };
        match preset {
            Preset::Fig3a => fig3(0.002),
            Preset::Fig3b => fig3(0.2),
            Preset::Fig4a => SweepConfig::new(
                32,
                PhotonGrid {
                    n_min: 1e-2,
                    n_max: 20.0,
                    points: 16,
                },
                0.0,
                0.0,
                vec![Helstrom, Dd, CpnOpt, Greedy],
            ),
            Preset::Fig4b => {
                let grid = PhotonGrid {
                    n_min: 1.0,
                    n_max: 200.0,
                    points: 12,
                };
                let mut cfg = SweepConfig::new(
                    1024,
                    grid,
                    0.002,
                    0.0,
                    vec![Dd, CpnOpt, Greedy, GreedyLimit],
                );
                cfg.delta_values = vec![0.0, 0.01, 0.1];
                cfg
            }
            Preset::Fig5 => SweepConfig::new(
                128,
                PhotonGrid {
                    n_min: 1e-2,
                    n_max: 10.0,
                    points: 12,
                },
                FIG5_PLACEHOLDER_NB,
                0.1,
                vec![Helstrom, Dd, CpnOpt, Greedy],
            ),
        }
    }

    fn greedy_method(&self) -> Result<EvalMethod> {
        match self.backend {
            Backend::Exact if self.m > DEFAULT_EXACT_CAP => Err(Error::Capacity(format!(
                "the exact greedy backend enumerates 2^M outcomes and is limited to M <= {DEFAULT_EXACT_CAP}; \
                 M={} needs the Monte Carlo backend",
                self.m
            ))),
            Backend::Exact => Ok(EvalMethod::Exact),
            Backend::MonteCarlo => Ok(EvalMethod::Mc),
            Backend::Auto if self.m <= AUTO_EXACT_MAX_M => Ok(EvalMethod::Exact),
            Backend::Auto => Ok(EvalMethod::Mc),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::config("PPM order must be >= 1"));
        }
        if self.receivers.is_empty() {
            return Err(Error::config("no receivers requested"));
        }
        if self.receivers.contains(&ReceiverKind::Greedy) {
            self.greedy_method()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Task {
    n: f64,
    nb: f64,
    delta: f64,
    receiver: ReceiverKind,
    index: u64,
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `index`-th evaluation of a sweep seeded with `seed`.
pub fn point_seed(seed: u64, index: u64) -> u64 {
    mix(seed ^ mix(index))
}

/// Evaluates every requested receiver at every grid point.
///
/// Rows are ordered by `(N_b, delta, n, receiver)` in the order given in
/// the configuration and values are quantized to their written precision,
/// so the output is a pure function of the configuration.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    let ns = config.grid.values()?;
    let mut tasks = Vec::new();
    for &nb in &config.nb_values {
        for &delta in &config.delta_values {
            for &n in &ns {
                for &receiver in &config.receivers {
                    let index = tasks.len() as u64;
                    tasks.push(Task {
                        n,
                        nb,
                        delta,
                        receiver,
                        index,
                    });
                }
            }
        }
    }
    tasks
        .par_iter()
        .map(|t| evaluate(config, t).map(|r| r.quantized()))
        .collect()
}

fn evaluate(config: &SweepConfig, task: &Task) -> Result<SweepRecord> {
    let m = config.m;
    let params = ChannelParams::from_photons(task.n, task.nb, task.delta, m)?;
    let model = params.click_model();
    let alpha = params.alpha;
    let row = |method, beta, p_error| {
        SweepRecord::deterministic(
            task.receiver,
            method,
            m,
            task.n,
            task.nb,
            task.delta,
            beta,
            p_error,
        )
    };
    Ok(match task.receiver {
        ReceiverKind::Helstrom => row(EvalMethod::Formula, None, helstrom_error(m, task.n)?),
        ReceiverKind::Dd => row(EvalMethod::Formula, None, dd_error(m, &model)?),
        ReceiverKind::Cpn => {
            let beta = config.beta.unwrap_or(alpha);
            row(EvalMethod::Formula, Some(beta), cpn_error(m, beta, &model)?)
        }
        ReceiverKind::CpnOpt => {
            let r = cpn_error_optimized(m, &model, &config.search)?;
            row(EvalMethod::Formula, r.beta_used, r.p_error)
        }
        ReceiverKind::GreedyLimit => row(
            EvalMethod::Formula,
            Some(alpha),
            greedy_strong_pulse_limit(m, &model)?,
        ),
        ReceiverKind::Optimal => row(
            EvalMethod::Dp,
            None,
            optimal_adaptive_error(m, &model, &config.dp_grid, &config.search)?,
        ),
        ReceiverKind::Greedy => match config.greedy_method()? {
            EvalMethod::Exact => {
                let (p, beta_in) = match config.beta_in {
                    Some(b) => (greedy_exact_error(m, b, &model, &config.search)?, b),
                    None => greedy_exact_optimized(m, &model, &config.search)?,
                };
                row(EvalMethod::Exact, Some(beta_in), p)
            }
            _ => {
                let table = Arc::new(
                    build_policy_table(&model, &config.lut, &config.search)?.with_params(params),
                );
                let beta_in = match config.beta_in {
                    Some(b) => b,
                    None => greedy_lut_optimized(m, &table, &model, &config.search)?.1,
                };
                let seed = point_seed(config.seed, task.index);
                let sim = simulate(
                    &params,
                    &SimConfig {
                        trials: config.trials,
                        master_seed: seed,
                        receiver: ReceiverConfig::Greedy {
                            beta_in,
                            table: Some(table),
                        },
                    },
                )?;
                SweepRecord {
                    sigma: sim.sigma,
                    trials: sim.trials,
                    seed: Some(seed),
                    ..row(EvalMethod::Mc, Some(beta_in), sim.p_error_hat)
                }
            }
        },
    })
}
