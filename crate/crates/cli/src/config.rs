//! Parameter file and flag merging.

use std::path::Path;

use ppmrx_core::sweep::PhotonGrid;
use ppmrx_core::{ChannelParams, Error, Result};
use serde::Deserialize;

use crate::cli::{ChannelArgs, Format, GridArgs, OutputArgs};

/// Grid size used when only the photon-number bounds are given.
pub const DEFAULT_N_POINTS: usize = 12;

/// Values accepted in a `--config` TOML file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub m: Option<usize>,
    pub n: Option<f64>,
    pub alpha: Option<f64>,
    pub nb: Option<f64>,
    pub delta: Option<f64>,
    pub n_min: Option<f64>,
    pub n_max: Option<f64>,
    pub n_points: Option<usize>,
    pub beta: Option<f64>,
    pub beta_in: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub preset: Option<String>,
    pub receivers: Option<Vec<String>>,
    pub backend: Option<String>,
    pub lut_points: Option<usize>,
    pub dp_points: Option<usize>,
    pub format: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| Error::Config(format!("invalid config file {}: {e}", path.display())))
    }
}

/// Channel parameters after merging flags over the file.
#[derive(Debug, Clone, Copy)]
pub struct Channel {
    pub m: Option<usize>,
    pub alpha: Option<f64>,
    pub nb: f64,
    pub delta: f64,
}

impl Channel {
    pub fn resolve(args: &ChannelArgs, file: &FileConfig) -> Result<Self> {
        if file.n.is_some() && file.alpha.is_some() {
            return Err(Error::Config("config file sets both n and alpha".into()));
        }
        let alpha = match (args.n, args.alpha) {
            (Some(n), _) => Some(amplitude(n)?),
            (None, Some(a)) => Some(a),
            (None, None) => match (file.n, file.alpha) {
                (Some(n), _) => Some(amplitude(n)?),
                (None, a) => a,
            },
        };
        Ok(Self {
            m: args.m.or(file.m),
            alpha,
            nb: args.nb.or(file.nb).unwrap_or(0.0),
            delta: args.delta.or(file.delta).unwrap_or(0.0),
        })
    }

    pub fn order(&self) -> Result<usize> {
        self.m
            .ok_or_else(|| Error::Config("the PPM order --m is required".into()))
    }

    pub fn amplitude(&self) -> Result<f64> {
        self.alpha
            .ok_or_else(|| Error::Config("the signal strength (--n or --alpha) is required".into()))
    }

    pub fn params(&self) -> Result<ChannelParams> {
        ChannelParams::new(self.amplitude()?, self.nb, self.delta, self.order()?).map_err(as_config)
    }

    /// Parameters for commands that do not depend on the PPM order.
    pub fn params_any_order(&self) -> Result<ChannelParams> {
        ChannelParams::new(self.amplitude()?, self.nb, self.delta, self.m.unwrap_or(1))
            .map_err(as_config)
    }
}

fn amplitude(n: f64) -> Result<f64> {
    if n.is_finite() && n >= 0.0 {
        Ok(n.sqrt())
    } else {
        Err(Error::Config(format!(
            "photon number must be finite and >= 0, got {n}"
        )))
    }
}

/// Invalid user-supplied values are configuration errors.
pub fn as_config(e: Error) -> Error {
    match e {
        Error::Domain(msg) => Error::Config(msg),
        other => other,
    }
}

/// Photon-number grid from grid flags or file keys, falling back to the
/// single operating point given by `--n` / `--alpha`.
pub fn photon_grid(grid: &GridArgs, channel: &Channel, file: &FileConfig) -> Result<PhotonGrid> {
    let n_min = grid.n_min.or(file.n_min);
    let n_max = grid.n_max.or(file.n_max);
    let points = grid.n_points.or(file.n_points);
    if n_min.is_none() && n_max.is_none() && points.is_none() {
        let alpha = channel.amplitude().map_err(|_| {
            Error::Config(
                "give either a photon-number grid (--n-min/--n-max) or a single --n".into(),
            )
        })?;
        let n = alpha * alpha;
        return Ok(PhotonGrid {
            n_min: n,
            n_max: n,
            points: 1,
        });
    }
    let points = points.unwrap_or(DEFAULT_N_POINTS);
    match (n_min, n_max) {
        (Some(lo), Some(hi)) => {
            let g = PhotonGrid {
                n_min: lo,
                n_max: hi,
                points,
            };
            g.values().map_err(as_config)?;
            Ok(g)
        }
        _ if points == 0 => Ok(PhotonGrid {
            n_min: 1.0,
            n_max: 1.0,
            points: 0,
        }),
        _ => Err(Error::Config(
            "both --n-min and --n-max are required for a grid".into(),
        )),
    }
}

pub fn output_format(output: &OutputArgs, file: &FileConfig) -> Result<Format> {
    if let Some(f) = output.format {
        return Ok(f);
    }
    match file
        .format
        .as_deref()
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        None | Some("csv") => Ok(Format::Csv),
        Some("json") | Some("jsonl") => Ok(Format::Json),
        Some(other) => Err(Error::Config(format!("unknown output format '{other}'"))),
    }
}
