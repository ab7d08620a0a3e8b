//! Channel parameters and on/off click statistics of displaced slots.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical scenario of one PPM frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Real coherent amplitude of the pulse (photons^1/2).
    pub alpha: f64,
    /// Mean number of background photons per slot.
    pub n_b: f64,
    /// Mode mismatch between signal and displacement, in `[0, 1]`.
    pub delta: f64,
    /// PPM order.
    pub m: usize,
}

impl ChannelParams {
    pub fn new(alpha: f64, n_b: f64, delta: f64, m: usize) -> Result<Self> {
        let params = Self {
            alpha,
            n_b,
            delta,
            m,
        };
        params.validate()?;
        Ok(params)
    }

    /// Builds parameters from the mean signal photon number `n = alpha^2`.
    pub fn from_photons(n: f64, n_b: f64, delta: f64, m: usize) -> Result<Self> {
        if !(n.is_finite() && n >= 0.0) {
            return Err(Error::domain(format!(
                "photon number must be finite and >= 0, got {n}"
            )));
        }
        Self::new(n.sqrt(), n_b, delta, m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::domain(format!(
                "alpha must be finite and >= 0, got {}",
                self.alpha
            )));
        }
        if !(self.n_b.is_finite() && self.n_b >= 0.0) {
            return Err(Error::domain(format!(
                "nb must be finite and >= 0, got {}",
                self.n_b
            )));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::domain(format!(
                "delta must lie in [0, 1], got {}",
                self.delta
            )));
        }
        if self.m < 1 {
            return Err(Error::domain("PPM order must be >= 1"));
        }
        Ok(())
    }

    /// Mean signal photons per frame.
    pub fn photons(&self) -> f64 {
        self.alpha * self.alpha
    }

    /// Interference visibility `sqrt(1 - delta)`.
    pub fn visibility(&self) -> f64 {
        (1.0 - self.delta).sqrt()
    }

    pub fn click_model(&self) -> PoissonClickModel {
        PoissonClickModel::new(self)
    }

    /// True when the slot statistics (not the order) coincide.
    pub fn same_statistics(&self, other: &ChannelParams) -> bool {
        self.alpha == other.alpha && self.n_b == other.n_b && self.delta == other.delta
    }
}

/// No-click and click probabilities of one displaced slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotProbs {
    /// No-click probability of an empty slot.
    pub q: f64,
    /// Click probability of an empty slot.
    pub q_bar: f64,
    /// No-click probability of the pulse slot.
    pub p: f64,
    /// Click probability of the pulse slot.
    pub p_bar: f64,
}

/// Photodetection statistics of a displaced slot.
///
/// Receivers only ever see `q(beta)` and `p(beta)` (and their complements),
/// so any on/off detection model can be plugged in. Implementations should
/// override the complements when they can be computed without cancellation.
pub trait ClickModel: Sync {
    /// Nominal pulse amplitude; displacing by it nulls the pulse.
    fn amplitude(&self) -> f64;

    /// No-click probability of an empty slot displaced by `beta`.
    fn q(&self, beta: f64) -> f64;

    /// No-click probability of the pulse slot displaced by `beta`.
    fn p(&self, beta: f64) -> f64;

    fn q_bar(&self, beta: f64) -> f64 {
        1.0 - self.q(beta)
    }

    fn p_bar(&self, beta: f64) -> f64 {
        1.0 - self.p(beta)
    }

    fn probs(&self, beta: f64) -> SlotProbs {
        SlotProbs {
            q: self.q(beta),
            q_bar: self.q_bar(beta),
            p: self.p(beta),
            p_bar: self.p_bar(beta),
        }
    }
}

impl<T: ClickModel + ?Sized> ClickModel for &T {
    fn amplitude(&self) -> f64 {
        (**self).amplitude()
    }
    fn q(&self, beta: f64) -> f64 {
        (**self).q(beta)
    }
    fn p(&self, beta: f64) -> f64 {
        (**self).p(beta)
    }
    fn q_bar(&self, beta: f64) -> f64 {
        (**self).q_bar(beta)
    }
    fn p_bar(&self, beta: f64) -> f64 {
        (**self).p_bar(beta)
    }
    fn probs(&self, beta: f64) -> SlotProbs {
        (**self).probs(beta)
    }
}

/// Poissonian signal, displacement and background with mode mismatch.
///
/// An empty slot displaced by `beta` has mean photon number
/// `beta^2 + nb`; the pulse slot has
/// `(alpha - V beta)^2 + delta beta^2 + nb` with `V = sqrt(1 - delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonClickModel {
    alpha: f64,
    n_b: f64,
    delta: f64,
    visibility: f64,
}

impl PoissonClickModel {
    pub fn new(params: &ChannelParams) -> Self {
        Self {
            alpha: params.alpha,
            n_b: params.n_b,
            delta: params.delta,
            visibility: params.visibility(),
        }
    }

    /// Mean photon number reaching the detector from an empty slot.
    pub fn empty_mean(&self, beta: f64) -> f64 {
        beta * beta + self.n_b
    }

    /// Mean photon number reaching the detector from the pulse slot.
    pub fn pulse_mean(&self, beta: f64) -> f64 {
        let interfering = self.alpha - self.visibility * beta;
        interfering * interfering + self.delta * beta * beta + self.n_b
    }
}

impl ClickModel for PoissonClickModel {
    fn amplitude(&self) -> f64 {
        self.alpha
    }

    fn q(&self, beta: f64) -> f64 {
        (-self.empty_mean(beta)).exp()
    }

    fn p(&self, beta: f64) -> f64 {
        (-self.pulse_mean(beta)).exp()
    }

    fn q_bar(&self, beta: f64) -> f64 {
        -(-self.empty_mean(beta)).exp_m1()
    }

    fn p_bar(&self, beta: f64) -> f64 {
        -(-self.pulse_mean(beta)).exp_m1()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "displacement must be finite, got {beta}"
        )))
    }
}

/// Checked no-click probability of an empty slot.
pub fn q_prob(model: &impl ClickModel, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(model.q(beta))
}

/// Checked no-click probability of the pulse slot.
pub fn p_prob(model: &impl ClickModel, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(model.p(beta))
}
