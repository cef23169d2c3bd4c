//! Block-fading Rician channels with AR(1) diffuse components, MMSE
//! prediction of future channel power, and the analog receive primitives.
//!
//! Devices pre-compensate their channel phase, so transmission is modeled
//! with real vectors against the real gain `h = |g|`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{self, SimRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("invalid channel parameter: {0}")]
    Invalid(String),
    #[error("device {device} transmits energy {energy} above budget {budget}")]
    PowerViolation { device: usize, energy: f64, budget: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

pub type Result<T> = std::result::Result<T, ChannelError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Rice factor; `f64::INFINITY` gives a pure line-of-sight channel.
    pub rice_factor: f64,
    /// Block-to-block correlation of the diffuse component.
    pub correlation: f64,
    /// Noise power per channel use.
    pub noise_power: f64,
    /// Per-device energy budget for one block.
    pub power_budget: f64,
    /// Channel uses per block.
    pub block_len: usize,
}

impl ChannelParams {
    pub fn new(rice_factor: f64, correlation: f64, noise_power: f64, power_budget: f64, block_len: usize) -> Result<Self> {
        if !(rice_factor >= 0.0) {
            return Err(ChannelError::Invalid(format!("rice factor {rice_factor} must be >= 0")));
        }
        if !(0.0..=1.0).contains(&correlation) {
            return Err(ChannelError::Invalid(format!("correlation {correlation} outside [0, 1]")));
        }
        if !(noise_power > 0.0) || !(power_budget > 0.0) || block_len == 0 {
            return Err(ChannelError::Invalid("noise power, power budget and block length must be positive".into()));
        }
        Ok(Self { rice_factor, correlation, noise_power, power_budget, block_len })
    }

    /// Budget from a maximum SNR in dB: `P = 10^(snr/10) * d * N0`.
    pub fn from_snr_db(rice_factor: f64, correlation: f64, noise_power: f64, snr_db: f64, block_len: usize) -> Result<Self> {
        let budget = 10f64.powf(snr_db / 10.0) * block_len as f64 * noise_power;
        Self::new(rice_factor, correlation, noise_power, budget, block_len)
    }

    pub fn snr_max(&self) -> f64 {
        self.power_budget / (self.block_len as f64 * self.noise_power)
    }

    fn los_weights(&self) -> (f64, f64) {
        if self.rice_factor.is_infinite() {
            (1.0, 0.0)
        } else {
            let k = self.rice_factor;
            ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
        }
    }
}

/// One device's channel state. Owns its sampling stream.
#[derive(Debug, Clone)]
pub struct FadingProcess {
    params: ChannelParams,
    diffuse: Complex64,
    rng: SimRng,
}

impl FadingProcess {
    /// Draws the diffuse component from its stationary `CN(0, 1)` law.
    pub fn new(params: ChannelParams, mut rng: SimRng) -> Self {
        let diffuse = rng.complex_normal();
        Self { params, diffuse, rng }
    }

    pub fn gain(&self) -> Complex64 {
        let (los, scatter) = self.params.los_weights();
        Complex64::new(los, 0.0) + scatter * self.diffuse
    }

    pub fn magnitude(&self) -> f64 {
        self.gain().norm()
    }

    /// Moves to the next block and returns its gain magnitude.
    pub fn advance(&mut self) -> f64 {
        let rho = self.params.correlation;
        if rho < 1.0 {
            let innovation = self.rng.complex_normal();
            self.diffuse = rho * self.diffuse + (1.0 - rho * rho).sqrt() * innovation;
        }
        self.magnitude()
    }

    pub fn diffuse(&self) -> Complex64 {
        self.diffuse
    }
}

/// How future channel power is predicted from the current gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerPredictor {
    /// Exact `E[|g_{i+lag}|^2 | g_i]` under the AR(1) Rician model.
    #[default]
    ConditionalMean,
    /// `(kappa + rho^{2 lag})/(kappa + 1) |g|^2 + (1 - rho^{2 lag})/(kappa + 1)`.
    ///
    /// Agrees with the conditional mean when `rho = 1` or `kappa` is 0 or
    /// infinite, and is biased otherwise because it ignores the
    /// line-of-sight term's pull towards its mean.
    ClosedForm,
}

impl PowerPredictor {
    pub fn predict(self, g_now: Complex64, params: &ChannelParams, lag: usize) -> f64 {
        match self {
            Self::ConditionalMean => predict_power(g_now, params, lag),
            Self::ClosedForm => predict_power_closed_form(g_now, params, lag),
        }
    }
}

/// Conditional mean of `|g|^2` `lag` blocks ahead of the current gain `g_now`:
/// `|rho^lag g + (1 - rho^lag) a|^2 + (1 - rho^{2 lag})/(kappa + 1)` with `a` the
/// line-of-sight amplitude.
pub fn predict_power(g_now: Complex64, params: &ChannelParams, lag: usize) -> f64 {
    let (los, scatter) = params.los_weights();
    let decay = params.correlation.powi(lag as i32);
    let mean = decay * g_now + (1.0 - decay) * los;
    mean.norm_sqr() + scatter * scatter * (1.0 - decay * decay)
}

pub fn predict_power_closed_form(g_now: Complex64, params: &ChannelParams, lag: usize) -> f64 {
    let current = g_now.norm_sqr();
    if params.rice_factor.is_infinite() {
        return current;
    }
    let k = params.rice_factor;
    let decay = params.correlation.powi(2 * lag as i32);
    (k + decay) / (k + 1.0) * current + (1.0 - decay) / (k + 1.0)
}

fn check_energy(x: &[f64], budget: f64, device: usize) -> Result<()> {
    let energy = numerics::dot(x, x);
    if energy > budget + 1e-9 * budget.max(1.0) {
        return Err(ChannelError::PowerViolation { device, energy, budget });
    }
    Ok(())
}

/// `y = h x + z` with `z ~ N(0, noise_power I)`.
pub fn oma_receive(x: &[f64], h: f64, noise_power: f64, budget: f64, rng: &mut SimRng) -> Result<Vec<f64>> {
    check_energy(x, budget, 0)?;
    let std = noise_power.sqrt();
    Ok(x.iter().map(|xi| h * xi + rng.gauss(0.0, std)).collect())
}

/// `y = sum_k h_k x_k + z`.
pub fn noma_receive(xs: &[Vec<f64>], hs: &[f64], noise_power: f64, budget: f64, rng: &mut SimRng) -> Result<Vec<f64>> {
    if xs.len() != hs.len() || xs.is_empty() {
        return Err(ChannelError::Dimension(format!("{} signals, {} gains", xs.len(), hs.len())));
    }
    let d = xs[0].len();
    let mut y = vec![0.0; d];
    for (k, (x, &h)) in xs.iter().zip(hs).enumerate() {
        if x.len() != d {
            return Err(ChannelError::Dimension(format!("device {k} sends {} entries, expected {d}", x.len())));
        }
        check_energy(x, budget, k)?;
        y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += h * xi);
    }
    let std = noise_power.sqrt();
    y.iter_mut().for_each(|yi| *yi += rng.gauss(0.0, std));
    Ok(y)
}
