//! One-step-ahead allocation: at each iteration, solve the offline problem
//! over the remaining horizon with predicted channels and gradient bounds,
//! then apply only the first scale.

use num_complex::Complex64;

use super::{solve_offline_noma, solve_offline_oma, NomaInputs, OmaInputs, PowerError, Result};
use crate::channel::{ChannelParams, PowerPredictor};
use crate::model::Curvature;

/// `||y|| / (h alpha D_k)`; `None` when the device was silent.
pub fn predict_bounds_oma(received_norm: f64, gain: f64, scale: f64, samples: f64) -> Option<f64> {
    let denom = gain * scale * samples;
    (denom > 0.0 && denom.is_finite()).then(|| received_norm / denom)
}

/// `||y|| / (c D_tot)`; `None` when the server broadcast a zero scale.
pub fn predict_bounds_noma(received_norm: f64, scale: f64, total_samples: f64) -> Option<f64> {
    let denom = scale * total_samples;
    (denom > 0.0 && denom.is_finite()).then(|| received_norm / denom)
}

/// Running local-gradient bound estimate, extrapolated as a constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPredictor {
    estimate: f64,
}

impl BoundPredictor {
    /// Starts at the clipping threshold, the estimate used before any feedback.
    pub fn new(initial: f64) -> Self {
        Self { estimate: initial }
    }

    pub fn estimate(&self) -> f64 {
        self.estimate
    }

    /// Keeps the previous estimate when `observed` is `None`.
    pub fn update(&mut self, observed: Option<f64>) {
        if let Some(g) = observed.filter(|g| *g > 0.0 && g.is_finite()) {
            self.estimate = g;
        }
    }

    pub fn horizon(&self, remaining: usize) -> Vec<f64> {
        vec![self.estimate; remaining]
    }
}

/// What one device knows at the start of an iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineOmaState {
    /// Unspent budget.
    pub residual: f64,
    /// Current complex channel coefficient.
    pub channel: Complex64,
    /// Iterations left, including this one.
    pub remaining: usize,
    /// Blocks between two of this device's transmissions.
    pub lag: usize,
    pub local_bound: f64,
    pub per_sample_bound: f64,
    pub samples: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineNomaState {
    pub residual: f64,
    /// Current coefficient of every device.
    pub channels: Vec<Complex64>,
    pub remaining: usize,
    /// Common bound estimate shared by all devices.
    pub local_bound: f64,
    pub per_sample_bound: f64,
    pub samples: Vec<f64>,
}

/// Smallest predicted channel gain; keeps the subproblem well posed when a
/// prediction collapses to zero.
const MIN_GAIN: f64 = 1e-12;

fn predicted_gains(g: Complex64, params: &ChannelParams, predictor: PowerPredictor, lag: usize, remaining: usize) -> Vec<f64> {
    (0..remaining)
        .map(|j| if j == 0 { g.norm() } else { predictor.predict(g, params, j * lag).sqrt() })
        .map(|h| h.max(MIN_GAIN))
        .collect()
}

fn check_state(residual: f64, remaining: usize) -> Result<()> {
    if remaining == 0 {
        return Err(PowerError::Invalid("no iterations left".into()));
    }
    if !(residual >= 0.0) {
        return Err(PowerError::Invalid(format!("residual budget must be non-negative, got {residual}")));
    }
    Ok(())
}

/// Scale `alpha_t` for this iteration; zero once the budget is gone.
pub fn online_step_oma(
    state: &OnlineOmaState,
    params: &ChannelParams,
    predictor: PowerPredictor,
    curvature: Curvature,
) -> Result<f64> {
    check_state(state.residual, state.remaining)?;
    if state.residual == 0.0 || state.channel.norm() == 0.0 {
        return Ok(0.0);
    }
    let inputs = OmaInputs {
        gains: predicted_gains(state.channel, params, predictor, state.lag, state.remaining),
        per_sample: vec![state.per_sample_bound; state.remaining],
        local: vec![state.local_bound; state.remaining],
        samples: state.samples,
        power_budget: params.power_budget,
        noise_power: params.noise_power,
        curvature,
        budget: state.residual,
    };
    Ok(solve_offline_oma(&inputs)?.scales[0])
}

/// Common scale `c_t` broadcast by the server.
pub fn online_step_noma(
    state: &OnlineNomaState,
    params: &ChannelParams,
    predictor: PowerPredictor,
    curvature: Curvature,
) -> Result<f64> {
    check_state(state.residual, state.remaining)?;
    if state.residual == 0.0 || state.channels.iter().any(|g| g.norm() == 0.0) {
        return Ok(0.0);
    }
    let inputs = NomaInputs {
        gains: state.channels.iter().map(|g| predicted_gains(*g, params, predictor, 1, state.remaining)).collect(),
        per_sample: vec![state.per_sample_bound; state.remaining],
        local: vec![vec![state.local_bound; state.remaining]; state.channels.len()],
        samples: state.samples.clone(),
        power_budget: params.power_budget,
        noise_power: params.noise_power,
        curvature,
        budget: state.residual,
    };
    Ok(solve_offline_noma(&inputs)?.scales[0])
}
