//! Privacy accounting: the `(epsilon, delta)` budget, sensitivity bounds,
//! per-iteration losses for orthogonal and superposed transmission, and a
//! running ledger that refuses to overdraw.
//!
//! A transmission leaks the squared ratio of its sensitivity to the
//! effective noise standard deviation, halved; these ratios add up over
//! iterations and must stay below the budget.

use thiserror::Error;

use crate::numerics::{c_inverse, NumericsError};

/// Absolute slack separating float drift from a real overdraw.
pub const BUDGET_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrivacyError {
    #[error("invalid privacy target: {0}")]
    InvalidTarget(String),
    #[error("negative privacy loss {0}")]
    NegativeLoss(f64),
    #[error("device {device} would accumulate {total} against budget {budget}")]
    Overdraw { device: usize, total: f64, budget: f64 },
    #[error("expected {expected} per-device losses, got {got}")]
    Arity { expected: usize, got: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, PrivacyError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpTarget {
    pub epsilon: f64,
    pub delta: f64,
}

impl DpTarget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(PrivacyError::InvalidTarget(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(PrivacyError::InvalidTarget(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self { epsilon, delta })
    }

    /// Scalar budget `(sqrt(epsilon + c^2) - c)^2` with `c = C^{-1}(1/delta)`.
    pub fn budget(&self) -> Result<f64> {
        let c = c_inverse(1.0 / self.delta)?;
        Ok(budget_from_tail(self.epsilon, c))
    }
}

/// `(sqrt(eps + c^2) - c)^2`, written as `eps^2 / (sqrt(eps + c^2) + c)^2` to
/// avoid cancellation for small `eps`.
pub fn budget_from_tail(epsilon: f64, tail: f64) -> f64 {
    let denom = (epsilon + tail * tail).sqrt() + tail;
    (epsilon / denom).powi(2)
}

/// Smallest `epsilon` whose budget reaches `budget` at the given tail constant;
/// the inverse of [`budget_from_tail`].
pub fn epsilon_for_budget(budget: f64, tail: f64) -> f64 {
    budget + 2.0 * tail * budget.sqrt()
}

pub fn r_dp(target: &DpTarget) -> Result<f64> {
    target.budget()
}

pub fn sensitivity_bound_oma(gain: f64, scale: f64, per_sample_bound: f64) -> f64 {
    2.0 * gain * scale * per_sample_bound
}

pub fn sensitivity_bound_noma(scale: f64, per_sample_bound: f64) -> f64 {
    2.0 * scale * per_sample_bound
}

/// `2 (h alpha gamma)^2 / ((h alpha sigma)^2 + N0)`.
pub fn step_loss_oma(gain: f64, scale: f64, per_sample_bound: f64, noise_std: f64, noise_power: f64) -> f64 {
    let a = gain * scale;
    2.0 * (a * per_sample_bound).powi(2) / ((a * noise_std).powi(2) + noise_power)
}

/// `2 (c gamma)^2 / (c^2 sum_k sigma_k^2 + N0)`; charged to every device.
pub fn step_loss_noma(scale: f64, per_sample_bound: f64, noise_stds: &[f64], noise_power: f64) -> f64 {
    let artificial: f64 = noise_stds.iter().map(|s| s * s).sum();
    2.0 * (scale * per_sample_bound).powi(2) / (scale * scale * artificial + noise_power)
}

/// Accumulated loss per account (one per device, or a single aggregate).
#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyLedger {
    budget: f64,
    totals: Vec<f64>,
    iterations: usize,
    enforced: bool,
}

impl PrivacyLedger {
    pub fn new(budget: f64, accounts: usize) -> Self {
        Self { budget, totals: vec![0.0; accounts], iterations: 0, enforced: true }
    }

    /// Records losses without rejecting overdrafts, for runs that ignore the budget.
    pub fn unenforced(budget: f64, accounts: usize) -> Self {
        Self { enforced: false, ..Self::new(budget, accounts) }
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn accumulated(&self, account: usize) -> f64 {
        self.totals[account]
    }

    pub fn totals(&self) -> &[f64] {
        &self.totals
    }

    /// `budget - accumulated`, floored at zero.
    pub fn residual(&self, account: usize) -> f64 {
        (self.budget - self.totals[account]).max(0.0)
    }

    /// Adds one iteration of losses. On an overdraft nothing is recorded.
    pub fn charge(&mut self, losses: &[f64]) -> Result<()> {
        if losses.len() != self.totals.len() {
            return Err(PrivacyError::Arity { expected: self.totals.len(), got: losses.len() });
        }
        if let Some(&bad) = losses.iter().find(|l| !(**l >= 0.0)) {
            return Err(PrivacyError::NegativeLoss(bad));
        }
        if self.enforced {
            for (device, (total, loss)) in self.totals.iter().zip(losses).enumerate() {
                let next = total + loss;
                if next > self.budget + BUDGET_SLACK {
                    return Err(PrivacyError::Overdraw { device, total: next, budget: self.budget });
                }
            }
        }
        self.totals.iter_mut().zip(losses).for_each(|(t, l)| *t += l);
        self.iterations += 1;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Audit {
    pub satisfied: bool,
    /// `budget - max_k total_k`; negative when violated.
    pub worst_slack: f64,
}

/// Post-hoc check of per-account loss sequences `losses[account][t]`,
/// summed in iteration order exactly as the ledger does.
pub fn dp_satisfied(losses: &[Vec<f64>], budget: f64) -> Audit {
    let worst = losses
        .iter()
        .map(|seq| seq.iter().fold(0.0, |acc, l| acc + l))
        .fold(0.0_f64, f64::max);
    Audit { satisfied: worst <= budget + BUDGET_SLACK, worst_slack: budget - worst }
}
