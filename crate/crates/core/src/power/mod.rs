//! Power allocation under a privacy budget.
//!
//! Both access schemes reduce to the same per-horizon problem in the
//! received SNR variable `b_t = (effective gain)^2 / N0`:
//!
//! ```text
//! minimize   sum_t w_t / b_t
//! subject to sum_t 2 gamma_t^2 b_t <= R,   0 <= b_t <= cap_t
//! ```
//!
//! with discount weights `w_t = (1 - mu/L)^{-t}`. The optimum is
//! `b_t = min(s_t / (sqrt(2 zeta) gamma_t), cap_t)`, `s_t = sqrt(w_t)`, where the
//! multiplier `zeta` makes the budget tight, unless full power already
//! fits inside the budget.

mod online;

pub use online::{
    online_step_noma, online_step_oma, predict_bounds_noma, predict_bounds_oma, BoundPredictor, OnlineNomaState,
    OnlineOmaState,
};

use thiserror::Error;

use crate::model::Curvature;
use crate::numerics::{bisect, NumericsError, RootBracket};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PowerError {
    #[error("invalid allocation inputs: {0}")]
    Invalid(String),
    #[error("multiplier search failed: {0}")]
    Search(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, PowerError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Full power already meets the budget.
    FreePrivacy,
    /// The budget is met with equality.
    Binding,
    /// No budget left; every scale is zero.
    Silent,
    /// Budget ignored.
    Unconstrained,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSchedule {
    /// `alpha_t` (orthogonal access) or `c_t` (superposition).
    pub scales: Vec<f64>,
    /// Artificial noise deviation per iteration.
    pub noise_stds: Vec<f64>,
    pub regime: Regime,
}

impl PowerSchedule {
    fn new(scales: Vec<f64>, regime: Regime) -> Self {
        let n = scales.len();
        Self { scales, noise_stds: vec![0.0; n], regime }
    }

    pub fn horizon(&self) -> usize {
        self.scales.len()
    }
}

/// One device's allocation problem under orthogonal access.
#[derive(Debug, Clone, PartialEq)]
pub struct OmaInputs {
    /// Channel gain `h_t` of each of the device's transmissions.
    pub gains: Vec<f64>,
    /// Per-sample gradient bound `gamma_t`.
    pub per_sample: Vec<f64>,
    /// Local gradient bound `G_t`.
    pub local: Vec<f64>,
    /// Local sample count `D_k`.
    pub samples: f64,
    pub power_budget: f64,
    pub noise_power: f64,
    pub curvature: Curvature,
    pub budget: f64,
}

/// The server's allocation problem under superposition.
#[derive(Debug, Clone, PartialEq)]
pub struct NomaInputs {
    /// `gains[k][t]`.
    pub gains: Vec<Vec<f64>>,
    pub per_sample: Vec<f64>,
    /// `local[k][t]`.
    pub local: Vec<Vec<f64>>,
    /// `samples[k]`.
    pub samples: Vec<f64>,
    pub power_budget: f64,
    pub noise_power: f64,
    pub curvature: Curvature,
    pub budget: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(PowerError::Invalid(format!("{name} must be finite and positive, got {v}")))
    }
}

fn all_positive(name: &str, vs: &[f64]) -> Result<()> {
    vs.iter().try_for_each(|&v| positive(name, v))
}

impl OmaInputs {
    pub fn horizon(&self) -> usize {
        self.gains.len()
    }

    fn validate(&self) -> Result<()> {
        let t = self.horizon();
        if t == 0 || self.per_sample.len() != t || self.local.len() != t {
            return Err(PowerError::Invalid(format!(
                "horizon mismatch: {} gains, {} per-sample bounds, {} local bounds",
                t,
                self.per_sample.len(),
                self.local.len()
            )));
        }
        all_positive("channel gain", &self.gains)?;
        all_positive("per-sample bound", &self.per_sample)?;
        all_positive("local bound", &self.local)?;
        positive("sample count", self.samples)?;
        positive("power budget", self.power_budget)?;
        positive("noise power", self.noise_power)
    }

    /// Full-power scale `sqrt(P) / (D G_t)`.
    fn full_power(&self, t: usize) -> f64 {
        self.power_budget.sqrt() / (self.samples * self.local[t])
    }

    /// Largest received SNR `P h_t^2 / (N0 (D G_t)^2)`.
    fn snr_caps(&self) -> Vec<f64> {
        (0..self.horizon())
            .map(|t| self.power_budget * self.gains[t].powi(2) / (self.noise_power * (self.samples * self.local[t]).powi(2)))
            .collect()
    }
}

impl NomaInputs {
    pub fn horizon(&self) -> usize {
        self.per_sample.len()
    }

    pub fn devices(&self) -> usize {
        self.samples.len()
    }

    fn validate(&self) -> Result<()> {
        let t = self.horizon();
        let k = self.devices();
        if t == 0 || k == 0 || self.gains.len() != k || self.local.len() != k {
            return Err(PowerError::Invalid(format!(
                "shape mismatch: {} devices, {} gain rows, {} bound rows, horizon {t}",
                k,
                self.gains.len(),
                self.local.len()
            )));
        }
        for (g, l) in self.gains.iter().zip(&self.local) {
            if g.len() != t || l.len() != t {
                return Err(PowerError::Invalid("per-device rows must span the horizon".into()));
            }
            all_positive("channel gain", g)?;
            all_positive("local bound", l)?;
        }
        all_positive("per-sample bound", &self.per_sample)?;
        all_positive("sample count", &self.samples)?;
        positive("power budget", self.power_budget)?;
        positive("noise power", self.noise_power)
    }

    /// Device with the smallest `h_{k,t} / (D_k G_{k,t})`; ties go to the lowest index.
    pub fn weakest_device(&self, t: usize) -> usize {
        (0..self.devices()).fold(0, |best, k| if self.ratio(k, t) < self.ratio(best, t) { k } else { best })
    }

    fn ratio(&self, k: usize, t: usize) -> f64 {
        self.gains[k][t] / (self.samples[k] * self.local[k][t])
    }

    fn full_power(&self, t: usize) -> f64 {
        self.power_budget.sqrt() * self.ratio(self.weakest_device(t), t)
    }

    fn snr_caps(&self) -> Vec<f64> {
        (0..self.horizon())
            .map(|t| self.power_budget * self.ratio(self.weakest_device(t), t).powi(2) / self.noise_power)
            .collect()
    }
}

/// `s_t = (1 - mu/L)^{(T - t)/2}`: square roots of the discount weights,
/// normalized so the last iteration has weight one.
pub fn discount_roots(curvature: &Curvature, horizon: usize) -> Vec<f64> {
    let r = curvature.contraction();
    (0..horizon).map(|t| r.powf((horizon - 1 - t) as f64 / 2.0)).collect()
}

/// Budget spent at full power, `sum_t 2 gamma_t^2 cap_t`.
fn full_power_spend(per_sample: &[f64], caps: &[f64]) -> f64 {
    per_sample.iter().zip(caps).map(|(g, c)| 2.0 * g * g * c).sum()
}

/// Left-hand side of the free-privacy test for one device under orthogonal access.
pub fn free_privacy_threshold_oma(inputs: &OmaInputs) -> Result<f64> {
    inputs.validate()?;
    Ok(full_power_spend(&inputs.per_sample, &inputs.snr_caps()))
}

pub fn free_privacy_threshold_noma(inputs: &NomaInputs) -> Result<f64> {
    inputs.validate()?;
    Ok(full_power_spend(&inputs.per_sample, &inputs.snr_caps()))
}

/// Solution of the shared problem in the SNR variable.
#[derive(Debug, Clone, PartialEq)]
struct BudgetSplit {
    snr: Vec<f64>,
    regime: Regime,
}

/// Water-fills `budget` over the horizon. Free and silent cases are
/// decided by the caller.
fn split_budget(roots: &[f64], per_sample: &[f64], caps: &[f64], budget: f64) -> Result<BudgetSplit> {
    let spend = |level: f64| -> f64 {
        roots
            .iter()
            .zip(per_sample)
            .zip(caps)
            .map(|((s, g), c)| 2.0 * g * g * (level * s / g).min(*c))
            .sum()
    };
    // Spend is reachable only through iterations with positive weight.
    let reachable: f64 = roots
        .iter()
        .zip(per_sample)
        .zip(caps)
        .filter(|((s, _), _)| **s > 0.0)
        .map(|((_, g), c)| 2.0 * g * g * c)
        .sum();
    if reachable <= budget {
        let snr = roots.iter().zip(caps).map(|(s, c)| if *s > 0.0 { *c } else { 0.0 }).collect();
        return Ok(BudgetSplit { snr, regime: Regime::FreePrivacy });
    }

    // Search the multiplier zeta in log space, with level = 1/sqrt(2 zeta).
    let gap = |log_zeta: f64| spend(1.0 / (2.0 * log_zeta.exp()).sqrt()) / budget - 1.0;
    let (mut lo, mut hi) = (0.0_f64, 0.0_f64);
    while gap(lo) <= 0.0 {
        lo -= std::f64::consts::LN_2;
        if lo < -2000.0 {
            return Err(PowerError::Invalid("no multiplier makes the budget tight".into()));
        }
    }
    while gap(hi) >= 0.0 {
        hi += std::f64::consts::LN_2;
        if hi > 2000.0 {
            return Err(PowerError::Invalid("no multiplier makes the budget tight".into()));
        }
    }
    if lo == hi {
        hi = lo + std::f64::consts::LN_2;
    }
    let log_zeta = bisect(gap, RootBracket::new(lo, hi, 1e-10, 500)?)?;
    let level = 1.0 / (2.0 * log_zeta.exp()).sqrt();

    // With the capped set known, the tight level has a closed form.
    let capped: Vec<bool> = roots
        .iter()
        .zip(per_sample)
        .zip(caps)
        .map(|((s, g), c)| level * s / g >= *c)
        .collect();
    let (mut capped_spend, mut free_weight) = (0.0, 0.0);
    for t in 0..roots.len() {
        if capped[t] {
            capped_spend += 2.0 * per_sample[t].powi(2) * caps[t];
        } else {
            free_weight += 2.0 * per_sample[t] * roots[t];
        }
    }
    let polished = if free_weight > 0.0 { (budget - capped_spend) / free_weight } else { level };
    let level = if polished > 0.0 && (polished / level - 1.0).abs() < 1e-6 { polished } else { level };
    let snr = roots
        .iter()
        .zip(per_sample)
        .zip(caps)
        .map(|((s, g), c)| (level * s / g).min(*c))
        .collect();
    Ok(BudgetSplit { snr, regime: Regime::Binding })
}

/// Optimal schedule for one device under orthogonal access.
pub fn solve_offline_oma(inputs: &OmaInputs) -> Result<PowerSchedule> {
    inputs.validate()?;
    let t = inputs.horizon();
    if !(inputs.budget > 0.0) {
        return Ok(PowerSchedule::new(vec![0.0; t], Regime::Silent));
    }
    let caps = inputs.snr_caps();
    if full_power_spend(&inputs.per_sample, &caps) < inputs.budget {
        return Ok(no_dp_oma(inputs).with_regime(Regime::FreePrivacy));
    }
    let split = split_budget(&discount_roots(&inputs.curvature, t), &inputs.per_sample, &caps, inputs.budget)?;
    let scales = split
        .snr
        .iter()
        .zip(&inputs.gains)
        .map(|(b, h)| (inputs.noise_power * b).sqrt() / h)
        .collect();
    Ok(PowerSchedule::new(scales, split.regime))
}

/// Optimal common scale under superposition.
pub fn solve_offline_noma(inputs: &NomaInputs) -> Result<PowerSchedule> {
    inputs.validate()?;
    let t = inputs.horizon();
    if !(inputs.budget > 0.0) {
        return Ok(PowerSchedule::new(vec![0.0; t], Regime::Silent));
    }
    let caps = inputs.snr_caps();
    if full_power_spend(&inputs.per_sample, &caps) < inputs.budget {
        return Ok(no_dp_noma(inputs).with_regime(Regime::FreePrivacy));
    }
    let split = split_budget(&discount_roots(&inputs.curvature, t), &inputs.per_sample, &caps, inputs.budget)?;
    let scales = split.snr.iter().map(|b| (inputs.noise_power * b).sqrt()).collect();
    Ok(PowerSchedule::new(scales, split.regime))
}

impl PowerSchedule {
    fn with_regime(mut self, regime: Regime) -> Self {
        self.regime = regime;
        self
    }
}

/// Full power every iteration, ignoring the budget.
pub fn no_dp_oma(inputs: &OmaInputs) -> PowerSchedule {
    PowerSchedule::new((0..inputs.horizon()).map(|t| inputs.full_power(t)).collect(), Regime::Unconstrained)
}

pub fn no_dp_noma(inputs: &NomaInputs) -> PowerSchedule {
    PowerSchedule::new((0..inputs.horizon()).map(|t| inputs.full_power(t)).collect(), Regime::Unconstrained)
}

/// Equal budget share per iteration: `min(sqrt(N0 R / (2 T (h gamma)^2)), sqrt(P)/(D G))`.
pub fn static_oma(inputs: &OmaInputs) -> Result<PowerSchedule> {
    inputs.validate()?;
    let t = inputs.horizon();
    if !(inputs.budget > 0.0) {
        return Ok(PowerSchedule::new(vec![0.0; t], Regime::Silent));
    }
    let mut any_below_cap = false;
    let scales = (0..t)
        .map(|i| {
            let share = (inputs.noise_power * inputs.budget / (2.0 * t as f64 * (inputs.gains[i] * inputs.per_sample[i]).powi(2))).sqrt();
            let cap = inputs.full_power(i);
            any_below_cap |= share < cap;
            share.min(cap)
        })
        .collect();
    Ok(PowerSchedule::new(scales, if any_below_cap { Regime::Binding } else { Regime::FreePrivacy }))
}

pub fn static_noma(inputs: &NomaInputs) -> Result<PowerSchedule> {
    inputs.validate()?;
    let t = inputs.horizon();
    if !(inputs.budget > 0.0) {
        return Ok(PowerSchedule::new(vec![0.0; t], Regime::Silent));
    }
    let mut any_below_cap = false;
    let scales = (0..t)
        .map(|i| {
            let share = (inputs.noise_power * inputs.budget / (2.0 * t as f64 * inputs.per_sample[i].powi(2))).sqrt();
            let cap = inputs.full_power(i);
            any_below_cap |= share < cap;
            share.min(cap)
        })
        .collect();
    Ok(PowerSchedule::new(scales, if any_below_cap { Regime::Binding } else { Regime::FreePrivacy }))
}

/// Weighted noise objective `sum_t (1 - mu/L)^{T-t} N0 / (h_t alpha_t)^2`
/// (artificial noise zero); infinite if any scale is zero.
pub fn objective_oma(inputs: &OmaInputs, scales: &[f64]) -> f64 {
    let roots = discount_roots(&inputs.curvature, inputs.horizon());
    roots
        .iter()
        .zip(scales)
        .zip(&inputs.gains)
        .map(|((s, a), h)| s * s * inputs.noise_power / (h * a).powi(2))
        .sum()
}

pub fn objective_noma(inputs: &NomaInputs, scales: &[f64]) -> f64 {
    let roots = discount_roots(&inputs.curvature, inputs.horizon());
    roots.iter().zip(scales).map(|(s, c)| s * s * inputs.noise_power / (c * c)).sum()
}

/// Multipliers and residuals of the optimality conditions in the variables
/// `a_t = N0/(h alpha)^2 + sigma^2` (effective noise seen by the server) and
/// `p_t = alpha^{-2}`, with the normalized discount weights.
#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    pub zeta: f64,
    pub power_multipliers: Vec<f64>,
    pub floor_multipliers: Vec<f64>,
    /// Largest violation among stationarity, complementary slackness,
    /// dual feasibility and primal feasibility, each relative to its scale.
    pub max_residual: f64,
}

/// Checks the optimality conditions of a one-device schedule.
/// `noise_gain_sq[t] = N0 / h_t^2`, `signal_energy[t] = (D G_t)^2`.
#[allow(clippy::too_many_arguments)]
fn kkt_check(
    roots: &[f64],
    per_sample: &[f64],
    noise_gain_sq: &[f64],
    signal_energy: &[f64],
    power_budget: f64,
    dim: f64,
    budget: f64,
    scales: &[f64],
) -> KktReport {
    let n = roots.len();
    let w: Vec<f64> = roots.iter().map(|s| s * s).collect();
    let a: Vec<f64> = (0..n).map(|t| noise_gain_sq[t] / scales[t].powi(2)).collect();
    let p: Vec<f64> = scales.iter().map(|x| x.powi(-2)).collect();
    let floor: Vec<f64> = (0..n).map(|t| signal_energy[t] * noise_gain_sq[t] / power_budget).collect();
    let pull = |zeta: f64, t: usize| zeta * 2.0 * per_sample[t].powi(2) / a[t].powi(2);

    // The DP multiplier is pinned by iterations strictly above their power floor.
    let interior: Vec<usize> = (0..n).filter(|&t| a[t] > floor[t] * (1.0 + 1e-9)).collect();
    let zeta = if interior.is_empty() {
        0.0
    } else {
        interior.iter().map(|&t| w[t] * a[t].powi(2) / (2.0 * per_sample[t].powi(2))).sum::<f64>()
            / interior.len() as f64
    };
    let beta: Vec<f64> = (0..n).map(|t| (w[t] - pull(zeta, t)) * noise_gain_sq[t] / power_budget).collect();
    let xi: Vec<f64> = (0..n).map(|t| (dim * noise_gain_sq[t] + power_budget) / noise_gain_sq[t] * beta[t]).collect();

    let mut worst = 0.0_f64;
    let spend: f64 = (0..n).map(|t| 2.0 * per_sample[t].powi(2) / a[t]).sum();
    for t in 0..n {
        let scale = w[t].max(pull(zeta, t));
        // Multipliers expressed in units of the objective weight.
        let beta_n = beta[t] * power_budget / noise_gain_sq[t] / scale;
        let xi_n = xi[t] * noise_gain_sq[t] / (dim * noise_gain_sq[t] + power_budget) * power_budget
            / noise_gain_sq[t]
            / scale;
        let stationarity_a = (w[t] - pull(zeta, t) + beta[t] * dim - xi[t]) / scale;
        let stationarity_p =
            (xi[t] * noise_gain_sq[t] - beta[t] * (dim * noise_gain_sq[t] + power_budget)) * p[t] / (scale * a[t]);
        let power_gap = (signal_energy[t] + dim * a[t] - (dim * noise_gain_sq[t] + power_budget) * p[t])
            / (signal_energy[t] + dim * a[t]);
        let floor_gap = (noise_gain_sq[t] * p[t] - a[t]) / a[t];
        for v in [
            stationarity_a.abs(),
            stationarity_p.abs(),
            (-beta_n).max(0.0),
            (-xi_n).max(0.0),
            power_gap.max(0.0),
            (beta_n * power_gap).abs(),
            floor_gap.max(0.0),
            (xi_n * floor_gap).abs(),
        ] {
            worst = worst.max(v);
        }
    }
    let dp_gap = (spend - budget) / budget;
    worst = worst.max(dp_gap.max(0.0));
    if zeta > 0.0 {
        worst = worst.max(dp_gap.abs());
    }
    KktReport { zeta, power_multipliers: beta, floor_multipliers: xi, max_residual: worst }
}

/// Optimality conditions of an orthogonal-access schedule with zero artificial noise.
pub fn kkt_report_oma(inputs: &OmaInputs, schedule: &PowerSchedule, dim: usize) -> KktReport {
    let n = inputs.horizon();
    let noise_gain_sq: Vec<f64> = inputs.gains.iter().map(|h| inputs.noise_power / (h * h)).collect();
    let energy: Vec<f64> = inputs.local.iter().map(|g| (inputs.samples * g).powi(2)).collect();
    kkt_check(
        &discount_roots(&inputs.curvature, n),
        &inputs.per_sample,
        &noise_gain_sq,
        &energy,
        inputs.power_budget,
        dim as f64,
        inputs.budget,
        &schedule.scales,
    )
}

/// Conditions for the superposition schedule, posed on its weakest device
/// (the only power constraint that can bind).
pub fn kkt_report_noma(inputs: &NomaInputs, schedule: &PowerSchedule, dim: usize) -> KktReport {
    let n = inputs.horizon();
    // In the common-scale variable the effective gain is one and the power
    // floor comes from the weakest device.
    let noise_gain_sq = vec![inputs.noise_power; n];
    let energy: Vec<f64> = (0..n).map(|t| inputs.ratio(inputs.weakest_device(t), t).powi(-2)).collect();
    kkt_check(
        &discount_roots(&inputs.curvature, n),
        &inputs.per_sample,
        &noise_gain_sq,
        &energy,
        inputs.power_budget,
        dim as f64,
        inputs.budget,
        &schedule.scales,
    )
}

/// Budget spent by a schedule under orthogonal access (zero artificial noise).
pub fn spend_oma(inputs: &OmaInputs, scales: &[f64]) -> f64 {
    scales
        .iter()
        .zip(&inputs.gains)
        .zip(&inputs.per_sample)
        .map(|((a, h), g)| crate::privacy::step_loss_oma(*h, *a, *g, 0.0, inputs.noise_power))
        .sum()
}

pub fn spend_noma(inputs: &NomaInputs, scales: &[f64]) -> f64 {
    scales
        .iter()
        .zip(&inputs.per_sample)
        .map(|(c, g)| crate::privacy::step_loss_noma(*c, *g, &[], inputs.noise_power))
        .sum()
}

/// Largest per-device transmit energy implied by a schedule, relative to `P`.
pub fn peak_power_ratio_oma(inputs: &OmaInputs, schedule: &PowerSchedule, dim: usize) -> f64 {
    (0..inputs.horizon())
        .map(|t| {
            schedule.scales[t].powi(2)
                * ((inputs.samples * inputs.local[t]).powi(2) + dim as f64 * schedule.noise_stds[t].powi(2))
                / inputs.power_budget
        })
        .fold(0.0, f64::max)
}

pub fn peak_power_ratio_noma(inputs: &NomaInputs, schedule: &PowerSchedule, dim: usize) -> f64 {
    let mut worst = 0.0_f64;
    for t in 0..inputs.horizon() {
        for k in 0..inputs.devices() {
            let e = (schedule.scales[t] / inputs.gains[k][t]).powi(2)
                * ((inputs.samples[k] * inputs.local[k][t]).powi(2) + dim as f64 * schedule.noise_stds[t].powi(2));
            worst = worst.max(e / inputs.power_budget);
        }
    }
    worst
}
