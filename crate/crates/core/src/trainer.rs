//! The federated training loop: scheduling, transmission, aggregation,
//! model update, privacy accounting and per-iteration metrics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{self, ChannelError, ChannelParams, FadingProcess, PowerPredictor};
use crate::data::{Dataset, Partition};
use crate::model::{self, Curvature, GradientBounds, LossKind, LossSpec, ModelError, RidgeOptimum};
use crate::numerics::{self, SimRng};
use crate::power::{self, BoundPredictor, NomaInputs, OmaInputs, OnlineNomaState, OnlineOmaState, PowerError};
use crate::privacy::{self, DpTarget, PrivacyError, PrivacyLedger};

/// Stream offsets of the per-realization random sources.
const CHANNEL_NOISE_STREAM: u64 = 1;
const ARTIFICIAL_NOISE_STREAM: u64 = 2;
const FADING_STREAM_BASE: u64 = 1000;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
    #[error(transparent)]
    Power(#[from] PowerError),
}

pub type Result<T> = std::result::Result<T, TrainError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Oma,
    Noma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaMode {
    /// Optimal schedule computed with every channel of the run known in advance.
    OfflineOptimal,
    /// Receding-horizon schedule from predicted channels and bounds.
    Online,
    /// Budget split evenly across iterations.
    Static,
    /// Full power, budget ignored.
    NoDp,
}

/// Where the per-sample and local gradient bounds come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    /// Bounds derived from the data and the model radius; no per-sample clipping.
    Offline,
    /// Per-sample clipping at the threshold; local bounds estimated from feedback.
    Online,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Self::Oma => "oma",
            Self::Noma => "noma",
        }
    }
}

impl PaMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::OfflineOptimal => "offline_optimal",
            Self::Online => "online",
            Self::Static => "static",
            Self::NoDp => "no_dp",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub protocol: Protocol,
    pub pa_mode: PaMode,
    pub setting: Setting,
    /// Communication blocks `I`.
    pub blocks: usize,
    pub devices: usize,
    pub dp: DpTarget,
    pub channel: ChannelParams,
    pub loss: LossSpec,
    /// Model radius `W`.
    pub radius: f64,
    /// Per-sample clipping threshold, also the initial local-bound estimate.
    pub clip: f64,
    pub predictor: PowerPredictor,
    /// Artificial noise deviation added before transmission (ablation only).
    pub artificial_noise: f64,
    /// `false` removes receiver noise while keeping `N0` in the allocation problem.
    pub channel_noise: bool,
    pub seed: u64,
}

impl TrainConfig {
    /// Iterations `T`: `I / K` under orthogonal access, `I` under superposition.
    pub fn iterations(&self) -> usize {
        match self.protocol {
            Protocol::Oma => self.blocks / self.devices,
            Protocol::Noma => self.blocks,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(TrainError::Config(m));
        if self.devices == 0 || self.blocks == 0 {
            return bad("blocks and devices must be positive".into());
        }
        if self.protocol == Protocol::Oma && !self.blocks.is_multiple_of(self.devices) {
            return bad(format!("{} blocks cannot be split evenly over {} devices", self.blocks, self.devices));
        }
        if !(self.radius > 0.0) || !(self.clip > 0.0) || !(self.artificial_noise >= 0.0) {
            return bad("radius and clip must be positive, artificial noise non-negative".into());
        }
        match (self.pa_mode, self.setting) {
            (PaMode::OfflineOptimal, Setting::Online) => bad("offline_optimal needs the offline setting".into()),
            (PaMode::Online, Setting::Offline) => bad("online allocation needs the online setting".into()),
            (_, Setting::Offline) if !matches!(self.loss.kind, LossKind::Ridge) => {
                bad("the offline setting derives its bounds from the ridge model".into())
            }
            _ => Ok(()),
        }
    }
}

/// Dataset, partition and the derived constants shared by many runs.
#[derive(Debug, Clone)]
pub struct Problem {
    pub data: Dataset,
    pub partition: Partition,
    pub loss: LossSpec,
    pub curvature: Curvature,
    /// Closed-form optimum when the loss is ridge.
    pub optimum: Option<RidgeOptimum>,
}

impl Problem {
    pub fn new(data: Dataset, partition: Partition, loss: LossSpec) -> Result<Self> {
        if partition.total() != data.len() {
            return Err(TrainError::Config(format!(
                "partition covers {} samples, dataset has {}",
                partition.total(),
                data.len()
            )));
        }
        let curvature = model::curvature(&loss, &data)?;
        let optimum = match loss.kind {
            LossKind::Ridge => Some(model::ridge_optimum(&data, loss.lambda)?),
            LossKind::Logistic { .. } => None,
        };
        Ok(Self { data, partition, loss, curvature, optimum })
    }

    pub fn param_dim(&self) -> usize {
        self.loss.param_dim(self.data.dim())
    }

    pub fn sizes(&self) -> Vec<f64> {
        self.partition.sizes().into_iter().map(|s| s as f64).collect()
    }

    fn gap(&self, w: &[f64]) -> Option<f64> {
        self.optimum.as_ref().map(|o| o.gap(w))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub loss: f64,
    /// `F(w) - F*` after the update, when the optimum is known.
    pub gap: Option<f64>,
    /// Privacy loss charged in this iteration, per device.
    pub step_privacy: Vec<f64>,
    /// Accumulated privacy loss after this iteration, per device.
    pub privacy: Vec<f64>,
    /// Transmit energy `||x||^2`, per device.
    pub powers: Vec<f64>,
    /// `alpha_k` or the common `c`, per device.
    pub scales: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsTrace {
    pub records: Vec<IterationRecord>,
    pub initial_loss: f64,
    pub initial_gap: Option<f64>,
    pub budget: f64,
    /// Convergence bound for this run; `None` if a device was silent or the optimum is unknown.
    pub bound: Option<f64>,
    /// Transmissions scaled down to respect the power budget.
    pub power_clips: usize,
    pub final_model: Vec<f64>,
}

impl MetricsTrace {
    pub fn final_gap(&self) -> Option<f64> {
        self.records.last().map_or(self.initial_gap, |r| r.gap)
    }

    pub fn final_loss(&self) -> f64 {
        self.records.last().map_or(self.initial_loss, |r| r.loss)
    }

    /// Gap normalized by the optimal loss.
    pub fn final_normalized_gap(&self, optimum: &RidgeOptimum) -> Option<f64> {
        self.final_gap().map(|g| g / optimum.min_loss)
    }

    /// Per-device loss sequences, in the layout the audit expects.
    pub fn privacy_losses(&self) -> Vec<Vec<f64>> {
        let devices = self.records.first().map_or(0, |r| r.step_privacy.len());
        (0..devices).map(|k| self.records.iter().map(|r| r.step_privacy[k]).collect()).collect()
    }
}

/// `(1/D_tot) sum_k y_k / (h_k alpha_k)`; silent devices contribute nothing.
pub fn server_estimate_oma(ys: &[Vec<f64>], gains: &[f64], scales: &[f64], total_samples: f64) -> Vec<f64> {
    let d = ys.first().map_or(0, Vec::len);
    let mut est = vec![0.0; d];
    for ((y, h), a) in ys.iter().zip(gains).zip(scales) {
        let eff = h * a;
        if eff > 0.0 {
            est.iter_mut().zip(y).for_each(|(e, yi)| *e += yi / eff);
        }
    }
    est.iter_mut().for_each(|e| *e /= total_samples);
    est
}

/// `y / (c D_tot)`, or zero when `c = 0`.
pub fn server_estimate_noma(y: &[f64], scale: f64, total_samples: f64) -> Vec<f64> {
    if scale > 0.0 {
        y.iter().map(|yi| yi / (scale * total_samples)).collect()
    } else {
        vec![0.0; y.len()]
    }
}

/// `project(w - estimate / L, W)`.
pub fn model_update(w: &[f64], estimate: &[f64], smoothness: f64, radius: f64) -> Vec<f64> {
    let mut next: Vec<f64> = w.iter().zip(estimate).map(|(wi, ei)| wi - ei / smoothness).collect();
    numerics::project_ball_in_place(&mut next, radius);
    next
}

/// `r^T gap0 + d / (2 L D_tot^2) sum_t r^{T-t} sum_k inverse_snr[t][k]` with
/// `inverse_snr[t][k] = (m_{k,t} / effective gain)^2`. `None` if any entry is infinite.
pub fn bound_value(curvature: &Curvature, dim: usize, total_samples: f64, initial_gap: f64, inverse_snr: &[Vec<f64>]) -> Option<f64> {
    let r = curvature.contraction();
    let horizon = inverse_snr.len();
    let mut noise = 0.0;
    for (t, row) in inverse_snr.iter().enumerate() {
        let s: f64 = row.iter().sum();
        if !s.is_finite() {
            return None;
        }
        noise += r.powi((horizon - 1 - t) as i32) * s;
    }
    Some(r.powi(horizon as i32) * initial_gap + dim as f64 / (2.0 * curvature.smoothness * total_samples.powi(2)) * noise)
}

/// Scales `x` onto the energy budget; returns whether it had to.
fn clip_to_power(x: &mut [f64], budget: f64) -> bool {
    let energy = numerics::dot(x, x);
    if energy > budget {
        let f = (budget / energy).sqrt();
        x.iter_mut().for_each(|v| *v *= f);
        true
    } else {
        false
    }
}

/// Complex gains `[device][block]` for one realization.
fn fading_trace(config: &TrainConfig) -> Vec<Vec<Complex64>> {
    (0..config.devices)
        .map(|k| {
            let mut f = FadingProcess::new(config.channel, SimRng::stream(config.seed, FADING_STREAM_BASE + k as u64));
            (0..config.blocks)
                .map(|b| {
                    if b > 0 {
                        f.advance();
                    }
                    f.gain()
                })
                .collect()
        })
        .collect()
}

/// Block in which device `k` transmits at iteration `t`.
fn transmission_block(config: &TrainConfig, k: usize, t: usize) -> usize {
    match config.protocol {
        Protocol::Oma => t * config.devices + k,
        Protocol::Noma => t,
    }
}

/// Gain each device sees at each of its transmissions, `[device][iteration]`.
pub fn iteration_gains(config: &TrainConfig) -> Vec<Vec<f64>> {
    fading_trace(config)
        .iter()
        .enumerate()
        .map(|(k, blocks)| (0..config.iterations()).map(|t| blocks[transmission_block(config, k, t)].norm()).collect())
        .collect()
}

/// Per-device allocation problems of one realization with every channel
/// known, against the full budget.
pub fn offline_oma_inputs(config: &TrainConfig, problem: &Problem) -> Result<Vec<OmaInputs>> {
    config.validate()?;
    let horizon = config.iterations();
    let bounds = model::offline_bounds(&problem.data, &problem.partition, config.loss.lambda, config.radius, horizon)?;
    let budget = config.dp.budget()?;
    let sizes = problem.sizes();
    Ok(iteration_gains(config)
        .into_iter()
        .enumerate()
        .map(|(k, gains)| OmaInputs {
            gains,
            per_sample: bounds.per_sample.clone(),
            local: bounds.local[k].clone(),
            samples: sizes[k],
            power_budget: config.channel.power_budget,
            noise_power: config.channel.noise_power,
            curvature: problem.curvature,
            budget,
        })
        .collect())
}

pub fn offline_noma_inputs(config: &TrainConfig, problem: &Problem) -> Result<NomaInputs> {
    config.validate()?;
    let horizon = config.iterations();
    let bounds = model::offline_bounds(&problem.data, &problem.partition, config.loss.lambda, config.radius, horizon)?;
    Ok(NomaInputs {
        gains: iteration_gains(config),
        per_sample: bounds.per_sample,
        local: bounds.local,
        samples: problem.sizes(),
        power_budget: config.channel.power_budget,
        noise_power: config.channel.noise_power,
        curvature: problem.curvature,
        budget: config.dp.budget()?,
    })
}

struct Run<'a> {
    config: &'a TrainConfig,
    problem: &'a Problem,
    horizon: usize,
    budget: f64,
    sizes: Vec<f64>,
    total: f64,
    fading: Vec<Vec<Complex64>>,
    bounds: Option<GradientBounds>,
    noise_rng: SimRng,
    artificial_rng: SimRng,
    power_clips: usize,
}

impl<'a> Run<'a> {
    fn block(&self, k: usize, t: usize) -> usize {
        transmission_block(self.config, k, t)
    }

    fn gain(&self, k: usize, t: usize) -> f64 {
        self.fading[k][self.block(k, t)].norm()
    }

    fn per_sample_bound(&self, t: usize) -> f64 {
        self.bounds.as_ref().map_or(self.config.clip, |b| b.per_sample[t])
    }

    fn receiver_noise(&self) -> f64 {
        if self.config.channel_noise {
            self.config.channel.noise_power
        } else {
            0.0
        }
    }

    fn sample_clip(&self) -> Option<f64> {
        match self.config.setting {
            Setting::Offline => None,
            Setting::Online => Some(self.config.clip),
        }
    }

    /// `x = scale (D_k g + sigma n)`, then clipped to the energy budget.
    fn transmit(&mut self, gradient: &[f64], samples: f64, scale: f64) -> Vec<f64> {
        let sigma = self.config.artificial_noise;
        let mut x: Vec<f64> = gradient
            .iter()
            .map(|g| scale * (samples * g + self.artificial_rng.gauss(0.0, sigma)))
            .collect();
        if clip_to_power(&mut x, self.config.channel.power_budget) {
            self.power_clips += 1;
        }
        x
    }
}

/// Caps `scale` so that `spent + loss(scale)` stays within `budget` as
/// evaluated in floating point, absorbing rounding in the allocation.
fn fit_residual(scale: f64, spent: f64, budget: f64, loss: impl Fn(f64) -> f64) -> f64 {
    let residual = budget - spent;
    if !(residual > 0.0) {
        return 0.0;
    }
    let mut s = scale;
    let l = loss(s);
    if l > residual {
        s *= (residual / l).sqrt();
    }
    while s > 0.0 && spent + loss(s) > budget {
        s *= 1.0 - 4.0 * f64::EPSILON;
    }
    s
}

/// Runs one realization of federated training.
pub fn run(config: &TrainConfig, problem: &Problem) -> Result<MetricsTrace> {
    config.validate()?;
    if problem.partition.num_devices() != config.devices {
        return Err(TrainError::Config(format!(
            "partition has {} shards for {} devices",
            problem.partition.num_devices(),
            config.devices
        )));
    }
    if problem.loss != config.loss {
        return Err(TrainError::Config("problem and configuration disagree on the loss".into()));
    }
    let horizon = config.iterations();
    if horizon == 0 {
        return Err(TrainError::Config("no iterations".into()));
    }
    let bounds = match config.setting {
        Setting::Offline => Some(model::offline_bounds(
            &problem.data,
            &problem.partition,
            config.loss.lambda,
            config.radius,
            horizon,
        )?),
        Setting::Online => None,
    };
    let sizes = problem.sizes();
    let mut run = Run {
        config,
        problem,
        horizon,
        budget: config.dp.budget()?,
        total: sizes.iter().sum(),
        sizes,
        fading: fading_trace(config),
        bounds,
        noise_rng: SimRng::stream(config.seed, CHANNEL_NOISE_STREAM),
        artificial_rng: SimRng::stream(config.seed, ARTIFICIAL_NOISE_STREAM),
        power_clips: 0,
    };
    match config.protocol {
        Protocol::Oma => run_oma(&mut run),
        Protocol::Noma => run_noma(&mut run),
    }
}

struct Recorder {
    records: Vec<IterationRecord>,
    inverse_snr: Vec<Vec<f64>>,
}

fn finish(run: &Run, w: Vec<f64>, recorder: Recorder) -> Result<MetricsTrace> {
    let problem = run.problem;
    let zero = vec![0.0; problem.param_dim()];
    let initial_gap = problem.gap(&zero);
    let bound = initial_gap.and_then(|g0| {
        bound_value(&problem.curvature, problem.param_dim(), run.total, g0, &recorder.inverse_snr)
    });
    Ok(MetricsTrace {
        records: recorder.records,
        initial_loss: model::global_loss(&problem.loss, &zero, &problem.data)?,
        initial_gap,
        budget: run.budget,
        bound,
        power_clips: run.power_clips,
        final_model: w,
    })
}

fn new_ledger(config: &TrainConfig, budget: f64) -> PrivacyLedger {
    if config.pa_mode == PaMode::NoDp {
        PrivacyLedger::unenforced(budget, config.devices)
    } else {
        PrivacyLedger::new(budget, config.devices)
    }
}

fn run_oma(run: &mut Run) -> Result<MetricsTrace> {
    let config = run.config;
    let problem = run.problem;
    let (devices, horizon) = (config.devices, run.horizon);
    let n0 = config.channel.noise_power;
    let power = config.channel.power_budget;
    let mut ledger = new_ledger(config, run.budget);
    let mut predictors = vec![BoundPredictor::new(config.clip); devices];
    let offline: Option<Vec<Vec<f64>>> = match config.pa_mode {
        PaMode::OfflineOptimal => Some(
            offline_oma_inputs(config, problem)?
                .iter()
                .map(|inputs| Ok(power::solve_offline_oma(inputs)?.scales))
                .collect::<Result<_>>()?,
        ),
        _ => None,
    };
    let mut w = vec![0.0; problem.param_dim()];
    let mut recorder = Recorder { records: Vec::with_capacity(horizon), inverse_snr: Vec::with_capacity(horizon) };

    for t in 0..horizon {
        let gamma = run.per_sample_bound(t);
        let mut ys = Vec::with_capacity(devices);
        let (mut gains, mut scales, mut powers, mut losses) =
            (Vec::with_capacity(devices), Vec::with_capacity(devices), Vec::with_capacity(devices), Vec::with_capacity(devices));
        for k in 0..devices {
            let shard = problem.partition.shard(k);
            let gradient = model::local_gradient(&problem.loss, &w, &problem.data, shard, run.sample_clip())?;
            let h = run.gain(k, t);
            let local_bound = run.bounds.as_ref().map_or(predictors[k].estimate(), |b| b.local[k][t]);
            let full = power.sqrt() / (run.sizes[k] * local_bound);
            let mut alpha = match config.pa_mode {
                PaMode::OfflineOptimal => offline.as_ref().expect("offline schedule")[k][t],
                PaMode::Online => power::online_step_oma(
                    &OnlineOmaState {
                        residual: ledger.residual(k),
                        channel: run.fading[k][run.block(k, t)],
                        remaining: horizon - t,
                        lag: devices,
                        local_bound,
                        per_sample_bound: gamma,
                        samples: run.sizes[k],
                    },
                    &config.channel,
                    config.predictor,
                    problem.curvature,
                )?,
                PaMode::Static => {
                    let share = (n0 * run.budget / (2.0 * horizon as f64 * (h * gamma).powi(2))).sqrt();
                    share.min(full)
                }
                PaMode::NoDp => full,
            };
            if config.pa_mode != PaMode::NoDp && h > 0.0 {
                let sigma = config.artificial_noise;
                alpha = fit_residual(alpha, ledger.accumulated(k), run.budget, |a| {
                    privacy::step_loss_oma(h, a, gamma, sigma, n0)
                });
            }
            let x = run.transmit(&gradient, run.sizes[k], alpha);
            powers.push(numerics::dot(&x, &x));
            let y = channel::oma_receive(&x, h, run.receiver_noise(), power, &mut run.noise_rng)?;
            predictors[k].update(power::predict_bounds_oma(numerics::norm(&y), h, alpha, run.sizes[k]));
            losses.push(privacy::step_loss_oma(h, alpha, gamma, config.artificial_noise, n0));
            ys.push(y);
            gains.push(h);
            scales.push(alpha);
        }
        ledger.charge(&losses)?;
        let estimate = server_estimate_oma(&ys, &gains, &scales, run.total);
        w = model_update(&w, &estimate, problem.curvature.smoothness, config.radius);
        recorder.inverse_snr.push(
            gains
                .iter()
                .zip(&scales)
                .map(|(h, a)| (n0 + (h * a * config.artificial_noise).powi(2)) / (h * a).powi(2))
                .collect(),
        );
        recorder.records.push(IterationRecord {
            loss: model::global_loss(&problem.loss, &w, &problem.data)?,
            gap: problem.gap(&w),
            step_privacy: losses,
            privacy: ledger.totals().to_vec(),
            powers,
            scales,
        });
    }
    finish(run, w, recorder)
}

fn run_noma(run: &mut Run) -> Result<MetricsTrace> {
    let config = run.config;
    let problem = run.problem;
    let (devices, horizon) = (config.devices, run.horizon);
    let n0 = config.channel.noise_power;
    let power = config.channel.power_budget;
    let mut ledger = new_ledger(config, run.budget);
    let mut predictor = BoundPredictor::new(config.clip);
    let offline = match config.pa_mode {
        PaMode::OfflineOptimal => {
            Some(power::solve_offline_noma(&offline_noma_inputs(config, problem)?)?.scales)
        }
        _ => None,
    };
    let mut w = vec![0.0; problem.param_dim()];
    let mut recorder = Recorder { records: Vec::with_capacity(horizon), inverse_snr: Vec::with_capacity(horizon) };

    for t in 0..horizon {
        let gamma = run.per_sample_bound(t);
        let gains: Vec<f64> = (0..devices).map(|k| run.gain(k, t)).collect();
        let local: Vec<f64> =
            (0..devices).map(|k| run.bounds.as_ref().map_or(predictor.estimate(), |b| b.local[k][t])).collect();
        let full = power.sqrt()
            * (0..devices).map(|k| gains[k] / (run.sizes[k] * local[k])).fold(f64::INFINITY, f64::min);
        // Every device carries the same accumulated loss.
        let residual = ledger.residual(0);
        let mut c = match config.pa_mode {
            PaMode::OfflineOptimal => offline.as_ref().expect("offline schedule")[t],
            PaMode::Online => power::online_step_noma(
                &OnlineNomaState {
                    residual,
                    channels: (0..devices).map(|k| run.fading[k][t]).collect(),
                    remaining: horizon - t,
                    local_bound: predictor.estimate(),
                    per_sample_bound: gamma,
                    samples: run.sizes.clone(),
                },
                &config.channel,
                config.predictor,
                problem.curvature,
            )?,
            PaMode::Static => (n0 * run.budget / (2.0 * horizon as f64 * gamma * gamma)).sqrt().min(full),
            PaMode::NoDp => full,
        };
        if config.pa_mode != PaMode::NoDp {
            let sigmas = vec![config.artificial_noise; devices];
            c = fit_residual(c, ledger.accumulated(0), run.budget, |c| privacy::step_loss_noma(c, gamma, &sigmas, n0));
        }
        let mut xs = Vec::with_capacity(devices);
        let mut powers = Vec::with_capacity(devices);
        for k in 0..devices {
            let gradient =
                model::local_gradient(&problem.loss, &w, &problem.data, problem.partition.shard(k), run.sample_clip())?;
            let scale = if gains[k] > 0.0 { c / gains[k] } else { 0.0 };
            let x = run.transmit(&gradient, run.sizes[k], scale);
            powers.push(numerics::dot(&x, &x));
            xs.push(x);
        }
        let y = channel::noma_receive(&xs, &gains, run.receiver_noise(), power, &mut run.noise_rng)?;
        predictor.update(power::predict_bounds_noma(numerics::norm(&y), c, run.total));
        let sigmas = vec![config.artificial_noise; devices];
        let loss = privacy::step_loss_noma(c, gamma, &sigmas, n0);
        let losses = vec![loss; devices];
        ledger.charge(&losses)?;
        let estimate = server_estimate_noma(&y, c, run.total);
        w = model_update(&w, &estimate, problem.curvature.smoothness, config.radius);
        let artificial = devices as f64 * (c * config.artificial_noise).powi(2);
        recorder.inverse_snr.push(vec![(n0 + artificial) / (c * c)]);
        recorder.records.push(IterationRecord {
            loss: model::global_loss(&problem.loss, &w, &problem.data)?,
            gap: problem.gap(&w),
            step_privacy: losses,
            privacy: ledger.totals().to_vec(),
            powers,
            scales: vec![c; devices],
        });
    }
    finish(run, w, recorder)
}
