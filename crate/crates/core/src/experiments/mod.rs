//! Monte Carlo sweeps, free-privacy thresholds, trace files and their audit.

mod config;

pub use config::{Axis, ExperimentConfig};

use std::io::{Read, Write};
use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::channel::ChannelError;
use crate::data::{self, DataError};
use crate::numerics::{c_inverse, NumericsError, SimRng};
use crate::power::{self, PowerError};
use crate::privacy::{self, PrivacyError, BUDGET_SLACK};
use crate::trainer::{self, MetricsTrace, PaMode, Problem, Protocol, TrainConfig, TrainError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed trace: {0}")]
    Trace(String),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Power(#[from] PowerError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

/// Stream of the master seed reserved for dataset generation.
const DATA_STREAM: u64 = 0;

/// Synthetic ridge problem described by `config`, drawn from its master seed.
pub fn build_problem(config: &ExperimentConfig) -> Result<Problem> {
    let c = config.resolved();
    let data = data::generate_synthetic(c.samples, c.dim, c.label_noise, &mut SimRng::stream(c.seed, DATA_STREAM))?;
    problem_for(config, data)
}

/// Partitions `data` as `config` asks and derives the problem constants.
pub fn problem_for(config: &ExperimentConfig, data: data::Dataset) -> Result<Problem> {
    let partition = data::partition_skewed(data.len(), config.devices, config.max_fraction())?;
    Ok(Problem::new(data, partition, crate::model::LossSpec::ridge(config.lambda))?)
}

/// Trainer configuration of realization `r`: the master seed offset by `r`.
pub fn realization_config(base: &TrainConfig, r: usize) -> TrainConfig {
    TrainConfig { seed: base.seed.wrapping_add(r as u64), ..base.clone() }
}

/// Final normalized gap of every realization, in realization order.
pub fn realization_gaps(config: &ExperimentConfig, problem: &Problem, protocol: Protocol, mode: PaMode) -> Result<Vec<f64>> {
    let base = TrainConfig { protocol, pa_mode: mode, ..config.train_config()? };
    base.validate()?;
    let optimum = problem
        .optimum
        .as_ref()
        .ok_or_else(|| ExperimentError::Config("sweeps report the ridge optimality gap".into()))?;
    (0..config.realizations())
        .into_par_iter()
        .map(|r| {
            let trace = trainer::run(&realization_config(&base, r), problem)?;
            Ok(trace.final_normalized_gap(optimum).expect("ridge gap"))
        })
        .collect()
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: Axis,
    pub value: f64,
    pub protocol: Protocol,
    pub pa_mode: PaMode,
    pub mean: f64,
    pub stderr: f64,
    pub realizations: usize,
    pub seed: u64,
}

/// One row per grid value, protocol and allocation mode, in that nesting order.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let config = config.resolved();
    config.validate()?;
    let axis = config.axis.ok_or_else(|| ExperimentError::Config("sweep needs an `axis`".into()))?;
    let data = data::generate_synthetic(config.samples, config.dim, config.label_noise, &mut SimRng::stream(config.seed, DATA_STREAM))?;
    let mut rows = Vec::new();
    for &value in &config.grid {
        let point = config.with_axis(axis, value)?;
        point.validate()?;
        let problem = problem_for(&point, data.clone())?;
        for &protocol in &point.protocols {
            for &mode in point.pa_modes.as_deref().unwrap_or_default() {
                let gaps = realization_gaps(&point, &problem, protocol, mode)?;
                let (mean, stderr) = mean_stderr(&gaps);
                rows.push(SweepRow {
                    axis,
                    value,
                    protocol,
                    pa_mode: mode,
                    mean,
                    stderr,
                    realizations: gaps.len(),
                    seed: point.seed,
                });
            }
        }
    }
    Ok(rows)
}

pub const SWEEP_HEADER: [&str; 8] =
    ["axis", "value", "protocol", "pa_mode", "metric_mean", "metric_stderr", "realizations", "seed"];

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            r.axis.name().to_string(),
            r.value.to_string(),
            r.protocol.name().to_string(),
            r.pa_mode.name().to_string(),
            r.mean.to_string(),
            r.stderr.to_string(),
            r.realizations.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush().map_err(|source| ExperimentError::Io { path: "<sweep output>".into(), source })?;
    Ok(())
}

/// Where privacy becomes free for one protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    pub protocol: Protocol,
    /// Smallest `epsilon` above which every realization is in the free regime.
    pub epsilon: f64,
    /// Largest SNR (dB) below which every realization is free at the configured `epsilon`.
    pub snr_db: f64,
    pub realizations: usize,
}

/// Left-hand side of the free-privacy condition for one realization;
/// under orthogonal access the worst device decides.
pub fn free_privacy_lhs(config: &TrainConfig, problem: &Problem) -> Result<f64> {
    Ok(match config.protocol {
        Protocol::Oma => trainer::offline_oma_inputs(config, problem)?
            .iter()
            .map(power::free_privacy_threshold_oma)
            .try_fold(0.0_f64, |acc, v| v.map(|v| acc.max(v)))?,
        Protocol::Noma => power::free_privacy_threshold_noma(&trainer::offline_noma_inputs(config, problem)?)?,
    })
}

/// Thresholds over the configured realizations, using offline gradient bounds.
pub fn threshold_report(config: &ExperimentConfig, problem: &Problem) -> Result<Vec<Threshold>> {
    let base = config.train_config()?;
    let tail = c_inverse(1.0 / base.dp.delta)?;
    let budget = base.dp.budget()?;
    config
        .protocols
        .iter()
        .map(|&protocol| {
            let cfg = TrainConfig { protocol, ..base.clone() };
            let lhs: Vec<f64> = (0..config.realizations())
                .map(|r| free_privacy_lhs(&realization_config(&cfg, r), problem))
                .collect::<Result<_>>()?;
            let worst = lhs.iter().copied().fold(0.0_f64, f64::max);
            // The left-hand side is linear in the power budget.
            let snr = cfg.channel.snr_max() * budget / worst;
            Ok(Threshold {
                protocol,
                epsilon: privacy::epsilon_for_budget(worst, tail),
                snr_db: 10.0 * snr.log10(),
                realizations: lhs.len(),
            })
        })
        .collect()
}

pub fn write_threshold_csv<W: Write>(rows: &[Threshold], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["protocol", "epsilon_threshold", "snr_db_threshold", "realizations"])?;
    for r in rows {
        w.write_record([r.protocol.name().to_string(), r.epsilon.to_string(), r.snr_db.to_string(), r.realizations.to_string()])?;
    }
    w.flush().map_err(|source| ExperimentError::Io { path: "<threshold output>".into(), source })?;
    Ok(())
}

pub const TRACE_HEADER: [&str; 9] =
    ["iteration", "device", "scale", "power", "step_privacy", "accumulated_privacy", "budget", "loss", "gap"];

/// One line per iteration and device. Values use shortest round-trip formatting,
/// so the file reproduces the in-memory numbers exactly.
pub fn write_trace_csv<W: Write>(trace: &MetricsTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for (t, rec) in trace.records.iter().enumerate() {
        for k in 0..rec.scales.len() {
            w.write_record([
                (t + 1).to_string(),
                k.to_string(),
                rec.scales[k].to_string(),
                rec.powers[k].to_string(),
                rec.step_privacy[k].to_string(),
                rec.privacy[k].to_string(),
                trace.budget.to_string(),
                rec.loss.to_string(),
                rec.gap.map(|g| g.to_string()).unwrap_or_default(),
            ])?;
        }
    }
    w.flush().map_err(|source| ExperimentError::Io { path: "<trace output>".into(), source })?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub devices: usize,
    pub iterations: usize,
    pub budget: f64,
    pub satisfied: bool,
    /// `budget - max_k sum_t loss_{k,t}`.
    pub worst_slack: f64,
    /// Re-summed losses equal the recorded running totals bit for bit.
    pub ledger_agrees: bool,
}

/// Re-sums the per-step losses of a trace file and checks them against the
/// budget and the recorded totals.
pub fn verify_trace<R: Read>(input: R) -> Result<VerifyReport> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.iter().ne(TRACE_HEADER) {
        return Err(ExperimentError::Trace(format!("unexpected header {:?}", headers)));
    }
    let num = |rec: &csv::StringRecord, i: usize| -> Result<f64> {
        rec[i].parse().map_err(|_| ExperimentError::Trace(format!("bad number {:?} in column {}", &rec[i], TRACE_HEADER[i])))
    };
    let mut losses: Vec<Vec<f64>> = Vec::new();
    let mut recorded: Vec<Vec<f64>> = Vec::new();
    let mut budget = None;
    for rec in reader.records() {
        let rec = rec?;
        let device: usize = rec[1].parse().map_err(|_| ExperimentError::Trace(format!("bad device {:?}", &rec[1])))?;
        if device >= losses.len() {
            losses.resize(device + 1, Vec::new());
            recorded.resize(device + 1, Vec::new());
        }
        losses[device].push(num(&rec, 4)?);
        recorded[device].push(num(&rec, 5)?);
        let b = num(&rec, 6)?;
        if budget.is_some_and(|x| x != b) {
            return Err(ExperimentError::Trace("budget changes within the trace".into()));
        }
        budget = Some(b);
    }
    let budget = budget.ok_or_else(|| ExperimentError::Trace("empty trace".into()))?;
    let iterations = losses.first().map_or(0, Vec::len);
    if losses.iter().any(|l| l.len() != iterations) {
        return Err(ExperimentError::Trace("devices have different iteration counts".into()));
    }
    let ledger_agrees = losses.iter().zip(&recorded).all(|(l, rec)| {
        let mut acc = 0.0;
        l.iter().zip(rec).all(|(x, r)| {
            acc += x;
            acc == *r
        })
    });
    let audit = privacy::dp_satisfied(&losses, budget);
    Ok(VerifyReport {
        devices: losses.len(),
        iterations,
        budget,
        satisfied: audit.satisfied,
        worst_slack: audit.worst_slack,
        ledger_agrees,
    })
}

impl VerifyReport {
    /// Budget respected up to the ledger's float slack and totals consistent.
    pub fn passed(&self) -> bool {
        self.satisfied && self.ledger_agrees && self.worst_slack >= -BUDGET_SLACK
    }
}
