//! Multinomial logistic regression on IDX digit files under the online setting.
//!
//! Defaults of the TOML keys:
//!
//! | key | default |
//! |-----|---------|
//! | `data_dir` | `"data/mnist"` |
//! | `train_samples`, `test_samples` | `1000`, `1000` (first samples in file order) |
//! | `lambda`, `radius`, `clip` | `0.01`, `10`, `40` |
//! | `snr_db`, `noise_power` | `13`, `1` |
//! | `epsilon`, `delta` | `5`, `0.01` |
//! | `mu`, `smoothness` | `0.3`, `2.5` |
//! | `devices` | `10` |
//! | `protocol` | `"oma"` |
//! | `pa_modes` | `["online", "static"]` |
//! | `grid` | blocks `I` = `[10, 20, 30, 40, 50]` |
//! | `rice_factor`, `correlation` | `5`, `0` |
//! | `realizations`, `seed` | `20`, `0` |

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, PowerPredictor};
use crate::data::{self, Dataset};
use crate::experiments::{mean_stderr, realization_config, ExperimentError, Result};
use crate::model::{self, Curvature, LossSpec};
use crate::privacy::DpTarget;
use crate::trainer::{self, PaMode, Problem, Protocol, Setting, TrainConfig};

pub const CLASSES: usize = 10;
const TRAIN_FILES: [&str; 2] = ["train-images-idx3-ubyte", "train-labels-idx1-ubyte"];
const TEST_FILES: [&str; 2] = ["t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MnistConfig {
    pub data_dir: PathBuf,
    pub train_samples: usize,
    pub test_samples: usize,
    pub lambda: f64,
    pub radius: f64,
    pub clip: f64,
    pub snr_db: f64,
    pub noise_power: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub mu: f64,
    pub smoothness: f64,
    pub devices: usize,
    pub protocol: Protocol,
    pub pa_modes: Vec<PaMode>,
    pub grid: Vec<usize>,
    pub rice_factor: f64,
    pub correlation: f64,
    pub realizations: usize,
    pub seed: u64,
}

impl Default for MnistConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data/mnist"),
            train_samples: 1000,
            test_samples: 1000,
            lambda: 0.01,
            radius: 10.0,
            clip: 40.0,
            snr_db: 13.0,
            noise_power: 1.0,
            epsilon: 5.0,
            delta: 0.01,
            mu: 0.3,
            smoothness: 2.5,
            devices: 10,
            protocol: Protocol::Oma,
            pa_modes: vec![PaMode::Online, PaMode::Static],
            grid: vec![10, 20, 30, 40, 50],
            rice_factor: 5.0,
            correlation: 0.0,
            realizations: 20,
            seed: 0,
        }
    }
}

impl MnistConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io { path: path.into(), source })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn loss(&self) -> Result<LossSpec> {
        let curvature = Curvature::new(self.mu, self.smoothness).map_err(|e| ExperimentError::Config(e.to_string()))?;
        Ok(LossSpec::logistic(CLASSES, self.lambda, curvature))
    }

    /// Trainer configuration at `blocks` communication blocks.
    pub fn train_config(&self, pa_mode: PaMode, blocks: usize) -> Result<TrainConfig> {
        let loss = self.loss()?;
        let dim = loss.param_dim(28 * 28 + 1);
        Ok(TrainConfig {
            protocol: self.protocol,
            pa_mode,
            setting: Setting::Online,
            blocks,
            devices: self.devices,
            dp: DpTarget::new(self.epsilon, self.delta)?,
            channel: ChannelParams::from_snr_db(self.rice_factor, self.correlation, self.noise_power, self.snr_db, dim)?,
            loss,
            radius: self.radius,
            clip: self.clip,
            predictor: PowerPredictor::ConditionalMean,
            artificial_noise: 0.0,
            channel_noise: true,
            seed: self.seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.train_samples == 0 || self.train_samples > 60_000 || self.test_samples == 0 {
            return bad("train_samples must be in 1..=60000 and test_samples positive".into());
        }
        if self.realizations == 0 || self.grid.is_empty() || self.pa_modes.is_empty() {
            return bad("realizations, grid and pa_modes must be nonempty".into());
        }
        for &blocks in &self.grid {
            for &mode in &self.pa_modes {
                self.train_config(mode, blocks)?.validate()?;
            }
        }
        Ok(())
    }
}

/// Training and test sets, each truncated to the configured size.
pub fn load(config: &MnistConfig) -> Result<(Dataset, Dataset)> {
    let open = |[images, labels]: [&str; 2], n: usize| {
        data::load_idx(&config.data_dir.join(images), &config.data_dir.join(labels), Some(n))
    };
    Ok((open(TRAIN_FILES, config.train_samples)?, open(TEST_FILES, config.test_samples)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MnistRow {
    pub blocks: usize,
    pub protocol: Protocol,
    pub pa_mode: PaMode,
    pub train_loss: (f64, f64),
    pub test_error: (f64, f64),
    pub realizations: usize,
    pub seed: u64,
}

/// Final training loss and test error of every realization.
pub fn realization_metrics(config: &TrainConfig, problem: &Problem, test: &Dataset, realizations: usize) -> Result<Vec<(f64, f64)>> {
    (0..realizations)
        .into_par_iter()
        .map(|r| {
            let trace = trainer::run(&realization_config(config, r), problem)?;
            let error = model::classification_error(&problem.loss, &trace.final_model, test)
                .map_err(trainer::TrainError::from)?;
            Ok((trace.final_loss(), error))
        })
        .collect()
}

/// One row per grid value and allocation mode.
pub fn run_mnist(config: &MnistConfig, train: Dataset, test: &Dataset) -> Result<Vec<MnistRow>> {
    config.validate()?;
    let partition = data::partition_uniform(train.len(), config.devices)?;
    let problem = Problem::new(train, partition, config.loss()?)?;
    let mut rows = Vec::new();
    for &blocks in &config.grid {
        for &mode in &config.pa_modes {
            let metrics = realization_metrics(&config.train_config(mode, blocks)?, &problem, test, config.realizations)?;
            let (loss, error): (Vec<f64>, Vec<f64>) = metrics.into_iter().unzip();
            rows.push(MnistRow {
                blocks,
                protocol: config.protocol,
                pa_mode: mode,
                train_loss: mean_stderr(&loss),
                test_error: mean_stderr(&error),
                realizations: config.realizations,
                seed: config.seed,
            });
        }
    }
    Ok(rows)
}

pub fn write_mnist_csv<W: Write>(rows: &[MnistRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "blocks",
        "protocol",
        "pa_mode",
        "train_loss_mean",
        "train_loss_stderr",
        "test_error_mean",
        "test_error_stderr",
        "realizations",
        "seed",
    ])?;
    for r in rows {
        w.write_record([
            r.blocks.to_string(),
            r.protocol.name().to_string(),
            r.pa_mode.name().to_string(),
            r.train_loss.0.to_string(),
            r.train_loss.1.to_string(),
            r.test_error.0.to_string(),
            r.test_error.1.to_string(),
            r.realizations.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush().map_err(|source| ExperimentError::Io { path: "<mnist output>".into(), source })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data_dir() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist")
    }

    #[test]
    fn defaults_and_validation() {
        let c = MnistConfig::parse("").unwrap();
        assert_eq!(c, MnistConfig::default());
        assert_eq!(MnistConfig::parse(&c.to_toml()).unwrap(), c);
        assert_eq!(c.loss().unwrap().param_dim(785), 7850);
        assert!(MnistConfig::parse("train_samples = 70000").is_err());
        assert!(MnistConfig::parse("grid = [15]").is_err());
        assert!(MnistConfig::parse("pa_modes = [\"offline_optimal\"]").is_err());
        assert!(MnistConfig::parse("colour = 1").is_err());
    }

    #[test]
    fn chance_level_at_zero_model() {
        let config = MnistConfig { data_dir: data_dir(), train_samples: 50, test_samples: 200, ..Default::default() };
        let (train, test) = load(&config).unwrap();
        assert_eq!((train.len(), train.dim()), (50, 785));
        let err = model::classification_error(&config.loss().unwrap(), &vec![0.0; 7850], &test).unwrap();
        assert!((0.8..=0.95).contains(&err), "{err}");
    }

    #[test]
    fn noiseless_training_reduces_loss() {
        let config = MnistConfig {
            data_dir: data_dir(),
            train_samples: 100,
            test_samples: 100,
            snr_db: 60.0,
            devices: 2,
            ..Default::default()
        };
        let (train, test) = load(&config).unwrap();
        let problem = Problem::new(train, data::partition_uniform(100, 2).unwrap(), config.loss().unwrap()).unwrap();
        let trace = trainer::run(&config.train_config(PaMode::NoDp, 12).unwrap(), &problem).unwrap();
        let losses: Vec<f64> = trace.records.iter().map(|r| r.loss).collect();
        assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
        assert!(trace.final_loss() < trace.initial_loss);
        let err = model::classification_error(&problem.loss, &trace.final_model, &test).unwrap();
        assert!((0.0..=1.0).contains(&err));
    }

    #[test]
    fn missing_files_are_reported() {
        let config = MnistConfig { data_dir: "/nonexistent".into(), ..Default::default() };
        assert!(load(&config).is_err());
    }
}
