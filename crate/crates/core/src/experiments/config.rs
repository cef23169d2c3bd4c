//! Flat TOML run and sweep configuration.
//!
//! Every key is optional. Missing keys take the defaults below; the channel
//! and model-radius defaults depend on the `setting`.
//!
//! | key | default |
//! |-----|---------|
//! | `protocol` | `"oma"` |
//! | `pa_mode` | `"offline_optimal"` (offline), `"online"` (online) |
//! | `setting` | `"offline"` |
//! | `epsilon`, `delta` | `20`, `0.01` |
//! | `snr_db`, `noise_power` | `30`, `1` |
//! | `rice_factor`, `correlation` | `10`, `1` (offline); `5`, `0` (online) |
//! | `radius` | `3.2` (offline); `10` (online) |
//! | `clip` | `20` |
//! | `devices`, `blocks` | `10`, `30` |
//! | `lambda` | `5e-5` |
//! | `samples`, `dim`, `label_noise` | `10000`, `10`, `0.2` |
//! | `max_fraction` | `1 / devices` (uniform split) |
//! | `channel_predictor` | `"conditional_mean"` |
//! | `artificial_noise` | `0` |
//! | `channel_noise` | `true` |
//! | `seed` | `0` |
//! | `realizations` | `200` (offline); `50` (online) |
//! | `axis`, `grid` | sweep axis and its values; required by `sweep` |
//! | `protocols` | `["oma", "noma"]` |
//! | `pa_modes` | `[adaptive, "static", "no_dp"]` |

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ExperimentError, Result};
use crate::channel::{ChannelParams, PowerPredictor};
use crate::model::LossSpec;
use crate::privacy::DpTarget;
use crate::trainer::{PaMode, Protocol, Setting, TrainConfig};

/// Swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Epsilon,
    SnrDb,
    MaxFraction,
    Blocks,
    Devices,
    Clip,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Epsilon => "epsilon",
            Self::SnrDb => "snr_db",
            Self::MaxFraction => "max_fraction",
            Self::Blocks => "blocks",
            Self::Devices => "devices",
            Self::Clip => "clip",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pa_mode: Option<PaMode>,
    pub setting: Setting,
    pub epsilon: f64,
    pub delta: f64,
    pub snr_db: f64,
    pub noise_power: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rice_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    pub clip: f64,
    pub devices: usize,
    pub blocks: usize,
    pub lambda: f64,
    pub samples: usize,
    pub dim: usize,
    pub label_noise: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_fraction: Option<f64>,
    pub channel_predictor: PowerPredictor,
    pub artificial_noise: f64,
    pub channel_noise: bool,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realizations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<Axis>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<f64>,
    pub protocols: Vec<Protocol>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pa_modes: Option<Vec<PaMode>>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            protocol: Protocol::Oma,
            pa_mode: None,
            setting: Setting::Offline,
            epsilon: 20.0,
            delta: 0.01,
            snr_db: 30.0,
            noise_power: 1.0,
            rice_factor: None,
            correlation: None,
            radius: None,
            clip: 20.0,
            devices: 10,
            blocks: 30,
            lambda: 5e-5,
            samples: 10_000,
            dim: 10,
            label_noise: 0.2,
            max_fraction: None,
            channel_predictor: PowerPredictor::ConditionalMean,
            artificial_noise: 0.0,
            channel_noise: true,
            seed: 0,
            realizations: None,
            axis: None,
            grid: Vec::new(),
            protocols: vec![Protocol::Oma, Protocol::Noma],
            pa_modes: None,
        }
    }
}

impl ExperimentConfig {
    /// Parses TOML text; unknown keys and mistyped values are errors that
    /// carry the offending line.
    pub fn parse(text: &str) -> Result<Self> {
        let raw: Self = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        let resolved = raw.resolved();
        resolved.validate()?;
        Ok(resolved)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io { path: path.into(), source })?;
        Self::parse(&text)
    }

    /// TOML with every key spelled out; parsing it gives back `self`.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.resolved()).expect("configuration serializes")
    }

    /// Fills the setting-dependent defaults.
    pub fn resolved(&self) -> Self {
        let online = self.setting == Setting::Online;
        let pick = |v: Option<f64>, offline: f64, on: f64| Some(v.unwrap_or(if online { on } else { offline }));
        let adaptive = if online { PaMode::Online } else { PaMode::OfflineOptimal };
        Self {
            pa_mode: Some(self.pa_mode.unwrap_or(adaptive)),
            rice_factor: pick(self.rice_factor, 10.0, 5.0),
            correlation: pick(self.correlation, 1.0, 0.0),
            radius: pick(self.radius, 3.2, 10.0),
            max_fraction: Some(self.max_fraction.unwrap_or(1.0 / self.devices.max(1) as f64)),
            realizations: Some(self.realizations.unwrap_or(if online { 50 } else { 200 })),
            pa_modes: Some(self.pa_modes.clone().unwrap_or_else(|| vec![adaptive, PaMode::Static, PaMode::NoDp])),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.realizations == Some(0) {
            return bad("realizations must be at least 1".into());
        }
        if self.axis.is_some() && self.grid.is_empty() {
            return bad("a sweep axis needs a nonempty grid".into());
        }
        if self.protocols.is_empty() || self.pa_modes.as_ref().is_some_and(Vec::is_empty) {
            return bad("protocols and pa_modes must be nonempty".into());
        }
        if self.samples == 0 || self.dim < 5 || !(self.label_noise >= 0.0) {
            return bad("need samples >= 1, dim >= 5 and label_noise >= 0".into());
        }
        let base = self.train_config()?;
        base.validate()?;
        for mode in self.resolved().pa_modes.unwrap_or_default() {
            TrainConfig { pa_mode: mode, ..base.clone() }.validate()?;
        }
        Ok(())
    }

    pub fn realizations(&self) -> usize {
        self.resolved().realizations.unwrap_or(1)
    }

    pub fn max_fraction(&self) -> f64 {
        self.resolved().max_fraction.unwrap_or(1.0)
    }

    /// Trainer settings for the configured protocol and allocation mode.
    pub fn train_config(&self) -> Result<TrainConfig> {
        let r = self.resolved();
        let dp = DpTarget::new(r.epsilon, r.delta)?;
        let channel = ChannelParams::from_snr_db(
            r.rice_factor.unwrap_or_default(),
            r.correlation.unwrap_or_default(),
            r.noise_power,
            r.snr_db,
            r.dim,
        )?;
        Ok(TrainConfig {
            protocol: r.protocol,
            pa_mode: r.pa_mode.unwrap_or(PaMode::OfflineOptimal),
            setting: r.setting,
            blocks: r.blocks,
            devices: r.devices,
            dp,
            channel,
            loss: LossSpec::ridge(r.lambda),
            radius: r.radius.unwrap_or_default(),
            clip: r.clip,
            predictor: r.channel_predictor,
            artificial_noise: r.artificial_noise,
            channel_noise: r.channel_noise,
            seed: r.seed,
        })
    }

    /// Copy with the swept parameter set to `value`.
    pub fn with_axis(&self, axis: Axis, value: f64) -> Result<Self> {
        let mut c = self.resolved();
        let count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(ExperimentError::Config(format!("{} must be a positive integer, got {v}", axis.name())))
            }
        };
        match axis {
            Axis::Epsilon => c.epsilon = value,
            Axis::SnrDb => c.snr_db = value,
            Axis::MaxFraction => c.max_fraction = Some(value),
            Axis::Blocks => c.blocks = count(value)?,
            Axis::Devices => {
                // A uniform split stays uniform.
                let uniform = (c.max_fraction() * c.devices as f64 - 1.0).abs() < 1e-12;
                c.devices = count(value)?;
                if uniform {
                    c.max_fraction = Some(1.0 / c.devices as f64);
                }
            }
            Axis::Clip => c.clip = value,
        }
        Ok(c)
    }
}
