use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelConfig, Equalization, FadingMode};
use crate::cloud::synth::parse_families;
use crate::codecs::CodecSpec;
use crate::error::{Error, Result};
use crate::neural::{Architecture, TrainSchedule};

/// Everything an experiment run depends on besides the master seed override.
/// Loaded from TOML; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Channel draws per test cloud and operating point.
    pub n_realizations: usize,
    /// Checkpoint used by the evaluation commands; defaults to
    /// `<out_dir>/model.ckpt`.
    pub model_path: Option<PathBuf>,
    pub dataset: DatasetConfig,
    pub model: Architecture,
    pub train: TrainConfig,
    pub channel: ChannelGrid,
    pub codecs: CodecLists,
    pub snapshot: SnapshotConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// Directory with an `index.txt` manifest. When absent a synthetic
    /// dataset is generated from the fields below.
    pub path: Option<PathBuf>,
    pub families: Vec<String>,
    pub train_count: usize,
    pub test_count: usize,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(flatten)]
    pub schedule: TrainSchedule,
    pub snr_db: f64,
    pub mode: FadingMode,
    pub equalization: Equalization,
    pub precoding: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelGrid {
    pub snr_db: Vec<f64>,
    pub mode: FadingMode,
    pub equalization: Equalization,
    pub precoding: bool,
    /// Operating SNR of the overhead sweep.
    pub overhead_snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodecLists {
    pub overhead_sweep: Vec<String>,
    pub snr_sweep: Vec<String>,
    pub snapshot: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnapshotConfig {
    /// Test cloud to reconstruct; the first test cloud when unset.
    pub cloud_id: Option<String>,
    pub snr_db: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            out_dir: PathBuf::from("out"),
            n_realizations: 20,
            model_path: None,
            dataset: DatasetConfig::default(),
            model: Architecture::default(),
            train: TrainConfig::default(),
            channel: ChannelGrid::default(),
            codecs: CodecLists::default(),
            snapshot: SnapshotConfig::default(),
        }
    }
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            path: None,
            families: vec!["sphere".into(), "airplane".into(), "box".into()],
            train_count: 200,
            test_count: 34,
            points: 512,
        }
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            schedule: TrainSchedule::default(),
            snr_db: 20.0,
            mode: FadingMode::Rayleigh,
            equalization: Equalization::Post,
            precoding: true,
        }
    }
}

impl Default for ChannelGrid {
    fn default() -> Self {
        Self {
            snr_db: vec![-5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0],
            mode: FadingMode::Rayleigh,
            equalization: Equalization::Post,
            precoding: true,
            overhead_snr_db: 20.0,
        }
    }
}

impl Default for CodecLists {
    fn default() -> Self {
        let mut overhead: Vec<String> = vec!["gnn".into()];
        overhead.extend([100, 200, 300, 500].map(|b| format!("holocast:{b}")));
        overhead.extend((2..=12).map(|b| format!("givens:300:{b}")));
        overhead.extend(["0.05", "0.1", "0.25", "0.5", "1"].map(|f| format!("softcast:{f}")));
        Self {
            overhead_sweep: overhead,
            snr_sweep: ["gnn", "givens:300:5", "givens:300:12", "softcast:0.25"].map(String::from).to_vec(),
            snapshot: ["gnn", "holocast:300", "givens:300:5", "softcast:0.25"].map(String::from).to_vec(),
        }
    }
}

impl Default for SnapshotConfig {
    fn default() -> Self {
        Self { cloud_id: None, snr_db: 20.0 }
    }
}

impl TrainConfig {
    pub fn channel(&self, avg_power: f64) -> ChannelConfig {
        ChannelConfig { avg_power, ..ChannelConfig::new(self.snr_db, self.mode, self.equalization, self.precoding) }
    }
}

impl ChannelGrid {
    pub fn at(&self, snr_db: f64, avg_power: f64) -> ChannelConfig {
        ChannelConfig { avg_power, ..ChannelConfig::new(snr_db, self.mode, self.equalization, self.precoding) }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string().replace('\n', " ")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn model_path(&self) -> PathBuf {
        self.model_path.clone().unwrap_or_else(|| self.out_dir.join("model.ckpt"))
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        if self.channel.snr_db.is_empty() {
            return cfg_err("channel.snr_db must not be empty".into());
        }
        if self.channel.snr_db.iter().chain([&self.channel.overhead_snr_db, &self.train.snr_db]).any(|s| s.is_nan()) {
            return cfg_err("SNR values must be numbers".into());
        }
        if self.n_realizations == 0 {
            return cfg_err("n_realizations must be positive".into());
        }
        if self.model.n_points != self.dataset.points && self.dataset.path.is_none() {
            return cfg_err(format!(
                "model.n_points ({}) differs from dataset.points ({})",
                self.model.n_points, self.dataset.points
            ));
        }
        self.model.validate().map_err(|e| Error::Config(format!("model: {e}")))?;
        if self.train.schedule.batch_size == 0 {
            return cfg_err("train.batch_size must be positive".into());
        }
        if let Some(p) = &self.dataset.path {
            if !p.join(crate::cloud::io::MANIFEST_NAME).is_file() {
                return cfg_err(format!("dataset manifest not found under {}", p.display()));
            }
        } else {
            parse_families(&self.dataset.families).map_err(|e| Error::Config(e.to_string()))?;
            if self.dataset.train_count == 0 || self.dataset.test_count == 0 {
                return cfg_err("dataset needs at least one training and one test cloud".into());
            }
        }
        for list in [&self.codecs.overhead_sweep, &self.codecs.snr_sweep, &self.codecs.snapshot] {
            for s in list {
                s.parse::<CodecSpec>().map_err(|e| Error::Config(e.to_string()))?;
            }
        }
        Ok(())
    }
}
