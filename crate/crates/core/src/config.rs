//! Run configuration: one TOML file covering every stage plus output paths.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::DatasetConfig;
use crate::error::{DramnError, Result};
use crate::experiment::{ModelSpec, DEFAULT_SNRS};
use crate::training::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    /// Everything is written below this directory.
    pub root: PathBuf,
    pub store: String,
    pub cache: String,
    pub checkpoints: String,
    pub reports: String,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            root: PathBuf::from("runs/default"),
            store: "store".into(),
            cache: "cache".into(),
            checkpoints: "checkpoints".into(),
            reports: "reports".into(),
        }
    }
}

impl PathsConfig {
    pub fn store(&self) -> PathBuf {
        self.root.join(&self.store)
    }
    pub fn cache(&self) -> PathBuf {
        self.root.join(&self.cache)
    }
    pub fn checkpoints(&self) -> PathBuf {
        self.root.join(&self.checkpoints)
    }
    pub fn reports(&self) -> PathBuf {
        self.root.join(&self.reports)
    }

    /// Rejects empty or escaping subdirectory names and a root that is an existing file.
    pub fn validate(&self) -> Result<()> {
        for (name, sub) in [
            ("store", &self.store),
            ("cache", &self.cache),
            ("checkpoints", &self.checkpoints),
            ("reports", &self.reports),
        ] {
            let p = Path::new(sub);
            if sub.is_empty() || p.is_absolute() || p.components().any(|c| matches!(c, std::path::Component::ParentDir)) {
                return Err(DramnError::Config(format!("paths.{name} must be a relative subdirectory, got {sub:?}")));
            }
        }
        if self.root.as_os_str().is_empty() {
            return Err(DramnError::Config("paths.root is empty".into()));
        }
        if self.root.is_file() {
            return Err(DramnError::Config(format!("paths.root {} is a file", self.root.display())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateConfig {
    pub threshold: f64,
    /// Window lengths (ms) for the window-size sweep.
    pub window_sweep_ms: Vec<i64>,
    /// Channel counts for the node-subset sweep; the full set is always added.
    pub node_subsets: Vec<usize>,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        EvaluateConfig {
            threshold: 0.5,
            window_sweep_ms: vec![100, 200, 500, 1000, 1500, 2000],
            node_subsets: vec![9, 11, 13, 15, 17, 19],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectConfig {
    pub k: usize,
    pub t_from_ms: i64,
    pub t_to_ms: i64,
    /// Share of strongest edges written to the edge list, in percent.
    pub edge_top_percent: f64,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig {
            k: 4,
            t_from_ms: 19_000,
            t_to_ms: 30_000,
            edge_top_percent: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub snrs_db: Vec<f64>,
    /// SNR range (dB) drawn per sample for the noise-augmented model.
    pub augment_snr_db: (f64, f64),
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            snrs_db: DEFAULT_SNRS.to_vec(),
            augment_snr_db: (5.0, 45.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub repetitions: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: vec![13, 72],
            repetitions: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: PathsConfig,
    pub dataset: DatasetConfig,
    pub model: ModelSpec,
    pub train: TrainConfig,
    pub evaluate: EvaluateConfig,
    pub select: SelectConfig,
    pub noise: NoiseConfig,
    pub bench: BenchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            paths: PathsConfig::default(),
            dataset: DatasetConfig::default(),
            model: ModelSpec::default(),
            train: TrainConfig::default(),
            evaluate: EvaluateConfig::default(),
            select: SelectConfig::default(),
            noise: NoiseConfig::default(),
            bench: BenchConfig::default(),
        }
    }
}

/// Small configuration that runs every command in seconds: six channels
/// (voltage and frequency of three units), a coarse grid and short windows.
pub const DEMO_CONFIG: &str = include_str!("../configs/demo.toml");

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| DramnError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DramnError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            DramnError::Config(m) => DramnError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn demo() -> Self {
        Self::from_toml(DEMO_CONFIG).expect("bundled demo config is valid")
    }

    pub fn validate(&self) -> Result<()> {
        self.paths.validate()?;
        self.dataset.validate()?;
        self.train.validate()?;
        if self.model.feature_dim == 0 || self.model.hidden_dim == 0 || self.model.l_seq == 0 {
            return Err(DramnError::Config("model dimensions must be positive".into()));
        }
        if self.model.l_seq > self.dataset.windows.sequence.l_seq {
            return Err(DramnError::Config(format!(
                "model.l_seq {} exceeds the {} windows per sequence",
                self.model.l_seq, self.dataset.windows.sequence.l_seq
            )));
        }
        if !(0.0..=1.0).contains(&self.evaluate.threshold) {
            return Err(DramnError::Config("evaluate.threshold must lie in [0, 1]".into()));
        }
        if self.select.k == 0 || self.select.t_to_ms < self.select.t_from_ms {
            return Err(DramnError::Config("select.k must be positive and the time range ordered".into()));
        }
        if self.noise.augment_snr_db.1 < self.noise.augment_snr_db.0 {
            return Err(DramnError::Config("noise.augment_snr_db must be ordered".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of everything except output paths,
    /// so identical runs written to different directories share a hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.paths = PathsConfig::default();
        let json = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}
