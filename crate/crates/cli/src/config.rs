use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use calmfeed_core::backend::BackendConfig;
use calmfeed_core::metrics::DEFAULT_THETA;
use calmfeed_core::monitor::{EbiMode, DEFAULT_CONSUMERS, DEFAULT_TEXTS_PER_CONSUMER};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Backends {
    pub classifier: BackendConfig,
    pub chat: BackendConfig,
    pub embedding: BackendConfig,
    pub nli: BackendConfig,
}

impl Default for Backends {
    fn default() -> Self {
        Self {
            classifier: BackendConfig::http(calmfeed_core::backend::LEXICON_ENDPOINT),
            chat: BackendConfig::mock(),
            embedding: BackendConfig::mock(),
            nli: BackendConfig::mock(),
        }
    }
}

/// Maximum in-flight backend calls per stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Concurrency {
    pub classifier: usize,
    pub chat: usize,
    pub fidelity: usize,
}

impl Default for Concurrency {
    fn default() -> Self {
        Self {
            classifier: 8,
            chat: 4,
            fidelity: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus_path: Option<PathBuf>,
    pub per_class_count: usize,
    pub theta: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Only texts with a RAW stimulus score at or above this value are rewritten.
    pub min_stimulus: Option<f64>,
    pub allow_flagged: bool,
    pub consumers: usize,
    pub texts_per_consumer: usize,
    pub weekly_ebi: EbiMode,
    /// JSON list of `{id, description}`; the bundled personas when unset.
    pub personas_path: Option<PathBuf>,
    pub backends: Backends,
    pub concurrency: Concurrency,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus_path: None,
            per_class_count: 200,
            theta: DEFAULT_THETA,
            seed: 42,
            out_dir: PathBuf::from("out"),
            min_stimulus: None,
            allow_flagged: false,
            consumers: DEFAULT_CONSUMERS,
            texts_per_consumer: DEFAULT_TEXTS_PER_CONSUMER,
            weekly_ebi: EbiMode::OfMean,
            personas_path: None,
            backends: Backends::default(),
            concurrency: Concurrency::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let raw = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&raw).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Offline backends for every stage.
    pub fn force_mock_backends(&mut self) {
        self.backends = Backends::default();
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            bail!("theta must lie in [0, 1], got {}", self.theta);
        }
        if self.per_class_count == 0 {
            bail!("per_class_count must be at least 1");
        }
        if let Some(m) = self.min_stimulus {
            if !(0.0..=1.0).contains(&m) {
                bail!("min_stimulus must lie in [0, 1], got {m}");
            }
        }
        if self.consumers == 0 || self.texts_per_consumer == 0 {
            bail!("consumers and texts_per_consumer must be positive");
        }
        let c = &self.concurrency;
        if c.classifier == 0 || c.chat == 0 || c.fidelity == 0 {
            bail!("concurrency limits must be positive");
        }
        for (name, b) in [
            ("classifier", &self.backends.classifier),
            ("chat", &self.backends.chat),
            ("embedding", &self.backends.embedding),
            ("nli", &self.backends.nli),
        ] {
            b.validate().with_context(|| format!("{name} backend"))?;
        }
        Ok(())
    }
}
