//! Per-text and collection-level stimulus metrics.

use serde::{Deserialize, Serialize};

use crate::corpus::{Category, NewsRecord};
use crate::emotion::EmotionDistribution;
use crate::error::{Error, Result};

pub mod readability;

pub use readability::flesch_reading_ease;

/// Default high-impact threshold.
pub const DEFAULT_THETA: f64 = 0.6;

/// `min(1, anger + fear + surprise)`.
pub fn stimulus_score(d: &EmotionDistribution) -> f64 {
    let raw: f64 = d
        .iter()
        .filter(|(e, _)| e.is_stimulating())
        .map(|(_, p)| p)
        .sum();
    raw.min(1.0)
}

/// Fraction of scores strictly above `theta`.
pub fn high_impact_rate(scores: &[f64], theta: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Domain("high-impact rate of an empty collection".into()));
    }
    check_theta(theta)?;
    let hits = scores.iter().filter(|&&s| s > theta).count();
    Ok(hits as f64 / scores.len() as f64)
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::Contract(format!("theta {theta} outside [0, 1]")));
    }
    Ok(())
}

/// `1 - 0.5 * sum |p(c) - 1/6|`: 1 for uniform, 1/6 for one-hot.
pub fn emotion_balance_index(d: &EmotionDistribution) -> f64 {
    let l1: f64 = d.as_array().iter().map(|p| (p - 1.0 / 6.0).abs()).sum();
    1.0 - 0.5 * l1
}

/// A text together with its emotion distribution and derived metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzedText {
    #[serde(flatten)]
    pub record: NewsRecord,
    pub distribution: EmotionDistribution,
    pub stimulus: f64,
    pub ebi: f64,
    pub fre: f64,
}

impl AnalyzedText {
    pub fn new(record: NewsRecord, distribution: EmotionDistribution) -> Result<Self> {
        let fre = flesch_reading_ease(&record.text)?;
        Ok(Self {
            stimulus: stimulus_score(&distribution),
            ebi: emotion_balance_index(&distribution),
            fre,
            record,
            distribution,
        })
    }

    pub fn id(&self) -> u64 {
        self.record.id
    }

    pub fn category(&self) -> Category {
        self.record.category
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionStats {
    pub n: usize,
    pub mean_stimulus: f64,
    pub hir: f64,
    pub mean_ebi: f64,
    pub mean_fre: f64,
    pub mean_distribution: EmotionDistribution,
}

pub fn aggregate(texts: &[AnalyzedText], theta: f64) -> Result<CollectionStats> {
    if texts.is_empty() {
        return Err(Error::Domain("aggregate of an empty collection".into()));
    }
    let n = texts.len() as f64;
    let scores: Vec<f64> = texts.iter().map(|t| t.stimulus).collect();
    Ok(CollectionStats {
        n: texts.len(),
        mean_stimulus: scores.iter().sum::<f64>() / n,
        hir: high_impact_rate(&scores, theta)?,
        mean_ebi: texts.iter().map(|t| t.ebi).sum::<f64>() / n,
        mean_fre: texts.iter().map(|t| t.fre).sum::<f64>() / n,
        mean_distribution: EmotionDistribution::mean(texts.iter().map(|t| &t.distribution))?,
    })
}
