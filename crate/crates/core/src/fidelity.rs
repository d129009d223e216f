//! Semantic-preservation checks: embedding cosine similarity and
//! three-way NLI judgments of (original, rewrite) pairs.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::backend::{BackendConfig, HttpJsonClient};
use crate::classifier::truncate_tokens;
use crate::detox::PresentationMode;
use crate::error::{Error, Result};
use crate::metrics::readability::words;

pub const NLI_MAX_TOKENS: usize = 256;
/// Dimension of [`HashedBowEmbedder`] vectors.
pub const MOCK_EMBEDDING_DIM: usize = 256;

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Domain("cosine similarity with a zero vector".into()));
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

pub trait EmbeddingBackend: Send + Sync {
    fn embed(&self, text: &str) -> Result<Vec<f64>>;
}

pub fn embed(text: &str, backend: &dyn EmbeddingBackend) -> Result<Vec<f64>> {
    if text.trim().is_empty() {
        return Err(Error::Contract("cannot embed an empty text".into()));
    }
    let v = backend.embed(text)?;
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Protocol("embedding vector is empty or non-finite".into()));
    }
    Ok(v)
}

/// FNV-1a, 64 bit.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Bucket of a word in the hashed bag-of-words embedding.
pub fn hashed_index(word: &str) -> usize {
    (fnv1a(word.to_lowercase().as_bytes()) % MOCK_EMBEDDING_DIM as u64) as usize
}

/// Offline stand-in for a sentence encoder: word counts hashed into 256
/// buckets, L2-normalized.
#[derive(Debug, Clone, Default)]
pub struct HashedBowEmbedder;

impl EmbeddingBackend for HashedBowEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let mut v = vec![0.0; MOCK_EMBEDDING_DIM];
        for w in words(text) {
            v[hashed_index(w)] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Domain(format!("no words to embed in {text:?}")));
        }
        v.iter_mut().for_each(|x| *x /= norm);
        Ok(v)
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vector: Vec<f64>,
}

/// `{"text"}` → `{"vector": [...]}`.
pub struct HttpEmbedder {
    client: HttpJsonClient,
}

impl HttpEmbedder {
    pub fn new(config: &BackendConfig) -> Result<Self> {
        Ok(Self {
            client: HttpJsonClient::new(config)?,
        })
    }
}

impl EmbeddingBackend for HttpEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let resp: EmbedResponse = self.client.post(&EmbedRequest { text })?;
        Ok(resp.vector)
    }
}

pub fn embedder_from_config(config: &BackendConfig) -> Result<Arc<dyn EmbeddingBackend>> {
    config.validate()?;
    if config.is_offline() {
        Ok(Arc::new(HashedBowEmbedder))
    } else {
        Ok(Arc::new(HttpEmbedder::new(config)?))
    }
}

/// Ordered by tie-break priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NliLabel {
    Entailment,
    Neutral,
    Contradiction,
}

impl NliLabel {
    pub const ALL: [NliLabel; 3] = [NliLabel::Entailment, NliLabel::Neutral, NliLabel::Contradiction];

    pub fn as_str(self) -> &'static str {
        match self {
            NliLabel::Entailment => "entailment",
            NliLabel::Neutral => "neutral",
            NliLabel::Contradiction => "contradiction",
        }
    }
}

impl fmt::Display for NliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub type NliScores = BTreeMap<String, f64>;

pub trait NliBackend: Send + Sync {
    fn scores(&self, premise: &str, hypothesis: &str) -> Result<NliScores>;
}

/// Argmax over the three labels; exact ties go to the earlier label in
/// entailment, neutral, contradiction order.
pub fn argmax_label(scores: &NliScores) -> Result<NliLabel> {
    if scores.len() != 3 {
        return Err(Error::Protocol(format!("expected 3 NLI scores, got {scores:?}")));
    }
    let mut best: Option<(NliLabel, f64)> = None;
    for label in NliLabel::ALL {
        let s = *scores.get(label.as_str()).ok_or_else(|| {
            Error::Protocol(format!("NLI scores missing {label:?} in {scores:?}"))
        })?;
        if s.is_nan() {
            return Err(Error::Protocol("NaN NLI score".into()));
        }
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((label, s));
        }
    }
    Ok(best.expect("three labels checked").0)
}

/// Premise = original, hypothesis = rewrite, each cut to 256 whitespace tokens.
pub fn nli_judge(premise: &str, hypothesis: &str, backend: &dyn NliBackend) -> Result<NliLabel> {
    if premise.trim().is_empty() || hypothesis.trim().is_empty() {
        return Err(Error::Contract("NLI premise and hypothesis must be non-empty".into()));
    }
    let p = truncate_tokens(premise, NLI_MAX_TOKENS);
    let h = truncate_tokens(hypothesis, NLI_MAX_TOKENS);
    argmax_label(&backend.scores(&p, &h)?)
}

#[derive(Serialize)]
struct NliRequest<'a> {
    premise: &'a str,
    hypothesis: &'a str,
}

#[derive(Deserialize)]
struct NliResponse {
    scores: NliScores,
}

/// `{"premise", "hypothesis"}` → `{"scores": {"entailment", "neutral", "contradiction"}}`.
pub struct HttpNli {
    client: HttpJsonClient,
}

impl HttpNli {
    pub fn new(config: &BackendConfig) -> Result<Self> {
        Ok(Self {
            client: HttpJsonClient::new(config)?,
        })
    }
}

impl NliBackend for HttpNli {
    fn scores(&self, premise: &str, hypothesis: &str) -> Result<NliScores> {
        let resp: NliResponse = self.client.post(&NliRequest { premise, hypothesis })?;
        Ok(resp.scores)
    }
}

pub fn nli_from_config(config: &BackendConfig) -> Result<Arc<dyn NliBackend>> {
    config.validate()?;
    if config.is_offline() {
        Ok(Arc::new(OverlapNli))
    } else {
        Ok(Arc::new(HttpNli::new(config)?))
    }
}

const STOPWORDS: &[&str] = &[
    "a", "an", "the", "of", "in", "on", "at", "to", "for", "from", "by", "with", "and", "or",
    "but", "is", "are", "was", "were", "be", "been", "being", "it", "its", "this", "that",
    "these", "those", "as", "has", "have", "had", "will", "would", "can", "could", "may",
    "might", "should", "do", "does", "did", "he", "she", "they", "we", "you", "i", "his", "her",
    "their", "our", "your", "them", "him", "us", "about", "over", "after", "before", "into",
    "than", "then", "there", "here", "also", "just", "up", "down", "out", "per", "not", "no",
    "never", "none", "nor", "neither", "nobody", "nothing", "without", "cannot",
];

const NEGATIONS: &[&str] = &[
    "not", "no", "never", "none", "nor", "neither", "nobody", "nothing", "without", "cannot",
];

fn content_words(text: &str) -> HashSet<String> {
    words(text)
        .into_iter()
        .map(str::to_lowercase)
        .filter(|w| !STOPWORDS.contains(&w.as_str()))
        .collect()
}

fn has_negation(text: &str) -> bool {
    words(text).into_iter().any(|w| {
        let w = w.to_lowercase();
        NEGATIONS.contains(&w.as_str()) || w.ends_with("n't") || w.ends_with("n\u{2019}t")
    })
}

/// Offline NLI rule over content-word overlap (share of hypothesis content
/// words found in the premise): ≥ 0.6 entailment; ≤ 0.1 contradiction when
/// exactly one side is negated; otherwise neutral.
#[derive(Debug, Clone, Default)]
pub struct OverlapNli;

impl OverlapNli {
    pub fn overlap(premise: &str, hypothesis: &str) -> f64 {
        let p = content_words(premise);
        let h = content_words(hypothesis);
        if h.is_empty() {
            return 0.0;
        }
        h.intersection(&p).count() as f64 / h.len() as f64
    }

    pub fn label(premise: &str, hypothesis: &str) -> NliLabel {
        let overlap = Self::overlap(premise, hypothesis);
        if overlap >= 0.6 {
            NliLabel::Entailment
        } else if overlap <= 0.1 && has_negation(premise) != has_negation(hypothesis) {
            NliLabel::Contradiction
        } else {
            NliLabel::Neutral
        }
    }
}

impl NliBackend for OverlapNli {
    fn scores(&self, premise: &str, hypothesis: &str) -> Result<NliScores> {
        let probs = match Self::label(premise, hypothesis) {
            NliLabel::Entailment => [0.8, 0.15, 0.05],
            NliLabel::Neutral => [0.2, 0.7, 0.1],
            NliLabel::Contradiction => [0.1, 0.2, 0.7],
        };
        Ok(NliLabel::ALL
            .iter()
            .zip(probs)
            .map(|(l, p)| (l.as_str().to_string(), p))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityRecord {
    pub text_id: u64,
    pub mode: PresentationMode,
    pub cosine: f64,
    pub nli_label: NliLabel,
}

/// Similarity and NLI label for one (original, rewrite) pair.
pub fn assess(
    text_id: u64,
    mode: PresentationMode,
    original: &str,
    rewrite: &str,
    embedder: &dyn EmbeddingBackend,
    nli: &dyn NliBackend,
) -> Result<FidelityRecord> {
    let a = embed(original, embedder)?;
    let b = embed(rewrite, embedder)?;
    Ok(FidelityRecord {
        text_id,
        mode,
        cosine: cosine_similarity(&a, &b)?,
        nli_label: nli_judge(original, rewrite, nli)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelitySummary {
    pub mode: PresentationMode,
    pub n: usize,
    pub mean_cosine: f64,
    pub entailment_rate: f64,
    pub neutral_rate: f64,
    pub contradiction_rate: f64,
}

pub fn summarize_fidelity(records: &[FidelityRecord]) -> Result<FidelitySummary> {
    let first = records
        .first()
        .ok_or_else(|| Error::Domain("fidelity summary of no records".into()))?;
    if records.iter().any(|r| r.mode != first.mode) {
        return Err(Error::Contract("fidelity records mix presentation modes".into()));
    }
    let n = records.len() as f64;
    let rate = |label| records.iter().filter(|r| r.nli_label == label).count() as f64 / n;
    Ok(FidelitySummary {
        mode: first.mode,
        n: records.len(),
        mean_cosine: records.iter().map(|r| r.cosine).sum::<f64>() / n,
        entailment_rate: rate(NliLabel::Entailment),
        neutral_rate: rate(NliLabel::Neutral),
        contradiction_rate: rate(NliLabel::Contradiction),
    })
}
