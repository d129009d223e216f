//! Weekly information-diet monitoring and persona-based mode guidance.

use std::collections::BTreeMap;

use chrono::{DateTime, Datelike, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::chat::{ChatBackend, ChatRequest};
use crate::detox::PresentationMode;
use crate::emotion::{Emotion, EmotionDistribution};
use crate::error::{Error, Result};
use crate::metrics::{check_theta, emotion_balance_index, high_impact_rate, AnalyzedText};
use crate::metrics::readability::sentences;
use crate::prompts;
use crate::rng::SeededRng;

pub const ADVICE_TEMPERATURE: f64 = 0.3;
pub const GUIDE_TEMPERATURE: f64 = 0.3;
pub const DEFAULT_CONSUMERS: usize = 5;
pub const DEFAULT_TEXTS_PER_CONSUMER: usize = 100;
/// First attempt plus two retries, for both advice and recommendations.
pub const MAX_AGENT_ATTEMPTS: u32 = 3;

const PERSONAS: &str = include_str!("../data/personas.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BrowsingEvent {
    pub consumer_id: u64,
    pub text_id: u64,
    pub timestamp: DateTime<Utc>,
    pub mode_viewed: PresentationMode,
}

/// ISO-8601 week of a UTC instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IsoWeek {
    pub year: i32,
    pub week: u32,
}

impl IsoWeek {
    pub fn of(ts: &DateTime<Utc>) -> Self {
        let w = ts.iso_week();
        Self {
            year: w.year(),
            week: w.week(),
        }
    }
}

impl std::fmt::Display for IsoWeek {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-W{:02}", self.year, self.week)
    }
}

/// Groups viewed text ids per consumer and ISO week, in event order.
pub fn bucket_by_week(events: &[BrowsingEvent]) -> BTreeMap<(u64, IsoWeek), Vec<u64>> {
    let mut out: BTreeMap<(u64, IsoWeek), Vec<u64>> = BTreeMap::new();
    for e in events {
        out.entry((e.consumer_id, IsoWeek::of(&e.timestamp)))
            .or_default()
            .push(e.text_id);
    }
    out
}

/// Draws `per_consumer` texts for each of `n_consumers` pseudo-consumers.
///
/// Draws are without replacement within a consumer and independent across
/// consumers, each from the full pool.
pub fn simulate_consumers(
    pool: &[AnalyzedText],
    n_consumers: usize,
    per_consumer: usize,
    seed: u64,
) -> Result<BTreeMap<u64, Vec<AnalyzedText>>> {
    if pool.len() < per_consumer {
        return Err(Error::Domain(format!(
            "pool of {} texts cannot supply {per_consumer} per consumer",
            pool.len()
        )));
    }
    let mut rng = SeededRng::new(seed);
    Ok((0..n_consumers as u64)
        .map(|c| {
            let picks = rng
                .sample_indices(pool.len(), per_consumer)
                .into_iter()
                .map(|i| pool[i].clone())
                .collect();
            (c, picks)
        })
        .collect())
}

/// Spreads each consumer's texts evenly over the week starting at `week_start`.
pub fn synthetic_week_log(
    assignments: &BTreeMap<u64, Vec<AnalyzedText>>,
    week_start: DateTime<Utc>,
) -> Vec<BrowsingEvent> {
    let week_secs = 7 * 24 * 3600;
    let mut out = Vec::new();
    for (&consumer_id, texts) in assignments {
        let step = week_secs / texts.len().max(1) as i64;
        for (k, t) in texts.iter().enumerate() {
            out.push(BrowsingEvent {
                consumer_id,
                text_id: t.id(),
                timestamp: week_start + Duration::seconds(step * k as i64),
                mode_viewed: PresentationMode::Raw,
            });
        }
    }
    out
}

/// How the weekly EBI is formed from per-text distributions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EbiMode {
    /// EBI of the mean distribution.
    #[default]
    OfMean,
    /// Mean of per-text EBI values.
    MeanOfTexts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeeklySummary {
    pub consumer_id: u64,
    pub n: usize,
    pub mean_stimulus: f64,
    pub hir: f64,
    pub ebi: f64,
    #[serde(rename = "emotions")]
    pub mean_emotions: EmotionDistribution,
}

impl WeeklySummary {
    /// Structured rendering embedded in prompts: fixed field order, three decimals.
    pub fn to_prompt_json(&self) -> String {
        let emotions = Emotion::ALL
            .iter()
            .map(|e| format!("    \"{}\": {:.3}", e.name(), self.mean_emotions.get(*e)))
            .collect::<Vec<_>>()
            .join(",\n");
        format!(
            "{{\n  \"consumer_id\": {},\n  \"n\": {},\n  \"mean_stimulus\": {:.3},\n  \"hir\": {:.3},\n  \"ebi\": {:.3},\n  \"emotions\": {{\n{emotions}\n  }}\n}}",
            self.consumer_id, self.n, self.mean_stimulus, self.hir, self.ebi
        )
    }

    fn metric_values(&self) -> Vec<f64> {
        let mut v = vec![self.mean_stimulus, self.hir, self.ebi];
        v.extend(self.mean_emotions.as_array());
        v
    }
}

pub fn weekly_summary(texts: &[AnalyzedText], consumer_id: u64, theta: f64) -> Result<WeeklySummary> {
    weekly_summary_with(texts, consumer_id, theta, EbiMode::OfMean)
}

pub fn weekly_summary_with(
    texts: &[AnalyzedText],
    consumer_id: u64,
    theta: f64,
    ebi_mode: EbiMode,
) -> Result<WeeklySummary> {
    if texts.is_empty() {
        return Err(Error::Domain(format!("consumer {consumer_id} viewed no texts")));
    }
    check_theta(theta)?;
    let n = texts.len() as f64;
    let scores: Vec<f64> = texts.iter().map(|t| t.stimulus).collect();
    let mean_emotions = EmotionDistribution::mean(texts.iter().map(|t| &t.distribution))?;
    let ebi = match ebi_mode {
        EbiMode::OfMean => emotion_balance_index(&mean_emotions),
        EbiMode::MeanOfTexts => texts.iter().map(|t| t.ebi).sum::<f64>() / n,
    };
    Ok(WeeklySummary {
        consumer_id,
        n: texts.len(),
        mean_stimulus: scores.iter().sum::<f64>() / n,
        hir: high_impact_rate(&scores, theta)?,
        ebi,
        mean_emotions,
    })
}

pub fn advice_prompt(summary: &WeeklySummary) -> (String, String) {
    let user = prompts::render(
        prompts::ADVICE_USER,
        &[("summary_json", &summary.to_prompt_json())],
    );
    (prompts::ADVICE_SYSTEM.trim_end().to_string(), user)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdviceStatus {
    Ok,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Advice {
    pub consumer_id: u64,
    pub text: String,
    pub status: AdviceStatus,
    pub attempts: u32,
}

/// Advice must be non-empty and quote at least one metric from the summary
/// (as 0.xxx, 0.xx, or a percentage with one decimal).
pub fn advice_cites_summary(advice: &str, summary: &WeeklySummary) -> bool {
    if advice.trim().is_empty() {
        return false;
    }
    summary.metric_values().iter().any(|v| {
        [
            format!("{v:.3}"),
            format!("{v:.2}"),
            format!("{:.1}", v * 100.0),
        ]
        .iter()
        .any(|s| advice.contains(s.as_str()))
    })
}

pub fn generate_advice(summary: &WeeklySummary, backend: &dyn ChatBackend) -> Result<Advice> {
    let (system, base_user) = advice_prompt(summary);
    let mut user = base_user.clone();
    let mut last = String::new();
    for attempt in 1..=MAX_AGENT_ATTEMPTS {
        let reply = backend.complete(&ChatRequest {
            system: system.clone(),
            user: user.clone(),
            temperature: ADVICE_TEMPERATURE,
            max_tokens: None,
        })?;
        let reply = reply.trim().to_string();
        if advice_cites_summary(&reply, summary) {
            return Ok(Advice {
                consumer_id: summary.consumer_id,
                text: reply,
                status: AdviceStatus::Ok,
                attempts: attempt,
            });
        }
        user = format!(
            "{base_user}{}",
            prompts::render(
                prompts::CORRECTIVE,
                &[("problem", "the advice must be non-empty and cite at least one number from the summary")]
            )
        );
        last = reply;
    }
    log::warn!("advice for consumer {} failed validation", summary.consumer_id);
    Ok(Advice {
        consumer_id: summary.consumer_id,
        text: last,
        status: AdviceStatus::Warning,
        attempts: MAX_AGENT_ATTEMPTS,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonaProfile {
    pub id: String,
    pub description: String,
}

impl PersonaProfile {
    pub fn new(id: impl Into<String>, description: impl Into<String>) -> Result<Self> {
        let description = description.into();
        if description.trim().is_empty() {
            return Err(Error::Contract("persona description is empty".into()));
        }
        Ok(Self {
            id: id.into(),
            description,
        })
    }
}

/// High-sensitivity, moderate and stimulus-seeking reader profiles.
pub fn builtin_personas() -> Vec<PersonaProfile> {
    serde_json::from_str(PERSONAS).expect("bundled personas parse")
}

pub fn parse_personas(json: &str) -> Result<Vec<PersonaProfile>> {
    let raw: Vec<PersonaProfile> = serde_json::from_str(json)
        .map_err(|e| Error::Protocol(format!("persona file: {e}")))?;
    raw.into_iter()
        .map(|p| PersonaProfile::new(p.id, p.description))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeRecommendation {
    pub persona_id: String,
    pub mode: PresentationMode,
    pub rationale: String,
}

pub fn guide_prompt(persona: &PersonaProfile) -> (String, String) {
    let user = prompts::render(prompts::GUIDE_USER, &[("persona", &persona.description)]);
    (prompts::GUIDE_SYSTEM.trim_end().to_string(), user)
}

/// Parses `MODE: X` / `REASON: ...` lines; the rationale keeps its first sentence.
pub fn parse_recommendation(reply: &str) -> Option<(PresentationMode, String)> {
    let field = |name: &str| {
        reply.lines().find_map(|line| {
            let line = line.trim().trim_start_matches(['*', '-', ' ']);
            let (key, value) = line.split_once(':')?;
            key.trim_matches(['*', ' ']).eq_ignore_ascii_case(name).then(|| value.trim_matches(['*', ' ']).to_string())
        })
    };
    let mode = field("MODE")?.parse().ok()?;
    let reason = field("REASON")?;
    let first = sentences(&reason).first()?.to_string();
    Some((mode, first))
}

pub fn recommend_mode(persona: &PersonaProfile, backend: &dyn ChatBackend) -> Result<ModeRecommendation> {
    let (system, user) = guide_prompt(persona);
    let mut raw = String::new();
    for _ in 0..MAX_AGENT_ATTEMPTS {
        raw = backend.complete(&ChatRequest {
            system: system.clone(),
            user: user.clone(),
            temperature: GUIDE_TEMPERATURE,
            max_tokens: None,
        })?;
        if let Some((mode, rationale)) = parse_recommendation(&raw) {
            return Ok(ModeRecommendation {
                persona_id: persona.id.clone(),
                mode,
                rationale,
            });
        }
    }
    Err(Error::Unparseable {
        attempts: MAX_AGENT_ATTEMPTS,
        raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chat::{RuleBasedChat, ScriptedChat};
    use crate::corpus::{Category, NewsRecord};
    use chrono::TimeZone;

    fn text(id: u64, d: EmotionDistribution) -> AnalyzedText {
        AnalyzedText::new(
            NewsRecord {
                id,
                category: Category::Business,
                text: "Oil prices rose.".into(),
            },
            d,
        )
        .unwrap()
    }

    fn pool(n: u64) -> Vec<AnalyzedText> {
        (0..n).map(|i| text(i, EmotionDistribution::uniform())).collect()
    }

    #[test]
    fn exhaustive_draw_gives_whole_pool() {
        let p = pool(100);
        let a = simulate_consumers(&p, 5, 100, 1).unwrap();
        assert_eq!(a.len(), 5);
        for texts in a.values() {
            let mut ids: Vec<u64> = texts.iter().map(|t| t.id()).collect();
            ids.sort_unstable();
            assert_eq!(ids, (0..100).collect::<Vec<_>>());
        }
        assert_eq!(a, simulate_consumers(&p, 5, 100, 1).unwrap());
    }

    #[test]
    fn single_text_per_consumer_and_small_pool() {
        let a = simulate_consumers(&pool(10), 5, 1, 3).unwrap();
        assert!(a.values().all(|v| v.len() == 1));
        assert!(matches!(simulate_consumers(&pool(3), 5, 4, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn summary_of_two_one_hots() {
        let texts = [
            text(0, EmotionDistribution::one_hot(Emotion::Anger)),
            text(1, EmotionDistribution::one_hot(Emotion::Joy)),
        ];
        let s = weekly_summary(&texts, 7, 0.6).unwrap();
        assert_eq!(s.mean_emotions.get(Emotion::Anger), 0.5);
        assert_eq!(s.mean_emotions.get(Emotion::Joy), 0.5);
        assert!((s.ebi - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.hir, 0.5);
        let per_text = weekly_summary_with(&texts, 7, 0.6, EbiMode::MeanOfTexts).unwrap();
        assert!((per_text.ebi - 1.0 / 6.0).abs() < 1e-12);
        assert!(weekly_summary(&[], 0, 0.6).is_err());
    }

    #[test]
    fn singleton_summary() {
        let d = EmotionDistribution::normalize([3.0, 1.0, 1.0, 2.0, 1.0, 1.0]).unwrap();
        let t = text(0, d);
        let s = weekly_summary(std::slice::from_ref(&t), 0, 0.6).unwrap();
        assert_eq!(s.mean_stimulus, t.stimulus);
        assert!((s.ebi - t.ebi).abs() < 1e-15);
    }

    #[test]
    fn summary_serialization_schema() {
        let d = EmotionDistribution::normalize([0.398, 0.1, 0.1, 0.2, 0.1, 0.102]).unwrap();
        let s = weekly_summary(&[text(0, d)], 0, 0.6).unwrap();
        let v: serde_json::Value = serde_json::to_value(&s).unwrap();
        for key in ["consumer_id", "n", "mean_stimulus", "hir", "ebi", "emotions"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(v["emotions"].get("anger").is_some());
        let (_, user) = advice_prompt(&s);
        assert!(user.contains(&s.to_prompt_json()));
        assert!(user.contains("\"anger\": 0.398"));
        let parsed: serde_json::Value = serde_json::from_str(&s.to_prompt_json()).unwrap();
        assert_eq!(parsed["n"], 1);
    }

    #[test]
    fn advice_prompt_system_and_temperature() {
        let s = weekly_summary(&pool(3), 0, 0.6).unwrap();
        let (system, _) = advice_prompt(&s);
        assert!(system.contains("expert in diagnosing bias"));
        assert!(system.contains("one actionable"));
        let chat = ScriptedChat::new(["Anger is fine at 0.167."]);
        generate_advice(&s, &chat).unwrap();
        assert_eq!(chat.requests()[0].temperature, 0.3);
    }

    #[test]
    fn mock_advice_names_dominant_emotion() {
        let d = EmotionDistribution::normalize([4.0, 1.0, 1.0, 2.0, 1.0, 1.0]).unwrap();
        let s = weekly_summary(&[text(0, d)], 0, 0.6).unwrap();
        let a = generate_advice(&s, &RuleBasedChat).unwrap();
        assert_eq!(a.status, AdviceStatus::Ok);
        assert!(a.text.contains("anger"), "{}", a.text);
    }

    #[test]
    fn empty_advice_retries_then_warns() {
        let s = weekly_summary(&pool(2), 0, 0.6).unwrap();
        let chat = ScriptedChat::new([""]);
        let a = generate_advice(&s, &chat).unwrap();
        assert_eq!(a.status, AdviceStatus::Warning);
        assert_eq!(chat.calls(), 3);
    }

    #[test]
    fn recommendation_parsing() {
        let (m, r) = parse_recommendation("MODE: COOL\nREASON: Calm context helps. Extra words.").unwrap();
        assert_eq!(m, PresentationMode::Cool);
        assert_eq!(r, "Calm context helps.");
        assert!(parse_recommendation("**MODE:** BAL\n**REASON:** Fits.").is_some());
        assert!(parse_recommendation("MODE: MILD\nREASON: x").is_none());
        assert!(parse_recommendation("COOL").is_none());
    }

    #[test]
    fn mock_recommends_graded_modes() {
        let got: Vec<PresentationMode> = builtin_personas()
            .iter()
            .map(|p| recommend_mode(p, &RuleBasedChat).unwrap().mode)
            .collect();
        assert_eq!(
            got,
            [PresentationMode::Cool, PresentationMode::Balanced, PresentationMode::Raw]
        );
    }

    #[test]
    fn invalid_mode_fails_after_retries() {
        let chat = ScriptedChat::new(["MODE: MILD\nREASON: Softer."]);
        let p = PersonaProfile::new("PX", "someone").unwrap();
        match recommend_mode(&p, &chat) {
            Err(Error::Unparseable { attempts, raw }) => {
                assert_eq!(attempts, 3);
                assert!(raw.contains("MILD"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(chat.calls(), 3);
        assert_eq!(chat.requests()[0].temperature, 0.3);
    }

    #[test]
    fn week_bucketing() {
        let a = simulate_consumers(&pool(20), 2, 10, 5).unwrap();
        let monday = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
        let log = synthetic_week_log(&a, monday);
        assert_eq!(log.len(), 20);
        let buckets = bucket_by_week(&log);
        assert_eq!(buckets.len(), 2);
        let key = (0, IsoWeek { year: 2024, week: 1 });
        assert_eq!(buckets[&key].len(), 10);
        assert_eq!(key.1.to_string(), "2024-W01");
    }

    #[test]
    fn empty_persona_rejected() {
        assert!(PersonaProfile::new("P", " ").is_err());
        assert_eq!(builtin_personas().len(), 3);
    }
}
