//! Six-emotion classification behind a pluggable backend.
//!
//! Whatever the backend returns is truncated on the way in and clamped and
//! renormalized on the way out, so callers always receive a valid
//! [`EmotionDistribution`].

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::backend::{BackendConfig, HttpJsonClient};
use crate::emotion::{Emotion, EmotionDistribution};
use crate::error::{Error, Result};
use crate::metrics::readability::words;

pub const CLASSIFIER_MAX_TOKENS: usize = 128;

/// Keeps the first `max` whitespace-delimited tokens, rejoined by single spaces.
pub fn truncate_tokens(text: &str, max: usize) -> String {
    text.split_whitespace().take(max).collect::<Vec<_>>().join(" ")
}

pub fn truncate_for_classifier(text: &str) -> String {
    truncate_tokens(text, CLASSIFIER_MAX_TOKENS)
}

/// Raw per-emotion scores as they travel on the wire, keyed by name.
pub type RawScores = BTreeMap<String, f64>;

pub trait EmotionBackend: Send + Sync {
    fn raw_scores(&self, text: &str) -> Result<RawScores>;
}

pub struct Classifier {
    backend: Box<dyn EmotionBackend>,
}

impl Classifier {
    pub fn new(backend: impl EmotionBackend + 'static) -> Self {
        Self {
            backend: Box::new(backend),
        }
    }

    pub fn lexicon() -> Self {
        Self::new(LexiconClassifier::default())
    }

    /// Offline sentinels select the lexicon backend; anything else is a URL.
    pub fn from_config(config: &BackendConfig) -> Result<Self> {
        config.validate()?;
        if config.is_offline() {
            Ok(Self::lexicon())
        } else {
            Ok(Self::new(HttpClassifier::new(config)?))
        }
    }

    pub fn classify(&self, text: &str) -> Result<EmotionDistribution> {
        let truncated = truncate_for_classifier(text);
        let raw = self.backend.raw_scores(&truncated)?;
        EmotionDistribution::normalize(scores_to_array(&raw)?)
    }
}

/// One-shot classification against a configured backend.
pub fn classify(text: &str, config: &BackendConfig) -> Result<EmotionDistribution> {
    Classifier::from_config(config)?.classify(text)
}

fn scores_to_array(raw: &RawScores) -> Result<[f64; 6]> {
    if raw.len() != 6 {
        return Err(Error::Protocol(format!(
            "expected 6 emotion scores, got {}",
            raw.len()
        )));
    }
    let mut out = [f64::NAN; 6];
    for (name, &score) in raw {
        let e: Emotion = name.parse()?;
        out[e.index()] = score;
    }
    if out.iter().any(|x| x.is_nan()) {
        return Err(Error::Protocol(format!("duplicate or missing emotion keys in {raw:?}")));
    }
    Ok(out)
}

#[derive(Serialize)]
struct ClassifyRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct ClassifyResponse {
    scores: RawScores,
}

/// `{"text": ...}` → `{"scores": {"anger": f, ...}}`.
pub struct HttpClassifier {
    client: HttpJsonClient,
}

impl HttpClassifier {
    pub fn new(config: &BackendConfig) -> Result<Self> {
        Ok(Self {
            client: HttpJsonClient::new(config)?,
        })
    }

    pub fn with_client(client: HttpJsonClient) -> Self {
        Self { client }
    }
}

impl EmotionBackend for HttpClassifier {
    fn raw_scores(&self, text: &str) -> Result<RawScores> {
        let resp: ClassifyResponse = self.client.post(&ClassifyRequest { text })?;
        Ok(resp.scores)
    }
}

const DEFAULT_LEXICON: &str = include_str!("../data/emotion_lexicon.tsv");

/// Word → emotion table.
#[derive(Debug, Clone)]
pub struct Lexicon {
    words: HashMap<String, Emotion>,
}

impl Lexicon {
    /// Parses `word<TAB>emotion` lines; `#` starts a comment line.
    pub fn parse(source: &str) -> Result<Self> {
        let mut words = HashMap::new();
        for (i, line) in source.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, emotion) = line.split_once('\t').ok_or_else(|| Error::MalformedRow {
                row: i + 1,
                reason: "expected word<TAB>emotion".into(),
            })?;
            let emotion: Emotion = emotion.parse().map_err(|_| Error::MalformedRow {
                row: i + 1,
                reason: format!("unknown emotion {emotion:?}"),
            })?;
            words.insert(word.trim().to_lowercase(), emotion);
        }
        Ok(Self { words })
    }

    pub fn builtin() -> &'static Lexicon {
        static LEXICON: OnceLock<Lexicon> = OnceLock::new();
        LEXICON.get_or_init(|| Lexicon::parse(DEFAULT_LEXICON).expect("bundled lexicon parses"))
    }

    pub fn lookup(&self, word: &str) -> Option<Emotion> {
        self.words.get(&word.to_lowercase()).copied()
    }

    pub fn words_for(&self, emotion: Emotion) -> impl Iterator<Item = &str> {
        self.words
            .iter()
            .filter(move |(_, e)| **e == emotion)
            .map(|(w, _)| w.as_str())
    }

    /// Hit counts per emotion, canonical order.
    pub fn count_hits(&self, text: &str) -> [u32; 6] {
        let mut counts = [0u32; 6];
        for w in words(text) {
            if let Some(e) = self.lookup(w) {
                counts[e.index()] += 1;
            }
        }
        counts
    }
}

/// Bag-of-words lexicon counts with add-one smoothing.
#[derive(Debug, Clone, Default)]
pub struct LexiconClassifier {
    custom: Option<Lexicon>,
}

impl LexiconClassifier {
    pub fn with_lexicon(lexicon: Lexicon) -> Self {
        Self {
            custom: Some(lexicon),
        }
    }

    fn lexicon(&self) -> &Lexicon {
        self.custom.as_ref().unwrap_or_else(|| Lexicon::builtin())
    }

    pub fn distribution(&self, text: &str) -> EmotionDistribution {
        let counts = self.lexicon().count_hits(text);
        EmotionDistribution::normalize(counts.map(|c| f64::from(c) + 1.0))
            .expect("smoothed counts are positive")
    }
}

impl EmotionBackend for LexiconClassifier {
    fn raw_scores(&self, text: &str) -> Result<RawScores> {
        let counts = self.lexicon().count_hits(text);
        Ok(Emotion::ALL
            .iter()
            .map(|e| (e.name().to_string(), f64::from(counts[e.index()]) + 1.0))
            .collect())
    }
}

/// Lexicon classification with the bundled table.
pub fn lexicon_classify(text: &str) -> EmotionDistribution {
    LexiconClassifier::default().distribution(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::testing;
    use std::time::Duration;

    struct Fixed(Vec<(&'static str, f64)>);

    impl EmotionBackend for Fixed {
        fn raw_scores(&self, _: &str) -> Result<RawScores> {
            Ok(self.0.iter().map(|(k, v)| (k.to_string(), *v)).collect())
        }
    }

    fn fixed(v: [f64; 6]) -> Classifier {
        let names = ["anger", "fear", "sadness", "joy", "love", "surprise"];
        Classifier::new(Fixed(names.into_iter().zip(v).collect()))
    }

    #[test]
    fn truncation() {
        assert_eq!(truncate_for_classifier("a b c"), "a b c");
        assert_eq!(truncate_for_classifier("  a \n b\tc "), "a b c");
        let long = vec!["word"; 200].join(" ");
        assert_eq!(truncate_for_classifier(&long), vec!["word"; 128].join(" "));
        assert_eq!(truncate_for_classifier(""), "");
    }

    #[test]
    fn normalizes_backend_scores() {
        let d = fixed([2.0, 1.0, 1.0, 1.0, 1.0, 0.0]).classify("x").unwrap();
        let want = [1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 0.0];
        for (got, want) in d.as_array().iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }
        let u = fixed([1.0; 6]).classify("x").unwrap();
        assert!(u.as_array().iter().all(|p| (p - 1.0 / 6.0).abs() < 1e-15));
        assert!(matches!(fixed([0.0; 6]).classify("x"), Err(Error::Protocol(_))));
    }

    #[test]
    fn wrong_key_set_is_protocol_error() {
        let five = Classifier::new(Fixed(vec![
            ("anger", 1.0),
            ("fear", 1.0),
            ("sadness", 1.0),
            ("joy", 1.0),
            ("love", 1.0),
        ]));
        assert!(matches!(five.classify("x"), Err(Error::Protocol(_))));
        let renamed = Classifier::new(Fixed(vec![
            ("anger", 1.0),
            ("fear", 1.0),
            ("sadness", 1.0),
            ("joy", 1.0),
            ("love", 1.0),
            ("disgust", 1.0),
        ]));
        assert!(matches!(renamed.classify("x"), Err(Error::Protocol(_))));
    }

    #[test]
    fn lexicon_examples() {
        let u = lexicon_classify("The committee met on Tuesday");
        assert!(u.as_array().iter().all(|p| (p - 1.0 / 6.0).abs() < 1e-15));

        let d = lexicon_classify("outrage");
        assert!((d.get(Emotion::Anger) - 2.0 / 7.0).abs() < 1e-15);
        assert!((d.get(Emotion::Joy) - 1.0 / 7.0).abs() < 1e-15);

        let d = lexicon_classify("Outrage OUTRAGE");
        assert!((d.get(Emotion::Anger) - 3.0 / 8.0).abs() < 1e-15);
        assert!((d.get(Emotion::Love) - 1.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn gateway_and_direct_lexicon_agree() {
        let text = "Fans celebrate a stunning victory despite fears of violence";
        assert_eq!(Classifier::lexicon().classify(text).unwrap(), lexicon_classify(text));
        assert_eq!(
            classify(text, &BackendConfig::http(crate::backend::LEXICON_ENDPOINT)).unwrap(),
            lexicon_classify(text)
        );
    }

    #[test]
    fn builtin_lexicon_has_twenty_words_per_emotion() {
        for e in Emotion::ALL {
            assert!(Lexicon::builtin().words_for(e).count() >= 20, "{e}");
        }
    }

    #[test]
    fn http_wire_contract() {
        let body = r#"{"scores":{"surprise":0,"love":1,"joy":1,"sadness":1,"fear":1,"anger":2}}"#;
        let (url, rx) = testing::serve(vec![(200, body.into())]);
        let client = HttpJsonClient::new(&BackendConfig::http(url)).unwrap();
        let c = Classifier::new(HttpClassifier::with_client(client));
        let long = vec!["w"; 300].join(" ");
        let d = c.classify(&long).unwrap();
        assert!((d.get(Emotion::Anger) - 1.0 / 3.0).abs() < 1e-15);
        let sent = rx.recv().unwrap();
        assert_eq!(sent["text"].as_str().unwrap().split(' ').count(), 128);
    }

    #[test]
    fn unreachable_classifier_is_transport_error() {
        let cfg = BackendConfig {
            max_retries: 1,
            ..BackendConfig::http(testing::dead_endpoint())
        };
        let client = HttpJsonClient::new(&cfg)
            .unwrap()
            .with_initial_backoff(Duration::from_millis(1));
        let c = Classifier::new(HttpClassifier::with_client(client));
        assert!(matches!(c.classify("x"), Err(Error::Transport { attempts: 2, .. })));
    }
}
