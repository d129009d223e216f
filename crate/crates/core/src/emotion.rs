//! The six emotion categories and probability distributions over them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the sum of a normalized distribution.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Anger,
    Fear,
    Sadness,
    Joy,
    Love,
    Surprise,
}

impl Emotion {
    /// Canonical order, used for every array-shaped representation.
    pub const ALL: [Emotion; 6] = [
        Emotion::Anger,
        Emotion::Fear,
        Emotion::Sadness,
        Emotion::Joy,
        Emotion::Love,
        Emotion::Surprise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Anger => "anger",
            Emotion::Fear => "fear",
            Emotion::Sadness => "sadness",
            Emotion::Joy => "joy",
            Emotion::Love => "love",
            Emotion::Surprise => "surprise",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Anger, fear and surprise contribute to the stimulus score.
    pub fn is_stimulating(self) -> bool {
        matches!(self, Emotion::Anger | Emotion::Fear | Emotion::Surprise)
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Emotion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Emotion::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Protocol(format!("unknown emotion label {s:?}")))
    }
}

/// A probability distribution over [`Emotion::ALL`].
///
/// Serialized as an object keyed by emotion name so that field order on the
/// wire never decides which probability belongs to which category.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EmotionMap", into = "EmotionMap")]
pub struct EmotionDistribution([f64; 6]);

impl EmotionDistribution {
    pub fn uniform() -> Self {
        Self([1.0 / 6.0; 6])
    }

    pub fn one_hot(emotion: Emotion) -> Self {
        let mut p = [0.0; 6];
        p[emotion.index()] = 1.0;
        Self(p)
    }

    /// Clamps negatives to zero and rescales to sum to one.
    ///
    /// Fails when nothing positive remains or a score is not finite.
    pub fn normalize(raw: [f64; 6]) -> Result<Self> {
        if raw.iter().any(|x| !x.is_finite()) {
            return Err(Error::Protocol(format!("non-finite emotion score in {raw:?}")));
        }
        let clamped = raw.map(|x| x.max(0.0));
        let total: f64 = clamped.iter().sum();
        if total <= 0.0 {
            return Err(Error::Protocol("all emotion scores are zero".into()));
        }
        Ok(Self(clamped.map(|x| x / total)))
    }

    /// Accepts probabilities that already satisfy the invariants.
    pub fn from_probabilities(p: [f64; 6]) -> Result<Self> {
        if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::Contract(format!("probability outside [0, 1] in {p:?}")));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Contract(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self(p))
    }

    /// Componentwise mean. The result is again a distribution.
    pub fn mean<'a, I>(items: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a EmotionDistribution>,
    {
        let mut acc = [0.0; 6];
        let mut n = 0usize;
        for d in items {
            for (a, p) in acc.iter_mut().zip(d.0) {
                *a += p;
            }
            n += 1;
        }
        if n == 0 {
            return Err(Error::Domain("mean of an empty set of distributions".into()));
        }
        Ok(Self(acc.map(|a| a / n as f64)))
    }

    pub fn get(&self, emotion: Emotion) -> f64 {
        self.0[emotion.index()]
    }

    pub fn as_array(&self) -> &[f64; 6] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = (Emotion, f64)> + '_ {
        Emotion::ALL.into_iter().zip(self.0)
    }

    /// Highest-probability emotion; ties resolve to the earlier canonical emotion.
    pub fn dominant(&self) -> Emotion {
        let mut best = Emotion::Anger;
        for (e, p) in self.iter() {
            if p > self.get(best) {
                best = e;
            }
        }
        best
    }
}

#[derive(Serialize, Deserialize)]
struct EmotionMap {
    anger: f64,
    fear: f64,
    sadness: f64,
    joy: f64,
    love: f64,
    surprise: f64,
}

impl From<EmotionDistribution> for EmotionMap {
    fn from(d: EmotionDistribution) -> Self {
        let [anger, fear, sadness, joy, love, surprise] = d.0;
        Self {
            anger,
            fear,
            sadness,
            joy,
            love,
            surprise,
        }
    }
}

impl TryFrom<EmotionMap> for EmotionDistribution {
    type Error = Error;

    fn try_from(m: EmotionMap) -> Result<Self> {
        Self::from_probabilities([m.anger, m.fear, m.sadness, m.joy, m.love, m.surprise])
    }
}
