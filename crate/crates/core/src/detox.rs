//! Rewriting texts into the BALANCED and COOL presentation modes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chat::{ChatBackend, ChatRequest};
use crate::error::{Error, Result};
use crate::metrics::readability::sentence_count;
use crate::prompts;

pub const REWRITE_TEMPERATURE: f64 = 0.2;
pub const REWRITE_MAX_TOKENS: u32 = 150;
/// First attempt plus two corrective retries.
pub const MAX_REWRITE_ATTEMPTS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PresentationMode {
    Raw,
    Balanced,
    Cool,
}

impl PresentationMode {
    pub const ALL: [PresentationMode; 3] = [
        PresentationMode::Raw,
        PresentationMode::Balanced,
        PresentationMode::Cool,
    ];
    pub const REWRITTEN: [PresentationMode; 2] = [PresentationMode::Balanced, PresentationMode::Cool];

    pub fn as_str(self) -> &'static str {
        match self {
            PresentationMode::Raw => "RAW",
            PresentationMode::Balanced => "BALANCED",
            PresentationMode::Cool => "COOL",
        }
    }

    /// Sentences a rewrite in this mode must contain.
    pub fn required_sentences(self) -> Option<usize> {
        match self {
            PresentationMode::Raw => None,
            PresentationMode::Balanced => Some(1),
            PresentationMode::Cool => Some(2),
        }
    }

    fn require_rewritten(self) -> Result<()> {
        if self == PresentationMode::Raw {
            return Err(Error::Contract("RAW is not a rewrite mode".into()));
        }
        Ok(())
    }
}

impl fmt::Display for PresentationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresentationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "RAW" => Ok(PresentationMode::Raw),
            "BALANCED" | "BAL" => Ok(PresentationMode::Balanced),
            "COOL" => Ok(PresentationMode::Cool),
            other => Err(Error::Protocol(format!("unknown presentation mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewriteRequest {
    pub original: String,
    pub mode: PresentationMode,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl RewriteRequest {
    pub fn new(original: impl Into<String>, mode: PresentationMode) -> Result<Self> {
        mode.require_rewritten()?;
        Ok(Self {
            original: original.into(),
            mode,
            temperature: REWRITE_TEMPERATURE,
            max_output_tokens: REWRITE_MAX_TOKENS,
        })
    }
}

/// (system prompt, user prompt) for one rewrite.
pub fn build_prompts(original: &str, mode: PresentationMode) -> Result<(String, String)> {
    mode.require_rewritten()?;
    let template = match mode {
        PresentationMode::Balanced => prompts::BALANCED_USER,
        _ => prompts::COOL_USER,
    };
    let length = original.chars().count().to_string();
    let user = prompts::render(template, &[("original", original), ("length", &length)]);
    Ok((prompts::EDITOR_SYSTEM.trim_end().to_string(), user))
}

fn send(backend: &dyn ChatBackend, request: &RewriteRequest, user: String, system: String) -> Result<String> {
    let text = backend.complete(&ChatRequest {
        system,
        user,
        temperature: request.temperature,
        max_tokens: Some(request.max_output_tokens),
    })?;
    let text = text.trim();
    if text.is_empty() {
        return Err(Error::Protocol(format!(
            "empty {} rewrite from chat backend",
            request.mode
        )));
    }
    Ok(text.to_string())
}

/// One backend call; returns the trimmed reply.
pub fn rewrite(request: &RewriteRequest, backend: &dyn ChatBackend) -> Result<String> {
    let (system, user) = build_prompts(&request.original, request.mode)?;
    send(backend, request, user, system)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationStatus {
    Ok,
    LengthViolation,
    SentenceCountViolation,
    AcceptedAfterRetries,
}

impl ValidationStatus {
    pub fn is_flagged(self) -> bool {
        self != ValidationStatus::Ok
    }

    fn describe(self, mode: PresentationMode) -> String {
        match self {
            ValidationStatus::LengthViolation => {
                "the length must stay within ±20% of the original character count".into()
            }
            ValidationStatus::SentenceCountViolation => format!(
                "{mode} output must contain exactly {} sentence(s)",
                mode.required_sentences().unwrap_or(0)
            ),
            _ => String::new(),
        }
    }
}

/// Character length within `[0.8 L, 1.2 L]` (inclusive), then sentence count.
pub fn validate_rewrite(original: &str, rewritten: &str, mode: PresentationMode) -> Result<ValidationStatus> {
    mode.require_rewritten()?;
    let l = original.chars().count();
    let r = rewritten.chars().count();
    // r >= 0.8 L  <=>  5r >= 4L;  r <= 1.2 L  <=>  5r <= 6L
    if 5 * r < 4 * l || 5 * r > 6 * l {
        return Ok(ValidationStatus::LengthViolation);
    }
    if Some(sentence_count(rewritten)) != mode.required_sentences() {
        return Ok(ValidationStatus::SentenceCountViolation);
    }
    Ok(ValidationStatus::Ok)
}

/// Final result for one mode of one text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewriteOutcome {
    pub text: String,
    pub status: ValidationStatus,
    pub attempts: u32,
    /// Violation seen on the last attempt when the status is flagged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_violation: Option<ValidationStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewriteBundle {
    pub original: String,
    pub balanced: RewriteOutcome,
    pub cool: RewriteOutcome,
}

impl RewriteBundle {
    pub fn outcome(&self, mode: PresentationMode) -> Option<&RewriteOutcome> {
        match mode {
            PresentationMode::Raw => None,
            PresentationMode::Balanced => Some(&self.balanced),
            PresentationMode::Cool => Some(&self.cool),
        }
    }
}

/// Rewrites into one mode, retrying with a corrective note on validation failure.
pub fn detoxify_mode(original: &str, mode: PresentationMode, backend: &dyn ChatBackend) -> Result<RewriteOutcome> {
    if original.trim().is_empty() {
        return Err(Error::Contract("cannot rewrite an empty text".into()));
    }
    let request = RewriteRequest::new(original, mode)?;
    let (system, base_user) = build_prompts(original, mode)?;
    let mut user = base_user.clone();
    let mut last = None;
    for attempt in 1..=MAX_REWRITE_ATTEMPTS {
        let text = send(backend, &request, user, system.clone())?;
        let status = validate_rewrite(original, &text, mode)?;
        if status == ValidationStatus::Ok {
            return Ok(RewriteOutcome {
                text,
                status,
                attempts: attempt,
                last_violation: None,
            });
        }
        user = format!(
            "{base_user}{}",
            prompts::render(prompts::CORRECTIVE, &[("problem", &status.describe(mode))])
        );
        last = Some((text, status));
    }
    let (text, violation) = last.expect("at least one attempt ran");
    Ok(RewriteOutcome {
        text,
        status: ValidationStatus::AcceptedAfterRetries,
        attempts: MAX_REWRITE_ATTEMPTS,
        last_violation: Some(violation),
    })
}

/// Produces both rewrite modes for one text.
pub fn detoxify(original: &str, backend: &dyn ChatBackend) -> Result<RewriteBundle> {
    Ok(RewriteBundle {
        original: original.to_string(),
        balanced: detoxify_mode(original, PresentationMode::Balanced, backend)?,
        cool: detoxify_mode(original, PresentationMode::Cool, backend)?,
    })
}
