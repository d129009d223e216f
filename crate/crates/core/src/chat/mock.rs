//! Deterministic offline chat backend.
//!
//! Recognises the three prompt families built by this crate and answers each
//! with a fixed rule:
//!
//! * rewrite: delete sensational words, fold the text into one sentence, and
//!   for COOL append a canned context sentence; then fit the result into the
//!   ±20% character window when possible.
//! * advice: name the dominant emotion and HIR from the embedded summary.
//! * mode guide: keyword rules over the reader profile.

use std::collections::HashSet;
use std::sync::OnceLock;

use crate::chat::{ChatBackend, ChatRequest};
use crate::error::{Error, Result};
use crate::metrics::readability::words;
use crate::prompts;

const SENSATIONAL: &str = include_str!("../../data/sensational_words.txt");

const PADDING: [&str; 4] = [
    ", according to available reports",
    ", officials said",
    ", as reported",
    ", per the latest figures",
];

/// Longest first; the first one that fits the length budget is used.
const SUPPLEMENTS: [&str; 4] = [
    "This summary reflects information available at the time of reporting and may be updated as more details emerge.",
    "Further background is available in the original report and related coverage.",
    "Details may change as more information becomes available.",
    "Reports remain preliminary.",
];

fn sensational_words() -> &'static HashSet<String> {
    static SET: OnceLock<HashSet<String>> = OnceLock::new();
    SET.get_or_init(|| {
        SENSATIONAL
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect()
    })
}

/// True for words the offline rewriter removes.
pub fn is_sensational(word: &str) -> bool {
    sensational_words().contains(&word.to_lowercase())
}

#[derive(Debug, Clone, Default)]
pub struct RuleBasedChat;

impl ChatBackend for RuleBasedChat {
    fn complete(&self, request: &ChatRequest) -> Result<String> {
        let system = request.system.trim();
        if system == prompts::EDITOR_SYSTEM.trim() {
            let original = prompts::fenced_text(&request.user)
                .ok_or_else(|| Error::Protocol("rewrite prompt without fenced text".into()))?;
            let cool = request.user.starts_with("Mode: COOL");
            Ok(if cool {
                cool_rewrite(original)
            } else {
                balanced_rewrite(original)
            })
        } else if system == prompts::ADVICE_SYSTEM.trim() {
            advice(&request.user)
        } else if system == prompts::GUIDE_SYSTEM.trim() {
            Ok(recommend(&request.user))
        } else {
            Err(Error::Protocol("offline chat backend does not recognise this prompt".into()))
        }
    }
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Drops sensational words and merges sentences into one, without a final terminator.
pub fn neutralize(text: &str) -> String {
    let mut kept: Vec<String> = Vec::new();
    for token in text.split_whitespace() {
        let ws = words(token);
        if !ws.is_empty() && ws.iter().all(|w| is_sensational(w)) {
            // Keep trailing punctuation of a dropped word attached to the previous one.
            let tail: String = token
                .chars()
                .rev()
                .take_while(|c| !c.is_alphanumeric())
                .collect::<Vec<_>>()
                .into_iter()
                .rev()
                .collect();
            if let (Some(prev), false) = (kept.last_mut(), tail.is_empty()) {
                prev.push_str(&tail);
            }
            continue;
        }
        kept.push(token.to_string());
    }
    let joined = kept.join(" ");
    // Interior sentence ends become commas; the trailing one is removed.
    let mut out = String::with_capacity(joined.len());
    let chars: Vec<char> = joined.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let mut j = i;
            while j + 1 < chars.len() && matches!(chars[j + 1], '.' | '!' | '?') {
                j += 1;
            }
            let boundary = j + 1 == chars.len() || chars[j + 1].is_whitespace();
            if boundary {
                if j + 1 < chars.len() {
                    out.push(',');
                }
                i = j + 1;
                continue;
            }
        }
        out.push(c);
        i += 1;
    }
    out.trim_end_matches([',', ' ']).to_string()
}

fn pad_into_window(mut body: String, min: usize, max: usize, reserved: usize) -> String {
    for p in PADDING.iter().cycle().take(16) {
        if char_len(&body) + 1 + reserved >= min {
            break;
        }
        if char_len(&body) + char_len(p) + 1 + reserved > max {
            break;
        }
        body.push_str(p);
    }
    body
}

fn window(original: &str) -> (usize, usize) {
    let l = char_len(original);
    // ceil(0.8 L), floor(1.2 L) in integer arithmetic
    ((4 * l).div_ceil(5), (6 * l) / 5)
}

fn balanced_rewrite(original: &str) -> String {
    let (min, max) = window(original);
    let body = pad_into_window(neutralize(original), min, max, 0);
    format!("{body}.")
}

fn cool_rewrite(original: &str) -> String {
    let (min, max) = window(original);
    let mut body = neutralize(original);
    let shortest = SUPPLEMENTS[SUPPLEMENTS.len() - 1];
    let supplement = SUPPLEMENTS
        .iter()
        .copied()
        .find(|s| char_len(&body) + 2 + char_len(s) <= max)
        .unwrap_or(shortest);
    // Shorten the neutral part by whole words when even the shortest supplement overflows.
    while char_len(&body) + 2 + char_len(supplement) > max {
        match body.rfind(' ') {
            Some(i) => body.truncate(i),
            None => break,
        }
        body = body.trim_end_matches([',', ' ']).to_string();
    }
    let body = pad_into_window(body, min, max, 1 + char_len(supplement));
    format!("{body}. {supplement}")
}

fn advice(user: &str) -> Result<String> {
    let start = user
        .find('{')
        .ok_or_else(|| Error::Protocol("advice prompt without summary".into()))?;
    let end = user
        .rfind('}')
        .ok_or_else(|| Error::Protocol("advice prompt without summary".into()))?;
    let v: serde_json::Value = serde_json::from_str(&user[start..=end])
        .map_err(|e| Error::Protocol(format!("advice summary is not JSON: {e}")))?;
    let emotions = v["emotions"]
        .as_object()
        .ok_or_else(|| Error::Protocol("summary lacks emotions".into()))?;
    let (dominant, share) = emotions
        .iter()
        .filter_map(|(k, x)| x.as_f64().map(|x| (k.as_str(), x)))
        .fold(("", f64::MIN), |best, cur| if cur.1 > best.1 { cur } else { best });
    let hir = v["hir"].as_f64().unwrap_or(0.0);
    let action = if hir > 0.5 {
        "Try diversifying toward science, technology or positive stories, and switch your display mode to COOL or BALANCED to moderate the emotional impact."
    } else {
        "Try mixing in more science and technology stories; your current display mode can stay as it is."
    };
    Ok(format!(
        "Your dominant emotion this week is {dominant} at {share:.3}, with an HIR of {hir:.3}. {action}"
    ))
}

fn recommend(user: &str) -> String {
    let profile = user.to_lowercase();
    if profile.contains("sensitiv") || profile.contains("anxiety") {
        "MODE: COOL\nREASON: Gentle, context-rich rewriting reduces anxiety and keeps the reader from feeling overwhelmed.".into()
    } else if profile.contains("stimulus-seeking") || profile.contains("bold") {
        "MODE: RAW\nREASON: The original wording keeps the bold expression this reader enjoys while staying accurate.".into()
    } else {
        "MODE: BALANCED\nREASON: A neutral single-sentence rewrite pairs factual accuracy with a moderate emotional tone.".into()
    }
}
