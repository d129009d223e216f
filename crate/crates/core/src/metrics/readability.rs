//! Flesch Reading Ease with pinned segmentation and syllable rules.
//!
//! * Sentence: text up to a run of `.`, `!` or `?` followed by whitespace or
//!   end of text. Segments without a word are dropped; text with no
//!   terminator is one sentence.
//! * Word: maximal run of alphanumeric characters; an apostrophe between two
//!   alphanumerics stays inside the word.
//! * Syllables: maximal groups of `aeiouy`, minus one for a trailing silent
//!   `e` (kept for consonant + `le`), at least one per word.

use crate::error::{Error, Result};

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}')
}

/// Splits text into sentences under the rules above.
pub fn sentences(text: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        if is_terminator(chars[i].1) {
            let mut j = i;
            while j + 1 < chars.len() && is_terminator(chars[j + 1].1) {
                j += 1;
            }
            let at_boundary = j + 1 == chars.len() || chars[j + 1].1.is_whitespace();
            if at_boundary {
                let end = chars[j].0 + chars[j].1.len_utf8();
                push_sentence(&mut out, &text[start..end]);
                start = end;
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    push_sentence(&mut out, &text[start..]);
    out
}

fn push_sentence<'a>(out: &mut Vec<&'a str>, segment: &'a str) {
    let s = segment.trim();
    if !words(s).is_empty() {
        out.push(s);
    }
}

pub fn sentence_count(text: &str) -> usize {
    sentences(text).len()
}

/// Words in order of appearance.
pub fn words(text: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].1.is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = chars[i].0;
        let mut j = i;
        loop {
            if j + 1 < chars.len() && chars[j + 1].1.is_alphanumeric() {
                j += 1;
            } else if j + 2 < chars.len()
                && is_apostrophe(chars[j + 1].1)
                && chars[j + 2].1.is_alphanumeric()
            {
                j += 2;
            } else {
                break;
            }
        }
        let end = chars[j].0 + chars[j].1.len_utf8();
        out.push(&text[start..end]);
        i = j + 1;
    }
    out
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

pub fn syllables(word: &str) -> usize {
    let w: Vec<char> = word.to_lowercase().chars().collect();
    let mut groups = 0usize;
    let mut in_group = false;
    for &c in &w {
        let v = is_vowel(c);
        if v && !in_group {
            groups += 1;
        }
        in_group = v;
    }
    let n = w.len();
    if n >= 1 && w[n - 1] == 'e' {
        let consonant_le = n >= 3
            && w[n - 2] == 'l'
            && w[n - 3].is_alphabetic()
            && !is_vowel(w[n - 3]);
        if !consonant_le {
            groups = groups.saturating_sub(1);
        }
    }
    groups.max(1)
}

/// Raw counts behind the score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextCounts {
    pub words: usize,
    pub sentences: usize,
    pub syllables: usize,
}

pub fn counts(text: &str) -> TextCounts {
    let ws = words(text);
    TextCounts {
        words: ws.len(),
        sentences: sentence_count(text),
        syllables: ws.iter().map(|w| syllables(w)).sum(),
    }
}

pub fn flesch_reading_ease(text: &str) -> Result<f64> {
    let c = counts(text);
    if c.words == 0 {
        return Err(Error::Domain("reading ease of a text with no words".into()));
    }
    let wps = c.words as f64 / c.sentences as f64;
    let spw = c.syllables as f64 / c.words as f64;
    Ok(206.835 - 1.015 * wps - 84.6 * spw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cat_sat() {
        let c = counts("The cat sat.");
        assert_eq!(c, TextCounts { words: 3, sentences: 1, syllables: 3 });
        let fre = flesch_reading_ease("The cat sat.").unwrap();
        assert!((fre - 119.19).abs() < 1e-9, "{fre}");
    }

    #[test]
    fn sentence_rules() {
        assert_eq!(sentences("No terminator here"), vec!["No terminator here"]);
        assert_eq!(sentences("One. Two! Three?"), vec!["One.", "Two!", "Three?"]);
        assert_eq!(sentences("Wait?! Yes."), vec!["Wait?!", "Yes."]);
        // Interior dots without following whitespace do not split.
        assert_eq!(sentence_count("Prices rose 3.5 percent in the U.S. on Monday."), 2);
        assert_eq!(sentence_count("..."), 0);
        assert_eq!(sentence_count("Ends with dangling. "), 1);
    }

    #[test]
    fn word_rules() {
        assert_eq!(words("Don't stop, U.S. 2004!"), vec!["Don't", "stop", "U", "S", "2004"]);
        assert_eq!(words("rock 'n' roll"), vec!["rock", "n", "roll"]);
        assert!(words(" -- ").is_empty());
    }

    #[test]
    fn syllable_rules() {
        for (w, n) in [
            ("the", 1),
            ("table", 2),
            ("whale", 1),
            ("style", 1),
            ("reading", 2),
            ("beautiful", 3),
            ("2004", 1),
            ("rhythm", 1),
            ("queue", 1),
            ("people", 2),
        ] {
            assert_eq!(syllables(w), n, "{w}");
        }
    }

    #[test]
    fn no_words_is_domain_error() {
        assert!(matches!(flesch_reading_ease("?!"), Err(Error::Domain(_))));
        assert!(flesch_reading_ease("").is_err());
    }
}
