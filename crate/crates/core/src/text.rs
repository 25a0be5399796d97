//! Shared text helpers: word tokens, content words and sentence splitting.

use std::collections::BTreeSet;

/// Lowercased alphanumeric runs.
pub fn word_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

const STOPWORDS: &[&str] = &[
    "about", "after", "also", "and", "any", "are", "been", "before", "being", "but", "can",
    "does", "for", "from", "had", "has", "have", "his", "her", "how", "into", "its", "may",
    "more", "not", "of", "or", "our", "should", "such", "than", "that", "the", "their", "them",
    "then", "there", "these", "they", "this", "those", "to", "was", "were", "what", "when",
    "which", "who", "why", "will", "with", "would", "you", "your",
];

/// Word tokens of at least three letters that are not stopwords or numbers.
pub fn content_words(text: &str) -> BTreeSet<String> {
    word_tokens(text)
        .into_iter()
        .filter(|w| w.chars().count() >= 3)
        .filter(|w| !w.chars().all(|c| c.is_ascii_digit()))
        .filter(|w| !STOPWORDS.contains(&w.as_str()))
        .collect()
}

const ABBREVIATIONS: &[&str] = &["e.g.", "i.e.", "etc.", "vs.", "approx.", "dr.", "cf.", "no."];

/// Split text into sentences.
///
/// A sentence ends at `.`, `?` or `!` when followed by the end of the text, or
/// by whitespace and then an uppercase letter or digit. A `.` that closes a
/// known abbreviation never ends a sentence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    for (pos, &(byte_idx, c)) in chars.iter().enumerate() {
        if !matches!(c, '.' | '?' | '!') {
            continue;
        }
        let end = byte_idx + c.len_utf8();
        let rest = &chars[pos + 1..];
        let boundary = match rest.iter().position(|(_, ch)| !ch.is_whitespace()) {
            None => true,
            Some(0) => false,
            Some(k) => {
                let next = rest[k].1;
                next.is_uppercase() || next.is_ascii_digit()
            }
        };
        if !boundary {
            continue;
        }
        if c == '.' {
            let word_start = text[..byte_idx]
                .rfind(char::is_whitespace)
                .map_or(start, |i| i + 1)
                .max(start);
            let word = text[word_start..end].to_lowercase();
            if ABBREVIATIONS.contains(&word.as_str()) {
                continue;
            }
        }
        let sentence = text[start..end].trim();
        if !sentence.is_empty() {
            out.push(sentence.to_string());
        }
        start = end;
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail.to_string());
    }
    out
}
