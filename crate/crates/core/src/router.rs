//! Question routing: pick the single guideline section to retrieve from.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use tracing::info;

use crate::gateway::{ChatBackend, ModelSettings};
use crate::kb::{SectionCatalog, SectionEntry};
use crate::prompt;
use crate::text::{content_words, word_tokens};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RouteBackend {
    Keyword,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteDecision {
    pub section_id: String,
    pub subsection_id: Option<String>,
    pub confidence: f64,
    pub backend: RouteBackend,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RouteError {
    #[error("section catalog is empty")]
    EmptyCatalog,
}

fn contains_phrase(haystack: &[String], phrase: &[String]) -> bool {
    !phrase.is_empty() && haystack.windows(phrase.len()).any(|w| w == phrase)
}

/// Keywords of `entry` that occur in the question as whole words.
pub fn matched_keywords<'a>(question_tokens: &[String], entry: &'a SectionEntry) -> Vec<&'a str> {
    let mut hits: Vec<&str> = entry
        .keywords
        .iter()
        .filter(|k| contains_phrase(question_tokens, &word_tokens(k)))
        .map(String::as_str)
        .collect();
    hits.dedup();
    hits
}

fn best_subsection(question: &str, entry: &SectionEntry) -> Option<String> {
    let words = content_words(question);
    entry
        .subsections
        .iter()
        .map(|s| (content_words(&s.title).intersection(&words).count(), s))
        .filter(|(n, _)| *n > 0)
        // first subsection wins ties
        .fold(None::<(usize, &crate::kb::Subsection)>, |best, (n, s)| match best {
            Some((bn, _)) if bn >= n => best,
            _ => Some((n, s)),
        })
        .map(|(_, s)| s.id.clone())
}

/// Deterministic keyword router.
///
/// Each section scores the number of its keywords present in the question
/// (case-insensitive, whole words). The top score wins, ties go to the
/// lexicographically smallest section id, and a question matching nothing
/// goes to the catalog default with confidence 0.
pub fn route_keyword(question: &str, catalog: &SectionCatalog) -> Result<RouteDecision, RouteError> {
    let default = catalog.default_entry().ok_or(RouteError::EmptyCatalog)?;
    let tokens = word_tokens(question);

    let mut best: Option<(usize, &SectionEntry, Vec<&str>)> = None;
    for entry in &catalog.entries {
        let hits = matched_keywords(&tokens, entry);
        let score = hits.len();
        if score == 0 {
            continue;
        }
        let better = match &best {
            None => true,
            Some((s, e, _)) => score > *s || (score == *s && entry.section_id < e.section_id),
        };
        if better {
            best = Some((score, entry, hits));
        }
    }

    Ok(match best {
        Some((score, entry, hits)) => RouteDecision {
            section_id: entry.section_id.clone(),
            subsection_id: best_subsection(question, entry),
            confidence: score as f64 / (1.0 + score as f64),
            backend: RouteBackend::Keyword,
            rationale: format!("matched keywords: {}", hits.join(", ")),
        },
        None => RouteDecision {
            section_id: default.section_id.clone(),
            subsection_id: None,
            confidence: 0.0,
            backend: RouteBackend::Keyword,
            rationale: "no keyword matched; default section".to_string(),
        },
    })
}

/// The few-shot routing prompt as (system, user) text.
pub fn routing_prompt(question: &str, catalog: &SectionCatalog) -> (String, String) {
    let sections: Vec<String> = catalog
        .entries
        .iter()
        .map(|e| {
            let subs: Vec<&str> = e.subsections.iter().map(|s| s.title.as_str()).collect();
            if subs.is_empty() {
                format!("- {}: {}", e.section_id, e.title)
            } else {
                format!("- {}: {} ({})", e.section_id, e.title, subs.join("; "))
            }
        })
        .collect();
    let examples: Vec<String> = catalog
        .entries
        .iter()
        .flat_map(|e| {
            e.examples
                .iter()
                .take(2)
                .map(move |q| format!("Question: {q}\nSection id: {}", e.section_id))
        })
        .collect();
    prompt::render(
        prompt::ROUTE_V1,
        &[
            ("sections", &sections.join("\n")),
            ("examples", &examples.join("\n\n")),
            ("question", question),
        ],
    )
}

fn request_id(prefix: &str, text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    format!("{prefix}-{}", &hex::encode(digest)[..12])
}

/// Few-shot LLM router with keyword fallback.
///
/// The reply must be exactly a catalog section id (surrounding whitespace
/// allowed). Anything else, or a gateway failure, falls back to
/// [`route_keyword`].
pub fn route_llm(
    question: &str,
    catalog: &SectionCatalog,
    gateway: &dyn ChatBackend,
    settings: &ModelSettings,
) -> Result<RouteDecision, RouteError> {
    if catalog.is_empty() {
        return Err(RouteError::EmptyCatalog);
    }
    let (system, user) = routing_prompt(question, catalog);
    let req = settings.request(&system, &user, &request_id("route", question));
    let fallback_reason = match gateway.chat(&req) {
        Ok(reply) => {
            let answer = reply.text.trim();
            match catalog.get(answer) {
                Some(entry) => {
                    return Ok(RouteDecision {
                        section_id: entry.section_id.clone(),
                        subsection_id: best_subsection(question, entry),
                        confidence: 1.0,
                        backend: RouteBackend::Llm,
                        rationale: format!("few-shot classifier chose section {}", entry.section_id),
                    })
                }
                None => format!("unparseable classifier reply {answer:?}"),
            }
        }
        Err(e) => format!("gateway error: {}", e.kind),
    };
    info!(reason = %fallback_reason, "router falling back to keywords");
    let mut decision = route_keyword(question, catalog)?;
    decision.rationale = format!("{fallback_reason}; {}", decision.rationale);
    Ok(decision)
}
