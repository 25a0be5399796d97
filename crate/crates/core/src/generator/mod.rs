//! Five-part answer drafting.
//!
//! A draft holds a concise answer (two or three sentences, no citations),
//! the citation list, clinical recommendations, evidence details and related
//! questions. Two backends produce it: a deterministic extractive one that
//! only quotes bundle content, and an LLM one driven by a versioned prompt.
//! Neither checks grounding; that is the validator's job.

mod citation;
mod llm;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use citation::{format_citation, parse_citation, strip_citations, Citation, CitationError};
pub use llm::{answer_prompt, generate_llm, parse_reply, ReplyParseError};

use crate::kb::{ContentUnit, UnitBody};
use crate::retriever::EvidenceBundle;
use crate::text::split_sentences;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GenerationBackend {
    Extractive,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DraftResponse {
    pub concise_answer: String,
    pub citations: Vec<Citation>,
    pub clinical_recommendations: Vec<String>,
    pub evidence_details: Vec<String>,
    pub related_questions: Vec<String>,
    pub backend: GenerationBackend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub temperature: f64,
    pub max_related_questions: usize,
    pub prompt_template_id: String,
    pub model_name: String,
    pub max_output_tokens: u32,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            temperature: 0.1,
            max_related_questions: 3,
            prompt_template_id: "answer_v1".to_string(),
            model_name: crate::gateway::GatewayConfig::default().model,
            max_output_tokens: 800,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("evidence bundle is empty")]
    EmptyBundle,
    #[error("unknown prompt template `{0}`")]
    UnknownTemplate(String),
}

fn lower_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        // keep acronyms such as "A1C" or "FPG"
        Some(c) if chars.clone().next().is_some_and(|n| n.is_lowercase()) => {
            c.to_lowercase().chain(chars).collect()
        }
        _ => s.to_string(),
    }
}

fn as_sentence(s: &str) -> String {
    let s = s.trim();
    if s.ends_with(['.', '?', '!']) {
        s.to_string()
    } else {
        format!("{s}.")
    }
}

fn first_sentence(text: &str) -> String {
    split_sentences(text)
        .into_iter()
        .next()
        .map(|s| as_sentence(&s))
        .unwrap_or_default()
}

fn related_question(unit: &ContentUnit) -> String {
    match &unit.body {
        UnitBody::Recommendation(_) => format!(
            "What else does the guideline recommend on {}?",
            lower_first(&unit.provenance.section_title)
        ),
        UnitBody::CriteriaTable(t) => format!("What are the {}?", lower_first(&t.title)),
        UnitBody::Narrative(n) => {
            format!("What does the guideline say about {}?", lower_first(&n.topic))
        }
    }
}

fn citation(unit: &ContentUnit, row: Option<u32>) -> Citation {
    format_citation(unit, row).expect("bundle units produce well-formed citations")
}

/// Deterministic extractive draft.
///
/// The answer leads with the first sentence of the top unit and adds one
/// templated sentence, taken from the first table row when the top unit is a
/// recommendation. Every number in the draft is copied from the bundle.
pub fn generate_extractive(
    bundle: &EvidenceBundle,
    config: &GenerationConfig,
) -> Result<DraftResponse, GenerateError> {
    let lead = bundle.items.first().ok_or(GenerateError::EmptyBundle)?;
    let recs: Vec<&ContentUnit> = bundle
        .items
        .iter()
        .filter(|u| u.as_recommendation().is_some())
        .collect();
    let tables: Vec<&ContentUnit> = bundle
        .items
        .iter()
        .filter(|u| u.as_table().is_some())
        .collect();

    let mut citations = Vec::new();
    let sentences: [String; 2] = match &lead.body {
        UnitBody::Recommendation(r) => {
            let second = match tables.first().and_then(|t| t.as_table()) {
                Some(t) => {
                    let row = &t.rows[0];
                    format!(
                        "Confirm with {} ({}) per the {}.",
                        row.label,
                        row.threshold_text,
                        lower_first(&t.title)
                    )
                }
                None => format!("Follow this grade {} recommendation.", r.evidence_grade),
            };
            [first_sentence(&r.text), second]
        }
        UnitBody::CriteriaTable(t) => {
            let first = &t.rows[0];
            let second = match t.rows.get(1) {
                Some(row) => format!("Also listed: {} {}.", row.label, row.threshold_text),
                None => format!("Apply the {} as listed.", lower_first(&t.title)),
            };
            [
                format!("{}: {} {}.", t.title, first.label, first.threshold_text),
                second,
            ]
        }
        UnitBody::Narrative(n) => {
            let parts = split_sentences(&n.text);
            let second = match parts.get(1) {
                Some(s) => as_sentence(s),
                None => format!("See the guideline narrative on {}.", lower_first(&n.topic)),
            };
            citations.push(citation(lead, None));
            [first_sentence(&n.text), second]
        }
    };
    let concise_answer = strip_citations(&sentences.join(" "));

    let mut front = Vec::new();
    for rec in &recs {
        front.push(citation(rec, None));
    }
    for table in &tables {
        let t = table.as_table().expect("filtered to tables");
        for row in &t.rows {
            front.push(citation(table, Some(row.row_index)));
        }
    }
    front.extend(citations);
    let citations = front;

    let clinical_recommendations = recs
        .iter()
        .filter_map(|u| u.as_recommendation())
        .map(|r| r.text.clone())
        .collect();
    let evidence_details = tables
        .iter()
        .filter_map(|u| u.as_table())
        .flat_map(|t| t.rows.iter())
        .map(|row| format!("{}: {}", row.label, row.threshold_text))
        .collect();

    let mut related_questions: Vec<String> = Vec::new();
    for unit in bundle.items.iter().skip(1) {
        if related_questions.len() >= config.max_related_questions {
            break;
        }
        let q = related_question(unit);
        if !related_questions.contains(&q) {
            related_questions.push(q);
        }
    }

    Ok(DraftResponse {
        concise_answer,
        citations,
        clinical_recommendations,
        evidence_details,
        related_questions,
        backend: GenerationBackend::Extractive,
    })
}
