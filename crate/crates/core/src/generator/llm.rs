//! LLM drafting backend and the field-tagged reply format.
//!
//! The model must answer with one fenced block:
//!
//! ````text
//! ```response
//! [CONCISE_ANSWER]
//! FPG 100–125 mg/dL indicates prediabetes. Confirm with an A1C test.
//! [CITATIONS]
//! - Rec 2.1a (A)
//! - Table 2.2, row 1
//! [CLINICAL_RECOMMENDATIONS]
//! - ...
//! [EVIDENCE_DETAILS]
//! - ...
//! [RELATED_QUESTIONS]
//! - ...
//! ```
//! ````
//!
//! List entries start with `- `. All five tags appear once, in order.

use sha2::{Digest, Sha256};
use thiserror::Error;
use tracing::warn;

use super::citation::{parse_citation, strip_citations};
use super::{generate_extractive, DraftResponse, GenerateError, GenerationBackend, GenerationConfig};
use crate::gateway::{ChatBackend, ChatRequest};
use crate::kb::UnitBody;
use crate::prompt;
use crate::retriever::EvidenceBundle;

const TAGS: [&str; 5] = [
    "[CONCISE_ANSWER]",
    "[CITATIONS]",
    "[CLINICAL_RECOMMENDATIONS]",
    "[EVIDENCE_DETAILS]",
    "[RELATED_QUESTIONS]",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplyParseError {
    #[error("no ```response fenced block")]
    MissingBlock,
    #[error("expected tag {expected} on line {line}")]
    TagOrder { expected: &'static str, line: usize },
    #[error("missing tag {0}")]
    MissingTag(&'static str),
    #[error("list entry without `- ` on line {0}")]
    BadListEntry(usize),
    #[error("unrecognized citation `{0}`")]
    BadCitation(String),
    #[error("empty concise answer")]
    EmptyAnswer,
}

fn fenced_block(text: &str) -> Option<&str> {
    let start = text.find("```response")?;
    let body = &text[start + "```response".len()..];
    let body = body.strip_prefix('\n').unwrap_or(body);
    let end = body.find("```")?;
    Some(&body[..end])
}

/// Parse a field-tagged reply into a draft (backend `Llm`). Citations are
/// parsed but not resolved against any bundle.
pub fn parse_reply(text: &str) -> Result<DraftResponse, ReplyParseError> {
    let block = fenced_block(text).ok_or(ReplyParseError::MissingBlock)?;
    let mut sections: Vec<Vec<&str>> = Vec::new();
    for (i, raw) in block.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') && line.ends_with(']') && TAGS.contains(&line) {
            let expected = TAGS.get(sections.len()).copied().unwrap_or("end of block");
            if line != expected {
                return Err(ReplyParseError::TagOrder { expected, line: i + 1 });
            }
            sections.push(Vec::new());
            continue;
        }
        if line.is_empty() {
            continue;
        }
        match sections.last_mut() {
            Some(current) => current.push(line),
            None => {
                return Err(ReplyParseError::TagOrder {
                    expected: TAGS[0],
                    line: i + 1,
                })
            }
        }
    }
    if sections.len() < TAGS.len() {
        return Err(ReplyParseError::MissingTag(TAGS[sections.len()]));
    }

    let list = |idx: usize| -> Result<Vec<String>, ReplyParseError> {
        sections[idx]
            .iter()
            .map(|l| {
                l.strip_prefix("- ")
                    .map(|s| s.trim().to_string())
                    .ok_or(ReplyParseError::BadListEntry(idx))
            })
            .collect()
    };

    let concise_answer = strip_citations(&sections[0].join(" "));
    if concise_answer.is_empty() {
        return Err(ReplyParseError::EmptyAnswer);
    }
    let citations = list(1)?
        .into_iter()
        .map(|c| parse_citation(&c).ok_or(ReplyParseError::BadCitation(c)))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(DraftResponse {
        concise_answer,
        citations,
        clinical_recommendations: list(2)?,
        evidence_details: list(3)?,
        related_questions: list(4)?,
        backend: GenerationBackend::Llm,
    })
}

fn evidence_listing(bundle: &EvidenceBundle) -> String {
    let mut out = Vec::new();
    for unit in &bundle.items {
        let id = unit.unit_id();
        match &unit.body {
            UnitBody::Recommendation(r) => out.push(format!(
                "[{id}] Recommendation (evidence grade {}): {}",
                r.evidence_grade, r.text
            )),
            UnitBody::CriteriaTable(t) => {
                out.push(format!("[{id}] Criteria table: {}", t.title));
                for row in &t.rows {
                    out.push(format!("  row {}: {} | {}", row.row_index, row.label, row.threshold_text));
                }
            }
            UnitBody::Narrative(n) => out.push(format!("[{id}] Narrative ({}): {}", n.topic, n.text)),
        }
    }
    out.join("\n")
}

/// The answer prompt as (system, user) text.
pub fn answer_prompt(
    question: &str,
    bundle: &EvidenceBundle,
    config: &GenerationConfig,
) -> Result<(String, String), GenerateError> {
    let template = prompt::answer_template(&config.prompt_template_id)
        .ok_or_else(|| GenerateError::UnknownTemplate(config.prompt_template_id.clone()))?;
    Ok(prompt::render(
        template,
        &[("question", question), ("evidence", &evidence_listing(bundle))],
    ))
}

fn request(config: &GenerationConfig, system: &str, user: &str, question: &str) -> ChatRequest {
    let digest = hex::encode(Sha256::digest(question.as_bytes()));
    ChatRequest {
        model_name: config.model_name.clone(),
        system_text: system.to_string(),
        user_text: user.to_string(),
        temperature: config.temperature,
        max_output_tokens: config.max_output_tokens,
        request_id: format!("answer-{}", &digest[..12]),
    }
}

/// Draft through the gateway. An unparseable reply gets one repair round;
/// after that, or on any gateway error, the extractive backend answers.
pub fn generate_llm(
    question: &str,
    bundle: &EvidenceBundle,
    gateway: &dyn ChatBackend,
    config: &GenerationConfig,
) -> Result<DraftResponse, GenerateError> {
    if bundle.items.is_empty() {
        return Err(GenerateError::EmptyBundle);
    }
    let (system, user) = answer_prompt(question, bundle, config)?;

    let first = match gateway.chat(&request(config, &system, &user, question)) {
        Ok(reply) => reply.text,
        Err(e) => {
            warn!(error = %e, "answer generation failed; using extractive backend");
            return generate_extractive(bundle, config);
        }
    };
    let parse_error = match parse_reply(&first) {
        Ok(draft) => return Ok(draft),
        Err(e) => e,
    };

    let (_, repair) = prompt::render(prompt::REPAIR_V1, &[("error", &parse_error.to_string())]);
    let repair_user = format!("{user}\n\nYour previous reply:\n{first}\n\n{repair}");
    match gateway.chat(&request(config, &system, &repair_user, question)) {
        Ok(reply) => match parse_reply(&reply.text) {
            Ok(draft) => return Ok(draft),
            Err(e) => warn!(error = %e, "repaired reply still unparseable; using extractive backend"),
        },
        Err(e) => warn!(error = %e, "repair request failed; using extractive backend"),
    }
    generate_extractive(bundle, config)
}
