//! Wire types of the HTTP API. Field names here are the contract; see
//! `book/src/api.md`.

use std::collections::BTreeMap;

use guideqa_core::generator::{Citation, GenerationBackend};
use guideqa_core::pipeline::{Answer, AnswerStatus};
use guideqa_core::risk::{BreakdownItem, RiskResult};
use guideqa_core::router::RouteBackend;
use guideqa_core::validator::{normalize_display, ClaimReport, Rejection, REFUSAL_MESSAGE};
use serde::{Deserialize, Serialize};

pub const MAX_QUESTION_CHARS: usize = 4000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AskRequest {
    pub question: String,
}

impl AskRequest {
    pub fn check(&self) -> Result<(), String> {
        let n = self.question.chars().count();
        if self.question.trim().is_empty() {
            return Err("question must not be empty".into());
        }
        if n > MAX_QUESTION_CHARS {
            return Err(format!(
                "question is {n} characters; the limit is {MAX_QUESTION_CHARS}"
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Answered,
    Refused,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Validation {
    /// `accepted` for answered responses, `refusal` otherwise.
    pub status: String,
    /// Which backend produced the released draft, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    /// True when an LLM draft failed validation and was replaced.
    pub regenerated: bool,
    pub claims: Vec<ClaimWire>,
    pub rejections: Vec<RejectionWire>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimWire {
    pub claim_text: String,
    pub supporting_unit_ids: Vec<String>,
    pub matched_tokens: Vec<String>,
}

impl From<&ClaimReport> for ClaimWire {
    fn from(c: &ClaimReport) -> Self {
        Self {
            claim_text: c.claim_text.clone(),
            supporting_unit_ids: c.supporting_unit_ids.clone(),
            matched_tokens: c.matched_tokens.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionWire {
    pub claim: String,
    pub rule: String,
    pub detail: String,
}

impl From<&Rejection> for RejectionWire {
    fn from(r: &Rejection) -> Self {
        let rule = serde_json::to_value(r.rule)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default();
        Self {
            claim: r.claim.clone(),
            rule,
            detail: r.detail.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportingEvidence {
    pub citations: Vec<Citation>,
    pub clinical_recommendations: Vec<String>,
    /// Threshold strings in normalized display form, e.g. `100-125 mg/dL`.
    pub evidence_details: Vec<String>,
    pub related_questions: Vec<String>,
    pub validation: Validation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteInfo {
    pub section_id: String,
    pub section_title: String,
    pub backend: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AskResponse {
    pub status: Status,
    pub concise_answer: String,
    pub supporting_evidence: SupportingEvidence,
    pub route: RouteInfo,
    pub timing_ms: u64,
}

fn route_backend(b: RouteBackend) -> &'static str {
    match b {
        RouteBackend::Keyword => "keyword",
        RouteBackend::Llm => "llm",
    }
}

fn generation_backend(b: GenerationBackend) -> &'static str {
    match b {
        GenerationBackend::Extractive => "extractive",
        GenerationBackend::Llm => "llm",
    }
}

impl AskResponse {
    pub fn from_answer(answer: &Answer, timing_ms: u64) -> Self {
        let route = RouteInfo {
            section_id: answer.route.section_id.clone(),
            section_title: answer.section_title.clone(),
            backend: route_backend(answer.route.backend).to_string(),
        };
        let rejections = answer.rejections.iter().map(RejectionWire::from).collect();
        match (&answer.status, &answer.response) {
            (AnswerStatus::Answered, Some(r)) => Self {
                status: Status::Answered,
                concise_answer: r.concise_answer.clone(),
                supporting_evidence: SupportingEvidence {
                    citations: r.citations.clone(),
                    clinical_recommendations: r.clinical_recommendations.clone(),
                    evidence_details: r.evidence_details.iter().map(|d| normalize_display(d)).collect(),
                    related_questions: r.related_questions.clone(),
                    validation: Validation {
                        status: "accepted".into(),
                        backend: Some(generation_backend(r.backend).into()),
                        regenerated: answer.regenerated,
                        claims: r.validation_report.iter().map(ClaimWire::from).collect(),
                        rejections,
                    },
                },
                route,
                timing_ms,
            },
            _ => Self {
                status: Status::Refused,
                concise_answer: REFUSAL_MESSAGE.to_string(),
                supporting_evidence: SupportingEvidence {
                    citations: Vec::new(),
                    clinical_recommendations: Vec::new(),
                    evidence_details: Vec::new(),
                    related_questions: Vec::new(),
                    validation: Validation {
                        status: "refusal".into(),
                        backend: None,
                        regenerated: answer.regenerated,
                        claims: Vec::new(),
                        rejections,
                    },
                },
                route,
                timing_ms,
            },
        }
    }

    /// Plain-text rendering used by `guideqa ask`.
    pub fn render_text(&self) -> String {
        let ev = &self.supporting_evidence;
        let mut out = format!(
            "Section {} ({}), routed by {}\n\nConcise answer\n  {}\n",
            self.route.section_id, self.route.section_title, self.route.backend, self.concise_answer
        );
        if self.status == Status::Refused {
            return out;
        }
        out += "\nSupporting evidence\n  Citations:\n";
        for c in &ev.citations {
            out += &format!("    - {}\n", c.display);
        }
        let lists = [
            ("Clinical recommendations", &ev.clinical_recommendations),
            ("Evidence details", &ev.evidence_details),
            ("Related questions", &ev.related_questions),
        ];
        for (title, items) in lists {
            if items.is_empty() {
                continue;
            }
            out += &format!("  {title}:\n");
            for item in items {
                out += &format!("    - {item}\n");
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskResponse {
    pub total_score: u32,
    pub category_label: String,
    /// e.g. `Score: 7 (Increased Risk)`.
    pub headline: String,
    pub interpretation: String,
    pub recommendations: Vec<String>,
    pub breakdown: Vec<BreakdownItem>,
    pub bmi: f64,
}

impl From<RiskResult> for RiskResponse {
    fn from(r: RiskResult) -> Self {
        Self {
            headline: r.headline(),
            total_score: r.total_score,
            category_label: r.category_label,
            interpretation: r.interpretation,
            recommendations: r.recommendations,
            breakdown: r.breakdown,
            bmi: r.bmi,
        }
    }
}

impl RiskResponse {
    pub fn render_text(&self) -> String {
        let mut out = format!("{}\n\n{}\n\nRecommendations:\n", self.headline, self.interpretation);
        for r in &self.recommendations {
            out += &format!("  - {r}\n");
        }
        out += "\nBreakdown:\n";
        for b in &self.breakdown {
            out += &format!("  {:<20} {:<40} {}\n", b.item_name, b.input_echo, b.points);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    /// Field path → message, for input validation failures.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fields: BTreeMap<String, String>,
}

impl ErrorBody {
    pub fn new(error: impl Into<String>) -> Self {
        Self {
            error: error.into(),
            fields: BTreeMap::new(),
        }
    }

    pub fn field(mut self, path: impl Into<String>, message: impl Into<String>) -> Self {
        self.fields.insert(path.into(), message.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub kb_loaded: bool,
    pub unit_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionInfo {
    pub section_id: String,
    pub title: String,
    pub subsections: Vec<guideqa_core::kb::Subsection>,
    pub keywords: Vec<String>,
    pub unit_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sections {
    pub source_name: String,
    pub source_date: String,
    pub default_section: Option<String>,
    pub sections: Vec<SectionInfo>,
}

impl Sections {
    pub fn of(kb: &guideqa_core::kb::KnowledgeBase) -> Self {
        Self {
            source_name: kb.source_name.clone(),
            source_date: kb.source_date.clone(),
            default_section: kb.catalog.default_entry().map(|e| e.section_id.clone()),
            sections: kb
                .catalog
                .entries
                .iter()
                .map(|e| SectionInfo {
                    section_id: e.section_id.clone(),
                    title: e.title.clone(),
                    subsections: e.subsections.clone(),
                    keywords: e.keywords.clone(),
                    unit_count: kb
                        .units
                        .iter()
                        .filter(|u| u.provenance.section_id == e.section_id)
                        .count(),
                })
                .collect(),
        }
    }
}
