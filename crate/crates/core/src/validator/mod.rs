//! Release gate for generated answers.
//!
//! Three constraints are enforced mechanically before an answer is shown:
//! every claim must be attributable to a cited unit of the evidence bundle,
//! every numeric threshold in a claim must match a cited value exactly (after
//! dash/space/unit normalization), and answers with nothing attributable are
//! replaced by a fixed refusal.

mod numeric;

use std::collections::{BTreeSet, HashSet};

use serde::Serialize;

pub use numeric::{
    extract_numeric_qualifiers, extract_numeric_tokens, normalize_display, normalize_numeric,
    NumericToken, TokenKind,
};

use crate::generator::{Citation, DraftResponse, GenerationBackend};
use crate::kb::ContentUnit;
use crate::retriever::EvidenceBundle;
use crate::text::{content_words, split_sentences};

/// Returned verbatim whenever the routed evidence cannot support an answer.
pub const REFUSAL_MESSAGE: &str = "Insufficient guideline evidence for this question";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClaimOrigin {
    ConciseAnswer,
    ClinicalRecommendation,
    EvidenceDetail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Claim {
    pub text: String,
    pub origin: ClaimOrigin,
    pub supporting_unit_ids: BTreeSet<String>,
}

/// One claim per concise-answer sentence, recommendation and evidence detail.
/// Related questions are not claims.
pub fn segment_claims(draft: &DraftResponse) -> Vec<Claim> {
    let claim = |text: &str, origin| Claim {
        text: text.to_string(),
        origin,
        supporting_unit_ids: BTreeSet::new(),
    };
    let mut out: Vec<Claim> = split_sentences(&draft.concise_answer)
        .iter()
        .map(|s| claim(s, ClaimOrigin::ConciseAnswer))
        .collect();
    out.extend(
        draft
            .clinical_recommendations
            .iter()
            .filter(|s| !s.trim().is_empty())
            .map(|s| claim(s, ClaimOrigin::ClinicalRecommendation)),
    );
    out.extend(
        draft
            .evidence_details
            .iter()
            .filter(|s| !s.trim().is_empty())
            .map(|s| claim(s, ClaimOrigin::EvidenceDetail)),
    );
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ValidationStatus {
    Accepted,
    Rejected,
    Refusal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectionRule {
    NumericMismatch,
    UncitedClaim,
    DanglingCitation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub claim: String,
    pub rule: RejectionRule,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClaimReport {
    pub claim_text: String,
    pub supporting_unit_ids: Vec<String>,
    pub matched_tokens: Vec<String>,
}

/// A draft that passed validation, with its per-claim traceability report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FinalResponse {
    pub concise_answer: String,
    pub citations: Vec<Citation>,
    pub clinical_recommendations: Vec<String>,
    pub evidence_details: Vec<String>,
    pub related_questions: Vec<String>,
    pub backend: GenerationBackend,
    pub validation_report: Vec<ClaimReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationOutcome {
    pub status: ValidationStatus,
    pub final_response: Option<FinalResponse>,
    pub rejections: Vec<Rejection>,
}

impl ValidationOutcome {
    fn refusal() -> Self {
        Self {
            status: ValidationStatus::Refusal,
            final_response: None,
            rejections: Vec::new(),
        }
    }

    pub fn is_accepted(&self) -> bool {
        self.status == ValidationStatus::Accepted
    }
}

/// The evidence a single citation points at.
struct CitedEvidence<'a> {
    unit_id: &'a str,
    tokens: HashSet<String>,
    words: BTreeSet<String>,
}

fn cited_text(unit: &ContentUnit, citation: &Citation) -> Option<String> {
    match (unit.as_table(), citation.row_index) {
        (Some(_), Some(row)) => unit.row_evidence_text(row),
        (Some(_), None) => Some(unit.evidence_text()),
        (None, Some(_)) => None,
        (None, None) => Some(unit.evidence_text()),
    }
}

/// Normalized numeric tokens followed by numeric qualifiers (`2-h`, `75-g`).
fn checked_tokens(text: &str) -> Vec<String> {
    extract_numeric_tokens(text)
        .into_iter()
        .map(|t| t.normalized)
        .chain(extract_numeric_qualifiers(text))
        .collect()
}

/// Check a draft against the bundle it was generated from.
pub fn validate(draft: &DraftResponse, bundle: &EvidenceBundle) -> ValidationOutcome {
    if bundle.items.is_empty() {
        return ValidationOutcome::refusal();
    }

    let mut rejections = Vec::new();
    let mut cited: Vec<CitedEvidence> = Vec::new();
    for citation in &draft.citations {
        let resolved = bundle
            .items
            .iter()
            .find(|u| u.unit_id() == citation.unit_id)
            .and_then(|u| cited_text(u, citation));
        match resolved {
            Some(text) => cited.push(CitedEvidence {
                unit_id: &citation.unit_id,
                tokens: checked_tokens(&text).into_iter().collect(),
                words: content_words(&text),
            }),
            None => rejections.push(Rejection {
                claim: citation.display.clone(),
                rule: RejectionRule::DanglingCitation,
                detail: format!("`{}` does not resolve into the evidence bundle", citation.display),
            }),
        }
    }

    let mut claims = segment_claims(draft);
    let mut reports = Vec::with_capacity(claims.len());
    let mut claim_rejections = Vec::new();
    for claim in &mut claims {
        let tokens = checked_tokens(&claim.text);
        let mut supporting: Vec<&str> = Vec::new();
        let mut matched: Vec<String> = Vec::new();
        let mut missing: Vec<String> = Vec::new();
        if tokens.is_empty() {
            let words = content_words(&claim.text);
            for ev in &cited {
                if !ev.words.is_disjoint(&words) && !supporting.contains(&ev.unit_id) {
                    supporting.push(ev.unit_id);
                }
            }
        } else {
            for tok in &tokens {
                let holders: Vec<&str> = cited
                    .iter()
                    .filter(|ev| ev.tokens.contains(tok))
                    .map(|ev| ev.unit_id)
                    .collect();
                if holders.is_empty() {
                    missing.push(tok.clone());
                } else {
                    matched.push(tok.clone());
                }
                for h in holders {
                    if !supporting.contains(&h) {
                        supporting.push(h);
                    }
                }
            }
        }
        claim.supporting_unit_ids = supporting.iter().map(|s| s.to_string()).collect();

        if !missing.is_empty() {
            claim_rejections.push(Rejection {
                claim: claim.text.clone(),
                rule: RejectionRule::NumericMismatch,
                detail: format!(
                    "value(s) {} not found in any cited unit",
                    missing.join(", ")
                ),
            });
        } else if supporting.is_empty() {
            claim_rejections.push(Rejection {
                claim: claim.text.clone(),
                rule: RejectionRule::UncitedClaim,
                detail: "no cited unit supports this claim".to_string(),
            });
        }
        reports.push(ClaimReport {
            claim_text: claim.text.clone(),
            supporting_unit_ids: supporting.iter().map(|s| s.to_string()).collect(),
            matched_tokens: matched,
        });
    }

    rejections.extend(claim_rejections);
    if claims.iter().all(|c| c.supporting_unit_ids.is_empty()) {
        return ValidationOutcome {
            rejections,
            ..ValidationOutcome::refusal()
        };
    }

    if !rejections.is_empty() {
        return ValidationOutcome {
            status: ValidationStatus::Rejected,
            final_response: None,
            rejections,
        };
    }

    ValidationOutcome {
        status: ValidationStatus::Accepted,
        final_response: Some(FinalResponse {
            concise_answer: draft.concise_answer.clone(),
            citations: draft.citations.clone(),
            clinical_recommendations: draft.clinical_recommendations.clone(),
            evidence_details: draft.evidence_details.clone(),
            related_questions: draft.related_questions.clone(),
            backend: draft.backend,
            validation_report: reports,
        }),
        rejections: Vec::new(),
    }
}
