//! Desk-scale evaluation harness.
//!
//! Each case is run through the pipeline and graded mechanically:
//!
//! * `fully_correct`: routed section matches, every required citation and
//!   required token is present, and no forbidden token appears;
//! * `minor_incomplete`: section and citations match but a required token is
//!   missing (and no forbidden token appears);
//! * `incorrect`: anything else, including pipeline errors.
//!
//! Tokens are normalized numeric tokens taken from the concise answer,
//! recommendations and evidence details. The grade is a mechanical proxy for
//! human review and the report says so.

use std::collections::BTreeSet;
use std::path::Path;

use anyhow::{Context, Result};
use guideqa_core::pipeline::Pipeline;
use guideqa_core::validator::{extract_numeric_tokens, normalize_numeric};
use serde::{Deserialize, Serialize};

use crate::api::{AskResponse, Status};

pub const REPORT_HEADER: &str = "Grades are a mechanical proxy for expert review: routed section, \
required citation ids and normalized numeric tokens are checked by exact match; \
no model or human judged these answers.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    pub section_id: String,
    #[serde(default)]
    pub required_citation_ids: BTreeSet<String>,
    #[serde(default)]
    pub required_tokens: BTreeSet<String>,
    #[serde(default)]
    pub forbidden_tokens: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalCase {
    pub id: String,
    pub question: String,
    pub expected: Expected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grade {
    FullyCorrect,
    MinorIncomplete,
    Incorrect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseResult {
    pub id: String,
    pub grade: Grade,
    pub expected_section: String,
    pub routed_section: Option<String>,
    pub status: Option<Status>,
    pub missing_citations: Vec<String>,
    pub missing_tokens: Vec<String>,
    pub forbidden_found: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub total: usize,
    pub fully_correct: usize,
    pub minor_incomplete: usize,
    pub incorrect: usize,
    pub errored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub header: String,
    pub counts: Counts,
    /// Share of cases graded fully correct or minor incomplete, in percent,
    /// rounded to one decimal.
    pub combined_accuracy_pct: f64,
    pub fully_correct_pct: f64,
    pub cases: Vec<CaseResult>,
}

impl EvalReport {
    pub fn has_errors(&self) -> bool {
        self.counts.errored > 0
    }

    /// Pretty JSON with a trailing newline; identical inputs give identical bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn summary(&self) -> String {
        let c = &self.counts;
        format!(
            "{} cases: {} fully correct, {} minor incomplete, {} incorrect ({} errored); combined accuracy {:.1}%",
            c.total, c.fully_correct, c.minor_incomplete, c.incorrect, c.errored, self.combined_accuracy_pct
        )
    }
}

pub fn read_cases(path: &Path) -> Result<Vec<EvalCase>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_cases(&bytes).with_context(|| format!("parsing cases {}", path.display()))
}

pub fn parse_cases(bytes: &[u8]) -> Result<Vec<EvalCase>> {
    let mut cases: Vec<EvalCase> = serde_json::from_slice(bytes)?;
    for case in &mut cases {
        case.expected.required_tokens = normalize_all(&case.expected.required_tokens)?;
        case.expected.forbidden_tokens = normalize_all(&case.expected.forbidden_tokens)?;
    }
    Ok(cases)
}

fn normalize_all(tokens: &BTreeSet<String>) -> Result<BTreeSet<String>> {
    tokens
        .iter()
        .map(|t| normalize_numeric(t).with_context(|| format!("`{t}` is not a numeric token")))
        .collect()
}

/// Normalized numeric tokens in an answered response.
pub fn response_tokens(resp: &AskResponse) -> BTreeSet<String> {
    let ev = &resp.supporting_evidence;
    std::iter::once(&resp.concise_answer)
        .chain(&ev.clinical_recommendations)
        .chain(&ev.evidence_details)
        .flat_map(|t| extract_numeric_tokens(t))
        .map(|t| t.normalized)
        .collect()
}

pub fn grade(case: &EvalCase, resp: &AskResponse) -> CaseResult {
    let cited: BTreeSet<&str> = resp
        .supporting_evidence
        .citations
        .iter()
        .map(|c| c.unit_id.as_str())
        .collect();
    let tokens = response_tokens(resp);
    let e = &case.expected;
    let missing_citations: Vec<String> = e
        .required_citation_ids
        .iter()
        .filter(|id| !cited.contains(id.as_str()))
        .cloned()
        .collect();
    let missing_tokens: Vec<String> = e.required_tokens.difference(&tokens).cloned().collect();
    let forbidden_found: Vec<String> = e.forbidden_tokens.intersection(&tokens).cloned().collect();
    let section_ok = resp.route.section_id == e.section_id;

    let grade = if !section_ok || !missing_citations.is_empty() || !forbidden_found.is_empty() {
        Grade::Incorrect
    } else if missing_tokens.is_empty() {
        Grade::FullyCorrect
    } else {
        Grade::MinorIncomplete
    };
    CaseResult {
        id: case.id.clone(),
        grade,
        expected_section: e.section_id.clone(),
        routed_section: Some(resp.route.section_id.clone()),
        status: Some(resp.status),
        missing_citations,
        missing_tokens,
        forbidden_found,
        error: None,
    }
}

fn pct(n: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        (n as f64 * 1000.0 / total as f64).round() / 10.0
    }
}

/// Run every case. Timing is not part of the report, so the report is a pure
/// function of (KB, config, cases) for deterministic backends.
pub fn run(pipeline: &Pipeline, cases: &[EvalCase]) -> EvalReport {
    let mut results = Vec::with_capacity(cases.len());
    let mut errored = 0;
    for case in cases {
        match pipeline.ask(&case.question) {
            Ok(answer) => results.push(grade(case, &AskResponse::from_answer(&answer, 0))),
            Err(e) => {
                errored += 1;
                results.push(CaseResult {
                    id: case.id.clone(),
                    grade: Grade::Incorrect,
                    expected_section: case.expected.section_id.clone(),
                    routed_section: None,
                    status: None,
                    missing_citations: Vec::new(),
                    missing_tokens: Vec::new(),
                    forbidden_found: Vec::new(),
                    error: Some(e.to_string()),
                });
            }
        }
    }
    let count = |g| results.iter().filter(|r| r.grade == g).count();
    let counts = Counts {
        total: results.len(),
        fully_correct: count(Grade::FullyCorrect),
        minor_incomplete: count(Grade::MinorIncomplete),
        incorrect: count(Grade::Incorrect),
        errored,
    };
    EvalReport {
        header: REPORT_HEADER.to_string(),
        combined_accuracy_pct: pct(counts.fully_correct + counts.minor_incomplete, counts.total),
        fully_correct_pct: pct(counts.fully_correct, counts.total),
        counts,
        cases: results,
    }
}
