use std::collections::HashSet;
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::Serialize;

use super::{KnowledgeBase, UnitBody};
use crate::validator::extract_numeric_tokens;

static REC_ID: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^Rec ([A-Za-z0-9]+)\.([0-9]+)[a-z]?$").unwrap());
static TABLE_ID: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^Table ([A-Za-z0-9]+)\.([0-9]+)$").unwrap());
static NARR_ID: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^Narr ([A-Za-z0-9]+)-([0-9]{2,})$").unwrap());

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationRule {
    EmptyUnitId,
    DuplicateUnitId,
    UnresolvedSection,
    UnitIdGrammar,
    UnitIdSectionMismatch,
    BodyIdMismatch,
    EmptyTable,
    RowSequence,
    ThresholdToken,
    InvalidPage,
    InvalidSourceDate,
    DuplicateSection,
    MissingKeywords,
    UnresolvedDefault,
}

impl fmt::Display for ViolationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant serializes");
        f.write_str(s.as_str().unwrap_or_default())
    }
}

/// A broken knowledge-base invariant.
///
/// Unit-level violations carry the offending unit id; catalog-level ones carry
/// the section id (or the default-section id).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub unit_id: String,
    pub rule: ViolationRule,
    pub message: String,
}

/// Check every knowledge-base invariant. Unit violations come first, in unit
/// order, followed by catalog violations.
pub fn validate_kb(kb: &KnowledgeBase) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |unit_id: &str, rule, message: String| {
        out.push(Violation {
            unit_id: unit_id.to_string(),
            rule,
            message,
        })
    };

    let kb_has_units = !kb.units.is_empty();
    let mut seen = HashSet::new();
    for unit in &kb.units {
        let p = &unit.provenance;
        let id = p.unit_id.as_str();
        if id.trim().is_empty() {
            push(id, ViolationRule::EmptyUnitId, "unit id is empty".into());
        } else if !seen.insert(id) {
            push(id, ViolationRule::DuplicateUnitId, format!("duplicate unit id `{id}`"));
        }
        if p.section_id.is_empty() || !kb.catalog.contains(&p.section_id) {
            push(
                id,
                ViolationRule::UnresolvedSection,
                format!("section `{}` is not in the catalog", p.section_id),
            );
        }
        if p.page == Some(0) {
            push(id, ViolationRule::InvalidPage, "page numbers start at 1".into());
        }
        if !is_iso_date(&p.source_date) {
            push(
                id,
                ViolationRule::InvalidSourceDate,
                format!("source date `{}` is not YYYY-MM-DD", p.source_date),
            );
        }

        let (grammar, body_id, label) = match &unit.body {
            UnitBody::Recommendation(r) => (&*REC_ID, r.rec_id.as_str(), "Rec <sec>.<num>[<letter>]"),
            UnitBody::CriteriaTable(t) => (&*TABLE_ID, t.table_id.as_str(), "Table <sec>.<n>"),
            UnitBody::Narrative(_) => (&*NARR_ID, id, "Narr <sec>-<nn>"),
        };
        if body_id != id {
            push(
                id,
                ViolationRule::BodyIdMismatch,
                format!("payload id `{body_id}` differs from unit id `{id}`"),
            );
        }
        match grammar.captures(id) {
            None => push(
                id,
                ViolationRule::UnitIdGrammar,
                format!("unit id `{id}` does not match `{label}`"),
            ),
            Some(caps) if caps[1] != p.section_id => push(
                id,
                ViolationRule::UnitIdSectionMismatch,
                format!(
                    "unit id `{id}` names section {} but the unit is in section {}",
                    &caps[1], p.section_id
                ),
            ),
            Some(_) => {}
        }

        if let UnitBody::CriteriaTable(t) = &unit.body {
            if t.rows.is_empty() {
                push(id, ViolationRule::EmptyTable, format!("table `{id}` has no rows"));
            }
            let consecutive = t
                .rows
                .iter()
                .enumerate()
                .all(|(i, r)| r.row_index as usize == i + 1);
            if !consecutive {
                let seq: Vec<String> = t.rows.iter().map(|r| r.row_index.to_string()).collect();
                push(
                    id,
                    ViolationRule::RowSequence,
                    format!("row indices {} are not consecutive from 1", seq.join(",")),
                );
            }
            for row in &t.rows {
                if extract_numeric_tokens(&row.threshold_text).is_empty() {
                    push(
                        id,
                        ViolationRule::ThresholdToken,
                        format!(
                            "row {} threshold `{}` has no numeric token",
                            row.row_index, row.threshold_text
                        ),
                    );
                }
            }
        }
    }

    if kb_has_units && !is_iso_date(&kb.source_date) {
        push(
            "",
            ViolationRule::InvalidSourceDate,
            format!("source date `{}` is not YYYY-MM-DD", kb.source_date),
        );
    }

    let mut sections = HashSet::new();
    for entry in &kb.catalog.entries {
        let sid = entry.section_id.as_str();
        if !sections.insert(sid) {
            push(sid, ViolationRule::DuplicateSection, format!("duplicate section `{sid}`"));
        }
        if entry.keywords.iter().all(|k| k.trim().is_empty()) {
            push(
                sid,
                ViolationRule::MissingKeywords,
                format!("section `{sid}` has no routing keywords"),
            );
        }
    }
    if let Some(default) = &kb.catalog.default_section {
        if !kb.catalog.contains(default) {
            push(
                default,
                ViolationRule::UnresolvedDefault,
                format!("default section `{default}` is not in the catalog"),
            );
        }
    }
    out
}

fn is_iso_date(s: &str) -> bool {
    s.len() == 10 && chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d").is_ok()
}
