use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kb::{ContentUnit, UnitBody};

/// A reference from an answer to a bundle unit.
///
/// `display` follows one of `Rec <sec>.<num><letter> (<grade>)`,
/// `Table <sec>.<n>, row <k>` or `Narr <sec>-<nn>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Citation {
    pub display: String,
    pub unit_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_index: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CitationError {
    #[error("citing table `{0}` requires a row index")]
    RowIndexRequired(String),
    #[error("`{0}` is not a table; row index not allowed")]
    RowIndexForbidden(String),
    #[error("table `{0}` has no row {1}")]
    RowOutOfRange(String, u32),
}

pub fn format_citation(unit: &ContentUnit, row_index: Option<u32>) -> Result<Citation, CitationError> {
    let id = unit.unit_id().to_string();
    let display = match (&unit.body, row_index) {
        (UnitBody::Recommendation(r), None) => format!("{} ({})", r.rec_id, r.evidence_grade),
        (UnitBody::Narrative(_), None) => id.clone(),
        (UnitBody::CriteriaTable(t), Some(k)) => {
            if t.row(k).is_none() {
                return Err(CitationError::RowOutOfRange(id, k));
            }
            format!("{}, row {k}", t.table_id)
        }
        (UnitBody::CriteriaTable(_), None) => return Err(CitationError::RowIndexRequired(id)),
        (_, Some(_)) => return Err(CitationError::RowIndexForbidden(id)),
    };
    Ok(Citation {
        display,
        unit_id: id,
        row_index,
    })
}

static REC: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(Rec [A-Za-z0-9]+\.[0-9]+[a-z]?)(?: \(([ABCE])\))?$").unwrap()
});
static TABLE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(Table [A-Za-z0-9]+\.[0-9]+)(?:,? row ([0-9]+))?$").unwrap()
});
static NARR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(Narr [A-Za-z0-9]+-[0-9]{2,})$").unwrap());

/// Any citation-shaped substring.
pub(crate) static EMBEDDED: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"\(?\b(?:Rec [A-Za-z0-9]+\.[0-9]+[a-z]?(?: \([ABCE]\))?|Table [A-Za-z0-9]+\.[0-9]+(?:,? row [0-9]+)?|Narr [A-Za-z0-9]+-[0-9]{2,})\)?",
    )
    .unwrap()
});

/// Parse a citation as written in a model reply. The unit is not resolved.
pub fn parse_citation(text: &str) -> Option<Citation> {
    let text = text.trim().trim_matches('`');
    let (unit_id, row_index) = if let Some(c) = REC.captures(text) {
        (c[1].to_string(), None)
    } else if let Some(c) = TABLE.captures(text) {
        (c[1].to_string(), c.get(2).and_then(|m| m.as_str().parse().ok()))
    } else {
        let c = NARR.captures(text)?;
        (c[1].to_string(), None)
    };
    Some(Citation {
        display: text.to_string(),
        unit_id,
        row_index,
    })
}

/// Remove citation-shaped substrings and tidy the leftover spacing.
pub fn strip_citations(text: &str) -> String {
    let stripped = EMBEDDED.replace_all(text, "");
    let collapsed = stripped.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed
        .replace(" .", ".")
        .replace(" ,", ",")
        .replace("()", "")
        .trim()
        .to_string()
}
