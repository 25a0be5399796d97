//! Typed guideline knowledge base.
//!
//! A [`KnowledgeBase`] holds the semantic units of one guideline document
//! (recommendations, criteria tables and narrative blocks) together with the
//! section catalog used for routing. Every unit carries its provenance and a
//! priority tier that is a pure function of its kind.
//!
//! Knowledge bases are built either from guideline markup
//! ([`parse_guideline_markup`]) or from the JSON interchange document
//! ([`load_kb`]), and are immutable afterwards.

mod json;
mod markup;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use json::{load_kb, serialize_kb, SchemaError};
pub use markup::{parse_guideline_markup, MalformedMarkup};
pub use validate::{validate_kb, Violation, ViolationRule};

/// The three kinds of content extracted from a guideline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UnitKind {
    Recommendation,
    CriteriaTable,
    Narrative,
}

impl UnitKind {
    pub const ALL: [UnitKind; 3] = [
        UnitKind::Recommendation,
        UnitKind::CriteriaTable,
        UnitKind::Narrative,
    ];

    /// Retrieval tier: 1 is the most clinically authoritative.
    pub fn priority_tier(self) -> u8 {
        match self {
            UnitKind::Recommendation => 1,
            UnitKind::CriteriaTable => 2,
            UnitKind::Narrative => 3,
        }
    }
}

impl fmt::Display for UnitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            UnitKind::Recommendation => "Recommendation",
            UnitKind::CriteriaTable => "CriteriaTable",
            UnitKind::Narrative => "Narrative",
        };
        f.write_str(name)
    }
}

/// ADA evidence grade attached to a recommendation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EvidenceGrade {
    A,
    B,
    C,
    E,
}

impl EvidenceGrade {
    pub fn letter(self) -> char {
        match self {
            EvidenceGrade::A => 'A',
            EvidenceGrade::B => 'B',
            EvidenceGrade::C => 'C',
            EvidenceGrade::E => 'E',
        }
    }

    pub fn from_letter(s: &str) -> Option<Self> {
        match s {
            "A" => Some(EvidenceGrade::A),
            "B" => Some(EvidenceGrade::B),
            "C" => Some(EvidenceGrade::C),
            "E" => Some(EvidenceGrade::E),
            _ => None,
        }
    }
}

impl fmt::Display for EvidenceGrade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Where a unit came from in the source guideline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub section_id: String,
    pub section_title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsection: Option<String>,
    pub unit_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page: Option<u32>,
    pub source_date: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recommendation {
    pub rec_id: String,
    pub evidence_grade: EvidenceGrade,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub row_index: u32,
    pub label: String,
    pub threshold_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriteriaTable {
    pub table_id: String,
    pub title: String,
    pub rows: Vec<TableRow>,
}

impl CriteriaTable {
    pub fn row(&self, row_index: u32) -> Option<&TableRow> {
        self.rows.iter().find(|r| r.row_index == row_index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Narrative {
    pub topic: String,
    pub text: String,
}

/// Kind-specific content of a unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UnitBody {
    Recommendation(Recommendation),
    CriteriaTable(CriteriaTable),
    Narrative(Narrative),
}

/// One semantic unit of guideline content.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContentUnit {
    pub provenance: Provenance,
    pub body: UnitBody,
}

impl ContentUnit {
    pub fn kind(&self) -> UnitKind {
        match self.body {
            UnitBody::Recommendation(_) => UnitKind::Recommendation,
            UnitBody::CriteriaTable(_) => UnitKind::CriteriaTable,
            UnitBody::Narrative(_) => UnitKind::Narrative,
        }
    }

    pub fn priority_tier(&self) -> u8 {
        self.kind().priority_tier()
    }

    pub fn unit_id(&self) -> &str {
        &self.provenance.unit_id
    }

    pub fn section_id(&self) -> &str {
        &self.provenance.section_id
    }

    pub fn as_recommendation(&self) -> Option<&Recommendation> {
        match &self.body {
            UnitBody::Recommendation(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_table(&self) -> Option<&CriteriaTable> {
        match &self.body {
            UnitBody::CriteriaTable(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_narrative(&self) -> Option<&Narrative> {
        match &self.body {
            UnitBody::Narrative(n) => Some(n),
            _ => None,
        }
    }

    /// The unit's content rendered as a single evidence line.
    ///
    /// This is the text the generator quotes from, the validator matches
    /// against and the lexical scorer compares with. Identifiers are left out
    /// so that citation numbers never count as clinical values.
    pub fn evidence_text(&self) -> String {
        match &self.body {
            UnitBody::Recommendation(r) => {
                format!("Recommendation, evidence grade {}: {}", r.evidence_grade, r.text)
            }
            UnitBody::CriteriaTable(t) => {
                let rows: Vec<String> = t.rows.iter().map(row_text).collect();
                format!("{}: {}", t.title, rows.join("; "))
            }
            UnitBody::Narrative(n) => format!("{}: {}", n.topic, n.text),
        }
    }

    /// Evidence text restricted to a single table row. Falls back to the full
    /// evidence text for other kinds or unknown rows.
    pub fn row_evidence_text(&self, row_index: u32) -> Option<String> {
        let table = self.as_table()?;
        let row = table.row(row_index)?;
        Some(format!("{}: {}", table.title, row_text(row)))
    }
}

fn row_text(row: &TableRow) -> String {
    format!("{} {}", row.label, row.threshold_text)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subsection {
    pub id: String,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionEntry {
    pub section_id: String,
    pub title: String,
    #[serde(default)]
    pub subsections: Vec<Subsection>,
    pub keywords: Vec<String>,
    /// Exemplar questions for the few-shot router prompt.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub examples: Vec<String>,
}

/// The routing target space.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionCatalog {
    pub entries: Vec<SectionEntry>,
    /// Section used when no keyword matches. Falls back to the first entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_section: Option<String>,
}

impl SectionCatalog {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, section_id: &str) -> Option<&SectionEntry> {
        self.entries.iter().find(|e| e.section_id == section_id)
    }

    pub fn contains(&self, section_id: &str) -> bool {
        self.get(section_id).is_some()
    }

    pub fn default_entry(&self) -> Option<&SectionEntry> {
        self.default_section
            .as_deref()
            .and_then(|id| self.get(id))
            .or_else(|| self.entries.first())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeBase {
    pub source_name: String,
    pub source_date: String,
    pub catalog: SectionCatalog,
    pub units: Vec<ContentUnit>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown section `{0}`")]
pub struct UnknownSection(pub String);

impl KnowledgeBase {
    pub fn unit(&self, unit_id: &str) -> Option<&ContentUnit> {
        self.units.iter().find(|u| u.unit_id() == unit_id)
    }

    /// All units of a section in (priority tier, document order) order,
    /// optionally restricted to some kinds.
    pub fn units_in_section(
        &self,
        section_id: &str,
        kinds: Option<&[UnitKind]>,
    ) -> Result<Vec<&ContentUnit>, UnknownSection> {
        if !self.catalog.contains(section_id) {
            return Err(UnknownSection(section_id.to_string()));
        }
        let mut out: Vec<&ContentUnit> = self
            .units
            .iter()
            .filter(|u| u.section_id() == section_id)
            .filter(|u| kinds.is_none_or(|ks| ks.contains(&u.kind())))
            .collect();
        // stable: document order survives within a tier
        out.sort_by_key(|u| u.priority_tier());
        Ok(out)
    }
}

/// Free-function form of [`KnowledgeBase::units_in_section`].
pub fn units_in_section<'a>(
    kb: &'a KnowledgeBase,
    section_id: &str,
    kinds: Option<&[UnitKind]>,
) -> Result<Vec<&'a ContentUnit>, UnknownSection> {
    kb.units_in_section(section_id, kinds)
}
