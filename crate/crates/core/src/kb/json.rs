//! JSON interchange for knowledge bases.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{
    validate_kb, ContentUnit, CriteriaTable, KnowledgeBase, Narrative, Provenance, Recommendation,
    SectionCatalog, UnitBody, UnitKind, ViolationRule,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("schema error at `{path}`: {reason}")]
pub struct SchemaError {
    pub path: String,
    pub reason: String,
}

#[derive(Serialize, Deserialize)]
struct KbWire {
    source_name: String,
    source_date: String,
    catalog: SectionCatalog,
    units: Vec<UnitWire>,
}

#[derive(Serialize, Deserialize)]
struct UnitWire {
    kind: UnitKind,
    provenance: Provenance,
    priority_tier: u8,
    body: Value,
}

/// Serialize to the interchange document. Output is stable for equal inputs.
pub fn serialize_kb(kb: &KnowledgeBase) -> Vec<u8> {
    let wire = KbWire {
        source_name: kb.source_name.clone(),
        source_date: kb.source_date.clone(),
        catalog: kb.catalog.clone(),
        units: kb
            .units
            .iter()
            .map(|u| UnitWire {
                kind: u.kind(),
                provenance: u.provenance.clone(),
                priority_tier: u.priority_tier(),
                body: match &u.body {
                    UnitBody::Recommendation(r) => serde_json::to_value(r),
                    UnitBody::CriteriaTable(t) => serde_json::to_value(t),
                    UnitBody::Narrative(n) => serde_json::to_value(n),
                }
                .expect("payloads serialize"),
            })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&wire).expect("knowledge base serializes");
    out.push(b'\n');
    out
}

/// Load a knowledge base from the interchange document and check its
/// invariants.
pub fn load_kb(serialized: &[u8]) -> Result<KnowledgeBase, SchemaError> {
    let de = &mut serde_json::Deserializer::from_slice(serialized);
    let wire: KbWire = serde_path_to_error::deserialize(de).map_err(|e| SchemaError {
        path: e.path().to_string(),
        reason: e.inner().to_string(),
    })?;

    let mut units = Vec::with_capacity(wire.units.len());
    for (i, u) in wire.units.into_iter().enumerate() {
        if u.priority_tier != u.kind.priority_tier() {
            return Err(SchemaError {
                path: format!("units[{i}].priority_tier"),
                reason: format!(
                    "{} units have priority tier {}, found {}",
                    u.kind,
                    u.kind.priority_tier(),
                    u.priority_tier
                ),
            });
        }
        let body = match u.kind {
            UnitKind::Recommendation => body_as::<Recommendation>(u.body, i).map(UnitBody::Recommendation),
            UnitKind::CriteriaTable => body_as::<CriteriaTable>(u.body, i).map(UnitBody::CriteriaTable),
            UnitKind::Narrative => body_as::<Narrative>(u.body, i).map(UnitBody::Narrative),
        }?;
        units.push(ContentUnit {
            provenance: u.provenance,
            body,
        });
    }

    let kb = KnowledgeBase {
        source_name: wire.source_name,
        source_date: wire.source_date,
        catalog: wire.catalog,
        units,
    };
    if let Some(v) = validate_kb(&kb).into_iter().next() {
        return Err(SchemaError {
            path: violation_path(&kb, v.rule, &v.unit_id),
            reason: format!("{}: {}", v.rule, v.message),
        });
    }
    Ok(kb)
}

fn body_as<T: serde::de::DeserializeOwned>(body: Value, i: usize) -> Result<T, SchemaError> {
    serde_path_to_error::deserialize(body).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." {
            format!("units[{i}].body")
        } else {
            format!("units[{i}].body.{inner}")
        };
        SchemaError {
            path,
            reason: e.inner().to_string(),
        }
    })
}

fn violation_path(kb: &KnowledgeBase, rule: ViolationRule, id: &str) -> String {
    let mut positions = kb
        .units
        .iter()
        .enumerate()
        .filter(|(_, u)| u.unit_id() == id)
        .map(|(i, _)| i);
    let idx = match rule {
        ViolationRule::DuplicateUnitId => positions.nth(1),
        ViolationRule::DuplicateSection
        | ViolationRule::MissingKeywords
        | ViolationRule::UnresolvedDefault => return "catalog".to_string(),
        _ => positions.next(),
    };
    match (idx, rule) {
        (None, _) => "source_date".to_string(),
        (Some(i), ViolationRule::DuplicateUnitId | ViolationRule::EmptyUnitId) => {
            format!("units[{i}].provenance.unit_id")
        }
        (Some(i), ViolationRule::UnresolvedSection) => format!("units[{i}].provenance.section_id"),
        (
            Some(i),
            ViolationRule::RowSequence | ViolationRule::EmptyTable | ViolationRule::ThresholdToken,
        ) => format!("units[{i}].body.rows"),
        (Some(i), _) => format!("units[{i}]"),
    }
}
