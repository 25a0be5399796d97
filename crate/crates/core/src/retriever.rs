//! Priority-tiered evidence retrieval.
//!
//! The bundle is built per tier: recommendations, then criteria tables, then
//! narrative. A similarity scorer may only reorder units inside a tier, and
//! caps drop units from the end of a tier. Truncation to the bundle size
//! removes the lowest tier first, so a unit can never move ahead of a more
//! authoritative one.

use serde::Serialize;

use crate::kb::{ContentUnit, KnowledgeBase, UnknownSection, UnitKind};
use crate::router::RouteDecision;
use crate::text::word_tokens;

/// Pluggable within-tier relevance score. Must be non-negative.
pub trait SimilarityScorer: Send + Sync {
    fn score(&self, question: &str, unit: &ContentUnit) -> f64;
}

/// Token-overlap scorer, see [`lexical_score`].
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalScorer;

impl SimilarityScorer for LexicalScorer {
    fn score(&self, question: &str, unit: &ContentUnit) -> f64 {
        lexical_score(question, unit)
    }
}

/// Size of the multiset intersection of lowercase word tokens.
pub fn lexical_overlap(a: &str, b: &str) -> usize {
    let mut left = word_tokens(a);
    let mut right = word_tokens(b);
    left.sort_unstable();
    right.sort_unstable();
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < left.len() && j < right.len() {
        match left[i].cmp(&right[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

pub fn lexical_score(question: &str, unit: &ContentUnit) -> f64 {
    lexical_overlap(question, &unit.evidence_text()) as f64
}

pub struct RetrieveOptions<'a> {
    pub max_bundle_size: usize,
    pub prefilter: Option<&'a dyn SimilarityScorer>,
    pub per_tier_cap: Option<usize>,
}

impl Default for RetrieveOptions<'_> {
    fn default() -> Self {
        Self {
            max_bundle_size: 12,
            prefilter: None,
            per_tier_cap: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvidenceBundle {
    pub question: String,
    pub route: RouteDecision,
    pub items: Vec<ContentUnit>,
    pub truncated: bool,
}

impl EvidenceBundle {
    pub fn contains(&self, unit_id: &str) -> bool {
        self.items.iter().any(|u| u.unit_id() == unit_id)
    }
}

/// Assemble the evidence bundle for a routed question.
pub fn retrieve(
    kb: &KnowledgeBase,
    route: &RouteDecision,
    question: &str,
    options: &RetrieveOptions<'_>,
) -> Result<EvidenceBundle, UnknownSection> {
    let section_units = kb.units_in_section(&route.section_id, None)?;
    let mut items: Vec<ContentUnit> = Vec::new();
    let mut dropped = false;

    for kind in UnitKind::ALL {
        let mut tier: Vec<&ContentUnit> = section_units
            .iter()
            .copied()
            .filter(|u| u.kind() == kind)
            .collect();
        if let Some(scorer) = options.prefilter {
            let mut scored: Vec<(f64, &ContentUnit)> = tier
                .into_iter()
                .map(|u| (scorer.score(question, u).max(0.0), u))
                .collect();
            // stable sort keeps document order among equal scores
            scored.sort_by(|a, b| b.0.total_cmp(&a.0));
            tier = scored.into_iter().map(|(_, u)| u).collect();
        }
        if let Some(cap) = options.per_tier_cap {
            if tier.len() > cap {
                tier.truncate(cap);
                dropped = true;
            }
        }
        items.extend(tier.into_iter().cloned());
    }

    if items.len() > options.max_bundle_size {
        items.truncate(options.max_bundle_size);
        dropped = true;
    }

    Ok(EvidenceBundle {
        question: question.to_string(),
        route: route.clone(),
        items,
        truncated: dropped,
    })
}
