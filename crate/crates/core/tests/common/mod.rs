//! Test support shared by the integration and acceptance suites: a seeded
//! synthetic knowledge-base generator, a markup renderer and digit-drift
//! helpers. Everything here is independent of the library's own parsers.

#![allow(dead_code)]

pub mod fake_server;

use guideqa_core::kb::{
    ContentUnit, CriteriaTable, EvidenceGrade, KnowledgeBase, Narrative, Provenance,
    Recommendation, SectionCatalog, SectionEntry, Subsection, TableRow, UnitBody,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const WORDS: &[&str] = &[
    "glucose", "insulin", "kidney", "retinal", "statin", "lipid", "sodium", "vascular",
    "cardiac", "hepatic", "obesity", "nutrition", "sleep", "smoking", "alcohol", "foot",
    "neuropathy", "vaccine", "pregnancy", "adolescent", "elderly", "hospital", "device",
    "pump", "sensor", "meal", "carbohydrate", "protein", "exercise", "walking", "therapy",
    "screening", "counseling", "monitoring", "referral", "education", "medication",
    "tablet", "injection", "hypoglycemia",
];

const VERBS: &[&str] = &["Offer", "Consider", "Recommend", "Assess", "Monitor", "Review"];
const UNITS: &[&str] = &["mg/dL", "mmol/mol", "min/week", "kg", "cm"];

/// True when two numerals have the same shape and differ in exactly one digit.
pub fn hamming_one(a: &str, b: &str) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut diff = 0;
    for (x, y) in a.bytes().zip(b.bytes()) {
        if x != y {
            if !(x.is_ascii_digit() && y.is_ascii_digit()) {
                return false;
            }
            diff += 1;
        }
    }
    diff == 1
}

/// Draws numerals that are pairwise at least two digit edits apart, so a
/// single-digit mutation can never turn one into another.
struct NumberPool {
    used: Vec<String>,
}

impl NumberPool {
    fn accept(&mut self, candidate: String) -> Option<String> {
        if self
            .used
            .iter()
            .any(|u| *u == candidate || hamming_one(u, &candidate))
        {
            return None;
        }
        self.used.push(candidate.clone());
        Some(candidate)
    }

    fn integer(&mut self, rng: &mut ChaCha8Rng) -> String {
        loop {
            if let Some(n) = self.accept(rng.gen_range(100..1000).to_string()) {
                return n;
            }
        }
    }

    fn integer_pair(&mut self, rng: &mut ChaCha8Rng) -> (String, String) {
        let a = self.integer(rng);
        let b = self.integer(rng);
        let (x, y): (u32, u32) = (a.parse().unwrap(), b.parse().unwrap());
        if x < y {
            (a, b)
        } else {
            (b, a)
        }
    }

    fn decimal(&mut self, rng: &mut ChaCha8Rng) -> String {
        for _ in 0..200 {
            let c = format!("{}.{}", rng.gen_range(10..100), rng.gen_range(0..10));
            if let Some(n) = self.accept(c) {
                return n;
            }
        }
        self.integer(rng)
    }
}

fn words(rng: &mut ChaCha8Rng, n: usize) -> Vec<&'static str> {
    WORDS.choose_multiple(rng, n).copied().collect()
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn threshold(rng: &mut ChaCha8Rng, pool: &mut NumberPool) -> (String, Option<String>) {
    let unit = UNITS.choose(rng).unwrap().to_string();
    match rng.gen_range(0..5) {
        0 => {
            let (a, b) = pool.integer_pair(rng);
            (format!("{a}–{b} {unit}"), Some(unit))
        }
        1 => (format!("≥{} {unit}", pool.integer(rng)), Some(unit)),
        2 => (format!("<{} {unit}", pool.integer(rng)), Some(unit)),
        3 => (format!("{}%", pool.decimal(rng)), Some("%".into())),
        _ => (format!("at least {} {unit}", pool.integer(rng)), Some(unit)),
    }
}

fn rec_text(rng: &mut ChaCha8Rng, pool: &mut NumberPool) -> String {
    let w = words(rng, 3);
    let verb = VERBS.choose(rng).unwrap();
    if rng.gen_bool(0.6) {
        let (t, _) = threshold(rng, pool);
        format!("{verb} {} {} when {} is {t}.", w[0], w[1], w[2])
    } else {
        format!("{verb} {} {} for adults with {}.", w[0], w[1], w[2])
    }
}

fn narrative_text(rng: &mut ChaCha8Rng, pool: &mut NumberPool) -> String {
    let n = rng.gen_range(1..=3);
    (0..n)
        .map(|_| {
            let w = words(rng, 2);
            if rng.gen_bool(0.4) {
                format!("{} cohorts of {} adults improved {}.", capitalize(w[0]), pool.integer(rng), w[1])
            } else {
                format!("{} supports {} in routine care.", capitalize(w[0]), w[1])
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// A valid knowledge base drawn from `seed`: one to five sections, each with
/// an interleaved mix of recommendations, criteria tables and narratives.
/// Numerals are unique and pairwise at least two digits apart.
pub fn synth_kb(seed: u64) -> KnowledgeBase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = NumberPool { used: Vec::new() };
    let source_date = format!(
        "20{:02}-{:02}-{:02}",
        rng.gen_range(10..30),
        rng.gen_range(1..=12),
        rng.gen_range(1..=28)
    );

    let mut ids: Vec<u32> = (1..=20).collect();
    ids.shuffle(&mut rng);
    let n_sections = rng.gen_range(1..=5);
    let section_ids: Vec<String> = ids[..n_sections].iter().map(u32::to_string).collect();

    let mut catalog = SectionCatalog::default();
    let mut units = Vec::new();
    let mut page = rng.gen_range(1..40u32);
    for sid in &section_ids {
        let title_words = words(&mut rng, 2);
        let title = format!("{} and {}", capitalize(title_words[0]), title_words[1]);
        let n_keywords = rng.gen_range(1..=3);
        let keywords: Vec<String> = words(&mut rng, n_keywords)
            .into_iter()
            .map(String::from)
            .collect();
        let n_examples = rng.gen_range(0..=2);
        let examples: Vec<String> = (0..n_examples)
            .map(|_| format!("What about {}?", words(&mut rng, 1)[0]))
            .collect();

        let mut kinds: Vec<u8> = Vec::new();
        kinds.extend(std::iter::repeat_n(0, rng.gen_range(0..=4)));
        kinds.extend(std::iter::repeat_n(1, rng.gen_range(0..=3)));
        kinds.extend(std::iter::repeat_n(2, rng.gen_range(0..=3)));
        kinds.shuffle(&mut rng);

        let subsection_at = if rng.gen_bool(0.5) {
            Some(rng.gen_range(0..=kinds.len()))
        } else {
            None
        };
        let sub_title = format!("{} care", capitalize(words(&mut rng, 1)[0]));
        let subsections = match subsection_at {
            Some(_) => vec![Subsection {
                id: format!("{sid}.1"),
                title: sub_title.clone(),
            }],
            None => Vec::new(),
        };

        let (mut n_rec, mut n_table, mut n_narr) = (0, 0, 0);
        for (i, kind) in kinds.iter().enumerate() {
            if rng.gen_bool(0.3) {
                page += 1;
            }
            let subsection = match subsection_at {
                Some(at) if i >= at => Some(sub_title.clone()),
                _ => None,
            };
            let (unit_id, body) = match kind {
                0 => {
                    n_rec += 1;
                    let suffix = if rng.gen_bool(0.5) {
                        ((b'a' + rng.gen_range(0..5)) as char).to_string()
                    } else {
                        String::new()
                    };
                    let id = format!("Rec {sid}.{n_rec}{suffix}");
                    let grade = *[EvidenceGrade::A, EvidenceGrade::B, EvidenceGrade::C, EvidenceGrade::E]
                        .choose(&mut rng)
                        .unwrap();
                    (
                        id.clone(),
                        UnitBody::Recommendation(Recommendation {
                            rec_id: id,
                            evidence_grade: grade,
                            text: rec_text(&mut rng, &mut pool),
                        }),
                    )
                }
                1 => {
                    n_table += 1;
                    let id = format!("Table {sid}.{n_table}");
                    let tw = words(&mut rng, 2);
                    let n_rows = rng.gen_range(1..=4u32);
                    let rows = (1..=n_rows)
                        .map(|row_index| {
                            let (threshold_text, unit) = threshold(&mut rng, &mut pool);
                            TableRow {
                                row_index,
                                label: capitalize(words(&mut rng, 1)[0]),
                                threshold_text,
                                unit: if rng.gen_bool(0.7) { unit } else { None },
                            }
                        })
                        .collect();
                    (
                        id.clone(),
                        UnitBody::CriteriaTable(CriteriaTable {
                            table_id: id,
                            title: format!("{} targets for {}", capitalize(tw[0]), tw[1]),
                            rows,
                        }),
                    )
                }
                _ => {
                    n_narr += 1;
                    let id = format!("Narr {sid}-{n_narr:02}");
                    (
                        id,
                        UnitBody::Narrative(Narrative {
                            topic: capitalize(words(&mut rng, 1)[0]),
                            text: narrative_text(&mut rng, &mut pool),
                        }),
                    )
                }
            };
            units.push(ContentUnit {
                provenance: Provenance {
                    section_id: sid.clone(),
                    section_title: title.clone(),
                    subsection,
                    unit_id,
                    page: Some(page),
                    source_date: source_date.clone(),
                },
                body,
            });
        }

        catalog.entries.push(SectionEntry {
            section_id: sid.clone(),
            title,
            subsections,
            keywords,
            examples,
        });
    }
    if rng.gen_bool(0.5) {
        catalog.default_section = section_ids.choose(&mut rng).cloned();
    }

    KnowledgeBase {
        source_name: format!("Synthetic guideline {seed}"),
        source_date,
        catalog,
        units,
    }
}

/// Render a knowledge base back to guideline markup. Units must be grouped
/// by section in catalog order, as `synth_kb` produces them.
pub fn render_markup(kb: &KnowledgeBase) -> String {
    let mut out = format!("@source {} | {}\n", kb.source_name, kb.source_date);
    if let Some(d) = &kb.catalog.default_section {
        out += &format!("@default {d}\n");
    }
    for entry in &kb.catalog.entries {
        out += &format!("\n@section {} | {}\n", entry.section_id, entry.title);
        out += &format!("@keywords {}\n", entry.keywords.join(" | "));
        for ex in &entry.examples {
            out += &format!("@example {ex}\n");
        }
        let mut declared = 0;
        let mut last_page = None;
        let section_units = kb
            .units
            .iter()
            .filter(|u| u.provenance.section_id == entry.section_id);
        for unit in section_units {
            let p = &unit.provenance;
            if p.subsection.is_some() && declared < entry.subsections.len() {
                let s = &entry.subsections[declared];
                out += &format!("@subsection {} | {}\n", s.id, s.title);
                declared += 1;
            }
            if p.page != last_page {
                if let Some(n) = p.page {
                    out += &format!("@page {n}\n");
                }
                last_page = p.page;
            }
            match &unit.body {
                UnitBody::Recommendation(r) => {
                    out += &format!("@rec {} | {} | {}\n", r.rec_id, r.evidence_grade, r.text)
                }
                UnitBody::CriteriaTable(t) => {
                    out += &format!("@table {} | {}\n", t.table_id, t.title);
                    for row in &t.rows {
                        match &row.unit {
                            Some(u) => out += &format!("@row {} | {} | {u}\n", row.label, row.threshold_text),
                            None => out += &format!("@row {} | {}\n", row.label, row.threshold_text),
                        }
                    }
                }
                UnitBody::Narrative(n) => {
                    out += &format!("@narr {} | {} | {}\n", p.unit_id, n.topic, n.text)
                }
            }
        }
        for s in &entry.subsections[declared..] {
            out += &format!("@subsection {} | {}\n", s.id, s.title);
        }
    }
    out
}

/// Byte offsets of ASCII digits that sit inside numerals, skipping digits
/// glued to a preceding letter.
pub fn numeral_digit_positions(text: &str) -> Vec<usize> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            let glued = start > 0 && (bytes[start - 1] as char).is_ascii_alphabetic();
            if !glued {
                out.extend((start..i).filter(|&k| bytes[k].is_ascii_digit()));
            }
        } else {
            i += 1;
        }
    }
    out
}

/// Replace the digit at `pos` with a different digit.
pub fn mutate_digit_at(text: &str, pos: usize, rng: &mut impl Rng) -> String {
    let old = text.as_bytes()[pos];
    let mut new = old;
    while new == old {
        new = b'0' + rng.gen_range(0..10u8);
    }
    let mut bytes = text.as_bytes().to_vec();
    bytes[pos] = new;
    String::from_utf8(bytes).expect("digit swap keeps UTF-8")
}

/// All numerals (digit runs with inner dots) in a knowledge base's text.
pub fn kb_numerals(kb: &KnowledgeBase) -> Vec<String> {
    let mut out = Vec::new();
    for unit in &kb.units {
        let text = match &unit.body {
            UnitBody::Recommendation(r) => r.text.clone(),
            UnitBody::CriteriaTable(t) => t
                .rows
                .iter()
                .map(|r| r.threshold_text.clone())
                .collect::<Vec<_>>()
                .join(" "),
            UnitBody::Narrative(n) => n.text.clone(),
        };
        let mut current = String::new();
        for c in text.chars().chain(std::iter::once(' ')) {
            if c.is_ascii_digit() || (c == '.' && !current.is_empty()) {
                current.push(c);
            } else if !current.is_empty() {
                out.push(current.trim_end_matches('.').to_string());
                current.clear();
            }
        }
    }
    out
}

/// No two distinct numerals in the knowledge base are one digit apart.
pub fn collision_free(kb: &KnowledgeBase) -> bool {
    let nums = kb_numerals(kb);
    nums.iter()
        .enumerate()
        .all(|(i, a)| nums[i + 1..].iter().all(|b| !hamming_one(a, b)))
}
