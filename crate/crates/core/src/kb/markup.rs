//! Line-oriented guideline markup.
//!
//! One directive per line, fields separated by `|`, `#` starts a comment line
//! and blank lines are ignored:
//!
//! ```text
//! @source <name> | <YYYY-MM-DD>
//! @default <section id>
//! @section <id> | <title>
//! @keywords <phrase> | <phrase> ...
//! @example <question>
//! @subsection <id> | <title>
//! @page <n>
//! @rec <Rec s.n[x]> | <A|B|C|E> | <text>
//! @table <Table s.n> | <title>
//! @row <label> | <threshold text> [| <unit>]
//! @narr <Narr s-nn> | <topic> | <text>
//! ```

use std::collections::HashMap;

use thiserror::Error;

use super::{
    validate_kb, ContentUnit, CriteriaTable, EvidenceGrade, KnowledgeBase, Narrative, Provenance,
    Recommendation, SectionEntry, Subsection, TableRow, UnitBody,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line_no}: {reason}")]
pub struct MalformedMarkup {
    pub line_no: usize,
    pub reason: String,
}

fn malformed(line_no: usize, reason: impl Into<String>) -> MalformedMarkup {
    MalformedMarkup {
        line_no,
        reason: reason.into(),
    }
}

struct Cursor {
    section: Option<(String, String)>,
    subsection: Option<String>,
    page: Option<u32>,
    // index of the open table in `units`, if the last unit directive was @table
    open_table: Option<usize>,
}

/// Parse guideline markup into a knowledge base.
///
/// The result is checked with [`validate_kb`]; the first violation is
/// reported against the line that introduced the offending unit or section.
pub fn parse_guideline_markup(markup_text: &str) -> Result<KnowledgeBase, MalformedMarkup> {
    let mut kb = KnowledgeBase::default();
    let mut have_source = false;
    let mut default_line = 0;
    let mut cursor = Cursor {
        section: None,
        subsection: None,
        page: None,
        open_table: None,
    };
    let mut unit_lines: HashMap<String, usize> = HashMap::new();
    let mut section_lines: HashMap<String, usize> = HashMap::new();

    for (idx, raw) in markup_text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some(rest) = line.strip_prefix('@') else {
            return Err(malformed(line_no, "expected a directive starting with `@`"));
        };
        let (directive, args) = match rest.split_once(char::is_whitespace) {
            Some((d, a)) => (d, a.trim()),
            None => (rest, ""),
        };
        let fields: Vec<&str> = if args.is_empty() {
            Vec::new()
        } else {
            args.split('|').map(str::trim).collect()
        };

        if directive != "row" {
            cursor.open_table = None;
        }

        match directive {
            "source" => {
                let [name, date] = expect_fields::<2>(&fields, line_no, "@source <name> | <date>")?;
                if have_source {
                    return Err(malformed(line_no, "duplicate @source"));
                }
                if chrono::NaiveDate::parse_from_str(date, "%Y-%m-%d").is_err() {
                    return Err(malformed(line_no, format!("invalid ISO-8601 date `{date}`")));
                }
                kb.source_name = name.to_string();
                kb.source_date = date.to_string();
                have_source = true;
            }
            "default" => {
                let [id] = expect_fields::<1>(&fields, line_no, "@default <section id>")?;
                kb.catalog.default_section = Some(id.to_string());
                default_line = line_no;
            }
            "section" => {
                let [id, title] = expect_fields::<2>(&fields, line_no, "@section <id> | <title>")?;
                if !have_source {
                    return Err(malformed(line_no, "@section before @source"));
                }
                if section_lines.contains_key(id) {
                    return Err(malformed(line_no, format!("duplicate section `{id}`")));
                }
                section_lines.insert(id.to_string(), line_no);
                kb.catalog.entries.push(SectionEntry {
                    section_id: id.to_string(),
                    title: title.to_string(),
                    subsections: Vec::new(),
                    keywords: Vec::new(),
                    examples: Vec::new(),
                });
                cursor.section = Some((id.to_string(), title.to_string()));
                cursor.subsection = None;
            }
            "keywords" => {
                let entry = current_entry(&mut kb, line_no)?;
                if fields.iter().any(|f| f.is_empty()) || fields.is_empty() {
                    return Err(malformed(line_no, "@keywords needs non-empty phrases"));
                }
                entry
                    .keywords
                    .extend(fields.iter().map(|k| k.to_lowercase()));
            }
            "example" => {
                let entry = current_entry(&mut kb, line_no)?;
                if args.is_empty() {
                    return Err(malformed(line_no, "@example needs a question"));
                }
                entry.examples.push(args.to_string());
            }
            "subsection" => {
                let [id, title] =
                    expect_fields::<2>(&fields, line_no, "@subsection <id> | <title>")?;
                let entry = current_entry(&mut kb, line_no)?;
                if entry.subsections.iter().any(|s| s.id == id) {
                    return Err(malformed(line_no, format!("duplicate subsection `{id}`")));
                }
                entry.subsections.push(Subsection {
                    id: id.to_string(),
                    title: title.to_string(),
                });
                cursor.subsection = Some(title.to_string());
            }
            "page" => {
                let [n] = expect_fields::<1>(&fields, line_no, "@page <n>")?;
                match n.parse::<u32>() {
                    Ok(p) if p > 0 => cursor.page = Some(p),
                    _ => return Err(malformed(line_no, format!("invalid page `{n}`"))),
                }
            }
            "rec" => {
                let [id, grade, text] =
                    expect_fields::<3>(&fields, line_no, "@rec <id> | <grade> | <text>")?;
                let grade = EvidenceGrade::from_letter(grade)
                    .ok_or_else(|| malformed(line_no, format!("invalid evidence grade `{grade}`")))?;
                let provenance = provenance(&kb, &cursor, id, line_no)?;
                push_unit(
                    &mut kb,
                    &mut unit_lines,
                    line_no,
                    ContentUnit {
                        provenance,
                        body: UnitBody::Recommendation(Recommendation {
                            rec_id: id.to_string(),
                            evidence_grade: grade,
                            text: text.to_string(),
                        }),
                    },
                )?;
            }
            "table" => {
                let [id, title] = expect_fields::<2>(&fields, line_no, "@table <id> | <title>")?;
                let provenance = provenance(&kb, &cursor, id, line_no)?;
                push_unit(
                    &mut kb,
                    &mut unit_lines,
                    line_no,
                    ContentUnit {
                        provenance,
                        body: UnitBody::CriteriaTable(CriteriaTable {
                            table_id: id.to_string(),
                            title: title.to_string(),
                            rows: Vec::new(),
                        }),
                    },
                )?;
                cursor.open_table = Some(kb.units.len() - 1);
            }
            "row" => {
                let (label, threshold, unit) = match fields.as_slice() {
                    [l, t] => (*l, *t, None),
                    [l, t, u] => (*l, *t, Some(*u)),
                    _ => {
                        return Err(malformed(
                            line_no,
                            "expected @row <label> | <threshold> [| <unit>]",
                        ))
                    }
                };
                let Some(table_idx) = cursor.open_table else {
                    return Err(malformed(line_no, "@row outside of a @table"));
                };
                let UnitBody::CriteriaTable(table) = &mut kb.units[table_idx].body else {
                    unreachable!("open_table always points at a table");
                };
                let row_index = table.rows.len() as u32 + 1;
                table.rows.push(TableRow {
                    row_index,
                    label: label.to_string(),
                    threshold_text: threshold.to_string(),
                    unit: unit.filter(|u| !u.is_empty()).map(str::to_string),
                });
            }
            "narr" => {
                let [id, topic, text] =
                    expect_fields::<3>(&fields, line_no, "@narr <id> | <topic> | <text>")?;
                let provenance = provenance(&kb, &cursor, id, line_no)?;
                push_unit(
                    &mut kb,
                    &mut unit_lines,
                    line_no,
                    ContentUnit {
                        provenance,
                        body: UnitBody::Narrative(Narrative {
                            topic: topic.to_string(),
                            text: text.to_string(),
                        }),
                    },
                )?;
            }
            other => return Err(malformed(line_no, format!("unknown directive `@{other}`"))),
        }
    }

    for unit in &kb.units {
        if let UnitBody::CriteriaTable(t) = &unit.body {
            if t.rows.is_empty() {
                return Err(malformed(
                    unit_lines[unit.unit_id()],
                    format!("table `{}` has no rows", t.table_id),
                ));
            }
        }
    }

    if let Some(v) = validate_kb(&kb).into_iter().next() {
        let line_no = unit_lines
            .get(&v.unit_id)
            .or_else(|| section_lines.get(&v.unit_id))
            .copied()
            .unwrap_or(default_line);
        return Err(malformed(line_no, v.message));
    }
    Ok(kb)
}

fn expect_fields<'a, const N: usize>(
    fields: &[&'a str],
    line_no: usize,
    usage: &str,
) -> Result<[&'a str; N], MalformedMarkup> {
    let arr: [&str; N] = fields
        .try_into()
        .map_err(|_| malformed(line_no, format!("expected {usage}")))?;
    if arr.iter().any(|f| f.is_empty()) {
        return Err(malformed(line_no, format!("empty field; expected {usage}")));
    }
    Ok(arr)
}

fn current_entry(kb: &mut KnowledgeBase, line_no: usize) -> Result<&mut SectionEntry, MalformedMarkup> {
    kb.catalog
        .entries
        .last_mut()
        .ok_or_else(|| malformed(line_no, "directive requires an enclosing @section"))
}

fn provenance(
    kb: &KnowledgeBase,
    cursor: &Cursor,
    unit_id: &str,
    line_no: usize,
) -> Result<Provenance, MalformedMarkup> {
    let Some((section_id, section_title)) = &cursor.section else {
        return Err(malformed(line_no, "unit outside of a @section"));
    };
    Ok(Provenance {
        section_id: section_id.clone(),
        section_title: section_title.clone(),
        subsection: cursor.subsection.clone(),
        unit_id: unit_id.to_string(),
        page: cursor.page,
        source_date: kb.source_date.clone(),
    })
}

fn push_unit(
    kb: &mut KnowledgeBase,
    unit_lines: &mut HashMap<String, usize>,
    line_no: usize,
    unit: ContentUnit,
) -> Result<(), MalformedMarkup> {
    let id = unit.unit_id().to_string();
    if let Some(first) = unit_lines.get(&id) {
        return Err(malformed(
            line_no,
            format!("duplicate unit id `{id}` (first defined on line {first})"),
        ));
    }
    unit_lines.insert(id, line_no);
    kb.units.push(unit);
    Ok(())
}
