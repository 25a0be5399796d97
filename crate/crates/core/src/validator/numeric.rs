//! Numeric threshold tokens.
//!
//! Recognizes values, ranges and percentages with an optional comparator and
//! unit, e.g. `100–125 mg/dL`, `5.7--6.4%`, `≥35 kg/m2`, `100 to 125 mg/dL`.
//! Digits glued to letters (`A1C`, `2-hour`, `75-g`) are not tokens.
//!
//! The normalized form uses an ASCII hyphen for ranges, a single space before
//! units, canonical unit spelling (lowercase except `mg/dL`) and `≤`/`≥` for
//! two-character comparators.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TokenKind {
    Value,
    Range,
    Percent,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct NumericToken {
    pub raw: String,
    pub normalized: String,
    pub kind: TokenKind,
}

// (lowercase spelling, canonical), longest first
const UNITS: &[(&str, &str)] = &[
    ("min/week", "min/week"),
    ("mmol/mol", "mmol/mol"),
    ("mmol/l", "mmol/l"),
    ("mg/dl", "mg/dL"),
    ("kg/m²", "kg/m²"),
    ("kg/m2", "kg/m²"),
    ("mm hg", "mmhg"),
    ("mmhg", "mmhg"),
    ("lbs", "lb"),
    ("kg", "kg"),
    ("lb", "lb"),
    ("cm", "cm"),
];

const DASHES: &[&str] = &["--", "–", "—", "-"];

struct Scanner<'a> {
    text: &'a str,
    chars: Vec<(usize, char)>,
}

impl<'a> Scanner<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            text,
            chars: text.char_indices().collect(),
        }
    }

    fn char_at(&self, i: usize) -> Option<char> {
        self.chars.get(i).map(|&(_, c)| c)
    }

    fn byte_at(&self, i: usize) -> usize {
        self.chars.get(i).map_or(self.text.len(), |&(b, _)| b)
    }

    fn rest(&self, i: usize) -> &'a str {
        &self.text[self.byte_at(i)..]
    }

    fn skip_ws(&self, mut i: usize) -> usize {
        while self.char_at(i).is_some_and(|c| c == ' ' || c == '\t' || c == '\u{a0}') {
            i += 1;
        }
        i
    }

    /// `\d+(\.\d+)?` starting at `i`.
    fn number(&self, i: usize) -> Option<(String, usize)> {
        let mut j = i;
        while self.char_at(j).is_some_and(|c| c.is_ascii_digit()) {
            j += 1;
        }
        if j == i {
            return None;
        }
        if self.char_at(j) == Some('.') && self.char_at(j + 1).is_some_and(|c| c.is_ascii_digit()) {
            j += 1;
            while self.char_at(j).is_some_and(|c| c.is_ascii_digit()) {
                j += 1;
            }
        }
        Some((self.rest(i)[..self.byte_at(j) - self.byte_at(i)].to_string(), j))
    }

    /// Is the number ending at `j` glued to a word (`2h`, `2-hour`, `1st`)?
    fn glued(&self, j: usize) -> bool {
        match self.char_at(j) {
            Some(c) if c.is_alphabetic() => self.unit(j).is_none(),
            Some('-') => self.char_at(j + 1).is_some_and(char::is_alphabetic),
            _ => false,
        }
    }

    fn unit(&self, i: usize) -> Option<(&'static str, usize)> {
        let rest = self.rest(i);
        for (spelling, canonical) in UNITS {
            let n = spelling.chars().count();
            let candidate: String = rest.chars().take(n).collect();
            if candidate.chars().count() == n && candidate.to_lowercase() == *spelling {
                let end = i + n;
                if self.char_at(end).is_some_and(char::is_alphanumeric) {
                    continue;
                }
                return Some((canonical, end));
            }
        }
        None
    }

    fn percent(&self, i: usize) -> (bool, usize) {
        if self.char_at(i) == Some('%') {
            (true, i + 1)
        } else {
            (false, i)
        }
    }

    fn comparator(&self, i: usize) -> Option<(&'static str, usize)> {
        let mut i = i;
        while i > 0 && self.char_at(i - 1).is_some_and(|c| c == ' ') {
            i -= 1;
        }
        let prev = |k: usize| k.checked_sub(1).and_then(|p| self.char_at(p));
        match (prev(i), i.checked_sub(2).and_then(|p| self.char_at(p))) {
            (Some('='), Some('<')) => Some(("≤", i - 2)),
            (Some('='), Some('>')) => Some(("≥", i - 2)),
            (Some(c @ ('<' | '>' | '≤' | '≥')), _) => Some((
                match c {
                    '<' => "<",
                    '>' => ">",
                    '≤' => "≤",
                    _ => "≥",
                },
                i - 1,
            )),
            _ => None,
        }
    }

    /// Range connector after a first number: a dash variant or ` to `.
    fn connector(&self, i: usize) -> Option<usize> {
        let k = self.skip_ws(i);
        let rest = self.rest(k);
        for dash in DASHES {
            if rest.starts_with(dash) {
                return Some(self.skip_ws(k + dash.chars().count()));
            }
        }
        if k > i && rest.starts_with("to") && self.char_at(k + 2).is_some_and(char::is_whitespace) {
            return Some(self.skip_ws(k + 2));
        }
        None
    }

    fn token_at(&self, i: usize) -> Result<(NumericToken, usize), usize> {
        let (first, j) = self.number(i).ok_or(i + 1)?;
        if self.glued(j) {
            return Err(j);
        }
        let (pct1, after_first) = self.percent(j);

        let mut second = None;
        if let Some(k) = self.connector(after_first) {
            if let Some((num, j2)) = self.number(k) {
                if !self.glued(j2) {
                    second = Some((num, j2));
                }
            }
        }

        let (end_num, kind, body) = match second {
            Some((b, j2)) => {
                let (pct2, end) = self.percent(j2);
                let pct = if pct1 || pct2 { "%" } else { "" };
                (end, TokenKind::Range, format!("{first}-{b}{pct}"))
            }
            None if pct1 => (after_first, TokenKind::Percent, format!("{first}%")),
            None => (j, TokenKind::Value, first),
        };

        let (mut end, mut normalized) = (end_num, body);
        if kind != TokenKind::Percent && !normalized.ends_with('%') {
            let u = self.skip_ws(end_num);
            if let Some((canonical, unit_end)) = self.unit(u) {
                normalized = format!("{normalized} {canonical}");
                end = unit_end;
            }
        }

        let mut start = i;
        if let Some((cmp, cmp_start)) = self.comparator(i) {
            normalized = format!("{cmp}{normalized}");
            start = cmp_start;
        }

        let raw = self.text[self.byte_at(start)..self.byte_at(end)].to_string();
        Ok((
            NumericToken {
                raw,
                normalized,
                kind,
            },
            end,
        ))
    }
}

/// Extract numeric tokens left to right, longest match, non-overlapping.
pub fn extract_numeric_tokens(text: &str) -> Vec<NumericToken> {
    scan(text).0
}

/// Numerals glued to a word, such as `2-hour` or `75-g`, lowercased.
///
/// These are not threshold tokens, but a changed digit in one still changes
/// the clinical meaning, so the validator matches them alongside the tokens.
pub fn extract_numeric_qualifiers(text: &str) -> Vec<String> {
    scan(text).1
}

fn scan(text: &str) -> (Vec<NumericToken>, Vec<String>) {
    let sc = Scanner::new(text);
    let mut out = Vec::new();
    let mut qualifiers = Vec::new();
    let mut i = 0;
    while let Some(c) = sc.char_at(i) {
        let starts_number = c.is_ascii_digit()
            && !i
                .checked_sub(1)
                .and_then(|p| sc.char_at(p))
                .is_some_and(|p| p.is_alphanumeric() || p == '.');
        if !starts_number {
            i += 1;
            continue;
        }
        match sc.token_at(i) {
            Ok((tok, end)) => {
                out.push(tok);
                i = end;
            }
            Err(mut skip) => {
                // skip the rest of the glued word
                while sc
                    .char_at(skip)
                    .is_some_and(|c| c.is_alphanumeric() || c == '-' || c == '.')
                {
                    skip += 1;
                }
                let word = text[sc.byte_at(i)..sc.byte_at(skip)].trim_end_matches(['.', '-']);
                if !word.is_empty() {
                    qualifiers.push(word.to_lowercase());
                }
                i = skip.max(i + 1);
            }
        }
    }
    (out, qualifiers)
}

/// Normalized form of a single numeric expression, if it is exactly one token.
pub fn normalize_numeric(text: &str) -> Option<String> {
    match extract_numeric_tokens(text).as_slice() {
        [only] => Some(only.normalized.clone()),
        _ => None,
    }
}

/// Rewrite every numeric token in `text` to its normalized form.
pub fn normalize_display(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    for tok in extract_numeric_tokens(text) {
        if let Some(pos) = rest.find(&tok.raw) {
            out.push_str(&rest[..pos]);
            out.push_str(&tok.normalized);
            rest = &rest[pos + tok.raw.len()..];
        }
    }
    out.push_str(rest);
    out
}
