//! Fixed-column MPS with 32-character name fields.
//!
//! Data lines place fields at fixed offsets: a two-character code at column
//! 2, the first name at column 5, the second name 2 columns after the first
//! field's end, and a right-aligned 12-character number after that.
//! Binaries sit between integer markers and carry `BV` bounds; continuous
//! variables carry an `UP` bound with the implicit lower bound 0.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::{LinearConstraint, MilpError, MilpInstance, Sense, VarKind};

pub const NAME_WIDTH: usize = 32;
const NUM_WIDTH: usize = 12;
const OBJ_ROW: &str = "obj";

const F1: usize = 4;
const F2: usize = F1 + NAME_WIDTH + 2;
const F3: usize = F2 + NAME_WIDTH + 2;

fn number(v: f64) -> String {
    let s = if v.fract() == 0.0 && v.abs() < 1e15 { format!("{}", v as i64) } else { format!("{v}") };
    assert!(s.len() <= NUM_WIDTH, "number {s} exceeds the MPS field width");
    s
}

fn name(n: &str) -> &str {
    assert!(n.len() <= NAME_WIDTH && !n.contains(char::is_whitespace), "name `{n}` does not fit an MPS field");
    n
}

fn data_line(out: &mut String, code: &str, first: &str, second: &str, value: Option<&str>) {
    let mut line = format!(" {code:<2} {:<w$}  {:<w$}", name(first), name(second), w = NAME_WIDTH);
    if let Some(v) = value {
        let _ = write!(line, "  {v:>NUM_WIDTH$}");
    }
    out.push_str(line.trim_end());
    out.push('\n');
}

/// MPS text of `instance`; identical instances give identical bytes.
pub fn write_model(instance: &MilpInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME          {}", instance.name);
    out.push_str("OBJSENSE\n    MAX\n");
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {OBJ_ROW}");
    for c in &instance.constraints {
        let _ = writeln!(out, " {}  {}", c.sense.letter(), name(&c.name));
    }

    let mut entries: BTreeMap<&str, Vec<(&str, f64)>> = instance.variables.keys().map(|v| (v.as_str(), Vec::new())).collect();
    for (v, c) in &instance.objective {
        entries.get_mut(v.as_str()).expect("declared").push((OBJ_ROW, *c));
    }
    for row in &instance.constraints {
        for (v, c) in &row.terms {
            entries.get_mut(v.as_str()).expect("declared").push((row.name.as_str(), *c));
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut markers = 0;
    for (var, kind) in &instance.variables {
        let binary = *kind == VarKind::Binary;
        if binary != in_int {
            let tag = if binary { "'INTORG'" } else { "'INTEND'" };
            data_line(&mut out, "", &format!("MARKER{markers}"), "'MARKER'", Some(tag));
            markers += 1;
            in_int = binary;
        }
        let list = &entries[var.as_str()];
        if list.is_empty() {
            data_line(&mut out, "", var, OBJ_ROW, Some("0"));
        }
        // objective first, then rows by name
        let mut sorted = list.clone();
        sorted.sort_by(|a, b| (a.0 != OBJ_ROW, a.0).cmp(&(b.0 != OBJ_ROW, b.0)));
        for (row, c) in sorted {
            data_line(&mut out, "", var, row, Some(&number(c)));
        }
    }
    if in_int {
        data_line(&mut out, "", &format!("MARKER{markers}"), "'MARKER'", Some("'INTEND'"));
    }

    out.push_str("RHS\n");
    for c in instance.constraints.iter().filter(|c| c.rhs != 0.0) {
        data_line(&mut out, "", "RHS", &c.name, Some(&number(c.rhs)));
    }
    out.push_str("BOUNDS\n");
    for (var, kind) in &instance.variables {
        match kind {
            VarKind::Binary => data_line(&mut out, "BV", "BND", var, None),
            VarKind::Continuous { upper } => data_line(&mut out, "UP", "BND", var, Some(&number(*upper))),
        }
    }
    out.push_str("ENDATA\n");
    out
}

struct Reader<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

/// Data line split at the fixed field offsets.
struct Fields<'a> {
    code: &'a str,
    first: &'a str,
    second: &'a str,
    value: Option<&'a str>,
}

impl<'a> Reader<'a> {
    fn err<T>(line: usize, message: impl Into<String>) -> Result<T, MilpError> {
        Err(MilpError::Mps { line: line + 1, message: message.into() })
    }

    fn header(&mut self, expected: &str) -> Result<(), MilpError> {
        match self.lines.next() {
            Some((_, l)) if l == expected => Ok(()),
            Some((i, l)) => Self::err(i, format!("expected section `{expected}`, found `{l}`")),
            None => Self::err(usize::MAX - 1, format!("missing section `{expected}`")),
        }
    }

    /// Next data line of the current section, or `None` at a section header.
    fn data(&mut self) -> Option<(usize, &'a str)> {
        match self.lines.peek() {
            Some((_, l)) if l.starts_with(' ') => self.lines.next(),
            _ => None,
        }
    }

    fn fields(i: usize, line: &'a str) -> Result<Fields<'a>, MilpError> {
        let slot = |from: usize, to: usize| -> Result<&'a str, MilpError> {
            let raw = line.get(from.min(line.len())..to.min(line.len())).ok_or(MilpError::Mps {
                line: i + 1,
                message: "line is not ASCII".into(),
            })?;
            Ok(raw.trim_end())
        };
        let gap = |from: usize, to: usize| -> Result<(), MilpError> {
            if slot(from, to)?.is_empty() {
                Ok(())
            } else {
                Self::err(i, format!("expected blanks in columns {}-{}", from + 1, to))
            }
        };
        if !line.starts_with(' ') {
            return Self::err(i, "data lines start with a blank");
        }
        let code = slot(1, 3)?;
        gap(3, F1)?;
        let first = slot(F1, F1 + NAME_WIDTH)?;
        gap(F1 + NAME_WIDTH, F2)?;
        let second = slot(F2, F2 + NAME_WIDTH)?;
        let value = if line.len() > F2 + NAME_WIDTH {
            gap(F2 + NAME_WIDTH, F3)?;
            let v = slot(F3, F3 + NUM_WIDTH)?.trim_start();
            if line.len() > F3 + NUM_WIDTH {
                return Self::err(i, "text beyond the last field");
            }
            Some(v)
        } else {
            None
        };
        for (what, f) in [("first name", first), ("second name", second)] {
            if f.is_empty() || f.contains(' ') {
                return Self::err(i, format!("malformed {what} field"));
            }
        }
        Ok(Fields { code, first, second, value })
    }
}

fn parse_number(i: usize, s: Option<&str>) -> Result<f64, MilpError> {
    let s = s.ok_or(MilpError::Mps { line: i + 1, message: "missing numeric field".into() })?;
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Reader::err(i, format!("`{s}` is not a finite number")),
    }
}

/// Strict reader for the dialect produced by [`write_model`].
pub fn parse_model(text: &str) -> Result<MilpInstance, MilpError> {
    let mut rd = Reader { lines: text.lines().enumerate().peekable() };
    let name = match rd.lines.next() {
        Some((_, l)) if l.starts_with("NAME ") && !l[5..].trim().is_empty() => l[5..].trim().to_string(),
        Some((i, _)) => return Reader::err(i, "expected `NAME <model>`"),
        None => return Reader::err(0, "empty model"),
    };
    rd.header("OBJSENSE")?;
    match rd.lines.next() {
        Some((_, "    MAX")) => {}
        Some((i, _)) => return Reader::err(i, "objective sense must be `    MAX`"),
        None => return Reader::err(0, "truncated OBJSENSE section"),
    }

    rd.header("ROWS")?;
    let mut rows: BTreeMap<String, Sense> = BTreeMap::new();
    let mut objective_row = None;
    while let Some((i, line)) = rd.data() {
        let (code, row) = match line.get(1..3).zip(line.get(3..)) {
            Some((c, rest)) if rest.starts_with(' ') && !rest.trim().is_empty() && !rest.trim().contains(' ') => {
                (c.trim(), rest.trim())
            }
            _ => return Reader::err(i, "expected ` T  name`"),
        };
        let sense = match code {
            "N" => {
                if objective_row.replace(row.to_string()).is_some() {
                    return Reader::err(i, "more than one objective row");
                }
                continue;
            }
            "E" => Sense::Eq,
            "L" => Sense::Le,
            "G" => Sense::Ge,
            other => return Reader::err(i, format!("unknown row type `{other}`")),
        };
        if rows.insert(row.to_string(), sense).is_some() {
            return Reader::err(i, format!("duplicate row `{row}`"));
        }
    }
    let objective_row = objective_row.ok_or(MilpError::Mps { line: 0, message: "no objective row".into() })?;

    rd.header("COLUMNS")?;
    let mut integer_cols = BTreeSet::new();
    let mut columns: Vec<String> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut terms: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
    let mut objective = Vec::new();
    let mut in_int = false;
    while let Some((i, line)) = rd.data() {
        let f = Reader::fields(i, line)?;
        if !f.code.is_empty() {
            return Reader::err(i, "COLUMNS lines have no type code");
        }
        if f.second == "'MARKER'" {
            match (f.value, in_int) {
                (Some("'INTORG'"), false) => in_int = true,
                (Some("'INTEND'"), true) => in_int = false,
                _ => return Reader::err(i, "unbalanced integer marker"),
            }
            continue;
        }
        let col = f.first;
        if columns.last().map(String::as_str) != Some(col) {
            if !seen.insert(col.to_string()) {
                return Reader::err(i, format!("column `{col}` is not contiguous"));
            }
            columns.push(col.to_string());
            if in_int {
                integer_cols.insert(col.to_string());
            }
        }
        let v = parse_number(i, f.value)?;
        if f.second == objective_row {
            if v != 0.0 {
                objective.push((col.to_string(), v));
            }
        } else if rows.contains_key(f.second) {
            let list = terms.entry(f.second.to_string()).or_default();
            if list.iter().any(|(c, _)| c == col) {
                return Reader::err(i, format!("duplicate entry for `{col}` in `{}`", f.second));
            }
            list.push((col.to_string(), v));
        } else {
            return Reader::err(i, format!("unknown row `{}`", f.second));
        }
    }
    if in_int {
        return Reader::err(0, "integer marker left open");
    }

    rd.header("RHS")?;
    let mut rhs: BTreeMap<String, f64> = BTreeMap::new();
    while let Some((i, line)) = rd.data() {
        let f = Reader::fields(i, line)?;
        if !f.code.is_empty() || f.first != "RHS" {
            return Reader::err(i, "RHS lines use the set name `RHS`");
        }
        if !rows.contains_key(f.second) {
            return Reader::err(i, format!("unknown row `{}`", f.second));
        }
        if rhs.insert(f.second.to_string(), parse_number(i, f.value)?).is_some() {
            return Reader::err(i, format!("duplicate right-hand side for `{}`", f.second));
        }
    }

    rd.header("BOUNDS")?;
    let mut variables: BTreeMap<String, VarKind> = BTreeMap::new();
    while let Some((i, line)) = rd.data() {
        let f = Reader::fields(i, line)?;
        if f.first != "BND" {
            return Reader::err(i, "BOUNDS lines use the set name `BND`");
        }
        let col = f.second;
        if !seen.contains(col) {
            return Reader::err(i, format!("bound on unknown column `{col}`"));
        }
        let kind = match (f.code, f.value) {
            ("BV", None) if integer_cols.contains(col) => VarKind::Binary,
            ("UP", v @ Some(_)) if !integer_cols.contains(col) => {
                let upper = parse_number(i, v)?;
                if upper < 0.0 {
                    return Reader::err(i, "negative upper bound");
                }
                VarKind::Continuous { upper }
            }
            _ => return Reader::err(i, format!("unsupported bound `{}` for `{col}`", f.code)),
        };
        if variables.insert(col.to_string(), kind).is_some() {
            return Reader::err(i, format!("duplicate bound for `{col}`"));
        }
    }
    rd.header("ENDATA")?;
    if let Some((i, _)) = rd.lines.next() {
        return Reader::err(i, "text after ENDATA");
    }
    if let Some(col) = columns.iter().find(|c| !variables.contains_key(*c)) {
        return Err(MilpError::Mps { line: 0, message: format!("column `{col}` has no bound") });
    }

    let constraints = rows
        .into_iter()
        .map(|(name, sense)| {
            let mut t = terms.remove(&name).unwrap_or_default();
            t.sort_by(|a, b| a.0.cmp(&b.0));
            LinearConstraint { rhs: rhs.get(&name).copied().unwrap_or(0.0), name, terms: t, sense }
        })
        .collect();
    objective.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(MilpInstance { name, variables, constraints, objective })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::encode;
    use crate::scenario::ScenarioConfig;

    #[test]
    fn reference_roundtrips_through_the_reader() {
        let m = encode(&ScenarioConfig::reference(3)).unwrap();
        let text = write_model(&m);
        let back = parse_model(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(write_model(&back), text);
    }

    #[test]
    fn reader_rejects_malformed_input() {
        let mut c = ScenarioConfig::reference(1).with_grid(10.0, 10.0, []).unwrap();
        c.horizon_epochs = 2;
        let text = write_model(&encode(&c).unwrap());
        assert!(parse_model(&text.replace("ENDATA\n", "")).is_err());
        assert!(parse_model(&text.replace(" E  occ_r1_t1", " X  occ_r1_t1")).is_err());
        assert!(parse_model(&text.replace("'INTEND'", "'INTORG'")).is_err());
        assert!(parse_model(&format!("{text}trailing\n")).is_err());
        // shifting a field off its column is rejected
        let shifted = text.replacen("    b_r1_t1", "     b_r1_t1", 1);
        assert!(parse_model(&shifted).is_err());
    }

    #[test]
    fn numbers_are_compact() {
        assert_eq!(number(42_900.0), "42900");
        assert_eq!(number(-1.0), "-1");
        assert_eq!(number(0.5), "0.5");
    }
}
