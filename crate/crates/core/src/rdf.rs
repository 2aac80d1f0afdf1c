//! Lossless conversion between RDF triple sets and logical property tables,
//! plus a reader/writer for a small N-Triples subset.
//!
//! A property table has one row per distinct subject and one column per
//! distinct property, preceded by a `subject` column. Multi-valued cells join
//! their objects with `;` in sorted order; a subject without a value for a
//! property gets `null`.
//!
//! The reader keeps only the local name of every IRI, so two IRIs with the
//! same local name denote the same subject or property.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use indexmap::IndexSet;

use crate::error::{Error, Result};
use crate::table::{is_null_cell, value_members, Dataset, FieldId, Record, Schema, NULL_CELL, VALUE_DELIMITER};

/// Name of the column holding the subject in a property table.
pub const SUBJECT_FIELD: &str = "subject";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: String,
    pub property: String,
    pub object: String,
}

impl Triple {
    pub fn new(subject: impl Into<String>, property: impl Into<String>, object: impl Into<String>) -> Self {
        Triple {
            subject: subject.into(),
            property: property.into(),
            object: object.into(),
        }
    }
}

/// A set of triples, kept sorted so every traversal is deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TripleSet {
    triples: BTreeSet<Triple>,
}

impl TripleSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a triple; returns false if it was already present.
    pub fn insert(&mut self, triple: Triple) -> Result<bool> {
        if triple.subject.is_empty() || triple.property.is_empty() || triple.object.is_empty() {
            return Err(Error::Validation(format!("triple has an empty component: {triple:?}")));
        }
        Ok(self.triples.insert(triple))
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.triples.contains(t)
    }
}

impl FromIterator<Triple> for TripleSet {
    /// Panics on a triple with an empty component; use [`TripleSet::insert`]
    /// for untrusted input.
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        let mut ts = TripleSet::new();
        for t in iter {
            ts.insert(t).expect("triple components must be non-empty");
        }
        ts
    }
}

fn check_object(t: &Triple) -> Result<()> {
    let o = &t.object;
    if o.contains(VALUE_DELIMITER) {
        return Err(Error::Validation(format!(
            "object `{o}` contains the reserved delimiter `{VALUE_DELIMITER}`"
        )));
    }
    if is_null_cell(o) || o.trim() != o {
        return Err(Error::Validation(format!(
            "object `{o}` cannot be represented in a property table cell"
        )));
    }
    Ok(())
}

/// Serializes a triple set as a property table in two passes over the triples.
///
/// Pass one collects subjects and properties in first-encounter order and
/// builds the subject index; pass two fills the cells.
pub fn triples_to_property_table(ts: &TripleSet, dataset_name: &str) -> Result<Dataset> {
    let mut properties: IndexSet<&str> = IndexSet::new();
    let mut subjects: IndexSet<&str> = IndexSet::new();
    for t in ts.iter() {
        if t.property == SUBJECT_FIELD {
            return Err(Error::Validation(format!(
                "property name `{SUBJECT_FIELD}` is reserved (subject `{}`)",
                t.subject
            )));
        }
        check_object(t)?;
        subjects.insert(&t.subject);
        properties.insert(&t.property);
    }

    let mut fields = Vec::with_capacity(properties.len() + 1);
    fields.push(FieldId::new(SUBJECT_FIELD));
    fields.extend(properties.iter().map(|p| FieldId::new(*p)));
    let schema = Schema::new(dataset_name, fields)?;

    // cells[row][col - 1] collects objects; triples arrive sorted by
    // (subject, property, object), so each cell is filled in sorted order.
    let mut cells: Vec<Vec<Vec<&str>>> = vec![vec![Vec::new(); properties.len()]; subjects.len()];
    for t in ts.iter() {
        let row = subjects.get_index_of(t.subject.as_str()).expect("indexed in first pass");
        let col = properties.get_index_of(t.property.as_str()).expect("indexed in first pass");
        cells[row][col].push(&t.object);
    }

    let delim = VALUE_DELIMITER.to_string();
    let records = subjects
        .iter()
        .zip(cells)
        .map(|(subject, row)| {
            let mut values = Vec::with_capacity(row.len() + 1);
            values.push(subject.to_string());
            values.extend(row.into_iter().map(|objs| {
                if objs.is_empty() {
                    NULL_CELL.to_string()
                } else {
                    objs.join(&delim)
                }
            }));
            Record::new(*subject, values)
        })
        .collect();
    Dataset::try_new(schema, records)
}

/// Converts a property table back into its triple set: one triple per member
/// of every non-null property cell.
pub fn property_table_to_triples(pt: &Dataset) -> Result<TripleSet> {
    let fields = pt.schema.fields();
    if fields.first().map(FieldId::as_str) != Some(SUBJECT_FIELD) {
        return Err(Error::Validation(format!(
            "property table `{}` must start with a `{SUBJECT_FIELD}` field",
            pt.name()
        )));
    }
    let mut out = TripleSet::new();
    for rec in &pt.records {
        let subject = rec
            .values
            .first()
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::Validation(format!("record `{}` has an empty subject", rec.id)))?;
        for (field, cell) in fields.iter().zip(&rec.values).skip(1) {
            for object in value_members(cell) {
                out.insert(Triple::new(subject, field.as_str(), object))?;
            }
        }
    }
    Ok(out)
}

/// Local name of a URI: the text after the last `#` or `/`.
pub fn local_name(uri: &str) -> &str {
    match uri.rfind(['#', '/']) {
        Some(i) => &uri[i + 1..],
        None => uri,
    }
}

pub fn parse_ntriples(path: impl AsRef<Path>) -> Result<TripleSet> {
    let path = path.as_ref();
    read_ntriples(File::open(path)?, &path.display().to_string())
}

pub fn read_ntriples<R: Read>(reader: R, source_name: &str) -> Result<TripleSet> {
    let mut ts = TripleSet::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let triple = parse_line(trimmed).map_err(|msg| Error::parse(source_name, Some(line_no), msg))?;
        ts.insert(triple)
            .map_err(|e| Error::parse(source_name, Some(line_no), e.to_string()))?;
    }
    Ok(ts)
}

struct Cursor<'a> {
    rest: &'a str,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start();
    }

    fn iri(&mut self) -> Result<String, String> {
        self.skip_ws();
        let body = self
            .rest
            .strip_prefix('<')
            .ok_or_else(|| format!("expected `<` at `{}`", preview(self.rest)))?;
        let end = body.find('>').ok_or("unterminated `<`")?;
        let name = local_name(&body[..end]);
        if name.is_empty() {
            return Err(format!("empty local name in `<{}>`", &body[..end]));
        }
        self.rest = &body[end + 1..];
        Ok(name.to_string())
    }

    fn literal(&mut self) -> Result<String, String> {
        let body = self.rest.strip_prefix('"').ok_or("expected `\"`")?;
        let mut out = String::new();
        let mut chars = body.char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.rest = &body[i + 1..];
                    return Ok(out);
                }
                '\\' => match chars.next() {
                    Some((_, 'n')) => out.push('\n'),
                    Some((_, 'r')) => out.push('\r'),
                    Some((_, 't')) => out.push('\t'),
                    Some((_, '"')) => out.push('"'),
                    Some((_, '\\')) => out.push('\\'),
                    Some((_, other)) => return Err(format!("unsupported escape `\\{other}`")),
                    None => break,
                },
                c => out.push(c),
            }
        }
        Err("unterminated literal".into())
    }
}

fn preview(s: &str) -> String {
    s.chars().take(20).collect()
}

fn parse_line(line: &str) -> Result<Triple, String> {
    let mut cur = Cursor { rest: line };
    let subject = cur.iri()?;
    let property = cur.iri()?;
    cur.skip_ws();
    let object = if cur.rest.starts_with('"') {
        cur.literal()?
    } else {
        cur.iri()?
    };
    cur.skip_ws();
    if cur.rest != "." {
        return Err(format!("expected ` .` at end of triple, found `{}`", preview(cur.rest)));
    }
    if object.is_empty() {
        return Err("empty object literal".into());
    }
    Ok(Triple::new(subject, property, object))
}

fn escape_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

fn check_name(name: &str) -> Result<()> {
    if name.contains(['/', '#', '>']) || name.trim().is_empty() {
        return Err(Error::Validation(format!(
            "`{name}` cannot be written as a local name"
        )));
    }
    Ok(())
}

pub fn serialize_ntriples(ts: &TripleSet, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_ntriples(ts, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Writes one `<s> <p> "o" .` line per triple in sorted order. Subjects and
/// properties are written as names, objects as literals.
pub fn write_ntriples<W: Write>(ts: &TripleSet, mut w: W) -> Result<()> {
    for t in ts.iter() {
        check_name(&t.subject)?;
        check_name(&t.property)?;
        writeln!(w, "<{}> <{}> \"{}\" .", t.subject, t.property, escape_literal(&t.object))?;
    }
    Ok(())
}

/// Per-subject object counts, used to check the bounded-values assumption.
pub fn max_values_per_cell(ts: &TripleSet) -> usize {
    let mut counts: HashMap<(&str, &str), usize> = HashMap::new();
    for t in ts.iter() {
        *counts.entry((&t.subject, &t.property)).or_default() += 1;
    }
    counts.into_values().max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_triple_table() {
        let ts: TripleSet = [Triple::new("Mickey Beats", "hasWife", "Joan Beats")].into_iter().collect();
        let pt = triples_to_property_table(&ts, "d1").unwrap();
        let names: Vec<_> = pt.schema.fields().iter().map(FieldId::as_str).collect();
        assert_eq!(names, ["subject", "hasWife"]);
        assert_eq!(pt.records.len(), 1);
        assert_eq!(pt.records[0].values, ["Mickey Beats", "Joan Beats"]);
        assert_eq!(pt.records[0].id, "Mickey Beats");
        assert_eq!(property_table_to_triples(&pt).unwrap(), ts);
    }

    #[test]
    fn empty_graph() {
        let pt = triples_to_property_table(&TripleSet::new(), "d").unwrap();
        assert_eq!(pt.schema.len(), 1);
        assert!(pt.is_empty());
    }

    #[test]
    fn multi_valued_cell_sorted() {
        let ts: TripleSet = [Triple::new("s", "p", "B"), Triple::new("s", "p", "A")].into_iter().collect();
        let pt = triples_to_property_table(&ts, "d").unwrap();
        assert_eq!(pt.records[0].values[1], "A;B");
    }

    #[test]
    fn missing_values_are_null() {
        let ts: TripleSet = [Triple::new("a", "p", "1"), Triple::new("b", "q", "2")].into_iter().collect();
        let pt = triples_to_property_table(&ts, "d").unwrap();
        assert_eq!(pt.records[0].values, ["a", "1", "null"]);
        assert_eq!(pt.records[1].values, ["b", "null", "2"]);
    }

    #[test]
    fn all_null_cells_give_no_triples() {
        let schema = Schema::new("d", vec!["subject".into(), "p".into(), "q".into()]).unwrap();
        let pt = Dataset::new(
            schema,
            vec![Record::new("a", vec!["a".into(), "null".into(), "NULL".into()])],
        );
        assert!(property_table_to_triples(&pt).unwrap().is_empty());
    }

    #[test]
    fn reserved_property_rejected() {
        let ts: TripleSet = [Triple::new("a", "subject", "x")].into_iter().collect();
        assert!(matches!(triples_to_property_table(&ts, "d"), Err(Error::Validation(_))));
    }

    #[test]
    fn missing_subject_column_rejected() {
        let schema = Schema::new("d", vec!["name".into()]).unwrap();
        let pt = Dataset::new(schema, vec![]);
        assert!(property_table_to_triples(&pt).is_err());
    }

    #[test]
    fn parse_uri_and_literal() {
        let src = "<http://x/MickeyBeats> <http://x/hasWife> <http://x/JoanBeats> .\n\
                   <http://x/MickeyBeats> <http://x#zip> \"77019\" .\n\
                   <http://x/MickeyBeats> <http://x/hasWife> <http://x/JoanBeats> .\n";
        let ts = read_ntriples(src.as_bytes(), "t").unwrap();
        assert_eq!(ts.len(), 2);
        assert!(ts.contains(&Triple::new("MickeyBeats", "hasWife", "JoanBeats")));
        assert!(ts.contains(&Triple::new("MickeyBeats", "zip", "77019")));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let src = "<a> <b> <c> .\n\n<a> <b> \"oops\n";
        match read_ntriples(src.as_bytes(), "t").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, Some(3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn serialize_formats() {
        let mut buf = Vec::new();
        write_ntriples(&TripleSet::new(), &mut buf).unwrap();
        assert!(buf.is_empty());

        let ts: TripleSet = [Triple::new("a", "b", "say \"hi\"")].into_iter().collect();
        let mut buf = Vec::new();
        write_ntriples(&ts, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.trim_end().ends_with(" ."));
        assert_eq!(read_ntriples(text.as_bytes(), "t").unwrap(), ts);
    }

    fn name() -> impl Strategy<Value = String> {
        "[A-Za-z][A-Za-z0-9 _.-]{0,6}[A-Za-z0-9]"
    }

    fn object() -> impl Strategy<Value = String> {
        "[A-Za-z0-9\"\\\\/#<>._-]([A-Za-z0-9\"\\\\/#<> ._-]{0,5}[A-Za-z0-9])?".prop_filter("not null", |s| !s.eq_ignore_ascii_case("null"))
    }

    fn triple_set() -> impl Strategy<Value = TripleSet> {
        proptest::collection::vec((name(), name(), object()), 0..100).prop_map(|v| {
            v.into_iter()
                .filter(|(_, p, _)| p != SUBJECT_FIELD)
                .map(|(s, p, o)| Triple::new(s, p, o))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn ntriples_round_trip(ts in triple_set()) {
            let mut buf = Vec::new();
            write_ntriples(&ts, &mut buf).unwrap();
            prop_assert_eq!(read_ntriples(buf.as_slice(), "t").unwrap(), ts);
        }

        #[test]
        fn table_round_trip_b(ts in triple_set()) {
            let pt = triples_to_property_table(&ts, "d").unwrap();
            let back = triples_to_property_table(&property_table_to_triples(&pt).unwrap(), "d").unwrap();
            prop_assert_eq!(back, pt);
        }
    }
}
