//! In-memory data model for structurally heterogeneous tabular datasets.
//!
//! A [`Dataset`] is a named [`Schema`] plus records whose cells are raw
//! strings. Cells carry set semantics: members are separated by the reserved
//! delimiter `;` and the literal `null` (any case) stands for the empty set.
//! Raw cell text is never rewritten on load; trimming only happens when the
//! value set is read through [`value_set`] or [`Dataset::field_value_set`].

use std::borrow::Borrow;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reserved delimiter separating members of a multi-valued cell.
pub const VALUE_DELIMITER: char = ';';

/// Reserved cell text denoting the empty value set.
pub const NULL_CELL: &str = "null";

/// Name of a field. Comparisons are exact and case-sensitive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldId(String);

impl FieldId {
    pub fn new(name: impl Into<String>) -> Self {
        FieldId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for FieldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for FieldId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for FieldId {
    fn from(s: &str) -> Self {
        FieldId(s.to_string())
    }
}

impl From<String> for FieldId {
    fn from(s: String) -> Self {
        FieldId(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub dataset_name: String,
    fields: Vec<FieldId>,
}

impl Schema {
    /// Builds a schema, rejecting empty field lists, empty names and duplicates.
    pub fn new(dataset_name: impl Into<String>, fields: Vec<FieldId>) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::Validation("schema must contain at least one field".into()));
        }
        let mut seen = HashSet::new();
        for f in &fields {
            if f.as_str().is_empty() {
                return Err(Error::Validation("field names must be non-empty".into()));
            }
            if !seen.insert(f.as_str()) {
                return Err(Error::Validation(format!("duplicate field `{f}` in schema")));
            }
        }
        Ok(Schema {
            dataset_name: dataset_name.into(),
            fields,
        })
    }

    pub fn fields(&self) -> &[FieldId] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn index_of(&self, field: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.as_str() == field)
    }

    /// Like [`Schema::index_of`] but reports a lookup error.
    pub fn resolve(&self, field: &str) -> Result<usize> {
        self.index_of(field).ok_or_else(|| {
            Error::Lookup(format!("field `{field}` not in schema of `{}`", self.dataset_name))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub values: Vec<String>,
}

impl Record {
    pub fn new(id: impl Into<String>, values: Vec<String>) -> Self {
        Record {
            id: id.into(),
            values,
        }
    }
}

/// True when the raw cell denotes the empty set.
pub fn is_null_cell(cell: &str) -> bool {
    cell.trim().eq_ignore_ascii_case(NULL_CELL)
}

/// Iterates the members of a raw cell without allocating.
///
/// Members are trimmed; empty members and `null` cells yield nothing. A member
/// spelled `null` inside a multi-valued cell is dropped as well, so the output
/// never contains the empty string or `null`.
pub fn value_members(cell: &str) -> impl Iterator<Item = &str> {
    let null = is_null_cell(cell);
    cell.split(VALUE_DELIMITER)
        .map(str::trim)
        .filter(move |m| !null && !m.is_empty() && !m.eq_ignore_ascii_case(NULL_CELL))
}

/// The value set of a raw cell.
pub fn value_set(cell: &str) -> BTreeSet<String> {
    value_members(cell).map(str::to_string).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: Schema,
    pub records: Vec<Record>,
}

impl Dataset {
    pub fn new(schema: Schema, records: Vec<Record>) -> Self {
        Dataset { schema, records }
    }

    /// Builds a dataset and fails on the first invariant violation.
    pub fn try_new(schema: Schema, records: Vec<Record>) -> Result<Self> {
        let ds = Dataset::new(schema, records);
        match ds.validate().into_iter().next() {
            Some(v) => Err(Error::Validation(v)),
            None => Ok(ds),
        }
    }

    pub fn name(&self) -> &str {
        &self.schema.dataset_name
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn cell<'r>(&self, record: &'r Record, field: &str) -> Result<&'r str> {
        let idx = self.schema.resolve(field)?;
        record
            .values
            .get(idx)
            .map(String::as_str)
            .ok_or_else(|| Error::Lookup(format!("record `{}` has no value for `{field}`", record.id)))
    }

    pub fn field_value_set(&self, record: &Record, field: &str) -> Result<BTreeSet<String>> {
        Ok(value_set(self.cell(record, field)?))
    }

    /// Map from record id to position.
    pub fn id_index(&self) -> HashMap<&str, usize> {
        self.records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.as_str(), i))
            .collect()
    }

    /// Human-readable descriptions of every violated invariant; empty when the
    /// dataset is well formed.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        let width = self.schema.len();
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for (row, rec) in self.records.iter().enumerate() {
            if rec.values.len() != width {
                violations.push(format!(
                    "record `{}` (row {row}) has {} values, schema has {width} fields",
                    rec.id,
                    rec.values.len()
                ));
            }
            if let Some(first) = seen.insert(rec.id.as_str(), row) {
                violations.push(format!(
                    "duplicate record id `{}` (rows {first} and {row})",
                    rec.id
                ));
            }
        }
        violations
    }

    /// True when any cell or record id contains `needle`.
    pub fn contains_text(&self, needle: &str) -> bool {
        self.records
            .iter()
            .any(|r| r.id.contains(needle) || r.values.iter().any(|v| v.contains(needle)))
    }
}

/// How a CSV file maps onto a [`Dataset`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub has_header: bool,
    /// Column holding record ids. Without one, ids are zero-based row indices.
    pub id_column: Option<String>,
    /// Keep the id column as a regular field too (property tables use
    /// `subject` both as id and as data).
    pub keep_id_column: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            delimiter: b',',
            has_header: true,
            id_column: None,
            keep_id_column: false,
        }
    }
}

impl CsvOptions {
    pub fn with_id_column(mut self, column: impl Into<String>) -> Self {
        self.id_column = Some(column.into());
        self
    }

    /// Options for property tables: `subject` is the id and stays a field.
    pub fn property_table() -> Self {
        CsvOptions {
            id_column: Some("subject".into()),
            keep_id_column: true,
            ..CsvOptions::default()
        }
    }
}

fn dataset_name_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_csv(file, &dataset_name_of(path), opts)
}

pub fn read_csv<R: Read>(reader: R, dataset_name: &str, opts: &CsvOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);

    let mut rows = rdr.records();
    let header: Vec<String> = if opts.has_header {
        match rows.next() {
            Some(row) => row?.iter().map(str::to_string).collect(),
            None => return Err(Error::parse(dataset_name, Some(1), "missing header row")),
        }
    } else {
        Vec::new()
    };

    let mut raw_rows: Vec<(usize, Vec<String>)> = Vec::new();
    for row in rows {
        let row = row?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        raw_rows.push((line, row.iter().map(str::to_string).collect()));
    }

    let header = if opts.has_header {
        header
    } else {
        let width = raw_rows.first().map(|(_, r)| r.len()).unwrap_or(0);
        (0..width).map(|i| format!("f{i}")).collect()
    };
    let width = header.len();

    let id_pos = match &opts.id_column {
        Some(col) => Some(header.iter().position(|h| h == col).ok_or_else(|| {
            Error::Lookup(format!("id column `{col}` not found in `{dataset_name}`"))
        })?),
        None => None,
    };
    let keep = |i: usize| Some(i) != id_pos || opts.keep_id_column;
    let fields: Vec<FieldId> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| keep(*i))
        .map(|(_, h)| FieldId::new(h.clone()))
        .collect();
    let schema = Schema::new(dataset_name, fields)?;

    let mut records = Vec::with_capacity(raw_rows.len());
    for (row_idx, (line, raw)) in raw_rows.into_iter().enumerate() {
        if raw.len() != width {
            return Err(Error::parse(
                dataset_name,
                Some(line),
                format!("row {row_idx} has {} columns, expected {width}", raw.len()),
            ));
        }
        let id = match id_pos {
            Some(p) => raw[p].clone(),
            None => row_idx.to_string(),
        };
        let values = raw
            .into_iter()
            .enumerate()
            .filter(|(i, _)| keep(*i))
            .map(|(_, v)| v)
            .collect();
        records.push(Record::new(id, values));
    }

    Dataset::try_new(schema, records)
}

pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>, opts: &CsvOptions) -> Result<()> {
    let file = File::create(path)?;
    write_csv(dataset, file, opts)
}

/// Writes a dataset so that [`read_csv`] with the same options reproduces it.
/// A separate id column is written first unless it is kept as a field.
pub fn write_csv<W: Write>(dataset: &Dataset, writer: W, opts: &CsvOptions) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .delimiter(opts.delimiter)
        .from_writer(writer);
    let separate_id = match &opts.id_column {
        Some(col) if !opts.keep_id_column => Some(col.as_str()),
        _ => None,
    };
    if opts.has_header {
        let mut header: Vec<&str> = Vec::with_capacity(dataset.schema.len() + 1);
        header.extend(separate_id);
        header.extend(dataset.schema.fields().iter().map(FieldId::as_str));
        wtr.write_record(&header)?;
    }
    for rec in &dataset.records {
        let mut row: Vec<&str> = Vec::with_capacity(rec.values.len() + 1);
        if separate_id.is_some() {
            row.push(&rec.id);
        }
        row.extend(rec.values.iter().map(String::as_str));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// A pair of field subsets linking schema A1 (left) to schema A2 (right).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mapping {
    pub left: BTreeSet<FieldId>,
    pub right: BTreeSet<FieldId>,
    #[serde(default)]
    pub score: f64,
}

impl Mapping {
    pub fn new<L, R>(left: L, right: R, score: f64) -> Self
    where
        L: IntoIterator,
        L::Item: Into<FieldId>,
        R: IntoIterator,
        R::Item: Into<FieldId>,
    {
        Mapping {
            left: left.into_iter().map(Into::into).collect(),
            right: right.into_iter().map(Into::into).collect(),
            score,
        }
    }

    pub fn one_to_one(left: impl Into<FieldId>, right: impl Into<FieldId>, score: f64) -> Self {
        Mapping::new([left.into()], [right.into()], score)
    }

    pub fn is_one_to_one(&self) -> bool {
        self.left.len() == 1 && self.right.len() == 1
    }

    /// Same field sets on both sides; the score is ignored.
    pub fn same_fields(&self, other: &Mapping) -> bool {
        self.left == other.left && self.right == other.right
    }

    /// The |F1||F2| induced 1:1 mappings, in sorted order.
    pub fn induced_one_to_one(&self) -> Vec<(FieldId, FieldId)> {
        self.left
            .iter()
            .flat_map(|l| self.right.iter().map(move |r| (l.clone(), r.clone())))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.left.is_empty() || self.right.is_empty() {
            return Err(Error::Validation("mapping sides must be non-empty".into()));
        }
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::Validation(format!(
                "mapping score {} outside [0,1]",
                self.score
            )));
        }
        Ok(())
    }
}

pub type MappingSet = Vec<Mapping>;

pub fn load_mappings(path: impl AsRef<Path>) -> Result<MappingSet> {
    let file = File::open(path)?;
    let q: MappingSet = serde_json::from_reader(std::io::BufReader::new(file))?;
    for m in &q {
        m.validate()?;
    }
    Ok(q)
}

pub fn save_mappings(q: &[Mapping], path: impl AsRef<Path>) -> Result<()> {
    let mut file = File::create(path)?;
    serde_json::to_writer_pretty(&mut file, q)?;
    file.write_all(b"\n")?;
    Ok(())
}

/// Known duplicate pairs (left id, right id).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    pub pairs: BTreeSet<(String, String)>,
}

impl GroundTruth {
    pub fn new(pairs: impl IntoIterator<Item = (String, String)>) -> Self {
        GroundTruth {
            pairs: pairs.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, left: &str, right: &str) -> bool {
        // BTreeSet<(String, String)> cannot be probed with borrowed tuples.
        self.pairs.contains(&(left.to_string(), right.to_string()))
    }

    /// Ids that do not resolve to a record on their side.
    pub fn validate(&self, left: &Dataset, right: &Dataset) -> Vec<String> {
        let l = left.id_index();
        let r = right.id_index();
        let mut out = Vec::new();
        for (a, b) in &self.pairs {
            if !l.contains_key(a.as_str()) {
                out.push(format!("left id `{a}` not found in `{}`", left.name()));
            }
            if !r.contains_key(b.as_str()) {
                out.push(format!("right id `{b}` not found in `{}`", right.name()));
            }
        }
        out
    }
}

/// Reads a two-column `left_id,right_id` CSV with a header row.
pub fn read_pairs<R: Read>(reader: R, source_name: &str) -> Result<Vec<(String, String)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        if row.len() < 2 {
            let line = row.position().map(|p| p.line() as usize);
            return Err(Error::parse(source_name, line, "expected at least two columns"));
        }
        out.push((row[0].to_string(), row[1].to_string()));
    }
    Ok(out)
}

pub fn write_pairs<'a, W, I>(writer: W, header: &[&str], pairs: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(header)?;
    for (a, b) in pairs {
        wtr.write_record([a, b])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<GroundTruth> {
    let path = path.as_ref();
    let file = File::open(path)?;
    Ok(GroundTruth::new(read_pairs(file, &path.display().to_string())?))
}

pub fn save_ground_truth(truth: &GroundTruth, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    write_pairs(
        file,
        &["left_id", "right_id"],
        truth.pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())),
    )
}
