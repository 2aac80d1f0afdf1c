//! Specific blocking predicates, terms and DNF blocking schemes.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::index::{intersects, IndexingFunction};
use crate::error::{Error, Result};
use crate::table::{Dataset, FieldId, Mapping, Record, Schema};

/// Separator used in namespaced blocking key values.
pub const BKV_SEPARATOR: char = '│';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// A general blocking predicate applied across a 1:1 field mapping.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SimpleSbp {
    pub gbp: IndexingFunction,
    pub left: FieldId,
    pub right: FieldId,
}

impl SimpleSbp {
    pub fn new(gbp: IndexingFunction, left: impl Into<FieldId>, right: impl Into<FieldId>) -> Self {
        SimpleSbp {
            gbp,
            left: left.into(),
            right: right.into(),
        }
    }

    pub fn field(&self, side: Side) -> &FieldId {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    /// Keys of one record for this atom.
    pub fn keys(&self, schema: &Schema, record: &Record, side: Side) -> Result<BTreeSet<String>> {
        let col = schema.resolve(self.field(side).as_str())?;
        let mut out = BTreeSet::new();
        if let Some(cell) = record.values.get(col) {
            self.gbp.index_cell_into(cell, &mut out);
        }
        Ok(out)
    }
}

impl fmt::Display for SimpleSbp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({},{})", self.gbp, self.left, self.right)
    }
}

/// A general blocking predicate applied across an n:m field mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexSbp {
    pub gbp: IndexingFunction,
    pub mapping: Mapping,
}

impl ComplexSbp {
    pub fn new(gbp: IndexingFunction, mapping: Mapping) -> Self {
        ComplexSbp { gbp, mapping }
    }

    /// The |F1||F2| simple SBPs whose disjunction this predicate denotes.
    pub fn induced(&self) -> Vec<SimpleSbp> {
        self.mapping
            .induced_one_to_one()
            .into_iter()
            .map(|(l, r)| SimpleSbp::new(self.gbp, l, r))
            .collect()
    }
}

/// A conjunction of simple SBPs, kept sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawTerm")]
pub struct Term {
    atoms: Vec<SimpleSbp>,
}

#[derive(Deserialize)]
struct RawTerm {
    atoms: Vec<SimpleSbp>,
}

impl TryFrom<RawTerm> for Term {
    type Error = Error;

    fn try_from(raw: RawTerm) -> Result<Self> {
        Term::new(raw.atoms)
    }
}

impl Term {
    pub fn new(atoms: impl IntoIterator<Item = SimpleSbp>) -> Result<Self> {
        let set: BTreeSet<SimpleSbp> = atoms.into_iter().collect();
        if set.is_empty() {
            return Err(Error::Validation("a term needs at least one atom".into()));
        }
        Ok(Term {
            atoms: set.into_iter().collect(),
        })
    }

    pub fn single(atom: SimpleSbp) -> Self {
        Term { atoms: vec![atom] }
    }

    pub fn atoms(&self) -> &[SimpleSbp] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Canonical text, e.g. `Tokens(Name,Last Name) & Soundex(City,Town)`.
    pub fn canonical(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// A positive k-DNF formula over simple SBPs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawScheme")]
pub struct BlockingScheme {
    k: usize,
    terms: Vec<Term>,
}

#[derive(Deserialize)]
struct RawScheme {
    k: usize,
    terms: Vec<Term>,
}

impl TryFrom<RawScheme> for BlockingScheme {
    type Error = Error;

    fn try_from(raw: RawScheme) -> Result<Self> {
        BlockingScheme::new(raw.k, raw.terms)
    }
}

impl BlockingScheme {
    /// Builds a scheme, dropping repeated terms while keeping first-seen order.
    pub fn new(k: usize, terms: impl IntoIterator<Item = Term>) -> Result<Self> {
        if k == 0 {
            return Err(Error::Validation("k must be positive".into()));
        }
        let mut seen = HashSet::new();
        let terms: Vec<Term> = terms.into_iter().filter(|t| seen.insert(t.clone())).collect();
        if terms.is_empty() {
            return Err(Error::Validation("a blocking scheme needs at least one term".into()));
        }
        if let Some(t) = terms.iter().find(|t| t.len() > k) {
            return Err(Error::Validation(format!(
                "term `{t}` has {} atoms, more than k = {k}",
                t.len()
            )));
        }
        Ok(BlockingScheme { k, terms })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Every distinct atom in the scheme.
    pub fn atoms(&self) -> BTreeSet<&SimpleSbp> {
        self.terms.iter().flat_map(|t| t.atoms.iter()).collect()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if text.trim().is_empty() {
            return Err(Error::Validation("scheme file is empty".into()));
        }
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for BlockingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            if t.len() > 1 {
                write!(f, "({t})")?;
            } else {
                write!(f, "{t}")?;
            }
        }
        Ok(())
    }
}

/// A conjunction of complex SBPs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexTerm {
    pub atoms: Vec<ComplexSbp>,
}

/// A positive DNF formula whose atoms may be complex SBPs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexScheme {
    pub terms: Vec<ComplexTerm>,
}

/// Default bound on the number of terms produced by normalization.
pub const DEFAULT_NORMALIZE_CAP: usize = 100_000;

/// Expands complex atoms into their disjuncts and distributes conjunction over
/// disjunction. The result covers exactly the same pairs; `k` is the largest
/// resulting term size.
pub fn normalize_to_simple_dnf(scheme: &ComplexScheme, cap: usize) -> Result<BlockingScheme> {
    let mut out: Vec<Term> = Vec::new();
    for cterm in &scheme.terms {
        if cterm.atoms.is_empty() {
            return Err(Error::Validation("a term needs at least one atom".into()));
        }
        let mut partial: Vec<Vec<SimpleSbp>> = vec![Vec::new()];
        for catom in &cterm.atoms {
            catom.mapping.validate()?;
            let disjuncts = catom.induced();
            let needed = partial.len().saturating_mul(disjuncts.len());
            if out.len().saturating_add(needed) > cap {
                return Err(Error::Capacity {
                    what: "normalized terms",
                    needed: out.len().saturating_add(needed),
                    cap,
                });
            }
            partial = partial
                .iter()
                .flat_map(|p| {
                    disjuncts.iter().map(move |d| {
                        let mut next = p.clone();
                        next.push(d.clone());
                        next
                    })
                })
                .collect();
        }
        for atoms in partial {
            out.push(Term::new(atoms)?);
        }
    }
    let k = out.iter().map(Term::len).max().unwrap_or(1);
    BlockingScheme::new(k, out)
}

/// Column index of one atom on both sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundAtom {
    pub gbp: IndexingFunction,
    pub left_col: usize,
    pub right_col: usize,
}

impl BoundAtom {
    pub fn col(&self, side: Side) -> usize {
        match side {
            Side::Left => self.left_col,
            Side::Right => self.right_col,
        }
    }

    pub fn keys(&self, record: &Record, side: Side) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        if let Some(cell) = record.values.get(self.col(side)) {
            self.gbp.index_cell_into(cell, &mut out);
        }
        out
    }

    pub fn eval(&self, r1: &Record, r2: &Record) -> bool {
        let k1 = self.keys(r1, Side::Left);
        !k1.is_empty() && intersects(&k1, &self.keys(r2, Side::Right))
    }
}

/// A scheme whose field names have been resolved against two schemas.
#[derive(Debug, Clone)]
pub struct BoundScheme {
    scheme: BlockingScheme,
    terms: Vec<Vec<BoundAtom>>,
}

impl BoundScheme {
    pub fn bind(scheme: &BlockingScheme, left: &Schema, right: &Schema) -> Result<Self> {
        let terms = scheme
            .terms()
            .iter()
            .map(|t| {
                t.atoms()
                    .iter()
                    .map(|a| {
                        Ok(BoundAtom {
                            gbp: a.gbp,
                            left_col: left.resolve(a.left.as_str())?,
                            right_col: right.resolve(a.right.as_str())?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BoundScheme {
            scheme: scheme.clone(),
            terms,
        })
    }

    pub fn scheme(&self) -> &BlockingScheme {
        &self.scheme
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn term_eval(&self, term_idx: usize, r1: &Record, r2: &Record) -> bool {
        self.terms[term_idx].iter().all(|a| a.eval(r1, r2))
    }

    /// OR over terms, AND over atoms.
    pub fn eval(&self, r1: &Record, r2: &Record) -> bool {
        (0..self.terms.len()).any(|t| self.term_eval(t, r1, r2))
    }

    /// Namespaced blocking key values of `record` under term `term_idx`.
    ///
    /// Single atoms give `t{idx}│key`; conjunctions give the cross product of
    /// the atoms' key sets joined with `│`, in canonical atom order.
    pub fn bkv_set(&self, term_idx: usize, record: &Record, side: Side) -> BTreeSet<String> {
        let mut acc: Vec<String> = vec![format!("t{term_idx}")];
        for atom in &self.terms[term_idx] {
            let keys = atom.keys(record, side);
            if keys.is_empty() {
                return BTreeSet::new();
            }
            acc = acc
                .iter()
                .flat_map(|p| keys.iter().map(move |k| format!("{p}{BKV_SEPARATOR}{k}")))
                .collect();
        }
        acc.into_iter().collect()
    }
}

/// Rejects datasets whose text contains the key separator.
pub fn check_separator_free(dataset: &Dataset) -> Result<()> {
    let sep = BKV_SEPARATOR.to_string();
    if dataset.contains_text(&sep)
        || dataset.schema.fields().iter().any(|f| f.as_str().contains(BKV_SEPARATOR))
    {
        return Err(Error::Validation(format!(
            "dataset `{}` contains the reserved separator `{BKV_SEPARATOR}`",
            dataset.name()
        )));
    }
    Ok(())
}

pub fn simple_sbp_eval(
    sbp: &SimpleSbp,
    left: &Schema,
    r1: &Record,
    right: &Schema,
    r2: &Record,
) -> Result<bool> {
    let k1 = sbp.keys(left, r1, Side::Left)?;
    let k2 = sbp.keys(right, r2, Side::Right)?;
    Ok(intersects(&k1, &k2))
}

pub fn complex_sbp_eval(
    csbp: &ComplexSbp,
    left: &Schema,
    r1: &Record,
    right: &Schema,
    r2: &Record,
) -> Result<bool> {
    let mut any = false;
    for sbp in csbp.induced() {
        any |= simple_sbp_eval(&sbp, left, r1, right, r2)?;
    }
    Ok(any)
}

pub fn scheme_eval(
    scheme: &BlockingScheme,
    left: &Schema,
    r1: &Record,
    right: &Schema,
    r2: &Record,
) -> Result<bool> {
    Ok(BoundScheme::bind(scheme, left, right)?.eval(r1, r2))
}

pub fn bkv_set(
    scheme: &BlockingScheme,
    term_idx: usize,
    schema: &Schema,
    record: &Record,
    side: Side,
) -> Result<BTreeSet<String>> {
    if term_idx >= scheme.terms().len() {
        return Err(Error::Argument(format!("no term with index {term_idx}")));
    }
    let mut acc: Vec<String> = vec![format!("t{term_idx}")];
    for atom in scheme.terms()[term_idx].atoms() {
        let keys = atom.keys(schema, record, side)?;
        acc = acc
            .iter()
            .flat_map(|p| keys.iter().map(move |k| format!("{p}{BKV_SEPARATOR}{k}")))
            .collect();
    }
    Ok(acc.into_iter().collect())
}
