//! Unsupervised schema matching: a TF-IDF duplicates generator, a Soft-TFIDF
//! similarity matrix averaged over the top duplicates, and a Hungarian 1:1
//! assignment. Also hosts permutation negatives and the matcher evaluators.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predicates::tokenize;
use crate::table::{value_members, Dataset, FieldId, GroundTruth, Mapping, MappingSet, Schema};

pub type IdPair = (String, String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuplicateCandidate {
    pub left_id: String,
    pub right_id: String,
    pub cosine: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatcherConfig {
    /// Duplicates averaged into the similarity matrix.
    pub t: usize,
    /// Jaro–Winkler threshold inside Soft-TFIDF.
    pub theta: f64,
    /// Duplicates handed to the learner.
    pub n: usize,
    pub seed: u64,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        MatcherConfig {
            t: 50,
            theta: 0.5,
            n: 50,
            seed: 0,
        }
    }
}

impl MatcherConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t == 0 || self.n == 0 {
            return Err(Error::Argument("t and n must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::Argument(format!("theta {} outside [0,1]", self.theta)));
        }
        Ok(())
    }
}

fn lower_tokens(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    tokenize(&lower).map(str::to_string).collect()
}

/// Text of a cell with its members joined by spaces; `null` gives "".
fn cell_text(cell: &str) -> String {
    value_members(cell).collect::<Vec<_>>().join(" ")
}

fn idf(n_docs: usize, df: usize) -> f64 {
    (1.0 + n_docs as f64 / df.max(1) as f64).ln()
}

// ---------------------------------------------------------------------------
// Duplicates generator

/// Sparse L2-normalized vector, sorted by term id.
type SparseVec = Vec<(u32, f64)>;

fn dot(a: &SparseVec, b: &SparseVec) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

struct RecordVectors {
    left: Vec<SparseVec>,
    right: Vec<SparseVec>,
}

fn record_bag(rec: &crate::table::Record, vocab: &mut HashMap<String, u32>) -> BTreeMap<u32, u32> {
    let mut bag = BTreeMap::new();
    for cell in &rec.values {
        for member in value_members(cell) {
            for tok in lower_tokens(member) {
                let next = vocab.len() as u32;
                let id = *vocab.entry(tok).or_insert(next);
                *bag.entry(id).or_insert(0) += 1;
            }
        }
    }
    bag
}

fn record_vectors(r1: &Dataset, r2: &Dataset) -> RecordVectors {
    let mut vocab = HashMap::new();
    let bags1: Vec<_> = r1.records.iter().map(|r| record_bag(r, &mut vocab)).collect();
    let bags2: Vec<_> = r2.records.iter().map(|r| record_bag(r, &mut vocab)).collect();
    let mut df = vec![0usize; vocab.len()];
    for bag in bags1.iter().chain(&bags2) {
        for id in bag.keys() {
            df[*id as usize] += 1;
        }
    }
    let n_docs = bags1.len() + bags2.len();
    let weigh = |bag: &BTreeMap<u32, u32>| -> SparseVec {
        let mut v: SparseVec = bag
            .iter()
            .map(|(&id, &tf)| (id, tf as f64 * idf(n_docs, df[id as usize])))
            .collect();
        let norm = v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|(_, w)| *w /= norm);
        }
        v
    };
    RecordVectors {
        left: bags1.iter().map(weigh).collect(),
        right: bags2.iter().map(weigh).collect(),
    }
}

/// Top `limit` of (cosine, left, right) by cosine descending, then ids.
fn rank(mut scored: Vec<(f64, u32, u32)>, r1: &Dataset, r2: &Dataset, limit: usize) -> Vec<DuplicateCandidate> {
    let cmp = |a: &(f64, u32, u32), b: &(f64, u32, u32)| {
        b.0.total_cmp(&a.0)
            .then_with(|| r1.records[a.1 as usize].id.cmp(&r1.records[b.1 as usize].id))
            .then_with(|| r2.records[a.2 as usize].id.cmp(&r2.records[b.2 as usize].id))
    };
    if scored.len() > limit {
        scored.select_nth_unstable_by(limit - 1, cmp);
        scored.truncate(limit);
    }
    scored.sort_by(cmp);
    scored
        .into_iter()
        .map(|(cosine, i, j)| DuplicateCandidate {
            left_id: r1.records[i as usize].id.clone(),
            right_id: r2.records[j as usize].id.clone(),
            cosine,
        })
        .collect()
}

fn check_generator_input(r1: &Dataset, r2: &Dataset, limit: usize) -> Result<()> {
    if limit == 0 {
        return Err(Error::Argument("limit must be positive".into()));
    }
    if r1.is_empty() || r2.is_empty() {
        return Err(Error::Argument("duplicates generator needs two non-empty datasets".into()));
    }
    Ok(())
}

/// Ranks record pairs by TF-IDF cosine over whole-record token bags, with IDF
/// taken over the union of both datasets. Only pairs sharing a token are
/// scored; pairs with cosine 0 never appear.
pub fn generate_duplicates(r1: &Dataset, r2: &Dataset, limit: usize) -> Result<Vec<DuplicateCandidate>> {
    check_generator_input(r1, r2, limit)?;
    let vecs = record_vectors(r1, r2);
    let mut postings: HashMap<u32, Vec<u32>> = HashMap::new();
    for (j, v) in vecs.right.iter().enumerate() {
        for (id, _) in v {
            postings.entry(*id).or_default().push(j as u32);
        }
    }
    let n_right = vecs.right.len();
    let scored: Vec<(f64, u32, u32)> = vecs
        .left
        .par_iter()
        .enumerate()
        .map_init(
            || (vec![u32::MAX; n_right], Vec::new()),
            |(stamp, cands), (i, v)| {
                cands.clear();
                for (id, _) in v {
                    for &j in postings.get(id).map_or(&[][..], Vec::as_slice) {
                        if stamp[j as usize] != i as u32 {
                            stamp[j as usize] = i as u32;
                            cands.push(j);
                        }
                    }
                }
                cands
                    .iter()
                    .filter_map(|&j| {
                        let cosine = dot(v, &vecs.right[j as usize]);
                        (cosine > 0.0).then_some((cosine, i as u32, j))
                    })
                    .collect::<Vec<_>>()
            },
        )
        .flatten_iter()
        .collect();
    Ok(rank(scored, r1, r2, limit))
}

/// All-pairs version of [`generate_duplicates`], used as an oracle.
pub fn generate_duplicates_brute_force(r1: &Dataset, r2: &Dataset, limit: usize) -> Result<Vec<DuplicateCandidate>> {
    check_generator_input(r1, r2, limit)?;
    let vecs = record_vectors(r1, r2);
    let mut out = Vec::new();
    for (i, a) in vecs.left.iter().enumerate() {
        for (j, b) in vecs.right.iter().enumerate() {
            let cosine = dot(a, b);
            if cosine > 0.0 {
                out.push((cosine, i as u32, j as u32));
            }
        }
    }
    Ok(rank(out, r1, r2, limit))
}

// ---------------------------------------------------------------------------
// Soft-TFIDF

/// Soft-TFIDF with a Jaro–Winkler secondary similarity over a fixed corpus.
#[derive(Debug, Clone, Default)]
pub struct SoftTfIdf {
    df: HashMap<String, usize>,
    n_docs: usize,
}

impl SoftTfIdf {
    pub fn new<'a>(corpus: impl IntoIterator<Item = &'a str>) -> Self {
        let mut model = SoftTfIdf::default();
        for doc in corpus {
            model.add_document(doc);
        }
        model
    }

    pub fn add_document(&mut self, doc: &str) {
        let toks: BTreeSet<String> = lower_tokens(doc).into_iter().collect();
        for t in toks {
            *self.df.entry(t).or_insert(0) += 1;
        }
        self.n_docs += 1;
    }

    fn merged(a: &SoftTfIdf, b: &SoftTfIdf) -> SoftTfIdf {
        let mut df = a.df.clone();
        for (t, c) in &b.df {
            *df.entry(t.clone()).or_insert(0) += c;
        }
        SoftTfIdf {
            df,
            n_docs: a.n_docs + b.n_docs,
        }
    }

    /// Normalized TF-IDF weights of a string's distinct tokens, sorted by token.
    pub fn weights(&self, s: &str) -> Vec<(String, f64)> {
        let mut tf: BTreeMap<String, usize> = BTreeMap::new();
        for t in lower_tokens(s) {
            *tf.entry(t).or_insert(0) += 1;
        }
        let n_docs = self.n_docs.max(1);
        let mut v: Vec<(String, f64)> = tf
            .into_iter()
            .map(|(t, c)| {
                let w = c as f64 * idf(n_docs, self.df.get(&t).copied().unwrap_or(0));
                (t, w)
            })
            .collect();
        let norm = v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|(_, w)| *w /= norm);
        }
        v
    }

    pub fn score(&self, s1: &str, s2: &str, theta: f64) -> f64 {
        let v1 = self.weights(s1);
        let v2 = self.weights(s2);
        if v1.is_empty() || v2.is_empty() {
            return 0.0;
        }
        let mut total = 0.0;
        for (w, wt1) in &v1 {
            let mut best: Option<(f64, f64)> = None;
            for (v, wt2) in &v2 {
                let sim = strsim::jaro_winkler(w, v);
                if best.is_none_or(|(b, _)| sim > b) {
                    best = Some((sim, *wt2));
                }
            }
            if let Some((sim, wt2)) = best {
                if sim >= theta {
                    total += wt1 * wt2 * sim;
                }
            }
        }
        total.clamp(0.0, 1.0)
    }
}

/// Soft-TFIDF of two strings using a corpus of just those two strings.
pub fn soft_tfidf(s1: &str, s2: &str, theta: f64) -> f64 {
    SoftTfIdf::new([s1, s2]).score(s1, s2, theta)
}

// ---------------------------------------------------------------------------
// Similarity matrix

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub rows: Vec<FieldId>,
    pub cols: Vec<FieldId>,
    pub values: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }
}

fn column_models(ds: &Dataset) -> Vec<SoftTfIdf> {
    (0..ds.schema.len())
        .map(|c| {
            let mut m = SoftTfIdf::default();
            for r in &ds.records {
                m.add_document(&cell_text(r.values.get(c).map(String::as_str).unwrap_or("")));
            }
            m
        })
        .collect()
}

/// Element-wise mean over duplicates of the Soft-TFIDF score of every field
/// pair. Each field pair uses the union of its two columns as the corpus.
pub fn build_similarity_matrix(
    duplicates: &[DuplicateCandidate],
    r1: &Dataset,
    r2: &Dataset,
    theta: f64,
) -> Result<SimilarityMatrix> {
    if duplicates.is_empty() {
        return Err(Error::Argument("similarity matrix needs at least one duplicate".into()));
    }
    let (idx1, idx2) = (r1.id_index(), r2.id_index());
    let pairs = duplicates
        .iter()
        .map(|d| {
            let a = idx1
                .get(d.left_id.as_str())
                .ok_or_else(|| Error::Lookup(format!("left id `{}` not found", d.left_id)))?;
            let b = idx2
                .get(d.right_id.as_str())
                .ok_or_else(|| Error::Lookup(format!("right id `{}` not found", d.right_id)))?;
            Ok((&r1.records[*a], &r2.records[*b]))
        })
        .collect::<Result<Vec<_>>>()?;

    let (m1, m2) = (column_models(r1), column_models(r2));
    let (w1, w2) = (r1.schema.len(), r2.schema.len());
    let models: Vec<SoftTfIdf> = (0..w1 * w2)
        .into_par_iter()
        .map(|k| SoftTfIdf::merged(&m1[k / w2], &m2[k % w2]))
        .collect();

    let per_pair: Vec<Vec<f64>> = pairs
        .par_iter()
        .map(|(a, b)| {
            let ta: Vec<String> = a.values.iter().map(|c| cell_text(c)).collect();
            let tb: Vec<String> = b.values.iter().map(|c| cell_text(c)).collect();
            (0..w1 * w2)
                .map(|k| {
                    let (i, j) = (k / w2, k % w2);
                    match (ta.get(i), tb.get(j)) {
                        (Some(x), Some(y)) => models[k].score(x, y, theta),
                        _ => 0.0,
                    }
                })
                .collect()
        })
        .collect();

    let mut sum = vec![0.0; w1 * w2];
    for m in &per_pair {
        for (s, v) in sum.iter_mut().zip(m) {
            *s += v;
        }
    }
    let n = per_pair.len() as f64;
    Ok(SimilarityMatrix {
        rows: r1.schema.fields().to_vec(),
        cols: r2.schema.fields().to_vec(),
        values: (0..w1).map(|i| (0..w2).map(|j| sum[i * w2 + j] / n).collect()).collect(),
    })
}

// ---------------------------------------------------------------------------
// Assignment

/// Minimum-cost assignment of every row to a distinct column (rows ≤ cols).
fn hungarian_min(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let m = cost.first().map_or(0, Vec::len);
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Maximum-weight 1:1 assignment on a rectangular matrix, as (row, col) pairs
/// sorted by row. Exactly min(rows, cols) pairs are returned.
pub fn max_weight_assignment(values: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let rows = values.len();
    let cols = values.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    if rows <= cols {
        let cost: Vec<Vec<f64>> = values.iter().map(|r| r.iter().map(|x| -x).collect()).collect();
        hungarian_min(&cost).into_iter().enumerate().collect()
    } else {
        let cost: Vec<Vec<f64>> = (0..cols).map(|j| (0..rows).map(|i| -values[i][j]).collect()).collect();
        let mut pairs: Vec<(usize, usize)> = hungarian_min(&cost)
            .into_iter()
            .enumerate()
            .map(|(j, i)| (i, j))
            .collect();
        pairs.sort_unstable();
        pairs
    }
}

/// 1:1 field mappings maximizing total similarity.
pub fn hungarian_assignment(matrix: &SimilarityMatrix) -> MappingSet {
    max_weight_assignment(&matrix.values)
        .into_iter()
        .map(|(i, j)| Mapping::one_to_one(matrix.rows[i].clone(), matrix.cols[j].clone(), matrix.values[i][j]))
        .collect()
}

/// Every 1:1 mapping between two schemas, score 0.
pub fn exhaustive_mappings(a1: &Schema, a2: &Schema) -> MappingSet {
    a1.fields()
        .iter()
        .flat_map(|f| a2.fields().iter().map(move |g| Mapping::one_to_one(f.clone(), g.clone(), 0.0)))
        .collect()
}

// ---------------------------------------------------------------------------
// Negatives

/// Bound on rejection-sampling rounds in [`permute_negatives`].
pub const MAX_PERMUTATION_ATTEMPTS: usize = 10_000;

/// Pairs each left id of `d` with the right id of a different pair, using a
/// uniformly drawn derangement that produces no pair already in `d`.
pub fn permute_negatives(d: &[IdPair], seed: u64) -> Result<Vec<IdPair>> {
    if d.len() < 2 {
        return Err(Error::Argument("permutation negatives need at least two pairs".into()));
    }
    let existing: HashSet<(&str, &str)> = d.iter().map(|(l, r)| (l.as_str(), r.as_str())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..d.len()).collect();
    for _ in 0..MAX_PERMUTATION_ATTEMPTS {
        perm.shuffle(&mut rng);
        let ok = perm
            .iter()
            .enumerate()
            .all(|(i, &j)| i != j && !existing.contains(&(d[i].0.as_str(), d[j].1.as_str())));
        if ok {
            return Ok(perm
                .iter()
                .enumerate()
                .map(|(i, &j)| (d[i].0.clone(), d[j].1.clone()))
                .collect());
        }
    }
    Err(Error::Argument(format!(
        "no valid derangement found in {MAX_PERMUTATION_ATTEMPTS} attempts"
    )))
}

// ---------------------------------------------------------------------------
// Evaluators

/// (d(k)/k, d(k)/|truth|) for the first k ranked pairs.
pub fn precision_recall_at_k(ranked: &[DuplicateCandidate], truth: &GroundTruth, k: usize) -> Result<(f64, f64)> {
    if truth.is_empty() {
        return Err(Error::Argument("recall needs a non-empty ground truth".into()));
    }
    if k == 0 || k > ranked.len() {
        return Err(Error::Argument(format!("k = {k} outside 1..={}", ranked.len())));
    }
    let hits = ranked[..k]
        .iter()
        .filter(|c| truth.contains(&c.left_id, &c.right_id))
        .count() as f64;
    Ok((hits / k as f64, hits / truth.len() as f64))
}

/// (|Q_m|/|Q|, |Q_m|/|Q'|) where Q_m are mappings of Q matching a truth
/// mapping on both field sets.
pub fn mapping_precision_recall(q: &[Mapping], q_truth: &[Mapping]) -> Result<(f64, f64)> {
    if q.is_empty() || q_truth.is_empty() {
        return Err(Error::Argument("mapping sets must be non-empty".into()));
    }
    let hits = q.iter().filter(|m| q_truth.iter().any(|t| t.same_fields(m))).count() as f64;
    Ok((hits / q.len() as f64, hits / q_truth.len() as f64))
}

// ---------------------------------------------------------------------------
// End-to-end

#[derive(Debug, Clone)]
pub struct MatchOutput {
    pub ranked: Vec<DuplicateCandidate>,
    pub matrix: SimilarityMatrix,
    pub mappings: MappingSet,
}

impl MatchOutput {
    /// The first `n` ranked pairs, as fed to the learner.
    pub fn top_pairs(&self, n: usize) -> Vec<IdPair> {
        self.ranked
            .iter()
            .take(n)
            .map(|d| (d.left_id.clone(), d.right_id.clone()))
            .collect()
    }
}

/// Generator over max(t, n) pairs, matrix over the top t, then assignment.
pub fn run_matcher(r1: &Dataset, r2: &Dataset, cfg: &MatcherConfig) -> Result<MatchOutput> {
    cfg.validate()?;
    let ranked = generate_duplicates(r1, r2, cfg.t.max(cfg.n))?;
    let top = &ranked[..cfg.t.min(ranked.len())];
    let matrix = build_similarity_matrix(top, r1, r2, cfg.theta)?;
    let mappings = hungarian_assignment(&matrix);
    Ok(MatchOutput {
        ranked,
        matrix,
        mappings,
    })
}

// ---------------------------------------------------------------------------
// CSV I/O

pub fn write_duplicates<W: Write>(writer: W, dups: &[DuplicateCandidate]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["left_id", "right_id", "cosine"])?;
    for d in dups {
        w.write_record([d.left_id.as_str(), d.right_id.as_str(), &format!("{}", d.cosine)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_duplicates(dups: &[DuplicateCandidate], path: impl AsRef<Path>) -> Result<()> {
    write_duplicates(File::create(path)?, dups)
}

/// Reads `left_id,right_id[,cosine]` rows; a missing cosine reads as 0.
pub fn read_duplicates<R: Read>(reader: R, source_name: &str) -> Result<Vec<DuplicateCandidate>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        if row.len() < 2 {
            return Err(Error::parse(source_name, Some(line), "expected left_id,right_id[,cosine]"));
        }
        let cosine = match row.get(2).map(str::trim) {
            None | Some("") => 0.0,
            Some(c) => c
                .parse()
                .map_err(|_| Error::parse(source_name, Some(line), format!("bad cosine `{c}`")))?,
        };
        out.push(DuplicateCandidate {
            left_id: row[0].to_string(),
            right_id: row[1].to_string(),
            cosine,
        });
    }
    Ok(out)
}

pub fn load_duplicates(path: impl AsRef<Path>) -> Result<Vec<DuplicateCandidate>> {
    let p = path.as_ref();
    read_duplicates(File::open(p)?, &p.display().to_string())
}
