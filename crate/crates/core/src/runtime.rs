//! Executes a blocking scheme through a BKV index, enumerates the candidate
//! set Γ and computes RR, PC, PQ and f-score.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predicates::{check_separator_free, BlockingScheme, BoundScheme, Side};
use crate::table::{read_pairs, write_pairs, Dataset, GroundTruth};

const SHARD: usize = 2048;

/// Record positions sharing one BKV.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Block {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

impl Block {
    pub fn records(&self) -> usize {
        self.left.len() + self.right.len()
    }

    pub fn pairs(&self) -> usize {
        self.left.len() * self.right.len()
    }
}

/// Per-term map from namespaced BKV to the records indexed under it.
#[derive(Debug, Clone)]
pub struct BlockIndex {
    terms: Vec<HashMap<String, Block>>,
    left_ids: Vec<String>,
    right_ids: Vec<String>,
}

type Shard = Vec<HashMap<String, Vec<usize>>>;

fn index_side(bound: &BoundScheme, ds: &Dataset, side: Side) -> Shard {
    let n_terms = bound.term_count();
    let shards: Vec<Shard> = ds
        .records
        .par_chunks(SHARD)
        .enumerate()
        .map(|(c, chunk)| {
            let mut maps: Shard = vec![HashMap::new(); n_terms];
            for (off, rec) in chunk.iter().enumerate() {
                let pos = c * SHARD + off;
                for (t, map) in maps.iter_mut().enumerate() {
                    for key in bound.bkv_set(t, rec, side) {
                        map.entry(key).or_default().push(pos);
                    }
                }
            }
            maps
        })
        .collect();
    let mut merged: Shard = vec![HashMap::new(); n_terms];
    for shard in shards {
        for (t, map) in shard.into_iter().enumerate() {
            for (key, mut recs) in map {
                merged[t].entry(key).or_default().append(&mut recs);
            }
        }
    }
    merged
}

/// Indexes both datasets under every term of `scheme`.
pub fn build_blocks(scheme: &BlockingScheme, r1: &Dataset, r2: &Dataset) -> Result<BlockIndex> {
    check_separator_free(r1)?;
    check_separator_free(r2)?;
    let bound = BoundScheme::bind(scheme, &r1.schema, &r2.schema)?;
    let (left, right) = rayon::join(
        || index_side(&bound, r1, Side::Left),
        || index_side(&bound, r2, Side::Right),
    );
    let terms = left
        .into_iter()
        .zip(right)
        .map(|(l, r)| {
            let mut map: HashMap<String, Block> = l
                .into_iter()
                .map(|(k, left)| (k, Block { left, right: Vec::new() }))
                .collect();
            for (k, right) in r {
                map.entry(k).or_default().right = right;
            }
            map
        })
        .collect();
    Ok(BlockIndex {
        terms,
        left_ids: r1.records.iter().map(|r| r.id.clone()).collect(),
        right_ids: r2.records.iter().map(|r| r.id.clone()).collect(),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockStats {
    pub terms: usize,
    pub blocks: usize,
    /// Blocks with records on both sides.
    pub productive_blocks: usize,
    pub max_block_records: usize,
    pub max_block_pairs: usize,
    pub skipped_blocks: usize,
}

impl BlockIndex {
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn block(&self, term_idx: usize, bkv: &str) -> Option<&Block> {
        self.terms.get(term_idx)?.get(bkv)
    }

    pub fn blocks(&self, term_idx: usize) -> impl Iterator<Item = (&str, &Block)> {
        self.terms[term_idx].iter().map(|(k, b)| (k.as_str(), b))
    }

    pub fn left_id(&self, pos: usize) -> &str {
        &self.left_ids[pos]
    }

    pub fn right_id(&self, pos: usize) -> &str {
        &self.right_ids[pos]
    }

    /// Statistics, counting blocks above `cap` records as skipped.
    pub fn stats(&self, cap: Option<usize>) -> BlockStats {
        let mut s = BlockStats {
            terms: self.terms.len(),
            ..BlockStats::default()
        };
        for b in self.terms.iter().flat_map(|m| m.values()) {
            s.blocks += 1;
            if cap.is_some_and(|c| b.records() > c) {
                s.skipped_blocks += 1;
                continue;
            }
            if b.pairs() > 0 {
                s.productive_blocks += 1;
            }
            s.max_block_records = s.max_block_records.max(b.records());
            s.max_block_pairs = s.max_block_pairs.max(b.pairs());
        }
        s
    }
}

/// Deduplicated candidate pairs (left id, right id), ordered.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CandidateSet {
    pub pairs: BTreeSet<(String, String)>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, left: &str, right: &str) -> bool {
        self.pairs.contains(&(left.to_string(), right.to_string()))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_pairs(
            writer,
            &["left_id", "right_id"],
            self.pairs.iter().map(|(l, r)| (l.as_str(), r.as_str())),
        )
    }

    pub fn read_csv<R: Read>(reader: R, source_name: &str) -> Result<Self> {
        Ok(CandidateSet {
            pairs: read_pairs(reader, source_name)?.into_iter().collect(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::read_csv(File::open(path)?, &path.display().to_string())
    }
}

impl FromIterator<(String, String)> for CandidateSet {
    fn from_iter<I: IntoIterator<Item = (String, String)>>(iter: I) -> Self {
        CandidateSet {
            pairs: iter.into_iter().collect(),
        }
    }
}

/// Union over all blocks of left × right.
pub fn candidate_set(index: &BlockIndex) -> CandidateSet {
    candidate_set_capped(index, None)
}

/// As [`candidate_set`], ignoring blocks with more than `cap` records.
pub fn candidate_set_capped(index: &BlockIndex, cap: Option<usize>) -> CandidateSet {
    let blocks: Vec<&Block> = index
        .terms
        .iter()
        .flat_map(|m| m.values())
        .filter(|b| b.pairs() > 0 && cap.is_none_or(|c| b.records() <= c))
        .collect();
    let positions: HashSet<(usize, usize)> = blocks
        .par_iter()
        .fold(HashSet::new, |mut acc, b| {
            for &l in &b.left {
                for &r in &b.right {
                    acc.insert((l, r));
                }
            }
            acc
        })
        .reduce(HashSet::new, |a, b| {
            let (mut big, small) = if a.len() < b.len() { (b, a) } else { (a, b) };
            big.extend(small);
            big
        });
    positions
        .into_iter()
        .map(|(l, r)| (index.left_ids[l].clone(), index.right_ids[r].clone()))
        .collect()
}

/// Γ by evaluating the scheme on every pair of R1 × R2.
pub fn brute_force_candidates(scheme: &BlockingScheme, r1: &Dataset, r2: &Dataset) -> Result<CandidateSet> {
    let bound = BoundScheme::bind(scheme, &r1.schema, &r2.schema)?;
    Ok(r1
        .records
        .par_iter()
        .flat_map_iter(|a| {
            let bound = &bound;
            r2.records
                .iter()
                .filter(move |b| bound.eval(a, b))
                .map(move |b| (a.id.clone(), b.id.clone()))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rr: f64,
    pub pc: f64,
    pub pq: f64,
    pub fscore: f64,
    pub gamma: usize,
    pub omega: usize,
    pub omega_m: usize,
    pub gamma_m: usize,
    /// |pq − c·pc/(1−rr)| with c = |Ω_m|/|Ω|; absent when rr = 1.
    pub pq_identity_residual: Option<f64>,
}

impl EvalReport {
    pub fn pq_identity_holds(&self, tol: f64) -> bool {
        self.pq_identity_residual.is_none_or(|r| r < tol)
    }
}

pub fn evaluate(gamma: &CandidateSet, truth: &GroundTruth, n_left: usize, n_right: usize) -> Result<EvalReport> {
    if truth.is_empty() {
        return Err(Error::Argument("evaluation needs a non-empty ground truth".into()));
    }
    let omega = n_left
        .checked_mul(n_right)
        .filter(|&o| o > 0)
        .ok_or_else(|| Error::Argument(format!("invalid dataset sizes {n_left} x {n_right}")))?;
    if gamma.len() > omega || truth.len() > omega {
        return Err(Error::Argument("pair sets larger than the cross product".into()));
    }
    let gamma_m = truth.pairs.iter().filter(|p| gamma.pairs.contains(*p)).count();
    let rr = 1.0 - gamma.len() as f64 / omega as f64;
    let pc = gamma_m as f64 / truth.len() as f64;
    let pq = if gamma.is_empty() {
        0.0
    } else {
        gamma_m as f64 / gamma.len() as f64
    };
    let fscore = if rr + pc == 0.0 { 0.0 } else { 2.0 * rr * pc / (rr + pc) };
    let c = truth.len() as f64 / omega as f64;
    let pq_identity_residual = (rr < 1.0).then(|| (pq - c * pc / (1.0 - rr)).abs());
    Ok(EvalReport {
        rr,
        pc,
        pq,
        fscore,
        gamma: gamma.len(),
        omega,
        omega_m: truth.len(),
        gamma_m,
        pq_identity_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predicates::{IndexingFunction, SimpleSbp, Term};
    use crate::table::{Record, Schema};
    use proptest::prelude::*;

    fn ds(name: &str, prefix: &str, rows: &[&str]) -> Dataset {
        Dataset::new(
            Schema::new(name, vec!["name".into()]).unwrap(),
            rows.iter()
                .enumerate()
                .map(|(i, v)| Record::new(format!("{prefix}{i}"), vec![v.to_string()]))
                .collect(),
        )
    }

    fn tokens_scheme() -> BlockingScheme {
        BlockingScheme::new(1, [Term::single(SimpleSbp::new(IndexingFunction::Tokens, "name", "name"))]).unwrap()
    }

    fn ids(v: &[(&str, &str)]) -> BTreeSet<(String, String)> {
        v.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn indexes_tokens_under_namespaced_keys() {
        let a = ds("A", "a", &["Mickey Beats"]);
        let b = ds("B", "b", &[]);
        let idx = build_blocks(&tokens_scheme(), &a, &b).unwrap();
        assert_eq!(idx.block(0, "t0│mickey").unwrap().left, vec![0]);
        assert_eq!(idx.block(0, "t0│beats").unwrap().left, vec![0]);
        assert!(candidate_set(&idx).is_empty());
        let stats = idx.stats(None);
        assert_eq!((stats.blocks, stats.productive_blocks), (2, 0));
    }

    #[test]
    fn shared_blocks_yield_one_pair() {
        let a = ds("A", "a", &["ann lee", "bo"]);
        let b = ds("B", "b", &["lee ann", "ann", "cy"]);
        let idx = build_blocks(&tokens_scheme(), &a, &b).unwrap();
        let g = candidate_set(&idx);
        assert_eq!(g.pairs, ids(&[("a0", "b0"), ("a0", "b1")]));
        assert_eq!(g, brute_force_candidates(&tokens_scheme(), &a, &b).unwrap());
        let stats = idx.stats(None);
        assert_eq!(stats.max_block_pairs, 2);
        assert_eq!(stats.max_block_records, 3);
        assert!(candidate_set_capped(&idx, Some(2)).contains("a0", "b0"));
        assert!(!candidate_set_capped(&idx, Some(2)).contains("a0", "b1"));
    }

    #[test]
    fn separator_in_data_is_rejected() {
        let a = ds("A", "a", &["x│y"]);
        let b = ds("B", "b", &["x"]);
        assert!(matches!(build_blocks(&tokens_scheme(), &a, &b), Err(Error::Validation(_))));
    }

    #[test]
    fn metrics() {
        let gamma: CandidateSet = (0..100).map(|i| (format!("l{i}"), format!("r{i}"))).collect();
        let truth = GroundTruth::new((0..100).map(|i| (format!("l{}", i + 5), format!("r{}", i + 5))));
        let r = evaluate(&gamma, &truth, 100, 100).unwrap();
        assert!((r.rr - 0.99).abs() < 1e-15);
        assert!((r.pc - 0.95).abs() < 1e-15);
        assert!((r.pq - 0.95).abs() < 1e-15);
        assert!((r.fscore - 2.0 * 0.99 * 0.95 / 1.94).abs() < 1e-15);
        assert!(r.pq_identity_holds(1e-12));

        let empty = evaluate(&CandidateSet::default(), &truth, 100, 100).unwrap();
        assert_eq!((empty.rr, empty.pc, empty.pq), (1.0, 0.0, 0.0));
        assert_eq!(empty.pq_identity_residual, None);
        assert!(evaluate(&gamma, &GroundTruth::default(), 10, 10).is_err());
        assert!(evaluate(&gamma, &truth, 0, 10).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let g: CandidateSet = [("b".to_string(), "1".to_string()), ("a".into(), "2".into())].into_iter().collect();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "left_id,right_id\na,2\nb,1\n");
        assert_eq!(CandidateSet::read_csv(&buf[..], "mem").unwrap(), g);
    }

    proptest! {
        #[test]
        fn adding_a_term_never_shrinks_gamma(
            left in prop::collection::vec("(ann|bo|cy|12|13)( (ann|lee|12)){0,2}", 1..15),
            right in prop::collection::vec("(ann|bo|dee|12|14)( (bo|lee|13)){0,2}", 1..15),
        ) {
            let a = ds("A", "a", &left.iter().map(String::as_str).collect::<Vec<_>>());
            let b = ds("B", "b", &right.iter().map(String::as_str).collect::<Vec<_>>());
            let small = BlockingScheme::new(1, [Term::single(SimpleSbp::new(IndexingFunction::ExactValue, "name", "name"))]).unwrap();
            let big = BlockingScheme::new(1, [
                Term::single(SimpleSbp::new(IndexingFunction::ExactValue, "name", "name")),
                Term::single(SimpleSbp::new(IndexingFunction::IntegerTokensOffByOne, "name", "name")),
            ]).unwrap();
            let g1 = candidate_set(&build_blocks(&small, &a, &b).unwrap());
            let g2 = candidate_set(&build_blocks(&big, &a, &b).unwrap());
            prop_assert!(g1.pairs.is_subset(&g2.pairs));
            prop_assert_eq!(g2, brute_force_candidates(&big, &a, &b).unwrap());
        }

        #[test]
        fn metrics_in_unit_interval(n1 in 1usize..30, n2 in 1usize..30, g in prop::collection::btree_set((0usize..30, 0usize..30), 0..60), t in prop::collection::btree_set((0usize..30, 0usize..30), 1..20)) {
            let keep = |s: BTreeSet<(usize, usize)>| s.into_iter().filter(|(a, b)| *a < n1 && *b < n2).map(|(a, b)| (a.to_string(), b.to_string())).collect::<Vec<_>>();
            let truth = GroundTruth::new(keep(t));
            prop_assume!(!truth.is_empty());
            let gamma: CandidateSet = keep(g).into_iter().collect();
            let r = evaluate(&gamma, &truth, n1, n2).unwrap();
            for m in [r.rr, r.pc, r.pq, r.fscore] {
                prop_assert!((0.0..=1.0).contains(&m));
            }
            prop_assert_eq!(r.rr == 1.0, gamma.is_empty());
        }
    }
}
