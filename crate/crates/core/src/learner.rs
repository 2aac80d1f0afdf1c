//! Learns a k-DNF blocking scheme from duplicate pairs D, permutation
//! negatives N and a mapping set Q: build the search space, score every key
//! by coverage, prune at κ and cover D greedily.

use std::collections::{BTreeSet, HashMap};

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::{permute_negatives, IdPair};
use crate::predicates::{intersects, BlockingScheme, IndexingFunction, SimpleSbp, Term};
use crate::table::{Dataset, FieldId, Mapping};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    pub kappa: f64,
    pub k: usize,
    pub term_cap: usize,
    /// Indexing functions making up G.
    pub functions: Vec<IndexingFunction>,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            kappa: 0.9,
            k: 1,
            term_cap: 200_000,
            functions: IndexingFunction::ALL.to_vec(),
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.kappa) {
            return Err(Error::Argument(format!("kappa {} outside [-1,1]", self.kappa)));
        }
        if self.k == 0 {
            return Err(Error::Argument("k must be positive".into()));
        }
        if self.functions.is_empty() {
            return Err(Error::Argument("at least one indexing function is required".into()));
        }
        Ok(())
    }
}

/// Coverage of every key in H_c over the D and N pairs.
#[derive(Debug, Clone)]
pub struct CoverageIndex {
    keys: Vec<Term>,
    dup_cover: Vec<FixedBitSet>,
    neg_cover: Vec<FixedBitSet>,
    n_dup: usize,
    n_neg: usize,
    h_size: usize,
    generated: usize,
    lookup: HashMap<Term, usize>,
}

impl CoverageIndex {
    /// Builds an index from explicit coverage sets. Indices outside
    /// `0..n_dup` / `0..n_neg` are rejected.
    pub fn from_parts(
        entries: Vec<(Term, BTreeSet<usize>, BTreeSet<usize>)>,
        n_dup: usize,
        n_neg: usize,
    ) -> Result<Self> {
        let mut keys = Vec::new();
        let mut dup_cover = Vec::new();
        let mut neg_cover = Vec::new();
        for (term, dup, neg) in entries {
            if dup.iter().any(|&i| i >= n_dup) || neg.iter().any(|&i| i >= n_neg) {
                return Err(Error::Argument(format!("coverage of `{term}` out of range")));
            }
            let mut d = FixedBitSet::with_capacity(n_dup);
            d.extend(dup);
            let mut n = FixedBitSet::with_capacity(n_neg);
            n.extend(neg);
            keys.push(term);
            dup_cover.push(d);
            neg_cover.push(n);
        }
        let h = keys.len();
        Ok(Self::assemble(keys, dup_cover, neg_cover, n_dup, n_neg, h, h))
    }

    fn assemble(
        keys: Vec<Term>,
        dup_cover: Vec<FixedBitSet>,
        neg_cover: Vec<FixedBitSet>,
        n_dup: usize,
        n_neg: usize,
        h_size: usize,
        generated: usize,
    ) -> Self {
        let lookup = keys.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        CoverageIndex {
            keys,
            dup_cover,
            neg_cover,
            n_dup,
            n_neg,
            h_size,
            generated,
            lookup,
        }
    }

    pub fn keys(&self) -> &[Term] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn n_dup(&self) -> usize {
        self.n_dup
    }

    pub fn n_neg(&self) -> usize {
        self.n_neg
    }

    /// |H|: atoms before supplementation and before the empty-coverage drop.
    pub fn h_size(&self) -> usize {
        self.h_size
    }

    /// |H_c| before keys with empty duplicate coverage were dropped.
    pub fn generated(&self) -> usize {
        self.generated
    }

    pub fn position(&self, term: &Term) -> Option<usize> {
        self.lookup.get(term).copied()
    }

    pub fn dup_cover(&self, key: usize) -> &FixedBitSet {
        &self.dup_cover[key]
    }

    pub fn neg_cover(&self, key: usize) -> &FixedBitSet {
        &self.neg_cover[key]
    }

    /// |cover_D|/|D| − |cover_N|/|N|, computed from one exact fraction.
    pub fn score(&self, key: usize) -> f64 {
        let d = self.dup_cover[key].count_ones(..) as f64;
        let n = self.neg_cover[key].count_ones(..) as f64;
        match (self.n_dup, self.n_neg) {
            (0, _) => 0.0,
            (nd, 0) => d / nd as f64,
            (nd, nn) => (d * nn as f64 - n * nd as f64) / (nd as f64 * nn as f64),
        }
    }
}

fn resolve_pairs(pairs: &[IdPair], r1: &Dataset, r2: &Dataset, what: &str) -> Result<Vec<(usize, usize)>> {
    let (i1, i2) = (r1.id_index(), r2.id_index());
    pairs
        .iter()
        .map(|(l, r)| {
            let a = i1
                .get(l.as_str())
                .ok_or_else(|| Error::Lookup(format!("{what} left id `{l}` not in `{}`", r1.name())))?;
            let b = i2
                .get(r.as_str())
                .ok_or_else(|| Error::Lookup(format!("{what} right id `{r}` not in `{}`", r2.name())))?;
            Ok((*a, *b))
        })
        .collect()
}

/// The distinct induced 1:1 mappings of Q, in first-seen order.
pub fn expand_mappings(q: &[Mapping]) -> Vec<(FieldId, FieldId)> {
    let mut seen = BTreeSet::new();
    q.iter()
        .flat_map(Mapping::induced_one_to_one)
        .filter(|p| seen.insert(p.clone()))
        .collect()
}

/// Key sets of selected records for one (function, column), shared by all
/// atoms using that column.
type KeyCache = HashMap<(IndexingFunction, usize), HashMap<usize, BTreeSet<String>>>;

fn build_key_cache(
    funcs: &[IndexingFunction],
    cols: &BTreeSet<usize>,
    records: &BTreeSet<usize>,
    ds: &Dataset,
) -> KeyCache {
    let jobs: Vec<(IndexingFunction, usize)> = funcs
        .iter()
        .flat_map(|f| cols.iter().map(move |c| (*f, *c)))
        .collect();
    jobs.into_par_iter()
        .map(|(f, c)| {
            let keys = records
                .iter()
                .map(|&r| {
                    let mut out = BTreeSet::new();
                    if let Some(cell) = ds.records[r].values.get(c) {
                        f.index_cell_into(cell, &mut out);
                    }
                    (r, out)
                })
                .collect();
            ((f, c), keys)
        })
        .collect()
}

fn k_subsets(items: &[usize], j: usize, start: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> Result<()>) -> Result<()> {
    if cur.len() == j {
        return f(cur);
    }
    let need = j - cur.len();
    for i in start..items.len() {
        if items.len() - i < need {
            break;
        }
        cur.push(items[i]);
        k_subsets(items, j, i + 1, cur, f)?;
        cur.pop();
    }
    Ok(())
}

/// Builds H = G × (induced 1:1 mappings of Q), supplements it with
/// conjunctions of up to `k` atoms that jointly cover some pair of D, and
/// records coverage over D and N. Keys covering no pair of D are dropped.
#[allow(clippy::too_many_arguments)]
pub fn build_search_space(
    functions: &[IndexingFunction],
    q: &[Mapping],
    k: usize,
    d: &[IdPair],
    n: &[IdPair],
    r1: &Dataset,
    r2: &Dataset,
    term_cap: usize,
) -> Result<CoverageIndex> {
    if d.is_empty() {
        return Err(Error::Argument("the duplicate set D is empty".into()));
    }
    if k == 0 {
        return Err(Error::Argument("k must be positive".into()));
    }
    let mappings = expand_mappings(q);
    if mappings.is_empty() {
        return Err(Error::Argument("the mapping set Q is empty".into()));
    }
    let cols: Vec<(usize, usize)> = mappings
        .iter()
        .map(|(l, r)| Ok((r1.schema.resolve(l.as_str())?, r2.schema.resolve(r.as_str())?)))
        .collect::<Result<_>>()?;
    let dpairs = resolve_pairs(d, r1, r2, "duplicate")?;
    let npairs = resolve_pairs(n, r1, r2, "negative")?;

    let atoms: Vec<(SimpleSbp, IndexingFunction, usize, usize)> = mappings
        .iter()
        .zip(&cols)
        .flat_map(|((l, r), &(lc, rc))| {
            functions
                .iter()
                .map(move |f| (SimpleSbp::new(*f, l.clone(), r.clone()), *f, lc, rc))
        })
        .collect();
    let h_size = atoms.len();
    if h_size > term_cap {
        return Err(Error::Capacity {
            what: "search space H",
            needed: h_size,
            cap: term_cap,
        });
    }

    let left_recs: BTreeSet<usize> = dpairs.iter().chain(&npairs).map(|p| p.0).collect();
    let right_recs: BTreeSet<usize> = dpairs.iter().chain(&npairs).map(|p| p.1).collect();
    let left_cols: BTreeSet<usize> = cols.iter().map(|c| c.0).collect();
    let right_cols: BTreeSet<usize> = cols.iter().map(|c| c.1).collect();
    let lcache = build_key_cache(functions, &left_cols, &left_recs, r1);
    let rcache = build_key_cache(functions, &right_cols, &right_recs, r2);

    let cover = |pairs: &[(usize, usize)], f: IndexingFunction, lc: usize, rc: usize| -> FixedBitSet {
        let lk = &lcache[&(f, lc)];
        let rk = &rcache[&(f, rc)];
        let mut bits = FixedBitSet::with_capacity(pairs.len());
        for (i, (a, b)) in pairs.iter().enumerate() {
            if intersects(&lk[a], &rk[b]) {
                bits.insert(i);
            }
        }
        bits
    };
    let atom_cover: Vec<(FixedBitSet, FixedBitSet)> = atoms
        .par_iter()
        .map(|(_, f, lc, rc)| (cover(&dpairs, *f, *lc, *rc), cover(&npairs, *f, *lc, *rc)))
        .collect();

    let mut keys: Vec<Term> = Vec::new();
    let mut dup_cover = Vec::new();
    let mut neg_cover = Vec::new();
    for ((sbp, ..), (dc, nc)) in atoms.iter().zip(&atom_cover) {
        if !dc.is_clear() {
            keys.push(Term::single(sbp.clone()));
            dup_cover.push(dc.clone());
            neg_cover.push(nc.clone());
        }
    }

    let mut generated = h_size;
    if k >= 2 {
        let budget = term_cap - h_size;
        let mut combos: BTreeSet<Vec<usize>> = BTreeSet::new();
        for p in 0..dpairs.len() {
            let covering: Vec<usize> = (0..atoms.len()).filter(|&a| atom_cover[a].0.contains(p)).collect();
            for j in 2..=k.min(covering.len()) {
                k_subsets(&covering, j, 0, &mut Vec::with_capacity(j), &mut |c| {
                    if combos.insert(c.to_vec()) && combos.len() > budget {
                        return Err(Error::Capacity {
                            what: "supplemented search space H_c",
                            needed: h_size + combos.len(),
                            cap: term_cap,
                        });
                    }
                    Ok(())
                })?;
            }
        }
        generated += combos.len();
        let combos: Vec<Vec<usize>> = combos.into_iter().collect();
        let built: Vec<(Term, FixedBitSet, FixedBitSet)> = combos
            .par_iter()
            .map(|c| {
                let mut dc = atom_cover[c[0]].0.clone();
                let mut nc = atom_cover[c[0]].1.clone();
                for &a in &c[1..] {
                    dc.intersect_with(&atom_cover[a].0);
                    nc.intersect_with(&atom_cover[a].1);
                }
                let term = Term::new(c.iter().map(|&a| atoms[a].0.clone())).expect("non-empty combination");
                (term, dc, nc)
            })
            .collect();
        for (t, dc, nc) in built {
            keys.push(t);
            dup_cover.push(dc);
            neg_cover.push(nc);
        }
    }

    Ok(CoverageIndex::assemble(
        keys,
        dup_cover,
        neg_cover,
        dpairs.len(),
        npairs.len(),
        h_size,
        generated,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredKey {
    /// Position of the key in its [`CoverageIndex`].
    pub key_idx: usize,
    pub key: Term,
    pub canonical: String,
    pub score: f64,
}

/// Keys with score ≥ κ, sorted by score descending then canonical string.
pub fn score_and_prune(index: &CoverageIndex, kappa: f64) -> Vec<ScoredKey> {
    let mut out: Vec<ScoredKey> = (0..index.len())
        .filter_map(|i| {
            let score = index.score(i);
            (score >= kappa).then(|| ScoredKey {
                key_idx: i,
                key: index.keys[i].clone(),
                canonical: index.keys[i].canonical(),
                score,
            })
        })
        .collect();
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.canonical.cmp(&b.canonical)));
    out
}

/// Chvátal's greedy weighted set cover over the union U of the survivors'
/// duplicate coverage. Each step takes the survivor maximizing
/// score × |newly covered| (ties by canonical string).
pub fn chvatal_cover(survivors: &[ScoredKey], index: &CoverageIndex) -> Result<Vec<ScoredKey>> {
    if survivors.is_empty() {
        return Err(Error::LearnerFailure(
            "no key reached the score threshold kappa".into(),
        ));
    }
    let mut uncovered = FixedBitSet::with_capacity(index.n_dup);
    for s in survivors {
        uncovered.union_with(index.dup_cover(s.key_idx));
    }
    if uncovered.is_clear() {
        return Err(Error::LearnerFailure("surviving keys cover no duplicate pair".into()));
    }
    let mut picked: Vec<ScoredKey> = Vec::new();
    let mut used = vec![false; survivors.len()];
    while !uncovered.is_clear() {
        let mut best: Option<(usize, f64)> = None;
        for (i, s) in survivors.iter().enumerate() {
            if used[i] {
                continue;
            }
            let gain = index.dup_cover(s.key_idx).intersection(&uncovered).count();
            if gain == 0 {
                continue;
            }
            let value = s.score * gain as f64;
            let better = match best {
                None => true,
                Some((b, bv)) => value > bv || (value == bv && s.canonical < survivors[b].canonical),
            };
            if better {
                best = Some((i, value));
            }
        }
        let (i, _) = best.expect("U is the union of survivor coverage");
        used[i] = true;
        uncovered.difference_with(index.dup_cover(survivors[i].key_idx));
        picked.push(survivors[i].clone());
    }
    Ok(picked)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChosenKey {
    pub term: String,
    pub score: f64,
    pub dup_covered: usize,
    pub neg_covered: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnReport {
    pub kappa: f64,
    pub k: usize,
    pub n_duplicates: usize,
    pub n_negatives: usize,
    pub n_mappings: usize,
    pub h_size: usize,
    pub hc_size: usize,
    pub kept_keys: usize,
    pub survivors: usize,
    pub universe: usize,
    pub chosen: Vec<ChosenKey>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct LearnOutcome {
    pub scheme: BlockingScheme,
    pub report: LearnReport,
}

/// Full learning run: negatives by permutation, search space, scoring,
/// pruning and greedy cover. The scheme is the disjunction of chosen keys.
pub fn learn_scheme(
    d: &[IdPair],
    q: &[Mapping],
    config: &LearnerConfig,
    r1: &Dataset,
    r2: &Dataset,
    seed: u64,
) -> Result<LearnOutcome> {
    config.validate()?;
    if d.len() < 2 {
        return Err(Error::Argument("learning needs at least two duplicate pairs".into()));
    }
    if q.is_empty() {
        return Err(Error::Argument("the mapping set Q is empty".into()));
    }
    let n = permute_negatives(d, seed)?;
    let index = build_search_space(&config.functions, q, config.k, d, &n, r1, r2, config.term_cap)?;
    let survivors = score_and_prune(&index, config.kappa);
    let chosen = chvatal_cover(&survivors, &index)?;
    let mut universe = FixedBitSet::with_capacity(index.n_dup());
    for s in &survivors {
        universe.union_with(index.dup_cover(s.key_idx));
    }
    let mut warnings = Vec::new();
    if config.k > 2 {
        warnings.push(format!(
            "k = {} grows the search space combinatorially; bounded by term_cap = {}",
            config.k, config.term_cap
        ));
    }
    let report = LearnReport {
        kappa: config.kappa,
        k: config.k,
        n_duplicates: d.len(),
        n_negatives: n.len(),
        n_mappings: expand_mappings(q).len(),
        h_size: index.h_size(),
        hc_size: index.generated(),
        kept_keys: index.len(),
        survivors: survivors.len(),
        universe: universe.count_ones(..),
        chosen: chosen
            .iter()
            .map(|s| ChosenKey {
                term: s.canonical.clone(),
                score: s.score,
                dup_covered: index.dup_cover(s.key_idx).count_ones(..),
                neg_covered: index.neg_cover(s.key_idx).count_ones(..),
            })
            .collect(),
        warnings,
    };
    let k = chosen.iter().map(|s| s.key.len()).max().unwrap_or(1).max(config.k);
    let scheme = BlockingScheme::new(k, chosen.into_iter().map(|s| s.key))?;
    Ok(LearnOutcome { scheme, report })
}
