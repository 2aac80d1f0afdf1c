use std::collections::BTreeSet;

use hetblock::learner::{build_search_space, chvatal_cover, learn_scheme, score_and_prune, LearnerConfig};
use hetblock::matcher::{generate_duplicates, generate_duplicates_brute_force, permute_negatives};
use hetblock::predicates::{
    complex_sbp_eval, normalize_to_simple_dnf, BlockingScheme, ComplexSbp, ComplexScheme, ComplexTerm,
    IndexingFunction, SimpleSbp, Term,
};
use hetblock::runtime::{brute_force_candidates, build_blocks, candidate_set};
use hetblock::synth::{generate, GenSpec};
use hetblock::table::{Dataset, FieldId, Mapping, Record, Schema};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: &[&str] = &[
    "ann", "anne", "lee", "leigh", "smith", "smyth", "oak", "oakland", "street", "st", "12", "13", "14", "2024",
    "john", "jon", "main", "maine", "null", "x", "robert", "rupert",
];

fn random_cell(rng: &mut ChaCha8Rng) -> String {
    let members = if rng.gen_bool(0.15) { 2 } else { 1 };
    (0..members)
        .map(|_| {
            let n = rng.gen_range(1..=3);
            (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
        })
        .collect::<Vec<_>>()
        .join(";")
}

fn random_dataset(rng: &mut ChaCha8Rng, name: &str, fields: &[&str], n: usize) -> Dataset {
    let schema = Schema::new(name, fields.iter().map(|f| FieldId::from(*f)).collect()).unwrap();
    let records = (0..n)
        .map(|i| Record::new(format!("{name}{i}"), fields.iter().map(|_| random_cell(rng)).collect()))
        .collect();
    Dataset::new(schema, records)
}

fn random_atom(rng: &mut ChaCha8Rng, left: &[&str], right: &[&str]) -> SimpleSbp {
    SimpleSbp::new(
        *IndexingFunction::ALL.choose(rng).unwrap(),
        *left.choose(rng).unwrap(),
        *right.choose(rng).unwrap(),
    )
}

#[test]
fn duplicates_generator_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let n1 = rng.gen_range(1..=100);
        let n2 = rng.gen_range(1..=100);
        let a = random_dataset(&mut rng, "a", &["p", "q"], n1);
        let b = random_dataset(&mut rng, "b", &["r"], n2);
        let limit = rng.gen_range(1..=n1 * n2);
        let fast = generate_duplicates(&a, &b, limit).unwrap();
        let slow = generate_duplicates_brute_force(&a, &b, limit).unwrap();
        assert_eq!(fast.len(), slow.len());
        for (x, y) in fast.iter().zip(&slow) {
            assert_eq!((&x.left_id, &x.right_id), (&y.left_id, &y.right_id));
            assert!((x.cosine - y.cosine).abs() < 1e-12);
        }
    }
}

#[test]
fn planted_duplicates_rank_in_top_ten() {
    let g = generate(&GenSpec {
        n_left: 20,
        n_right: 20,
        n_dups: 5,
        noise: 0.0,
        seed: 4,
        ..GenSpec::default()
    })
    .unwrap();
    let (a, b) = g.datasets().unwrap();
    let top: BTreeSet<(String, String)> = generate_duplicates(&a, &b, 10)
        .unwrap()
        .into_iter()
        .map(|c| (c.left_id, c.right_id))
        .collect();
    assert!(g.truth.pairs.is_subset(&top));
}

#[test]
fn normalization_preserves_coverage_on_sample() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_dataset(&mut rng, "a", &["name", "street"], 50);
    let b = random_dataset(&mut rng, "b", &["first", "last", "addr"], 50);
    let scheme = ComplexScheme {
        terms: vec![
            ComplexTerm {
                atoms: vec![ComplexSbp::new(
                    IndexingFunction::TokenPrefix3,
                    Mapping::new(["name"], ["first", "last"], 0.0),
                )],
            },
            ComplexTerm {
                atoms: vec![
                    ComplexSbp::new(IndexingFunction::Soundex, Mapping::new(["name", "street"], ["last"], 0.0)),
                    ComplexSbp::new(IndexingFunction::IntegerTokens, Mapping::one_to_one("street", "addr", 0.0)),
                ],
            },
        ],
    };
    let simple = normalize_to_simple_dnf(&scheme, 1000).unwrap();
    let gamma = candidate_set(&build_blocks(&simple, &a, &b).unwrap());
    for r1 in &a.records {
        for r2 in &b.records {
            let expected = scheme.terms.iter().any(|t| {
                t.atoms
                    .iter()
                    .all(|c| complex_sbp_eval(c, &a.schema, r1, &b.schema, r2).unwrap())
            });
            assert_eq!(gamma.contains(&r1.id, &r2.id), expected, "{} {}", r1.id, r2.id);
        }
    }
}

#[test]
fn blocking_matches_brute_force_on_sixty_records() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let left = ["name", "city"];
    let right = ["full", "town", "zip"];
    for _ in 0..5 {
        let a = random_dataset(&mut rng, "a", &left, 60);
        let b = random_dataset(&mut rng, "b", &right, 60);
        let terms: Vec<Term> = (0..rng.gen_range(1..=3))
            .map(|_| Term::new((0..rng.gen_range(1..=2)).map(|_| random_atom(&mut rng, &left, &right))).unwrap())
            .collect();
        let scheme = BlockingScheme::new(2, terms).unwrap();
        let fast = candidate_set(&build_blocks(&scheme, &a, &b).unwrap());
        assert_eq!(fast, brute_force_candidates(&scheme, &a, &b).unwrap(), "{scheme}");
    }
}

#[test]
fn learned_scheme_covers_union_of_survivors() {
    let g = generate(&GenSpec {
        n_left: 150,
        n_right: 150,
        n_dups: 60,
        noise: 0.3,
        seed: 8,
        ..GenSpec::default()
    })
    .unwrap();
    let (a, b) = g.datasets().unwrap();
    let d: Vec<(String, String)> = g.truth.pairs.iter().cloned().collect();
    let n = permute_negatives(&d, 2).unwrap();
    let idx = build_search_space(IndexingFunction::ALL, &g.q_truth, 1, &d, &n, &a, &b, 10_000).unwrap();
    let survivors = score_and_prune(&idx, 0.5);
    let chosen = chvatal_cover(&survivors, &idx).unwrap();
    let union = |keys: &[hetblock::learner::ScoredKey]| {
        keys.iter()
            .flat_map(|k| idx.dup_cover(k.key_idx).ones())
            .collect::<BTreeSet<usize>>()
    };
    assert_eq!(union(&chosen), union(&survivors));

    let cfg = LearnerConfig {
        kappa: 0.5,
        ..LearnerConfig::default()
    };
    let out = learn_scheme(&d, &g.q_truth, &cfg, &a, &b, 2).unwrap();
    let chosen_terms: Vec<String> = chosen.iter().map(|k| k.canonical.clone()).collect();
    let scheme_terms: Vec<String> = out.scheme.terms().iter().map(Term::canonical).collect();
    assert_eq!(chosen_terms, scheme_terms);
    assert_eq!(out.report.universe, union(&survivors).len());
}
