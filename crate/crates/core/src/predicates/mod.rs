//! Indexing functions, blocking predicates and DNF blocking schemes.

mod index;
pub mod phonetic;
mod scheme;

pub use index::{
    gbp_eval, index, index_by_id, index_cell, intersects, parse_integer_token, tokenize, IndexingFunction,
};
pub use scheme::{
    bkv_set, check_separator_free, complex_sbp_eval, normalize_to_simple_dnf, scheme_eval, simple_sbp_eval,
    BlockingScheme, BoundAtom, BoundScheme, ComplexSbp, ComplexScheme, ComplexTerm, Side, SimpleSbp, Term,
    BKV_SEPARATOR, DEFAULT_NORMALIZE_CAP,
};
