//! Indexing functions and general blocking predicates.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::phonetic;
use crate::error::{Error, Result};
use crate::table::value_members;

/// Splits text on runs of whitespace and the delimiters `,` `;` `/`.
/// Other punctuation stays inside tokens.
pub fn tokenize(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| c.is_whitespace() || matches!(c, ',' | ';' | '/'))
        .filter(|t| !t.is_empty())
}

/// Canonical decimal form of an integer token, or `None` when the token has
/// anything other than digits after one optional leading sign.
pub fn parse_integer_token(token: &str) -> Option<(bool, String)> {
    let (negative, digits) = match token.as_bytes().first()? {
        b'-' => (true, &token[1..]),
        b'+' => (false, &token[1..]),
        _ => (false, token),
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let trimmed = digits.trim_start_matches('0');
    let magnitude = if trimmed.is_empty() { "0" } else { trimmed };
    Some((negative && magnitude != "0", magnitude.to_string()))
}

fn render_integer(negative: bool, magnitude: &str) -> String {
    if negative {
        format!("-{magnitude}")
    } else {
        magnitude.to_string()
    }
}

/// Emits n-1, n, n+1. Values that do not fit an i128 only emit themselves.
fn off_by_one(negative: bool, magnitude: &str, out: &mut BTreeSet<String>) {
    match magnitude.parse::<i128>() {
        Ok(m) => {
            let n = if negative { -m } else { m };
            for v in [n.checked_sub(1), Some(n), n.checked_add(1)].into_iter().flatten() {
                out.insert(v.to_string());
            }
        }
        Err(_) => {
            out.insert(render_integer(negative, magnitude));
        }
    }
}

fn prefix(token: &str, n: usize) -> &str {
    match token.char_indices().nth(n) {
        Some((end, _)) => &token[..end],
        None => token,
    }
}

macro_rules! catalogue {
    ($($variant:ident => $id:literal),+ $(,)?) => {
        /// The closed catalogue of indexing functions. Each one also names the
        /// general blocking predicate built on it.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum IndexingFunction {
            $($variant),+
        }

        impl IndexingFunction {
            pub const ALL: &'static [IndexingFunction] = &[$(IndexingFunction::$variant),+];

            /// Stable identifier used in serialized schemes.
            pub fn id(self) -> &'static str {
                match self {
                    $(IndexingFunction::$variant => $id),+
                }
            }
        }

        impl FromStr for IndexingFunction {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($id => Ok(IndexingFunction::$variant),)+
                    "ContainsCommonToken" => Ok(IndexingFunction::Tokens),
                    "ContainsCommonInteger" => Ok(IndexingFunction::IntegerTokens),
                    "ContainsCommonIntegerOffByOne" => Ok(IndexingFunction::IntegerTokensOffByOne),
                    _ => Err(Error::Lookup(format!("unknown indexing function `{s}`"))),
                }
            }
        }
    };
}

catalogue! {
    ExactValue => "ExactValue",
    Tokens => "Tokens",
    IntegerTokens => "IntegerTokens",
    IntegerTokensOffByOne => "IntegerTokensOffByOne",
    TokenPrefix3 => "TokenPrefix3",
    TokenPrefix5 => "TokenPrefix5",
    TokenPrefix7 => "TokenPrefix7",
    TokenNGrams2 => "TokenNGrams2",
    TokenNGrams4 => "TokenNGrams4",
    TokenNGrams6 => "TokenNGrams6",
    Soundex => "Soundex",
    RefinedSoundex => "RefinedSoundex",
    Metaphone => "Metaphone",
    DoubleMetaphone => "DoubleMetaphone",
    Nysiis => "NYSIIS",
    Caverphone1 => "Caverphone1",
    Caverphone2 => "Caverphone2",
    ColognePhonetic => "ColognePhonetic",
    MatchRating => "MatchRating",
}

impl IndexingFunction {
    fn phonetic_encoder(self) -> Option<fn(&str) -> String> {
        use IndexingFunction::*;
        Some(match self {
            Soundex => phonetic::soundex,
            RefinedSoundex => phonetic::refined_soundex,
            Metaphone => phonetic::metaphone,
            DoubleMetaphone => phonetic::double_metaphone,
            Nysiis => phonetic::nysiis,
            Caverphone1 => phonetic::caverphone1,
            Caverphone2 => phonetic::caverphone2,
            ColognePhonetic => phonetic::cologne,
            MatchRating => phonetic::match_rating,
            _ => return None,
        })
    }

    pub fn is_phonetic(self) -> bool {
        self.phonetic_encoder().is_some()
    }

    /// Adds the blocking key values of `value` to `out`.
    pub fn index_into(self, value: &str, out: &mut BTreeSet<String>) {
        use IndexingFunction::*;
        let lower = value.to_lowercase();
        match self {
            ExactValue => {
                let v = lower.trim();
                if !v.is_empty() {
                    out.insert(v.to_string());
                }
            }
            Tokens => out.extend(tokenize(&lower).map(str::to_string)),
            IntegerTokens => {
                for tok in tokenize(&lower) {
                    if let Some((neg, mag)) = parse_integer_token(tok) {
                        out.insert(render_integer(neg, &mag));
                    }
                }
            }
            IntegerTokensOffByOne => {
                for tok in tokenize(&lower) {
                    if let Some((neg, mag)) = parse_integer_token(tok) {
                        off_by_one(neg, &mag, out);
                    }
                }
            }
            TokenPrefix3 | TokenPrefix5 | TokenPrefix7 => {
                let n = match self {
                    TokenPrefix3 => 3,
                    TokenPrefix5 => 5,
                    _ => 7,
                };
                out.extend(tokenize(&lower).map(|t| prefix(t, n).to_string()));
            }
            TokenNGrams2 | TokenNGrams4 | TokenNGrams6 => {
                let n = match self {
                    TokenNGrams2 => 2,
                    TokenNGrams4 => 4,
                    _ => 6,
                };
                let toks: Vec<&str> = tokenize(&lower).collect();
                out.extend(toks.windows(n).map(|w| w.join(" ")));
            }
            _ => {
                let encode = self.phonetic_encoder().expect("phonetic variant");
                for tok in tokenize(&lower) {
                    if !tok.chars().any(char::is_alphabetic) {
                        continue;
                    }
                    let code = encode(tok);
                    if !code.is_empty() {
                        out.insert(code);
                    }
                }
            }
        }
    }

    /// Adds the keys of every member of a raw multi-valued cell.
    pub fn index_cell_into(self, cell: &str, out: &mut BTreeSet<String>) {
        for member in value_members(cell) {
            self.index_into(member, out);
        }
    }
}

impl fmt::Display for IndexingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl Serialize for IndexingFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.id())
    }
}

impl<'de> Deserialize<'de> for IndexingFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The blocking key values of a single value.
pub fn index(f: IndexingFunction, value: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    f.index_into(value, &mut out);
    out
}

/// Looks an indexing function up by id, then indexes.
pub fn index_by_id(id: &str, value: &str) -> Result<BTreeSet<String>> {
    Ok(index(id.parse()?, value))
}

/// The blocking key values of a raw cell, unioned over its value-set members.
pub fn index_cell(f: IndexingFunction, cell: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    f.index_cell_into(cell, &mut out);
    out
}

/// True iff two sorted sets share an element.
pub fn intersects<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> bool {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().any(|x| large.contains(x))
}

/// General blocking predicate: the two key sets intersect.
pub fn gbp_eval(f: IndexingFunction, v1: &str, v2: &str) -> bool {
    intersects(&index(f, v1), &index(f, v2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use IndexingFunction::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn catalogue_has_nineteen_round_tripping_ids() {
        assert_eq!(IndexingFunction::ALL.len(), 19);
        for f in IndexingFunction::ALL {
            assert_eq!(f.id().parse::<IndexingFunction>().unwrap(), *f);
            let json = serde_json::to_string(f).unwrap();
            assert_eq!(serde_json::from_str::<IndexingFunction>(&json).unwrap(), *f);
        }
        assert!(matches!("Bogus".parse::<IndexingFunction>(), Err(Error::Lookup(_))));
        assert!(index_by_id("Bogus", "x").is_err());
    }

    #[test]
    fn tokens_keep_inner_punctuation() {
        assert_eq!(index(Tokens, "W. Beats Jr."), set(&["w.", "beats", "jr."]));
        assert_eq!(index(Tokens, "a,b;c/d  e"), set(&["a", "b", "c", "d", "e"]));
        assert!(index(Tokens, "   ").is_empty());
    }

    #[test]
    fn exact_value_is_case_insensitive() {
        assert_eq!(index(ExactValue, "Mickey Beats"), set(&["mickey beats"]));
        assert!(gbp_eval(ExactValue, "mickey beats", "Mickey Beats"));
        assert!(index(ExactValue, "").is_empty());
    }

    #[test]
    fn integer_tokens() {
        assert!(index(IntegerTokens, "no digits here").is_empty());
        assert_eq!(index(IntegerTokens, "Apt 5, 77019a, -3 +007"), set(&["5", "-3", "7"]));
        assert_eq!(index(IntegerTokensOffByOne, "5"), set(&["4", "5", "6"]));
        assert_eq!(index(IntegerTokensOffByOne, "0"), set(&["-1", "0", "1"]));
        assert!(gbp_eval(IntegerTokensOffByOne, "Apt 5", "Apt 6"));
        assert!(!gbp_eval(IntegerTokens, "Apt 5", "Apt 6"));
        let huge = "123456789012345678901234567890123456789012";
        assert_eq!(index(IntegerTokensOffByOne, huge), set(&[huge]));
    }

    #[test]
    fn prefixes_keep_short_tokens_whole() {
        assert_eq!(index(TokenPrefix3, "Mickey Jo"), set(&["mic", "jo"]));
        assert_eq!(index(TokenPrefix5, "Mickey"), set(&["micke"]));
        assert_eq!(index(TokenPrefix7, "Mickey"), set(&["mickey"]));
    }

    #[test]
    fn ngrams_join_with_space() {
        assert_eq!(index(TokenNGrams2, "a b c"), set(&["a b", "b c"]));
        assert!(index(TokenNGrams4, "a b c").is_empty());
        assert_eq!(index(TokenNGrams6, "1 2 3 4 5 6"), set(&["1 2 3 4 5 6"]));
    }

    #[test]
    fn phonetic_per_token_union() {
        assert_eq!(index(Soundex, "Robert"), set(&["R163"]));
        assert_eq!(index(Soundex, "Robert Rupert 42"), set(&["R163"]));
        assert_eq!(index(Nysiis, "Smith Brown"), set(&["SNAT", "BRAN"]));
        assert!(index(Metaphone, "123 456").is_empty());
        for f in IndexingFunction::ALL.iter().filter(|f| f.is_phonetic()) {
            assert!(index(*f, "99").is_empty(), "{f}");
            assert!(!index(*f, "Jonathan").is_empty(), "{f}");
        }
    }

    #[test]
    fn common_token_example() {
        assert!(gbp_eval(Tokens, "Mickey Beats", "W. Beats Jr."));
        assert!(gbp_eval(Tokens, "Mickey Beats", "Beats"));
    }

    #[test]
    fn cell_union_over_members() {
        assert_eq!(index_cell(Tokens, "Ann Lee; Bo"), set(&["ann", "lee", "bo"]));
        assert!(index_cell(Tokens, "NULL").is_empty());
    }

    fn value() -> impl Strategy<Value = String> {
        "[A-Za-z0-9 ,.;/-]{0,24}"
    }

    proptest! {
        #[test]
        fn gbp_is_symmetric(a in value(), b in value()) {
            for f in IndexingFunction::ALL {
                prop_assert_eq!(gbp_eval(*f, &a, &b), gbp_eval(*f, &b, &a));
            }
        }

        #[test]
        fn prefix_chain(a in "[a-z]{1,9}( [a-z]{1,9}){0,2}", b in "[a-z]{1,9}( [a-z]{1,9}){0,2}") {
            if gbp_eval(TokenPrefix7, &a, &b) {
                prop_assert!(gbp_eval(TokenPrefix5, &a, &b));
            }
            if gbp_eval(TokenPrefix5, &a, &b) {
                prop_assert!(gbp_eval(TokenPrefix3, &a, &b));
            }
        }

        #[test]
        fn integer_chain(a in "([0-9]{1,3} ?){0,3}", b in "([0-9]{1,3} ?){0,3}") {
            if gbp_eval(IntegerTokens, &a, &b) {
                prop_assert!(gbp_eval(IntegerTokensOffByOne, &a, &b));
            }
        }

        #[test]
        fn index_is_case_insensitive(a in value()) {
            for f in IndexingFunction::ALL {
                prop_assert_eq!(index(*f, &a), index(*f, &a.to_uppercase()));
            }
        }
    }
}
