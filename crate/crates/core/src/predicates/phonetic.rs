//! Phonetic encoders following the Apache commons-codec definitions.
//!
//! Every encoder takes a single word. Input is upper-cased and reduced to
//! ASCII letters first (Cologne also folds German umlauts); an input with no
//! letters encodes to the empty string.

use std::sync::OnceLock;

use regex::Regex;

fn clean_ascii_upper(word: &str) -> Vec<u8> {
    word.bytes()
        .filter(u8::is_ascii_alphabetic)
        .map(|b| b.to_ascii_uppercase())
        .collect()
}

// ---------------------------------------------------------------------------
// Soundex

const SOUNDEX_MAP: &[u8; 26] = b"01230120022455012623010202";

/// American Soundex, four characters, `H` and `W` transparent.
pub fn soundex(word: &str) -> String {
    let s = clean_ascii_upper(word);
    let Some(&first) = s.first() else {
        return String::new();
    };
    let map = |c: u8| SOUNDEX_MAP[(c - b'A') as usize];
    let mut out = vec![first];
    let mut last = map(first);
    for &c in &s[1..] {
        if out.len() == 4 {
            break;
        }
        if c == b'H' || c == b'W' {
            continue;
        }
        let digit = map(c);
        if digit != b'0' && digit != last {
            out.push(digit);
        }
        last = digit;
    }
    out.resize(4, b'0');
    String::from_utf8(out).expect("ascii")
}

const REFINED_SOUNDEX_MAP: &[u8; 26] = b"01360240043788015936020505";

/// Refined Soundex: first letter followed by one code per letter, with
/// adjacent repeats collapsed. Unbounded length.
pub fn refined_soundex(word: &str) -> String {
    let s = clean_ascii_upper(word);
    let Some(&first) = s.first() else {
        return String::new();
    };
    let mut out = vec![first];
    let mut last = 0u8;
    for &c in &s {
        let code = REFINED_SOUNDEX_MAP[(c - b'A') as usize];
        if code != last {
            out.push(code);
        }
        last = code;
    }
    String::from_utf8(out).expect("ascii")
}

// ---------------------------------------------------------------------------
// Metaphone

const METAPHONE_MAX_LEN: usize = 4;

fn is_vowel_at(w: &[u8], i: usize) -> bool {
    w.get(i).is_some_and(|c| b"AEIOU".contains(c))
}

fn next_is(w: &[u8], i: usize, c: u8) -> bool {
    i + 1 < w.len() && w[i + 1] == c
}

fn prev_is(w: &[u8], i: usize, c: u8) -> bool {
    i > 0 && i < w.len() && w[i - 1] == c
}

fn region(w: &[u8], i: usize, pat: &[u8]) -> bool {
    w.get(i..i + pat.len()) == Some(pat)
}

fn front_vowel(c: Option<&u8>) -> bool {
    c.is_some_and(|c| b"EIY".contains(c))
}

/// Original Metaphone, four-character codes.
pub fn metaphone(word: &str) -> String {
    let inwd = clean_ascii_upper(word);
    match inwd.len() {
        0 => return String::new(),
        1 => return String::from_utf8(inwd).expect("ascii"),
        _ => {}
    }

    let mut local: Vec<u8> = match (inwd[0], inwd[1]) {
        (b'K' | b'G' | b'P', b'N') | (b'A', b'E') | (b'W', b'R') => inwd[1..].to_vec(),
        (b'W', b'H') => {
            let mut v = inwd[1..].to_vec();
            v[0] = b'W';
            v
        }
        (b'X', _) => {
            let mut v = inwd.clone();
            v[0] = b'S';
            v
        }
        _ => inwd.clone(),
    };
    // Keep the borrow checker happy while indexing below.
    let w: &mut Vec<u8> = &mut local;
    let len = w.len();
    let last = |n: usize| n + 1 == len;

    let mut code: Vec<u8> = Vec::with_capacity(8);
    let mut n = 0;
    while code.len() < METAPHONE_MAX_LEN && n < len {
        let symb = w[n];
        if symb != b'C' && prev_is(w, n, symb) {
            n += 1;
            continue;
        }
        match symb {
            b'A' | b'E' | b'I' | b'O' | b'U' => {
                if n == 0 {
                    code.push(symb);
                }
            }
            b'B' => {
                if !(prev_is(w, n, b'M') && last(n)) {
                    code.push(b'B');
                }
            }
            b'C' => {
                if prev_is(w, n, b'S') && !last(n) && front_vowel(w.get(n + 1)) {
                    // SCI, SCE, SCY: silent
                } else if region(w, n, b"CIA") {
                    code.push(b'X');
                } else if !last(n) && front_vowel(w.get(n + 1)) {
                    code.push(b'S');
                } else if prev_is(w, n, b'S') && next_is(w, n, b'H') {
                    code.push(b'K');
                } else if next_is(w, n, b'H') {
                    if n == 0 && len >= 3 && is_vowel_at(w, 2) {
                        code.push(b'K');
                    } else {
                        code.push(b'X');
                    }
                } else {
                    code.push(b'K');
                }
            }
            b'D' => {
                if !last(n + 1) && next_is(w, n, b'G') && front_vowel(w.get(n + 2)) {
                    code.push(b'J');
                    n += 2;
                } else {
                    code.push(b'T');
                }
            }
            b'G' => {
                let silent = (last(n + 1) && next_is(w, n, b'H'))
                    || (!last(n + 1) && next_is(w, n, b'H') && !is_vowel_at(w, n + 2))
                    || (n > 0 && (region(w, n, b"GN") || region(w, n, b"GNED")));
                if !silent {
                    let hard = prev_is(w, n, b'G');
                    if !last(n) && front_vowel(w.get(n + 1)) && !hard {
                        code.push(b'J');
                    } else {
                        code.push(b'K');
                    }
                }
            }
            b'H' => {
                if !last(n)
                    && !(n > 0 && b"CSPTG".contains(&w[n - 1]))
                    && is_vowel_at(w, n + 1)
                {
                    code.push(b'H');
                }
            }
            b'F' | b'J' | b'L' | b'M' | b'N' | b'R' => code.push(symb),
            b'K' => {
                if n == 0 || !prev_is(w, n, b'C') {
                    code.push(b'K');
                }
            }
            b'P' => code.push(if next_is(w, n, b'H') { b'F' } else { b'P' }),
            b'Q' => code.push(b'K'),
            b'S' => {
                if region(w, n, b"SH") || region(w, n, b"SIO") || region(w, n, b"SIA") {
                    code.push(b'X');
                } else {
                    code.push(b'S');
                }
            }
            b'T' => {
                if region(w, n, b"TIA") || region(w, n, b"TIO") {
                    code.push(b'X');
                } else if region(w, n, b"TCH") {
                    // silent
                } else if region(w, n, b"TH") {
                    code.push(b'0');
                } else {
                    code.push(b'T');
                }
            }
            b'V' => code.push(b'F'),
            b'W' | b'Y' => {
                if !last(n) && is_vowel_at(w, n + 1) {
                    code.push(symb);
                }
            }
            b'X' => code.extend_from_slice(b"KS"),
            b'Z' => code.push(b'S'),
            _ => {}
        }
        n += 1;
        code.truncate(METAPHONE_MAX_LEN);
    }
    String::from_utf8(code).expect("ascii")
}

// ---------------------------------------------------------------------------
// Double Metaphone (primary code)

const DOUBLE_METAPHONE_MAX_LEN: usize = 4;

struct DmResult {
    primary: String,
    alternate: String,
}

impl DmResult {
    fn complete(&self) -> bool {
        self.primary.len() >= DOUBLE_METAPHONE_MAX_LEN && self.alternate.len() >= DOUBLE_METAPHONE_MAX_LEN
    }

    fn push_capped(buf: &mut String, s: &str) {
        let room = DOUBLE_METAPHONE_MAX_LEN.saturating_sub(buf.len());
        buf.push_str(&s[..s.len().min(room)]);
    }

    fn primary(&mut self, s: &str) {
        Self::push_capped(&mut self.primary, s);
    }

    fn alternate(&mut self, s: &str) {
        Self::push_capped(&mut self.alternate, s);
    }

    fn both(&mut self, p: &str, a: &str) {
        self.primary(p);
        self.alternate(a);
    }

    fn same(&mut self, s: &str) {
        self.both(s, s);
    }
}

struct Dm<'a> {
    v: &'a [u8],
    slavo_germanic: bool,
}

impl Dm<'_> {
    fn at(&self, i: isize) -> u8 {
        if i < 0 {
            return 0;
        }
        self.v.get(i as usize).copied().unwrap_or(0)
    }

    fn contains(&self, start: isize, len: usize, opts: &[&str]) -> bool {
        if start < 0 || start as usize + len > self.v.len() {
            return false;
        }
        let s = &self.v[start as usize..start as usize + len];
        opts.iter().any(|o| o.as_bytes() == s)
    }

    fn last(&self) -> isize {
        self.v.len() as isize - 1
    }

    fn is_vowel(c: u8) -> bool {
        b"AEIOUY".contains(&c)
    }

    fn encode(&self) -> DmResult {
        let mut r = DmResult {
            primary: String::new(),
            alternate: String::new(),
        };
        let mut i: isize = if self.contains(0, 2, &["GN", "KN", "PN", "WR", "PS"]) { 1 } else { 0 };
        while !r.complete() && i <= self.last() {
            let c = self.at(i);
            i = match c {
                b'A' | b'E' | b'I' | b'O' | b'U' | b'Y' => {
                    if i == 0 {
                        r.same("A");
                    }
                    i + 1
                }
                b'B' => {
                    r.same("P");
                    if self.at(i + 1) == b'B' { i + 2 } else { i + 1 }
                }
                b'C' => self.handle_c(&mut r, i),
                b'D' => self.handle_d(&mut r, i),
                b'F' => {
                    r.same("F");
                    if self.at(i + 1) == b'F' { i + 2 } else { i + 1 }
                }
                b'G' => self.handle_g(&mut r, i),
                b'H' => {
                    if (i == 0 || Self::is_vowel(self.at(i - 1))) && Self::is_vowel(self.at(i + 1)) {
                        r.same("H");
                        i + 2
                    } else {
                        i + 1
                    }
                }
                b'J' => self.handle_j(&mut r, i),
                b'K' => {
                    r.same("K");
                    if self.at(i + 1) == b'K' { i + 2 } else { i + 1 }
                }
                b'L' => {
                    if self.at(i + 1) == b'L' {
                        if self.condition_l0(i) {
                            r.primary("L");
                        } else {
                            r.same("L");
                        }
                        i + 2
                    } else {
                        r.same("L");
                        i + 1
                    }
                }
                b'M' => {
                    r.same("M");
                    if self.condition_m0(i) { i + 2 } else { i + 1 }
                }
                b'N' => {
                    r.same("N");
                    if self.at(i + 1) == b'N' { i + 2 } else { i + 1 }
                }
                b'P' => {
                    if self.at(i + 1) == b'H' {
                        r.same("F");
                        i + 2
                    } else {
                        r.same("P");
                        if self.contains(i + 1, 1, &["P", "B"]) { i + 2 } else { i + 1 }
                    }
                }
                b'Q' => {
                    r.same("K");
                    if self.at(i + 1) == b'Q' { i + 2 } else { i + 1 }
                }
                b'R' => {
                    if i == self.last()
                        && !self.slavo_germanic
                        && self.contains(i - 2, 2, &["IE"])
                        && !self.contains(i - 4, 2, &["ME", "MA"])
                    {
                        r.alternate("R");
                    } else {
                        r.same("R");
                    }
                    if self.at(i + 1) == b'R' { i + 2 } else { i + 1 }
                }
                b'S' => self.handle_s(&mut r, i),
                b'T' => self.handle_t(&mut r, i),
                b'V' => {
                    r.same("F");
                    if self.at(i + 1) == b'V' { i + 2 } else { i + 1 }
                }
                b'W' => self.handle_w(&mut r, i),
                b'X' => self.handle_x(&mut r, i),
                b'Z' => self.handle_z(&mut r, i),
                _ => i + 1,
            };
        }
        r
    }

    fn germanic(&self) -> bool {
        self.contains(0, 4, &["VAN ", "VON "]) || self.contains(0, 3, &["SCH"])
    }

    fn condition_c0(&self, i: isize) -> bool {
        if self.contains(i, 4, &["CHIA"]) {
            return true;
        }
        if i <= 1 || Self::is_vowel(self.at(i - 2)) || !self.contains(i - 1, 3, &["ACH"]) {
            return false;
        }
        let c = self.at(i + 2);
        (c != b'I' && c != b'E') || self.contains(i - 2, 6, &["BACHER", "MACHER"])
    }

    fn condition_ch0(&self, i: isize) -> bool {
        i == 0
            && (self.contains(i + 1, 5, &["HARAC", "HARIS"])
                || self.contains(i + 1, 3, &["HOR", "HYM", "HIA", "HEM"]))
            && !self.contains(0, 5, &["CHORE"])
    }

    fn condition_ch1(&self, i: isize) -> bool {
        self.germanic()
            || self.contains(i - 2, 6, &["ORCHES", "ARCHIT", "ORCHID"])
            || self.contains(i + 2, 1, &["T", "S"])
            || ((self.contains(i - 1, 1, &["A", "O", "U", "E"]) || i == 0)
                && (self.contains(i + 2, 1, &["L", "R", "N", "M", "B", "H", "F", "V", "W", " "])
                    || i + 1 == self.last()))
    }

    fn condition_l0(&self, i: isize) -> bool {
        if i == self.last() - 2 && self.contains(i - 1, 4, &["ILLO", "ILLA", "ALLE"]) {
            return true;
        }
        (self.contains(self.last() - 1, 2, &["AS", "OS"]) || self.contains(self.last(), 1, &["A", "O"]))
            && self.contains(i - 1, 4, &["ALLE"])
    }

    fn condition_m0(&self, i: isize) -> bool {
        if self.at(i + 1) == b'M' {
            return true;
        }
        self.contains(i - 1, 3, &["UMB"]) && (i + 1 == self.last() || self.contains(i + 2, 2, &["ER"]))
    }

    fn handle_c(&self, r: &mut DmResult, i: isize) -> isize {
        if self.condition_c0(i) {
            r.same("K");
            i + 2
        } else if i == 0 && self.contains(i, 6, &["CAESAR"]) {
            r.same("S");
            i + 2
        } else if self.contains(i, 2, &["CH"]) {
            self.handle_ch(r, i)
        } else if self.contains(i, 2, &["CZ"]) && !self.contains(i - 2, 4, &["WICZ"]) {
            r.both("S", "X");
            i + 2
        } else if self.contains(i + 1, 3, &["CIA"]) {
            r.same("X");
            i + 3
        } else if self.contains(i, 2, &["CC"]) && !(i == 1 && self.at(0) == b'M') {
            self.handle_cc(r, i)
        } else if self.contains(i, 2, &["CK", "CG", "CQ"]) {
            r.same("K");
            i + 2
        } else if self.contains(i, 2, &["CI", "CE", "CY"]) {
            if self.contains(i, 3, &["CIO", "CIE", "CIA"]) {
                r.both("S", "X");
            } else {
                r.same("S");
            }
            i + 2
        } else {
            r.same("K");
            if self.contains(i + 1, 2, &[" C", " Q", " G"]) {
                i + 3
            } else if self.contains(i + 1, 1, &["C", "K", "Q"]) && !self.contains(i + 1, 2, &["CE", "CI"]) {
                i + 2
            } else {
                i + 1
            }
        }
    }

    fn handle_cc(&self, r: &mut DmResult, i: isize) -> isize {
        if self.contains(i + 2, 1, &["I", "E", "H"]) && !self.contains(i + 2, 2, &["HU"]) {
            if (i == 1 && self.at(i - 1) == b'A') || self.contains(i - 1, 5, &["UCCEE", "UCCES"]) {
                r.same("KS");
            } else {
                r.same("X");
            }
            i + 3
        } else {
            r.same("K");
            i + 2
        }
    }

    fn handle_ch(&self, r: &mut DmResult, i: isize) -> isize {
        if i > 0 && self.contains(i, 4, &["CHAE"]) {
            r.both("K", "X");
        } else if self.condition_ch0(i) || self.condition_ch1(i) {
            r.same("K");
        } else if i > 0 {
            if self.contains(0, 2, &["MC"]) {
                r.same("K");
            } else {
                r.both("X", "K");
            }
        } else {
            r.same("X");
        }
        i + 2
    }

    fn handle_d(&self, r: &mut DmResult, i: isize) -> isize {
        if self.contains(i, 2, &["DG"]) {
            if self.contains(i + 2, 1, &["I", "E", "Y"]) {
                r.same("J");
                i + 3
            } else {
                r.same("TK");
                i + 2
            }
        } else if self.contains(i, 2, &["DT", "DD"]) {
            r.same("T");
            i + 2
        } else {
            r.same("T");
            i + 1
        }
    }

    #[allow(clippy::if_same_then_else)]
    fn handle_g(&self, r: &mut DmResult, i: isize) -> isize {
        let sg = self.slavo_germanic;
        if self.at(i + 1) == b'H' {
            self.handle_gh(r, i)
        } else if self.at(i + 1) == b'N' {
            if i == 1 && Self::is_vowel(self.at(0)) && !sg {
                r.both("KN", "N");
            } else if !self.contains(i + 2, 2, &["EY"]) && self.at(i + 1) != b'Y' && !sg {
                r.both("N", "KN");
            } else {
                r.same("KN");
            }
            i + 2
        } else if self.contains(i + 1, 2, &["LI"]) && !sg {
            r.both("KL", "L");
            i + 2
        } else if i == 0
            && (self.at(i + 1) == b'Y'
                || self.contains(i + 1, 2, &["ES", "EP", "EB", "EL", "EY", "IB", "IL", "IN", "IE", "EI", "ER"]))
        {
            r.both("K", "J");
            i + 2
        } else if (self.contains(i + 1, 2, &["ER"]) || self.at(i + 1) == b'Y')
            && !self.contains(0, 6, &["DANGER", "RANGER", "MANGER"])
            && !self.contains(i - 1, 1, &["E", "I"])
            && !self.contains(i - 1, 3, &["RGY", "OGY"])
        {
            r.both("K", "J");
            i + 2
        } else if self.contains(i + 1, 1, &["E", "I", "Y"]) || self.contains(i - 1, 4, &["AGGI", "OGGI"]) {
            if self.germanic() || self.contains(i + 1, 2, &["ET"]) {
                r.same("K");
            } else if self.contains(i + 1, 3, &["IER"]) {
                r.same("J");
            } else {
                r.both("J", "K");
            }
            i + 2
        } else if self.at(i + 1) == b'G' {
            r.same("K");
            i + 2
        } else {
            r.same("K");
            i + 1
        }
    }

    fn handle_gh(&self, r: &mut DmResult, i: isize) -> isize {
        if i > 0 && !Self::is_vowel(self.at(i - 1)) {
            r.same("K");
        } else if i == 0 {
            if self.at(i + 2) == b'I' {
                r.same("J");
            } else {
                r.same("K");
            }
        } else if (i > 1 && self.contains(i - 2, 1, &["B", "H", "D"]))
            || (i > 2 && self.contains(i - 3, 1, &["B", "H", "D"]))
            || (i > 3 && self.contains(i - 4, 1, &["B", "H"]))
        {
            // Parker's rule: silent
        } else if i > 2 && self.at(i - 1) == b'U' && self.contains(i - 3, 1, &["C", "G", "L", "R", "T"]) {
            r.same("F");
        } else if i > 0 && self.at(i - 1) != b'I' {
            r.same("K");
        }
        i + 2
    }

    fn handle_j(&self, r: &mut DmResult, i: isize) -> isize {
        if self.contains(i, 4, &["JOSE"]) || self.contains(0, 4, &["SAN "]) {
            if (i == 0 && self.at(i + 4) == b' ') || self.v.len() == 4 || self.contains(0, 4, &["SAN "]) {
                r.same("H");
            } else {
                r.both("J", "H");
            }
            return i + 1;
        }
        if i == 0 {
            r.both("J", "A");
        } else if Self::is_vowel(self.at(i - 1))
            && !self.slavo_germanic
            && (self.at(i + 1) == b'A' || self.at(i + 1) == b'O')
        {
            r.both("J", "H");
        } else if i == self.last() {
            r.both("J", " ");
        } else if !self.contains(i + 1, 1, &["L", "T", "K", "S", "N", "M", "B", "Z"])
            && !self.contains(i - 1, 1, &["S", "K", "L"])
        {
            r.same("J");
        }
        if self.at(i + 1) == b'J' { i + 2 } else { i + 1 }
    }

    fn handle_s(&self, r: &mut DmResult, i: isize) -> isize {
        if self.contains(i - 1, 3, &["ISL", "YSL"]) {
            i + 1
        } else if i == 0 && self.contains(i, 5, &["SUGAR"]) {
            r.both("X", "S");
            i + 1
        } else if self.contains(i, 2, &["SH"]) {
            if self.contains(i + 1, 4, &["HEIM", "HOEK", "HOLM", "HOLZ"]) {
                r.same("S");
            } else {
                r.same("X");
            }
            i + 2
        } else if self.contains(i, 3, &["SIO", "SIA"]) || self.contains(i, 4, &["SIAN"]) {
            if self.slavo_germanic {
                r.same("S");
            } else {
                r.both("S", "X");
            }
            i + 3
        } else if (i == 0 && self.contains(i + 1, 1, &["M", "N", "L", "W"])) || self.contains(i + 1, 1, &["Z"]) {
            r.both("S", "X");
            if self.contains(i + 1, 1, &["Z"]) { i + 2 } else { i + 1 }
        } else if self.contains(i, 2, &["SC"]) {
            self.handle_sc(r, i)
        } else {
            if i == self.last() && self.contains(i - 2, 2, &["AI", "OI"]) {
                r.alternate("S");
            } else {
                r.same("S");
            }
            if self.contains(i + 1, 1, &["S", "Z"]) { i + 2 } else { i + 1 }
        }
    }

    fn handle_sc(&self, r: &mut DmResult, i: isize) -> isize {
        if self.at(i + 2) == b'H' {
            if self.contains(i + 3, 2, &["OO", "ER", "EN", "UY", "ED", "EM"]) {
                if self.contains(i + 3, 2, &["ER", "EN"]) {
                    r.both("X", "SK");
                } else {
                    r.same("SK");
                }
            } else if i == 0 && !Self::is_vowel(self.at(3)) && self.at(3) != b'W' {
                r.both("X", "S");
            } else {
                r.same("X");
            }
        } else if self.contains(i + 2, 1, &["I", "E", "Y"]) {
            r.same("S");
        } else {
            r.same("SK");
        }
        i + 3
    }

    fn handle_t(&self, r: &mut DmResult, i: isize) -> isize {
        if self.contains(i, 4, &["TION"]) || self.contains(i, 3, &["TIA", "TCH"]) {
            r.same("X");
            i + 3
        } else if self.contains(i, 2, &["TH"]) || self.contains(i, 3, &["TTH"]) {
            if self.contains(i + 2, 2, &["OM", "AM"]) || self.germanic() {
                r.same("T");
            } else {
                r.both("0", "T");
            }
            i + 2
        } else {
            r.same("T");
            if self.contains(i + 1, 1, &["T", "D"]) { i + 2 } else { i + 1 }
        }
    }

    fn handle_w(&self, r: &mut DmResult, i: isize) -> isize {
        if self.contains(i, 2, &["WR"]) {
            r.same("R");
            return i + 2;
        }
        if i == 0 && (Self::is_vowel(self.at(i + 1)) || self.contains(i, 2, &["WH"])) {
            if Self::is_vowel(self.at(i + 1)) {
                r.both("A", "F");
            } else {
                r.same("A");
            }
            i + 1
        } else if (i == self.last() && Self::is_vowel(self.at(i - 1)))
            || self.contains(i - 1, 5, &["EWSKI", "EWSKY", "OWSKI", "OWSKY"])
            || self.contains(0, 3, &["SCH"])
        {
            r.alternate("F");
            i + 1
        } else if self.contains(i, 4, &["WICZ", "WITZ"]) {
            r.both("TS", "FX");
            i + 4
        } else {
            i + 1
        }
    }

    fn handle_x(&self, r: &mut DmResult, i: isize) -> isize {
        if i == 0 {
            r.same("S");
            return i + 1;
        }
        if !(i == self.last() && (self.contains(i - 3, 3, &["IAU", "EAU"]) || self.contains(i - 2, 2, &["AU", "OU"]))) {
            r.same("KS");
        }
        if self.contains(i + 1, 1, &["C", "X"]) { i + 2 } else { i + 1 }
    }

    fn handle_z(&self, r: &mut DmResult, i: isize) -> isize {
        if self.at(i + 1) == b'H' {
            r.same("J");
            return i + 2;
        }
        if self.contains(i + 1, 2, &["ZO", "ZI", "ZA"]) || (self.slavo_germanic && i > 0 && self.at(i - 1) != b'T') {
            r.both("S", "TS");
        } else {
            r.same("S");
        }
        if self.at(i + 1) == b'Z' { i + 2 } else { i + 1 }
    }
}

fn double_metaphone_codes(word: &str) -> (String, String) {
    let v = clean_ascii_upper(word);
    if v.is_empty() {
        return (String::new(), String::new());
    }
    let s = std::str::from_utf8(&v).expect("ascii");
    let slavo_germanic = s.contains('W') || s.contains('K') || s.contains("CZ") || s.contains("WITZ");
    let r = Dm { v: &v, slavo_germanic }.encode();
    (r.primary, r.alternate)
}

/// Primary Double Metaphone code, four characters at most.
pub fn double_metaphone(word: &str) -> String {
    double_metaphone_codes(word).0
}

/// Alternate Double Metaphone code.
pub fn double_metaphone_alternate(word: &str) -> String {
    double_metaphone_codes(word).1
}

// ---------------------------------------------------------------------------
// NYSIIS

const NYSIIS_MAX_LEN: usize = 6;

fn nysiis_vowel(c: u8) -> bool {
    b"AEIOU".contains(&c)
}

/// NYSIIS with the strict six-character cap.
pub fn nysiis(word: &str) -> String {
    let mut s = clean_ascii_upper(word);
    if s.is_empty() {
        return String::new();
    }

    let replace_prefix = |s: &mut Vec<u8>, from: &[u8], to: &[u8]| {
        if s.starts_with(from) {
            s.splice(0..from.len(), to.iter().copied());
            true
        } else {
            false
        }
    };
    replace_prefix(&mut s, b"MAC", b"MCC");
    replace_prefix(&mut s, b"KN", b"NN");
    replace_prefix(&mut s, b"K", b"C");
    let _ = replace_prefix(&mut s, b"PH", b"FF") || replace_prefix(&mut s, b"PF", b"FF");
    replace_prefix(&mut s, b"SCH", b"SSS");

    let n = s.len();
    if s.ends_with(b"EE") || s.ends_with(b"IE") {
        s.splice(n - 2.., *b"Y");
    } else if [&b"DT"[..], b"RT", b"RD", b"NT", b"ND"].iter().any(|suf| s.ends_with(suf)) {
        s.splice(n - 2.., *b"D");
    }

    let len = s.len();
    let mut key = vec![s[0]];
    for i in 1..len {
        let prev = s[i - 1];
        let curr = s[i];
        let next = if i + 1 < len { s[i + 1] } else { b' ' };
        let a_next = if i + 2 < len { s[i + 2] } else { b' ' };
        let transcoded: &[u8] = if curr == b'E' && next == b'V' {
            b"AF"
        } else if nysiis_vowel(curr) {
            b"A"
        } else if curr == b'Q' {
            b"G"
        } else if curr == b'Z' {
            b"S"
        } else if curr == b'M' {
            b"N"
        } else if curr == b'K' {
            if next == b'N' { b"NN" } else { b"C" }
        } else if curr == b'S' && next == b'C' && a_next == b'H' {
            b"SSS"
        } else if curr == b'P' && next == b'H' {
            b"FF"
        } else if (curr == b'H' && (!nysiis_vowel(prev) || !nysiis_vowel(next)))
            || (curr == b'W' && nysiis_vowel(prev))
        {
            &[prev][..]
        } else {
            &[curr][..]
        };
        let transcoded = transcoded.to_vec();
        s[i..i + transcoded.len()].copy_from_slice(&transcoded);
        if s[i] != s[i - 1] {
            key.push(s[i]);
        }
    }

    if key.len() > 1 {
        let mut last = *key.last().expect("non-empty");
        if last == b'S' {
            key.pop();
            last = *key.last().expect("non-empty");
        }
        if key.len() > 2 && key[key.len() - 2] == b'A' && last == b'Y' {
            let at = key.len() - 2;
            key.remove(at);
        }
        if last == b'A' {
            key.pop();
        }
    }
    key.truncate(NYSIIS_MAX_LEN);
    String::from_utf8(key).expect("ascii")
}

// ---------------------------------------------------------------------------
// Caverphone

struct Rules(Vec<(Regex, &'static str)>);

impl Rules {
    fn compile(rules: &[(&str, &'static str)]) -> Self {
        Rules(
            rules
                .iter()
                .map(|(pat, rep)| (Regex::new(pat).expect("valid rule"), *rep))
                .collect(),
        )
    }

    fn apply(&self, mut s: String) -> String {
        for (re, rep) in &self.0 {
            if re.is_match(&s) {
                s = re.replace_all(&s, *rep).into_owned();
            }
        }
        s
    }
}

const CAVERPHONE_HEAD: &[(&str, &str)] = &[
    ("^cough", "cou2f"),
    ("^rough", "rou2f"),
    ("^tough", "tou2f"),
    ("^enough", "enou2f"),
];

const CAVERPHONE_MIDDLE: &[(&str, &str)] = &[
    ("^gn", "2n"),
    ("mb$", "m2"),
    ("cq", "2q"),
    ("ci", "si"),
    ("ce", "se"),
    ("cy", "sy"),
    ("tch", "2ch"),
    ("c", "k"),
    ("q", "k"),
    ("x", "k"),
    ("v", "f"),
    ("dg", "2g"),
    ("tio", "sio"),
    ("tia", "sia"),
    ("d", "t"),
    ("ph", "fh"),
    ("b", "p"),
    ("sh", "s2"),
    ("z", "s"),
    ("^[aeiou]", "A"),
    ("[aeiou]", "3"),
];

fn caverphone1_rules() -> &'static Rules {
    static RULES: OnceLock<Rules> = OnceLock::new();
    RULES.get_or_init(|| {
        let mut all: Vec<(&str, &'static str)> = CAVERPHONE_HEAD.to_vec();
        all.extend_from_slice(CAVERPHONE_MIDDLE);
        all.extend_from_slice(&[
            ("3gh3", "3kh3"),
            ("gh", "22"),
            ("g", "k"),
            ("s+", "S"),
            ("t+", "T"),
            ("p+", "P"),
            ("k+", "K"),
            ("f+", "F"),
            ("m+", "M"),
            ("n+", "N"),
            ("w3", "W3"),
            ("wy", "Wy"),
            ("wh3", "Wh3"),
            ("why", "Why"),
            ("w", "2"),
            ("^h", "A"),
            ("h", "2"),
            ("r3", "R3"),
            ("ry", "Ry"),
            ("r", "2"),
            ("l3", "L3"),
            ("ly", "Ly"),
            ("l", "2"),
            ("j", "y"),
            ("y3", "Y3"),
            ("y", "2"),
            ("2", ""),
            ("3", ""),
        ]);
        Rules::compile(&all)
    })
}

fn caverphone2_rules() -> &'static Rules {
    static RULES: OnceLock<Rules> = OnceLock::new();
    RULES.get_or_init(|| {
        let mut all: Vec<(&str, &'static str)> = vec![("e$", "")];
        all.extend_from_slice(CAVERPHONE_HEAD);
        all.push(("^trough", "trou2f"));
        all.extend_from_slice(CAVERPHONE_MIDDLE);
        all.extend_from_slice(&[
            ("j", "y"),
            ("^y3", "Y3"),
            ("^y", "A"),
            ("y", "3"),
            ("3gh3", "3kh3"),
            ("gh", "22"),
            ("g", "k"),
            ("s+", "S"),
            ("t+", "T"),
            ("p+", "P"),
            ("k+", "K"),
            ("f+", "F"),
            ("m+", "M"),
            ("n+", "N"),
            ("w3", "W3"),
            ("wh3", "Wh3"),
            ("w$", "3"),
            ("w", "2"),
            ("^h", "A"),
            ("h", "2"),
            ("r3", "R3"),
            ("r$", "3"),
            ("r", "2"),
            ("l3", "L3"),
            ("l$", "3"),
            ("l", "2"),
            ("2", ""),
            ("3$", "A"),
            ("3", ""),
        ]);
        Rules::compile(&all)
    })
}

fn caverphone_with(rules: &Rules, word: &str, width: usize) -> String {
    let lower: String = word
        .chars()
        .filter(char::is_ascii_alphabetic)
        .map(|c| c.to_ascii_lowercase())
        .collect();
    if lower.is_empty() {
        return String::new();
    }
    let mut code = rules.apply(lower);
    code.push_str(&"1".repeat(width));
    code.truncate(width);
    code
}

/// Caverphone 1.0, six characters padded with `1`.
pub fn caverphone1(word: &str) -> String {
    caverphone_with(caverphone1_rules(), word, 6)
}

/// Caverphone 2.0, ten characters padded with `1`.
pub fn caverphone2(word: &str) -> String {
    caverphone_with(caverphone2_rules(), word, 10)
}

// ---------------------------------------------------------------------------
// Cologne phonetics

/// Kölner Phonetik digit code.
pub fn cologne(word: &str) -> String {
    let mut input: Vec<u8> = Vec::with_capacity(word.len());
    for c in word.chars().flat_map(char::to_uppercase) {
        let mapped = match c {
            'Ä' => b'A',
            'Ö' => b'O',
            'Ü' => b'U',
            'ß' => b'S',
            c if c.is_ascii_uppercase() => c as u8,
            _ => continue,
        };
        input.push(mapped);
    }

    let mut out: Vec<u8> = Vec::with_capacity(input.len() * 2);
    let mut last_code: u8 = b'-';
    let mut put = |out: &mut Vec<u8>, code: u8| {
        if code != b'-' && last_code != code && (code != b'0' || out.is_empty()) {
            out.push(code);
        }
        last_code = code;
    };

    let mut last_char: u8 = b'-';
    for (i, &chr) in input.iter().enumerate() {
        let next = input.get(i + 1).copied().unwrap_or(b'-');
        if b"AEIJOUY".contains(&chr) {
            put(&mut out, b'0');
        } else if chr == b'B' || (chr == b'P' && next != b'H') {
            put(&mut out, b'1');
        } else if (chr == b'D' || chr == b'T') && !b"CSZ".contains(&next) {
            put(&mut out, b'2');
        } else if b"FPVW".contains(&chr) {
            put(&mut out, b'3');
        } else if b"GKQ".contains(&chr) {
            put(&mut out, b'4');
        } else if chr == b'X' && !b"CKQ".contains(&last_char) {
            put(&mut out, b'4');
            put(&mut out, b'8');
        } else if chr == b'S' || chr == b'Z' {
            put(&mut out, b'8');
        } else if chr == b'C' {
            if i == 0 {
                put(&mut out, if b"AHKLOQRUX".contains(&next) { b'4' } else { b'8' });
            } else if b"SZ".contains(&last_char) || !b"AHKOQUX".contains(&next) {
                put(&mut out, b'8');
            } else {
                put(&mut out, b'4');
            }
        } else if b"DTX".contains(&chr) {
            put(&mut out, b'8');
        } else {
            match chr {
                b'R' => put(&mut out, b'7'),
                b'L' => put(&mut out, b'5'),
                b'M' | b'N' => put(&mut out, b'6'),
                b'H' => put(&mut out, b'-'),
                _ => {}
            }
        }
        last_char = chr;
    }
    String::from_utf8(out).expect("ascii")
}

// ---------------------------------------------------------------------------
// Match Rating Approach

/// Match Rating Approach codex: vowels dropped except a leading one, double
/// consonants collapsed, long codes cut to first three plus last three.
pub fn match_rating(word: &str) -> String {
    let s = clean_ascii_upper(word);
    if s.len() <= 1 {
        return String::new();
    }
    let first = s[0];
    let mut v: Vec<u8> = s.iter().copied().filter(|c| !b"AEIOU".contains(c)).collect();
    if b"AEIOU".contains(&first) {
        v.insert(0, first);
    }
    // Replace each doubled consonant pair in alphabetical order, as the
    // reference implementation does with successive string replacements.
    let mut text = String::from_utf8(v).expect("ascii");
    for c in b'B'..=b'Z' {
        if b"AEIOU".contains(&c) {
            continue;
        }
        let pair: String = [c as char, c as char].iter().collect();
        if text.contains(&pair) {
            text = text.replace(&pair, &(c as char).to_string());
        }
    }
    if text.len() > 6 {
        let n = text.len();
        text = format!("{}{}", &text[..3], &text[n - 3..]);
    }
    text
}
