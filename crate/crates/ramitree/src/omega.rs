//! Eventually periodic defining sequences over `{0,1,2}`, their
//! combinatorial invariants, the recursive generator construction at finite
//! depth, and the closed-form order oracle.
//!
//! Sequence positions are 1-based throughout.

use crate::treeauto::{TreeAut, TreeAutError};
use serde::Serialize;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OmegaError {
    #[error("empty input")]
    Empty,
    #[error("empty period")]
    EmptyPeriod,
    #[error("illegal symbol {0:?} (expected 0, 1 or 2)")]
    BadSymbol(char),
    #[error("malformed omega spec {0:?} (expected PRE(PERIOD))")]
    BadGrammar(String),
    #[error("constant sequence excluded")]
    ConstantSequence,
    #[error("unknown generator letter {0:?}")]
    BadLetter(char),
    #[error(transparent)]
    Tree(#[from] TreeAutError),
}

/// An eventually periodic sequence over `{0,1,2}`: preperiod + period.
///
/// Canonical form: the period is primitive (not a power of a shorter word)
/// and the preperiod is minimal (its last symbol never matches the symbol
/// the rotated period would supply).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OmegaSeq {
    pre: Vec<u8>,
    per: Vec<u8>,
}

/// First occurrence index, or never.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum FirstIndex {
    Finite(u32),
    #[serde(serialize_with = "serialize_infinite")]
    Infinite,
}

fn serialize_infinite<S: serde::Serializer>(s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str("infinite")
}

impl FirstIndex {
    pub fn finite(self) -> Option<u32> {
        match self {
            FirstIndex::Finite(i) => Some(i),
            FirstIndex::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, FirstIndex::Finite(_))
    }
}

impl fmt::Display for FirstIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FirstIndex::Finite(i) => write!(f, "{i}"),
            FirstIndex::Infinite => write!(f, "infinite"),
        }
    }
}

/// Classification flags of a sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub is_constant: bool,
    pub is_eventually_constant: bool,
    /// Each of 0, 1, 2 occurs infinitely often (appears in the period).
    pub in_omega0: bool,
    /// Symbols absent from the period, ascending.
    pub missing_from_period: Vec<u8>,
    /// The shifted sequence σω is constant.
    pub sigma_constant: bool,
}

/// Outcome of the closed-form order oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value")]
pub enum OrderPrediction {
    /// A power of two.
    #[serde(rename = "finite")]
    Finite(u64),
    #[serde(rename = "infinite")]
    Infinite,
    /// The lemma's finiteness hypotheses fail; no prediction is made.
    #[serde(rename = "lemma-not-applicable")]
    NotApplicable,
}

/// The six words the order oracle covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderWord {
    Ab,
    Ac,
    Ad,
    Adab,
    Adac,
    Acab,
}

impl OrderWord {
    pub const ALL: [OrderWord; 6] = [
        OrderWord::Ab,
        OrderWord::Ac,
        OrderWord::Ad,
        OrderWord::Adab,
        OrderWord::Adac,
        OrderWord::Acab,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OrderWord::Ab => "ab",
            OrderWord::Ac => "ac",
            OrderWord::Ad => "ad",
            OrderWord::Adab => "adab",
            OrderWord::Adac => "adac",
            OrderWord::Acab => "acab",
        }
    }

    pub fn parse(s: &str) -> Option<OrderWord> {
        OrderWord::ALL.into_iter().find(|w| w.as_str() == s)
    }
}

/// The symbol that kills a directed generator's label: 2 for b, 1 for c,
/// 0 for d.
pub fn killing_symbol(letter: char) -> Option<u8> {
    match letter {
        'b' => Some(2),
        'c' => Some(1),
        'd' => Some(0),
        _ => None,
    }
}

fn letter_of_killing_symbol(sym: u8) -> char {
    match sym {
        2 => 'b',
        1 => 'c',
        0 => 'd',
        _ => unreachable!(),
    }
}

impl OmegaSeq {
    /// Parse `PRE(PERIOD)` with symbols in `{0,1,2}`, e.g. `"(012)"`,
    /// `"2(0)"`, `"01(2)"`. Canonicalizes.
    pub fn parse(text: &str) -> Result<OmegaSeq, OmegaError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(OmegaError::Empty);
        }
        let open = text
            .find('(')
            .ok_or_else(|| OmegaError::BadGrammar(text.to_string()))?;
        if !text.ends_with(')') {
            return Err(OmegaError::BadGrammar(text.to_string()));
        }
        let pre = parse_symbols(&text[..open])?;
        let per = parse_symbols(&text[open + 1..text.len() - 1])?;
        if per.is_empty() {
            return Err(OmegaError::EmptyPeriod);
        }
        Ok(OmegaSeq::new(pre, per))
    }

    fn new(pre: Vec<u8>, per: Vec<u8>) -> OmegaSeq {
        let mut s = OmegaSeq { pre, per };
        s.canonicalize();
        s
    }

    fn canonicalize(&mut self) {
        // primitive period: smallest p with per = per[..p] repeated
        let len = self.per.len();
        for p in 1..=len {
            if len % p == 0 && (0..len).all(|i| self.per[i] == self.per[i % p]) {
                self.per.truncate(p);
                break;
            }
        }
        // minimal preperiod: absorb matching preperiod tail into the period
        while let Some(&last) = self.pre.last() {
            if last == *self.per.last().unwrap() {
                self.pre.pop();
                let r = self.per.pop().unwrap();
                self.per.insert(0, r);
            } else {
                break;
            }
        }
    }

    pub fn preperiod(&self) -> &[u8] {
        &self.pre
    }

    pub fn period(&self) -> &[u8] {
        &self.per
    }

    /// Symbol at 1-based position `i`.
    pub fn symbol(&self, i: u32) -> u8 {
        let i = i as usize;
        debug_assert!(i >= 1);
        if i <= self.pre.len() {
            self.pre[i - 1]
        } else {
            self.per[(i - 1 - self.pre.len()) % self.per.len()]
        }
    }

    pub fn is_constant(&self) -> bool {
        self.pre.is_empty() && self.per.len() == 1
    }

    fn reject_constant(&self) -> Result<(), OmegaError> {
        if self.is_constant() {
            Err(OmegaError::ConstantSequence)
        } else {
            Ok(())
        }
    }

    /// The shifted sequence σ^k ω = (ω_{k+1}, ω_{k+2}, ...).
    pub fn shift(&self, k: u32) -> OmegaSeq {
        let k = k as usize;
        if k <= self.pre.len() {
            OmegaSeq::new(self.pre[k..].to_vec(), self.per.clone())
        } else {
            let r = (k - self.pre.len()) % self.per.len();
            let mut per = self.per[r..].to_vec();
            per.extend_from_slice(&self.per[..r]);
            OmegaSeq::new(Vec::new(), per)
        }
    }

    /// `i_k(ω)`: first (1-based) position of symbol `k`, or infinite.
    pub fn index_first(&self, k: u8) -> FirstIndex {
        debug_assert!(k <= 2);
        for (i, &s) in self.pre.iter().enumerate() {
            if s == k {
                return FirstIndex::Finite(i as u32 + 1);
            }
        }
        for (i, &s) in self.per.iter().enumerate() {
            if s == k {
                return FirstIndex::Finite((self.pre.len() + i) as u32 + 1);
            }
        }
        FirstIndex::Infinite
    }

    /// `m(ω)`: length of the maximal constant prefix.
    pub fn m_of(&self) -> Result<u32, OmegaError> {
        self.reject_constant()?;
        let first = self.symbol(1);
        let mut m = 1;
        while self.symbol(m + 1) == first {
            m += 1;
        }
        Ok(m)
    }

    pub fn classify(&self) -> Classification {
        let missing: Vec<u8> = (0u8..3).filter(|s| !self.per.contains(s)).collect();
        Classification {
            is_constant: self.is_constant(),
            is_eventually_constant: self.per.len() == 1,
            in_omega0: missing.is_empty(),
            missing_from_period: missing,
            sigma_constant: self.shift(1).is_constant(),
        }
    }

    /// The threshold `M` above which the quotients are guaranteed a
    /// ramification structure: `N = max i_k(σω) + 4` when all three indices
    /// are finite; the max over the finite two plus 4 when exactly one is
    /// infinite; 4 when σω is constant.
    pub fn threshold_m(&self) -> Result<u32, OmegaError> {
        self.reject_constant()?;
        let sigma = self.shift(1);
        if sigma.is_constant() {
            return Ok(4);
        }
        let idx: Vec<FirstIndex> = (0u8..3).map(|k| sigma.index_first(k)).collect();
        let finite: Vec<u32> = idx.iter().filter_map(|i| i.finite()).collect();
        match finite.len() {
            3 | 2 => Ok(finite.into_iter().max().unwrap() + 4),
            // one finite index means σω is constant, handled above
            _ => Err(OmegaError::ConstantSequence),
        }
    }

    /// The directed generator with trivial label at vertex "0": the letter
    /// whose killing symbol equals ω_1.
    pub fn d_generator_letter(&self) -> Result<char, OmegaError> {
        self.reject_constant()?;
        Ok(letter_of_killing_symbol(self.symbol(1)))
    }

    /// The letter that becomes the d-generator after shifting past the
    /// constant prefix: killing symbol ω_{m(ω)+1}.
    pub fn c_generator_letter(&self) -> Result<char, OmegaError> {
        let m = self.m_of()?;
        Ok(letter_of_killing_symbol(self.symbol(m + 1)))
    }

    /// The depth-`n` generator for `letter` in `{a,b,c,d}`.
    ///
    /// `a` is the rooted swap. A directed letter with killing symbol κ has
    /// label `a` at vertex `1^m 0` (level m+1) exactly when ω_{m+1} ≠ κ,
    /// for 0 ≤ m ≤ n−2, and trivial labels elsewhere.
    pub fn generator(&self, letter: char, n: u32) -> Result<TreeAut, OmegaError> {
        if letter == 'a' {
            return Ok(TreeAut::rooted_swap(n)?);
        }
        let kappa = killing_symbol(letter).ok_or(OmegaError::BadLetter(letter))?;
        let aut = TreeAut::from_labels(n, |level, v| {
            // vertex 1^(level-1) 0 has index 2^level - 2 within its level
            level >= 1 && v == (1u32 << level) - 2 && self.symbol(level) != kappa
        })?;
        Ok(aut)
    }

    /// All four generators at depth `n`, labelled.
    pub fn generators(&self, n: u32) -> Result<Vec<(char, TreeAut)>, OmegaError> {
        ['a', 'b', 'c', 'd']
            .into_iter()
            .map(|l| Ok((l, self.generator(l, n)?)))
            .collect()
    }

    /// Evaluate a word over `{a,b,c,d}` at depth `n`, left-to-right.
    pub fn word(&self, word: &str, n: u32) -> Result<TreeAut, OmegaError> {
        let mut acc = TreeAut::identity(n)?;
        for letter in word.chars() {
            acc = acc.compose(&self.generator(letter, n)?)?;
        }
        Ok(acc)
    }

    /// ε_k of the order lemma: 0 if σ^{i_k}ω is the constant sequence
    /// `kkk...`, else 1. Decidable because sequences are eventually periodic.
    fn epsilon(&self, k: u8, i_k: u32) -> u32 {
        let tail = self.shift(i_k);
        if tail.is_constant() && tail.symbol(1) == k {
            0
        } else {
            1
        }
    }

    fn predicted_letter_order(&self, k: u8) -> OrderPrediction {
        match self.index_first(k) {
            FirstIndex::Infinite => OrderPrediction::Infinite,
            FirstIndex::Finite(i) => OrderPrediction::Finite(1u64 << (i + self.epsilon(k, i))),
        }
    }

    /// The order oracle. For `ab`, `ac`, `ad`: `2^(i_k + ε_k)` with
    /// k = 2, 1, 0 respectively, infinite when i_k is. For the product words
    /// the recursion on ω_1 applies when every order it consults is finite,
    /// else the oracle abstains.
    pub fn predicted_order(&self, word: OrderWord) -> Result<OrderPrediction, OmegaError> {
        self.reject_constant()?;
        let result = match word {
            OrderWord::Ab => self.predicted_letter_order(2),
            OrderWord::Ac => self.predicted_letter_order(1),
            OrderWord::Ad => self.predicted_letter_order(0),
            OrderWord::Adab | OrderWord::Adac | OrderWord::Acab => {
                let sigma = self.shift(1);
                let branch: &[u8] = match (word, self.symbol(1)) {
                    (OrderWord::Adab, 0) => &[0],
                    (OrderWord::Adab, 1) => &[0, 2],
                    (OrderWord::Adab, 2) => &[2],
                    (OrderWord::Adac, 0) => &[0],
                    (OrderWord::Adac, 1) => &[1],
                    (OrderWord::Adac, 2) => &[0, 1],
                    (OrderWord::Acab, 0) => &[1, 2],
                    (OrderWord::Acab, 1) => &[1],
                    (OrderWord::Acab, 2) => &[2],
                    _ => unreachable!(),
                };
                let mut best = 0u64;
                let mut applicable = true;
                for &k in branch {
                    match sigma.predicted_letter_order(k) {
                        OrderPrediction::Finite(o) => best = best.max(o),
                        _ => applicable = false,
                    }
                }
                if applicable {
                    OrderPrediction::Finite(best)
                } else {
                    OrderPrediction::NotApplicable
                }
            }
        };
        Ok(result)
    }
}

fn parse_symbols(s: &str) -> Result<Vec<u8>, OmegaError> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            '2' => Ok(2),
            _ => Err(OmegaError::BadSymbol(c)),
        })
        .collect()
}

impl fmt::Display for OmegaSeq {
    /// Canonical rendering `PRE(PERIOD)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.pre {
            write!(f, "{s}")?;
        }
        write!(f, "(")?;
        for &s in &self.per {
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treeauto::Vertex;

    fn om(s: &str) -> OmegaSeq {
        OmegaSeq::parse(s).unwrap()
    }

    #[test]
    fn parse_and_canonicalize() {
        assert_eq!(om("(012)").preperiod(), &[] as &[u8]);
        assert_eq!(om("(012)").period(), &[0, 1, 2]);
        assert_eq!(om("2(0)").preperiod(), &[2]);
        assert_eq!(om("2(0)").period(), &[0]);
        // period minimization
        assert_eq!(om("01(222)"), om("01(2)"));
        // preperiod absorption
        assert_eq!(om("0(120)"), om("(012)"));
        assert_eq!(om("(012012)"), om("(012)"));
    }

    #[test]
    fn parse_errors() {
        assert_eq!(OmegaSeq::parse(""), Err(OmegaError::Empty));
        assert_eq!(OmegaSeq::parse("()"), Err(OmegaError::EmptyPeriod));
        assert_eq!(OmegaSeq::parse("(03)"), Err(OmegaError::BadSymbol('3')));
        assert!(matches!(
            OmegaSeq::parse("012"),
            Err(OmegaError::BadGrammar(_))
        ));
    }

    #[test]
    fn display_round_trip() {
        for s in ["(012)", "2(0)", "01(2)", "(01)", "2(01)"] {
            let o = om(s);
            assert_eq!(om(&o.to_string()), o);
        }
        assert_eq!(om("(012)").to_string(), "(012)");
        assert_eq!(om("2(0)").to_string(), "2(0)");
    }

    #[test]
    fn shifting() {
        assert_eq!(om("(012)").shift(1), om("(120)"));
        assert_eq!(om("2(0)").shift(1), om("(0)"));
        assert_eq!(om("2(01)").shift(3), om("(01)"));
        assert_eq!(om("2(01)").shift(2), om("(10)"));
    }

    #[test]
    fn first_indices() {
        let o = om("(012)");
        assert_eq!(o.index_first(0), FirstIndex::Finite(1));
        assert_eq!(o.index_first(1), FirstIndex::Finite(2));
        assert_eq!(o.index_first(2), FirstIndex::Finite(3));
        assert_eq!(om("2(0)").index_first(1), FirstIndex::Infinite);
        assert_eq!(om("(01)").index_first(2), FirstIndex::Infinite);
    }

    #[test]
    fn m_of_cases() {
        assert_eq!(om("(012)").m_of().unwrap(), 1);
        assert_eq!(om("000(12)").m_of().unwrap(), 3);
        assert_eq!(om("2(0)").m_of().unwrap(), 1);
        assert_eq!(om("(0)").m_of(), Err(OmegaError::ConstantSequence));
    }

    #[test]
    fn classification() {
        let c = om("(012)").classify();
        assert!(c.in_omega0 && !c.is_eventually_constant && !c.sigma_constant);
        let c = om("2(0)").classify();
        assert!(c.sigma_constant && c.is_eventually_constant && !c.is_constant);
        let c = om("2(01)").classify();
        assert!(!c.in_omega0 && !c.is_eventually_constant);
        assert_eq!(c.missing_from_period, vec![2]);
        assert!(om("(0)").classify().is_constant);
    }

    #[test]
    fn thresholds() {
        assert_eq!(om("(012)").threshold_m().unwrap(), 7);
        assert_eq!(om("2(0)").threshold_m().unwrap(), 4);
        assert_eq!(om("2(01)").threshold_m().unwrap(), 6);
        assert_eq!(om("(0)").threshold_m(), Err(OmegaError::ConstantSequence));
    }

    #[test]
    fn generator_roles() {
        assert_eq!(om("(012)").d_generator_letter().unwrap(), 'd');
        assert_eq!(om("(012)").c_generator_letter().unwrap(), 'c');
        assert_eq!(om("2(0)").d_generator_letter().unwrap(), 'b');
        assert_eq!(om("2(0)").c_generator_letter().unwrap(), 'd');
        assert_eq!(om("11(02)").d_generator_letter().unwrap(), 'c');
    }

    #[test]
    fn generator_sections_match_recursion() {
        // ω starting with 0: ψ(b) = (a, b_σω), ψ(c) = (a, c_σω), ψ(d) = (e, d_σω)
        let o = om("(012)");
        let s = o.shift(1);
        let n = 5;
        for letter in ['b', 'c', 'd'] {
            let g = o.generator(letter, n).unwrap();
            let parts = g.psi(1).unwrap();
            let expect_left = if killing_symbol(letter).unwrap() == o.symbol(1) {
                TreeAut::identity(n - 1).unwrap()
            } else {
                TreeAut::rooted_swap(n - 1).unwrap()
            };
            assert_eq!(parts[0], expect_left, "left section of {letter}");
            assert_eq!(
                parts[1],
                s.generator(letter, n - 1).unwrap(),
                "right section of {letter}"
            );
        }
    }

    #[test]
    fn b_times_c_is_d() {
        for spec in ["(012)", "2(0)", "1(02)", "(01)"] {
            let o = om(spec);
            let b = o.generator('b', 6).unwrap();
            let c = o.generator('c', 6).unwrap();
            let d = o.generator('d', 6).unwrap();
            assert_eq!(b.compose(&c).unwrap(), d, "bc = d for {spec}");
            assert_eq!(c.compose(&b).unwrap(), d, "cb = d for {spec}");
        }
    }

    #[test]
    fn generators_are_involutions() {
        for spec in ["(012)", "2(0)", "2(01)"] {
            let o = om(spec);
            for letter in ['a', 'b', 'c', 'd'] {
                assert_eq!(o.generator(letter, 6).unwrap().order(), 2);
            }
        }
    }

    #[test]
    fn generator_stabilizer_levels() {
        let o = om("(012)");
        assert_eq!(o.generator('a', 4).unwrap().stabilizer_level(), 0);
        assert_eq!(o.generator('b', 4).unwrap().stabilizer_level(), 1);
        // d has trivial label at "0" (ω_1 = 0) and at "10" a label since ω_2 = 1
        assert_eq!(o.generator('d', 4).unwrap().stabilizer_level(), 2);
    }

    #[test]
    fn generator_application() {
        let o = om("(012)");
        let b = o.generator('b', 4).unwrap();
        assert_eq!(
            b.apply(&Vertex::parse("00").unwrap()).unwrap(),
            Vertex::parse("01").unwrap()
        );
        let d = o.generator('d', 4).unwrap();
        for x in ["00", "01"] {
            assert_eq!(
                d.apply(&Vertex::parse(x).unwrap()).unwrap(),
                Vertex::parse(x).unwrap()
            );
        }
    }

    #[test]
    fn generator_truncation_consistency() {
        let o = om("2(01)");
        for letter in ['a', 'b', 'c', 'd'] {
            let g6 = o.generator(letter, 6).unwrap();
            for k in 1..=6 {
                assert_eq!(g6.truncate(k).unwrap(), o.generator(letter, k).unwrap());
            }
        }
    }

    #[test]
    fn predicted_orders_first_grigorchuk() {
        let o = om("(012)");
        assert_eq!(
            o.predicted_order(OrderWord::Ab).unwrap(),
            OrderPrediction::Finite(16)
        );
        assert_eq!(
            o.predicted_order(OrderWord::Ac).unwrap(),
            OrderPrediction::Finite(8)
        );
        assert_eq!(
            o.predicted_order(OrderWord::Ad).unwrap(),
            OrderPrediction::Finite(4)
        );
        // ω_1 = 0 branch for adac: o(ad_σω) with σω = (120), i_0(σω) = 3, ε = 1
        assert_eq!(
            o.predicted_order(OrderWord::Adac).unwrap(),
            OrderPrediction::Finite(16)
        );
    }

    #[test]
    fn predicted_orders_eventually_constant() {
        let o = om("2(0)");
        // i_0 = 2, σ²ω = 000... so ε_0 = 0
        assert_eq!(
            o.predicted_order(OrderWord::Ad).unwrap(),
            OrderPrediction::Finite(4)
        );
        assert_eq!(
            o.predicted_order(OrderWord::Ac).unwrap(),
            OrderPrediction::Infinite
        );
        // products consult orders over σω = (0); i_1, i_2 infinite there
        assert_eq!(
            o.predicted_order(OrderWord::Adab).unwrap(),
            OrderPrediction::NotApplicable
        );
    }
}
