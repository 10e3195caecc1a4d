//! Exact finite-group computations over tree automorphisms of a fixed depth:
//! breadth-first closure, element orders, conjugacy orbits, normal closures,
//! derived subgroup, exponent, and the semi-abelian witness search.
//!
//! Internally elements are leaf permutations (`Perm`), which compose in
//! `O(2^n)` and deduplicate by content. The portrait view is recovered
//! through `TreeAut::from_leaf_perm` when needed.

use crate::treeauto::{TreeAut, TreeAutError};
use rand::Rng;
use serde::Serialize;
use std::collections::{HashMap, HashSet};
use std::time::Instant;
use thiserror::Error;

/// Resource caps for enumerations and orbit searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_elements: u64,
    pub max_bytes: u64,
    pub max_millis: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_elements: 1 << 23,
            max_bytes: 2 << 30,
            max_millis: 10 * 60 * 1000,
        }
    }
}

/// A cap was hit. Not a failure: callers downgrade to certified strategies.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("budget exceeded ({what}) after {partial_count} elements")]
pub struct CapExceeded {
    pub what: &'static str,
    pub partial_count: u64,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Cap(#[from] CapExceeded),
    #[error(transparent)]
    Tree(#[from] TreeAutError),
    #[error("generators must share a depth")]
    MixedDepths,
    #[error("empty generating set")]
    NoGenerators,
}

/// An element of the symmetric group on the `2^n` leaves, as an image table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm(Box<[u16]>);

impl Perm {
    pub fn identity(n_leaves: usize) -> Perm {
        Perm((0..n_leaves as u16).collect())
    }

    pub fn from_aut(f: &TreeAut) -> Perm {
        Perm(f.leaf_perm().to_vec().into_boxed_slice())
    }

    pub fn to_aut(&self, depth: u32) -> Result<TreeAut, TreeAutError> {
        TreeAut::from_leaf_perm(depth, &self.0)
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &x)| i as u16 == x)
    }

    /// Left-to-right composition: `(self * g)(i) = g(self(i))`.
    pub fn compose(&self, g: &Perm) -> Perm {
        Perm(self.0.iter().map(|&x| g.0[x as usize]).collect())
    }

    pub fn inverse(&self) -> Perm {
        let mut out = vec![0u16; self.0.len()];
        for (i, &x) in self.0.iter().enumerate() {
            out[x as usize] = i as u16;
        }
        Perm(out.into_boxed_slice())
    }

    /// `g^-1 * self * g`.
    pub fn conjugate_by(&self, g: &Perm) -> Perm {
        g.inverse().compose(self).compose(g)
    }

    pub fn pow(&self, mut e: u64) -> Perm {
        let mut base = self.clone();
        let mut acc = Perm::identity(self.0.len());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base);
            }
            base = base.compose(&base);
            e >>= 1;
        }
        acc
    }

    /// Least `2^k` with `self^(2^k)` trivial. Only valid in 2-groups.
    pub fn order(&self) -> u64 {
        let mut cur = self.clone();
        let mut ord = 1u64;
        while !cur.is_identity() {
            cur = cur.compose(&cur);
            ord *= 2;
        }
        ord
    }

    /// Largest `k` such that every vertex at levels `<= k` is fixed, read
    /// off the leaf images (`depth` for the identity).
    pub fn stabilizer_level(&self, depth: u32) -> u32 {
        let mut level = depth;
        for (i, &x) in self.0.iter().enumerate() {
            let diff = (i as u16) ^ x;
            if diff != 0 {
                // common prefix length of i and its image
                let k = depth - (16 - diff.leading_zeros());
                level = level.min(k);
            }
        }
        level
    }

    /// Sorted cycle lengths of the leaf action. Invariant under conjugation
    /// in the full symmetric group, hence a sound non-conjugacy certificate.
    pub fn cycle_type(&self) -> Vec<u32> {
        let mut seen = vec![false; self.0.len()];
        let mut cycles = Vec::new();
        for start in 0..self.0.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0u32;
            let mut cur = start;
            while !seen[cur] {
                seen[cur] = true;
                cur = self.0[cur] as usize;
                len += 1;
            }
            cycles.push(len);
        }
        cycles.sort_unstable();
        cycles
    }
}

fn check_gens(gens: &[Perm]) -> Result<usize, EngineError> {
    let first = gens.first().ok_or(EngineError::NoGenerators)?;
    if gens.iter().any(|g| g.degree() != first.degree()) {
        return Err(EngineError::MixedDepths);
    }
    Ok(first.degree())
}

struct BudgetGuard {
    budget: Budget,
    started: Instant,
    bytes_per_element: u64,
}

impl BudgetGuard {
    fn new(budget: Budget, degree: usize) -> BudgetGuard {
        BudgetGuard {
            budget,
            started: Instant::now(),
            // image table + box + hash-set slot, rough
            bytes_per_element: 2 * degree as u64 + 48,
        }
    }

    fn check(&self, count: u64) -> Result<(), CapExceeded> {
        if count > self.budget.max_elements {
            return Err(CapExceeded {
                what: "max_elements",
                partial_count: count,
            });
        }
        if count * self.bytes_per_element > self.budget.max_bytes {
            return Err(CapExceeded {
                what: "max_bytes",
                partial_count: count,
            });
        }
        if self.started.elapsed().as_millis() as u64 > self.budget.max_millis {
            return Err(CapExceeded {
                what: "max_millis",
                partial_count: count,
            });
        }
        Ok(())
    }
}

/// The full element set of `<gens>` by breadth-first closure. The result is
/// a set, independent of traversal order.
pub fn enumerate(gens: &[Perm], budget: Budget) -> Result<HashSet<Perm>, EngineError> {
    let degree = check_gens(gens)?;
    let guard = BudgetGuard::new(budget, degree);
    let mut seen: HashSet<Perm> = HashSet::new();
    let id = Perm::identity(degree);
    seen.insert(id.clone());
    let mut frontier = vec![id];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for e in &frontier {
            for g in gens {
                let h = e.compose(g);
                if !seen.contains(&h) {
                    seen.insert(h.clone());
                    next.push(h);
                }
            }
        }
        guard.check(seen.len() as u64)?;
        frontier = next;
    }
    Ok(seen)
}

/// Orbit of `x` under conjugation by the generating set; equals the full
/// conjugacy class of `x` in `<gens>`.
pub fn conjugacy_class(
    x: &Perm,
    gens: &[Perm],
    budget: Budget,
) -> Result<HashSet<Perm>, EngineError> {
    let degree = check_gens(gens)?;
    let guard = BudgetGuard::new(budget, degree);
    let inv: Vec<Perm> = gens.iter().map(Perm::inverse).collect();
    let mut seen: HashSet<Perm> = HashSet::new();
    seen.insert(x.clone());
    let mut frontier = vec![x.clone()];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for e in &frontier {
            for (g, gi) in gens.iter().zip(&inv) {
                let h = gi.compose(e).compose(g);
                if !seen.contains(&h) {
                    seen.insert(h.clone());
                    next.push(h);
                }
            }
        }
        guard.check(seen.len() as u64)?;
        frontier = next;
    }
    Ok(seen)
}

/// Verdict of the conjugacy decision ladder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict")]
pub enum ConjVerdict {
    /// `y = x^w` for the returned conjugator word over the generator labels.
    #[serde(rename = "yes")]
    Yes { witness: String },
    #[serde(rename = "no")]
    No { certificate: Certificate },
    #[serde(rename = "inconclusive")]
    Inconclusive { reason: String },
}

/// Evidence for a `No`: each rung is invariant under conjugation, so a
/// mismatch separates the classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Certificate {
    #[serde(rename = "order")]
    OrderMismatch { x: u64, y: u64 },
    #[serde(rename = "stabilizer-level")]
    StabilizerLevel { x: u32, y: u32 },
    #[serde(rename = "cycle-type")]
    CycleType,
    /// The recursive conjugacy invariant of the full truncated automorphism
    /// group separates the two elements.
    #[serde(rename = "tree-shape")]
    TreeShape,
    /// Images in the depth-`level` quotient are not conjugate there.
    #[serde(rename = "truncation")]
    Truncation { level: u32 },
    /// The full conjugacy orbit of `x` was enumerated and does not meet `y`.
    #[serde(rename = "orbit")]
    OrbitExhausted { class_size: u64 },
}

/// Canonical form of the conjugacy class of `f` in the full automorphism
/// group of the truncated tree.
///
/// For an inactive root the class is the unordered pair of the classes of
/// the two sections; for an active root it is the class of the product of
/// the sections. Elements of a subgroup that are non-conjugate in the full
/// group are non-conjugate in the subgroup.
pub fn aut_class_shape(f: &TreeAut) -> String {
    fn go(f: &TreeAut) -> String {
        if f.depth() == 1 {
            return if f.label(0, 0) { "s".into() } else { "e".into() };
        }
        let zero = crate::treeauto::Vertex::parse("0").unwrap();
        let one = crate::treeauto::Vertex::parse("1").unwrap();
        let s0 = f.section(&zero).unwrap();
        let s1 = f.section(&one).unwrap();
        if f.label(0, 0) {
            format!("s[{}]", go(&s0.compose(&s1).unwrap()))
        } else {
            let (a, b) = {
                let a = go(&s0);
                let b = go(&s1);
                if a <= b { (a, b) } else { (b, a) }
            };
            format!("({a},{b})")
        }
    }
    go(f)
}

/// Tuning for `are_conjugate`.
#[derive(Debug, Clone, Copy)]
pub struct ConjStrategy {
    /// Highest quotient depth tried in the truncation rung.
    pub k_max: u32,
    pub budget: Budget,
}

impl Default for ConjStrategy {
    fn default() -> Self {
        ConjStrategy {
            k_max: 4,
            budget: Budget::default(),
        }
    }
}

/// Decide whether `x` and `y` are conjugate in the group generated by the
/// labelled generators, by a ladder of sound tests:
/// order, stabiliser level, cycle type, tree shape, conjugacy of truncated
/// images in small quotients, and finally an exact orbit search.
pub fn are_conjugate(
    x: &TreeAut,
    y: &TreeAut,
    gens: &[(char, TreeAut)],
    strategy: &ConjStrategy,
) -> Result<ConjVerdict, EngineError> {
    let depth = x.depth();
    let (ox, oy) = (x.order(), y.order());
    if ox != oy {
        return Ok(ConjVerdict::No {
            certificate: Certificate::OrderMismatch { x: ox, y: oy },
        });
    }
    let (lx, ly) = (x.stabilizer_level(), y.stabilizer_level());
    if lx != ly {
        return Ok(ConjVerdict::No {
            certificate: Certificate::StabilizerLevel { x: lx, y: ly },
        });
    }
    let (px, py) = (Perm::from_aut(x), Perm::from_aut(y));
    if px == py {
        return Ok(ConjVerdict::Yes {
            witness: String::new(),
        });
    }
    if px.cycle_type() != py.cycle_type() {
        return Ok(ConjVerdict::No {
            certificate: Certificate::CycleType,
        });
    }
    if aut_class_shape(x) != aut_class_shape(y) {
        return Ok(ConjVerdict::No {
            certificate: Certificate::TreeShape,
        });
    }
    // truncation ladder: non-conjugate images in a quotient separate the
    // originals, because truncation is a homomorphism
    for k in 1..=strategy.k_max.min(depth.saturating_sub(1)) {
        let xk = Perm::from_aut(&x.truncate(k)?);
        let yk = Perm::from_aut(&y.truncate(k)?);
        if xk == yk {
            continue;
        }
        let gk: Vec<Perm> = gens
            .iter()
            .map(|(_, g)| Ok(Perm::from_aut(&g.truncate(k)?)))
            .collect::<Result<_, TreeAutError>>()?;
        match conjugacy_class(&xk, &gk, strategy.budget) {
            Ok(class) => {
                if !class.contains(&yk) {
                    return Ok(ConjVerdict::No {
                        certificate: Certificate::Truncation { level: k },
                    });
                }
            }
            Err(EngineError::Cap(_)) => break,
            Err(e) => return Err(e),
        }
    }
    // exact orbit search with witness words
    let gperms: Vec<Perm> = gens.iter().map(|(_, g)| Perm::from_aut(g)).collect();
    let ginv: Vec<Perm> = gperms.iter().map(Perm::inverse).collect();
    let guard = BudgetGuard::new(strategy.budget, px.degree());
    // orbit element -> (parent, generator index); identity word at the root
    let mut seen: HashMap<Perm, Option<(Perm, usize)>> = HashMap::new();
    seen.insert(px.clone(), None);
    let mut frontier = vec![px.clone()];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for e in &frontier {
            for (i, (g, gi)) in gperms.iter().zip(&ginv).enumerate() {
                let h = gi.compose(e).compose(g);
                if !seen.contains_key(&h) {
                    seen.insert(h.clone(), Some((e.clone(), i)));
                    if h == py {
                        let mut word = String::new();
                        let mut cur = &h;
                        while let Some(Some((parent, gidx))) = seen.get(cur) {
                            word.insert(0, gens[*gidx].0);
                            cur = parent;
                        }
                        return Ok(ConjVerdict::Yes { witness: word });
                    }
                    next.push(h);
                }
            }
        }
        if let Err(cap) = guard.check(seen.len() as u64) {
            return Ok(ConjVerdict::Inconclusive {
                reason: cap.to_string(),
            });
        }
        frontier = next;
    }
    Ok(ConjVerdict::No {
        certificate: Certificate::OrbitExhausted {
            class_size: seen.len() as u64,
        },
    })
}

/// Smallest subgroup containing `seed` that is normal in `<gens>`.
///
/// Closure of the identity under right-multiplication by seed elements and
/// their inverses, and conjugation by generators. Both move sets preserve
/// the normal closure, and together they reach all of it.
pub fn normal_closure(
    seed: &[Perm],
    gens: &[Perm],
    budget: Budget,
) -> Result<HashSet<Perm>, EngineError> {
    let degree = check_gens(gens)?;
    let guard = BudgetGuard::new(budget, degree);
    let mut mults: Vec<Perm> = Vec::new();
    for s in seed {
        if !mults.contains(s) {
            mults.push(s.clone());
        }
        let si = s.inverse();
        if !mults.contains(&si) {
            mults.push(si);
        }
    }
    let inv: Vec<Perm> = gens.iter().map(Perm::inverse).collect();
    let id = Perm::identity(degree);
    let mut seen: HashSet<Perm> = HashSet::new();
    seen.insert(id.clone());
    let mut frontier = vec![id];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for e in &frontier {
            for m in &mults {
                let h = e.compose(m);
                if !seen.contains(&h) {
                    seen.insert(h.clone());
                    next.push(h);
                }
            }
            for (g, gi) in gens.iter().zip(&inv) {
                let h = gi.compose(e).compose(g);
                if !seen.contains(&h) {
                    seen.insert(h.clone());
                    next.push(h);
                }
            }
        }
        guard.check(seen.len() as u64)?;
        frontier = next;
    }
    Ok(seen)
}

/// The commutator subgroup of `<gens>`: normal closure of the pairwise
/// generator commutators.
pub fn derived_subgroup(gens: &[Perm], budget: Budget) -> Result<HashSet<Perm>, EngineError> {
    check_gens(gens)?;
    let mut seed = Vec::new();
    for (i, g) in gens.iter().enumerate() {
        for h in gens.iter().skip(i + 1) {
            let comm = g
                .inverse()
                .compose(&h.inverse())
                .compose(g)
                .compose(h);
            if !comm.is_identity() && !seed.contains(&comm) {
                seed.push(comm);
            }
        }
    }
    if seed.is_empty() {
        let degree = gens[0].degree();
        let mut out = HashSet::new();
        out.insert(Perm::identity(degree));
        return Ok(out);
    }
    normal_closure(&seed, gens, budget)
}

/// Maximum element order over an enumerated element set.
pub fn exponent<'a>(elements: impl IntoIterator<Item = &'a Perm>) -> u64 {
    elements.into_iter().map(Perm::order).max().unwrap_or(1)
}

/// Which direction of the semi-abelian biconditional fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolatedDirection {
    /// `x^q = y^q` but `(x y^-1)^q != e`.
    #[serde(rename = "equal-powers-nontrivial-quotient")]
    EqualPowers,
    /// `(x y^-1)^q = e` but `x^q != y^q`.
    #[serde(rename = "trivial-quotient-unequal-powers")]
    TrivialQuotient,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemiAbelianWitness {
    pub x: Perm,
    pub y: Perm,
    pub direction: ViolatedDirection,
}

fn violates(x: &Perm, y: &Perm, q: u64) -> Option<ViolatedDirection> {
    let powers_equal = x.pow(q) == y.pow(q);
    let quotient_trivial = x.compose(&y.inverse()).pow(q).is_identity();
    match (powers_equal, quotient_trivial) {
        (true, false) => Some(ViolatedDirection::EqualPowers),
        (false, true) => Some(ViolatedDirection::TrivialQuotient),
        _ => None,
    }
}

/// Exhaustive search for a pair violating semi-`2^(e-1)`-abelianity, over a
/// fully enumerated group of exponent `2^e`.
pub fn semi_abelian_witness_exhaustive(
    elements: &HashSet<Perm>,
    exponent: u64,
) -> Option<SemiAbelianWitness> {
    let q = exponent / 2;
    let mut sorted: Vec<&Perm> = elements.iter().collect();
    sorted.sort();
    for x in &sorted {
        for y in &sorted {
            if let Some(direction) = violates(x, y, q) {
                return Some(SemiAbelianWitness {
                    x: (*x).clone(),
                    y: (*y).clone(),
                    direction,
                });
            }
        }
    }
    None
}

/// Randomized witness search over words in the generators; for groups too
/// large to enumerate. Samples words of bounded length.
pub fn semi_abelian_witness_randomized(
    gens: &[Perm],
    exponent: u64,
    trials: u64,
    rng: &mut impl Rng,
) -> Result<Option<SemiAbelianWitness>, EngineError> {
    let degree = check_gens(gens)?;
    let q = exponent / 2;
    let word_len = 24;
    let random_element = |rng: &mut dyn rand::RngCore| {
        let mut e = Perm::identity(degree);
        let len = 1 + (rng.next_u32() as usize) % word_len;
        for _ in 0..len {
            let i = (rng.next_u32() as usize) % gens.len();
            e = e.compose(&gens[i]);
        }
        e
    };
    for _ in 0..trials {
        let x = random_element(rng);
        let y = random_element(rng);
        if let Some(direction) = violates(&x, &y, q) {
            return Ok(Some(SemiAbelianWitness { x, y, direction }));
        }
    }
    Ok(None)
}

/// Element-set dump: header line with the ω-spec, depth and count, then one
/// canonical key per line, lowercase hex, sorted.
pub fn dump_element_set(
    omega_spec: &str,
    depth: u32,
    elements: &HashSet<Perm>,
) -> Result<String, TreeAutError> {
    let mut keys: Vec<String> = elements
        .iter()
        .map(|p| {
            let aut = p.to_aut(depth)?;
            Ok(aut
                .canonical_key()
                .iter()
                .map(|b| format!("{b:02x}"))
                .collect::<String>())
        })
        .collect::<Result<_, TreeAutError>>()?;
    keys.sort();
    let mut out = format!("# omega={omega_spec} depth={depth} count={}\n", keys.len());
    for k in keys {
        out.push_str(&k);
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::omega::OmegaSeq;

    fn gens_at(spec: &str, n: u32) -> Vec<Perm> {
        let o = OmegaSeq::parse(spec).unwrap();
        o.generators(n)
            .unwrap()
            .iter()
            .map(|(_, g)| Perm::from_aut(g))
            .collect()
    }

    fn labelled_gens(spec: &str, n: u32) -> Vec<(char, TreeAut)> {
        OmegaSeq::parse(spec).unwrap().generators(n).unwrap()
    }

    #[test]
    fn enumerate_small_quotients() {
        // at depth 1, b, c, d truncate to the identity
        let g1 = enumerate(&gens_at("(012)", 1), Budget::default()).unwrap();
        assert_eq!(g1.len(), 2);
        let g2 = enumerate(&gens_at("(012)", 2), Budget::default()).unwrap();
        assert_eq!(g2.len(), 8);
        let g3 = enumerate(&gens_at("(012)", 3), Budget::default()).unwrap();
        assert_eq!(g3.len(), 128);
        // |G(n)| divides |Aut T_[n]| = 2^(2^n - 1)
        assert_eq!((1u64 << 7) % g3.len() as u64, 0);
    }

    #[test]
    fn enumerate_cap() {
        let budget = Budget {
            max_elements: 100,
            ..Budget::default()
        };
        match enumerate(&gens_at("(012)", 4), budget) {
            Err(EngineError::Cap(cap)) => assert!(cap.partial_count > 100),
            other => panic!("expected cap, got {other:?}"),
        }
    }

    #[test]
    fn order_of_generators_and_words() {
        let o = OmegaSeq::parse("(012)").unwrap();
        assert_eq!(Perm::from_aut(&o.generator('a', 5).unwrap()).order(), 2);
        assert!(Perm::identity(8).order() == 1);
        let ab = o.word("ab", 5).unwrap();
        assert_eq!(Perm::from_aut(&ab).order(), 16);
    }

    #[test]
    fn conjugacy_class_basics() {
        let gens = gens_at("(012)", 3);
        let id = Perm::identity(8);
        let class = conjugacy_class(&id, &gens, Budget::default()).unwrap();
        assert_eq!(class.len(), 1);
        // class is conjugation invariant
        let o = OmegaSeq::parse("(012)").unwrap();
        let a = Perm::from_aut(&o.generator('a', 3).unwrap());
        let b = Perm::from_aut(&o.generator('b', 3).unwrap());
        let class_a = conjugacy_class(&a, &gens, Budget::default()).unwrap();
        let class_conj = conjugacy_class(&a.conjugate_by(&b), &gens, Budget::default()).unwrap();
        assert_eq!(class_a, class_conj);
        assert!(class_a.contains(&a));
    }

    #[test]
    fn are_conjugate_ladder() {
        let gens = labelled_gens("(012)", 4);
        let o = OmegaSeq::parse("(012)").unwrap();
        let a = o.generator('a', 4).unwrap();
        let b = o.generator('b', 4).unwrap();
        // stabilizer levels 0 vs 1
        match are_conjugate(&a, &b, &gens, &ConjStrategy::default()).unwrap() {
            ConjVerdict::No {
                certificate: Certificate::StabilizerLevel { x: 0, y: 1 },
            } => {}
            other => panic!("expected stabilizer-level certificate, got {other:?}"),
        }
        // x vs a conjugate of x
        let g = o.word("abd", 4).unwrap();
        let conj = g.inverse().compose(&b).unwrap().compose(&g).unwrap();
        match are_conjugate(&b, &conj, &gens, &ConjStrategy::default()).unwrap() {
            ConjVerdict::Yes { .. } => {}
            other => panic!("expected yes, got {other:?}"),
        }
    }

    #[test]
    fn conjugacy_witness_is_checked() {
        let gens = labelled_gens("1(02)", 4);
        let o = OmegaSeq::parse("1(02)").unwrap();
        let x = o.word("ab", 4).unwrap();
        let g = o.word("dca", 4).unwrap();
        let y = g.inverse().compose(&x).unwrap().compose(&g).unwrap();
        match are_conjugate(&x, &y, &gens, &ConjStrategy::default()).unwrap() {
            ConjVerdict::Yes { witness } => {
                let w = o.word(&witness, 4).unwrap();
                let expect = w.inverse().compose(&x).unwrap().compose(&w).unwrap();
                assert_eq!(expect, y, "witness word must conjugate x to y");
            }
            other => panic!("expected yes, got {other:?}"),
        }
    }

    #[test]
    fn normal_closure_properties() {
        let gens = gens_at("(012)", 4);
        let id = Perm::identity(16);
        let trivial = normal_closure(&[id.clone()], &gens, Budget::default()).unwrap();
        assert_eq!(trivial.len(), 1);
        let o = OmegaSeq::parse("(012)").unwrap();
        let b = Perm::from_aut(&o.generator('b', 4).unwrap());
        let nc = normal_closure(&[b.clone()], &gens, Budget::default()).unwrap();
        assert!(nc.contains(&b) && nc.contains(&id));
        // conjugation closed
        for g in &gens {
            for e in nc.iter().take(50) {
                assert!(nc.contains(&e.conjugate_by(g)));
            }
        }
        // subgroup: closed under composition (spot check)
        let sample: Vec<&Perm> = nc.iter().take(20).collect();
        for x in &sample {
            for y in &sample {
                assert!(nc.contains(&x.compose(y)));
            }
        }
    }

    #[test]
    fn derived_subgroup_abelian_is_trivial() {
        // <a> at depth 3 is abelian
        let a = Perm::from_aut(&TreeAut::rooted_swap(3).unwrap());
        let d = derived_subgroup(&[a], Budget::default()).unwrap();
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn derived_subgroup_index_eight() {
        for spec in ["(012)", "2(0)"] {
            let gens = gens_at(spec, 4);
            let g = enumerate(&gens, Budget::default()).unwrap();
            let d = derived_subgroup(&gens, Budget::default()).unwrap();
            assert_eq!(g.len() / d.len(), 8, "index of G' in G(4) for {spec}");
        }
    }

    #[test]
    fn exponent_small() {
        let g1 = enumerate(&gens_at("(012)", 1), Budget::default()).unwrap();
        assert_eq!(exponent(&g1), 2);
        let g3 = enumerate(&gens_at("(012)", 3), Budget::default()).unwrap();
        let o = OmegaSeq::parse("(012)").unwrap();
        let ab = Perm::from_aut(&o.word("ab", 3).unwrap());
        assert!(exponent(&g3) >= ab.order());
    }

    #[test]
    fn semi_abelian_abelian_group_has_no_witness() {
        // C2 x C2 as leaf permutations at depth 2: generated by the two
        // level-1 swaps
        let f = |hi: bool, lo: bool| {
            TreeAut::from_labels(2, |level, v| {
                level == 1 && ((v == 0 && hi) || (v == 1 && lo))
            })
            .unwrap()
        };
        let gens = vec![Perm::from_aut(&f(true, false)), Perm::from_aut(&f(false, true))];
        let g = enumerate(&gens, Budget::default()).unwrap();
        assert_eq!(g.len(), 4);
        let e = exponent(&g);
        assert_eq!(e, 2);
        assert!(semi_abelian_witness_exhaustive(&g, e).is_none());
    }

    #[test]
    fn dump_format() {
        let gens = gens_at("(012)", 2);
        let g = enumerate(&gens, Budget::default()).unwrap();
        let dump = dump_element_set("(012)", 2, &g).unwrap();
        let mut lines = dump.lines();
        assert_eq!(lines.next().unwrap(), "# omega=(012) depth=2 count=8");
        let keys: Vec<&str> = lines.collect();
        assert_eq!(keys.len(), 8);
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }
}
