//! Exact algebra of automorphisms of the binary rooted tree truncated at
//! depth `n`.
//!
//! An automorphism is stored as a *portrait*: one label per vertex above the
//! leaf level, each label either the identity or the swap of the two subtrees.
//! Labels are involutions, so one bit per vertex suffices. Vertices are
//! indexed breadth-first, level by level, lexicographically within a level.
//!
//! Words act on the right and composition is left-to-right:
//! `v^(fg) = (v^f)^g`.

use std::fmt;
use std::sync::OnceLock;
use thiserror::Error;

/// Hard cap on tree depth. Keeps leaf counts (`2^n`) and leaf images inside
/// `u16` with room to spare.
pub const MAX_DEPTH: u32 = 14;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeAutError {
    #[error("depth must be between 1 and {MAX_DEPTH}, got {0}")]
    BadDepth(u32),
    #[error("depth mismatch: {0} vs {1}")]
    DepthMismatch(u32, u32),
    #[error("vertex {vertex:?} does not fit in a depth-{depth} tree")]
    VertexTooDeep { vertex: String, depth: u32 },
    #[error("vertex word contains a symbol other than '0'/'1': {0:?}")]
    BadVertexSymbol(String),
    #[error("automorphism does not stabilise level {0}")]
    NotInStabilizer(u32),
    #[error("truncation level {level} out of range 1..={depth}")]
    BadTruncation { level: u32, depth: u32 },
    #[error("invalid portrait encoding: {0}")]
    BadEncoding(String),
}

/// A vertex of the binary tree: a finite word over `{0,1}`.
///
/// Stored as a packed integer plus length; the empty word is the root.
/// Lexicographic order on fixed-length words agrees with numeric order of
/// the packed value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    len: u32,
    bits: u32,
}

impl Vertex {
    pub const ROOT: Vertex = Vertex { len: 0, bits: 0 };

    pub fn parse(word: &str) -> Result<Vertex, TreeAutError> {
        if word.len() as u32 > MAX_DEPTH {
            return Err(TreeAutError::VertexTooDeep {
                vertex: word.to_string(),
                depth: MAX_DEPTH,
            });
        }
        let mut bits = 0u32;
        for ch in word.chars() {
            match ch {
                '0' => bits <<= 1,
                '1' => bits = (bits << 1) | 1,
                _ => return Err(TreeAutError::BadVertexSymbol(word.to_string())),
            }
        }
        Ok(Vertex {
            len: word.len() as u32,
            bits,
        })
    }

    pub fn from_index(len: u32, index: u32) -> Vertex {
        debug_assert!(len <= MAX_DEPTH && index < (1 << len));
        Vertex { len, bits: index }
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_root(&self) -> bool {
        self.len == 0
    }

    /// Index of this vertex within its level, in lexicographic order.
    pub fn index(&self) -> u32 {
        self.bits
    }

    /// Letter at 1-based position `i` (0 or 1).
    pub fn letter(&self, i: u32) -> u32 {
        debug_assert!(i >= 1 && i <= self.len);
        (self.bits >> (self.len - i)) & 1
    }

    pub fn child(&self, letter: u32) -> Vertex {
        Vertex {
            len: self.len + 1,
            bits: (self.bits << 1) | (letter & 1),
        }
    }

    /// The vertex `1^m` on the rightmost path.
    pub fn rightmost(m: u32) -> Vertex {
        Vertex {
            len: m,
            bits: (1u32 << m) - 1,
        }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 1..=self.len {
            write!(f, "{}", self.letter(i))?;
        }
        Ok(())
    }
}

/// An automorphism of the binary tree truncated at depth `n`.
///
/// Immutable after construction; the leaf permutation is computed lazily and
/// cached (compute-then-publish, idempotent).
#[derive(Debug, Clone)]
pub struct TreeAut {
    depth: u32,
    /// `2^depth - 1` label bits, breadth-first. Unused high bits are zero.
    bits: Box<[u64]>,
    leaf_perm: OnceLock<Box<[u16]>>,
}

impl PartialEq for TreeAut {
    fn eq(&self, other: &Self) -> bool {
        self.depth == other.depth && self.bits == other.bits
    }
}

impl Eq for TreeAut {}

impl std::hash::Hash for TreeAut {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.depth.hash(state);
        self.bits.hash(state);
    }
}

/// Bit position of vertex `v` at `level` in the breadth-first portrait.
#[inline]
fn portrait_index(level: u32, v: u32) -> usize {
    ((1usize << level) - 1) + v as usize
}

fn check_depth(n: u32) -> Result<(), TreeAutError> {
    if n == 0 || n > MAX_DEPTH {
        Err(TreeAutError::BadDepth(n))
    } else {
        Ok(())
    }
}

impl TreeAut {
    fn blank(depth: u32) -> TreeAut {
        let nbits = (1usize << depth) - 1;
        TreeAut {
            depth,
            bits: vec![0u64; nbits.div_ceil(64)].into_boxed_slice(),
            leaf_perm: OnceLock::new(),
        }
    }

    /// The identity automorphism at depth `n`.
    pub fn identity(n: u32) -> Result<TreeAut, TreeAutError> {
        check_depth(n)?;
        Ok(TreeAut::blank(n))
    }

    /// The rooted automorphism swapping the two maximal subtrees.
    pub fn rooted_swap(n: u32) -> Result<TreeAut, TreeAutError> {
        check_depth(n)?;
        let mut f = TreeAut::blank(n);
        f.set_label(0, 0, true);
        Ok(f)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Label at vertex `v` of `level`: `false` = identity, `true` = swap.
    #[inline]
    pub fn label(&self, level: u32, v: u32) -> bool {
        let i = portrait_index(level, v);
        (self.bits[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    fn set_label(&mut self, level: u32, v: u32, swap: bool) {
        let i = portrait_index(level, v);
        if swap {
            self.bits[i / 64] |= 1 << (i % 64);
        } else {
            self.bits[i / 64] &= !(1 << (i % 64));
        }
    }

    /// Build from an explicit label assignment `(level, vertex index) -> swap`.
    pub fn from_labels<F>(n: u32, mut label: F) -> Result<TreeAut, TreeAutError>
    where
        F: FnMut(u32, u32) -> bool,
    {
        check_depth(n)?;
        let mut f = TreeAut::blank(n);
        for level in 0..n {
            for v in 0..(1u32 << level) {
                if label(level, v) {
                    f.set_label(level, v, true);
                }
            }
        }
        Ok(f)
    }

    pub fn is_identity(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// Image of a vertex under this automorphism.
    pub fn apply(&self, v: &Vertex) -> Result<Vertex, TreeAutError> {
        if v.len() > self.depth {
            return Err(TreeAutError::VertexTooDeep {
                vertex: v.to_string(),
                depth: self.depth,
            });
        }
        let mut orig = 0u32;
        let mut img = 0u32;
        for i in 1..=v.len() {
            let x = v.letter(i);
            let xi = x ^ self.label(i - 1, orig) as u32;
            img = (img << 1) | xi;
            orig = (orig << 1) | x;
        }
        Ok(Vertex::from_index(v.len(), img))
    }

    /// Composition, applied left-to-right: `v^(self * g) = (v^self)^g`.
    pub fn compose(&self, g: &TreeAut) -> Result<TreeAut, TreeAutError> {
        if self.depth != g.depth {
            return Err(TreeAutError::DepthMismatch(self.depth, g.depth));
        }
        let n = self.depth;
        let mut out = TreeAut::blank(n);
        // img[v] = image of level-`level` vertex v under self
        let mut img: Vec<u32> = vec![0];
        for level in 0..n {
            let width = 1u32 << level;
            for v in 0..width {
                let bit = self.label(level, v) ^ g.label(level, img[v as usize]);
                if bit {
                    out.set_label(level, v, true);
                }
            }
            if level + 1 < n {
                let mut next = vec![0u32; (width as usize) * 2];
                for v in 0..width as usize {
                    let s = self.label(level, v as u32) as u32;
                    next[2 * v] = (img[v] << 1) | s;
                    next[2 * v + 1] = (img[v] << 1) | (1 ^ s);
                }
                img = next;
            }
        }
        Ok(out)
    }

    /// Inverse. Labels are involutions, so the inverse portrait is the same
    /// labels relocated along this automorphism's own action.
    pub fn inverse(&self) -> TreeAut {
        let n = self.depth;
        let mut out = TreeAut::blank(n);
        let mut img: Vec<u32> = vec![0];
        for level in 0..n {
            let width = 1u32 << level;
            for v in 0..width {
                if self.label(level, v) {
                    out.set_label(level, img[v as usize], true);
                }
            }
            if level + 1 < n {
                let mut next = vec![0u32; (width as usize) * 2];
                for v in 0..width as usize {
                    let s = self.label(level, v as u32) as u32;
                    next[2 * v] = (img[v] << 1) | s;
                    next[2 * v + 1] = (img[v] << 1) | (1 ^ s);
                }
                img = next;
            }
        }
        out
    }

    /// The section at vertex `v`: the automorphism of depth `n - |v|`
    /// satisfying `(vw)^f = v^f w^(f(v))`.
    pub fn section(&self, v: &Vertex) -> Result<TreeAut, TreeAutError> {
        if v.len() >= self.depth {
            return Err(TreeAutError::VertexTooDeep {
                vertex: v.to_string(),
                depth: self.depth,
            });
        }
        let m = self.depth - v.len();
        let mut out = TreeAut::blank(m);
        for level in 0..m {
            let base = v.index() << level;
            for w in 0..(1u32 << level) {
                if self.label(v.len() + level, base + w) {
                    out.set_label(level, w, true);
                }
            }
        }
        Ok(out)
    }

    /// The largest `k` such that every vertex at levels `<= k` is fixed
    /// (`n` for the identity, 0 if the root label swaps).
    pub fn stabilizer_level(&self) -> u32 {
        for level in 0..self.depth {
            for v in 0..(1u32 << level) {
                if self.label(level, v) {
                    return level;
                }
            }
        }
        self.depth
    }

    /// Sections at the `2^k` level-`k` vertices in lexicographic order.
    /// Requires the automorphism to fix level `k` pointwise.
    pub fn psi(&self, k: u32) -> Result<Vec<TreeAut>, TreeAutError> {
        if k >= self.depth {
            return Err(TreeAutError::BadTruncation {
                level: k,
                depth: self.depth,
            });
        }
        if self.stabilizer_level() < k {
            return Err(TreeAutError::NotInStabilizer(k));
        }
        (0..(1u32 << k))
            .map(|v| self.section(&Vertex::from_index(k, v)))
            .collect()
    }

    /// Reassemble an element of the level-`k` stabiliser from its sections.
    /// Inverse of `psi`.
    pub fn from_sections(k: u32, sections: &[TreeAut]) -> Result<TreeAut, TreeAutError> {
        if sections.is_empty() || sections.len() != 1 << k {
            return Err(TreeAutError::BadEncoding(format!(
                "expected {} sections, got {}",
                1u32 << k,
                sections.len()
            )));
        }
        let m = sections[0].depth;
        let n = k + m;
        check_depth(n)?;
        for s in sections {
            if s.depth != m {
                return Err(TreeAutError::DepthMismatch(m, s.depth));
            }
        }
        let mut out = TreeAut::blank(n);
        for (v, s) in sections.iter().enumerate() {
            for level in 0..m {
                for w in 0..(1u32 << level) {
                    if s.label(level, w) {
                        out.set_label(k + level, ((v as u32) << level) + w, true);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Image in the depth-`k` quotient: portrait restricted to levels
    /// `0..k-1`. A homomorphism.
    pub fn truncate(&self, k: u32) -> Result<TreeAut, TreeAutError> {
        if k == 0 || k > self.depth {
            return Err(TreeAutError::BadTruncation {
                level: k,
                depth: self.depth,
            });
        }
        let mut out = TreeAut::blank(k);
        for level in 0..k {
            for v in 0..(1u32 << level) {
                if self.label(level, v) {
                    out.set_label(level, v, true);
                }
            }
        }
        Ok(out)
    }

    /// The induced permutation of the `2^n` leaves, as an image table in
    /// lexicographic leaf order. Cached after first use.
    pub fn leaf_perm(&self) -> &[u16] {
        self.leaf_perm.get_or_init(|| {
            let n = self.depth;
            let mut img: Vec<u32> = vec![0];
            for level in 0..n {
                let width = 1usize << level;
                let mut next = vec![0u32; width * 2];
                for v in 0..width {
                    let s = self.label(level, v as u32) as u32;
                    next[2 * v] = (img[v] << 1) | s;
                    next[2 * v + 1] = (img[v] << 1) | (1 ^ s);
                }
                img = next;
            }
            img.into_iter().map(|x| x as u16).collect()
        })
    }

    /// Reconstruct the portrait from a leaf image table.
    pub fn from_leaf_perm(depth: u32, img: &[u16]) -> Result<TreeAut, TreeAutError> {
        check_depth(depth)?;
        if img.len() != 1 << depth {
            return Err(TreeAutError::BadEncoding(format!(
                "leaf table has {} entries, expected {}",
                img.len(),
                1u32 << depth
            )));
        }
        let mut out = TreeAut::blank(depth);
        for level in 0..depth {
            let block = 1u32 << (depth - level);
            for v in 0..(1u32 << level) {
                // first leaf of v's left child; its image decides the label
                let leaf = v * block;
                let bit = (img[leaf as usize] >> (depth - level - 1)) & 1;
                if bit == 1 {
                    out.set_label(level, v, true);
                }
            }
        }
        // a non-automorphism table would fail to round-trip
        if out.leaf_perm() != img {
            return Err(TreeAutError::BadEncoding(
                "leaf table is not induced by any portrait".to_string(),
            ));
        }
        Ok(out)
    }

    /// Canonical byte key: the leaf permutation packed as `2^n` entries of
    /// `n` bits each, in lexicographic leaf order, big-endian within the
    /// bit stream. Injective per depth; stable across runs and platforms.
    pub fn canonical_key(&self) -> Vec<u8> {
        let n = self.depth;
        let img = self.leaf_perm();
        let total_bits = (img.len() as u32) * n;
        let mut out = vec![0u8; total_bits.div_ceil(8) as usize];
        let mut pos = 0u32;
        for &x in img {
            for b in (0..n).rev() {
                if (x >> b) & 1 == 1 {
                    out[(pos / 8) as usize] |= 0x80 >> (pos % 8);
                }
                pos += 1;
            }
        }
        out
    }

    /// Least power of two `2^k` with `f^(2^k) = identity`, by repeated
    /// squaring of the leaf permutation. Valid because the ambient truncated
    /// automorphism group is a 2-group.
    pub fn order(&self) -> u64 {
        let mut cur: Vec<u16> = self.leaf_perm().to_vec();
        let mut ord = 1u64;
        while cur.iter().enumerate().any(|(i, &x)| i as u16 != x) {
            let sq: Vec<u16> = cur.iter().map(|&x| cur[x as usize]).collect();
            cur = sq;
            ord *= 2;
        }
        ord
    }

    /// Portrait serialization: `"n:hex"` where hex encodes the label bits of
    /// levels `0..n-1` concatenated breadth-first, left-padded to whole bytes.
    pub fn portrait_hex(&self) -> String {
        let n = self.depth;
        let nbits = (1usize << n) - 1;
        let nbytes = nbits.div_ceil(8);
        // left-pad: bit for portrait index i goes at position (pad + i) from the left
        let pad = nbytes * 8 - nbits;
        let mut bytes = vec![0u8; nbytes];
        for i in 0..nbits {
            if (self.bits[i / 64] >> (i % 64)) & 1 == 1 {
                let pos = pad + i;
                bytes[pos / 8] |= 0x80 >> (pos % 8);
            }
        }
        let mut s = format!("{n}:");
        for b in bytes {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    pub fn from_portrait_hex(text: &str) -> Result<TreeAut, TreeAutError> {
        let (depth_part, hex_part) = text
            .split_once(':')
            .ok_or_else(|| TreeAutError::BadEncoding(format!("missing ':' in {text:?}")))?;
        let n: u32 = depth_part
            .parse()
            .map_err(|_| TreeAutError::BadEncoding(format!("bad depth in {text:?}")))?;
        check_depth(n)?;
        let nbits = (1usize << n) - 1;
        let nbytes = nbits.div_ceil(8);
        if hex_part.len() != nbytes * 2 {
            return Err(TreeAutError::BadEncoding(format!(
                "expected {} hex digits for depth {n}, got {}",
                nbytes * 2,
                hex_part.len()
            )));
        }
        let mut bytes = Vec::with_capacity(nbytes);
        for i in 0..nbytes {
            let b = u8::from_str_radix(&hex_part[2 * i..2 * i + 2], 16)
                .map_err(|_| TreeAutError::BadEncoding(format!("bad hex in {text:?}")))?;
            bytes.push(b);
        }
        let pad = nbytes * 8 - nbits;
        let mut out = TreeAut::blank(n);
        for level in 0..n {
            for v in 0..(1u32 << level) {
                let i = portrait_index(level, v);
                let pos = pad + i;
                if (bytes[pos / 8] >> (7 - pos % 8)) & 1 == 1 {
                    out.set_label(level, v, true);
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Vertex {
        Vertex::parse(s).unwrap()
    }

    /// All 2^(2^n - 1) portraits at small depth.
    fn all_auts(n: u32) -> Vec<TreeAut> {
        let nbits = (1u32 << n) - 1;
        (0u32..(1 << nbits))
            .map(|mask| {
                TreeAut::from_labels(n, |level, vtx| {
                    (mask >> portrait_index(level, vtx)) & 1 == 1
                })
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn identity_fixes_vertices() {
        let id = TreeAut::identity(3).unwrap();
        assert_eq!(id.apply(&v("101")).unwrap(), v("101"));
        assert_eq!(id.stabilizer_level(), 3);
        assert!(TreeAut::identity(0).is_err());
    }

    #[test]
    fn rooted_swap_flips_first_letter() {
        let a = TreeAut::rooted_swap(2).unwrap();
        assert_eq!(a.apply(&v("01")).unwrap(), v("11"));
        let leaves: Vec<u16> = a.leaf_perm().to_vec();
        // 00↦10, 01↦11, 10↦00, 11↦01
        assert_eq!(leaves, vec![2, 3, 0, 1]);
        let a3 = TreeAut::rooted_swap(3).unwrap();
        assert!(a3.compose(&a3).unwrap().is_identity());
    }

    #[test]
    fn compose_neutral_and_inverse() {
        let a = TreeAut::rooted_swap(4).unwrap();
        let id = TreeAut::identity(4).unwrap();
        assert_eq!(id.compose(&a).unwrap(), a);
        assert_eq!(a.compose(&id).unwrap(), a);
        assert_eq!(a.inverse(), a);
        assert_eq!(id.inverse(), id);
        assert!(a.compose(&a.inverse()).unwrap().is_identity());
    }

    #[test]
    fn compose_depth_mismatch() {
        let a = TreeAut::rooted_swap(3).unwrap();
        let b = TreeAut::rooted_swap(4).unwrap();
        assert_eq!(
            a.compose(&b).unwrap_err(),
            TreeAutError::DepthMismatch(3, 4)
        );
    }

    #[test]
    fn compose_matches_leaf_permutation_composition() {
        // exhaustive at depth 3: portrait composition and leaf-permutation
        // composition agree
        let auts = all_auts(3);
        for f in auts.iter().step_by(7) {
            for g in auts.iter().step_by(5) {
                let h = f.compose(g).unwrap();
                let fp = f.leaf_perm();
                let gp = g.leaf_perm();
                let expect: Vec<u16> = fp.iter().map(|&x| gp[x as usize]).collect();
                assert_eq!(h.leaf_perm(), &expect[..]);
            }
        }
    }

    #[test]
    fn section_extraction() {
        let id = TreeAut::identity(5).unwrap();
        assert!(id.section(&v("10")).unwrap().is_identity());
        let a = TreeAut::rooted_swap(3).unwrap();
        assert!(a.section(&v("0")).unwrap().is_identity());
        assert!(a.section(&v("101")).is_err());
    }

    #[test]
    fn psi_requires_stabilizer() {
        let a = TreeAut::rooted_swap(3).unwrap();
        assert_eq!(a.psi(1).unwrap_err(), TreeAutError::NotInStabilizer(1));
        let id = TreeAut::identity(4).unwrap();
        let parts = id.psi(2).unwrap();
        assert_eq!(parts.len(), 4);
        assert!(parts.iter().all(|p| p.is_identity()));
    }

    #[test]
    fn psi_round_trip() {
        for f in all_auts(3) {
            if f.stabilizer_level() >= 1 {
                let parts = f.psi(1).unwrap();
                assert_eq!(TreeAut::from_sections(1, &parts).unwrap(), f);
            }
        }
    }

    #[test]
    fn truncate_is_restriction() {
        let a = TreeAut::rooted_swap(4).unwrap();
        assert_eq!(a.truncate(4).unwrap(), a);
        assert_eq!(a.truncate(1).unwrap(), TreeAut::rooted_swap(1).unwrap());
        assert!(a.truncate(0).is_err());
        assert!(a.truncate(5).is_err());
    }

    #[test]
    fn canonical_key_small_cases() {
        // identity(2): leaves (00,01,10,11) = images 0,1,2,3 in 2-bit fields
        assert_eq!(TreeAut::identity(2).unwrap().canonical_key(), vec![0x1b]);
        // rooted_swap(2): images 2,3,0,1
        assert_eq!(
            TreeAut::rooted_swap(2).unwrap().canonical_key(),
            vec![0xb1]
        );
    }

    #[test]
    fn key_faithful_exhaustive_depth3() {
        let auts = all_auts(3);
        let mut seen = std::collections::HashSet::new();
        for f in &auts {
            assert!(seen.insert(f.canonical_key()), "key collision");
        }
        assert_eq!(seen.len(), 128);
    }

    #[test]
    fn leaf_perm_round_trip() {
        for f in all_auts(3) {
            let back = TreeAut::from_leaf_perm(3, f.leaf_perm()).unwrap();
            assert_eq!(back, f);
        }
    }

    #[test]
    fn portrait_hex_round_trip() {
        for f in all_auts(3) {
            let s = f.portrait_hex();
            assert!(s.starts_with("3:"));
            assert_eq!(TreeAut::from_portrait_hex(&s).unwrap(), f);
        }
        assert!(TreeAut::from_portrait_hex("3:zz").is_err());
        assert!(TreeAut::from_portrait_hex("junk").is_err());
    }

    #[test]
    fn order_of_swap() {
        assert_eq!(TreeAut::rooted_swap(5).unwrap().order(), 2);
        assert_eq!(TreeAut::identity(5).unwrap().order(), 1);
    }
}
