//! Packed GF(2) bit vectors and row reduction.
//!
//! Everything in the reward hot loop (support weights, commutation parities,
//! row XOR) operates word-parallel on `u64` limbs.

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    nbits: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(nbits: usize) -> Self {
        BitVec {
            nbits,
            words: vec![0; nbits.div_ceil(64)],
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nbits
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nbits == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.nbits);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, val: bool) {
        debug_assert!(i < self.nbits);
        let mask = 1u64 << (i % 64);
        if val {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    #[inline]
    pub fn xor_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.nbits, other.nbits);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Parity of popcount(self AND other); the symplectic overlap primitive.
    #[inline]
    pub fn and_parity(&self, other: &BitVec) -> bool {
        debug_assert_eq!(self.nbits, other.nbits);
        let mut acc = 0u64;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= a & b;
        }
        acc.count_ones() & 1 == 1
    }

    #[inline]
    pub fn or_count_ones(&self, other: &BitVec) -> usize {
        debug_assert_eq!(self.nbits, other.nbits);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    #[inline]
    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn first_one(&self) -> Option<usize> {
        for (i, &w) in self.words.iter().enumerate() {
            if w != 0 {
                return Some(i * 64 + w.trailing_zeros() as usize);
            }
        }
        None
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nbits).filter(|&i| self.get(i))
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Concatenate two bit vectors (used to form [x|z] symplectic rows).
    pub fn concat(&self, other: &BitVec) -> BitVec {
        let mut out = BitVec::zeros(self.nbits + other.nbits);
        for i in self.ones() {
            out.set(i, true);
        }
        for i in other.ones() {
            out.set(self.nbits + i, true);
        }
        out
    }

    pub fn slice(&self, start: usize, len: usize) -> BitVec {
        let mut out = BitVec::zeros(len);
        for i in 0..len {
            if self.get(start + i) {
                out.set(i, true);
            }
        }
        out
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.nbits {
            write!(f, "{}", self.get(i) as u8)?;
        }
        Ok(())
    }
}

/// Incremental GF(2) row basis with pivot bookkeeping.
///
/// Supports membership queries against the span, amortized across many
/// vectors once built.
#[derive(Clone, Debug)]
pub struct Gf2Basis {
    ncols: usize,
    rows: Vec<BitVec>,
    pivots: Vec<usize>,
}

impl Gf2Basis {
    pub fn new(ncols: usize) -> Self {
        Gf2Basis {
            ncols,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, v: &BitVec) -> BitVec {
        let mut v = v.clone();
        for (row, &piv) in self.rows.iter().zip(&self.pivots) {
            if v.get(piv) {
                v.xor_assign(row);
            }
        }
        v
    }

    /// Insert `v`; returns true if it enlarged the span.
    pub fn insert(&mut self, v: &BitVec) -> bool {
        debug_assert_eq!(v.len(), self.ncols);
        let r = self.reduce(v);
        match r.first_one() {
            None => false,
            Some(piv) => {
                self.rows.push(r);
                self.pivots.push(piv);
                true
            }
        }
    }

    #[inline]
    pub fn contains(&self, v: &BitVec) -> bool {
        self.reduce(v).is_zero()
    }
}

/// Reduced row-echelon form over GF(2). Zero rows are dropped; the result is
/// the unique RREF of the row space, so equal outputs imply equal spans.
pub fn rref(rows: &[BitVec]) -> Vec<BitVec> {
    let mut mat: Vec<BitVec> = rows.to_vec();
    let ncols = match mat.first() {
        Some(r) => r.len(),
        None => return Vec::new(),
    };
    let mut out: Vec<BitVec> = Vec::new();
    for col in 0..ncols {
        let Some(pos) = mat.iter().position(|r| r.get(col)) else {
            continue;
        };
        let pivot = mat.swap_remove(pos);
        for r in mat.iter_mut() {
            if r.get(col) {
                r.xor_assign(&pivot);
            }
        }
        for r in out.iter_mut() {
            if r.get(col) {
                r.xor_assign(&pivot);
            }
        }
        out.push(pivot);
        if mat.is_empty() {
            break;
        }
    }
    out
}
