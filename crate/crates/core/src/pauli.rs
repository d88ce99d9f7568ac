//! Binary-symplectic representation of Pauli strings.
//!
//! A Pauli string on `n` qubits is stored as an X-support bit vector, a
//! Z-support bit vector and a single sign bit. Position `q` is Y iff both
//! supports are set there. Only ±1 signs occur: the circuits in scope apply
//! H and CX conjugation to real Pauli strings.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::bits::BitVec;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PauliError {
    #[error("qubit count mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid Pauli character {0:?} (expected I, X, Y or Z)")]
    InvalidChar(char),
    #[error("empty Pauli string")]
    Empty,
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    x: BitVec,
    z: BitVec,
    /// true = overall minus sign
    negative: bool,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        assert!(n >= 1);
        PauliString {
            x: BitVec::zeros(n),
            z: BitVec::zeros(n),
            negative: false,
        }
    }

    pub fn from_parts(x: BitVec, z: BitVec, negative: bool) -> Self {
        assert_eq!(x.len(), z.len());
        assert!(!x.is_empty());
        PauliString { x, z, negative }
    }

    /// Single-qubit X on `q`.
    pub fn x_on(n: usize, q: usize) -> Self {
        let mut p = PauliString::identity(n);
        p.x.set(q, true);
        p
    }

    /// Single-qubit Z on `q`.
    pub fn z_on(n: usize, q: usize) -> Self {
        let mut p = PauliString::identity(n);
        p.z.set(q, true);
        p
    }

    pub fn from_supports(n: usize, xs: &[usize], zs: &[usize]) -> Self {
        let mut p = PauliString::identity(n);
        for &q in xs {
            p.x.set(q, true);
        }
        for &q in zs {
            p.z.set(q, true);
        }
        p
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.x.len()
    }

    #[inline]
    pub fn x_bits(&self) -> &BitVec {
        &self.x
    }

    #[inline]
    pub fn z_bits(&self) -> &BitVec {
        &self.z
    }

    #[inline]
    pub fn is_negative(&self) -> bool {
        self.negative
    }

    /// Number of non-identity positions.
    #[inline]
    pub fn weight(&self) -> usize {
        self.x.or_count_ones(&self.z)
    }

    #[inline]
    pub fn is_identity(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    #[inline]
    pub fn is_pure_x(&self) -> bool {
        self.z.is_zero()
    }

    #[inline]
    pub fn is_pure_z(&self) -> bool {
        self.x.is_zero()
    }

    /// Symplectic inner product test: true iff the operators commute.
    pub fn commutes(&self, other: &PauliString) -> Result<bool, PauliError> {
        if self.num_qubits() != other.num_qubits() {
            return Err(PauliError::LengthMismatch(
                self.num_qubits(),
                other.num_qubits(),
            ));
        }
        Ok(self.x.and_parity(&other.z) == self.z.and_parity(&other.x))
    }

    /// Group product on supports (bitwise XOR); the sign flips with the
    /// parity of self.z ∧ other.x overlaps. Phases ±i never arise for the
    /// real Pauli strings handled here.
    pub fn multiply(&self, other: &PauliString) -> Result<PauliString, PauliError> {
        if self.num_qubits() != other.num_qubits() {
            return Err(PauliError::LengthMismatch(
                self.num_qubits(),
                other.num_qubits(),
            ));
        }
        let mut x = self.x.clone();
        x.xor_assign(&other.x);
        let mut z = self.z.clone();
        z.xor_assign(&other.z);
        let negative = self.negative ^ other.negative ^ self.z.and_parity(&other.x);
        Ok(PauliString { x, z, negative })
    }

    /// Heisenberg update under H on `q`: X ↔ Z; a Y position flips the sign.
    pub fn apply_h(&mut self, q: usize) {
        let xb = self.x.get(q);
        let zb = self.z.get(q);
        if xb && zb {
            self.negative = !self.negative;
        }
        self.x.set(q, zb);
        self.z.set(q, xb);
    }

    /// Heisenberg update under CX(control, target):
    /// x_t ^= x_c, z_c ^= z_t, with the Aaronson–Gottesman sign rule.
    pub fn apply_cx(&mut self, control: usize, target: usize) {
        // X_c -> X_c X_t, Z_t -> Z_c Z_t; under the real-XZ phase
        // convention the reordering into X-before-Z form needs no
        // anticommutation swaps, so the sign never changes
        let xc = self.x.get(control);
        let zc = self.z.get(control);
        let xt = self.x.get(target);
        let zt = self.z.get(target);
        self.x.set(target, xt ^ xc);
        self.z.set(control, zc ^ zt);
    }

    /// 2n-bit symplectic row [x | z], signs dropped.
    pub fn symplectic_row(&self) -> BitVec {
        self.x.concat(&self.z)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negative {
            write!(f, "-")?;
        }
        for q in 0..self.num_qubits() {
            let c = match (self.x.get(q), self.z.get(q)) {
                (false, false) => 'I',
                (true, false) => 'X',
                (false, true) => 'Z',
                (true, true) => 'Y',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for PauliString {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<Self, PauliError> {
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        if body.is_empty() {
            return Err(PauliError::Empty);
        }
        let n = body.chars().count();
        let mut x = BitVec::zeros(n);
        let mut z = BitVec::zeros(n);
        for (q, c) in body.chars().enumerate() {
            match c {
                'I' => {}
                'X' => x.set(q, true),
                'Z' => z.set(q, true),
                'Y' => {
                    x.set(q, true);
                    z.set(q, true);
                }
                other => return Err(PauliError::InvalidChar(other)),
            }
        }
        Ok(PauliString { x, z, negative })
    }
}
