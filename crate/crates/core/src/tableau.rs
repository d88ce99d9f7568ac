//! Stabilizer tableau: (n−k) generator rows evolved under H and CX in the
//! Heisenberg picture, canonicalization and the RL observation encoding.

use thiserror::Error;

use crate::bits::{rref, BitVec, Gf2Basis};
use crate::pauli::PauliString;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TableauError {
    #[error("qubit index {0} out of range for {1} qubits")]
    QubitOutOfRange(usize, usize),
    #[error("control and target coincide ({0})")]
    ControlEqualsTarget(usize),
    #[error("row {0} has wrong qubit count")]
    RowLengthMismatch(usize),
    #[error("rows {0} and {1} anticommute")]
    NonCommutingRows(usize, usize),
    #[error("rows are GF(2)-linearly dependent")]
    DependentRows,
    #[error("expected {expected} rows for n={n}, k={k}, got {got}")]
    WrongRowCount {
        n: usize,
        k: usize,
        expected: usize,
        got: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservationMode {
    Raw,
    Canonical,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilizerTableau {
    n: usize,
    k: usize,
    rows: Vec<PauliString>,
}

impl StabilizerTableau {
    /// Build a tableau from generator rows, validating pairwise commutation
    /// and GF(2) independence.
    pub fn new(n: usize, k: usize, rows: Vec<PauliString>) -> Result<Self, TableauError> {
        if rows.len() != n - k {
            return Err(TableauError::WrongRowCount {
                n,
                k,
                expected: n - k,
                got: rows.len(),
            });
        }
        for (i, r) in rows.iter().enumerate() {
            if r.num_qubits() != n {
                return Err(TableauError::RowLengthMismatch(i));
            }
        }
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                if !rows[i].commutes(&rows[j]).expect("lengths checked") {
                    return Err(TableauError::NonCommutingRows(i, j));
                }
            }
        }
        let mut basis = Gf2Basis::new(2 * n);
        for r in &rows {
            if !basis.insert(&r.symplectic_row()) {
                return Err(TableauError::DependentRows);
            }
        }
        Ok(StabilizerTableau { n, k, rows })
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn num_logical(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn rows(&self) -> &[PauliString] {
        &self.rows
    }

    pub fn apply_h(&mut self, q: usize) -> Result<(), TableauError> {
        if q >= self.n {
            return Err(TableauError::QubitOutOfRange(q, self.n));
        }
        for row in &mut self.rows {
            row.apply_h(q);
        }
        Ok(())
    }

    pub fn apply_cx(&mut self, control: usize, target: usize) -> Result<(), TableauError> {
        if control == target {
            return Err(TableauError::ControlEqualsTarget(control));
        }
        if control >= self.n {
            return Err(TableauError::QubitOutOfRange(control, self.n));
        }
        if target >= self.n {
            return Err(TableauError::QubitOutOfRange(target, self.n));
        }
        for row in &mut self.rows {
            row.apply_cx(control, target);
        }
        Ok(())
    }

    /// True iff every row is pure X-type or pure Z-type.
    pub fn is_css(&self) -> bool {
        self.rows.iter().all(|r| r.is_pure_x() || r.is_pure_z())
    }

    /// Unique GF(2) RREF of the (n−k)×2n row matrix, X columns first, signs
    /// dropped. Equal canonical forms imply identical stabilizer groups up
    /// to signs.
    pub fn canonical_form(&self) -> Vec<BitVec> {
        let rows: Vec<BitVec> = self.rows.iter().map(|r| r.symplectic_row()).collect();
        rref(&rows)
    }

    /// A short stable digest of the canonical form, usable as a dedup key.
    pub fn canonical_key(&self) -> Vec<u64> {
        let mut key = vec![self.n as u64, self.k as u64];
        for row in self.canonical_form() {
            key.extend_from_slice(row.words());
        }
        key
    }

    /// Row-major 0/1 flattening, X block then Z block per row,
    /// length 2n(n−k).
    pub fn observation(&self, mode: ObservationMode) -> Vec<u8> {
        let mut out = Vec::with_capacity(2 * self.n * self.rows.len());
        match mode {
            ObservationMode::Raw => {
                for row in &self.rows {
                    push_row_bits(&mut out, &row.symplectic_row(), 2 * self.n);
                }
            }
            ObservationMode::Canonical => {
                let canon = self.canonical_form();
                for row in &canon {
                    push_row_bits(&mut out, row, 2 * self.n);
                }
                // canonical form may have fewer rows only if the invariants
                // were violated; pad to keep the observation shape fixed
                out.resize(2 * self.n * self.rows.len(), 0);
            }
        }
        out
    }

    /// Render the canonical matrix as 0/1 text lines for reports.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        for row in self.canonical_form() {
            for i in 0..row.len() {
                s.push(if row.get(i) { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }
}

fn push_row_bits(out: &mut Vec<u8>, row: &BitVec, len: usize) {
    for i in 0..len {
        out.push(row.get(i) as u8);
    }
}
