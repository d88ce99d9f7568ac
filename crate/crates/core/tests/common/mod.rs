//! Dense complex-matrix helpers shared by the oracle and acceptance test
//! crates: Pauli/gate matrices, random CSS tableaux, and a codespace
//! projector detectability oracle.
#![allow(dead_code)]

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;

use gadget_qec::pauli::PauliString;
use gadget_qec::tableau::StabilizerTableau;

pub type CMat = Array2<Complex64>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn eye(dim: usize) -> CMat {
    Array2::from_shape_fn((dim, dim), |(i, j)| if i == j { c(1.0) } else { c(0.0) })
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Array2::from_shape_fn((ar * br, ac * bc), |(i, j)| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Dense matrix of a Pauli string under the crate's convention: the string
/// is (−1)^sign · ⊗_q X^{x_q} Z^{z_q} (a position with both bits set is the
/// real product XZ, printed as Y).
pub fn pauli_dense(p: &PauliString) -> CMat {
    let x = Array2::from_shape_vec((2, 2), vec![c(0.0), c(1.0), c(1.0), c(0.0)]).unwrap();
    let z = Array2::from_shape_vec((2, 2), vec![c(1.0), c(0.0), c(0.0), c(-1.0)]).unwrap();
    let mut m = Array2::from_shape_vec((1, 1), vec![c(1.0)]).unwrap();
    for q in 0..p.num_qubits() {
        let mut f = eye(2);
        if p.x_bits().get(q) {
            f = f.dot(&x);
        }
        if p.z_bits().get(q) {
            f = f.dot(&z);
        }
        m = kron(&m, &f);
    }
    if p.is_negative() {
        m.mapv_inplace(|v| -v);
    }
    m
}

pub fn single_qubit_gate(n: usize, q: usize, g: &CMat) -> CMat {
    let mut m = Array2::from_shape_vec((1, 1), vec![c(1.0)]).unwrap();
    for i in 0..n {
        let f = if i == q { g.clone() } else { eye(2) };
        m = kron(&m, &f);
    }
    m
}

pub fn h_gate(n: usize, q: usize) -> CMat {
    let s = 1.0 / 2.0f64.sqrt();
    let h = Array2::from_shape_vec((2, 2), vec![c(s), c(s), c(s), c(-s)]).unwrap();
    single_qubit_gate(n, q, &h)
}

pub fn cx_gate(n: usize, control: usize, target: usize) -> CMat {
    let dim = 1 << n;
    Array2::from_shape_fn((dim, dim), |(i, j)| {
        // basis index bit q is (idx >> (n-1-q)) & 1 to match kron ordering
        let bit = |idx: usize, q: usize| (idx >> (n - 1 - q)) & 1;
        let mut expected = j;
        if bit(j, control) == 1 {
            expected ^= 1 << (n - 1 - target);
        }
        if i == expected {
            c(1.0)
        } else {
            c(0.0)
        }
    })
}

pub fn approx_eq(a: &CMat, b: &CMat, tol: f64) -> bool {
    a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() < tol)
}

pub fn random_pauli(n: usize, rng: &mut impl Rng) -> PauliString {
    let mut s = if rng.gen_bool(0.5) {
        String::from("-")
    } else {
        String::new()
    };
    for _ in 0..n {
        s.push(['I', 'X', 'Z', 'Y'][rng.gen_range(0..4)]);
    }
    s.parse().unwrap()
}

/// Random CSS tableau on n qubits: evolve a product-state tableau through a
/// random sequence of H-free CX gates from a random Bell/H init.
pub fn random_css_tableau(n: usize, k: usize, rng: &mut impl Rng) -> StabilizerTableau {
    let mut rows = Vec::new();
    let mut q = k; // first k qubits are the logical slots, no rows
    while q < n {
        if q + 1 < n && rng.gen_bool(0.5) {
            rows.push(PauliString::from_supports(n, &[q, q + 1], &[]));
            rows.push(PauliString::from_supports(n, &[], &[q, q + 1]));
            q += 2;
        } else {
            if rng.gen_bool(0.5) {
                rows.push(PauliString::x_on(n, q));
            } else {
                rows.push(PauliString::z_on(n, q));
            }
            q += 1;
        }
    }
    let mut tab = StabilizerTableau::new(n, k, rows).unwrap();
    for _ in 0..rng.gen_range(0..20) {
        let a = rng.gen_range(0..n);
        let b = (a + rng.gen_range(1..n)) % n;
        tab.apply_cx(a, b).unwrap();
    }
    tab
}

/// Codespace projector P = Π_i (I + S_i)/2.
pub fn projector(tab: &StabilizerTableau) -> CMat {
    let n = tab.num_qubits();
    let dim = 1 << n;
    let mut p = eye(dim);
    for row in tab.rows() {
        let s = pauli_dense(row);
        let half = (eye(dim) + &s).mapv(|v| v * c(0.5));
        p = p.dot(&half);
    }
    p
}

/// Dense detectability: E is detectable iff P E P = c·P for some scalar c
/// (including c = 0); undetectable errors act nontrivially inside the
/// codespace.
pub fn detectable_dense(p: &CMat, e: &CMat, tol: f64) -> bool {
    let pep = p.dot(e).dot(p);
    // find scaling from the largest-magnitude entry of P
    let (mut best, mut coeff) = (0.0, c(0.0));
    for (x, y) in p.iter().zip(pep.iter()) {
        if x.norm() > best {
            best = x.norm();
            coeff = y / x;
        }
    }
    p.iter()
        .zip(pep.iter())
        .all(|(x, y)| (y - coeff * x).norm() < tol)
}
