//! CSS error enumeration, detectability tests, the weighted undetectability
//! sum driving the reward, distance verification, the quantum Hamming bound
//! and generator-weight statistics.

use rayon::prelude::*;
use thiserror::Error;

use crate::bits::{BitVec, Gf2Basis};
use crate::pauli::PauliString;
use crate::tableau::StabilizerTableau;

/// Default physical error rate for λ_μ = p^weight.
pub const DEFAULT_ERROR_RATE: f64 = 0.1;

/// Error sets larger than this make kl_sum spread over a thread pool.
const PAR_THRESHOLD: usize = 4096;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("target distance {d} exceeds qubit count {n}")]
    DistanceTooLarge { n: usize, d: usize },
    #[error("distance must be at least 1")]
    DistanceZero,
    #[error("qubit count mismatch: tableau has {0}, errors have {1}")]
    QubitMismatch(usize, usize),
}

/// All pure-X and pure-Z Pauli strings of weight 1..d−1 with their weights
/// λ_μ = p^weight. The identity (weight 0) is excluded: it is always
/// detectable and would only add a constant.
#[derive(Clone)]
pub struct ErrorSet {
    n: usize,
    d: usize,
    p: f64,
    errors: Vec<PauliString>,
    lambdas: Vec<f64>,
}

impl ErrorSet {
    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn distance(&self) -> usize {
        self.d
    }

    pub fn error_rate(&self) -> f64 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn errors(&self) -> &[PauliString] {
        &self.errors
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Member count including the identity term, per type.
    pub fn count_with_identity_per_type(&self) -> u128 {
        (0..self.d as u128).map(|w| binomial(self.n as u128, w)).sum()
    }
}

#[derive(Debug, Clone)]
pub struct KlReport {
    pub sigma_kl: f64,
    pub undetected: Vec<usize>,
    /// (weight, undetected count) in ascending weight order.
    pub per_weight: Vec<(usize, usize)>,
}

/// Enumerate the target error set for an [[n,k,d]] search.
pub fn enumerate_errors(n: usize, d: usize, p: f64) -> Result<ErrorSet, AnalysisError> {
    if d == 0 {
        return Err(AnalysisError::DistanceZero);
    }
    if d > n {
        return Err(AnalysisError::DistanceTooLarge { n, d });
    }
    let mut errors = Vec::new();
    let mut lambdas = Vec::new();
    for w in 1..d {
        for combo in combinations(n, w) {
            errors.push(PauliString::from_supports(n, &combo, &[]));
            lambdas.push(p.powi(w as i32));
        }
        for combo in combinations(n, w) {
            errors.push(PauliString::from_supports(n, &[], &combo));
            lambdas.push(p.powi(w as i32));
        }
    }
    Ok(ErrorSet {
        n,
        d,
        p,
        errors,
        lambdas,
    })
}

/// Precomputed per-tableau data amortizing detectability checks across many
/// errors: the raw rows plus a GF(2) basis of the row space for the
/// degenerate (row-space membership) case.
pub struct DetectionCache {
    rows: Vec<(BitVec, BitVec)>, // (x, z) per generator
    row_space: Gf2Basis,
    n: usize,
}

impl DetectionCache {
    pub fn new(t: &StabilizerTableau) -> Self {
        let n = t.num_qubits();
        let rows: Vec<(BitVec, BitVec)> = t
            .rows()
            .iter()
            .map(|r| (r.x_bits().clone(), r.z_bits().clone()))
            .collect();
        let mut row_space = Gf2Basis::new(2 * n);
        for r in t.rows() {
            row_space.insert(&r.symplectic_row());
        }
        DetectionCache { rows, row_space, n }
    }

    /// An error is detectable iff it anticommutes with some generator, or it
    /// lies in the stabilizer row space (then it acts trivially on the code
    /// space).
    #[inline]
    pub fn is_detectable(&self, e: &PauliString) -> bool {
        let ex = e.x_bits();
        let ez = e.z_bits();
        for (rx, rz) in &self.rows {
            if ex.and_parity(rz) != ez.and_parity(rx) {
                return true;
            }
        }
        self.row_space.contains(&e.symplectic_row())
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }
}

pub fn is_detectable(t: &StabilizerTableau, e: &PauliString) -> bool {
    DetectionCache::new(t).is_detectable(e)
}

/// Σ over errors of λ_μ·K_μ, K_μ = 1 for undetected errors.
pub fn kl_sum(t: &StabilizerTableau, es: &ErrorSet) -> Result<KlReport, AnalysisError> {
    if t.num_qubits() != es.n {
        return Err(AnalysisError::QubitMismatch(t.num_qubits(), es.n));
    }
    let cache = DetectionCache::new(t);
    let flags: Vec<bool> = if es.errors.len() >= PAR_THRESHOLD {
        // order-preserving map: the reduction below stays deterministic
        es.errors
            .par_iter()
            .map(|e| cache.is_detectable(e))
            .collect()
    } else {
        es.errors.iter().map(|e| cache.is_detectable(e)).collect()
    };
    let mut sigma_kl = 0.0;
    let mut undetected = Vec::new();
    let mut per_weight: Vec<(usize, usize)> = Vec::new();
    for (idx, detected) in flags.iter().enumerate() {
        if !detected {
            sigma_kl += es.lambdas[idx];
            undetected.push(idx);
            let w = es.errors[idx].weight();
            match per_weight.iter_mut().find(|(pw, _)| *pw == w) {
                Some((_, c)) => *c += 1,
                None => per_weight.push((w, 1)),
            }
        }
    }
    per_weight.sort_unstable();
    Ok(KlReport {
        sigma_kl,
        undetected,
        per_weight,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerifyOutcome {
    /// Every pure-type error of weight ≤ d−1 is detectable.
    Holds,
    /// A witness error that escapes detection.
    Fails { witness: String },
    /// The combinatorial budget was exceeded; not a silent pass.
    Infeasible { required: u128, budget: u128 },
}

impl VerifyOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, VerifyOutcome::Holds)
    }
}

pub const DEFAULT_VERIFY_BUDGET: u128 = 50_000_000;

/// Distance check: for a CSS tableau this is exactly "distance ≥ d".
pub fn verify_distance_at_least(
    t: &StabilizerTableau,
    d: usize,
    budget: u128,
) -> Result<VerifyOutcome, AnalysisError> {
    let n = t.num_qubits();
    if d == 0 {
        return Err(AnalysisError::DistanceZero);
    }
    if d > n {
        return Err(AnalysisError::DistanceTooLarge { n, d });
    }
    let required: u128 = (1..d as u128).map(|w| 2 * binomial(n as u128, w)).sum();
    if required > budget {
        return Ok(VerifyOutcome::Infeasible { required, budget });
    }
    let cache = DetectionCache::new(t);
    for w in 1..d {
        for combo in combinations(n, w) {
            let ex = PauliString::from_supports(n, &combo, &[]);
            if !cache.is_detectable(&ex) {
                return Ok(VerifyOutcome::Fails {
                    witness: ex.to_string(),
                });
            }
            let ez = PauliString::from_supports(n, &[], &combo);
            if !cache.is_detectable(&ez) {
                return Ok(VerifyOutcome::Fails {
                    witness: ez.to_string(),
                });
            }
        }
    }
    Ok(VerifyOutcome::Holds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QhbVariant {
    Stabilizer,
    SelfDualCss,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QhbReport {
    pub variant: QhbVariant,
    pub t: usize,
    /// d was even, so t fell back to ⌊(d−1)/2⌋.
    pub even_distance: bool,
    pub bound_lhs: u128,
    pub bound_rhs: u128,
    pub satisfied: bool,
    pub perfect: bool,
}

/// Quantum Hamming bound. Stabilizer variant: 2^{n−k} ≥ Σ 3^j C(n,j).
/// Weakly-self-dual CSS variant: 2^{⌊(n−k)/2⌋} ≥ Σ C(n,j). Exact integers.
pub fn qhb(n: usize, k: usize, d: usize, variant: QhbVariant) -> QhbReport {
    let t = d.saturating_sub(1) / 2;
    let even_distance = d.is_multiple_of(2);
    let (lhs, rhs) = match variant {
        QhbVariant::Stabilizer => {
            let lhs = 1u128 << (n - k);
            let rhs = (0..=t as u128)
                .map(|j| 3u128.pow(j as u32) * binomial(n as u128, j))
                .sum();
            (lhs, rhs)
        }
        QhbVariant::SelfDualCss => {
            let lhs = 1u128 << ((n - k) / 2);
            let rhs = (0..=t as u128).map(|j| binomial(n as u128, j)).sum();
            (lhs, rhs)
        }
    };
    QhbReport {
        variant,
        t,
        even_distance,
        bound_lhs: lhs,
        bound_rhs: rhs,
        satisfied: lhs >= rhs,
        perfect: lhs == rhs,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightStats {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    pub stddev: f64,
}

pub fn weight_stats(t: &StabilizerTableau) -> WeightStats {
    let weights: Vec<usize> = t.rows().iter().map(|r| r.weight()).collect();
    stats_of(&weights)
}

pub fn stats_of(weights: &[usize]) -> WeightStats {
    if weights.is_empty() {
        return WeightStats {
            min: 0,
            max: 0,
            mean: 0.0,
            stddev: 0.0,
        };
    }
    let min = *weights.iter().min().unwrap();
    let max = *weights.iter().max().unwrap();
    let mean = weights.iter().sum::<usize>() as f64 / weights.len() as f64;
    let var = weights
        .iter()
        .map(|&w| (w as f64 - mean).powi(2))
        .sum::<f64>()
        / weights.len() as f64;
    WeightStats {
        min,
        max,
        mean,
        stddev: var.sqrt(),
    }
}

pub fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Lexicographic k-combinations of 0..n.
pub fn combinations(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut state: Option<Vec<usize>> = if k <= n {
        Some((0..k).collect())
    } else {
        None
    };
    std::iter::from_fn(move || {
        let current = state.clone()?;
        // advance
        let mut next = current.clone();
        let mut i = k;
        loop {
            if i == 0 {
                state = None;
                break;
            }
            i -= 1;
            if next[i] < n - (k - i) {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                state = Some(next);
                break;
            }
        }
        Some(current)
    })
}
