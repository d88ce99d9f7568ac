//! The DCX gadget hierarchy: recursive construction from double-CNOTs,
//! conjugation rule tables, the brute-force calibration of the cross-pattern
//! wiring, and action enumeration over a ring connectivity.

use std::collections::HashMap;
use std::sync::Mutex;
use std::sync::OnceLock;

use thiserror::Error;

use crate::pauli::PauliString;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GadgetError {
    #[error("gadget expansion is only defined for level >= 1")]
    LevelZeroExpansion,
    #[error("gadget on {size} qubits has repeated indices (n={n})")]
    RepeatedQubits { size: usize, n: usize },
    #[error("level {0} exceeds the supported maximum {MAX_LEVEL}")]
    LevelTooLarge(u8),
    #[error("no cross-pattern candidate reproduces the reference rule tables")]
    CalibrationFailed,
}

/// Levels are tested through q=5, i.e. 32-qubit gadgets of 512 CX gates.
pub const MAX_LEVEL: u8 = 5;

/// Calibrated cross-pattern wiring, pinned by `derive_cross_pattern` against
/// the reference rule tables and frozen here (lexicographically smallest of
/// the surviving candidates at each stage).
///
/// Both stages share the same cross shape: sub-units at half-block offsets
/// [1, 0, 2, 1]. At the leaf (building the 4-qubit gadget from DCX pairs)
/// the outer placements are orientation-reversed; at every block level
/// (8 qubits and up) all four sub-gadgets are placed plain.
pub const LEAF_PATTERN: [(usize, usize); 4] = [(1, 2), (1, 0), (3, 2), (1, 2)];
pub const BLOCK_PATTERN: [(usize, usize); 4] = [(1, 2), (0, 1), (2, 3), (1, 2)];

/// Reference conjugation tables (weight-1 inputs, orientation A), used both
/// to calibrate the cross-pattern and as regression targets.
pub const CX_X_RULES: [&str; 2] = ["XX", "IX"];
pub const CX_Z_RULES: [&str; 2] = ["ZI", "ZZ"];
pub const DCX_X_RULES: [&str; 2] = ["IX", "XX"];
pub const DCX_Z_RULES: [&str; 2] = ["ZZ", "ZI"];
pub const DCX4_X_RULES: [&str; 4] = ["XIXI", "IXXX", "XXXX", "IXXI"];
pub const DCX4_Z_RULES: [&str; 4] = ["IZZI", "ZZZZ", "ZZZI", "IZIZ"];
pub const DCX8_X_RULES: [&str; 8] = [
    "XIXIXIII", "IXXXIXII", "XXIIXIXI", "IXIIXXIX", "XIXXXIIX", "IXIXIXXI", "IIXIIXXX", "IIIXXIXI",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    A,
    B,
}

impl Orientation {
    pub fn tag(self) -> char {
        match self {
            Orientation::A => 'A',
            Orientation::B => 'B',
        }
    }

    pub fn from_tag(c: char) -> Option<Self> {
        match c {
            'A' => Some(Orientation::A),
            'B' => Some(Orientation::B),
            _ => None,
        }
    }
}

/// One action instance: a composite gate of size 2^level anchored on a ring
/// of `n` qubits. Level 0 is a single CX folded into the same shape so the
/// action table stays uniform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Gadget {
    pub level: u8,
    pub orientation: Orientation,
    pub anchor: usize,
    pub n: usize,
}

impl Gadget {
    pub fn size(&self) -> usize {
        1usize << self.level
    }

    /// The consecutive ring indices the gadget acts on.
    pub fn qubits(&self) -> Vec<usize> {
        let m = self.size().max(2); // level 0 still touches two qubits
        (0..m).map(|i| (self.anchor + i) % self.n).collect()
    }

    /// Ordered CX list in temporal order. Orientation B is orientation A
    /// with every control/target swapped.
    pub fn expand(&self) -> Result<Vec<(usize, usize)>, GadgetError> {
        if self.level > MAX_LEVEL {
            return Err(GadgetError::LevelTooLarge(self.level));
        }
        let qubits = self.qubits();
        let mut seen = vec![false; self.n];
        for &q in &qubits {
            if seen[q] {
                return Err(GadgetError::RepeatedQubits {
                    size: qubits.len(),
                    n: self.n,
                });
            }
            seen[q] = true;
        }
        let mut gates = if self.level == 0 {
            vec![(qubits[0], qubits[1])]
        } else {
            expand_on(&qubits)
        };
        if self.orientation == Orientation::B {
            for g in &mut gates {
                *g = (g.1, g.0);
            }
        }
        Ok(gates)
    }
}

/// Recursive expansion of a level-q gadget (orientation A) onto an ordered
/// qubit list of length 2^q, q >= 1.
fn expand_on(qubits: &[usize]) -> Vec<(usize, usize)> {
    let m = qubits.len();
    debug_assert!(m.is_power_of_two() && m >= 2);
    if m == 2 {
        return vec![(qubits[0], qubits[1]), (qubits[1], qubits[0])];
    }
    let pattern = if m == 4 { LEAF_PATTERN } else { BLOCK_PATTERN };
    let blk = m / 4;
    let mut gates = Vec::with_capacity(2 * m * m / 8);
    for (a, b) in pattern {
        let mut sub = Vec::with_capacity(m / 2);
        sub.extend_from_slice(&qubits[a * blk..(a + 1) * blk]);
        sub.extend_from_slice(&qubits[b * blk..(b + 1) * blk]);
        gates.extend(expand_on(&sub));
    }
    gates
}

/// Conjugate a Pauli through a CX list in temporal order.
pub fn conjugate(p: &PauliString, gates: &[(usize, usize)]) -> PauliString {
    let mut p = p.clone();
    for &(c, t) in gates {
        p.apply_cx(c, t);
    }
    p
}

/// Map of every weight-1 X and Z input on the gadget's local qubits to its
/// conjugated output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleTable {
    pub level: u8,
    pub orientation: Orientation,
    pub x_rules: Vec<PauliString>,
    pub z_rules: Vec<PauliString>,
}

impl RuleTable {
    /// Largest output weight over all weight-1 inputs.
    pub fn max_output_weight(&self) -> usize {
        self.x_rules
            .iter()
            .chain(&self.z_rules)
            .map(|p| p.weight())
            .max()
            .unwrap_or(0)
    }

    /// Arrow-notation lines, X rules then Z rules.
    pub fn render(&self) -> String {
        let m = self.x_rules.len();
        let mut s = String::new();
        for (q, out) in self.x_rules.iter().enumerate() {
            s.push_str(&format!("{} -> {}\n", one_hot(m, q, 'X'), out));
        }
        for (q, out) in self.z_rules.iter().enumerate() {
            s.push_str(&format!("{} -> {}\n", one_hot(m, q, 'Z'), out));
        }
        s
    }
}

fn one_hot(m: usize, q: usize, c: char) -> String {
    (0..m).map(|i| if i == q { c } else { 'I' }).collect()
}

/// Compute (and cache) the rule table for a gadget level and orientation.
pub fn rule_table(level: u8, orientation: Orientation) -> Result<RuleTable, GadgetError> {
    static CACHE: OnceLock<Mutex<HashMap<(u8, Orientation), RuleTable>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().unwrap().get(&(level, orientation)) {
        return Ok(t.clone());
    }
    if level > MAX_LEVEL {
        return Err(GadgetError::LevelTooLarge(level));
    }
    let m = (1usize << level).max(2);
    let gadget = Gadget {
        level,
        orientation,
        anchor: 0,
        n: m,
    };
    let gates = gadget.expand()?;
    let x_rules = (0..m)
        .map(|q| conjugate(&PauliString::x_on(m, q), &gates))
        .collect();
    let z_rules = (0..m)
        .map(|q| conjugate(&PauliString::z_on(m, q), &gates))
        .collect();
    let table = RuleTable {
        level,
        orientation,
        x_rules,
        z_rules,
    };
    cache
        .lock()
        .unwrap()
        .insert((level, orientation), table.clone());
    Ok(table)
}

/// Max weight a weight-1 Pauli can reach through one gadget application.
pub fn max_propagated_weight(level: u8) -> Result<usize, GadgetError> {
    Ok(rule_table(level, Orientation::A)?.max_output_weight())
}

/// CSV of (m, max_weight) for the whole tested hierarchy.
pub fn weight_curve_csv() -> Result<String, GadgetError> {
    let mut s = String::from("m,max_weight\n");
    for level in 1..=MAX_LEVEL {
        s.push_str(&format!(
            "{},{}\n",
            1usize << level,
            max_propagated_weight(level)?
        ));
    }
    Ok(s)
}

/// Result of the brute-force wiring calibration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossPattern {
    /// Surviving four-DCX sequences (ordered qubit pairs of {0..3}) whose
    /// conjugation map reproduces the 4-qubit reference tables.
    pub leaf_candidates: Vec<[(usize, usize); 4]>,
    /// Surviving four-sub-gadget block sequences (ordered half-block pairs)
    /// whose lift reproduces the 8-qubit reference table.
    pub block_candidates: Vec<[(usize, usize); 4]>,
    pub leaf: [(usize, usize); 4],
    pub block: [(usize, usize); 4],
}

fn parse_rule(s: &str) -> PauliString {
    s.parse().expect("reference table entry")
}

fn check_map(gates: &[(usize, usize)], m: usize, x_rules: &[&str], z_rules: Option<&[&str]>) -> bool {
    for q in 0..m {
        let out = conjugate(&PauliString::x_on(m, q), gates);
        if out != parse_rule(x_rules[q]) {
            return false;
        }
    }
    if let Some(z_rules) = z_rules {
        for q in 0..m {
            let out = conjugate(&PauliString::z_on(m, q), gates);
            if out != parse_rule(z_rules[q]) {
                return false;
            }
        }
    }
    true
}

/// Exhaustive search for the cross-pattern wiring.
///
/// Stage 1 scans all 12^4 ordered sequences of four DCX placements on four
/// qubits against the 4-qubit tables (X and Z rules). Stage 2 scans the same
/// 12^4 space of ordered half-block placements, with the stage-1 winner as
/// the sub-gadget, against the 8-qubit X table. The two stages agree on the
/// unordered cross shape; the lexicographically smallest candidate of each
/// stage is the frozen wiring.
pub fn derive_cross_pattern() -> Result<CrossPattern, GadgetError> {
    let pairs: Vec<(usize, usize)> = (0..4)
        .flat_map(|a| (0..4).filter(move |&b| b != a).map(move |b| (a, b)))
        .collect();

    let mut leaf_candidates = Vec::new();
    for combo in ordered_quadruples(&pairs) {
        let mut gates = Vec::with_capacity(8);
        for &(a, b) in &combo {
            gates.push((a, b));
            gates.push((b, a));
        }
        if check_map(&gates, 4, &DCX4_X_RULES, Some(&DCX4_Z_RULES)) {
            leaf_candidates.push(combo);
        }
    }
    let leaf = *leaf_candidates.first().ok_or(GadgetError::CalibrationFailed)?;

    // stage 2: lift to 8 qubits, half-blocks of two qubits each
    let sub = {
        let mut gates = Vec::with_capacity(8);
        for &(a, b) in &leaf {
            gates.push((a, b));
            gates.push((b, a));
        }
        gates
    };
    let mut block_candidates = Vec::new();
    for combo in ordered_quadruples(&pairs) {
        let mut gates = Vec::with_capacity(32);
        for &(a, b) in &combo {
            let blocks = [[2 * a, 2 * a + 1], [2 * b, 2 * b + 1]];
            let list: Vec<usize> = blocks.concat();
            gates.extend(sub.iter().map(|&(c, t)| (list[c], list[t])));
        }
        if check_map(&gates, 8, &DCX8_X_RULES, None) {
            block_candidates.push(combo);
        }
    }
    let block = *block_candidates
        .first()
        .ok_or(GadgetError::CalibrationFailed)?;

    // the two stages must describe the same cross shape
    let shape = |p: &[(usize, usize); 4]| {
        let mut v: Vec<(usize, usize)> = p
            .iter()
            .map(|&(a, b)| (a.min(b), a.max(b)))
            .collect();
        v.sort_unstable();
        v
    };
    if shape(&leaf) != shape(&block) {
        return Err(GadgetError::CalibrationFailed);
    }
    Ok(CrossPattern {
        leaf_candidates,
        block_candidates,
        leaf,
        block,
    })
}

fn ordered_quadruples(
    pairs: &[(usize, usize)],
) -> impl Iterator<Item = [(usize, usize); 4]> + '_ {
    let n = pairs.len();
    (0..n * n * n * n).map(move |idx| {
        let mut i = idx;
        let mut combo = [(0, 0); 4];
        for slot in (0..4).rev() {
            combo[slot] = pairs[i % n];
            i /= n;
        }
        combo
    })
}

/// The flat action table for one environment: for each enabled level, every
/// ring anchor in both orientations.
#[derive(Debug, Clone)]
pub struct ActionTable {
    pub n: usize,
    pub actions: Vec<Gadget>,
    /// Levels dropped because the gadget would not fit the ring.
    pub excluded_levels: Vec<u8>,
}

impl ActionTable {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&Gadget> {
        self.actions.get(index)
    }
}

/// Enumerate gadget actions over the periodic ring: 2n per enabled level.
/// A level whose gadget size reaches n is excluded rather than wrapped onto
/// itself.
pub fn enumerate_actions(n: usize, levels: &[u8]) -> ActionTable {
    let mut sorted: Vec<u8> = levels.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut actions = Vec::new();
    let mut excluded_levels = Vec::new();
    for &level in &sorted {
        let size = (1usize << level).max(2);
        if size >= n || level > MAX_LEVEL {
            excluded_levels.push(level);
            continue;
        }
        for anchor in 0..n {
            for orientation in [Orientation::A, Orientation::B] {
                actions.push(Gadget {
                    level,
                    orientation,
                    anchor,
                    n,
                });
            }
        }
    }
    ActionTable {
        n,
        actions,
        excluded_levels,
    }
}

/// Expansion size of a level-q gadget: 1 CX at level 0, else 2·4^{q−1}.
pub fn expansion_len(level: u8) -> usize {
    if level == 0 {
        1
    } else {
        2 * 4usize.pow(level as u32 - 1)
    }
}

/// Human-readable level names used by the CLI (cx, dcx, dcx4, dcx8, ...).
pub fn level_name(level: u8) -> String {
    match level {
        0 => "cx".to_string(),
        1 => "dcx".to_string(),
        q => format!("dcx{}", 1usize << q),
    }
}

pub fn level_from_name(name: &str) -> Option<u8> {
    match name {
        "cx" => Some(0),
        "dcx" | "dcx2" => Some(1),
        other => {
            let m: usize = other.strip_prefix("dcx")?.parse().ok()?;
            if m.is_power_of_two() && m >= 4 {
                Some(m.trailing_zeros() as u8)
            } else {
                None
            }
        }
    }
}
