//! Post-discovery preprocessing: dedup by canonical tableau, circuit
//! normalization into a label-canonical form, motif frequency mining, and
//! dataset persistence (directory of circuit files plus a manifest).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{weight_stats, WeightStats};
use crate::circuit::{Circuit, CircuitError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("circuit {index}: {source}")]
    BadCircuit {
        index: usize,
        #[source]
        source: CircuitError,
    },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("hash mismatch for `{file}`: manifest {expected}, recomputed {actual}")]
    HashMismatch {
        file: String,
        expected: String,
        actual: String,
    },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug)]
pub struct DedupReport {
    pub kept: Vec<Circuit>,
    pub discarded: usize,
    /// (input index, diagnostic) for circuits that failed to evaluate.
    pub rejected: Vec<(usize, String)>,
}

/// Keep the first circuit per distinct canonical tableau, insertion order.
pub fn dedup(circuits: Vec<Circuit>) -> DedupReport {
    let mut seen: HashMap<Vec<u64>, ()> = HashMap::new();
    let mut kept = Vec::new();
    let mut discarded = 0;
    let mut rejected = Vec::new();
    for (index, c) in circuits.into_iter().enumerate() {
        match c.evaluate() {
            Ok(tab) => {
                if seen.insert(tab.canonical_key(), ()).is_none() {
                    kept.push(c);
                } else {
                    discarded += 1;
                }
            }
            Err(e) => rejected.push((index, e.to_string())),
        }
    }
    DedupReport {
        kept,
        discarded,
        rejected,
    }
}

/// The qubit relabeling used by `normalize`: logical qubits map to 0..k−1
/// in ascending original index; Hadamard-carrying init qubits (leftover H
/// singles and Bell-pair first qubits) take the next labels in order of
/// first appearance in the gate list (unused ones last, by index); temporal
/// traversal of the gate list then assigns the next free label to every
/// remaining participant; leftovers follow in index order.
pub fn normalization_permutation(c: &Circuit) -> Vec<usize> {
    let n = c.n;
    let mut label = vec![usize::MAX; n];
    let mut next = 0usize;
    let mut logical = c.logical.clone();
    logical.sort_unstable();
    for q in logical {
        label[q] = next;
        next += 1;
    }
    let mut h_carrying: Vec<usize> = c
        .h
        .iter()
        .copied()
        .chain(c.bells.iter().map(|&(a, _)| a))
        .collect();
    h_carrying.sort_unstable();
    let first_use: HashMap<usize, usize> = {
        let mut m = HashMap::new();
        for (i, &(a, b)) in c.cx.iter().enumerate() {
            m.entry(a).or_insert(2 * i);
            m.entry(b).or_insert(2 * i + 1);
        }
        m
    };
    h_carrying.sort_by_key(|q| (first_use.get(q).copied().unwrap_or(usize::MAX), *q));
    for q in h_carrying {
        if label[q] == usize::MAX {
            label[q] = next;
            next += 1;
        }
    }
    for &(a, b) in &c.cx {
        for q in [a, b] {
            if label[q] == usize::MAX {
                label[q] = next;
                next += 1;
            }
        }
    }
    for q in 0..n {
        if label[q] == usize::MAX {
            label[q] = next;
            next += 1;
        }
    }
    label
}

/// Relabel a circuit into its normal form. Gadget actions are flattened to
/// the CX list (the action list is dropped), so the motif counter sees the
/// plain gate alphabet.
pub fn normalize(c: &Circuit) -> Circuit {
    let perm = normalization_permutation(c);
    let map = |q: usize| perm[q];
    let mut logical: Vec<usize> = c.logical.iter().map(|&q| map(q)).collect();
    logical.sort_unstable();
    let mut h: Vec<usize> = c.h.iter().map(|&q| map(q)).collect();
    h.sort_unstable();
    let mut bells: Vec<(usize, usize)> = c.bells.iter().map(|&(a, b)| (map(a), map(b))).collect();
    bells.sort_unstable();
    let cx: Vec<(usize, usize)> = c.cx.iter().map(|&(a, b)| (map(a), map(b))).collect();
    Circuit {
        n: c.n,
        k: c.k,
        d: c.d,
        logical,
        h,
        bells,
        actions: Vec::new(),
        cx,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotifEntry {
    /// Shape after shifting labels so the subsequence's minimum is 0,
    /// rendered as `c-t` pairs joined by `;`.
    pub signature: String,
    pub length: usize,
    pub count: usize,
    pub example_circuit: usize,
}

/// Count contiguous gate subsequences of length 2..=window across the
/// dataset, keyed by label-shifted shape. The Bell-pair init CXs are
/// excluded unless `include_init` is set.
pub fn motif_frequencies(circuits: &[Circuit], window: usize, include_init: bool) -> Vec<MotifEntry> {
    let mut table: HashMap<(String, usize), (usize, usize)> = HashMap::new();
    for (id, c) in circuits.iter().enumerate() {
        let start = if include_init { 0 } else { c.bells.len() };
        let gates = &c.cx[start.min(c.cx.len())..];
        for len in 2..=window {
            if gates.len() < len {
                break;
            }
            for sub in gates.windows(len) {
                let min = sub
                    .iter()
                    .flat_map(|&(a, b)| [a, b])
                    .min()
                    .expect("non-empty window");
                let signature = sub
                    .iter()
                    .map(|&(a, b)| format!("{}-{}", a - min, b - min))
                    .collect::<Vec<_>>()
                    .join(";");
                let entry = table.entry((signature, len)).or_insert((0, id));
                entry.0 += 1;
            }
        }
    }
    let mut entries: Vec<MotifEntry> = table
        .into_iter()
        .map(|((signature, length), (count, example_circuit))| MotifEntry {
            signature,
            length,
            count,
            example_circuit,
        })
        .collect();
    entries.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then(a.length.cmp(&b.length))
            .then(a.signature.cmp(&b.signature))
    });
    entries
}

pub fn motif_csv(entries: &[MotifEntry]) -> String {
    let mut s = String::from("shape,length,count,example_circuit\n");
    for e in entries {
        writeln!(s, "{},{},{},{}", e.signature, e.length, e.count, e.example_circuit).unwrap();
    }
    s
}

#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub id: usize,
    pub file: String,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub canonical_hash: String,
    pub weights: WeightStats,
}

fn circuit_hash(c: &Circuit) -> Result<String, CircuitError> {
    let tab = c.evaluate()?;
    let mut hasher = Sha256::new();
    hasher.update(tab.canonical_text());
    Ok(hex(&hasher.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Write `manifest.tsv` plus one circuit file per entry.
pub fn write_dataset(dir: &Path, circuits: &[Circuit]) -> Result<Vec<ManifestEntry>, PipelineError> {
    fs::create_dir_all(dir)?;
    let entries: Vec<ManifestEntry> = circuits
        .par_iter()
        .enumerate()
        .map(|(id, c)| -> Result<ManifestEntry, PipelineError> {
            let file = format!("circuit_{id:04}.txt");
            let tab = c
                .evaluate()
                .map_err(|source| PipelineError::BadCircuit { index: id, source })?;
            c.write_file(&dir.join(&file))?;
            Ok(ManifestEntry {
                id,
                file,
                n: c.n,
                k: c.k,
                d: c.d,
                canonical_hash: circuit_hash(c)?,
                weights: weight_stats(&tab),
            })
        })
        .collect::<Result<_, _>>()?;
    let mut manifest = String::from("id\tfile\tn\tk\td\tcanonical_hash\tw_min\tw_max\tw_mean\tw_stddev\n");
    for e in &entries {
        writeln!(
            manifest,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}",
            e.id, e.file, e.n, e.k, e.d, e.canonical_hash, e.weights.min, e.weights.max,
            e.weights.mean, e.weights.stddev
        )
        .unwrap();
    }
    fs::write(dir.join("manifest.tsv"), manifest)?;
    Ok(entries)
}

/// Read a dataset back, verifying every circuit against its manifest hash.
pub fn read_dataset(dir: &Path) -> Result<Vec<(ManifestEntry, Circuit)>, PipelineError> {
    let manifest = fs::read_to_string(dir.join("manifest.tsv"))?;
    let mut out = Vec::new();
    for (lineno, line) in manifest.lines().enumerate().skip(1) {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(PipelineError::Manifest(format!(
                "line {}: expected 10 columns, found {}",
                lineno + 1,
                cols.len()
            )));
        }
        let field = |i: usize, name: &str| -> Result<usize, PipelineError> {
            cols[i]
                .parse()
                .map_err(|_| PipelineError::Manifest(format!("line {}: bad {name}", lineno + 1)))
        };
        let entry = ManifestEntry {
            id: field(0, "id")?,
            file: cols[1].to_string(),
            n: field(2, "n")?,
            k: field(3, "k")?,
            d: field(4, "d")?,
            canonical_hash: cols[5].to_string(),
            weights: WeightStats {
                min: field(6, "w_min")?,
                max: field(7, "w_max")?,
                mean: cols[8].parse().map_err(|_| {
                    PipelineError::Manifest(format!("line {}: bad w_mean", lineno + 1))
                })?,
                stddev: cols[9].parse().map_err(|_| {
                    PipelineError::Manifest(format!("line {}: bad w_stddev", lineno + 1))
                })?,
            },
        };
        let circuit = Circuit::read_file(&dir.join(&entry.file))?;
        let actual = circuit_hash(&circuit)?;
        if actual != entry.canonical_hash {
            return Err(PipelineError::HashMismatch {
                file: entry.file.clone(),
                expected: entry.canonical_hash.clone(),
                actual,
            });
        }
        out.push((entry, circuit));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Env, EnvConfig};
    use crate::gadgets::{Gadget, Orientation};
    use tempfile::tempdir;

    fn base_circuit() -> Circuit {
        let mut env = Env::new(EnvConfig::new(7, 1, 3, vec![0, 1])).unwrap();
        env.reset().unwrap();
        env.step(0).unwrap();
        env.step(17).unwrap();
        env.step(3).unwrap();
        env.export_circuit()
    }

    fn permuted(c: &Circuit, perm: &[usize]) -> Circuit {
        Circuit {
            n: c.n,
            k: c.k,
            d: c.d,
            logical: c.logical.iter().map(|&q| perm[q]).collect(),
            h: c.h.iter().map(|&q| perm[q]).collect(),
            bells: c.bells.iter().map(|&(a, b)| (perm[a], perm[b])).collect(),
            actions: Vec::new(),
            cx: c.cx.iter().map(|&(a, b)| (perm[a], perm[b])).collect(),
        }
    }

    #[test]
    fn normalize_is_idempotent() {
        let c = normalize(&base_circuit());
        assert_eq!(normalize(&c), c);
    }

    #[test]
    fn permuted_variants_normalize_identically() {
        let c = base_circuit();
        let flat = normalize(&c); // drop gadget bookkeeping first
        let p1 = permuted(&flat, &[3, 0, 6, 2, 5, 1, 4]);
        let p2 = permuted(&flat, &[6, 5, 4, 3, 2, 1, 0]);
        assert_eq!(normalize(&p1), normalize(&p2));
        assert_eq!(normalize(&p1), normalize(&flat));
    }

    #[test]
    fn normalized_tableau_is_column_permutation_of_original() {
        let c = base_circuit();
        let perm = normalization_permutation(&c);
        let normalized = normalize(&c);
        let tab = c.evaluate().unwrap();
        let tab_n = normalized.evaluate().unwrap();
        let permuted_rows: Vec<crate::pauli::PauliString> = tab
            .rows()
            .iter()
            .map(|r| {
                let mut xs = Vec::new();
                let mut zs = Vec::new();
                for q in 0..c.n {
                    if r.x_bits().get(q) {
                        xs.push(perm[q]);
                    }
                    if r.z_bits().get(q) {
                        zs.push(perm[q]);
                    }
                }
                crate::pauli::PauliString::from_supports(c.n, &xs, &zs)
            })
            .collect();
        let oracle =
            crate::tableau::StabilizerTableau::new(c.n, c.k, permuted_rows).unwrap();
        assert_eq!(oracle.canonical_key(), tab_n.canonical_key());
    }

    #[test]
    fn dedup_keeps_one_per_canonical_form() {
        let c = base_circuit();
        // commuting swap: two disjoint CX gates exchanged
        let mut swapped = c.clone();
        let len = swapped.cx.len();
        swapped.cx.swap(0, 1); // Bell CXs on disjoint pairs commute
        assert!(len >= 2);
        // a genuinely different circuit
        let mut other = c.clone();
        other
            .push_action(Gadget {
                level: 1,
                orientation: Orientation::B,
                anchor: 2,
                n: 7,
            })
            .unwrap();
        let report = dedup(vec![c.clone(), swapped, c.clone(), other]);
        assert_eq!(report.kept.len(), 2);
        assert_eq!(report.discarded, 2);
        assert!(report.rejected.is_empty());
    }

    #[test]
    fn dedup_rejects_broken_circuits() {
        let mut bad = base_circuit();
        bad.cx.push((0, 99));
        let report = dedup(vec![bad]);
        assert_eq!(report.kept.len(), 0);
        assert_eq!(report.rejected.len(), 1);
    }

    #[test]
    fn dcx_motif_tops_the_table() {
        // every circuit contains [CX(1,2), CX(2,1)]; trailing gates vary
        let mut circuits = Vec::new();
        for &(x, y) in &[(3usize, 4usize), (4, 5), (5, 3)] {
            let mut c = Circuit::from_init(6, 1, 2, vec![0], vec![], vec![]);
            c.cx.extend([(1, 2), (2, 1), (x, y)]);
            circuits.push(c);
        }
        let table = motif_frequencies(&circuits, 2, false);
        assert_eq!(table[0].signature, "0-1;1-0");
        assert_eq!(table[0].count, 3);
    }

    #[test]
    fn planted_motif_count_recovered() {
        // plant the 8-gate 4-qubit gadget expansion in fresh circuits
        let expansion = Gadget {
            level: 2,
            orientation: Orientation::A,
            anchor: 0,
            n: 9,
        }
        .expand()
        .unwrap();
        let mut circuits = Vec::new();
        for _ in 0..3 {
            let mut c = Circuit::from_init(9, 1, 3, vec![0], vec![], vec![]);
            c.cx.extend(&expansion);
            circuits.push(c);
        }
        let table = motif_frequencies(&circuits, 8, false);
        let sig = expansion
            .iter()
            .map(|&(a, b)| format!("{a}-{b}"))
            .collect::<Vec<_>>()
            .join(";");
        let entry = table
            .iter()
            .find(|e| e.signature == sig)
            .expect("planted motif present");
        assert_eq!(entry.count, 3);
    }

    #[test]
    fn empty_dataset_empty_table() {
        assert!(motif_frequencies(&[], 4, false).is_empty());
    }

    #[test]
    fn dataset_round_trip_and_tamper_detection() {
        let dir = tempdir().unwrap();
        let circuits: Vec<Circuit> = (0..10)
            .map(|i| {
                let mut env = Env::new(EnvConfig::new(7, 1, 3, vec![0, 1])).unwrap();
                env.reset().unwrap();
                env.step(i % 14).unwrap();
                env.export_circuit()
            })
            .collect();
        let entries = write_dataset(dir.path(), &circuits).unwrap();
        assert_eq!(entries.len(), 10);
        let back = read_dataset(dir.path()).unwrap();
        assert_eq!(back.len(), 10);
        for ((_, c), orig) in back.iter().zip(&circuits) {
            assert_eq!(c, orig);
        }
        // weight stats in the manifest match recomputation
        for (e, c) in &back {
            let recomputed = weight_stats(&c.evaluate().unwrap());
            assert_eq!(e.weights.min, recomputed.min);
            assert_eq!(e.weights.max, recomputed.max);
            assert!((e.weights.mean - recomputed.mean).abs() < 1e-5);
        }
        // tamper with one gate -> hash mismatch on read
        let path = dir.path().join("circuit_0003.txt");
        let mut c = Circuit::read_file(&path).unwrap();
        c.cx.push((0, 1));
        c.write_file(&path).unwrap();
        assert!(matches!(
            read_dataset(dir.path()),
            Err(PipelineError::HashMismatch { .. })
        ));
    }

    #[test]
    fn dedup_commutes_with_normalization() {
        let c = base_circuit();
        let mut other = c.clone();
        other
            .push_action(Gadget {
                level: 0,
                orientation: Orientation::A,
                anchor: 5,
                n: 7,
            })
            .unwrap();
        let set = vec![c.clone(), c.clone(), other];
        let before: Vec<Circuit> = dedup(set.clone()).kept.iter().map(normalize).collect();
        let after = dedup(set.iter().map(normalize).collect()).kept;
        let keys = |cs: &[Circuit]| -> Vec<Vec<u64>> {
            let mut v: Vec<Vec<u64>> = cs
                .iter()
                .map(|c| c.evaluate().unwrap().canonical_key())
                .collect();
            v.sort();
            v
        };
        assert_eq!(keys(&before), keys(&after));
    }
}
