//! The persisted discovery artifact: an init layer (logical slots, Hadamards,
//! Bell pairs), the ordered gadget action list, and the flattened CX list.
//! Includes the line-oriented text format with bit-exact round-trip.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::gadgets::{Gadget, GadgetError, Orientation};
use crate::pauli::PauliString;
use crate::tableau::{StabilizerTableau, TableauError};

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("qubit index {0} out of range for n={1}")]
    QubitOutOfRange(usize, usize),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error(transparent)]
    Tableau(#[from] TableauError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An encoding circuit. `cx` is the full flattened gate list in temporal
/// order: one CX per Bell pair first, then the expansion of each action.
/// Normalized circuits keep only the flattened list (empty `actions`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub logical: Vec<usize>,
    pub h: Vec<usize>,
    pub bells: Vec<(usize, usize)>,
    pub actions: Vec<Gadget>,
    pub cx: Vec<(usize, usize)>,
}

impl Circuit {
    /// Fresh circuit holding only the init layer (Bell CXs included).
    pub fn from_init(
        n: usize,
        k: usize,
        d: usize,
        logical: Vec<usize>,
        h: Vec<usize>,
        bells: Vec<(usize, usize)>,
    ) -> Self {
        let cx = bells.clone();
        Circuit {
            n,
            k,
            d,
            logical,
            h,
            bells,
            actions: Vec::new(),
            cx,
        }
    }

    /// Append an action and its expansion to the flattened list.
    pub fn push_action(&mut self, g: Gadget) -> Result<(), CircuitError> {
        let gates = g.expand()?;
        self.actions.push(g);
        self.cx.extend(gates);
        Ok(())
    }

    /// Non-logical qubits that received neither H nor a Bell partner; their
    /// rows start as single Z.
    pub fn plain_singles(&self) -> Vec<usize> {
        let mut covered = vec![false; self.n];
        for &q in &self.logical {
            covered[q] = true;
        }
        for &q in &self.h {
            covered[q] = true;
        }
        for &(a, b) in &self.bells {
            covered[a] = true;
            covered[b] = true;
        }
        (0..self.n).filter(|&q| !covered[q]).collect()
    }

    /// Total CX gates in the artifact (Bell CXs plus action expansions).
    pub fn cx_count(&self) -> usize {
        self.cx.len()
    }

    /// Evolve the init stabilizers through the flattened gate list. The init
    /// rows are single Z on every non-logical qubit; H is applied to each
    /// `h` qubit and to the first qubit of each Bell pair; then the CX list
    /// runs in order (the Bell CXs are its head, completing the pairs).
    pub fn evaluate(&self) -> Result<StabilizerTableau, CircuitError> {
        for &q in self
            .logical
            .iter()
            .chain(&self.h)
            .chain(self.bells.iter().flat_map(|(a, b)| [a, b]))
        {
            if q >= self.n {
                return Err(CircuitError::QubitOutOfRange(q, self.n));
            }
        }
        let rows: Vec<PauliString> = (0..self.n)
            .filter(|q| !self.logical.contains(q))
            .map(|q| PauliString::z_on(self.n, q))
            .collect();
        let mut tab = StabilizerTableau::new(self.n, self.k, rows)?;
        for &q in self.h.iter().chain(self.bells.iter().map(|(a, _)| a)) {
            tab.apply_h(q)?;
        }
        for &(c, t) in &self.cx {
            tab.apply_cx(c, t)?;
        }
        Ok(tab)
    }

    /// Circuit depth: greedy layering where gates sharing a qubit cannot
    /// share a layer. Counts the init H gates and the full CX list.
    pub fn depth(&self) -> usize {
        let mut busy_until = vec![0usize; self.n];
        let mut depth = 0;
        let singles = self.h.iter().chain(self.bells.iter().map(|(a, _)| a));
        for &q in singles {
            busy_until[q] += 1;
            depth = depth.max(busy_until[q]);
        }
        for &(c, t) in &self.cx {
            let layer = busy_until[c].max(busy_until[t]) + 1;
            busy_until[c] = layer;
            busy_until[t] = layer;
            depth = depth.max(layer);
        }
        depth
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{} {} {}", self.n, self.k, self.d).unwrap();
        writeln!(s, "init").unwrap();
        writeln!(s, "logical{}", join_indices(&self.logical)).unwrap();
        writeln!(s, "h{}", join_indices(&self.h)).unwrap();
        for &(a, b) in &self.bells {
            writeln!(s, "bell {a} {b}").unwrap();
        }
        writeln!(s, "actions").unwrap();
        for g in &self.actions {
            writeln!(s, "{} {} {}", g.level, g.anchor, g.orientation.tag()).unwrap();
        }
        writeln!(s, "cx").unwrap();
        for &(c, t) in &self.cx {
            writeln!(s, "{c} {t}").unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, CircuitError> {
        let err = |line: usize, msg: &str| CircuitError::Parse {
            line,
            msg: msg.to_string(),
        };
        let mut lines = text.lines().enumerate();
        let (ln, header) = lines.next().ok_or_else(|| err(1, "empty file"))?;
        let mut it = header.split_whitespace();
        let mut next_num = |field: &str| -> Result<usize, CircuitError> {
            it.next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| err(ln + 1, &format!("header missing {field}")))
        };
        let n = next_num("n")?;
        let k = next_num("k")?;
        let d = next_num("d")?;

        #[derive(PartialEq)]
        enum Section {
            Init,
            Actions,
            Cx,
        }
        let mut section = None;
        let mut logical = Vec::new();
        let mut h = Vec::new();
        let mut bells = Vec::new();
        let mut actions = Vec::new();
        let mut cx = Vec::new();
        for (i, raw) in lines {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            match line {
                "init" => {
                    section = Some(Section::Init);
                    continue;
                }
                "actions" => {
                    section = Some(Section::Actions);
                    continue;
                }
                "cx" => {
                    section = Some(Section::Cx);
                    continue;
                }
                _ => {}
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            match section {
                Some(Section::Init) => match toks[0] {
                    "logical" => logical = parse_indices(&toks[1..], lineno)?,
                    "h" => h = parse_indices(&toks[1..], lineno)?,
                    "bell" => {
                        let v = parse_indices(&toks[1..], lineno)?;
                        if v.len() != 2 {
                            return Err(err(lineno, "bell needs exactly two indices"));
                        }
                        bells.push((v[0], v[1]));
                    }
                    other => return Err(err(lineno, &format!("unknown init entry `{other}`"))),
                },
                Some(Section::Actions) => {
                    if toks.len() != 3 {
                        return Err(err(lineno, "action needs `level anchor orientation`"));
                    }
                    let level: u8 = toks[0]
                        .parse()
                        .map_err(|_| err(lineno, "bad action level"))?;
                    let anchor: usize = toks[1]
                        .parse()
                        .map_err(|_| err(lineno, "bad action anchor"))?;
                    let orientation = toks[2]
                        .chars()
                        .next()
                        .and_then(Orientation::from_tag)
                        .ok_or_else(|| err(lineno, "orientation must be A or B"))?;
                    actions.push(Gadget {
                        level,
                        orientation,
                        anchor,
                        n,
                    });
                }
                Some(Section::Cx) => {
                    let v = parse_indices(&toks, lineno)?;
                    if v.len() != 2 {
                        return Err(err(lineno, "cx needs exactly two indices"));
                    }
                    cx.push((v[0], v[1]));
                }
                None => return Err(err(lineno, "content before any section header")),
            }
        }
        Ok(Circuit {
            n,
            k,
            d,
            logical,
            h,
            bells,
            actions,
            cx,
        })
    }

    pub fn write_file(&self, path: &Path) -> Result<(), CircuitError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self, CircuitError> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

fn join_indices(v: &[usize]) -> String {
    v.iter().map(|q| format!(" {q}")).collect()
}

fn parse_indices(toks: &[&str], lineno: usize) -> Result<Vec<usize>, CircuitError> {
    toks.iter()
        .map(|t| {
            t.parse().map_err(|_| CircuitError::Parse {
                line: lineno,
                msg: format!("bad index `{t}`"),
            })
        })
        .collect()
}
