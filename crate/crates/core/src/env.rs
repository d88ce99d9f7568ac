//! The RL environment: deterministic init-layer construction, gadget action
//! application, the detection-sum reward, and episode lifecycle.

use thiserror::Error;

use crate::analysis::{enumerate_errors, kl_sum, AnalysisError, ErrorSet, DEFAULT_ERROR_RATE};
use crate::circuit::Circuit;
use crate::gadgets::{enumerate_actions, ActionTable, Gadget};
use crate::pauli::PauliString;
use crate::tableau::{ObservationMode, StabilizerTableau, TableauError};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("action index {index} out of range (n_A = {n_actions})")]
    ActionOutOfRange { index: usize, n_actions: usize },
    #[error("step called on a finished episode")]
    EpisodeDone,
    #[error(transparent)]
    Tableau(#[from] TableauError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Gadget(#[from] crate::gadgets::GadgetError),
}

/// Optional penalty on composite-gadget use: subtracted from the reward when
/// the chosen action's level is >= 1 and the step counter has reached the
/// threshold. Off by default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GadgetPenalty {
    pub coefficient: f64,
    pub threshold_step: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub levels: Vec<u8>,
    pub max_steps: usize,
    pub error_rate: f64,
    pub observation_mode: ObservationMode,
    pub penalty: Option<GadgetPenalty>,
}

impl EnvConfig {
    pub fn new(n: usize, k: usize, d: usize, levels: Vec<u8>) -> Self {
        EnvConfig {
            n,
            k,
            d,
            levels,
            max_steps: 30,
            error_rate: DEFAULT_ERROR_RATE,
            observation_mode: ObservationMode::Raw,
            penalty: None,
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let fail = |msg: &str| Err(EnvError::InvalidConfig(msg.to_string()));
        if self.k < 1 {
            return fail("k must be >= 1");
        }
        if self.n <= self.k {
            return fail("n must exceed k");
        }
        if self.d < 2 {
            return fail("d must be >= 2");
        }
        if self.max_steps < 1 {
            return fail("max episode length must be >= 1");
        }
        if !(0.0..1.0).contains(&self.error_rate) || self.error_rate <= 0.0 {
            return fail("error rate must be in (0, 1)");
        }
        if self.levels.is_empty() {
            return fail("at least one gadget level must be enabled");
        }
        Ok(())
    }
}

/// Deterministic init layer for (n, k): logical slots, Bell pairs, leftover
/// singles with alternating H.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InitLayer {
    pub logical: Vec<usize>,
    pub bells: Vec<(usize, usize)>,
    pub h_singles: Vec<usize>,
    pub z_singles: Vec<usize>,
}

/// Build the init layer: logical slots at floor(i*n/k), then a ring scan
/// pairing each remaining qubit with the next non-logical unpaired qubit
/// into a Bell pair; unpaired leftovers alternately get H (row X) or
/// nothing (row Z), alternation in index order.
pub fn init_layer(n: usize, k: usize) -> InitLayer {
    let logical: Vec<usize> = (0..k).map(|i| i * n / k).collect();
    let is_logical = {
        let mut v = vec![false; n];
        for &q in &logical {
            v[q] = true;
        }
        v
    };
    let mut paired = vec![false; n];
    let mut bells = Vec::new();
    for a in 0..n {
        if is_logical[a] || paired[a] {
            continue;
        }
        // next non-logical unpaired qubit around the ring
        let partner = (1..n)
            .map(|step| (a + step) % n)
            .find(|&b| !is_logical[b] && !paired[b]);
        if let Some(b) = partner {
            paired[a] = true;
            paired[b] = true;
            bells.push((a, b));
        }
    }
    let mut h_singles = Vec::new();
    let mut z_singles = Vec::new();
    let mut give_h = true;
    for q in 0..n {
        if !is_logical[q] && !paired[q] {
            if give_h {
                h_singles.push(q);
            } else {
                z_singles.push(q);
            }
            give_h = !give_h;
        }
    }
    InitLayer {
        logical,
        bells,
        h_singles,
        z_singles,
    }
}

impl InitLayer {
    /// Stabilizer rows of the freshly initialized register.
    pub fn rows(&self, n: usize) -> Vec<PauliString> {
        let mut rows = Vec::new();
        for &(a, b) in &self.bells {
            rows.push(PauliString::from_supports(n, &[a, b], &[]));
            rows.push(PauliString::from_supports(n, &[], &[a, b]));
        }
        for &q in &self.h_singles {
            rows.push(PauliString::x_on(n, q));
        }
        for &q in &self.z_singles {
            rows.push(PauliString::z_on(n, q));
        }
        rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Done {
    /// Episode still running.
    No,
    /// Every enumerated error is detectable.
    Success,
    /// Step budget exhausted.
    Truncated,
}

pub struct Env {
    pub cfg: EnvConfig,
    pub action_table: ActionTable,
    init: InitLayer,
    error_set: ErrorSet,
    tableau: StabilizerTableau,
    t: usize,
    sigma_kl: f64,
    sigma_kl_initial: f64,
    done: Done,
    action_log: Vec<Gadget>,
}

impl Env {
    pub fn new(cfg: EnvConfig) -> Result<Self, EnvError> {
        cfg.validate()?;
        let action_table = enumerate_actions(cfg.n, &cfg.levels);
        if action_table.is_empty() {
            return Err(EnvError::InvalidConfig(
                "no enabled gadget level fits the register".to_string(),
            ));
        }
        let init = init_layer(cfg.n, cfg.k);
        let error_set = enumerate_errors(cfg.n, cfg.d, cfg.error_rate)?;
        let tableau = StabilizerTableau::new(cfg.n, cfg.k, init.rows(cfg.n))?;
        let sigma_kl = kl_sum(&tableau, &error_set)?.sigma_kl;
        Ok(Env {
            cfg,
            action_table,
            init,
            error_set,
            tableau,
            t: 0,
            sigma_kl,
            sigma_kl_initial: sigma_kl,
            done: Done::No,
            action_log: Vec::new(),
        })
    }

    /// Reset to the deterministic init layer; returns the observation.
    pub fn reset(&mut self) -> Result<Vec<u8>, EnvError> {
        self.tableau = StabilizerTableau::new(self.cfg.n, self.cfg.k, self.init.rows(self.cfg.n))?;
        self.sigma_kl = self.sigma_kl_initial;
        self.t = 0;
        self.done = Done::No;
        self.action_log.clear();
        Ok(self.observation())
    }

    pub fn observation(&self) -> Vec<u8> {
        self.tableau.observation(self.cfg.observation_mode)
    }

    pub fn observation_len(&self) -> usize {
        2 * self.cfg.n * (self.cfg.n - self.cfg.k)
    }

    pub fn n_actions(&self) -> usize {
        self.action_table.len()
    }

    pub fn sigma_kl(&self) -> f64 {
        self.sigma_kl
    }

    pub fn sigma_kl_initial(&self) -> f64 {
        self.sigma_kl_initial
    }

    pub fn steps_taken(&self) -> usize {
        self.t
    }

    pub fn done(&self) -> Done {
        self.done
    }

    pub fn tableau(&self) -> &StabilizerTableau {
        &self.tableau
    }

    /// Apply one action; returns (observation, reward, done).
    pub fn step(&mut self, action: usize) -> Result<(Vec<u8>, f64, Done), EnvError> {
        if self.done != Done::No {
            return Err(EnvError::EpisodeDone);
        }
        let gadget = *self
            .action_table
            .get(action)
            .ok_or(EnvError::ActionOutOfRange {
                index: action,
                n_actions: self.action_table.len(),
            })?;
        for (c, t) in gadget.expand()? {
            self.tableau.apply_cx(c, t)?;
        }
        self.t += 1;
        let new_sigma = kl_sum(&self.tableau, &self.error_set)?.sigma_kl;
        let mut reward = -(new_sigma - self.sigma_kl);
        if let Some(p) = self.cfg.penalty {
            if gadget.level >= 1 && self.t >= p.threshold_step {
                reward -= p.coefficient;
            }
        }
        self.sigma_kl = new_sigma;
        self.action_log.push(gadget);
        self.done = if new_sigma == 0.0 {
            Done::Success
        } else if self.t >= self.cfg.max_steps {
            Done::Truncated
        } else {
            Done::No
        };
        Ok((self.observation(), reward, self.done))
    }

    pub fn export_circuit(&self) -> Circuit {
        let mut c = Circuit::from_init(
            self.cfg.n,
            self.cfg.k,
            self.cfg.d,
            self.init.logical.clone(),
            self.init.h_singles.clone(),
            self.init.bells.clone(),
        );
        for &g in &self.action_log {
            c.push_action(g).expect("logged action re-expands");
        }
        c
    }
}
