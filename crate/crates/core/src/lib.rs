//! Discovery engine for CSS quantum error-correcting encoding circuits.
//!
//! The crate combines a binary-symplectic stabilizer simulator, a
//! Knill–Laflamme detection analysis, a recursive hierarchy of composite
//! Clifford gadgets built from double-CNOTs, a reinforcement-learning
//! environment whose reward is the drop in the weighted undetected-error
//! sum, an actor-critic trainer with suffix-max return targets, and a
//! preprocessing pipeline (dedup, normalization, motif mining, dataset
//! persistence) for the discovered circuits.

pub mod analysis;
pub mod bits;
pub mod circuit;
pub mod env;
pub mod gadgets;
pub mod nn;
pub mod pauli;
pub mod pipeline;
pub mod tableau;
pub mod trainer;
