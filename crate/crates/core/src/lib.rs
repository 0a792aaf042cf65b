//! Cost-based Stackelberg security investment against covert reactive-load
//! attacks on power grids.
//!
//! An attacker buys success probabilities for covert reactive-demand increases
//! at load buses; a defender buys compensation at buses with control devices.
//! Both pay per load, and the loss is the clipped voltage instability index.
//! The crate solves the game exactly ([`cbbi`]), by co-evolution ([`bpega`]),
//! under attacker-cost uncertainty ([`robust`]) and evaluates fixed strategies
//! under load uncertainty ([`uncertainty`]).

// negated comparisons keep NaN on the failing side of numeric checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bpega;
pub mod cases;
pub mod cbbi;
pub mod equilibrium;
pub mod error;
pub mod game;
pub mod grid;
pub mod par;
pub mod robust;
pub mod uncertainty;

pub use equilibrium::{EquilibriumResult, Method};
pub use error::{Error, Result};
pub use game::{Action, Game, GameConfig, Player};
pub use grid::{load_case, GridCase, StiffnessModel};
