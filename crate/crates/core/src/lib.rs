//! Boolean finite dynamical systems with multiple function choices and
//! multiple update schedules.
//!
//! The crate covers exact one-step semantics, configuration graphs, exact
//! solvers for the standard structural questions, simulations between
//! models with embedding verification, reduction gadgets, and the
//! permutation-existence and robustness algorithms.

pub mod caps;
pub mod config;
pub mod error;
pub mod system;
pub mod graph;
pub mod analysis;
pub mod bounded;
pub mod transforms;
pub mod cnf;
pub mod reductions;
pub mod permsolve;

pub use caps::Caps;
pub use config::Config;
pub use error::{Error, Result};
pub use system::{
    Action, AsynchronousPlan, FunctionSelection, Label, NodeFunction, Permutation, Realization,
    SelectionScheme, System, UpdateSchedule,
};
