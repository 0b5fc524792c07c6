//! Generalized robustness of continuous-variable quantum resources.
//!
//! The crate works in a truncated Fock basis and brackets the generalized
//! robustness of a state with respect to one of three free sets:
//!
//! - classical states (closed convex hull of coherent states),
//! - incoherent states (diagonal in the Fock basis),
//! - separable states of two modes.
//!
//! Upper bounds come from explicit free states (closed forms, pure-state
//! bounds, a cutting-plane solve over a discretized free set); lower bounds
//! come from witnesses, i.e. positive observables whose largest expectation
//! over the free set has been computed. The [`discrimination`] module turns a
//! witness into a two-channel discrimination task whose advantage ratio
//! equals the witnessed value.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod acceptance;
pub mod cli;
pub mod discrimination;
pub mod error;
pub mod fock;
pub mod free_sets;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod measures;
pub mod random;
pub mod report;
pub mod solver;

pub use error::{Error, Result};
pub use fock::{DensityOperator, FockVector, State, StateRequest, StateSpec};
pub use free_sets::{CoherentGrid, FreeSetKind, FreeSetModel, FreeValueResult};
pub use measures::RobustnessBounds;
pub use solver::{SolverConfig, SolverReport, Witness};

/// Version tag written into every JSON/CSV record.
pub const SCHEMA_VERSION: u32 = 1;
