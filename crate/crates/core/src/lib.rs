//! Pool-based multi-class active learning with a hybrid query criterion.
//!
//! A candidate's *informativeness* is the worst-case squared-loss risk it
//! adds under adversarial ±1 pseudo-labels; its *representativeness* is how
//! far labeling it reduces the maximum mean discrepancy between the labeled
//! and unlabeled sets. [`iral::select_query_iral`] trades the two off with a
//! weight β, alternating an ADMM solve for the classifier coefficients with a
//! simplex-relaxed QP over the selection indicator.
//!
//! The [`harness`] module drives complete experiments (random, margin and
//! MMD-only baselines, learning curves, paired t-tests and CSV output).

pub mod dataset;
pub mod error;
pub mod harness;
pub mod informative;
pub mod iral;
pub mod kernel;
pub mod learner;
pub mod par;
pub mod representative;
pub mod state;

pub use error::{Error, Result};
pub use informative::HyperParams;
pub use par::Execution;
pub use state::{ActiveState, PoolOracle};
