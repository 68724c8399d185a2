//! Two-detector counting statistics for bosons and fermions.
//!
//! A gate contains `n` quanta drawn from a source law `W_n`; each quantum
//! independently fires detector A, detector B, or neither. The crate gives the
//! closed-form moments of the resulting counts, the coincidence ratio `K` and
//! correlation coefficient `R`, the mode-count functions that turn detector
//! mismatch into a number of relevant modes, a reanalysis of the
//! Aspect–Grangier single-photon anticorrelation data, and a Monte Carlo
//! oracle that checks all of it by direct simulation.

// `!(x > 0.0)` rejects NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anticorrelation;
pub mod elementary;
pub mod error;
pub mod mc;
pub mod modes;
pub mod sources;
pub mod special;
pub mod statistics;

pub use elementary::{SequenceMoments, TernaryLaw};
pub use error::{Error, Result};
pub use sources::{FactorialMoments, SourceKind, SourceLaw};
