//! Numerical laboratory for strong renewal theorems of heavy-tailed random
//! walks on a lattice.
//!
//! The crate computes convolution powers and renewal measures exactly on a
//! truncated lattice, evaluates the pointwise ratio `ω` and its overflow
//! integrals, the limiting stable laws and their constants, local large
//! deviation bounds, and ladder-height identities by simulation.

pub mod conv;
pub mod criteria;
pub mod deviation;
pub mod error;
pub mod fluctuation;
pub mod io;
pub mod lattice;
pub mod numerics;
pub mod regvar;
pub mod rng;
pub mod stable;
pub mod stats;

pub use error::{Error, Result};
pub use lattice::LatticeDist;
pub use regvar::{NormingSeq, RegVarFn};
pub use stable::StableLimit;
