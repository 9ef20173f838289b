//! Verification workbench for the one-way chain parity task.
//!
//! `N` parties sit on a line from A to B. Party `n` holds `k_n ∈ Z_2K`, the
//! values are promised to sum to `m·K`, and the last party must output the
//! parity of `m`. One qubit carried down the line solves this exactly
//! ([`qsim`], [`teleport`]). A classical carrier with `L < 2K` states
//! fails once `N > K` (for `K` a power of two), so no fixed alphabet works
//! for every `N` and `K`. [`protocol`] verifies concrete classical
//! protocols, [`search`] decides feasibility for small `(N, K, L)` by
//! exhaustive search over reach-set profiles, and [`zring`] holds the
//! sumset arithmetic behind the lower bound.

pub mod error;
pub mod protocol;
pub mod qsim;
pub mod search;
pub mod task;
pub mod teleport;
pub mod zring;

pub use error::{Error, Result};
pub use task::{DiscreteInstance, FieldSpec, Parity};
pub use zring::{RingSize, SumSet};
