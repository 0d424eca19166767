//! Exact combinatorics of quantum exchangeability.
//!
//! - [`partitions`]: the partition lattice `P(k)`, non-crossing partitions
//!   `NC(k)`, kernels and the Möbius function of `NC(k)`.
//! - [`weingarten`]: Gram and Weingarten matrices of the quantum permutation
//!   group `A_s(n)` and the Haar-state integration formula.
//! - [`cumulants`]: nested moment/cumulant functionals over `NC(k)`, free
//!   i.i.d. moments and a vanishing-mixed-cumulant freeness check.
//! - [`exchange`]: magic unitaries, quantum-permutation invariance, classical
//!   and noncommutative urn sequences and the finite de Finetti gap.
//! - [`acceptance`]: the end-to-end checks reproduced by `qexch reproduce-all`.

pub mod acceptance;
pub mod algebra;
pub mod cumulants;
pub mod error;
pub mod exchange;
pub mod linalg;
pub mod oracles;
pub mod partitions;
pub mod weingarten;

pub use error::{Error, Result};
