//! Executable uniform reductions between combinatorial problems.
//!
//! Problems are instance/solution pairs over Cantor space, reductions are pairs of
//! monotone oracle functionals, and constructions are checked at finite scale against
//! brute-force solvers.

pub mod adversaries;
pub mod error;
pub mod harness;
pub mod catalog;
pub mod codings;
pub mod combinators;
pub mod kernel;
pub mod measure;
pub mod oracle;
pub mod problems;

pub use error::{Error, Result};
pub use measure::{Approx, Exact, Measure};
