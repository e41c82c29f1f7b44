//! Lower-order terms in the 1-level density of GL(2) families: prime-sum
//! constants, elliptic-curve family moments, sieve corrections and the
//! explicit-formula decomposition.

pub mod constants;
pub mod error;
pub mod explicit_formula;
pub mod families;
pub mod numerics;
pub mod primes;
pub mod series;
pub mod suites;

pub use error::{Error, Result};
