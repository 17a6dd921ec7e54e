//! Workbench for quantum-assisted differential cryptanalysis.
//!
//! The Bernstein–Vazirani measurement distribution of a Boolean function is
//! the square of its normalized Walsh spectrum, so it is computed exactly and
//! sampled with integer arithmetic instead of simulating a circuit. Sampled
//! outcomes feed GF(2) systems whose solution sets are candidate
//! high-probability differentials, which are then checked against
//! brute-force difference tables and used in a last-round key recovery on a
//! toy SPN cipher.
//!
//! Bit convention everywhere: bit 0 is the least significant bit, the inner
//! product is `w·x = parity(w & x)`, and output component `f_1` is bit 0.

pub mod boolfn;
pub mod bvsim;
pub mod differential;
mod error;
pub mod gf2;
pub mod oracle;
pub mod rng;
pub mod spn;

pub use error::{Error, Result};
