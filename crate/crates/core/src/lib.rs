//! Collisional qubit chains.
//!
//! A system qubit meets a stream of identically prepared molecules. With one
//! collision per molecule the system follows a Markov chain; when each
//! molecule collides twice with overlapping intervals the system alone is
//! non-Markovian, but the system plus a satellite memory qubit is again a
//! Markov chain. The crate builds the gates and Kraus maps, runs the chains
//! by several independent engines, tests divisibility, and evaluates the
//! mutual information, classical correlation and discord between system and
//! memory.

pub mod chains;
pub mod channels;
pub mod error;
pub mod gates;
pub mod matcore;
pub mod measures;
pub mod trajectories;

pub use error::{Error, Result};
