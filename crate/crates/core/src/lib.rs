//! Greedy sparse approximation in discretized `L_p` spaces.
//!
//! The crate implements the Weak Chebyshev Greedy Algorithm (WCGA), its
//! Hilbert-space case (WOMP) and the Thresholding Greedy Algorithm (TGA)
//! over trigonometric, Haar and matrix dictionaries, together with
//! estimators for the dictionary constants that govern their recovery
//! guarantees and a seeded experiment harness.

pub mod analysis;
pub mod dictionaries;
pub mod error;
pub mod experiments;
pub mod greedy;
pub mod lpspace;
pub mod solvers;

pub use error::{Error, Result};
