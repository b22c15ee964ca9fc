//! Ground-truth benchmark machinery for feature attribution.
//!
//! The crate builds small ReLU networks whose mechanism is known exactly
//! (weighted sums, cancellation gates, pertinent negatives, shattered
//! gradients, categorical interactions, softmax with irrelevant inputs and
//! Boolean formulas), generates datasets paired with those networks together
//! with ablation-based ground-truth attributions, implements the attribution
//! methods from first principles and scores them.
//!
//! Everything here is pure computation on `alloc` collections; file formats,
//! timing, parallelism and the command line live in the `attribench` crate.

#![no_std]

#[cfg(test)]
#[macro_use]
extern crate std;
extern crate alloc;

pub mod attr;
pub mod data;
mod error;
pub mod forge;
pub mod linalg;
pub mod metrics;
pub mod nn;
pub mod seed;

pub use crate::error::{Error, Result};
pub use crate::linalg::Matrix;
