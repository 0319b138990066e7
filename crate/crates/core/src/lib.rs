//! Exact statevector simulation of variational qubit circuits, dressed
//! quantum circuits trained end-to-end with parameter-shift gradients, and
//! the classical/quantum transfer-learning schemes built on top of them.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, checkpoints
//! and the command-line driver live in the `qtl` companion crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
mod math;

pub mod circuit;
pub mod data;
pub mod gradients;
pub mod model;
pub mod nn;
pub mod simulator;
pub mod train;
pub mod transfer;

pub use circuit::BareCircuit;
pub use error::{Error, Result};
pub use model::{BareClassifier, ClassicalBaseline, DressedCircuit, Model};
pub use nn::{Activation, Adam, DenseLayer};
pub use simulator::{Gate, StateVector};
