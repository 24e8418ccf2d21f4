//! Simulation and analysis toolkit for style-based quantum GANs trained in
//! an autoencoder latent space.

// `!(x >= 0.0)` style checks are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ansatz;
pub mod autoencoder;
pub mod bp;
pub mod data_io;
pub mod error;
pub mod gan;
pub mod metrics;
pub mod neural;
pub mod pauli;
pub mod rng;
pub mod shots;
pub mod statevector;
pub mod stats;
pub mod synthetic;

pub use error::{Error, ErrorClass, Result};
pub use pauli::{CliffordGate, Pauli, PauliString, Phase};
pub use statevector::{Circuit, Gate, Observable, RotationGate, StateVector};
pub use ansatz::{AnsatzKind, Shots, StyleConfig, StyleGenerator};
pub use neural::{Activation, AdamConfig, AdamState, Mlp, MlpSpec};
