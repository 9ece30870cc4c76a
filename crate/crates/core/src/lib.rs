//! Operator-size growth measured through Bell-pair circuits.
//!
//! The crate is organised bottom-up:
//!
//! - [`pauli`]: Pauli strings, sparse Pauli operators and size bookkeeping.
//! - [`oracle`]: dense Heisenberg evolution of the mixed-field Ising chain,
//!   used as ground truth for everything else.
//! - [`circuit`]: Bell preparation, Trotterized operator sandwich and Bell
//!   decoding on `2N` qubits.
//! - [`simulator`]: statevector engine with exact and sampled size readout.
//! - [`noise`]: depolarizing noise, exact density-matrix and Pauli-trajectory
//!   backends.
//! - [`mitigation`]: Richardson zero-noise extrapolation.
//! - [`experiments`]: configuration, experiment runners and CSV output.
//!
//! Sites are 1-based in every public interface; qubit indices are 0-based.

pub mod circuit;
pub mod error;
pub mod experiments;
mod kernels;
pub mod mitigation;
pub mod noise;
pub mod oracle;
pub mod pauli;
pub mod simulator;

pub use circuit::{Circuit, EvolutionSpec, Gate, GateKind, Protocol, Segment};
pub use error::{Error, Result};
pub use mitigation::MitigationPlan;
pub use noise::{DensityMatrix, NoiseModel, NoiseScope, TrajectoryEstimate};
pub use oracle::{DenseOperator, ModelParams};
pub use pauli::{Pauli, PauliOperator, PauliString, Phase, SizeDistribution};
pub use simulator::{Frame, ShotRecord, SizeReadout, StateVector};

pub use num_complex::Complex64;
