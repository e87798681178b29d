//! Numerical laboratory for probing an uncharacterised quantum system with a
//! biased two-level probe.
//!
//! The crate simulates the joint probe-system dynamics exactly, evaluates the
//! closed-form 1/lambda expansion of probe transition probabilities, and
//! reconstructs system spectra from oscillation fits and Fourier analysis.
//! Two end-to-end demonstrations are included: a dipole-coupled spin cluster
//! probed by a tunable magnetic dipole, and a spin-boson molecular junction
//! with a polaron-transformed analytic pipeline.
//!
//! Internally hbar = 1: energies are angular frequencies and times their
//! inverse. The demo modules own all physical unit conversions.

pub mod dynamics;
pub mod estimation;
pub mod linalg;
pub mod model;
pub mod perturbation;
pub mod spin;
pub mod vibronic;

pub use linalg::{
    eig_hermitian, evolve_unitary, partial_trace_system, tensor_product, ComplexMatrix,
    DensityOperator, Eigendecomposition, HermitianOperator, LinalgError,
};
pub use model::{
    control_eigenbasis, control_pauli, decompose_coupling, rotate_blocks, ControlBasis,
    CouplingBlocks, ModelError, ProbeControl, ProbePureState,
};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
