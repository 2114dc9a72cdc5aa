//! Periodically driven Lindblad dynamics of small quantum systems.
//!
//! The crate covers the vectorized Liouvillian and its damping basis, the
//! Bloch-vector representation, the driven dephasing qubit with its
//! exceptional points, commutator closures with Wei–Norman propagators, and
//! the truncated non-Hermitian Floquet Hamiltonian with its Wannier–Stark
//! ladders.

pub mod bloch;
pub mod dynamics;
pub mod error;
pub mod floquet;
pub mod lie;
pub mod linalg;
pub mod operators;
pub mod qubit;
pub mod superop;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, EigenDecomposition, RealMatrix};
pub use superop::{Channel, DensityMatrix, ModelSpec, RateLaw};
pub use num_complex::Complex64 as C64;
pub use bloch::{BlochLiouvillian, BlochState};
pub use dynamics::TimeSeries;
pub use floquet::{FloquetHamiltonian, FloquetSpectrum, LadderLabel};
pub use lie::{LieClosure, SuperOpElement};
pub use qubit::{Branch, DrivenQubitParams};
