//! Dense complex linear algebra: matrices, eigensolvers, exponentials,
//! linear solves and an adaptive ODE integrator.

mod eig;
mod expm;
mod hermitian;
mod lu;
mod matrix;
mod ode;

pub use eig::{eig_general, eig_general_with, eigenvalues, residuals, EigOptions, EigenDecomposition};
pub use expm::matrix_exp;
pub use hermitian::{eig_hermitian, eigvals_hermitian, gram_condition, HermitianEigen};
pub use lu::{condition_number_1, inverse, solve_linear, Lu};
pub use matrix::{vec_dot, vec_norm, ComplexMatrix, RealMatrix};
pub use ode::{ode_integrate, OdeOptions, OdeScalar, Trajectory};

#[allow(unused_imports)]
pub(crate) use matrix::{cabs1, ONE, ZERO};
