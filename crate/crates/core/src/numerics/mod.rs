//! Dense matrix kernels: eigenvalues, singular values and the Lyapunov and
//! continuous algebraic Riccati solvers every design step builds on.

mod care;
mod eig;
mod linalg;
mod lyapunov;
mod svd;

pub use care::{solve_care, solve_care_with};
pub use eig::{eigenvalues, is_stable, spectral_abscissa, uncontrollable_mode};
pub use linalg::{balance, frobenius, inverse, is_finite, symmetrize, to_complex};
pub use lyapunov::{solve_lyapunov, solve_lyapunov_with};
pub use svd::{svd_values, svd_values_real};

use nalgebra::{Complex, DMatrix};

/// Dense real matrix.
pub type RealMatrix<T> = DMatrix<T>;
/// Dense complex matrix.
pub type ComplexMatrix<T> = DMatrix<Complex<T>>;

/// Tolerances and iteration caps shared by the numeric kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative residual bound for `A X + X Aᵀ + Q = 0`.
    pub lyapunov_residual: f64,
    /// Relative residual bound for the continuous algebraic Riccati equation.
    pub care_residual: f64,
    pub care_max_iterations: usize,
    /// QR sweeps per eigenvalue before the eigen-solver gives up.
    pub eig_max_sweeps: usize,
    pub svd_max_sweeps: usize,
    /// Relative singular-value threshold for the PBH rank tests.
    pub rank_tolerance: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            lyapunov_residual: 1e-9,
            care_residual: 1e-8,
            care_max_iterations: 200,
            eig_max_sweeps: 500,
            svd_max_sweeps: 100,
            rank_tolerance: 1e-10,
        }
    }
}

/// Outcome of an iterative or direct matrix-equation solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverReport<T> {
    pub residual_norm: T,
    pub iterations: usize,
    pub converged: bool,
}
