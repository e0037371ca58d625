//! Phase-space representation of bosonic Gaussian states.
//!
//! Quadratures `q = (a + a†)/√2`, `p = -i(a - a†)/√2` are ordered
//! `q1, p1, q2, p2, ...`. Covariances are `σ_ij = <{Δx_i, Δx_j}>`, so the
//! vacuum has `σ = I`. All values are immutable; operations return new states.

mod measurement;
mod state;
mod symplectic;

pub use measurement::{fidelity_pure_mixed, Quadrature};
pub use state::GaussianState;
pub use symplectic::{
    check_symplectic, rotation_block, SymplecticForm, SymplecticMap, SYMPLECTIC_TOL,
};

use nalgebra::{DMatrix, SymmetricEigen};

/// Smallest eigenvalue of the Hermitian matrix `sigma + i*gamma`.
///
/// Uses the real symmetric embedding `[[sigma, -gamma], [gamma, sigma]]`,
/// whose spectrum is that of the Hermitian matrix with each eigenvalue doubled.
pub fn uncertainty_min_eigenvalue(sigma: &DMatrix<f64>) -> f64 {
    let dim = sigma.nrows();
    let gamma = SymplecticForm::new(dim / 2).into_matrix();
    let mut big = DMatrix::zeros(2 * dim, 2 * dim);
    big.view_mut((0, 0), (dim, dim)).copy_from(sigma);
    big.view_mut((dim, dim), (dim, dim)).copy_from(sigma);
    big.view_mut((0, dim), (dim, dim)).copy_from(&(-&gamma));
    big.view_mut((dim, 0), (dim, dim)).copy_from(&gamma);
    SymmetricEigen::new(big).eigenvalues.min()
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}
