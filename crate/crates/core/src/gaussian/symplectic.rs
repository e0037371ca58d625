use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};

use super::max_abs;
use crate::error::{Error, Result};
use crate::matrix_json;

/// Residual bound enforced on every constructed [`SymplecticMap`].
pub const SYMPLECTIC_TOL: f64 = 1e-12;

/// The block-diagonal form `Γ = ⊕ [[0, 1], [-1, 0]]` on `n` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    modes: usize,
    matrix: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn new(modes: usize) -> Self {
        let mut matrix = DMatrix::zeros(2 * modes, 2 * modes);
        for k in 0..modes {
            matrix[(2 * k, 2 * k + 1)] = 1.0;
            matrix[(2 * k + 1, 2 * k)] = -1.0;
        }
        Self { modes, matrix }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

/// `max |S Γ Sᵀ - Γ|` for a square matrix of even dimension.
pub fn check_symplectic(s: &DMatrix<f64>) -> Result<f64> {
    if !s.is_square() {
        return Err(Error::InvalidArgument(format!(
            "symplectic check needs a square matrix, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    if !s.nrows().is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "symplectic check needs even dimension, got {}",
            s.nrows()
        )));
    }
    let gamma = SymplecticForm::new(s.nrows() / 2).into_matrix();
    Ok(max_abs(&(s * &gamma * s.transpose() - gamma)))
}

/// 2×2 block `[[cos φ, sin φ], [-sin φ, cos φ]]`: the Heisenberg action of
/// `a ↦ e^{-iφ} a` on `(q, p)`.
pub fn rotation_block(phi: f64) -> Matrix2<f64> {
    let (s, c) = phi.sin_cos();
    Matrix2::new(c, s, -s, c)
}

/// Affine phase-space map `x ↦ S x + shift` with `S Γ Sᵀ = Γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymplecticMap {
    #[serde(with = "matrix_json::dmatrix")]
    matrix: DMatrix<f64>,
    #[serde(with = "matrix_json::dvector")]
    shift: DVector<f64>,
}

impl SymplecticMap {
    /// Validates the symplectic condition to `tolerance`.
    pub fn new(matrix: DMatrix<f64>, shift: DVector<f64>, tolerance: f64) -> Result<Self> {
        let residual = check_symplectic(&matrix)?;
        if shift.len() != matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: shift.len(),
            });
        }
        if !(residual <= tolerance) {
            return Err(Error::NotSymplectic {
                residual,
                tolerance,
            });
        }
        Ok(Self { matrix, shift })
    }

    pub fn identity(modes: usize) -> Self {
        Self {
            matrix: DMatrix::identity(2 * modes, 2 * modes),
            shift: DVector::zeros(2 * modes),
        }
    }

    fn check_mode(modes: usize, k: usize) -> Result<()> {
        if k >= modes {
            return Err(Error::InvalidArgument(format!(
                "mode {k} out of range for {modes} modes"
            )));
        }
        Ok(())
    }

    /// Mixes modes `i` and `j` with `cos θ = √t`:
    /// `x_i ↦ √t x_i + √(1-t) x_j`, `x_j ↦ -√(1-t) x_i + √t x_j` for both quadratures.
    pub fn beam_splitter(modes: usize, transmittance: f64, i: usize, j: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&transmittance) {
            return Err(Error::InvalidArgument(format!(
                "beam splitter transmittance {transmittance} outside [0, 1]"
            )));
        }
        if i == j {
            return Err(Error::InvalidArgument(
                "beam splitter needs two distinct modes".into(),
            ));
        }
        Self::check_mode(modes, i)?;
        Self::check_mode(modes, j)?;
        let c = transmittance.sqrt();
        let s = (1.0 - transmittance).sqrt();
        let mut m = DMatrix::identity(2 * modes, 2 * modes);
        for quad in 0..2 {
            let (a, b) = (2 * i + quad, 2 * j + quad);
            m[(a, a)] = c;
            m[(a, b)] = s;
            m[(b, a)] = -s;
            m[(b, b)] = c;
        }
        Ok(Self {
            matrix: m,
            shift: DVector::zeros(2 * modes),
        })
    }

    /// Free phase rotation of mode `k` by `phi`, see [`rotation_block`].
    pub fn phase_rotation(modes: usize, phi: f64, k: usize) -> Result<Self> {
        Self::check_mode(modes, k)?;
        let mut m = DMatrix::identity(2 * modes, 2 * modes);
        m.fixed_view_mut::<2, 2>(2 * k, 2 * k)
            .copy_from(&rotation_block(phi));
        Ok(Self {
            matrix: m,
            shift: DVector::zeros(2 * modes),
        })
    }

    /// Single-mode squeezer `q ↦ e^{-r} q`, `p ↦ e^{r} p` on mode `k`.
    pub fn squeezer(modes: usize, r: f64, k: usize) -> Result<Self> {
        Self::check_mode(modes, k)?;
        let mut m = DMatrix::identity(2 * modes, 2 * modes);
        m[(2 * k, 2 * k)] = (-r).exp();
        m[(2 * k + 1, 2 * k + 1)] = r.exp();
        Ok(Self {
            matrix: m,
            shift: DVector::zeros(2 * modes),
        })
    }

    /// Phase-space displacement `x ↦ x + shift`.
    pub fn displacement(shift: DVector<f64>) -> Result<Self> {
        if !shift.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument(
                "displacement needs even length".into(),
            ));
        }
        let n = shift.len();
        Ok(Self {
            matrix: DMatrix::identity(n, n),
            shift,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn shift(&self) -> &DVector<f64> {
        &self.shift
    }

    pub fn modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    /// The map applying `self` first and then `next`.
    pub fn then(&self, next: &SymplecticMap) -> Result<Self> {
        if next.matrix.nrows() != self.matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.nrows(),
                found: next.matrix.nrows(),
            });
        }
        Ok(Self {
            matrix: &next.matrix * &self.matrix,
            shift: &next.matrix * &self.shift + &next.shift,
        })
    }

    pub fn residual(&self) -> f64 {
        check_symplectic(&self.matrix).expect("square even matrix by construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn form_is_antisymmetric_and_squares_to_minus_identity() {
        let g = SymplecticForm::new(3).into_matrix();
        assert_eq!(g.transpose(), -&g);
        assert_eq!(&g * &g, -DMatrix::<f64>::identity(6, 6));
    }

    #[test]
    fn identity_has_zero_residual() {
        assert_eq!(check_symplectic(&DMatrix::identity(4, 4)).unwrap(), 0.0);
        assert!(check_symplectic(&DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn beam_splitters_are_symplectic() {
        for t in [0.0, 1.0 / 3.0, 0.5, 2.0 / 3.0, 1.0] {
            let bs = SymplecticMap::beam_splitter(3, t, 0, 2).unwrap();
            assert!(bs.residual() < SYMPLECTIC_TOL);
            assert_abs_diff_eq!(bs.matrix().determinant(), 1.0, epsilon = 1e-12);
        }
        let unit = SymplecticMap::beam_splitter(2, 1.0, 0, 1).unwrap();
        assert_eq!(unit, SymplecticMap::identity(2));
    }

    #[test]
    fn beam_splitter_rejects_bad_arguments() {
        assert!(SymplecticMap::beam_splitter(2, 1.5, 0, 1).is_err());
        assert!(SymplecticMap::beam_splitter(2, -0.1, 0, 1).is_err());
        assert!(SymplecticMap::beam_splitter(2, 0.5, 1, 1).is_err());
        assert!(SymplecticMap::beam_splitter(2, 0.5, 0, 2).is_err());
    }

    #[test]
    fn rotations_compose_additively() {
        let zero = SymplecticMap::phase_rotation(2, 0.0, 1).unwrap();
        assert_eq!(zero, SymplecticMap::identity(2));
        let full = SymplecticMap::phase_rotation(2, 2.0 * PI, 1).unwrap();
        assert!(max_abs(&(full.matrix() - DMatrix::identity(4, 4))) < 1e-12);

        let a = SymplecticMap::phase_rotation(1, 0.3, 0).unwrap();
        let b = SymplecticMap::phase_rotation(1, 1.1, 0).unwrap();
        let ab = a.then(&b).unwrap();
        let direct = SymplecticMap::phase_rotation(1, 1.4, 0).unwrap();
        assert!(max_abs(&(ab.matrix() - direct.matrix())) < 1e-15);
    }

    #[test]
    fn constructor_rejects_non_symplectic() {
        let m = DMatrix::from_diagonal_element(2, 2, 2.0);
        assert!(matches!(
            SymplecticMap::new(m, DVector::zeros(2), 1e-12),
            Err(Error::NotSymplectic { .. })
        ));
    }

    #[test]
    fn squeezer_is_symplectic() {
        let sq = SymplecticMap::squeezer(2, 0.7, 1).unwrap();
        assert!(sq.residual() < SYMPLECTIC_TOL);
    }
}
