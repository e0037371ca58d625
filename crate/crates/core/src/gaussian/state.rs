use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};

use super::{max_abs, uncertainty_min_eigenvalue, SymplecticMap};
use crate::error::{Error, Result};
use crate::matrix_json;

/// Tolerance on `σ = σᵀ` and `σ + iΓ ⪰ 0` accepted by [`GaussianState::new`].
const PHYSICAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    #[serde(with = "matrix_json::dvector")]
    mean: DVector<f64>,
    #[serde(with = "matrix_json::dmatrix")]
    covariance: DMatrix<f64>,
}

impl GaussianState {
    /// Builds a state after checking shapes, symmetry and the uncertainty relation.
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let state = Self::from_parts(mean, covariance)?;
        let asym = max_abs(&(&state.covariance - state.covariance.transpose()));
        if asym > PHYSICAL_TOL {
            return Err(Error::InvalidArgument(format!(
                "covariance not symmetric (residual {asym:e})"
            )));
        }
        let lam = state.min_uncertainty_eigenvalue();
        if lam < -PHYSICAL_TOL {
            return Err(Error::InvalidArgument(format!(
                "covariance violates the uncertainty relation (min eigenvalue {lam:e})"
            )));
        }
        Ok(state)
    }

    /// Shape checks only. Used internally where physicality holds by construction.
    pub(crate) fn from_parts(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        if !covariance.is_square()
            || !covariance.nrows().is_multiple_of(2)
            || covariance.nrows() == 0
        {
            return Err(Error::InvalidArgument(format!(
                "covariance must be square with positive even dimension, got {}x{}",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        if mean.len() != covariance.nrows() {
            return Err(Error::DimensionMismatch {
                expected: covariance.nrows(),
                found: mean.len(),
            });
        }
        Ok(Self { mean, covariance })
    }

    pub fn vacuum(modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidArgument(
                "vacuum needs at least one mode".into(),
            ));
        }
        Ok(Self {
            mean: DVector::zeros(2 * modes),
            covariance: DMatrix::identity(2 * modes, 2 * modes),
        })
    }

    pub fn coherent(q0: f64, p0: f64) -> Self {
        Self {
            mean: DVector::from_vec(vec![q0, p0]),
            covariance: DMatrix::identity(2, 2),
        }
    }

    /// `σ = diag(e^{-2r}, e^{2r})`.
    pub fn squeezed_vacuum(r: f64) -> Self {
        Self {
            mean: DVector::zeros(2),
            covariance: DMatrix::from_diagonal(&DVector::from_vec(vec![
                (-2.0 * r).exp(),
                (2.0 * r).exp(),
            ])),
        }
    }

    /// Two-mode squeezed vacuum with `Var((q1 - q2)/√2) = e^{-s}`.
    pub fn two_mode_squeezed_vacuum(s: f64) -> Result<Self> {
        if !(s >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "two-mode squeezing must be >= 0, got {s}"
            )));
        }
        let (c, sh) = (s.cosh(), s.sinh());
        let mut cov = DMatrix::identity(4, 4) * c;
        cov[(0, 2)] = sh;
        cov[(2, 0)] = sh;
        cov[(1, 3)] = -sh;
        cov[(3, 1)] = -sh;
        Ok(Self {
            mean: DVector::zeros(4),
            covariance: cov,
        })
    }

    /// Single-mode thermal state `σ = (2 n̄ + 1) I`.
    pub fn thermal(nbar: f64) -> Result<Self> {
        if !(nbar >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "thermal occupation must be >= 0, got {nbar}"
            )));
        }
        Ok(Self {
            mean: DVector::zeros(2),
            covariance: DMatrix::identity(2, 2) * (2.0 * nbar + 1.0),
        })
    }

    pub fn modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// The 2×2 covariance block of a single mode.
    pub fn mode_covariance(&self, k: usize) -> Matrix2<f64> {
        self.covariance
            .fixed_view::<2, 2>(2 * k, 2 * k)
            .into_owned()
    }

    pub fn min_uncertainty_eigenvalue(&self) -> f64 {
        uncertainty_min_eigenvalue(&self.covariance)
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        self.min_uncertainty_eigenvalue() >= -tol
    }

    /// Tensor product `self ⊗ other`, with `self`'s modes first.
    pub fn tensor(&self, other: &GaussianState) -> Self {
        let (a, b) = (self.mean.len(), other.mean.len());
        let mut mean = DVector::zeros(a + b);
        mean.rows_mut(0, a).copy_from(&self.mean);
        mean.rows_mut(a, b).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(a + b, a + b);
        cov.view_mut((0, 0), (a, a)).copy_from(&self.covariance);
        cov.view_mut((a, a), (b, b)).copy_from(&other.covariance);
        Self {
            mean,
            covariance: cov,
        }
    }

    pub fn apply(&self, map: &SymplecticMap) -> Result<Self> {
        if map.matrix().nrows() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: map.matrix().nrows(),
            });
        }
        let s = map.matrix();
        Ok(Self {
            mean: s * &self.mean + map.shift(),
            covariance: s * &self.covariance * s.transpose(),
        })
    }

    /// Applies the single-mode channel `d ↦ M d + c`, `σ ↦ M σ Mᵀ + N` to mode `k`,
    /// leaving the other modes untouched.
    pub fn apply_local(
        &self,
        k: usize,
        m: &Matrix2<f64>,
        n: &Matrix2<f64>,
        shift: [f64; 2],
    ) -> Result<Self> {
        if k >= self.modes() {
            return Err(Error::InvalidArgument(format!(
                "mode {k} out of range for {} modes",
                self.modes()
            )));
        }
        let dim = self.mean.len();
        let mut full = DMatrix::identity(dim, dim);
        full.fixed_view_mut::<2, 2>(2 * k, 2 * k).copy_from(m);
        let mut mean = &full * &self.mean;
        mean[2 * k] += shift[0];
        mean[2 * k + 1] += shift[1];
        let mut cov = &full * &self.covariance * full.transpose();
        let mut block = cov.fixed_view_mut::<2, 2>(2 * k, 2 * k);
        block += n;
        Ok(Self {
            mean,
            covariance: cov,
        })
    }

    /// Restriction to the listed modes, in the given order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::InvalidArgument(
                "partial trace must keep at least one mode".into(),
            ));
        }
        let n = self.modes();
        for (i, &k) in keep.iter().enumerate() {
            if k >= n {
                return Err(Error::InvalidArgument(format!(
                    "mode {k} out of range for {n} modes"
                )));
            }
            if keep[..i].contains(&k) {
                return Err(Error::InvalidArgument(format!("mode {k} listed twice")));
            }
        }
        let rows: Vec<usize> = keep.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
        let mean = DVector::from_iterator(rows.len(), rows.iter().map(|&r| self.mean[r]));
        let cov = DMatrix::from_fn(rows.len(), rows.len(), |i, j| {
            self.covariance[(rows[i], rows[j])]
        });
        Ok(Self {
            mean,
            covariance: cov,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn vacuum_saturates_uncertainty() {
        let v = GaussianState::vacuum(3).unwrap();
        assert_eq!(v.covariance(), &DMatrix::identity(6, 6));
        assert_abs_diff_eq!(v.min_uncertainty_eigenvalue(), 0.0, epsilon = 1e-12);
        assert!(GaussianState::vacuum(0).is_err());
    }

    #[test]
    fn squeezed_vacuum_is_pure() {
        let s = GaussianState::squeezed_vacuum(0.125);
        assert_abs_diff_eq!(s.covariance()[(0, 0)], (-0.25_f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.covariance()[(1, 1)], 0.25_f64.exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.covariance().determinant(), 1.0, epsilon = 1e-14);
        assert_eq!(
            GaussianState::squeezed_vacuum(0.0),
            GaussianState::vacuum(1).unwrap()
        );
    }

    #[test]
    fn tmsv_difference_variance() {
        for s in [0.0, 0.5, 1.0, 2.0, 5.0] {
            let t = GaussianState::two_mode_squeezed_vacuum(s).unwrap();
            let c = t.covariance();
            let var = 0.5 * (c[(0, 0)] + c[(2, 2)] - 2.0 * c[(0, 2)]);
            assert_abs_diff_eq!(var, (-s).exp(), epsilon = 1e-12 * s.cosh());
            assert!(t.is_physical(1e-9 * s.cosh()));
        }
        assert!(GaussianState::two_mode_squeezed_vacuum(-0.1).is_err());
    }

    #[test]
    fn tracing_tmsv_arm_gives_thermal() {
        let s = 1.3;
        let t = GaussianState::two_mode_squeezed_vacuum(s).unwrap();
        let arm = t.partial_trace(&[1]).unwrap();
        assert!(max_abs(&(arm.covariance() - DMatrix::identity(2, 2) * s.cosh())) < 1e-14);
        assert_eq!(t.partial_trace(&[0, 1]).unwrap(), t);
        assert!(t.partial_trace(&[]).is_err());
        assert!(t.partial_trace(&[2]).is_err());
        assert!(t.partial_trace(&[0, 0]).is_err());
    }

    #[test]
    fn balanced_splitter_divides_coherent_amplitude() {
        let input =
            GaussianState::coherent(2.0_f64.sqrt(), 0.0).tensor(&GaussianState::vacuum(1).unwrap());
        let bs = SymplecticMap::beam_splitter(2, 0.5, 1, 0).unwrap();
        let out = input.apply(&bs).unwrap();
        assert_abs_diff_eq!(out.mean()[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.mean()[2], 1.0, epsilon = 1e-15);
        assert!(max_abs(&(out.covariance() - DMatrix::identity(4, 4))) < 1e-15);
    }

    #[test]
    fn new_rejects_unphysical() {
        let bad = DMatrix::identity(2, 2) * 0.5;
        assert!(GaussianState::new(DVector::zeros(2), bad).is_err());
        assert!(GaussianState::new(DVector::zeros(3), DMatrix::identity(2, 2)).is_err());
        let mut asym = DMatrix::identity(2, 2) * 2.0;
        asym[(0, 1)] = 0.5;
        assert!(GaussianState::new(DVector::zeros(2), asym).is_err());
    }

    #[test]
    fn local_channel_only_touches_target() {
        let t = GaussianState::two_mode_squeezed_vacuum(0.4).unwrap();
        let m = Matrix2::new(0.0, 1.0, -1.0, 0.0);
        let n = Matrix2::identity() * 0.1;
        let out = t.apply_local(1, &m, &n, [0.3, 0.0]).unwrap();
        assert_eq!(out.mode_covariance(0), t.mode_covariance(0));
        assert_abs_diff_eq!(out.mean()[2], 0.3);
        assert_abs_diff_eq!(
            out.covariance()[(2, 2)],
            0.4_f64.cosh() + 0.1,
            epsilon = 1e-14
        );
        assert!(t.apply_local(2, &m, &n, [0.0, 0.0]).is_err());
    }
}
