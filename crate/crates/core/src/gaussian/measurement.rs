use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};

use super::GaussianState;
use crate::error::{Error, Result};

/// Relative singular-value cutoff for the homodyne pseudoinverse.
const PINV_CUTOFF: f64 = 1e-12;

/// Accepted excess of `det σ` over 1 for a state declared pure.
const PURITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    Q,
    P,
}

impl Quadrature {
    fn offset(self) -> usize {
        match self {
            Quadrature::Q => 0,
            Quadrature::P => 1,
        }
    }
}

impl GaussianState {
    /// Homodyne detection of `quadrature` on `measured`, followed by displacing the
    /// same quadrature of `target` by `gain × outcome`, averaged over outcomes.
    ///
    /// Returns the state of the remaining modes in their original order.
    pub fn homodyne_feedforward(
        &self,
        measured: usize,
        target: usize,
        gain: f64,
        quadrature: Quadrature,
    ) -> Result<GaussianState> {
        let n = self.modes();
        if measured >= n || target >= n {
            return Err(Error::InvalidArgument(format!(
                "modes ({measured}, {target}) out of range for {n} modes"
            )));
        }
        if measured == target {
            return Err(Error::InvalidArgument(
                "measured and target mode must differ".into(),
            ));
        }
        let keep: Vec<usize> = (0..n).filter(|&k| k != measured).collect();
        let rows: Vec<usize> = keep.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
        let m = [2 * measured, 2 * measured + 1];
        let sigma = self.covariance();
        let d = self.mean();

        let a = DMatrix::from_fn(rows.len(), rows.len(), |i, j| sigma[(rows[i], rows[j])]);
        let c = DMatrix::from_fn(rows.len(), 2, |i, j| sigma[(rows[i], m[j])]);
        let b = Matrix2::new(
            sigma[(m[0], m[0])],
            sigma[(m[0], m[1])],
            sigma[(m[1], m[0])],
            sigma[(m[1], m[1])],
        );

        let q = quadrature.offset();
        let mut proj = Matrix2::zeros();
        proj[(q, q)] = 1.0;
        let p = proj * b * proj;
        if !(p[(q, q)] > 0.0) {
            return Err(Error::Inconsistent(format!(
                "measured quadrature variance {} is not positive",
                p[(q, q)]
            )));
        }
        let p_pinv = p
            .svd(true, true)
            .pseudo_inverse(PINV_CUTOFF * p.norm())
            .map_err(|e| Error::Inconsistent(format!("homodyne pseudoinverse: {e}")))?;
        let p_dyn = DMatrix::from_fn(2, 2, |i, j| p[(i, j)]);
        let p_pinv = DMatrix::from_fn(2, 2, |i, j| p_pinv[(i, j)]);

        let k = &c * &p_pinv;
        let t_row = 2 * keep.iter().position(|&x| x == target).expect("target kept") + q;
        let mut kd = k.clone();
        kd[(t_row, q)] += gain;

        let conditional = &a - &k * c.transpose();
        let covariance = conditional + &kd * &p_dyn * kd.transpose();
        let mut mean = DVector::from_iterator(rows.len(), rows.iter().map(|&r| d[r]));
        mean[t_row] += gain * d[m[q]];
        GaussianState::from_parts(mean, covariance)
    }
}

/// Fidelity between a pure single-mode state and an arbitrary single-mode state.
pub fn fidelity_pure_mixed(pure: &GaussianState, other: &GaussianState) -> Result<f64> {
    for st in [pure, other] {
        if st.modes() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: st.mean().len(),
            });
        }
    }
    let det = pure.covariance().determinant();
    if det > 1.0 + PURITY_TOL {
        return Err(Error::NotPure { det });
    }
    let sum = pure.covariance() + other.covariance();
    let delta = pure.mean() - other.mean();
    let det_sum = sum.determinant();
    let inv = sum
        .try_inverse()
        .ok_or_else(|| Error::Inconsistent("singular covariance sum in fidelity".into()))?;
    let quad = (delta.transpose() * inv * &delta)[(0, 0)];
    Ok(2.0 * (-quad).exp() / det_sum.sqrt())
}
