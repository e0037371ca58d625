use serde::{Deserialize, Serialize};

use super::functions::C64;
use super::BogoliubovSet;
use crate::error::{Error, Result};
use crate::matrix_json;

/// First-order mode sums of a BBB row `k`:
/// `f_α = ½ Σ_{n≠k} |α1_kn|²`, `f_β = ½ Σ_{n≠k} |β1_kn|²`, `g = Σ_{n≠k} α1_kn β1_kn`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSums {
    pub k: usize,
    pub u: f64,
    pub f_alpha: f64,
    pub f_beta: f64,
    #[serde(with = "matrix_json::complex")]
    pub g: C64,
    /// Bounds on the parts of `f_α`, `f_β` beyond the truncation.
    pub tail_alpha: f64,
    pub tail_beta: f64,
}

impl ModeSums {
    /// Bound on the neglected part of `|g|`, from Cauchy-Schwarz on the tails.
    pub fn tail_g(&self) -> f64 {
        2.0 * (self.tail_alpha * self.tail_beta).sqrt()
    }

    pub fn tail(&self) -> f64 {
        self.tail_alpha + self.tail_beta
    }
}

/// Number of trailing terms used to estimate the decay constant of the tail.
const TAIL_FIT_TERMS: usize = 3;

pub fn mode_sums(bbb: &BogoliubovSet, k: usize, tail_tolerance: Option<f64>) -> Result<ModeSums> {
    let u = bbb.u.ok_or_else(|| {
        Error::InvalidArgument("mode sums need BBB coefficients with a duration".into())
    })?;
    let n_max = bbb.n_max();
    if k == 0 || k + TAIL_FIT_TERMS > n_max {
        return Err(Error::InvalidArgument(format!(
            "mode {k} needs 1 <= k <= n_max - {TAIL_FIT_TERMS} (n_max = {n_max})"
        )));
    }
    let (a1, b1) = (bbb.alpha(1), bbb.beta(1));
    let r = k - 1;
    let mut f_alpha = 0.0;
    let mut f_beta = 0.0;
    let mut g = C64::from(0.0);
    for c in (0..n_max).filter(|&c| c != r) {
        f_alpha += 0.5 * a1[(r, c)].norm_sqr();
        f_beta += 0.5 * b1[(r, c)].norm_sqr();
        g += a1[(r, c)] * b1[(r, c)];
    }

    // |α1_kn| ~ C √n / (n-k)³ and |β1_kn| ~ C √n / (n+k)³; bound the rest by integrals.
    let kf = k as f64;
    let mut c_alpha = 0.0_f64;
    let mut c_beta = 0.0_f64;
    for n in (n_max + 1 - TAIL_FIT_TERMS)..=n_max {
        let nf = n as f64;
        c_alpha = c_alpha.max(a1[(r, n - 1)].norm() * (nf - kf).powi(3) / nf.sqrt());
        c_beta = c_beta.max(b1[(r, n - 1)].norm() * (nf + kf).powi(3) / nf.sqrt());
    }
    let m = n_max as f64 - kf;
    let tail_alpha = 0.5 * c_alpha * c_alpha * (1.0 / (4.0 * m.powi(4)) + kf / (5.0 * m.powi(5)));
    let tail_beta = 0.5 * c_beta * c_beta / (4.0 * (n_max as f64 + kf).powi(4));

    let sums = ModeSums {
        k,
        u,
        f_alpha,
        f_beta,
        g,
        tail_alpha,
        tail_beta,
    };
    if let Some(tol) = tail_tolerance {
        if sums.tail() > tol {
            return Err(Error::TruncationTail {
                tail: sums.tail(),
                tolerance: tol,
            });
        }
    }
    Ok(sums)
}
