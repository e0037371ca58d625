use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_N_MAX: usize = 20;

/// Rigid cavity of proper length `L` whose centre has proper acceleration `h / L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityGeometry {
    length: f64,
    h: f64,
    n_max: usize,
}

impl CavityGeometry {
    pub fn new(length: f64, h: f64, n_max: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "cavity length must be positive, got {length}"
            )));
        }
        if !(0.0..2.0).contains(&h) {
            return Err(Error::InvalidArgument(format!(
                "h must lie in [0, 2), got {h}"
            )));
        }
        if n_max < 2 {
            return Err(Error::InvalidArgument(format!(
                "n_max must be at least 2, got {n_max}"
            )));
        }
        Ok(Self { length, h, n_max })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn with_h(&self, h: f64) -> Result<Self> {
        Self::new(self.length, h, self.n_max)
    }

    pub fn with_n_max(&self, n_max: usize) -> Result<Self> {
        Self::new(self.length, self.h, n_max)
    }

    /// Wall positions `(x_L, x_R)` in the inertial frame.
    ///
    /// With `h > 0` these are the Rindler radii `L(1/h ∓ 1/2)`; an inertial
    /// cavity (`h = 0`) is placed at `[0, L]`.
    pub fn walls(&self) -> (f64, f64) {
        if self.h == 0.0 {
            (0.0, self.length)
        } else {
            (
                self.length * (1.0 / self.h - 0.5),
                self.length * (1.0 / self.h + 0.5),
            )
        }
    }

    /// `ln(x_R / x_L) = 2 artanh(h/2)`.
    pub fn log_wall_ratio(&self) -> f64 {
        2.0 * (0.5 * self.h).atanh()
    }

    pub fn minkowski_frequency(&self, n: usize) -> f64 {
        n as f64 * std::f64::consts::PI / self.length
    }

    /// Rindler frequency `Ω_n = nπ / ln(x_R/x_L)` (conjugate to dimensionless η).
    pub fn rindler_frequency(&self, n: usize) -> Result<f64> {
        self.require_accelerated()?;
        Ok(n as f64 * std::f64::consts::PI / self.log_wall_ratio())
    }

    pub(crate) fn require_accelerated(&self) -> Result<()> {
        if self.h == 0.0 {
            return Err(Error::InvalidArgument(
                "Rindler modes need h > 0; use Minkowski modes for an inertial cavity".into(),
            ));
        }
        Ok(())
    }
}

/// Dimensionless duration `u = hτ / (4L artanh(h/2))` of an acceleration leg of proper time `τ`.
pub fn phase_u(h: f64, tau: f64, length: f64) -> Result<f64> {
    check_h(h)?;
    if !(tau >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "proper time must be >= 0, got {tau}"
        )));
    }
    Ok(h * tau / (4.0 * length * (0.5 * h).atanh()))
}

/// Inverse of [`phase_u`].
pub fn tau_from_u(h: f64, u: f64, length: f64) -> Result<f64> {
    check_h(h)?;
    Ok(4.0 * length * (0.5 * h).atanh() * u / h)
}

fn check_h(h: f64) -> Result<()> {
    if !(h > 0.0 && h < 2.0) {
        return Err(Error::InvalidArgument(format!(
            "h must lie in (0, 2), got {h}"
        )));
    }
    Ok(())
}
