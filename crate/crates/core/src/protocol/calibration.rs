//! Fixing the feed-forward gain and output squeezing of the players-2-and-3 decoder.
//!
//! Maximising the h = 0 fidelity directly is ill-posed (the vacuum probe prefers
//! g = r = 0 at s = 0). Instead the decoder is required to transfer the secret's
//! mean with unit gain, which is solved by Newton iteration and then checked
//! against `F0 = 1/(1 + e^{-s})`.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::circuit::{encode, Decoder23};
use crate::error::{Error, Result};
use crate::gaussian::{fidelity_pure_mixed, GaussianState};

pub const CALIBRATION_TOL: f64 = 1e-6;
const NEWTON_TOL: f64 = 1e-14;
const MAX_NEWTON: usize = 50;
const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub s: f64,
    pub gain: f64,
    pub squeezing: f64,
    pub fidelity: f64,
    pub target: f64,
    pub deviation: f64,
    pub iterations: usize,
}

impl Calibration {
    pub fn decoder(&self) -> Decoder23 {
        Decoder23 {
            gain: self.gain,
            squeezing: self.squeezing,
        }
    }
}

pub fn f0_23(s: f64) -> f64 {
    1.0 / (1.0 + (-s).exp())
}

/// Ideal (h = 0) decoding of shares 2 and 3.
fn decode_ideal(secret: &GaussianState, s: f64, dec: &Decoder23) -> Result<GaussianState> {
    dec.decode(&encode(secret, s)?)
}

/// Diagonal of the mean-transfer matrix, minus one.
fn gain_error(s: f64, gain: f64, squeezing: f64) -> Result<Vector2<f64>> {
    let dec = Decoder23 { gain, squeezing };
    let q = decode_ideal(&GaussianState::coherent(1.0, 0.0), s, &dec)?;
    let p = decode_ideal(&GaussianState::coherent(0.0, 1.0), s, &dec)?;
    Ok(Vector2::new(q.mean()[0] - 1.0, p.mean()[1] - 1.0))
}

pub fn ideal_fidelity_23(s: f64, dec: &Decoder23) -> Result<f64> {
    let secret = GaussianState::coherent(0.0, 0.0);
    fidelity_pure_mixed(&secret, &decode_ideal(&secret, s, dec)?)
}

pub fn calibrate(s: f64) -> Result<Calibration> {
    calibrate_with_tolerance(s, CALIBRATION_TOL)
}

/// [`calibrate`] with a custom bound on `|F - F0|`.
pub fn calibrate_with_tolerance(s: f64, tolerance: f64) -> Result<Calibration> {
    let mut x = Vector2::new(0.0, 0.0);
    let mut iterations = 0;
    loop {
        let f = gain_error(s, x[0], x[1])?;
        if f.amax() < NEWTON_TOL {
            break;
        }
        if iterations == MAX_NEWTON {
            return Err(Error::Calibration {
                squeezing: s,
                deviation: f.amax(),
            });
        }
        let mut jac = Matrix2::zeros();
        for c in 0..2 {
            let mut hi = x;
            let mut lo = x;
            hi[c] += FD_STEP;
            lo[c] -= FD_STEP;
            let col =
                (gain_error(s, hi[0], hi[1])? - gain_error(s, lo[0], lo[1])?) / (2.0 * FD_STEP);
            jac.set_column(c, &col);
        }
        let step = jac.lu().solve(&f).ok_or_else(|| Error::Calibration {
            squeezing: s,
            deviation: f.amax(),
        })?;
        x -= step;
        iterations += 1;
    }
    let dec = Decoder23 {
        gain: x[0],
        squeezing: x[1],
    };
    let fidelity = ideal_fidelity_23(s, &dec)?;
    let target = f0_23(s);
    let deviation = (fidelity - target).abs();
    if !(deviation <= tolerance) {
        return Err(Error::Calibration {
            squeezing: s,
            deviation,
        });
    }
    Ok(Calibration {
        s,
        gain: x[0],
        squeezing: x[1],
        fidelity,
        target,
        deviation,
        iterations,
    })
}

/// Ideal fidelity over a grid of decoder settings, for diagnosing a failed calibration.
pub fn calibration_landscape(
    s: f64,
    gains: &[f64],
    squeezings: &[f64],
) -> Result<Vec<(f64, f64, f64)>> {
    let mut out = Vec::with_capacity(gains.len() * squeezings.len());
    for &gain in gains {
        for &squeezing in squeezings {
            out.push((
                gain,
                squeezing,
                ideal_fidelity_23(s, &Decoder23 { gain, squeezing })?,
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn converges_to_nominal_decoder() {
        for s in [0.0, 0.5, 1.0, 2.0] {
            let c = calibrate(s).unwrap();
            let nominal = Decoder23::nominal();
            assert_abs_diff_eq!(c.gain, nominal.gain, epsilon = 1e-10);
            assert_abs_diff_eq!(c.squeezing, nominal.squeezing, epsilon = 1e-10);
            assert!(c.deviation < CALIBRATION_TOL);
        }
    }

    #[test]
    fn is_deterministic() {
        assert_eq!(calibrate(1.0).unwrap(), calibrate(1.0).unwrap());
    }
}
