use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::calibration::{calibrate, f0_23, Calibration};
use super::circuit::{collaborate_23_state, distribute, encode, run_12, Decoder23, ShareChannels};
use super::config::{ProtocolConfig, SecretSpec};
use crate::error::{Error, Result};
use crate::gaussian::{fidelity_pure_mixed, GaussianState};
use crate::modes::{bbb_bogoliubov, mode_sums, BogoliubovSet, ModeSums};

/// Step in `h²` of the five-point stencil used for first-order propagation.
const STENCIL_STEP: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// Players 1 and 2.
    #[serde(rename = "12")]
    Players12,
    /// Players 2 and 3 (players 1 and 3 behave identically).
    #[serde(rename = "23")]
    Players23,
}

impl Scenario {
    pub fn label(self) -> &'static str {
        match self {
            Scenario::Players12 => "12",
            Scenario::Players23 => "23",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "12" => Ok(Scenario::Players12),
            "23" | "13" => Ok(Scenario::Players23),
            other => Err(Error::InvalidArgument(format!(
                "unknown scenario {other:?}; expected 12 or 23"
            ))),
        }
    }
}

/// Closed-form fidelity coefficients, `F = F0 - F2 h²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForms {
    /// `2(2 f_β(2u) + f_β(u))`, coherent secrets.
    pub f2_12_printed: f64,
    /// `2(2 f_β(u) + f_β(2u))`, from composing the five channels of the return trip.
    pub f2_12_derived: f64,
    pub f0_23: f64,
    /// `4eˢ/(1+eˢ)² [f_β - f_α + eˢ(f_α + 2 f_β)]`.
    pub f2_23: f64,
    /// `4(f_α + 2 f_β)`, the `s → ∞` limit of `f2_23`.
    pub f2_23_limit: f64,
}

pub fn fidelity_closed_forms(sums_u: &ModeSums, sums_2u: &ModeSums, s: f64) -> ClosedForms {
    let (fa, fb) = (sums_u.f_alpha, sums_u.f_beta);
    // 4eˢ/(1+eˢ)² = 1/cosh²(s/2) and 4e²ˢ/(1+eˢ)² = 4/(1+e⁻ˢ)², written to avoid overflow
    let f2_23 =
        (fb - fa) / (0.5 * s).cosh().powi(2) + 4.0 * (fa + 2.0 * fb) / (1.0 + (-s).exp()).powi(2);
    ClosedForms {
        f2_12_printed: 2.0 * (2.0 * sums_2u.f_beta + fb),
        f2_12_derived: 2.0 * (2.0 * fb + sums_2u.f_beta),
        f0_23: f0_23(s),
        f2_23,
        f2_23_limit: 4.0 * (fa + 2.0 * fb),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimPoint {
    pub h: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub scenario: Scenario,
    pub k: usize,
    pub u: f64,
    pub s: f64,
    pub secret: SecretSpec,
    /// Printed closed forms; `f0_formula`/`f2_formula` are `None` where no closed form exists.
    pub f0_formula: Option<f64>,
    pub f2_formula: Option<f64>,
    /// Re-derived scenario-12 coefficient, for comparison with the printed one.
    pub f2_derived: Option<f64>,
    pub f0_sim: f64,
    /// `(F0 - F(h))/h²` extrapolated to `h → 0` over the ladder.
    pub f2_sim: f64,
    /// `-dF/d(h²)` at zero, from exact first-order propagation of the moments.
    pub f2_first_order: f64,
    pub ladder: Vec<SimPoint>,
    /// Simulated fidelity at the configured `h`.
    pub at_h: SimPoint,
    pub decoder: Option<Calibration>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub formula: String,
    pub simulation: String,
    pub h_ladder: [f64; 3],
    pub n_max: usize,
    pub phase_compensation: bool,
}

impl FidelityReport {
    /// Relative difference between the extrapolated and the printed second-order coefficient.
    pub fn f2_relative_error(&self) -> Option<f64> {
        self.f2_formula.map(|f| (self.f2_sim - f).abs() / f.abs())
    }
}

/// Everything needed to run either collaboration scenario for one configuration.
#[derive(Debug, Clone)]
pub struct Protocol {
    pub config: ProtocolConfig,
    pub channels: ShareChannels,
    pub sums_u: ModeSums,
    pub sums_2u: ModeSums,
    pub decoder: Decoder23,
    pub calibration: Option<Calibration>,
}

impl Protocol {
    pub fn new(config: &ProtocolConfig, transition: &BogoliubovSet) -> Result<Self> {
        config.validate()?;
        if transition.n_max() != config.n_max {
            return Err(Error::DimensionMismatch {
                expected: config.n_max,
                found: transition.n_max(),
            });
        }
        let o = &config.overrides;
        let channels = ShareChannels::new(
            transition,
            config.k,
            config.u,
            o.inertial_phase,
            o.static_phase,
            config.compensate_phases(),
        )?;
        let tol = Some(config.tail_tolerance());
        let sums_u = mode_sums(&bbb_bogoliubov(transition, config.u)?, config.k, tol)?;
        let sums_2u = mode_sums(&bbb_bogoliubov(transition, 2.0 * config.u)?, config.k, tol)?;
        let (decoder, calibration) = match (o.decoder_gain, o.decoder_squeezing) {
            (Some(gain), Some(squeezing)) => (Decoder23 { gain, squeezing }, None),
            _ => {
                let c = calibrate(config.s)?;
                (c.decoder(), Some(c))
            }
        };
        Ok(Self {
            config: config.clone(),
            channels,
            sums_u,
            sums_2u,
            decoder,
            calibration,
        })
    }

    pub fn closed_forms(&self) -> ClosedForms {
        fidelity_closed_forms(&self.sums_u, &self.sums_2u, self.config.s)
    }

    /// Decoded state of a scenario at `h²`.
    pub fn decoded(
        &self,
        scenario: Scenario,
        secret: &GaussianState,
        h2: f64,
    ) -> Result<GaussianState> {
        let encoded = encode(secret, self.config.s)?;
        match scenario {
            Scenario::Players12 => self.collaborate_12(&encoded, h2),
            Scenario::Players23 => {
                let distributed = distribute(&encoded, &self.channels, h2)?;
                self.collaborate_23(&distributed, h2)
            }
        }
    }

    /// Players 1 and 2. Takes the encoded state: their shares' return trip
    /// `E(u)∘G∘E(2u)∘G∘E(u)` spans both distribution and collaboration.
    pub fn collaborate_12(&self, encoded: &GaussianState, h2: f64) -> Result<GaussianState> {
        run_12(encoded, &self.channels, h2)
    }

    pub fn collaborate_23(&self, distributed: &GaussianState, h2: f64) -> Result<GaussianState> {
        collaborate_23_state(distributed, &self.channels, &self.decoder, h2)
    }

    /// Players 1 and 3: identical to players 2 and 3 by symmetry.
    pub fn collaborate_13(&self, distributed: &GaussianState, h2: f64) -> Result<GaussianState> {
        self.collaborate_23(distributed, h2)
    }

    pub fn fidelity(&self, scenario: Scenario, secret: &SecretSpec, h: f64) -> Result<f64> {
        let s = secret.state();
        fidelity_pure_mixed(&s, &self.decoded(scenario, &s, h * h)?)
    }

    /// `-dF/d(h²)` at `h = 0` from the exact derivative of the decoded moments.
    ///
    /// The moments are polynomials of degree at most four in `h²`, so the
    /// five-point stencil is exact up to rounding.
    pub fn first_order_f2(&self, scenario: Scenario, secret: &SecretSpec) -> Result<f64> {
        let s = secret.state();
        let e = STENCIL_STEP;
        let at = |x: f64| self.decoded(scenario, &s, x);
        let (m2, m1, z, p1, p2) = (at(-2.0 * e)?, at(-e)?, at(0.0)?, at(e)?, at(2.0 * e)?);
        let stencil = |f: &dyn Fn(&GaussianState) -> DMatrix<f64>| {
            (8.0 * (f(&p1) - f(&m1)) - (f(&p2) - f(&m2))) / (12.0 * e)
        };
        let dsigma = stencil(&|g| g.covariance().clone());
        let dmean: DVector<f64> =
            stencil(&|g| DMatrix::from_column_slice(2, 1, g.mean().as_slice()))
                .column(0)
                .into();

        let a = s.covariance() + z.covariance();
        let a_inv = a
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Inconsistent("singular covariance sum".into()))?;
        let delta = s.mean() - z.mean();
        let ddelta = -dmean;
        let f0 = fidelity_pure_mixed(&s, &z)?;
        let dq = 2.0 * (delta.transpose() * &a_inv * &ddelta)[(0, 0)]
            - (delta.transpose() * &a_inv * &dsigma * &a_inv * &delta)[(0, 0)];
        let dlog = -dq - 0.5 * (&a_inv * &dsigma).trace();
        Ok(-f0 * dlog)
    }

    pub fn report(&self, scenario: Scenario) -> Result<FidelityReport> {
        let secret = self.config.secret;
        let ladder_h = self.config.ladder();
        let f0_sim = self.fidelity(scenario, &secret, 0.0)?;
        let ladder = ladder_h
            .iter()
            .map(|&h| {
                Ok(SimPoint {
                    h,
                    fidelity: self.fidelity(scenario, &secret, h)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let slopes: Vec<(f64, f64)> = ladder
            .iter()
            .map(|p| (p.h * p.h, (f0_sim - p.fidelity) / (p.h * p.h)))
            .collect();
        let f2_sim = richardson_at_zero(&slopes);
        let f2_first_order = self.first_order_f2(scenario, &secret)?;
        let at_h = SimPoint {
            h: self.config.h,
            fidelity: self.fidelity(scenario, &secret, self.config.h)?,
        };
        let cf = self.closed_forms();
        let (f0_formula, f2_formula, f2_derived, formula) = match scenario {
            Scenario::Players12 if secret.is_coherent() => (
                Some(1.0),
                Some(cf.f2_12_printed),
                Some(cf.f2_12_derived),
                "printed: F = 1 - 2(2 f_beta(2u) + f_beta(u)) h^2; derived: 2(2 f_beta(u) + f_beta(2u))",
            ),
            Scenario::Players12 => (None, None, None, "no closed form for non-coherent secrets"),
            Scenario::Players23 => (
                Some(cf.f0_23),
                Some(cf.f2_23),
                None,
                "printed: F0 = 1/(1+e^-s), F2 = 4e^s/(1+e^s)^2 [f_beta - f_alpha + e^s (f_alpha + 2 f_beta)]",
            ),
        };
        Ok(FidelityReport {
            scenario,
            k: self.config.k,
            u: self.config.u,
            s: self.config.s,
            secret,
            f0_formula,
            f2_formula,
            f2_derived,
            f0_sim,
            f2_sim,
            f2_first_order,
            ladder,
            at_h,
            decoder: if scenario == Scenario::Players23 { self.calibration } else { None },
            provenance: Provenance {
                formula: formula.into(),
                simulation: "Gaussian moment propagation; F2 by Richardson extrapolation in h^2 over the ladder".into(),
                h_ladder: ladder_h,
                n_max: self.config.n_max,
                phase_compensation: self.config.compensate_phases(),
            },
        })
    }
}

/// Value at `x = 0` of the polynomial through the given `(x, y)` points.
pub fn richardson_at_zero(points: &[(f64, f64)]) -> f64 {
    points
        .iter()
        .enumerate()
        .map(|(i, &(xi, yi))| {
            let w: f64 = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &(xj, _))| xj / (xj - xi))
                .product();
            yi * w
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn richardson_removes_polynomial_terms() {
        let pts: Vec<(f64, f64)> = [1e-4, 2.5e-5, 6.25e-6]
            .iter()
            .map(|&x| (x, 0.3 + 2.0 * x - 7.0 * x * x))
            .collect();
        assert_abs_diff_eq!(richardson_at_zero(&pts), 0.3, epsilon = 1e-14);
    }

    #[test]
    fn scenario_labels_round_trip() {
        assert_eq!("12".parse::<Scenario>().unwrap(), Scenario::Players12);
        assert_eq!("13".parse::<Scenario>().unwrap(), Scenario::Players23);
        assert!("14".parse::<Scenario>().is_err());
        assert_eq!(
            serde_json::to_string(&Scenario::Players23).unwrap(),
            "\"23\""
        );
    }
}
