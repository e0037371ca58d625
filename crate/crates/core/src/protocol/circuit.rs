//! Encoding, relativistic distribution and decoding circuits.
//!
//! Modes of the encoded state are the shares in order `[1, 2, 3]`.

use std::f64::consts::PI;

use crate::channel::{bbb_channel, free_channel, GaussianChannel};
use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, Quadrature, SymplecticMap};
use crate::modes::{bbb_bogoliubov, BogoliubovSet};

/// Balanced splitting of the secret with one arm of a two-mode squeezed vacuum.
///
/// Share 1 is `(x_s - x_a)/√2`, share 2 is `(x_s + x_a)/√2` and share 3 is the other arm.
pub fn encode(secret: &GaussianState, s: f64) -> Result<GaussianState> {
    if secret.modes() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: secret.mean().len(),
        });
    }
    let state = secret.tensor(&GaussianState::two_mode_squeezed_vacuum(s)?);
    state.apply(&SymplecticMap::beam_splitter(3, 0.5, 1, 0)?)
}

/// Rotation angle of a 2×2 rotation block `[[cos, sin], [-sin, cos]]`.
fn rotation_angle(c: &GaussianChannel) -> f64 {
    c.m0[(0, 1)].atan2(c.m0[(0, 0)])
}

/// The channels one share can experience, for a fixed cavity mode and leg duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShareChannels {
    /// One BBB of duration `u`.
    pub leg: GaussianChannel,
    /// One BBB of duration `2u`.
    pub double_leg: GaussianChannel,
    /// Free evolution between accelerations.
    pub inertial: GaussianChannel,
    /// Free evolution of a share held in a static cavity.
    pub idle: GaussianChannel,
    pub compensate: bool,
}

impl ShareChannels {
    /// `inertial_phase` defaults to `π - 2φ_a` with `φ_a = 2πku`.
    pub fn new(
        transition: &BogoliubovSet,
        k: usize,
        u: f64,
        inertial_phase: Option<f64>,
        static_phase: Option<f64>,
        compensate: bool,
    ) -> Result<Self> {
        let leg = bbb_channel(&bbb_bogoliubov(transition, u)?, k)?;
        let double_leg = bbb_channel(&bbb_bogoliubov(transition, 2.0 * u)?, k)?;
        let phi_a = 2.0 * PI * k as f64 * u;
        Ok(Self {
            leg,
            double_leg,
            inertial: free_channel(k, inertial_phase.unwrap_or(PI - 2.0 * phi_a)),
            idle: free_channel(k, static_phase.unwrap_or(0.0)),
            compensate,
        })
    }

    /// `E₂ = E(u) ∘ G ∘ E(u)`: out to a distant player, or back.
    pub fn round(&self) -> GaussianChannel {
        GaussianChannel::sequence(&[self.leg, self.inertial, self.leg])
    }

    /// `E₁ = E(u) ∘ G ∘ E(2u) ∘ G ∘ E(u)`: out and back, with the two middle legs merged.
    pub fn return_trip(&self) -> GaussianChannel {
        GaussianChannel::sequence(&[
            self.leg,
            self.inertial,
            self.double_leg,
            self.inertial,
            self.leg,
        ])
    }

    /// Appends the known inverse of the channel's zeroth-order rotation, when enabled.
    pub fn compensated(&self, c: GaussianChannel) -> GaussianChannel {
        if self.compensate {
            c.then(&free_channel(c.k.unwrap_or(0), -rotation_angle(&c)))
        } else {
            c
        }
    }
}

/// Shares 1 and 2 travel to distant players; share 3 stays with the dealer.
///
/// Pipelines take `h2 = h²` so that derivative stencils may probe negative values.
pub fn distribute(encoded: &GaussianState, ch: &ShareChannels, h2: f64) -> Result<GaussianState> {
    if encoded.modes() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 6,
            found: encoded.mean().len(),
        });
    }
    let round = ch.round();
    let state = round.apply_h2(encoded, 0, h2)?;
    let state = round.apply_h2(&state, 1, h2)?;
    ch.idle.apply_h2(&state, 2, h2)
}

/// Players 1 and 2 recombine their shares on a balanced beam splitter.
pub fn decode_12(shares: &GaussianState) -> Result<GaussianState> {
    shares
        .apply(&SymplecticMap::beam_splitter(3, 0.5, 0, 1)?)?
        .partial_trace(&[0])
}

/// Decoder settings for players 2 and 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decoder23 {
    pub gain: f64,
    pub squeezing: f64,
}

impl Decoder23 {
    /// Unit-gain solution `g = -2√2`, `r = ln(3)/2`.
    pub fn nominal() -> Self {
        Self {
            gain: -2.0 * 2.0_f64.sqrt(),
            squeezing: 0.5 * 3.0_f64.ln(),
        }
    }

    /// Mixes shares 2 and 3 (2/3 of share 2 into the output port), measures `q`
    /// of the other port, feeds it forward onto `q` of the output, then squeezes.
    pub fn decode(&self, shares: &GaussianState) -> Result<GaussianState> {
        let mixed = shares.apply(&SymplecticMap::beam_splitter(3, 2.0 / 3.0, 1, 2)?)?;
        let fed = mixed.homodyne_feedforward(2, 1, self.gain, Quadrature::Q)?;
        fed.apply(&SymplecticMap::squeezer(2, self.squeezing, 1)?)?
            .partial_trace(&[1])
    }
}

/// Full scenario-12 pipeline at `h`: both traveling shares make the return trip.
pub fn run_12(encoded: &GaussianState, ch: &ShareChannels, h2: f64) -> Result<GaussianState> {
    let trip = ch.compensated(ch.return_trip());
    let state = trip.apply_h2(encoded, 0, h2)?;
    let state = trip.apply_h2(&state, 1, h2)?;
    decode_12(&state)
}

/// Scenario-23 collaboration on an already distributed state: share 2 idles while
/// share 3 makes the trip to player 2.
pub fn collaborate_23_state(
    distributed: &GaussianState,
    ch: &ShareChannels,
    decoder: &Decoder23,
    h2: f64,
) -> Result<GaussianState> {
    let round = ch.round();
    // both shares have now seen one round trip and one idle period
    let theta = rotation_angle(&round) + rotation_angle(&ch.idle);
    let fix = free_channel(
        ch.leg.k.unwrap_or(0),
        if ch.compensate { -theta } else { 0.0 },
    );
    let state = ch.idle.then(&fix).apply_h2(distributed, 1, h2)?;
    let state = round.then(&fix).apply_h2(&state, 2, h2)?;
    decoder.decode(&state)
}
