use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gaussian::GaussianState;
use crate::modes::{CavityGeometry, PerturbativeOptions, DEFAULT_LADDER, DEFAULT_N_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum SecretSpec {
    Vacuum,
    Coherent { q0: f64, p0: f64 },
    SqueezedVacuum { r: f64 },
}

impl SecretSpec {
    pub fn state(&self) -> GaussianState {
        match *self {
            SecretSpec::Vacuum => GaussianState::coherent(0.0, 0.0),
            SecretSpec::Coherent { q0, p0 } => GaussianState::coherent(q0, p0),
            SecretSpec::SqueezedVacuum { r } => GaussianState::squeezed_vacuum(r),
        }
    }

    pub fn is_coherent(&self) -> bool {
        !matches!(self, SecretSpec::SqueezedVacuum { r } if *r != 0.0)
    }
}

/// Optional departures from the default wiring.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    /// Phase of each inertial leg; defaults to `π - 2φ_a`.
    pub inertial_phase: Option<f64>,
    /// Phase picked up by a share held in a static cavity while another travels.
    pub static_phase: Option<f64>,
    /// Undo the known zeroth-order rotation of every share before decoding.
    pub compensate_phases: Option<bool>,
    pub ladder: Option<[f64; 3]>,
    pub fit_tolerance: Option<f64>,
    pub tail_tolerance: Option<f64>,
    pub decoder_gain: Option<f64>,
    pub decoder_squeezing: Option<f64>,
    pub execution: Option<Execution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub s: f64,
    #[serde(default = "default_secret")]
    pub secret: SecretSpec,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(rename = "L", alias = "length", default = "default_length")]
    pub length: f64,
    #[serde(default = "default_h")]
    pub h: f64,
    pub u: f64,
    #[serde(rename = "N_max", alias = "n_max", default = "default_n_max")]
    pub n_max: usize,
    #[serde(default)]
    pub overrides: Overrides,
}

fn default_secret() -> SecretSpec {
    SecretSpec::Coherent { q0: 1.0, p0: 0.0 }
}
fn default_k() -> usize {
    1
}
fn default_length() -> f64 {
    1.0
}
fn default_h() -> f64 {
    1e-2
}
fn default_n_max() -> usize {
    DEFAULT_N_MAX
}

pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-5;

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            s: 1.0,
            secret: default_secret(),
            k: default_k(),
            length: default_length(),
            h: default_h(),
            u: 0.25,
            n_max: default_n_max(),
            overrides: Overrides::default(),
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "s must be finite and >= 0, got {}",
                self.s
            )));
        }
        if self.k == 0 {
            return Err(Error::InvalidArgument("k starts at 1".into()));
        }
        if !(self.u >= 0.0 && self.u.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "u must be finite and >= 0, got {}",
                self.u
            )));
        }
        self.geometry()?;
        Ok(())
    }

    pub fn geometry(&self) -> Result<CavityGeometry> {
        CavityGeometry::new(self.length, self.h, self.n_max)
    }

    pub fn ladder(&self) -> [f64; 3] {
        self.overrides.ladder.unwrap_or(DEFAULT_LADDER)
    }

    pub fn execution(&self) -> Execution {
        self.overrides.execution.unwrap_or_default()
    }

    pub fn tail_tolerance(&self) -> f64 {
        self.overrides
            .tail_tolerance
            .unwrap_or(DEFAULT_TAIL_TOLERANCE)
    }

    pub fn compensate_phases(&self) -> bool {
        self.overrides.compensate_phases.unwrap_or(true)
    }

    pub fn perturbative_options(&self) -> PerturbativeOptions {
        let mut opts = PerturbativeOptions {
            ladder: self.ladder(),
            execution: self.execution(),
            ..Default::default()
        };
        if let Some(t) = self.overrides.fit_tolerance {
            opts.fit_tolerance = t;
        }
        opts
    }

    /// Reads JSON or TOML, chosen by file extension.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text)?,
            Some("json") => serde_json::from_str(&text)?,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "config must be .json or .toml, got extension {other:?}"
                )))
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
