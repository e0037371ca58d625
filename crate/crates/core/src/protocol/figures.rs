//! Tabulated curves over a grid of leg durations `u`.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::calibration::calibrate;
use super::config::{ProtocolConfig, SecretSpec};
use super::fidelity::{Protocol, Scenario};
use crate::channel::bbb_channel;
use crate::error::{Error, Result};
use crate::modes::{bbb_bogoliubov, BogoliubovSet};

pub const FIGURE_MODES: [usize; 3] = [1, 2, 3];
pub const FIGURE_SQUEEZINGS: [f64; 3] = [1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Figure {
    /// Second-order transmissivity loss per mode.
    #[serde(rename = "T2")]
    T2,
    /// Thermal number of the canonical form per mode.
    #[serde(rename = "nbar")]
    Nbar,
    /// Players-1-and-2 fidelity loss for squeezed-vacuum secrets.
    #[serde(rename = "F2_sq")]
    F2Squeezed,
    /// Players-2-and-3 fidelity loss per mode.
    #[serde(rename = "F2_23")]
    F223,
}

impl FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T2" => Ok(Figure::T2),
            "nbar" => Ok(Figure::Nbar),
            "F2_sq" => Ok(Figure::F2Squeezed),
            "F2_23" => Ok(Figure::F223),
            other => Err(Error::InvalidArgument(format!(
                "unknown figure {other:?}; expected T2, nbar, F2_sq or F2_23"
            ))),
        }
    }
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::T2 => "T2",
            Figure::Nbar => "nbar",
            Figure::F2Squeezed => "F2_sq",
            Figure::F223 => "F2_23",
        }
    }
}

/// Inclusive arithmetic grid `start:stop:step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl UGrid {
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }

    /// `n` points `0, 1/n, ..., (n-1)/n`.
    pub fn unit(n: usize) -> Self {
        Self {
            start: 0.0,
            stop: (n - 1) as f64 / n as f64,
            step: 1.0 / n as f64,
        }
    }
}

impl FromStr for UGrid {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::InvalidArgument(format!("grid {s:?} must be start:stop:step"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        let grid = UGrid {
            start: nums[0],
            stop: nums[1],
            step: nums[2],
        };
        if !(grid.step > 0.0)
            || !(grid.stop >= grid.start)
            || !grid.start.is_finite()
            || !grid.stop.is_finite()
        {
            return Err(bad());
        }
        Ok(grid)
    }
}

/// Series with one row per grid point; `None` marks values that are undefined there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureData {
    pub figure: Figure,
    pub columns: Vec<String>,
    pub u: Vec<f64>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl FigureData {
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let c = self.columns.iter().position(|x| x == name)?;
        Some(self.values.iter().map(|row| row[c]).collect())
    }
}

pub fn figure_data(
    figure: Figure,
    grid: &[f64],
    base: &ProtocolConfig,
    transition: &BogoliubovSet,
) -> Result<FigureData> {
    let columns: Vec<String> = match figure {
        Figure::T2 | Figure::Nbar => FIGURE_MODES.iter().map(|k| format!("k{k}")).collect(),
        Figure::F2Squeezed => FIGURE_SQUEEZINGS.iter().map(|r| format!("r{r}")).collect(),
        Figure::F223 => FIGURE_MODES
            .iter()
            .map(|k| format!("k{k}"))
            .chain(FIGURE_MODES.iter().map(|k| format!("k{k}_sim")))
            .collect(),
    };
    // decoder settings do not depend on u; fix them once
    let mut base = base.clone();
    if base.overrides.decoder_gain.is_none() || base.overrides.decoder_squeezing.is_none() {
        let c = calibrate(base.s)?;
        base.overrides.decoder_gain = Some(c.gain);
        base.overrides.decoder_squeezing = Some(c.squeezing);
    }
    let values = base
        .execution()
        .try_map(grid, |&u| -> Result<Vec<Option<f64>>> {
            match figure {
                Figure::T2 | Figure::Nbar => {
                    let bbb = bbb_bogoliubov(transition, u)?;
                    FIGURE_MODES
                        .iter()
                        .map(|&k| {
                            let ch = bbb_channel(&bbb, k)?;
                            Ok(match figure {
                                Figure::T2 => Some(ch.t2()),
                                _ => ch.invariants(None, None).ok().map(|i| i.nbar),
                            })
                        })
                        .collect()
                }
                Figure::F2Squeezed => FIGURE_SQUEEZINGS
                    .iter()
                    .map(|&r| {
                        let cfg = ProtocolConfig {
                            u,
                            secret: SecretSpec::SqueezedVacuum { r },
                            ..base.clone()
                        };
                        let p = Protocol::new(&cfg, transition)?;
                        Ok(Some(p.first_order_f2(Scenario::Players12, &cfg.secret)?))
                    })
                    .collect(),
                Figure::F223 => {
                    let mut closed = Vec::new();
                    let mut sim = Vec::new();
                    for &k in &FIGURE_MODES {
                        let cfg = ProtocolConfig {
                            u,
                            k,
                            ..base.clone()
                        };
                        let p = Protocol::new(&cfg, transition)?;
                        closed.push(Some(p.closed_forms().f2_23));
                        sim.push(Some(p.first_order_f2(Scenario::Players23, &cfg.secret)?));
                    }
                    Ok(closed.into_iter().chain(sim).collect())
                }
            }
        })?;
    Ok(FigureData {
        figure,
        columns,
        u: grid.to_vec(),
        values,
    })
}
