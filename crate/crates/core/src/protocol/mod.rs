//! The (2,3)-threshold secret sharing protocol with relativistically moving shares.

mod calibration;
mod circuit;
mod config;
mod fidelity;
mod figures;

pub use calibration::{
    calibrate, calibrate_with_tolerance, calibration_landscape, f0_23, ideal_fidelity_23,
    Calibration, CALIBRATION_TOL,
};
pub use circuit::{
    collaborate_23_state, decode_12, distribute, encode, run_12, Decoder23, ShareChannels,
};
pub use config::{Overrides, ProtocolConfig, SecretSpec, DEFAULT_TAIL_TOLERANCE};
pub use fidelity::{
    fidelity_closed_forms, richardson_at_zero, ClosedForms, FidelityReport, Protocol, Provenance,
    Scenario, SimPoint,
};
pub use figures::{figure_data, Figure, FigureData, UGrid};
