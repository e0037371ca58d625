//! Cavity modes, Klein-Gordon overlaps and Bogoliubov coefficients of the
//! basic building block (inertial, uniformly accelerated, inertial).

mod bogoliubov;
mod cache;
mod functions;
mod geometry;
mod sums;

pub use bogoliubov::{
    bbb_bogoliubov, bogoliubov_exact, bogoliubov_perturbative, from_symplectic, to_symplectic,
    BogoliubovSet, ExactBogoliubov, PerturbativeOptions, TransitionFit, DEFAULT_LADDER,
};
pub use cache::{load_or_fit, CACHE_DIR_ENV};
pub use functions::{
    kg_inner_product, minkowski_mode, rindler_mode, Conjugate, Difference, MinkowskiMode,
    RindlerMode, SliceField, C64,
};
pub use geometry::{phase_u, tau_from_u, CavityGeometry, DEFAULT_N_MAX};
pub use sums::{mode_sums, ModeSums};
