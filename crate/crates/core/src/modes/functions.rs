use std::f64::consts::PI;

use nalgebra::Complex;

use super::CavityGeometry;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureOptions};

pub type C64 = Complex<f64>;

const I: C64 = Complex::new(0.0, 1.0);

/// A field known on the `t = 0` slice of the cavity.
///
/// `y ∈ [0, L]` is the distance from the left wall. Working with the offset
/// rather than the absolute position keeps full precision when the walls sit
/// far out at `x ~ L/h`.
pub trait SliceField: Sync {
    /// `(f, ∂_t f)` at offset `y`.
    fn on_slice(&self, y: f64) -> (C64, C64);
}

/// `φ_n = (nπ)^{-1/2} sin(nπ(x - x_L)/L) e^{-iω_n t}`.
#[derive(Debug, Clone, Copy)]
pub struct MinkowskiMode {
    pub n: usize,
    pub geometry: CavityGeometry,
}

/// `ψ_n = (nπ)^{-1/2} sin(nπ ln(χ/x_L)/ln(x_R/x_L)) e^{-iΩ_n η}`.
#[derive(Debug, Clone, Copy)]
pub struct RindlerMode {
    n: usize,
    geometry: CavityGeometry,
    omega: f64,
}

impl MinkowskiMode {
    pub fn new(n: usize, geometry: CavityGeometry) -> Result<Self> {
        check_index(n)?;
        Ok(Self { n, geometry })
    }

    fn profile(&self, y: f64) -> f64 {
        let n = self.n as f64;
        (n * PI * y / self.geometry.length()).sin() / (n * PI).sqrt()
    }
}

impl SliceField for MinkowskiMode {
    fn on_slice(&self, y: f64) -> (C64, C64) {
        let f = C64::from(self.profile(y));
        (f, -I * self.geometry.minkowski_frequency(self.n) * f)
    }
}

impl RindlerMode {
    pub fn new(n: usize, geometry: CavityGeometry) -> Result<Self> {
        check_index(n)?;
        let omega = geometry.rindler_frequency(n)?;
        Ok(Self { n, geometry, omega })
    }

    fn profile(&self, y: f64) -> f64 {
        let g = &self.geometry;
        let h = g.h();
        let n = self.n as f64;
        // ln(χ/x_L) with χ = x_L + y and x_L = L(1 - h/2)/h
        let log_ratio = (y * h / (g.length() * (1.0 - 0.5 * h))).ln_1p();
        (n * PI * log_ratio / g.log_wall_ratio()).sin() / (n * PI).sqrt()
    }

    /// `Ω_n / χ` at offset `y`, the local frequency seen by an inertial clock on the slice.
    fn local_frequency(&self, y: f64) -> f64 {
        let g = &self.geometry;
        let h = g.h();
        self.omega * h / (g.length() * (1.0 + h * (y / g.length() - 0.5)))
    }
}

impl SliceField for RindlerMode {
    fn on_slice(&self, y: f64) -> (C64, C64) {
        let f = C64::from(self.profile(y));
        (f, -I * self.local_frequency(y) * f)
    }
}

/// Complex conjugate of a field.
#[derive(Debug, Clone, Copy)]
pub struct Conjugate<F>(pub F);

impl<F: SliceField> SliceField for Conjugate<F> {
    fn on_slice(&self, y: f64) -> (C64, C64) {
        let (f, df) = self.0.on_slice(y);
        (f.conj(), df.conj())
    }
}

/// Pointwise difference `F - G`.
#[derive(Debug, Clone, Copy)]
pub struct Difference<F, G>(pub F, pub G);

impl<F: SliceField, G: SliceField> SliceField for Difference<F, G> {
    fn on_slice(&self, y: f64) -> (C64, C64) {
        let (f, df) = self.0.on_slice(y);
        let (g, dg) = self.1.on_slice(y);
        (f - g, df - dg)
    }
}

fn check_index(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("mode index starts at 1".into()));
    }
    Ok(())
}

fn check_inside(pos: f64, (lo, hi): (f64, f64)) -> Result<()> {
    let slack = 1e-12 * hi.abs().max(1.0);
    if !(pos >= lo - slack && pos <= hi + slack) {
        return Err(Error::InvalidArgument(format!(
            "position {pos} outside cavity [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// Minkowski mode `φ_n(t, x)` at an inertial-frame position between the walls.
pub fn minkowski_mode(n: usize, x: f64, t: f64, geometry: &CavityGeometry) -> Result<C64> {
    let mode = MinkowskiMode::new(n, *geometry)?;
    let walls = geometry.walls();
    check_inside(x, walls)?;
    let phase = (-I * geometry.minkowski_frequency(n) * t).exp();
    Ok(phase * mode.profile(x - walls.0))
}

/// Rindler mode `ψ_n(η, χ)`.
pub fn rindler_mode(n: usize, chi: f64, eta: f64, geometry: &CavityGeometry) -> Result<C64> {
    let mode = RindlerMode::new(n, *geometry)?;
    let walls = geometry.walls();
    check_inside(chi, walls)?;
    let phase = (-I * mode.omega * eta).exp();
    Ok(phase * mode.profile(chi - walls.0))
}

/// Klein-Gordon product `(f, g) = -i ∫ (f ∂_t g* - g* ∂_t f) dx` over the cavity on `t = 0`.
pub fn kg_inner_product<F: SliceField, G: SliceField>(
    f: &F,
    g: &G,
    geometry: &CavityGeometry,
    options: &QuadratureOptions,
) -> Result<C64> {
    let q = integrate(
        |y| {
            let (fv, fd) = f.on_slice(y);
            let (gv, gd) = g.on_slice(y);
            let w = -I * (fv * gd.conj() - gv.conj() * fd);
            [w.re, w.im]
        },
        0.0,
        geometry.length(),
        options,
    )?;
    Ok(C64::new(q.value[0], q.value[1]))
}
