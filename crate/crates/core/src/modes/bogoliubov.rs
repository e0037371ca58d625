use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::functions::{kg_inner_product, Conjugate, Difference, MinkowskiMode, RindlerMode, C64};
use super::CavityGeometry;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::matrix_json;
use crate::quadrature::QuadratureOptions;

pub const DEFAULT_LADDER: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// Minkowski-to-Rindler coefficients `α̃_ij = (ψ_i, φ_j)`, `β̃_ij = -(ψ_i, φ_j*)` at one `h`.
///
/// `α̃ - I` is stored directly: it is computed from `ψ_i - φ_i` so that the
/// small deviation from the identity keeps full relative precision.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactBogoliubov {
    pub h: f64,
    pub alpha_minus_identity: DMatrix<C64>,
    pub beta: DMatrix<C64>,
}

impl ExactBogoliubov {
    pub fn alpha(&self) -> DMatrix<C64> {
        let n = self.alpha_minus_identity.nrows();
        &self.alpha_minus_identity + DMatrix::<C64>::identity(n, n)
    }
}

pub fn bogoliubov_exact(
    geometry: &CavityGeometry,
    quadrature: &QuadratureOptions,
    execution: Execution,
) -> Result<ExactBogoliubov> {
    geometry.require_accelerated()?;
    let n = geometry.n_max();
    let pairs: Vec<(usize, usize)> = (1..=n).flat_map(|i| (1..=n).map(move |j| (i, j))).collect();
    let entries = execution.try_map(&pairs, |&(i, j)| -> Result<(C64, C64)> {
        let diff = Difference(
            RindlerMode::new(i, *geometry)?,
            MinkowskiMode::new(i, *geometry)?,
        );
        let phi = MinkowskiMode::new(j, *geometry)?;
        let a = kg_inner_product(&diff, &phi, geometry, quadrature)?;
        let b = -kg_inner_product(&diff, &Conjugate(phi), geometry, quadrature)?;
        Ok((a, b))
    })?;
    let alpha = DMatrix::from_fn(n, n, |i, j| entries[i * n + j].0);
    let beta = DMatrix::from_fn(n, n, |i, j| entries[i * n + j].1);
    Ok(ExactBogoliubov {
        h: geometry.h(),
        alpha_minus_identity: alpha,
        beta,
    })
}

/// Settings for extracting the perturbative transition coefficients from the oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbativeOptions {
    pub ladder: [f64; 3],
    pub quadrature: QuadratureOptions,
    /// Rejection threshold on `|c_3pt - c_2pt| / |c_3pt|` for the leading coefficient.
    pub fit_tolerance: f64,
    /// Absolute floor added to the rejection threshold, for coefficients that vanish.
    pub fit_floor: f64,
    pub execution: Execution,
}

impl Default for PerturbativeOptions {
    fn default() -> Self {
        Self {
            ladder: DEFAULT_LADDER,
            quadrature: QuadratureOptions::default(),
            fit_tolerance: 1e-2,
            fit_floor: 1e-8,
            execution: Execution::default(),
        }
    }
}

/// Fitted first- and second-order coefficients of the inertial-to-accelerated transition.
///
/// The coefficients are real: `α̃ = I + h A1 + h² A2`, `β̃ = h B1 + h² B2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionFit {
    pub length: f64,
    pub ladder: [f64; 3],
    pub n_max: usize,
    #[serde(with = "matrix_json::dmatrix")]
    pub a1: DMatrix<f64>,
    #[serde(with = "matrix_json::dmatrix")]
    pub b1: DMatrix<f64>,
    #[serde(with = "matrix_json::dmatrix")]
    pub a2: DMatrix<f64>,
    #[serde(with = "matrix_json::dmatrix")]
    pub b2: DMatrix<f64>,
    /// Largest `|c_3pt - c_2pt|` over all leading coefficients.
    pub max_fit_residual: f64,
}

#[derive(Debug, Clone, Copy)]
struct EntryFit {
    lead: f64,
    residual: f64,
}

/// Fits `v(h) = c0 h^p + c1 h^{p+2} + c2 h^{p+4}` through three points and
/// compares the leading coefficient with the two-term fit through the two smallest `h`.
fn fit_entry(ladder: &[f64; 3], values: [f64; 3], p: i32) -> Result<EntryFit> {
    let v = Matrix3::from_fn(|r, c| ladder[r].powi(p + 2 * c as i32));
    let c = v
        .lu()
        .solve(&Vector3::from(values))
        .ok_or_else(|| Error::InvalidArgument("degenerate h ladder".into()))?;
    let (h1, h2) = (ladder[1], ladder[2]);
    let (v1, v2) = (values[1] / h1.powi(p), values[2] / h2.powi(p));
    let lead2 = (v2 * h1 * h1 - v1 * h2 * h2) / (h1 * h1 - h2 * h2);
    Ok(EntryFit {
        lead: c[0],
        residual: (c[0] - lead2).abs(),
    })
}

pub fn bogoliubov_perturbative(
    length: f64,
    n_max: usize,
    options: &PerturbativeOptions,
) -> Result<TransitionFit> {
    let ladder = options.ladder;
    let distinct = ladder[0] != ladder[1] && ladder[1] != ladder[2] && ladder[0] != ladder[2];
    if !distinct || ladder.iter().any(|&h| !(h > 0.0 && h < 2.0)) {
        return Err(Error::InvalidArgument(format!(
            "h ladder {ladder:?} must be three distinct values in (0, 2)"
        )));
    }
    let mut exact = Vec::with_capacity(3);
    for &h in &ladder {
        let g = CavityGeometry::new(length, h, n_max)?;
        exact.push(bogoliubov_exact(
            &g,
            &options.quadrature,
            options.execution,
        )?);
    }
    let mut fit = TransitionFit {
        length,
        ladder,
        n_max,
        a1: DMatrix::zeros(n_max, n_max),
        b1: DMatrix::zeros(n_max, n_max),
        a2: DMatrix::zeros(n_max, n_max),
        b2: DMatrix::zeros(n_max, n_max),
        max_fit_residual: 0.0,
    };
    for i in 0..n_max {
        for j in 0..n_max {
            // 1-based i + j even <=> 0-based i + j even
            let even = (i + j) % 2 == 0;
            let p = if even { 2 } else { 1 };
            let av = [0, 1, 2].map(|m| exact[m].alpha_minus_identity[(i, j)].re);
            let bv = [0, 1, 2].map(|m| exact[m].beta[(i, j)].re);
            for (name, vals) in [("alpha", av), ("beta", bv)] {
                let f = fit_entry(&ladder, vals, p)?;
                if f.residual > options.fit_tolerance * f.lead.abs() + options.fit_floor {
                    return Err(Error::FitResidual {
                        entry: format!("{name}^({p})_{},{}", i + 1, j + 1),
                        residual: f.residual,
                        leading: f.lead,
                    });
                }
                fit.max_fit_residual = fit.max_fit_residual.max(f.residual);
                let target = match (name, even) {
                    ("alpha", false) => &mut fit.a1,
                    ("alpha", true) => &mut fit.a2,
                    (_, false) => &mut fit.b1,
                    (_, true) => &mut fit.b2,
                };
                target[(i, j)] = f.lead;
            }
        }
    }
    Ok(fit)
}

impl TransitionFit {
    pub fn bogoliubov_set(&self) -> BogoliubovSet {
        let n = self.n_max;
        let c = |m: &DMatrix<f64>| m.map(C64::from);
        BogoliubovSet {
            u: None,
            alpha: [DMatrix::identity(n, n), c(&self.a1), c(&self.a2)],
            beta: [DMatrix::zeros(n, n), c(&self.b1), c(&self.b2)],
        }
    }
}

/// Real symplectic matrix of the Bogoliubov map `b_i = Σ_j (α*_ij a_j - β*_ij a_j†)`.
///
/// Block `(i, j)` is `[[Re(α-β), Im(α+β)], [-Im(α-β), Re(α+β)]]`. The map is
/// linear, so it applies order by order to a perturbative series.
pub fn to_symplectic(alpha: &DMatrix<C64>, beta: &DMatrix<C64>) -> DMatrix<f64> {
    let n = alpha.nrows();
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (alpha[(i, j)], beta[(i, j)]);
            s[(2 * i, 2 * j)] = (a - b).re;
            s[(2 * i, 2 * j + 1)] = (a + b).im;
            s[(2 * i + 1, 2 * j)] = -(a - b).im;
            s[(2 * i + 1, 2 * j + 1)] = (a + b).re;
        }
    }
    s
}

/// Inverse of [`to_symplectic`].
pub fn from_symplectic(s: &DMatrix<f64>) -> (DMatrix<C64>, DMatrix<C64>) {
    let n = s.nrows() / 2;
    let block = |i: usize, j: usize| {
        let (a, b, c, d) = (
            s[(2 * i, 2 * j)],
            s[(2 * i, 2 * j + 1)],
            s[(2 * i + 1, 2 * j)],
            s[(2 * i + 1, 2 * j + 1)],
        );
        (
            C64::new(0.5 * (a + d), 0.5 * (b - c)),
            C64::new(0.5 * (d - a), 0.5 * (b + c)),
        )
    };
    (
        DMatrix::from_fn(n, n, |i, j| block(i, j).0),
        DMatrix::from_fn(n, n, |i, j| block(i, j).1),
    )
}

/// Perturbative Bogoliubov coefficients through second order in `h`.
///
/// `u` is `None` for the bare transition and the leg duration for a full BBB.
#[derive(Debug, Clone, PartialEq)]
pub struct BogoliubovSet {
    pub u: Option<f64>,
    alpha: [DMatrix<C64>; 3],
    beta: [DMatrix<C64>; 3],
}

impl BogoliubovSet {
    pub fn from_series(
        u: Option<f64>,
        alpha: [DMatrix<C64>; 3],
        beta: [DMatrix<C64>; 3],
    ) -> Result<Self> {
        let n = alpha[0].nrows();
        if alpha
            .iter()
            .chain(beta.iter())
            .any(|m| m.nrows() != n || m.ncols() != n)
        {
            return Err(Error::InvalidArgument(
                "all coefficient orders must be square of equal size".into(),
            ));
        }
        Ok(Self { u, alpha, beta })
    }

    pub fn n_max(&self) -> usize {
        self.alpha[0].nrows()
    }

    pub fn alpha(&self, order: usize) -> &DMatrix<C64> {
        &self.alpha[order]
    }

    pub fn beta(&self, order: usize) -> &DMatrix<C64> {
        &self.beta[order]
    }

    pub fn symplectic(&self, order: usize) -> DMatrix<f64> {
        to_symplectic(&self.alpha[order], &self.beta[order])
    }

    /// `S0 + h S1 + h² S2`.
    pub fn evaluate(&self, h: f64) -> DMatrix<f64> {
        self.symplectic(0) + self.symplectic(1) * h + self.symplectic(2) * (h * h)
    }

    /// Order-by-order residuals of `Σ_n (|α_jn|² - |β_jn|²) = 1` for row `j` (1-based).
    ///
    /// The second-order entry is halved so that it reads
    /// `Re(α0*_jj α2_jj) + f_α - f_β` when the zeroth order is diagonal.
    pub fn identity_residuals(&self, j: usize) -> Result<[f64; 3]> {
        if j == 0 || j > self.n_max() {
            return Err(Error::InvalidArgument(format!(
                "mode {j} outside 1..={}",
                self.n_max()
            )));
        }
        let r = j - 1;
        let cross = |x: &DMatrix<C64>, y: &DMatrix<C64>| -> f64 {
            (0..self.n_max())
                .map(|n| (x[(r, n)].conj() * y[(r, n)]).re)
                .sum()
        };
        let (a, b) = (&self.alpha, &self.beta);
        let r0 = cross(&a[0], &a[0]) - cross(&b[0], &b[0]) - 1.0;
        let r1 = 2.0 * (cross(&a[0], &a[1]) - cross(&b[0], &b[1]));
        let r2 = 0.5 * (cross(&a[1], &a[1]) - cross(&b[1], &b[1])) + cross(&a[0], &a[2])
            - cross(&b[0], &b[2]);
        Ok([r0, r1, r2])
    }

    /// Largest first-order coefficient with `i + j` even.
    pub fn parity_violation(&self) -> f64 {
        let n = self.n_max();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in (0..n).filter(|j| (i + j) % 2 == 0) {
                worst = worst
                    .max(self.alpha[1][(i, j)].norm())
                    .max(self.beta[1][(i, j)].norm());
            }
        }
        worst
    }
}

/// Coefficients of the full basic building block: inertial to accelerated for
/// duration `u`, then back to inertial.
///
/// With `S_T = I + h S1 + h² S2` for the transition and `R` the free Rindler
/// rotation by `φ_j = 2π j u`, the block is `S_T⁻¹ R S_T` truncated at `h²`.
pub fn bbb_bogoliubov(transition: &BogoliubovSet, u: f64) -> Result<BogoliubovSet> {
    if transition.u.is_some() {
        return Err(Error::InvalidArgument(
            "bbb_bogoliubov expects transition coefficients".into(),
        ));
    }
    if !u.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "duration u must be finite, got {u}"
        )));
    }
    let n = transition.n_max();
    let phases = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::from_polar(1.0, 2.0 * PI * (i + 1) as f64 * u)
        } else {
            C64::from(0.0)
        }
    });
    let rot = to_symplectic(&phases, &DMatrix::zeros(n, n));
    let s1 = transition.symplectic(1);
    let s2 = transition.symplectic(2);
    let o1 = &rot * &s1 - &s1 * &rot;
    let o2 = &rot * &s2 - &s1 * &rot * &s1 + (&s1 * &s1 - &s2) * &rot;
    let (a0, b0) = from_symplectic(&rot);
    let (a1, b1) = from_symplectic(&o1);
    let (a2, b2) = from_symplectic(&o2);
    BogoliubovSet::from_series(Some(u), [a0, a1, a2], [b0, b1, b2])
}
