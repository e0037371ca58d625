//! Single-mode Gaussian channels `d ↦ M d + c`, `σ ↦ M σ Mᵀ + N` carried as
//! a series in `h` truncated after second order.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{rotation_block, GaussianState, SymplecticMap};
use crate::matrix_json;
use crate::modes::{BogoliubovSet, ModeSums};

/// `T2` below this is treated as an identity channel (integer `u`).
const DEGENERATE_T2: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianChannel {
    #[serde(with = "matrix_json::matrix2")]
    pub m0: Matrix2<f64>,
    #[serde(with = "matrix_json::matrix2")]
    pub m2: Matrix2<f64>,
    #[serde(with = "matrix_json::matrix2")]
    pub n0: Matrix2<f64>,
    #[serde(with = "matrix_json::matrix2")]
    pub n2: Matrix2<f64>,
    pub shift: [f64; 2],
    pub k: Option<usize>,
    pub u: Option<f64>,
}

/// How a perturbative channel is applied at a finite `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Truncation {
    /// Apply `M = M0 + h² M2`, `N = N0 + h² N2` as an exact Gaussian map.
    #[default]
    Evaluated,
    /// As `Evaluated` but without the `h⁴ M2 σ M2ᵀ` term.
    Perturbative,
}

/// Channel matrices at a fixed `h²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluatedChannel {
    pub h2: f64,
    pub m: Matrix2<f64>,
    pub n: Matrix2<f64>,
    pub shift: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelInvariants {
    /// `min(rank M, rank N)`.
    pub r: usize,
    /// `T = 1 - T2 h²`, when evaluated at some `h`.
    pub t: Option<f64>,
    pub t2: f64,
    /// `√det N / (2|1 - T|) - ½` at leading order.
    pub nbar: f64,
    /// `2(f_α - f_β)`.
    pub t2_sums: Option<f64>,
    /// `√((f_α+f_β)² - |g|²) / (2(f_α - f_β)) - ½`.
    pub nbar_sums: Option<f64>,
    /// The same expression with `4|g|²` under the root; `None` when the radicand is negative.
    pub nbar_printed: Option<f64>,
}

/// JSON layout of a dumped channel.
#[derive(Debug, Clone, Serialize)]
pub struct ChannelDump {
    #[serde(with = "matrix_json::matrix2")]
    pub order0: Matrix2<f64>,
    pub order2: Order2Dump,
    pub h: Option<f64>,
    pub k: Option<usize>,
    pub u: Option<f64>,
    pub invariants: Option<ChannelInvariants>,
}

#[derive(Debug, Clone, Serialize)]
#[allow(non_snake_case)]
pub struct Order2Dump {
    #[serde(with = "matrix_json::matrix2")]
    pub M2: Matrix2<f64>,
    #[serde(with = "matrix_json::matrix2")]
    pub N2: Matrix2<f64>,
}

fn block(s: &nalgebra::DMatrix<f64>, i: usize, j: usize) -> Matrix2<f64> {
    s.fixed_view::<2, 2>(2 * i, 2 * j).into_owned()
}

fn rank2(m: &Matrix2<f64>) -> usize {
    let scale = m.abs().max();
    if scale == 0.0 {
        return 0;
    }
    if m.determinant().abs() <= 1e-12 * scale * scale {
        1
    } else {
        2
    }
}

fn adjugate(m: &Matrix2<f64>) -> Matrix2<f64> {
    Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)])
}

impl GaussianChannel {
    pub fn identity() -> Self {
        Self {
            m0: Matrix2::identity(),
            m2: Matrix2::zeros(),
            n0: Matrix2::zeros(),
            n2: Matrix2::zeros(),
            shift: [0.0; 2],
            k: None,
            u: None,
        }
    }

    pub fn evaluate(&self, h: f64) -> EvaluatedChannel {
        self.evaluate_h2(h * h)
    }

    /// Evaluation at `h²`; negative values are accepted for derivative stencils.
    pub fn evaluate_h2(&self, h2: f64) -> EvaluatedChannel {
        EvaluatedChannel {
            h2,
            m: self.m0 + self.m2 * h2,
            n: self.n0 + self.n2 * h2,
            shift: self.shift,
        }
    }

    /// `outer ∘ inner`, keeping terms through `h²`.
    pub fn compose(outer: &GaussianChannel, inner: &GaussianChannel) -> Self {
        let (a0, a2) = (outer.m0, outer.m2);
        let (b0, b2) = (inner.m0, inner.m2);
        let shift = a0 * Vector2::from(inner.shift) + Vector2::from(outer.shift);
        Self {
            m0: a0 * b0,
            m2: a0 * b2 + a2 * b0,
            n0: a0 * inner.n0 * a0.transpose() + outer.n0,
            n2: a0 * inner.n2 * a0.transpose()
                + a2 * inner.n0 * a0.transpose()
                + a0 * inner.n0 * a2.transpose()
                + outer.n2,
            shift: [shift[0], shift[1]],
            k: match (outer.k, inner.k) {
                (Some(a), Some(b)) if a != b => None,
                (a, b) => a.or(b),
            },
            u: None,
        }
    }

    /// Applies `self` first, then `next`.
    pub fn then(&self, next: &GaussianChannel) -> Self {
        Self::compose(next, self)
    }

    /// Chains channels in the order given (first element acts first).
    pub fn sequence(channels: &[GaussianChannel]) -> Self {
        channels.iter().fold(Self::identity(), |acc, c| acc.then(c))
    }

    /// Applies the channel to `mode` of a multimode state.
    pub fn apply(
        &self,
        state: &GaussianState,
        mode: usize,
        h: f64,
        truncation: Truncation,
    ) -> Result<GaussianState> {
        let ev = self.evaluate(h);
        let out = state.apply_local(mode, &ev.m, &ev.n, ev.shift)?;
        match truncation {
            Truncation::Evaluated => Ok(out),
            Truncation::Perturbative => {
                let h4 = h.powi(4);
                let sigma_kk = state.mode_covariance(mode);
                let drop = self.m2 * sigma_kk * self.m2.transpose() * h4;
                let mut cov = out.covariance().clone();
                let mut blk = cov.fixed_view_mut::<2, 2>(2 * mode, 2 * mode);
                blk -= drop;
                GaussianState::from_parts(out.mean().clone(), cov)
            }
        }
    }

    /// Exact application of [`GaussianChannel::evaluate_h2`] to `mode`.
    pub fn apply_h2(&self, state: &GaussianState, mode: usize, h2: f64) -> Result<GaussianState> {
        let ev = self.evaluate_h2(h2);
        state.apply_local(mode, &ev.m, &ev.n, ev.shift)
    }

    /// Smallest eigenvalue of `N + iΓ - i M Γ Mᵀ` at `h`; non-negative for a physical channel.
    pub fn complete_positivity_margin(&self, h: f64) -> f64 {
        self.evaluate(h).complete_positivity_margin()
    }

    /// `T2` with `det M = 1 - T2 h² + O(h⁴)`.
    pub fn t2(&self) -> f64 {
        -(adjugate(&self.m0) * self.m2).trace()
    }

    /// Canonical-form invariants of a leading-order channel with `M0` symplectic and `N0 = 0`.
    ///
    /// Integer `u` (identity channel) has no defined thermal number and is reported as degenerate.
    pub fn invariants(&self, sums: Option<&ModeSums>, h: Option<f64>) -> Result<ChannelInvariants> {
        if self.n0 != Matrix2::zeros() {
            return Err(Error::InvalidArgument(
                "perturbative invariants need N0 = 0".into(),
            ));
        }
        let t2 = self.t2();
        if t2.abs() < DEGENERATE_T2 {
            return Err(Error::Degenerate(format!(
                "T2 = {t2:e}: transmissivity is 1 to second order, thermal number undefined"
            )));
        }
        let det_n2 = self.n2.determinant().max(0.0);
        let nbar = det_n2.sqrt() / (2.0 * t2.abs()) - 0.5;
        let r = rank2(&self.m0).min(rank2(&self.n2));
        let (t2_sums, nbar_sums, nbar_printed) = match sums {
            Some(s) => {
                let (fa, fb, g2) = (s.f_alpha, s.f_beta, s.g.norm_sqr());
                let denom = 2.0 * (fa - fb);
                let printed = (fa + fb).powi(2) - 4.0 * g2;
                (
                    Some(denom),
                    Some(((fa + fb).powi(2) - g2).max(0.0).sqrt() / denom - 0.5),
                    (printed >= 0.0).then(|| printed.sqrt() / denom - 0.5),
                )
            }
            None => (None, None, None),
        };
        Ok(ChannelInvariants {
            r,
            t: h.map(|h| 1.0 - t2 * h * h),
            t2,
            nbar,
            t2_sums,
            nbar_sums,
            nbar_printed,
        })
    }

    /// Thermal-lossy channel with the same leading-order invariants, at `h`.
    pub fn canonical_form(&self, h: f64) -> Result<GaussianChannel> {
        let inv = self.invariants(None, Some(h))?;
        thermal_lossy_realization(inv.t.expect("h supplied"), inv.nbar)
    }

    pub fn dump(&self, h: Option<f64>, sums: Option<&ModeSums>) -> ChannelDump {
        ChannelDump {
            order0: self.m0,
            order2: Order2Dump {
                M2: self.m2,
                N2: self.n2,
            },
            h,
            k: self.k,
            u: self.u,
            invariants: self.invariants(sums, h).ok(),
        }
    }
}

impl EvaluatedChannel {
    pub fn complete_positivity_margin(&self) -> f64 {
        // M Γ Mᵀ = det(M) Γ for a single mode
        let c = 1.0 - self.m.determinant();
        let n = &self.n;
        let off = 0.5 * (n[(0, 1)] + n[(1, 0)]);
        let half_gap = ((0.5 * (n[(0, 0)] - n[(1, 1)])).powi(2) + off * off + c * c).sqrt();
        0.5 * (n[(0, 0)] + n[(1, 1)]) - half_gap
    }
}

/// Channel of mode `k` (1-based) produced by a BBB with coefficients `bbb`.
pub fn bbb_channel(bbb: &BogoliubovSet, k: usize) -> Result<GaussianChannel> {
    let n_max = bbb.n_max();
    if k == 0 || k > n_max {
        return Err(Error::InvalidArgument(format!(
            "mode {k} outside 1..={n_max}"
        )));
    }
    let u = bbb
        .u
        .ok_or_else(|| Error::InvalidArgument("BBB coefficients need a duration".into()))?;
    let r = k - 1;
    let s0 = bbb.symplectic(0);
    let s1 = bbb.symplectic(1);
    let s2 = bbb.symplectic(2);
    let mut n2 = Matrix2::zeros();
    for c in (0..n_max).filter(|&c| c != r) {
        let b = block(&s1, r, c);
        n2 += b * b.transpose();
    }
    Ok(GaussianChannel {
        m0: block(&s0, r, r),
        m2: block(&s2, r, r),
        n0: Matrix2::zeros(),
        n2,
        shift: [0.0; 2],
        k: Some(k),
        u: Some(u),
    })
}

/// Free evolution of mode `k` accumulating phase `phi`.
pub fn free_channel(k: usize, phi: f64) -> GaussianChannel {
    GaussianChannel {
        m0: rotation_block(phi),
        k: Some(k),
        ..GaussianChannel::identity()
    }
}

/// `M_c = √T I`, `N_c = (1-T)(2n̄+1) I`.
pub fn thermal_lossy_realization(t: f64, nbar: f64) -> Result<GaussianChannel> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "transmissivity must lie in (0, 1), got {t}"
        )));
    }
    if !(nbar >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "thermal number must be >= 0, got {nbar}"
        )));
    }
    Ok(GaussianChannel {
        m0: Matrix2::identity() * t.sqrt(),
        n0: Matrix2::identity() * ((1.0 - t) * (2.0 * nbar + 1.0)),
        ..GaussianChannel::identity()
    })
}

/// The same thermal-lossy channel obtained by mixing the signal with a thermal
/// environment on a beam splitter of transmittance `T` and tracing the environment.
pub fn thermal_lossy_dilation(t: f64, nbar: f64) -> Result<(Matrix2<f64>, Matrix2<f64>)> {
    let env = GaussianState::thermal(nbar)?;
    let bs = SymplecticMap::beam_splitter(2, t, 0, 1)?;
    let s = bs.matrix();
    let m = block(s, 0, 0);
    let coupling = block(s, 0, 1);
    let sigma_env = env.mode_covariance(0);
    Ok((m, coupling * sigma_env * coupling.transpose()))
}
