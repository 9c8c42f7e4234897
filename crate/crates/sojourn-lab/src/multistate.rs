//! Two-channel block models: a bound channel coupled to a propagating
//! quasi-continuum through an off-diagonal block.
//!
//! The coupled operator is `H = [[H1, kappa V], [kappa V*, H2]]` on the
//! direct sum of the channels. A simple bound eigenpair `H1 psi0 = E0 psi0`
//! becomes a resonance once the coupling opens a decay route, and the
//! deflected coupling `u = V* psi0` lives entirely in channel 2: the full
//! resolvent of `H2` replaces the reduced resolvent of the block,
//!
//! ```text
//! gamma    =      kappa^2 Im <u, (H2 - E0 - i eta)^{-1} u>
//! lambda_2 = E0 - kappa^2 Re <u, (H2 - E0 - i eta)^{-1} u>
//! ```
//!
//! with no first-order shift because the coupling is purely off-diagonal.
//! [`ms_pipeline`] closes the loop: exact energy width of the block at
//! `lambda_2` against the truncated sojourn of the embedded bound state.

use ndarray::{s, Array1, Array2};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::perturbation::{fgr_width, PerturbedFamily};
use crate::sojourn::{nyquist_intervals, sojourn_truncated, SojournEstimate};
use crate::spectral::{spectral_measure, HermitianOperator, State};
use crate::width::{energy_width, WidthResult};

/// Relative eigenpair residual accepted for `(psi0, E0)` in the bound
/// channel, scaled by the channel's spectral radius.
const EIGENPAIR_RTOL: f64 = 1e-10;

/// Bisection tolerance for the exact width at `lambda_2`, relative to the
/// block's spectral radius.
const WIDTH_SOLVE_RTOL: f64 = 1e-9;

/// Simpson interval counts stay this factor above the Nyquist floor, so the
/// quadrature error is set by smoothness rather than aliasing.
const QUADRATURE_MARGIN: usize = 4;

fn check_kappa(kappa: f64) -> Result<()> {
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "TwoChannelModel: kappa = {kappa} must be finite and nonnegative"
        )));
    }
    Ok(())
}

/// Bound channel, propagating channel, and the rectangular coupling between
/// them, anchored at a simple bound eigenpair.
#[derive(Debug, Clone)]
pub struct TwoChannelModel {
    h1: HermitianOperator,
    h2: HermitianOperator,
    v: Array2<Complex64>,
    kappa: f64,
    psi0: State,
    e0: f64,
}

impl TwoChannelModel {
    /// Checks dimensions and finiteness, then verifies that `psi0` is an
    /// eigenvector of the bound channel with a simple eigenvalue.
    pub fn new(
        h1: HermitianOperator,
        h2: HermitianOperator,
        v: Array2<Complex64>,
        kappa: f64,
        psi0: State,
    ) -> Result<Self> {
        if v.nrows() != h1.dim() {
            return Err(Error::DimensionMismatch {
                context: "TwoChannelModel: coupling rows vs bound channel",
                left: v.nrows(),
                right: h1.dim(),
            });
        }
        if v.ncols() != h2.dim() {
            return Err(Error::DimensionMismatch {
                context: "TwoChannelModel: coupling columns vs propagating channel",
                left: v.ncols(),
                right: h2.dim(),
            });
        }
        if psi0.dim() != h1.dim() {
            return Err(Error::DimensionMismatch {
                context: "TwoChannelModel: psi0 vs bound channel",
                left: psi0.dim(),
                right: h1.dim(),
            });
        }
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument(
                "TwoChannelModel: coupling has non-finite entries".into(),
            ));
        }
        check_kappa(kappa)?;
        let e0 = h1.expectation(&psi0)?;
        let residual = crate::spectral::residual_norm(&h1, &psi0, e0)?;
        let tol = EIGENPAIR_RTOL * h1.spectral_radius().max(1.0);
        if residual > tol {
            return Err(Error::NotAnEigenpair {
                psi_info: "psi0 for TwoChannelModel",
                residual,
                tolerance: tol,
            });
        }
        let degeneracy = h1
            .eigenvalues()
            .iter()
            .filter(|&&x| (x - e0).abs() <= h1.merge_tolerance())
            .count();
        if degeneracy != 1 {
            return Err(Error::InvalidArgument(format!(
                "TwoChannelModel: E0 = {e0} has multiplicity {degeneracy} in the bound \
                 channel, need a simple eigenvalue"
            )));
        }
        Ok(Self {
            h1,
            h2,
            v,
            kappa,
            psi0,
            e0,
        })
    }

    /// The same channels and coupling at a different coupling strength.
    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        check_kappa(kappa)?;
        let mut out = self.clone();
        out.kappa = kappa;
        Ok(out)
    }

    pub fn bound_channel(&self) -> &HermitianOperator {
        &self.h1
    }

    pub fn propagating_channel(&self) -> &HermitianOperator {
        &self.h2
    }

    pub fn coupling(&self) -> &Array2<Complex64> {
        &self.v
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn psi0(&self) -> &State {
        &self.psi0
    }

    pub fn e0(&self) -> f64 {
        self.e0
    }

    /// `(bound dim, propagating dim)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.h1.dim(), self.h2.dim())
    }
}

/// The bound state viewed in the full space: `psi0` padded with zeros on the
/// propagating channel.
pub fn embedded_state(model: &TwoChannelModel) -> State {
    let (d1, d2) = model.dims();
    let mut vec: Array1<Complex64> = Array1::zeros(d1 + d2);
    vec.slice_mut(s![..d1]).assign(model.psi0.vec());
    State::new(vec).expect("padding a normalized state with zeros keeps the norm")
}

/// Assembles `[[H1, kappa V], [kappa V*, H2]]`. The lower-left block is
/// filled with explicit conjugates, so the matrix is Hermitian by
/// construction for any coupling entries.
pub fn build_block(model: &TwoChannelModel) -> HermitianOperator {
    let (d1, d2) = model.dims();
    let mut m: Array2<Complex64> = Array2::zeros((d1 + d2, d1 + d2));
    m.slice_mut(s![..d1, ..d1]).assign(model.h1.matrix());
    m.slice_mut(s![d1.., d1..]).assign(model.h2.matrix());
    for ((i, j), z) in model.v.indexed_iter() {
        let scaled = model.kappa * z;
        m[[i, d1 + j]] = scaled;
        m[[d1 + j, i]] = scaled.conj();
    }
    HermitianOperator::new(m).expect("block assembly is Hermitian with finite entries")
}

/// The coupled model reexpressed as a perturbed family: uncoupled block
/// diagonal as `H0`, the kappa-independent off-diagonal block as coupling,
/// and the embedded bound state as the eigenpair. Fails when a propagating
/// level collides with `E0`, which is the discrete stand-in for the
/// non-resonance requirement.
pub fn block_family(model: &TwoChannelModel) -> Result<PerturbedFamily> {
    let (d1, d2) = model.dims();
    let n = d1 + d2;
    let mut h0: Array2<Complex64> = Array2::zeros((n, n));
    h0.slice_mut(s![..d1, ..d1]).assign(model.h1.matrix());
    h0.slice_mut(s![d1.., d1..]).assign(model.h2.matrix());
    let mut coupling: Array2<Complex64> = Array2::zeros((n, n));
    for ((i, j), z) in model.v.indexed_iter() {
        coupling[[i, d1 + j]] = *z;
        coupling[[d1 + j, i]] = z.conj();
    }
    PerturbedFamily::linear(HermitianOperator::new(h0)?, coupling, embedded_state(model))
}

/// Resolvent quadratic form of the propagating channel on the deflected
/// coupling `u = V* psi0`, at `z = E0 + i eta`.
fn propagating_form(model: &TwoChannelModel, eta: f64) -> Result<Complex64> {
    if !(eta > 0.0) {
        return Err(Error::NonPositive {
            name: "eta",
            value: eta,
        });
    }
    let u = linalg::adj_matvec(&model.v.view(), &model.psi0.vec().view())?;
    model
        .h2
        .resolvent_quadratic_form(&u, Complex64::new(model.e0, eta))
}

/// Golden-rule width `kappa^2 Im <V* psi0, (H2 - E0 - i eta)^{-1} V* psi0>`.
///
/// Every spectral term contributes `|c_k|^2 eta / ((mu_k - E0)^2 + eta^2)`,
/// so the result is nonnegative for `eta > 0` and scales exactly as
/// `kappa^2` and as the squared coupling norm.
pub fn ms_fgr(model: &TwoChannelModel, eta: f64) -> Result<f64> {
    Ok(model.kappa * model.kappa * propagating_form(model, eta)?.im)
}

/// Second-order resonance position `E0 - kappa^2 Re <V* psi0, ...>`. There
/// is no first-order term: the coupling block has zero diagonal expectation
/// in the embedded state.
pub fn ms_lambda2(model: &TwoChannelModel, eta: f64) -> Result<f64> {
    Ok(model.e0 - model.kappa * model.kappa * propagating_form(model, eta)?.re)
}

/// Verification record for one coupled model: golden-rule prediction, exact
/// width of the block at the shifted position, and the truncated sojourn of
/// the embedded bound state against `1 / delta_e`.
#[derive(Debug, Clone, Serialize)]
pub struct MsReport {
    /// Spectral parameter used for the golden-rule evaluation: the geometric
    /// mean of the admissible window of the uncoupled block.
    pub eta: f64,
    /// Second-order resonance position.
    pub lambda2: f64,
    /// Golden-rule width at `eta`.
    pub gamma_fgr: f64,
    /// Exact energy width of the coupled block at `lambda2`.
    pub width: WidthResult,
    /// `1 / delta_e`; infinite on the zero-width branch.
    pub inv_delta_e: f64,
    /// Truncated sojourn of the embedded bound state.
    pub sojourn: SojournEstimate,
    /// `sojourn / (1 / delta_e)`; zero on the zero-width branch.
    pub ratio: f64,
    /// At least half the spectral mass sits at `lambda2`, so the width
    /// vanishes and the untruncated sojourn diverges.
    pub sojourn_infinite: bool,
    /// Truncated sojourn at least `1 / delta_e - tol`; the truncation only
    /// lowers the left side, so this certifies the untruncated bound.
    pub bound_ok: bool,
}

/// Runs the sojourn-bound pipeline on a coupled model.
///
/// The spectral parameter comes from the admissible window of the uncoupled
/// block, which doubles as the quasi-continuum guard: channels too coarse to
/// separate local spacing from bandwidth are rejected. The resonance must
/// stay inside the band by half the band margin, as in the coupling sweep.
/// On the zero-width branch (point mass at `lambda_2`, e.g. zero coupling)
/// the bound holds with both sides infinite, and the finite truncated
/// sojourn is reported alongside the flag.
pub fn ms_pipeline(model: &TwoChannelModel, horizon: f64, tol: f64) -> Result<MsReport> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::NonPositive {
            name: "horizon",
            value: horizon,
        });
    }
    if !tol.is_finite() || tol < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "ms_pipeline: tol = {tol} must be finite and nonnegative"
        )));
    }
    let fam = block_family(model)?;
    let (floor, ceiling) = fam.eta_window()?;
    let eta = (floor * ceiling).sqrt();
    let fgr = fgr_width(&fam, model.kappa, eta)?;
    let block = build_block(model);
    let mu = spectral_measure(&block, &embedded_state(model))?;
    let width_tol = WIDTH_SOLVE_RTOL * mu.spectral_radius().max(1.0);
    let width = energy_width(&mu, fgr.lambda2, width_tol)?;
    let margin = fam.band_margin();
    if !width.zero_width && !(width.delta_e < 0.5 * margin) {
        return Err(Error::WidthBeyondGap {
            kappa: model.kappa,
            delta_e: width.delta_e,
            margin,
        });
    }
    let n_quad = QUADRATURE_MARGIN * nyquist_intervals(horizon, mu.spectral_radius()).max(2);
    let sojourn = sojourn_truncated(&mu, horizon, n_quad)?;
    let (inv_delta_e, ratio, bound_ok) = if width.zero_width {
        (f64::INFINITY, 0.0, true)
    } else {
        let inv = 1.0 / width.delta_e;
        (inv, sojourn.value / inv, sojourn.value >= inv - tol)
    };
    Ok(MsReport {
        eta,
        lambda2: fgr.lambda2,
        gamma_fgr: fgr.gamma_fgr,
        width,
        inv_delta_e,
        sojourn,
        ratio,
        sojourn_infinite: width.zero_width,
        bound_ok,
    })
}
