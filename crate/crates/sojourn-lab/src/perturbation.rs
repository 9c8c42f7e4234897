//! Families `H(kappa) = H0 + kappa V(kappa)` around an eigenpair
//! `H0 psi = E0 psi`, and the second-order predictions for where the
//! resonance sits (`lambda_2`) and how wide it is (the golden-rule width).
//!
//! With `v = P_perp V(kappa) psi` and the reduced resolvent of `H0` on the
//! complement of `psi`,
//!
//! ```text
//! lambda_2 = E0 + kappa <psi, V psi> - kappa^2 Re <v, (H0_perp - E0 - i eta)^{-1} v>
//! gamma    =                           kappa^2 Im <v, (H0_perp - E0 - i eta)^{-1} v>
//! ```
//!
//! `eta` regularizes the discretized continuum and must sit well above the
//! level spacing and well below the bandwidth; the admissible window is
//! computed from the reduced spectrum near `E0`.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::{spectral_measure, HermitianOperator, ReducedSpectrum, State};
use crate::width::energy_width;

/// Relative tolerance for the eigenpair residual at construction.
const EIGENPAIR_RTOL: f64 = 1e-10;

/// `eta` must exceed this multiple of the local level spacing near `E0`.
const ETA_FLOOR_SPACINGS: f64 = 3.0;

/// `eta` must stay below this fraction of the reduced bandwidth.
const ETA_CEILING_FRACTION: f64 = 0.1;

/// Eigenvalues on each side of `E0` entering the local-spacing estimate.
const LOCAL_SPACING_NEIGHBORS: usize = 8;

/// Coupling term of a perturbed family: a fixed operator or a
/// `kappa`-dependent map.
pub enum Coupling {
    Linear(Array2<Complex64>),
    Map(Box<dyn Fn(f64) -> Array2<Complex64> + Send + Sync>),
}

impl std::fmt::Debug for Coupling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Coupling::Linear(v) => f.debug_tuple("Linear").field(v).finish(),
            Coupling::Map(_) => f.write_str("Map(..)"),
        }
    }
}

/// `H(kappa) = H0 + kappa V(kappa)` with a distinguished simple eigenpair of
/// `H0`. Construction validates the eigenpair, the simplicity of `E0` and
/// Hermiticity of the coupling, and caches the reduced spectrum of `H0` on
/// the complement of `psi`, which carries every second-order quantity.
#[derive(Debug)]
pub struct PerturbedFamily {
    h0: HermitianOperator,
    psi: State,
    e0: f64,
    coupling: Coupling,
    reduced: ReducedSpectrum,
}

fn hermiticity_defect(m: &Array2<Complex64>) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    dev
}

fn check_coupling_matrix(v: &Array2<Complex64>, dim: usize) -> Result<()> {
    if v.nrows() != dim || v.ncols() != dim {
        return Err(Error::DimensionMismatch {
            context: "PerturbedFamily coupling",
            left: dim,
            right: v.nrows().max(v.ncols()),
        });
    }
    let max_abs = v.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    let dev = hermiticity_defect(v);
    if dev > 1e-12 * max_abs.max(1.0) {
        return Err(Error::NotHermitian {
            deviation: dev,
            tolerance: 1e-12 * max_abs.max(1.0),
        });
    }
    Ok(())
}

impl PerturbedFamily {
    /// Family with a `kappa`-independent coupling operator.
    pub fn linear(
        h0: HermitianOperator,
        coupling: Array2<Complex64>,
        psi: State,
    ) -> Result<Self> {
        check_coupling_matrix(&coupling, h0.dim())?;
        Self::build(h0, psi, Coupling::Linear(coupling))
    }

    /// Family whose coupling operator varies with `kappa`. Hermiticity is
    /// sampled at a few couplings here and rechecked at every evaluation.
    pub fn with_map(
        h0: HermitianOperator,
        coupling: impl Fn(f64) -> Array2<Complex64> + Send + Sync + 'static,
        psi: State,
    ) -> Result<Self> {
        for kappa in [0.0, 0.3, 0.7, 1.0] {
            check_coupling_matrix(&coupling(kappa), h0.dim())?;
        }
        Self::build(h0, psi, Coupling::Map(Box::new(coupling)))
    }

    fn build(h0: HermitianOperator, psi: State, coupling: Coupling) -> Result<Self> {
        let e0 = h0.expectation(&psi)?;
        let residual = crate::spectral::residual_norm(&h0, &psi, e0)?;
        let tol = EIGENPAIR_RTOL * h0.spectral_radius().max(1.0);
        if residual > tol {
            return Err(Error::NotAnEigenpair {
                psi_info: "psi for PerturbedFamily",
                residual,
                tolerance: tol,
            });
        }
        let degeneracy = h0
            .eigenvalues()
            .iter()
            .filter(|&&x| (x - e0).abs() <= h0.merge_tolerance())
            .count();
        if degeneracy != 1 {
            return Err(Error::InvalidArgument(format!(
                "PerturbedFamily: E0 = {e0} has multiplicity {degeneracy}, need a simple eigenvalue"
            )));
        }
        let reduced = ReducedSpectrum::new(&h0, &psi)?;
        Ok(Self {
            h0,
            psi,
            e0,
            coupling,
            reduced,
        })
    }

    pub fn h0(&self) -> &HermitianOperator {
        &self.h0
    }

    pub fn psi(&self) -> &State {
        &self.psi
    }

    pub fn e0(&self) -> f64 {
        self.e0
    }

    pub fn reduced(&self) -> &ReducedSpectrum {
        &self.reduced
    }

    /// The coupling operator at a given `kappa`.
    pub fn coupling_at(&self, kappa: f64) -> Result<Array2<Complex64>> {
        match &self.coupling {
            Coupling::Linear(v) => Ok(v.clone()),
            Coupling::Map(f) => {
                let v = f(kappa);
                check_coupling_matrix(&v, self.h0.dim())?;
                Ok(v)
            }
        }
    }

    /// Assembles and diagonalizes `H(kappa) = H0 + kappa V(kappa)`.
    pub fn hamiltonian_at(&self, kappa: f64) -> Result<HermitianOperator> {
        let v = self.coupling_at(kappa)?;
        HermitianOperator::new(self.h0.matrix() + &v.mapv(|z| z * kappa))
    }

    /// Distance from `E0` to the edges of the reduced spectrum. Negative
    /// when `E0` lies outside the band, in which case the golden-rule regime
    /// does not apply.
    pub fn band_margin(&self) -> f64 {
        let mu = self.reduced.eigenvalues();
        let lo = mu[0];
        let hi = mu[mu.len() - 1];
        (self.e0 - lo).min(hi - self.e0)
    }

    /// Admissible `eta` window `[3 * local spacing, bandwidth / 10]` from
    /// the reduced spectrum. Errors when the discretization is too coarse
    /// for any admissible `eta` (toy models with a handful of levels).
    pub fn eta_window(&self) -> Result<(f64, f64)> {
        let mu = self.reduced.eigenvalues();
        let n = mu.len();
        let ceiling = ETA_CEILING_FRACTION * (mu[n - 1] - mu[0]);
        let idx = mu.iter().take_while(|&&x| x < self.e0).count();
        let lo = idx.saturating_sub(LOCAL_SPACING_NEIGHBORS);
        let hi = (idx + LOCAL_SPACING_NEIGHBORS).min(n);
        let mut gaps: Vec<f64> = mu
            .as_slice()
            .expect("eigenvalues are contiguous")[lo..hi]
            .windows(2)
            .map(|w| w[1] - w[0])
            .collect();
        let floor = if gaps.is_empty() {
            f64::INFINITY // no local ladder at all: nothing resolves a continuum
        } else {
            gaps.sort_by(f64::total_cmp);
            let mid = gaps.len() / 2;
            let median = if gaps.len() % 2 == 1 {
                gaps[mid]
            } else {
                0.5 * (gaps[mid - 1] + gaps[mid])
            };
            ETA_FLOOR_SPACINGS * median
        };
        if !(floor < ceiling) {
            return Err(Error::EtaWindowEmpty { floor, ceiling });
        }
        Ok((floor, ceiling))
    }
}

/// Second-order resonance data at one `(kappa, eta)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FgrResult {
    pub kappa: f64,
    pub eta: f64,
    /// Second-order resonance position (Lamb-shifted energy).
    pub lambda2: f64,
    /// Golden-rule width `kappa^2 Im <v, (H0_perp - E0 - i eta)^{-1} v>`.
    pub gamma_fgr: f64,
    /// Energy width of `H(kappa)` at `lambda2`, filled by [`kappa_sweep`].
    pub delta_e_exact: Option<f64>,
}

/// Evaluates `lambda_2` and the golden-rule width at the given `eta` without
/// admissibility checks (beyond `eta > 0`). Exact-formula comparisons on toy
/// models use this; continuum workflows should go through [`fgr_width`].
pub fn fgr_width_at(fam: &PerturbedFamily, kappa: f64, eta: f64) -> Result<FgrResult> {
    if !(eta > 0.0) {
        return Err(Error::NonPositive {
            name: "eta",
            value: eta,
        });
    }
    if !(kappa >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "fgr_width: kappa = {kappa} must be nonnegative"
        )));
    }
    let v = fam.coupling_at(kappa)?;
    let vpsi = linalg::matvec(&v.view(), &fam.psi.vec().view())?;
    let mean_v = linalg::dot(&fam.psi.vec().view(), &vpsi.view()).re;
    let mut deflected: Array1<Complex64> = vpsi;
    deflected.zip_mut_with(fam.psi.vec(), |a, b| *a -= mean_v * b);
    let z = Complex64::new(fam.e0, eta);
    let g = fam.reduced.expectation(&deflected, z)?;
    Ok(FgrResult {
        kappa,
        eta,
        lambda2: fam.e0 + kappa * mean_v - kappa * kappa * g.re,
        gamma_fgr: kappa * kappa * g.im,
        delta_e_exact: None,
    })
}

/// [`fgr_width_at`] with `eta` validated against the admissible window of
/// the family's discretized continuum.
pub fn fgr_width(fam: &PerturbedFamily, kappa: f64, eta: f64) -> Result<FgrResult> {
    let (floor, ceiling) = fam.eta_window()?;
    if !(eta >= floor && eta <= ceiling) {
        return Err(Error::EtaOutsideWindow {
            eta,
            floor,
            ceiling,
        });
    }
    fgr_width_at(fam, kappa, eta)
}

/// Second-order resonance position alone.
pub fn lamb_shift_lambda2(fam: &PerturbedFamily, kappa: f64, eta: f64) -> Result<f64> {
    Ok(fgr_width(fam, kappa, eta)?.lambda2)
}

/// Linear-in-`eta` extrapolation of the golden-rule width to `eta -> 0`.
#[derive(Debug, Clone, Serialize)]
pub struct EtaExtrapolation {
    pub kappa: f64,
    /// Fitted intercept: the width with the discretization broadening
    /// removed.
    pub gamma_limit: f64,
    /// Fitted slope in `eta`.
    pub slope: f64,
    /// Root-mean-square fit residual relative to `|gamma_limit|`; large
    /// values mean the window is too wide for a linear model.
    pub quality: f64,
    /// The `(eta, gamma)` samples entering the fit.
    pub samples: Vec<(f64, f64)>,
}

/// Fits `gamma(eta) = gamma_limit + slope * eta` over admissible `eta`
/// samples by least squares.
pub fn eta_extrapolation(
    fam: &PerturbedFamily,
    kappa: f64,
    etas: &[f64],
) -> Result<EtaExtrapolation> {
    if etas.len() < 2 {
        return Err(Error::InvalidArgument(
            "eta_extrapolation: need at least two eta samples".into(),
        ));
    }
    let mut samples = Vec::with_capacity(etas.len());
    for &eta in etas {
        let r = fgr_width(fam, kappa, eta)?;
        samples.push((eta, r.gamma_fgr));
    }
    let n = samples.len() as f64;
    let sx: f64 = samples.iter().map(|s| s.0).sum();
    let sy: f64 = samples.iter().map(|s| s.1).sum();
    let sxx: f64 = samples.iter().map(|s| s.0 * s.0).sum();
    let sxy: f64 = samples.iter().map(|s| s.0 * s.1).sum();
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return Err(Error::InvalidArgument(
            "eta_extrapolation: eta samples are collinear (all equal?)".into(),
        ));
    }
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / n;
    let rms = (samples
        .iter()
        .map(|&(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(EtaExtrapolation {
        kappa,
        gamma_limit: intercept,
        slope,
        quality: rms / intercept.abs().max(f64::MIN_POSITIVE),
        samples,
    })
}

/// Golden-rule predictions against exact widths over a coupling sweep.
#[derive(Debug, Clone, Serialize)]
pub struct KappaSweep {
    pub eta: f64,
    pub rows: Vec<FgrResult>,
    /// Least-squares slope of `ln delta_e` against `ln kappa`; two for a
    /// clean golden-rule regime.
    pub fitted_exponent: f64,
}

/// For each coupling, computes the second-order prediction and the exact
/// energy width of `H(kappa)` at `lambda_2`, then fits the width's scaling
/// exponent in `kappa`.
///
/// Guards: every `kappa` must be positive, and each resonance width must
/// stay below half the band margin so the resonance remains well inside the
/// quasi-continuum.
pub fn kappa_sweep(
    fam: &PerturbedFamily,
    kappas: &[f64],
    eta: f64,
    width_tol: f64,
) -> Result<KappaSweep> {
    if kappas.len() < 2 {
        return Err(Error::InvalidArgument(
            "kappa_sweep: need at least two couplings to fit an exponent".into(),
        ));
    }
    let margin = fam.band_margin();
    let mut rows = Vec::with_capacity(kappas.len());
    for &kappa in kappas {
        let at = |e: Error| Error::AtKappa {
            kappa,
            source: Box::new(e),
        };
        if !(kappa > 0.0) {
            return Err(at(Error::NonPositive {
                name: "kappa",
                value: kappa,
            }));
        }
        let mut row = fgr_width(fam, kappa, eta).map_err(at)?;
        let h = fam.hamiltonian_at(kappa).map_err(at)?;
        let mu = spectral_measure(&h, &fam.psi).map_err(at)?;
        let width = energy_width(&mu, row.lambda2, width_tol).map_err(at)?;
        if !(width.delta_e < 0.5 * margin) {
            return Err(Error::WidthBeyondGap {
                kappa,
                delta_e: width.delta_e,
                margin,
            });
        }
        row.delta_e_exact = Some(width.delta_e);
        rows.push(row);
    }
    // Log-log least squares for the scaling exponent.
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.kappa.ln(), r.delta_e_exact.expect("filled above").ln()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return Err(Error::InvalidArgument(
            "kappa_sweep: couplings are collinear in log scale (all equal?)".into(),
        ));
    }
    Ok(KappaSweep {
        eta,
        rows,
        fitted_exponent: (n * sxy - sx * sy) / det,
    })
}
