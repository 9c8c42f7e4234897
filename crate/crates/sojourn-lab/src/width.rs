//! The width function `f(eps) = 2 eps Im <psi, R(lambda + i eps) psi>`, the
//! energy width it defines, and the residual checks tying the width to the
//! Feshbach inversion formula and its fixed-point equation.
//!
//! For a discrete measure the width function is the saturating sum
//! `f(eps) = sum_k w_k 2 eps^2 / ((E_k - lambda)^2 + eps^2)`: monotone in
//! `eps`, with limits `2 mu({lambda})` at zero and `2` at infinity. The
//! energy width is the first `eps` where `f` reaches one.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::{
    residual_norm, spectral_measure, HermitianOperator, ReducedSpectrum, SpectralMeasure, State,
};

/// Weight an atom at `lambda` needs before the width collapses to zero
/// (`f(0+) = 2w >= 1`).
const ZERO_WIDTH_WEIGHT: f64 = 0.5;

/// Secondary convergence criterion of the width solver: stop only once the
/// bracket's function values also agree this closely, so `f(delta_e)` sits
/// near one even when `f` is steep at the crossing.
const F_GAP_TOL: f64 = 1e-6;

const MAX_BRACKET_DOUBLINGS: u32 = 200;
const MAX_BISECTIONS: u32 = 200;

/// Output of the energy-width solver.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WidthResult {
    /// Reference energy the width is measured around.
    pub lambda: f64,
    /// `inf { eps > 0 : f(eps) >= 1 }`, resolved to the solver tolerance.
    pub delta_e: f64,
    /// `f(delta_e)`; one up to solver tolerance unless `zero_width`.
    pub f_at_solution: f64,
    /// Bracketing plus bisection steps taken.
    pub iterations: u32,
    /// Width-function evaluations consumed.
    pub f_evaluations: u32,
    /// True when at least half the measure sits at `lambda`, forcing
    /// `delta_e = 0` (and an infinite sojourn time).
    pub zero_width: bool,
}

/// Width function of a measure at reference energy `lambda`.
pub fn width_function(mu: &SpectralMeasure, lambda: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::NonPositive {
            name: "eps",
            value: eps,
        });
    }
    Ok(measure_width_function(mu, lambda, eps))
}

fn measure_width_function(mu: &SpectralMeasure, lambda: f64, eps: f64) -> f64 {
    let eps_sq = eps * eps;
    mu.points()
        .iter()
        .map(|p| {
            let d = p.energy - lambda;
            p.weight * 2.0 * eps_sq / (d * d + eps_sq)
        })
        .sum()
}

/// Energy width of a measure: leftmost crossing of `f(. ; lambda)` through
/// one, by bracketing and bisection.
pub fn energy_width(mu: &SpectralMeasure, lambda: f64, tol: f64) -> Result<WidthResult> {
    solve_width(lambda, mu.weight_at(lambda), tol, |eps| {
        measure_width_function(mu, lambda, eps)
    })
}

/// Energy-width solver over an arbitrary monotone width function; used for
/// closed-form width functions alongside the measure-backed path.
///
/// `weight_at_lambda` is the mass the underlying measure places exactly at
/// `lambda`, deciding the zero-width branch.
pub fn solve_width(
    lambda: f64,
    weight_at_lambda: f64,
    tol: f64,
    f: impl Fn(f64) -> f64,
) -> Result<WidthResult> {
    if !(tol > 0.0) {
        return Err(Error::NonPositive {
            name: "tol",
            value: tol,
        });
    }
    if !lambda.is_finite() {
        return Err(Error::InvalidArgument(
            "solve_width: lambda must be finite".into(),
        ));
    }
    if weight_at_lambda >= ZERO_WIDTH_WEIGHT {
        return Ok(WidthResult {
            lambda,
            delta_e: 0.0,
            f_at_solution: 2.0 * weight_at_lambda,
            iterations: 0,
            f_evaluations: 0,
            zero_width: true,
        });
    }

    let mut iterations = 0u32;
    let mut f_evaluations = 0u32;
    let eval = |eps: f64, count: &mut u32| -> f64 {
        *count += 1;
        f(eps)
    };

    // Bracket: grow hi until f(hi) >= 1. The width function of a probability
    // measure tends to 2, so this terminates unless f is malformed.
    let mut lo = 0.0f64;
    let mut f_lo = 2.0 * weight_at_lambda;
    let mut hi = 1.0f64;
    let mut f_hi = eval(hi, &mut f_evaluations);
    while f_hi < 1.0 {
        iterations += 1;
        if iterations > MAX_BRACKET_DOUBLINGS {
            return Err(Error::InvalidArgument(format!(
                "solve_width: width function still {f_hi} at eps = {hi}; \
                 does the measure carry unit mass?"
            )));
        }
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        f_hi = eval(hi, &mut f_evaluations);
    }

    // Bisect for the leftmost crossing; converge in both the bracket length
    // and the function gap so f(delta_e) is pinned near one.
    let mut bisections = 0u32;
    while (hi - lo > tol || f_hi - f_lo > F_GAP_TOL) && bisections < MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket has collapsed to adjacent floats
        }
        bisections += 1;
        let f_mid = eval(mid, &mut f_evaluations);
        if f_mid >= 1.0 {
            hi = mid;
            f_hi = f_mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }

    Ok(WidthResult {
        lambda,
        delta_e: hi,
        f_at_solution: f_hi,
        iterations: iterations + bisections,
        f_evaluations,
        zero_width: false,
    })
}

/// Grid points used by the coarse scan in [`best_lambda`].
const BEST_LAMBDA_GRID: usize = 512;

const GOLDEN_RATIO_CONJ: f64 = 0.618_033_988_749_894_9;

/// Minimizes the energy width over reference energies in `interval`:
/// a 512-point grid scan followed by golden-section refinement around the
/// best grid point. Returns the optimizing `WidthResult` (its `lambda` field
/// carries the minimizer).
pub fn best_lambda(mu: &SpectralMeasure, interval: (f64, f64), tol: f64) -> Result<WidthResult> {
    let (a, b) = interval;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidArgument(format!(
            "best_lambda: invalid interval ({a}, {b})"
        )));
    }
    let width_at = |lambda: f64| energy_width(mu, lambda, tol);

    let step = (b - a) / (BEST_LAMBDA_GRID - 1) as f64;
    let mut best = width_at(a)?;
    for i in 1..BEST_LAMBDA_GRID {
        let lam = a + step * i as f64;
        let w = width_at(lam)?;
        if w.delta_e < best.delta_e {
            best = w;
        }
        if best.zero_width {
            return Ok(best); // nothing beats a zero width
        }
    }

    // Golden-section refinement inside one grid cell on each side of the
    // best grid point. The scan resolution is the multimodality guard; the
    // refinement assumes the minimum is locally unimodal.
    let mut lo = (best.lambda - step).max(a);
    let mut hi = (best.lambda + step).min(b);
    let mut x1 = hi - GOLDEN_RATIO_CONJ * (hi - lo);
    let mut x2 = lo + GOLDEN_RATIO_CONJ * (hi - lo);
    let mut w1 = width_at(x1)?;
    let mut w2 = width_at(x2)?;
    for _ in 0..64 {
        if hi - lo < tol.max(1e-12) {
            break;
        }
        if w1.delta_e <= w2.delta_e {
            hi = x2;
            x2 = x1;
            w2 = w1;
            x1 = hi - GOLDEN_RATIO_CONJ * (hi - lo);
            w1 = width_at(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            w1 = w2;
            x2 = lo + GOLDEN_RATIO_CONJ * (hi - lo);
            w2 = width_at(x2)?;
        }
        let candidate = if w1.delta_e <= w2.delta_e { w1 } else { w2 };
        if candidate.delta_e < best.delta_e {
            best = candidate;
        }
    }
    Ok(best)
}

/// The lower-bound chain evaluated on one `(H, psi, lambda)` triple.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EtupReport {
    pub lambda: f64,
    /// Energy width of the state's spectral measure at `lambda`.
    pub delta_e: f64,
    /// `||(H - lambda) psi||`.
    pub residual: f64,
    /// Sojourn lower bound `1 / delta_e`; infinite when the width vanishes.
    pub sojourn_lower_width: f64,
    /// Weaker bound `1 / residual`; infinite for exact eigenpairs.
    pub sojourn_lower_residual: f64,
    /// `delta_e <= residual` within solver tolerance: the inequality that
    /// orders the two bounds.
    pub chain_ok: bool,
}

/// Evaluates the chained lower bounds: sojourn time at least `1/delta_e`, at
/// least `1/||(H - lambda) psi||`.
pub fn etup_chain(
    h: &HermitianOperator,
    psi: &State,
    lambda: f64,
    tol: f64,
) -> Result<EtupReport> {
    let mu = spectral_measure(h, psi)?;
    let width = energy_width(&mu, lambda, tol)?;
    let residual = residual_norm(h, psi, lambda)?;
    let recip = |x: f64| if x > 0.0 { 1.0 / x } else { f64::INFINITY };
    Ok(EtupReport {
        lambda,
        delta_e: width.delta_e,
        residual,
        sojourn_lower_width: recip(width.delta_e),
        sojourn_lower_residual: recip(residual),
        chain_ok: width.delta_e <= residual + tol,
    })
}

/// `<psi, H psi>` as a complex number together with `P_perp H psi`, shared by
/// the Feshbach checks.
fn mean_and_deflected(
    h: &HermitianOperator,
    psi: &State,
) -> Result<(Complex64, ndarray::Array1<Complex64>)> {
    let hpsi = h.apply(psi.vec())?;
    let mean = linalg::dot(&psi.vec().view(), &hpsi.view());
    let mut deflected = hpsi;
    deflected.zip_mut_with(psi.vec(), |a, b| *a -= mean * b);
    Ok((mean, deflected))
}

/// Defect of the Feshbach inversion formula
/// `1 / <psi, R(z) psi> = <psi, (H - z) psi> - F(z)` at one spectral
/// parameter off the real axis, where
/// `F(z) = <P_perp H psi, (P_perp H P_perp - z)^{-1} P_perp H psi>`.
/// Zero up to roundoff for any Hermitian `H` and normalized `psi`.
pub fn feshbach_residual(h: &HermitianOperator, psi: &State, z: Complex64) -> Result<f64> {
    if z.im == 0.0 {
        return Err(Error::RealSpectralParameter { z });
    }
    let mu = spectral_measure(h, psi)?;
    let g = resolvent_from(&mu, z);
    let (mean, deflected) = mean_and_deflected(h, psi)?;
    let coupling = if h.dim() == 1 {
        Complex64::new(0.0, 0.0) // empty complement
    } else {
        ReducedSpectrum::new(h, psi)?.expectation(&deflected, z)?
    };
    Ok((1.0 / g - (mean - z - coupling)).norm())
}

fn resolvent_from(mu: &SpectralMeasure, z: Complex64) -> Complex64 {
    mu.points()
        .iter()
        .map(|p| p.weight / (Complex64::new(p.energy, 0.0) - z))
        .sum()
}

/// Defect of the width fixed-point equation
/// `delta_e = | <H>_psi - lambda - F(lambda + i delta_e) |`,
/// which the energy width satisfies exactly when `f(delta_e) = 1`.
pub fn fixed_point_residual(
    h: &HermitianOperator,
    psi: &State,
    lambda: f64,
    delta_e: f64,
) -> Result<f64> {
    if !(delta_e > 0.0) {
        return Err(Error::NonPositive {
            name: "delta_e",
            value: delta_e,
        });
    }
    let z = Complex64::new(lambda, delta_e);
    let (mean, deflected) = mean_and_deflected(h, psi)?;
    let coupling = if h.dim() == 1 {
        Complex64::new(0.0, 0.0)
    } else {
        ReducedSpectrum::new(h, psi)?.expectation(&deflected, z)?
    };
    Ok((delta_e - (mean - lambda - coupling).norm()).abs())
}
