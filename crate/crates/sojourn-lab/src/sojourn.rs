//! Survival amplitudes and sojourn times.
//!
//! For a discrete spectral measure the survival amplitude is
//! `a(t) = sum_k w_k exp(-i E_k t)` and the sojourn time is
//! `integral |a(t)|^2 dt` over the whole line. Discrete measures are almost
//! periodic, so the full integral diverges; what is computable is the
//! truncated integral up to a horizon (with an explicit recurrence guard and
//! an optional tail bound) and the exponentially regularized integral, which
//! has a closed-form double sum.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::SpectralMeasure;

/// `a(t) = sum_k w_k exp(-i E_k t)`.
pub fn autocorrelation(mu: &SpectralMeasure, t: f64) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for p in mu.points() {
        let (s, c) = (p.energy * t).sin_cos();
        re += p.weight * c;
        im -= p.weight * s;
    }
    Complex64::new(re, im)
}

/// `|a(t)|^2`.
pub fn survival_probability(mu: &SpectralMeasure, t: f64) -> f64 {
    autocorrelation(mu, t).norm_sqr()
}

/// A truncated sojourn integral together with the bookkeeping needed to
/// interpret it.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SojournEstimate {
    /// `integral_{-horizon}^{horizon} |a(t)|^2 dt` by Simpson quadrature.
    pub value: f64,
    pub horizon: f64,
    /// Simpson intervals actually used on each half axis (input rounded up
    /// to even).
    pub n_quad: usize,
    /// Bound on the mass beyond the horizon, when the caller knows one.
    pub tail_bound: Option<f64>,
    /// Recurrence time `2 pi / min_gap` of the measure; zero for a single
    /// atom (constant amplitude, nothing ever decays).
    pub heisenberg_time: f64,
    /// Set when the horizon exceeds half the recurrence time: beyond it the
    /// truncated value no longer approximates the untruncated integral.
    pub beyond_recurrence_guard: bool,
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::NonPositive {
            name: "horizon",
            value: horizon,
        });
    }
    Ok(())
}

/// Smallest admissible Simpson interval count on `[0, horizon]` for a
/// measure of the given spectral radius: the integrand `|a|^2` oscillates at
/// frequencies up to twice the radius, and sampling must stay above Nyquist.
pub fn nyquist_intervals(horizon: f64, spectral_radius: f64) -> usize {
    ((2.0 * horizon * spectral_radius) / std::f64::consts::PI).ceil() as usize
}

/// Simpson rule over uniformly spaced samples (`values.len() - 1` intervals,
/// even).
pub(crate) fn simpson_samples(values: &[f64], dt: f64) -> f64 {
    let n = values.len() - 1;
    debug_assert!(n >= 2 && n % 2 == 0);
    let mut acc = values[0] + values[n];
    for (i, v) in values.iter().enumerate().take(n).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * dt / 3.0
}

fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let dt = (hi - lo) / n as f64;
    let values: Vec<f64> = (0..=n).map(|i| f(lo + dt * i as f64)).collect();
    simpson_samples(&values, dt)
}

/// Truncated sojourn time of a measure over `[-horizon, horizon]`.
///
/// `n_quad` is the Simpson interval count per half axis; it must satisfy the
/// Nyquist guard for the measure's spectral radius. `|a|^2` is even, so one
/// half axis is integrated and doubled.
pub fn sojourn_truncated(
    mu: &SpectralMeasure,
    horizon: f64,
    n_quad: usize,
) -> Result<SojournEstimate> {
    check_horizon(horizon)?;
    let required = nyquist_intervals(horizon, mu.spectral_radius()).max(2);
    if n_quad < required {
        return Err(Error::QuadratureUnderResolved {
            given: n_quad,
            required,
        });
    }
    let n = n_quad + n_quad % 2;
    let value = 2.0 * simpson(|t| survival_probability(mu, t), 0.0, horizon, n);
    let heisenberg_time = 2.0 * std::f64::consts::PI / mu.min_gap();
    Ok(SojournEstimate {
        value,
        horizon,
        n_quad: n,
        tail_bound: None,
        heisenberg_time,
        beyond_recurrence_guard: horizon > 0.5 * heisenberg_time,
    })
}

/// Truncated sojourn integral of an arbitrary survival amplitude over
/// `[-horizon, horizon]`, split at zero so amplitudes with a kink there
/// (two-sided exponentials) keep full Simpson accuracy. `n_quad` intervals
/// per half axis; the caller owns the Nyquist bookkeeping.
pub fn sojourn_truncated_amplitude(
    a: impl Fn(f64) -> Complex64,
    horizon: f64,
    n_quad: usize,
) -> Result<f64> {
    check_horizon(horizon)?;
    if n_quad < 2 {
        return Err(Error::QuadratureUnderResolved {
            given: n_quad,
            required: 2,
        });
    }
    let n = n_quad + n_quad % 2;
    let g = |t: f64| a(t).norm_sqr();
    Ok(simpson(&g, -horizon, 0.0, n) + simpson(&g, 0.0, horizon, n))
}

/// Exponentially regularized sojourn time
/// `integral |a(t)|^2 exp(-2 eps |t|) dt`, evaluated in closed form:
/// `sum_{j,k} w_j w_k 4 eps / ((E_j - E_k)^2 + 4 eps^2)`.
pub fn sojourn_regularized(mu: &SpectralMeasure, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::NonPositive {
            name: "eps",
            value: eps,
        });
    }
    let pts = mu.points();
    let four_eps = 4.0 * eps;
    let four_eps_sq = four_eps * eps;
    let mut total = 0.0;
    for (j, pj) in pts.iter().enumerate() {
        total += pj.weight * pj.weight / eps;
        for pk in pts.iter().skip(j + 1) {
            let d = pj.energy - pk.energy;
            total += 2.0 * pj.weight * pk.weight * four_eps / (d * d + four_eps_sq);
        }
    }
    Ok(total)
}

/// `integral_{|t| > horizon} (c e^{-gamma |t|})^2 dt = c^2 e^{-2 gamma
/// horizon} / gamma`: the tail bound for amplitudes with a known exponential
/// envelope.
pub fn exponential_tail_bound(prefactor: f64, decay_rate: f64, horizon: f64) -> Result<f64> {
    check_horizon(horizon)?;
    if !(decay_rate > 0.0) {
        return Err(Error::NonPositive {
            name: "decay_rate",
            value: decay_rate,
        });
    }
    Ok(prefactor * prefactor * (-2.0 * decay_rate * horizon).exp() / decay_rate)
}

/// One evaluation of the sojourn lower bound `T >= f(eps)^2 / eps`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LemmaReport {
    pub eps: f64,
    /// Truncated sojourn integral.
    pub lhs_truncated: f64,
    pub tail_bound: Option<f64>,
    /// `lhs_truncated + tail_bound` (or just the truncation when no tail is
    /// known).
    pub lhs_total: f64,
    /// `f(eps)^2 / eps`.
    pub rhs: f64,
    pub ratio: f64,
    /// True when a tail bound was supplied, so the comparison is a genuine
    /// inequality check rather than a report.
    pub asserted: bool,
    /// `lhs_total >= rhs (1 - rel_tol)` when asserted; vacuously true
    /// otherwise.
    pub ok: bool,
}

fn assemble_lemma_report(
    eps: f64,
    lhs_truncated: f64,
    rhs: f64,
    tail_bound: Option<f64>,
    rel_tol: f64,
) -> LemmaReport {
    let lhs_total = lhs_truncated + tail_bound.unwrap_or(0.0);
    let asserted = tail_bound.is_some();
    LemmaReport {
        eps,
        lhs_truncated,
        tail_bound,
        lhs_total,
        rhs,
        ratio: lhs_total / rhs,
        asserted,
        ok: !asserted || lhs_total >= rhs * (1.0 - rel_tol),
    }
}

/// Checks the lower bound `T >= f(eps)^2 / eps` for a measure, with the
/// truncated integral standing in for `T`.
///
/// Without a tail bound the truncation may undershoot the true sojourn time,
/// so the report is informational (`asserted = false`, `ok = true`); with
/// one, `ok` asserts the inequality up to `rel_tol`.
#[allow(clippy::too_many_arguments)]
pub fn lemma_bound_check(
    mu: &SpectralMeasure,
    lambda: f64,
    eps: f64,
    horizon: f64,
    n_quad: usize,
    tail_bound: Option<f64>,
    rel_tol: f64,
) -> Result<LemmaReport> {
    let f = crate::width::width_function(mu, lambda, eps)?;
    let estimate = sojourn_truncated(mu, horizon, n_quad)?;
    Ok(assemble_lemma_report(
        eps,
        estimate.value,
        f * f / eps,
        tail_bound,
        rel_tol,
    ))
}

/// Amplitude-level variant of [`lemma_bound_check`] for models with closed
/// forms: the caller supplies the survival amplitude and the width-function
/// value `f(eps)` directly.
pub fn lemma_bound_check_amplitude(
    a: impl Fn(f64) -> Complex64,
    f_eps: f64,
    eps: f64,
    horizon: f64,
    n_quad: usize,
    tail_bound: Option<f64>,
    rel_tol: f64,
) -> Result<LemmaReport> {
    if !(eps > 0.0) {
        return Err(Error::NonPositive {
            name: "eps",
            value: eps,
        });
    }
    let lhs = sojourn_truncated_amplitude(a, horizon, n_quad)?;
    Ok(assemble_lemma_report(
        eps,
        lhs,
        f_eps * f_eps / eps,
        tail_bound,
        rel_tol,
    ))
}
