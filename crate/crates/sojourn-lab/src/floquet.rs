//! Time-periodic Hamiltonians and their quasi-energy description.
//!
//! A drive `H(t) = H0 + kappa * V(t)` with `V(t) = sum_n vhat(n) e^{i n omega
//! t}` is lifted to the quasi-energy (Howland) operator `K` acting on mode
//! blocks: `K(n, m) = delta_nm (H0 + n omega) + kappa * vhat(n - m)`. The
//! module builds the truncated `K`, integrates the driven Schrodinger
//! equation with an exactly unitary midpoint-exponential stepper, verifies
//! the lifting identity `(e^{-iKs} phi)(t + s) = U(t + s, t) phi(t)` on a
//! time grid, averages sojourn times over the initial time `t0`, and
//! evaluates the driven golden-rule width from mode-resolved resolvent
//! expectations.

use ndarray::{s, Array1, Array2};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg;
use crate::sojourn::{nyquist_intervals, simpson_samples, sojourn_truncated, SojournEstimate};
use crate::spectral::{
    residual_norm, spectral_measure, HermitianOperator, ReducedSpectrum, SpectralMeasure, State,
};

/// Matching [`crate::perturbation`]: relative residual below which a state
/// counts as an eigenvector of `H0`.
const EIGENPAIR_RTOL: f64 = 1e-10;

/// Entrywise tolerance for the Hermiticity of supplied matrices, relative to
/// their largest entry.
const HERMITICITY_RTOL: f64 = 1e-12;

/// Minimum number of propagation steps per shortest period of the drive.
const STEPS_PER_PERIOD_MIN: usize = 20;

/// The propagator polices unitarity every this many steps.
const UNITARITY_CHECK_STRIDE: usize = 64;

/// Average drift per step above which the running product is re-projected
/// onto the unitary group.
const STEP_DRIFT_TOL: f64 = 1e-10;

/// Hard ceiling on `||U^H U - I||_F` for a finished propagator.
const FINAL_DRIFT_TOL: f64 = 1e-8;

/// Relative offset up to which a requested time snaps onto the step grid.
const GRID_SNAP_RTOL: f64 = 1e-6;

/// Relative Fourier mass allowed beyond the mode truncation in
/// [`howland_check`] test functions.
const BAND_LIMIT_RTOL: f64 = 1e-10;

/// Absolute distance within which an `H0` eigenvalue at `E0 + n omega`
/// (n != 0) counts as a resonance.
const NONRESONANCE_TOL: f64 = 1e-9;

/// Oversampling factor (relative to the Nyquist rate of the survival
/// probability) for the autocorrelation samples in [`averaged_sojourn`].
const SAMPLE_OVERSAMPLE: usize = 8;

/// Allowed deviation of a driven trajectory's norm from one.
const TRAJECTORY_NORM_TOL: f64 = 1e-8;

/// A periodically driven Hamiltonian `H(t) = H0 + kappa * V(t)` together
/// with a distinguished eigenstate of the undriven part.
///
/// The drive is specified through its non-negative Fourier coefficients:
/// `harmonics[n]` is `vhat(n)` for `n = 0..=M`, and `vhat(-n) = vhat(n)^H`
/// is implied, which makes `V(t)` Hermitian at every `t`. `vhat(0)` must be
/// Hermitian on its own.
#[derive(Debug, Clone)]
pub struct FloquetProblem {
    h0: HermitianOperator,
    harmonics: Vec<Array2<Complex64>>,
    /// Adjoints of `harmonics[1..]`, precomputed; entry `n - 1` is
    /// `vhat(-n)`.
    adjoints: Vec<Array2<Complex64>>,
    omega: f64,
    n_modes: usize,
    kappa: f64,
    psi: State,
    e0: f64,
    /// Spectrum of `H0` compressed to the complement of `psi`; `None` only
    /// in dimension one, where the complement is empty.
    reduced: Option<ReducedSpectrum>,
}

impl FloquetProblem {
    /// `harmonics[n]` is `vhat(n)`; `n_modes` is the truncation order `N`
    /// of the quasi-energy operator and must cover every supplied harmonic.
    /// `psi` must be an eigenvector of `h0` with a simple eigenvalue.
    pub fn new(
        h0: HermitianOperator,
        harmonics: Vec<Array2<Complex64>>,
        omega: f64,
        n_modes: usize,
        kappa: f64,
        psi: State,
    ) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::NonPositive {
                name: "omega",
                value: omega,
            });
        }
        if !kappa.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "FloquetProblem: kappa = {kappa} is not finite"
            )));
        }
        if harmonics.is_empty() {
            return Err(Error::InvalidArgument(
                "FloquetProblem: need at least the static harmonic vhat(0)".into(),
            ));
        }
        let d = h0.dim();
        for (n, v) in harmonics.iter().enumerate() {
            if v.nrows() != d || v.ncols() != d {
                return Err(Error::DimensionMismatch {
                    context: "FloquetProblem harmonic",
                    left: d,
                    right: if v.nrows() != d { v.nrows() } else { v.ncols() },
                });
            }
            if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "FloquetProblem: harmonic vhat({n}) has a non-finite entry"
                )));
            }
        }
        check_square_hermitian(&harmonics[0], d)?;
        let max_harmonic = harmonics.len() - 1;
        if n_modes < max_harmonic {
            return Err(Error::InvalidArgument(format!(
                "FloquetProblem: mode truncation N = {n_modes} must cover the highest \
                 harmonic M = {max_harmonic}"
            )));
        }
        if psi.dim() != d {
            return Err(Error::DimensionMismatch {
                context: "FloquetProblem psi",
                left: d,
                right: psi.dim(),
            });
        }
        let e0 = h0.expectation(&psi)?;
        let residual = residual_norm(&h0, &psi, e0)?;
        let tol = EIGENPAIR_RTOL * h0.spectral_radius().max(1.0);
        if residual > tol {
            return Err(Error::NotAnEigenpair {
                psi_info: "psi for FloquetProblem",
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
                "FloquetProblem: E0 = {e0} has multiplicity {degeneracy}, need a simple eigenvalue"
            )));
        }
        let adjoints = harmonics
            .iter()
            .skip(1)
            .map(|v| linalg::adjoint(&v.view()))
            .collect();
        let reduced = if d >= 2 {
            Some(ReducedSpectrum::new(&h0, &psi)?)
        } else {
            None
        };
        Ok(Self {
            h0,
            harmonics,
            adjoints,
            omega,
            n_modes,
            kappa,
            psi,
            e0,
            reduced,
        })
    }

    pub fn h0(&self) -> &HermitianOperator {
        &self.h0
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Drive period `2 pi / omega`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    /// Mode truncation order `N`.
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Highest supplied harmonic `M`.
    pub fn max_harmonic(&self) -> usize {
        self.harmonics.len() - 1
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn psi(&self) -> &State {
        &self.psi
    }

    /// Eigenvalue of `h0` carried by `psi`.
    pub fn e0(&self) -> f64 {
        self.e0
    }

    /// Dimension `d` of the undriven problem.
    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    /// Dimension `(2N + 1) d` of the truncated quasi-energy operator.
    pub fn block_dim(&self) -> usize {
        (2 * self.n_modes + 1) * self.dim()
    }

    /// `vhat(p)` for any `|p| <= M`; negative orders are the precomputed
    /// adjoints.
    fn harmonic_block(&self, p: i64) -> &Array2<Complex64> {
        if p >= 0 {
            &self.harmonics[p as usize]
        } else {
            &self.adjoints[(-p) as usize - 1]
        }
    }

    /// `H(t) = H0 + kappa * V(t)` as a dense matrix. Real symmetric
    /// harmonics of a real `H0` yield an exactly real result, preserving the
    /// fast real-symmetric eigensolver path downstream.
    pub fn hamiltonian_at(&self, t: f64) -> Array2<Complex64> {
        let mut h = self.h0.matrix().clone();
        if self.kappa == 0.0 {
            return h;
        }
        let kap = Complex64::new(self.kappa, 0.0);
        h.zip_mut_with(&self.harmonics[0], |a, b| *a += kap * b);
        for n in 1..=self.max_harmonic() {
            let phase = Complex64::from_polar(1.0, n as f64 * self.omega * t);
            let fwd = kap * phase;
            let bwd = kap * phase.conj();
            let vn = &self.harmonics[n];
            let an = &self.adjoints[n - 1];
            for ((i, j), a) in h.indexed_iter_mut() {
                *a += fwd * vn[[i, j]] + bwd * an[[i, j]];
            }
        }
        h
    }

    /// Shortest period present in `H(t)`: the base period divided by the
    /// highest harmonic.
    pub fn min_period(&self) -> f64 {
        self.period() / self.max_harmonic().max(1) as f64
    }

    /// Rigorous upper bound on `sup_t ||H(t)||` via Frobenius norms; the
    /// survival amplitude of any driven trajectory stays band-limited within
    /// this radius.
    pub fn drive_radius_bound(&self) -> f64 {
        let mut coupling = 0.0;
        for (n, v) in self.harmonics.iter().enumerate() {
            let f = linalg::frob_norm(&v.view());
            coupling += if n == 0 { f } else { 2.0 * f };
        }
        self.h0.spectral_radius() + self.kappa.abs() * coupling
    }

    /// `vhat(-n) psi`: the vector whose resolvent expectation at
    /// `E0 + n omega` enters the golden-rule sum. In second order on the
    /// quasi-energy operator the intermediate block `-n` carries the
    /// diagonal `H0 - n omega`, and its coupling back to the zero block is
    /// `vhat(-n)`; for real symmetric drives the distinction from
    /// `vhat(n) psi` is invisible.
    fn deflected_vector(&self, n: i64) -> Result<Array1<Complex64>> {
        let psi = self.psi.vec();
        if n > 0 {
            linalg::adj_matvec(&self.harmonics[n as usize].view(), &psi.view())
        } else {
            linalg::matvec(&self.harmonics[(-n) as usize].view(), &psi.view())
        }
    }
}

fn check_square_hermitian(a: &Array2<Complex64>, d: usize) -> Result<()> {
    if a.nrows() != d || a.ncols() != d {
        return Err(Error::DimensionMismatch {
            context: "time-dependent Hamiltonian block",
            left: d,
            right: if a.nrows() != d { a.nrows() } else { a.ncols() },
        });
    }
    let mut max_abs = 0.0f64;
    for z in a.iter() {
        max_abs = max_abs.max(z.norm());
    }
    let tol = HERMITICITY_RTOL * max_abs.max(1.0);
    let mut deviation = 0.0f64;
    for i in 0..d {
        for j in i..d {
            deviation = deviation.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    if deviation > tol {
        return Err(Error::NotHermitian {
            deviation,
            tolerance: tol,
        });
    }
    Ok(())
}

/// Assembles the truncated quasi-energy operator of dimension `(2N + 1) d`.
///
/// Mode `n` lives in block index `n + N`; block `(n, m)` is
/// `delta_nm (H0 + n omega) + kappa * vhat(n - m)`, zero whenever
/// `|n - m| > M`.
pub fn build_floquet(fp: &FloquetProblem) -> Result<HermitianOperator> {
    let d = fp.dim();
    let blocks = 2 * fp.n_modes + 1;
    let h0 = fp.h0.matrix();
    let kap = Complex64::new(fp.kappa, 0.0);
    let mut k = Array2::zeros((blocks * d, blocks * d));
    for r in 0..blocks {
        let n = r as i64 - fp.n_modes as i64;
        let shift = n as f64 * fp.omega;
        for i in 0..d {
            for j in 0..d {
                k[[r * d + i, r * d + j]] = h0[[i, j]];
            }
            k[[r * d + i, r * d + i]] += shift;
        }
        if fp.kappa == 0.0 {
            continue;
        }
        for c in 0..blocks {
            let m = c as i64 - fp.n_modes as i64;
            let p = n - m;
            if p.unsigned_abs() as usize > fp.max_harmonic() {
                continue;
            }
            let blk = fp.harmonic_block(p);
            for i in 0..d {
                for j in 0..d {
                    k[[r * d + i, c * d + j]] += kap * blk[[i, j]];
                }
            }
        }
    }
    HermitianOperator::new(k)
}

/// Places a `d`-dimensional state in the `n = 0` mode block of the
/// quasi-energy space; all other blocks are zero.
pub fn embed_zero_mode(fp: &FloquetProblem, state: &State) -> Result<State> {
    let d = fp.dim();
    if state.dim() != d {
        return Err(Error::DimensionMismatch {
            context: "embed_zero_mode",
            left: d,
            right: state.dim(),
        });
    }
    let mut v = Array1::zeros(fp.block_dim());
    let off = fp.n_modes * d;
    v.slice_mut(s![off..off + d]).assign(state.vec());
    State::new(v)
}

/// Spectral measure of the zero-mode embedding of the problem's eigenstate
/// with respect to the built quasi-energy operator `k`.
pub fn zero_mode_measure(fp: &FloquetProblem, k: &HermitianOperator) -> Result<SpectralMeasure> {
    if k.dim() != fp.block_dim() {
        return Err(Error::DimensionMismatch {
            context: "zero_mode_measure operator",
            left: fp.block_dim(),
            right: k.dim(),
        });
    }
    let phi = embed_zero_mode(fp, &fp.psi)?;
    spectral_measure(k, &phi)
}

/// Asserts that no eigenvalue of `H0` sits at `E0 + n omega` for `n != 0`,
/// and that `E0` itself is hit exactly once, both within an absolute
/// [`NONRESONANCE_TOL`]. Resonances make the mode-resolved golden-rule sum
/// singular, so this runs before any driven width computation.
pub fn check_nonresonance(fp: &FloquetProblem) -> Result<()> {
    let mut hits_at_zero = 0usize;
    for &mu in fp.h0.eigenvalues() {
        let nearest = ((mu - fp.e0) / fp.omega).round() as i64;
        for n in [nearest - 1, nearest, nearest + 1] {
            let target = fp.e0 + n as f64 * fp.omega;
            if (mu - target).abs() > NONRESONANCE_TOL {
                continue;
            }
            if n == 0 {
                hits_at_zero += 1;
                if hits_at_zero > 1 {
                    return Err(Error::NonResonant {
                        eigenvalue: mu,
                        mode: 0,
                        target,
                        tolerance: NONRESONANCE_TOL,
                    });
                }
            } else {
                return Err(Error::NonResonant {
                    eigenvalue: mu,
                    mode: n,
                    target,
                    tolerance: NONRESONANCE_TOL,
                });
            }
        }
    }
    Ok(())
}

/// Unitary solution operators `U(t, t_start)` of a driven Schrodinger
/// equation, sampled at requested grid times.
#[derive(Debug, Clone)]
pub struct Propagator {
    t_start: f64,
    dt: f64,
    n_steps: usize,
    grid_indices: Vec<usize>,
    times: Vec<f64>,
    mats: Vec<Array2<Complex64>>,
    unitarity_drift: f64,
    reunitarizations: usize,
}

impl Propagator {
    /// Snapshot times, ascending, each exactly on the step grid.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `U(times[i], t_start)` for each snapshot.
    pub fn matrices(&self) -> &[Array2<Complex64>] {
        &self.mats
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    pub fn at(&self, index: usize) -> &Array2<Complex64> {
        &self.mats[index]
    }

    /// Snapshot whose time matches `t` on the step grid, if one was stored.
    pub fn at_time(&self, t: f64) -> Option<&Array2<Complex64>> {
        let k = ((t - self.t_start) / self.dt).round();
        if !k.is_finite() || k < 0.0 || (t - (self.t_start + k * self.dt)).abs() > GRID_SNAP_RTOL * self.dt {
            return None;
        }
        let k = k as usize;
        self.grid_indices
            .binary_search(&k)
            .ok()
            .map(|pos| &self.mats[pos])
    }

    /// Two-time solution operator `U(times[to], times[from]) =
    /// U(times[to], t_start) U(times[from], t_start)^H`; the cocycle
    /// property makes this exact up to the recorded unitarity drift.
    pub fn between(&self, from: usize, to: usize) -> Result<Array2<Complex64>> {
        if from >= self.mats.len() || to >= self.mats.len() {
            return Err(Error::InvalidArgument(format!(
                "Propagator::between: snapshot indices ({from}, {to}) out of range for {} snapshots",
                self.mats.len()
            )));
        }
        linalg::matmul_adj(&self.mats[to].view(), &self.mats[from].view())
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Largest `||U^H U - I||_F` observed at any drift check before
    /// re-projection.
    pub fn unitarity_drift(&self) -> f64 {
        self.unitarity_drift
    }

    /// How many times the running product was polar-projected back onto the
    /// unitary group.
    pub fn reunitarizations(&self) -> usize {
        self.reunitarizations
    }
}

/// `||U^H U - I||_F`.
fn unitarity_defect(u: &Array2<Complex64>) -> f64 {
    let g = match linalg::adj_matmul(&u.view(), &u.view()) {
        Ok(g) => g,
        Err(_) => return f64::INFINITY,
    };
    let mut acc = 0.0;
    for ((i, j), z) in g.indexed_iter() {
        let t = if i == j { *z - 1.0 } else { *z };
        acc += t.norm_sqr();
    }
    acc.sqrt()
}

/// Newton-Schulz iteration `U <- U (3 I - U^H U) / 2`, quadratically
/// convergent to the unitary polar factor for small defects.
fn newton_schulz_project(u: &mut Array2<Complex64>) -> Result<()> {
    let d = u.nrows();
    let target = 1e-14 * (d as f64).sqrt();
    for _ in 0..8 {
        if unitarity_defect(u) <= target {
            return Ok(());
        }
        let mut m = linalg::adj_matmul(&u.view(), &u.view())?;
        m.mapv_inplace(|z| -0.5 * z);
        for i in 0..d {
            m[[i, i]] += 1.5;
        }
        *u = linalg::matmul(&u.view(), &m.view())?;
    }
    Ok(())
}

/// Integrates `i dU/dt = H(t) U` over `[t_start, t_end]` with the
/// midpoint-exponential scheme `U <- exp(-i dt H(t + dt/2)) U`, storing
/// `U(t, t_start)` at each requested snapshot time.
///
/// Every step applies an exact unitary, so the only drift is roundoff; it is
/// still policed every [`UNITARITY_CHECK_STRIDE`] steps and repaired by
/// polar projection when it exceeds [`STEP_DRIFT_TOL`] per step.
/// `min_period` is the shortest period present in `h_of_t`; the step count
/// must resolve it with at least [`STEPS_PER_PERIOD_MIN`] steps. Snapshot
/// times must lie on the step grid.
pub fn propagate<F>(
    h_of_t: F,
    t_start: f64,
    t_end: f64,
    n_steps: usize,
    min_period: f64,
    snapshot_times: &[f64],
) -> Result<Propagator>
where
    F: Fn(f64) -> Array2<Complex64>,
{
    let span = t_end - t_start;
    if !(span > 0.0) || !span.is_finite() {
        return Err(Error::NonPositive {
            name: "propagation span",
            value: span,
        });
    }
    if !(min_period > 0.0) || !min_period.is_finite() {
        return Err(Error::NonPositive {
            name: "min_period",
            value: min_period,
        });
    }
    let required = ((STEPS_PER_PERIOD_MIN as f64 * span / min_period).ceil() as usize).max(1);
    if n_steps < required {
        return Err(Error::QuadratureUnderResolved {
            given: n_steps,
            required,
        });
    }
    let dt = span / n_steps as f64;
    let mut indices = Vec::with_capacity(snapshot_times.len());
    for &t in snapshot_times {
        let k = ((t - t_start) / dt).round();
        let on_grid = k.is_finite()
            && (0.0..=(n_steps as f64)).contains(&k)
            && (t - (t_start + k * dt)).abs() <= GRID_SNAP_RTOL * dt;
        if !on_grid {
            return Err(Error::InvalidArgument(format!(
                "propagate: snapshot time {t} is not on the step grid (dt = {dt:.6e}, \
                 span [{t_start}, {t_end}])"
            )));
        }
        indices.push(k as usize);
    }
    indices.sort_unstable();
    indices.dedup();
    if indices.is_empty() {
        return Err(Error::InvalidArgument(
            "propagate: at least one snapshot time is required".into(),
        ));
    }

    let d = h_of_t(t_start).nrows();
    if d == 0 {
        return Err(Error::InvalidArgument(
            "propagate: zero-dimensional Hamiltonian".into(),
        ));
    }
    let mut u = Array2::eye(d);
    let mut times = Vec::with_capacity(indices.len());
    let mut mats = Vec::with_capacity(indices.len());
    let mut next = 0usize;
    if indices[next] == 0 {
        times.push(t_start);
        mats.push(u.clone());
        next += 1;
    }
    let mut drift = 0.0f64;
    let mut reunitarizations = 0usize;
    let mut last_check = 0usize;
    for step in 0..n_steps {
        let t_mid = t_start + (step as f64 + 0.5) * dt;
        let h = h_of_t(t_mid);
        check_square_hermitian(&h, d)?;
        let e = linalg::hermitian_exp(&h.view(), dt)?;
        u = linalg::matmul(&e.view(), &u.view())?;
        let done = step + 1;
        if done % UNITARITY_CHECK_STRIDE == 0 || done == n_steps {
            let defect = unitarity_defect(&u);
            drift = drift.max(defect);
            if defect > STEP_DRIFT_TOL * (done - last_check) as f64 {
                newton_schulz_project(&mut u)?;
                reunitarizations += 1;
            }
            last_check = done;
        }
        if next < indices.len() && indices[next] == done {
            times.push(t_start + done as f64 * dt);
            mats.push(u.clone());
            next += 1;
        }
    }
    let final_defect = unitarity_defect(&u);
    if final_defect > FINAL_DRIFT_TOL {
        return Err(Error::EigenVerification {
            check: "propagator unitarity",
            residual: final_defect,
            tolerance: FINAL_DRIFT_TOL,
        });
    }
    Ok(Propagator {
        t_start,
        dt,
        n_steps,
        grid_indices: indices,
        times,
        mats,
        unitarity_drift: drift,
        reunitarizations,
    })
}

/// Outcome of a lifting-identity check.
#[derive(Debug, Clone, Serialize)]
pub struct HowlandReport {
    /// Evolution time the identity was tested at.
    pub s: f64,
    /// Number of grid points `t_j` in one period.
    pub n_grid: usize,
    /// `max_j || (e^{-iKs} phi)(t_j + s) - U(t_j + s, t_j) phi(t_j) ||`.
    pub residual: f64,
    /// Grid time attaining the residual.
    pub worst_time: f64,
    /// Relative Fourier mass of `phi` beyond the mode truncation (must pass
    /// the band-limit gate to get here).
    pub band_defect: f64,
}

/// Verifies the lifting identity `(e^{-iKs} phi)(t + s) = U(t + s, t)
/// phi(t)` on `n_grid` equispaced times in one period.
///
/// The left side evolves the Fourier stack of `phi` under the built
/// quasi-energy operator `k` and resynthesizes it at `t + s`; the right side
/// uses the midpoint-exponential propagator. `phi` must be band-limited
/// within the mode truncation (checked), `n_grid` must divide
/// `steps_per_period`, and `s` must lie on the step grid. The returned
/// residual is dominated by the mode truncation once the stepper is
/// resolved, so it decreases as `N` grows.
pub fn howland_check<F>(
    fp: &FloquetProblem,
    k: &HermitianOperator,
    phi: F,
    s: f64,
    n_grid: usize,
    steps_per_period: usize,
) -> Result<HowlandReport>
where
    F: Fn(f64) -> Array1<Complex64>,
{
    if k.dim() != fp.block_dim() {
        return Err(Error::DimensionMismatch {
            context: "howland_check operator",
            left: fp.block_dim(),
            right: k.dim(),
        });
    }
    let needed = 2 * (fp.n_modes + 1);
    if n_grid < needed {
        return Err(Error::InvalidArgument(format!(
            "howland_check: n_grid = {n_grid} cannot resolve modes up to N = {}; \
             need at least {needed}",
            fp.n_modes
        )));
    }
    if steps_per_period == 0 || steps_per_period % n_grid != 0 {
        return Err(Error::InvalidArgument(format!(
            "howland_check: steps_per_period = {steps_per_period} must be a positive \
             multiple of n_grid = {n_grid}"
        )));
    }
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "howland_check: evolution time s = {s} must be finite and non-negative"
        )));
    }
    let period = fp.period();
    let dt = period / steps_per_period as f64;
    let s_steps = (s / dt).round();
    if (s - s_steps * dt).abs() > GRID_SNAP_RTOL * dt {
        return Err(Error::InvalidArgument(format!(
            "howland_check: s = {s} must lie on the propagation step grid (dt = {dt:.6e})"
        )));
    }
    let s_steps = s_steps as usize;

    let d = fp.dim();
    let times: Vec<f64> = (0..n_grid)
        .map(|j| period * j as f64 / n_grid as f64)
        .collect();
    let mut samples = Vec::with_capacity(n_grid);
    for &t in &times {
        let v = phi(t);
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                context: "howland_check phi",
                left: d,
                right: v.len(),
            });
        }
        samples.push(v);
    }
    let scale = samples
        .iter()
        .map(|v| linalg::vec_norm(&v.view()))
        .fold(0.0f64, f64::max);
    if scale < 1e-150 {
        return Err(Error::ZeroVector { norm: scale });
    }

    // Discrete Fourier coefficients over the representable mode range.
    let n_modes = fp.n_modes as i64;
    let m_lo = -(((n_grid - 1) / 2) as i64);
    let m_hi = (n_grid / 2) as i64;
    let inv = 1.0 / n_grid as f64;
    let mut stacked = Array1::zeros(fp.block_dim());
    let mut total_sq = 0.0f64;
    let mut defect_sq = 0.0f64;
    for m in m_lo..=m_hi {
        let mut coeff: Array1<Complex64> = Array1::zeros(d);
        for (j, v) in samples.iter().enumerate() {
            let angle = -2.0 * PI * (m * j as i64) as f64 / n_grid as f64;
            let ph = Complex64::from_polar(inv, angle);
            coeff.zip_mut_with(v, |a, b| *a += ph * b);
        }
        let mass: f64 = coeff.iter().map(|z| z.norm_sqr()).sum();
        total_sq += mass;
        if m.abs() > n_modes {
            defect_sq += mass;
        } else {
            let off = (m + n_modes) as usize * d;
            stacked.slice_mut(s![off..off + d]).assign(&coeff);
        }
    }
    let band_defect = (defect_sq / total_sq).sqrt();
    if band_defect > BAND_LIMIT_RTOL {
        return Err(Error::InvalidArgument(format!(
            "howland_check: phi is not band-limited within |n| <= {}: relative tail \
             mass {band_defect:.3e}",
            fp.n_modes
        )));
    }

    let evolved = k.evolve(&stacked, s)?;

    let mut snaps: Vec<f64> = Vec::with_capacity(2 * n_grid);
    snaps.extend(times.iter().copied());
    snaps.extend(times.iter().map(|&t| t + s));
    let n_steps_total = steps_per_period + s_steps;
    let t_end = n_steps_total as f64 * dt;
    let prop = propagate(
        |t| fp.hamiltonian_at(t),
        0.0,
        t_end,
        n_steps_total,
        fp.min_period(),
        &snaps,
    )?;

    let mut residual = 0.0f64;
    let mut worst_time = times[0];
    for (j, &tj) in times.iter().enumerate() {
        let target = tj + s;
        let mut lhs: Array1<Complex64> = Array1::zeros(d);
        for m in -n_modes..=n_modes {
            let off = (m + n_modes) as usize * d;
            let block = evolved.slice(s![off..off + d]);
            let ph = Complex64::from_polar(1.0, m as f64 * fp.omega * target);
            lhs.zip_mut_with(&block, |a, b| *a += ph * b);
        }
        let v_t = prop
            .at_time(tj)
            .expect("requested snapshot present on the grid");
        let v_ts = prop
            .at_time(target)
            .expect("requested snapshot present on the grid");
        let y = linalg::adj_matvec(&v_t.view(), &samples[j].view())?;
        let rhs = linalg::matvec(&v_ts.view(), &y.view())?;
        lhs.zip_mut_with(&rhs, |a, b| *a -= b);
        let r = linalg::vec_norm(&lhs.view());
        if r > residual {
            residual = r;
            worst_time = tj;
        }
    }
    Ok(HowlandReport {
        s,
        n_grid,
        residual,
        worst_time,
        band_defect,
    })
}

/// Initial-time-averaged sojourn estimate together with its quasi-energy
/// counterpart.
#[derive(Debug, Clone, Serialize)]
pub struct AveragedSojourn {
    /// Horizon actually integrated (the request, trimmed to the sample
    /// grid).
    pub horizon: f64,
    pub n_t0: usize,
    /// Spacing of the autocorrelation samples.
    pub sample_dt: f64,
    /// Two-sided truncated sojourn time for each initial time `t0 = i T /
    /// n_t0`.
    pub per_t0: Vec<f64>,
    /// Mean of `per_t0`.
    pub averaged: f64,
    /// Truncated sojourn of the zero-mode embedding with respect to the
    /// quasi-energy operator, over the same horizon.
    pub quasi_energy: SojournEstimate,
    /// `averaged * (1 + tol) - quasi_energy.value`, non-negative whenever
    /// this report is returned.
    pub jensen_margin: f64,
}

/// Averages the two-sided truncated sojourn time of the driven survival
/// amplitude `a(s; t0) = <psi, U(t0 + s, t0) psi>` over `n_t0` equispaced
/// initial times, and checks it against the quasi-energy sojourn of the
/// zero-mode embedding.
///
/// The average of `|a|^2` over a full period of `t0` is even in `s`, so each
/// trajectory is integrated forward and doubled. Convexity makes the
/// quasi-energy sojourn a lower bound for the average at every horizon; a
/// violation beyond `jensen_rtol` (relative to the average) means the
/// discretization is inconsistent and is returned as an error rather than a
/// report.
pub fn averaged_sojourn(
    fp: &FloquetProblem,
    k: &HermitianOperator,
    horizon: f64,
    n_t0: usize,
    steps_per_period: usize,
    jensen_rtol: f64,
) -> Result<AveragedSojourn> {
    if fp.kappa == 0.0 {
        return Err(Error::InvalidArgument(
            "averaged_sojourn: kappa = 0 leaves psi stationary, so the sojourn time is \
             infinite on both sides of the bound"
                .into(),
        ));
    }
    if k.dim() != fp.block_dim() {
        return Err(Error::DimensionMismatch {
            context: "averaged_sojourn operator",
            left: fp.block_dim(),
            right: k.dim(),
        });
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::NonPositive {
            name: "horizon",
            value: horizon,
        });
    }
    if n_t0 == 0 {
        return Err(Error::InvalidArgument(
            "averaged_sojourn: need at least one initial time".into(),
        ));
    }
    if !(jensen_rtol >= 0.0) || !jensen_rtol.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "averaged_sojourn: jensen_rtol = {jensen_rtol} must be finite and non-negative"
        )));
    }
    let min_steps = STEPS_PER_PERIOD_MIN * fp.max_harmonic().max(1);
    if steps_per_period < min_steps {
        return Err(Error::QuadratureUnderResolved {
            given: steps_per_period,
            required: min_steps,
        });
    }
    if steps_per_period % n_t0 != 0 {
        return Err(Error::InvalidArgument(format!(
            "averaged_sojourn: steps_per_period = {steps_per_period} must be a multiple \
             of n_t0 = {n_t0}"
        )));
    }
    let period = fp.period();
    let dt = period / steps_per_period as f64;
    let g = steps_per_period / n_t0;

    // Autocorrelation samples must oversample the survival probability's
    // Nyquist rate; the stride must also divide the t0 spacing so that every
    // trajectory samples on its own aligned grid.
    let radius = fp.drive_radius_bound();
    let ds_max = PI / (2.0 * radius * SAMPLE_OVERSAMPLE as f64);
    let stride = (1..=g)
        .filter(|st| g % st == 0 && *st as f64 * dt <= ds_max)
        .max();
    let stride = match stride {
        Some(st) => st,
        None => {
            return Err(Error::QuadratureUnderResolved {
                given: steps_per_period,
                required: (period / ds_max).ceil() as usize,
            })
        }
    };
    let ds = stride as f64 * dt;
    let mut n_s = (horizon / ds).floor() as usize;
    n_s -= n_s % 2;
    if n_s < 8 {
        return Err(Error::QuadratureUnderResolved {
            given: n_s,
            required: 8,
        });
    }
    let horizon_eff = n_s as f64 * ds;

    let d = fp.dim();
    let psi_vec = fp.psi.vec();
    let window = n_s * stride;
    let total_steps = (n_t0 - 1) * g + window;
    let mut xs: Vec<Array1<Complex64>> = vec![Array1::zeros(d); n_t0];
    let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(n_s + 1); n_t0];
    for j in 0..=total_steps {
        let i_lo = if j > window { (j - window).div_ceil(g) } else { 0 };
        let i_hi = (j / g).min(n_t0 - 1);
        for i in i_lo..=i_hi {
            let rel = j - i * g;
            if rel == 0 {
                xs[i].assign(psi_vec);
            }
            if rel % stride == 0 {
                let a = linalg::dot(&psi_vec.view(), &xs[i].view());
                samples[i].push(a.norm_sqr());
            }
            if rel == window {
                let norm = linalg::vec_norm(&xs[i].view());
                if (norm - 1.0).abs() > TRAJECTORY_NORM_TOL {
                    return Err(Error::EigenVerification {
                        check: "driven trajectory norm",
                        residual: (norm - 1.0).abs(),
                        tolerance: TRAJECTORY_NORM_TOL,
                    });
                }
            }
        }
        if j == total_steps {
            break;
        }
        // Trajectories that still need the step j -> j + 1.
        let s_lo = if j + 1 > window {
            (j + 1 - window).div_ceil(g)
        } else {
            0
        };
        let s_hi = (j / g).min(n_t0 - 1);
        if s_lo > s_hi {
            continue;
        }
        let h = fp.hamiltonian_at((j as f64 + 0.5) * dt);
        check_square_hermitian(&h, d)?;
        let (w, vv) = linalg::eigh(&h.view())?;
        let phases: Vec<Complex64> = w
            .iter()
            .map(|&lam| Complex64::from_polar(1.0, -lam * dt))
            .collect();
        for x in xs.iter_mut().take(s_hi + 1).skip(s_lo) {
            let mut c = linalg::adj_matvec(&vv.view(), &x.view())?;
            for (cv, ph) in c.iter_mut().zip(&phases) {
                *cv *= ph;
            }
            *x = linalg::matvec(&vv.view(), &c.view())?;
        }
    }

    let per_t0: Vec<f64> = samples
        .iter()
        .map(|vals| 2.0 * simpson_samples(vals, ds))
        .collect();
    let averaged = per_t0.iter().sum::<f64>() / n_t0 as f64;

    let mu = zero_mode_measure(fp, k)?;
    let n_quad = (4 * nyquist_intervals(horizon_eff, mu.spectral_radius())).max(64);
    let quasi_energy = sojourn_truncated(&mu, horizon_eff, n_quad)?;
    let allowed = averaged * (1.0 + jensen_rtol);
    if quasi_energy.value > allowed {
        return Err(Error::EigenVerification {
            check: "convexity direction: quasi-energy sojourn must not exceed the \
                    initial-time average",
            residual: quasi_energy.value - averaged,
            tolerance: jensen_rtol * averaged,
        });
    }
    let jensen_margin = allowed - quasi_energy.value;
    Ok(AveragedSojourn {
        horizon: horizon_eff,
        n_t0,
        sample_dt: ds,
        per_t0,
        averaged,
        quasi_energy,
        jensen_margin,
    })
}

/// One mode's resolvent expectation in the driven golden-rule sum.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModeTerm {
    pub mode: i64,
    /// `<vhat(-n) psi, R(E0 + n omega + i eta) vhat(-n) psi>` without the
    /// `kappa^2` factor; reduced resolvent at `n = 0`, full otherwise.
    pub form: Complex64,
}

/// Driven golden-rule width and the matching second-order level position.
#[derive(Debug, Clone, Serialize)]
pub struct FloquetFgr {
    pub eta: f64,
    /// `kappa^2 sum_n Im<form_n>`, non-negative.
    pub gamma: f64,
    /// `E0 + kappa <psi, vhat(0) psi> - kappa^2 sum_n Re<form_n>`.
    pub lambda2: f64,
    pub terms: Vec<ModeTerm>,
}

/// Mode-resolved golden-rule width of the driven level: the imaginary part
/// of second-order perturbation theory on the quasi-energy operator,
/// evaluated without ever building it.
///
/// Mode `n` contributes the resolvent expectation of `vhat(-n) psi` at
/// `E0 + n omega + i eta`; the `n = 0` term uses the resolvent reduced to
/// the complement of `psi` (the stationary level must not see itself), all
/// other terms the full resolvent of `H0`. The non-resonance guard runs
/// first. The regularization `eta` is the caller's choice; drive the
/// small-`eta` limit by extrapolation as in the static case.
pub fn floquet_fgr(fp: &FloquetProblem, eta: f64) -> Result<FloquetFgr> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::NonPositive {
            name: "eta",
            value: eta,
        });
    }
    check_nonresonance(fp)?;
    let m_max = fp.max_harmonic() as i64;
    let mut terms = Vec::with_capacity(2 * fp.max_harmonic() + 1);
    let mut im_sum = 0.0;
    let mut re_sum = 0.0;
    for n in -m_max..=m_max {
        let u = fp.deflected_vector(n)?;
        let z = Complex64::new(fp.e0 + n as f64 * fp.omega, eta);
        let form = if n == 0 {
            match &fp.reduced {
                Some(r) => r.expectation(&u, z)?,
                // Dimension one: the complement of psi is empty.
                None => Complex64::new(0.0, 0.0),
            }
        } else {
            fp.h0.resolvent_quadratic_form(&u, z)?
        };
        im_sum += form.im;
        re_sum += form.re;
        terms.push(ModeTerm { mode: n, form });
    }
    let k2 = fp.kappa * fp.kappa;
    let v0_psi = linalg::matvec(&fp.harmonics[0].view(), &fp.psi.vec().view())?;
    let mean0 = linalg::dot(&fp.psi.vec().view(), &v0_psi.view()).re;
    Ok(FloquetFgr {
        eta,
        gamma: k2 * im_sum,
        lambda2: fp.e0 + fp.kappa * mean0 - k2 * re_sum,
        terms,
    })
}
