//! Model zoo with analytic oracles: the Lorentzian measure and its closed
//! forms, a Wigner-Weisskopf quasi-continuum, a tight-binding chain with a
//! defect site, and the 3-point discretization of `-1/2 d^2/dx^2 + W` on a
//! 1D grid.
//!
//! Everything here is a constructor for the core types; the analytic
//! expressions double as oracles for the solver modules.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturbation::PerturbedFamily;
use crate::sojourn::exponential_tail_bound;
use crate::spectral::{HermitianOperator, SpectralMeasure, State};
use crate::width::{solve_width, WidthResult};

/// Smallest admissible ratio `cutoff / gamma` for the Lorentzian
/// discretization; below this the clamped tail mass visibly distorts the
/// width.
const MIN_CUTOFF_HALF_WIDTHS: f64 = 10.0;

/// Minimum level count for a credible quasi-continuum.
const QUASI_CONTINUUM_LEVELS: usize = 200;

/// Minimum chain length for the tight-binding model; shorter chains do not
/// separate the defect resonance from finite-size recurrences.
const MIN_CHAIN_SITES: usize = 200;

/// Lorentzian spectral measure `d mu = (1/pi) Gamma / ((E - E_r)^2 + Gamma^2) dE`,
/// the exactly solvable resonance profile.
///
/// Its width function, energy width, survival amplitude, and sojourn time all
/// have closed forms, making it the primary oracle for the solver stack:
///
/// ```
/// use sojourn_lab::models::LorentzianModel;
///
/// let model = LorentzianModel::new(0.0, 0.5)?;
/// // At lambda = E_r the width equals Gamma; detuned it grows in quadrature.
/// assert_eq!(model.energy_width(0.0), 0.5);
/// assert_eq!(model.energy_width(0.5), 0.5f64.hypot(0.5));
/// assert_eq!(model.sojourn_time(), 2.0);
/// # Ok::<(), sojourn_lab::Error>(())
/// ```
#[derive(Debug, Clone, Copy)]
pub struct LorentzianModel {
    e_r: f64,
    gamma: f64,
}

impl LorentzianModel {
    /// New model with resonance center `e_r` and half-width `gamma > 0`.
    pub fn new(e_r: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::NonPositive {
                name: "gamma",
                value: gamma,
            });
        }
        if !e_r.is_finite() {
            return Err(Error::InvalidArgument(
                "LorentzianModel: e_r must be finite".into(),
            ));
        }
        Ok(Self { e_r, gamma })
    }

    /// Resonance center `E_r`.
    pub fn center(&self) -> f64 {
        self.e_r
    }

    /// Half-width `Gamma`.
    pub fn half_width(&self) -> f64 {
        self.gamma
    }

    /// Closed-form width function `2 eps (eps + Gamma) / ((lambda - E_r)^2 + (eps + Gamma)^2)`.
    pub fn width_function(&self, lambda: f64, eps: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(Error::NonPositive {
                name: "eps",
                value: eps,
            });
        }
        let d = lambda - self.e_r;
        let s = eps + self.gamma;
        Ok(2.0 * eps * s / (d * d + s * s))
    }

    /// Closed-form energy width `sqrt(Gamma^2 + (lambda - E_r)^2)`.
    pub fn energy_width(&self, lambda: f64) -> f64 {
        self.gamma.hypot(lambda - self.e_r)
    }

    /// Energy width obtained by running the generic solver on the closed-form
    /// width function, for cross-checking the solver against
    /// [`energy_width`](Self::energy_width).
    ///
    /// The measure is absolutely continuous, so no atom sits at `lambda` and
    /// the zero-width branch never triggers.
    pub fn solved_width(&self, lambda: f64, tol: f64) -> Result<WidthResult> {
        solve_width(lambda, 0.0, tol, |eps| {
            let d = lambda - self.e_r;
            let s = eps + self.gamma;
            2.0 * eps * s / (d * d + s * s)
        })
    }

    /// Survival amplitude `exp(-i E_r t - Gamma |t|)`.
    pub fn amplitude(&self, t: f64) -> Complex64 {
        let (sin, cos) = (self.e_r * t).sin_cos();
        Complex64::new(cos, -sin) * (-self.gamma * t.abs()).exp()
    }

    /// Exact sojourn time `1 / Gamma`.
    pub fn sojourn_time(&self) -> f64 {
        self.gamma.recip()
    }

    /// Bound on the sojourn mass beyond `horizon`, from
    /// `|a(t)| = exp(-Gamma |t|)`.
    pub fn tail_bound(&self, horizon: f64) -> Result<f64> {
        exponential_tail_bound(1.0, self.gamma, horizon)
    }

    /// Quantile discretization: `n` equal-weight atoms at the midpoints
    /// `q_i = (i + 1/2)/n` of the Lorentzian quantile function, with atoms
    /// beyond `E_r +- cutoff` collapsed onto the window edge.
    ///
    /// Clamping rather than discarding the tail keeps the total weight at one
    /// without inflating the interior density; a discarded-and-renormalized
    /// tail would bias the width by `~ 4 Gamma^2 / (pi cutoff)`, which
    /// dominates the quadrature error already at moderate cutoffs.
    pub fn discretize(&self, n: usize, cutoff: f64) -> Result<SpectralMeasure> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!(
                "LorentzianModel::discretize: need at least 3 atoms, got {n}"
            )));
        }
        if !(cutoff >= MIN_CUTOFF_HALF_WIDTHS * self.gamma) {
            return Err(Error::InvalidArgument(format!(
                "LorentzianModel::discretize: cutoff {cutoff:.3e} is below \
                 {MIN_CUTOFF_HALF_WIDTHS} half-widths ({:.3e})",
                MIN_CUTOFF_HALF_WIDTHS * self.gamma
            )));
        }
        let weight = (n as f64).recip();
        let points = (0..n)
            .map(|i| {
                let q = (i as f64 + 0.5) / n as f64;
                let x = self.gamma * (std::f64::consts::PI * (q - 0.5)).tan();
                (self.e_r + x.clamp(-cutoff, cutoff), weight)
            })
            .collect();
        // Clamped edge atoms coincide exactly and collapse into single
        // boundary atoms during the merge pass.
        SpectralMeasure::from_points(points)
    }
}

/// Specification of a Wigner-Weisskopf model: one bound level at `e0` coupled
/// to an equispaced quasi-continuum spanning `band`, with a real form factor
/// `g(E)` shaping the coupling.
pub struct WignerWeisskopfSpec {
    /// Energy of the bound level; must lie strictly inside `band`.
    pub e0: f64,
    /// Band `[a, b]` hosting the quasi-continuum.
    pub band: (f64, f64),
    /// Number of band levels; at least 200 for quasi-continuum status.
    pub n_levels: usize,
    /// Form factor `g(E)` evaluated on the band grid.
    pub coupling: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for WignerWeisskopfSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WignerWeisskopfSpec")
            .field("e0", &self.e0)
            .field("band", &self.band)
            .field("n_levels", &self.n_levels)
            .field("coupling", &"..")
            .finish()
    }
}

impl WignerWeisskopfSpec {
    /// Spec with a constant form factor `g`.
    pub fn flat(e0: f64, band: (f64, f64), n_levels: usize, g: f64) -> Self {
        Self {
            e0,
            band,
            n_levels,
            coupling: Box::new(move |_| g),
        }
    }
}

/// Builds the Wigner-Weisskopf family: `H0 = diag(e0; band levels)` on a
/// midpoint grid, perturbation `V = |psi><v| + |v><psi|` with
/// `v_m = g(E_m) sqrt(spacing / band width)`.
///
/// The per-level weight `spacing / (b - a) = 1/n` normalizes the coupling so
/// the Fermi-Golden-Rule coefficient converges to
/// `pi g(e0)^2 / (b - a)`, independent of the level count:
///
/// ```
/// use sojourn_lab::models::{wigner_weisskopf, WignerWeisskopfSpec};
/// use sojourn_lab::perturbation::fgr_width;
///
/// let family = wigner_weisskopf(WignerWeisskopfSpec::flat(0.0, (-2.0, 2.0), 400, 1.0))?;
/// let gamma = fgr_width(&family, 1.0, 0.05)?.gamma_fgr;
/// let predicted = std::f64::consts::PI / 4.0;
/// assert!((gamma - predicted).abs() < 0.05 * predicted);
/// # Ok::<(), sojourn_lab::Error>(())
/// ```
pub fn wigner_weisskopf(spec: WignerWeisskopfSpec) -> Result<PerturbedFamily> {
    let (a, b) = spec.band;
    if !(a < spec.e0 && spec.e0 < b) {
        return Err(Error::InvalidArgument(format!(
            "wigner_weisskopf: e0 = {} outside the open band ({a}, {b})",
            spec.e0
        )));
    }
    if spec.n_levels < QUASI_CONTINUUM_LEVELS {
        return Err(Error::InvalidArgument(format!(
            "wigner_weisskopf: {} levels cannot stand in for a continuum; need >= {}",
            spec.n_levels, QUASI_CONTINUUM_LEVELS
        )));
    }
    let n = spec.n_levels;
    let spacing = (b - a) / n as f64;
    let dim = n + 1;

    let mut diag = vec![0.0; dim];
    diag[0] = spec.e0;
    for m in 0..n {
        diag[m + 1] = a + (m as f64 + 0.5) * spacing;
    }
    let h0 = HermitianOperator::diagonal(&diag)?;

    let amplitude = (n as f64).recip().sqrt();
    let mut v = Array2::<Complex64>::zeros((dim, dim));
    for m in 0..n {
        let coupling = Complex64::new((spec.coupling)(diag[m + 1]) * amplitude, 0.0);
        v[[0, m + 1]] = coupling;
        v[[m + 1, 0]] = coupling;
    }

    PerturbedFamily::linear(h0, v, State::basis(dim, 0)?)
}

/// Boundary condition of a [`Grid1D`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Wavefunction pinned to zero just outside both ends.
    Dirichlet,
    /// Wrap-around: site `len - 1` couples back to site `0`.
    Periodic,
}

/// Uniform 1D grid `x_j = start + j * step`, `j = 0 .. len`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Grid1D {
    /// Leftmost grid point.
    pub start: f64,
    /// Grid spacing; positive.
    pub step: f64,
    /// Number of grid points.
    pub len: usize,
    /// Boundary condition for differential operators on the grid.
    pub boundary: Boundary,
}

impl Grid1D {
    /// Grid point `x_j`.
    pub fn point(&self, j: usize) -> f64 {
        self.start + j as f64 * self.step
    }

    /// All grid points.
    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|j| self.point(j)).collect()
    }

    /// Length of the periodic box `len * step` (the wrap distance).
    pub fn span(&self) -> f64 {
        self.len as f64 * self.step
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::NonPositive {
                name: "grid step",
                value: self.step,
            });
        }
        if self.len < 3 {
            return Err(Error::InvalidArgument(format!(
                "Grid1D: need at least 3 points, got {}",
                self.len
            )));
        }
        Ok(())
    }
}

/// Dense matrix behind [`schrodinger_1d`], without the spectral
/// decomposition. Exposed crate-wide so time-dependent scenarios can rebuild
/// the Hamiltonian per step with the identical stencil.
pub(crate) fn schrodinger_matrix(grid: &Grid1D, w: &[f64]) -> Result<Array2<f64>> {
    grid.validate()?;
    if w.len() != grid.len {
        return Err(Error::DimensionMismatch {
            context: "schrodinger_1d potential values vs grid points",
            left: w.len(),
            right: grid.len,
        });
    }
    let n = grid.len;
    let inv_h2 = grid.step.powi(-2);
    let mut h = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        h[[j, j]] = inv_h2 + w[j];
        if j + 1 < n {
            h[[j, j + 1]] = -0.5 * inv_h2;
            h[[j + 1, j]] = -0.5 * inv_h2;
        }
    }
    if grid.boundary == Boundary::Periodic {
        h[[0, n - 1]] += -0.5 * inv_h2;
        h[[n - 1, 0]] += -0.5 * inv_h2;
    }
    Ok(h)
}

/// Discretized `-1/2 d^2/dx^2 + W` with the 3-point Laplacian stencil:
/// diagonal `1/h^2 + W(x_j)`, off-diagonal `-1/(2 h^2)`, wrapped corners for
/// periodic boundaries.
pub fn schrodinger_1d(grid: &Grid1D, w: &[f64]) -> Result<HermitianOperator> {
    HermitianOperator::from_real(schrodinger_matrix(grid, w)?)
}

/// Tight-binding chain of `l` sites with hopping `t` and one defect site of
/// on-site energy `defect_energy` at the center, Dirichlet ends.
///
/// Returns the chain operator and the defect-site basis state. With
/// `defect_energy = 0` the spectrum is the free-chain dispersion
/// `2 t cos(pi k / (l + 1))`.
pub fn tight_binding_defect(
    l: usize,
    hopping: f64,
    defect_energy: f64,
) -> Result<(HermitianOperator, State)> {
    if l < MIN_CHAIN_SITES {
        return Err(Error::InvalidArgument(format!(
            "tight_binding_defect: {l} sites cannot host a defect resonance; need >= {MIN_CHAIN_SITES}"
        )));
    }
    if hopping == 0.0 {
        return Err(Error::NonPositive {
            name: "hopping",
            value: hopping,
        });
    }
    let mut h = Array2::<f64>::zeros((l, l));
    for j in 0..l - 1 {
        h[[j, j + 1]] = hopping;
        h[[j + 1, j]] = hopping;
    }
    let site = l / 2;
    h[[site, site]] = defect_energy;
    Ok((HermitianOperator::from_real(h)?, State::basis(l, site)?))
}
