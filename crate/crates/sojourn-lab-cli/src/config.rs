//! TOML configuration schema, version 1.
//!
//! Every scenario reads its own top-level layout; unknown keys are rejected
//! so typos surface as parse errors with the offending field named. The
//! `validate` methods enforce the physical constraints (positivity, list
//! lengths) that the type system cannot, and phrase violations as
//! `section.field: reason` so the exit-2 diagnostics point at the config.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;

pub const SCHEMA_VERSION: u32 = 1;

fn check_schema_version(v: u32) -> Result<(), String> {
    if v == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(format!(
            "schema_version: unsupported value {v}; this binary reads version {SCHEMA_VERSION}"
        ))
    }
}

fn require_finite(field: &str, value: f64) -> Result<(), String> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(format!("{field}: must be finite (got {value})"))
    }
}

fn require_positive(field: &str, value: f64) -> Result<(), String> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(format!("{field}: must be positive and finite (got {value})"))
    }
}

fn require_nonnegative(field: &str, value: f64) -> Result<(), String> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(format!("{field}: must be non-negative and finite (got {value})"))
    }
}

fn require_band(field: &str, band: [f64; 2]) -> Result<(), String> {
    if band[0].is_finite() && band[1].is_finite() && band[0] < band[1] {
        Ok(())
    } else {
        Err(format!(
            "{field}: must be a finite interval [lo, hi] with lo < hi (got [{}, {}])",
            band[0], band[1]
        ))
    }
}

pub fn parse<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

fn d_width_tol() -> f64 {
    1e-10
}
fn d_cutoff_widths() -> f64 {
    100.0
}
fn d_nyquist_margin() -> usize {
    4
}
fn d_bound_rtol() -> f64 {
    0.02
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Also write the CSV tables next to the JSON report.
    #[serde(default)]
    pub emit_tables: bool,
    /// Output directory; overridden by `--out`.
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LorentzianSection {
    /// Resonance position.
    pub e_r: f64,
    /// Half width at half maximum; the sojourn time is its reciprocal.
    pub gamma: f64,
}

impl LorentzianSection {
    fn validate(&self) -> Result<(), String> {
        require_finite("model.e_r", self.e_r)?;
        require_positive("model.gamma", self.gamma)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WidthConfig {
    pub schema_version: u32,
    pub model: LorentzianSection,
    #[serde(default)]
    pub solver: WidthSolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WidthSolverSection {
    /// Reference energy; defaults to the resonance position.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Bisection tolerance on the width.
    #[serde(default = "d_width_tol")]
    pub tol: f64,
    /// When set, additionally solve on an `n`-atom discretization.
    #[serde(default)]
    pub n_levels: Option<usize>,
    /// Half support of the discretization, in units of `gamma`.
    #[serde(default = "d_cutoff_widths")]
    pub cutoff_widths: f64,
    /// Gate on |solved - closed form| relative to `gamma`.
    #[serde(default = "d_width_gate")]
    pub width_rtol: f64,
    /// Same gate for the discretized width.
    #[serde(default = "d_discrete_gate")]
    pub discrete_rtol: f64,
}

fn d_width_gate() -> f64 {
    1e-8
}
fn d_discrete_gate() -> f64 {
    1e-3
}

impl Default for WidthSolverSection {
    fn default() -> Self {
        Self {
            lambda: None,
            tol: d_width_tol(),
            n_levels: None,
            cutoff_widths: d_cutoff_widths(),
            width_rtol: d_width_gate(),
            discrete_rtol: d_discrete_gate(),
        }
    }
}

impl WidthConfig {
    pub fn validate(&self) -> Result<(), String> {
        check_schema_version(self.schema_version)?;
        self.model.validate()?;
        if let Some(lambda) = self.solver.lambda {
            require_finite("solver.lambda", lambda)?;
        }
        require_positive("solver.tol", self.solver.tol)?;
        if let Some(n) = self.solver.n_levels {
            if n < 3 {
                return Err(format!("solver.n_levels: need at least 3 atoms (got {n})"));
            }
        }
        if self.solver.cutoff_widths < 10.0 {
            return Err(format!(
                "solver.cutoff_widths: need at least 10 widths of support (got {})",
                self.solver.cutoff_widths
            ));
        }
        require_positive("solver.width_rtol", self.solver.width_rtol)?;
        require_positive("solver.discrete_rtol", self.solver.discrete_rtol)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SojournConfig {
    pub schema_version: u32,
    pub model: LorentzianSection,
    #[serde(default)]
    pub solver: SojournSolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SojournSolverSection {
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "d_sojourn_levels")]
    pub n_levels: usize,
    #[serde(default = "d_cutoff_widths")]
    pub cutoff_widths: f64,
    /// Integration horizon; defaults to three sojourn times.
    #[serde(default)]
    pub horizon: Option<f64>,
    /// Simpson intervals per Nyquist floor.
    #[serde(default = "d_nyquist_margin")]
    pub nyquist_margin: usize,
    #[serde(default = "d_width_tol")]
    pub width_tol: f64,
    /// Slack on `sojourn >= (1 - rtol) / delta_e`.
    #[serde(default = "d_bound_rtol")]
    pub bound_rtol: f64,
}

fn d_sojourn_levels() -> usize {
    2001
}

impl Default for SojournSolverSection {
    fn default() -> Self {
        Self {
            lambda: None,
            n_levels: d_sojourn_levels(),
            cutoff_widths: d_cutoff_widths(),
            horizon: None,
            nyquist_margin: d_nyquist_margin(),
            width_tol: d_width_tol(),
            bound_rtol: d_bound_rtol(),
        }
    }
}

impl SojournConfig {
    pub fn validate(&self) -> Result<(), String> {
        check_schema_version(self.schema_version)?;
        self.model.validate()?;
        if let Some(lambda) = self.solver.lambda {
            require_finite("solver.lambda", lambda)?;
        }
        if self.solver.n_levels < 3 {
            return Err(format!(
                "solver.n_levels: need at least 3 atoms (got {})",
                self.solver.n_levels
            ));
        }
        if self.solver.cutoff_widths < 10.0 {
            return Err(format!(
                "solver.cutoff_widths: need at least 10 widths of support (got {})",
                self.solver.cutoff_widths
            ));
        }
        if let Some(h) = self.solver.horizon {
            require_positive("solver.horizon", h)?;
        }
        if self.solver.nyquist_margin == 0 {
            return Err("solver.nyquist_margin: must be at least 1".into());
        }
        require_positive("solver.width_tol", self.solver.width_tol)?;
        require_nonnegative("solver.bound_rtol", self.solver.bound_rtol)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FgrSweepConfig {
    pub schema_version: u32,
    pub model: FlatBandSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FlatBandSection {
    /// Embedded level, strictly inside the band.
    pub e0: f64,
    pub band: [f64; 2],
    pub n_levels: usize,
    /// Flat coupling amplitude; each matrix element is `g / sqrt(n_levels)`.
    pub g: f64,
}

impl FlatBandSection {
    fn validate(&self) -> Result<(), String> {
        require_finite("model.e0", self.e0)?;
        require_band("model.band", self.band)?;
        if !(self.band[0] < self.e0 && self.e0 < self.band[1]) {
            return Err(format!(
                "model.e0: must lie strictly inside the band (got {} outside [{}, {}])",
                self.e0, self.band[0], self.band[1]
            ));
        }
        if self.n_levels < 200 {
            return Err(format!(
                "model.n_levels: a quasi-continuum needs at least 200 levels (got {})",
                self.n_levels
            ));
        }
        require_finite("model.g", self.g)
    }

    pub fn spacing(&self) -> f64 {
        (self.band[1] - self.band[0]) / self.n_levels as f64
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Coupling strengths; empty is allowed and yields header-only tables.
    #[serde(default = "d_kappas")]
    pub kappas: Vec<f64>,
    /// Regularization; defaults to the geometric mean of the admissible
    /// window.
    #[serde(default)]
    pub eta: Option<f64>,
    /// Broadening grid for the zero-eta extrapolation; defaults to
    /// `{4, 6, .., 16} * spacing`.
    #[serde(default)]
    pub etas: Option<Vec<f64>>,
    #[serde(default = "d_width_tol")]
    pub width_tol: f64,
    /// Sojourn horizon as a fraction of the Heisenberg time.
    #[serde(default = "d_horizon_fraction")]
    pub horizon_fraction: f64,
    #[serde(default = "d_nyquist_margin")]
    pub nyquist_margin: usize,
    /// Gate on |fitted exponent - 2|.
    #[serde(default = "d_slope_tol")]
    pub slope_tol: f64,
    #[serde(default = "d_bound_rtol")]
    pub bound_rtol: f64,
    /// Gate on the width against the extrapolated rate, relative.
    #[serde(default = "d_extrap_rtol")]
    pub extrap_rtol: f64,
}

fn d_kappas() -> Vec<f64> {
    vec![0.02, 0.04, 0.08, 0.16]
}
fn d_horizon_fraction() -> f64 {
    0.4
}
fn d_slope_tol() -> f64 {
    0.05
}
fn d_extrap_rtol() -> f64 {
    0.10
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            kappas: d_kappas(),
            eta: None,
            etas: None,
            width_tol: d_width_tol(),
            horizon_fraction: d_horizon_fraction(),
            nyquist_margin: d_nyquist_margin(),
            slope_tol: d_slope_tol(),
            bound_rtol: d_bound_rtol(),
            extrap_rtol: d_extrap_rtol(),
        }
    }
}

impl FgrSweepConfig {
    pub fn validate(&self) -> Result<(), String> {
        check_schema_version(self.schema_version)?;
        self.model.validate()?;
        let s = &self.sweep;
        if s.kappas.len() == 1 {
            return Err(
                "sweep.kappas: a scaling fit needs either no couplings (empty sweep) or at \
                 least two"
                    .into(),
            );
        }
        for (i, &k) in s.kappas.iter().enumerate() {
            require_positive(&format!("sweep.kappas[{i}]"), k)?;
        }
        if let Some(eta) = s.eta {
            require_positive("sweep.eta", eta)?;
        }
        if let Some(etas) = &s.etas {
            if etas.len() < 2 {
                return Err(format!(
                    "sweep.etas: the extrapolation needs at least two samples (got {})",
                    etas.len()
                ));
            }
            for (i, &eta) in etas.iter().enumerate() {
                require_positive(&format!("sweep.etas[{i}]"), eta)?;
            }
        }
        require_positive("sweep.width_tol", s.width_tol)?;
        require_positive("sweep.horizon_fraction", s.horizon_fraction)?;
        if s.nyquist_margin == 0 {
            return Err("sweep.nyquist_margin: must be at least 1".into());
        }
        require_positive("sweep.slope_tol", s.slope_tol)?;
        require_nonnegative("sweep.bound_rtol", s.bound_rtol)?;
        require_positive("sweep.extrap_rtol", s.extrap_rtol)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloquetConfig {
    pub schema_version: u32,
    pub model: DrivenModelSection,
    #[serde(default)]
    pub solver: FloquetSolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Driven two-level-plus-continuum model: a ground level, an excited level,
/// and a flat quasi-continuum band, all coupled through a single drive
/// harmonic.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DrivenModelSection {
    pub ground: f64,
    pub excited: f64,
    pub band: [f64; 2],
    pub n_band: usize,
    /// Drive element between the two discrete levels.
    pub rabi: f64,
    /// Drive amplitude from the ground level into the band; elements are
    /// `band_amp / sqrt(n_band)`.
    pub band_amp: f64,
    /// Same for the excited level; defaults to zero.
    #[serde(default)]
    pub excited_band_amp: f64,
    pub omega: f64,
    pub kappa: f64,
    /// Mode truncation of the quasi-energy operator.
    pub n_modes: usize,
}

impl DrivenModelSection {
    fn validate(&self) -> Result<(), String> {
        require_finite("model.ground", self.ground)?;
        require_finite("model.excited", self.excited)?;
        require_band("model.band", self.band)?;
        if self.n_band < 3 {
            return Err(format!(
                "model.n_band: need at least 3 band levels (got {})",
                self.n_band
            ));
        }
        require_finite("model.rabi", self.rabi)?;
        require_finite("model.band_amp", self.band_amp)?;
        require_finite("model.excited_band_amp", self.excited_band_amp)?;
        require_positive("model.omega", self.omega)?;
        require_positive("model.kappa", self.kappa)?;
        if self.n_modes == 0 {
            return Err("model.n_modes: must be at least 1".into());
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        (self.band[1] - self.band[0]) / self.n_band as f64
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloquetSolverSection {
    /// Golden-rule regularization; defaults to four band spacings.
    #[serde(default)]
    pub eta: Option<f64>,
    /// Averaged-sojourn horizon; defaults to 0.3 Heisenberg times.
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default = "d_n_t0")]
    pub n_t0: usize,
    #[serde(default = "d_steps_per_period")]
    pub steps_per_period: usize,
    #[serde(default = "d_jensen_rtol")]
    pub jensen_rtol: f64,
    #[serde(default = "d_width_tol_floquet")]
    pub width_tol: f64,
    #[serde(default = "d_howland_gate")]
    pub howland_gate: f64,
    #[serde(default = "d_bound_rtol")]
    pub bound_rtol: f64,
}

fn d_n_t0() -> usize {
    8
}
fn d_steps_per_period() -> usize {
    512
}
fn d_jensen_rtol() -> f64 {
    0.01
}
fn d_width_tol_floquet() -> f64 {
    1e-9
}
fn d_howland_gate() -> f64 {
    1e-4
}

impl Default for FloquetSolverSection {
    fn default() -> Self {
        Self {
            eta: None,
            horizon: None,
            n_t0: d_n_t0(),
            steps_per_period: d_steps_per_period(),
            jensen_rtol: d_jensen_rtol(),
            width_tol: d_width_tol_floquet(),
            howland_gate: d_howland_gate(),
            bound_rtol: d_bound_rtol(),
        }
    }
}

impl FloquetConfig {
    pub fn validate(&self) -> Result<(), String> {
        check_schema_version(self.schema_version)?;
        self.model.validate()?;
        let s = &self.solver;
        if let Some(eta) = s.eta {
            require_positive("solver.eta", eta)?;
        }
        if let Some(h) = s.horizon {
            require_positive("solver.horizon", h)?;
        }
        if s.n_t0 == 0 {
            return Err("solver.n_t0: must be at least 1".into());
        }
        if s.steps_per_period == 0 || s.steps_per_period % s.n_t0 != 0 {
            return Err(format!(
                "solver.steps_per_period: must be a positive multiple of n_t0 = {} (got {})",
                s.n_t0, s.steps_per_period
            ));
        }
        require_positive("solver.jensen_rtol", s.jensen_rtol)?;
        require_positive("solver.width_tol", s.width_tol)?;
        require_positive("solver.howland_gate", s.howland_gate)?;
        require_nonnegative("solver.bound_rtol", s.bound_rtol)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcStarkConfig {
    pub schema_version: u32,
    pub model: AcStarkModelSection,
    #[serde(default)]
    pub solver: AcStarkSolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Left edge of the periodic box.
    pub start: f64,
    /// Box length; the spacing is `span / len`.
    pub span: f64,
    pub len: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    /// One of `gaussian-well`, `harmonic`, `samples`.
    pub kind: String,
    /// Well depth (`gaussian-well`): the potential is `-depth exp(-x^2/w^2)`.
    #[serde(default)]
    pub depth: Option<f64>,
    /// Gaussian length scale `w`.
    #[serde(default)]
    pub width: Option<f64>,
    /// Curvature (`harmonic`): the potential is `strength * x^2`.
    #[serde(default)]
    pub strength: Option<f64>,
    /// Explicit samples (`samples`), one per grid point.
    #[serde(default)]
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AcStarkModelSection {
    pub grid: GridSection,
    pub potential: PotentialSection,
    /// Drive coefficients `F_1 .. F_n` as `[re, im]` pairs; the mean `F_0`
    /// is zero by construction.
    pub drive: Vec<[f64; 2]>,
    pub omega: f64,
    pub kappa: f64,
    /// Mode truncation override; the library picks a safe default.
    #[serde(default)]
    pub n_modes: Option<usize>,
}

impl AcStarkModelSection {
    fn validate(&self) -> Result<(), String> {
        require_finite("model.grid.start", self.grid.start)?;
        require_positive("model.grid.span", self.grid.span)?;
        if self.grid.len < 8 {
            return Err(format!(
                "model.grid.len: need at least 8 points (got {})",
                self.grid.len
            ));
        }
        let p = &self.potential;
        let forbid = |field: &str, present: bool| -> Result<(), String> {
            if present {
                Err(format!(
                    "model.potential.{field}: not a parameter of kind = \"{}\"",
                    p.kind
                ))
            } else {
                Ok(())
            }
        };
        match p.kind.as_str() {
            "gaussian-well" => {
                let depth = p.depth.ok_or("model.potential.depth: required for kind = \"gaussian-well\"")?;
                let width = p.width.ok_or("model.potential.width: required for kind = \"gaussian-well\"")?;
                require_positive("model.potential.depth", depth)?;
                require_positive("model.potential.width", width)?;
                forbid("strength", p.strength.is_some())?;
                forbid("values", p.values.is_some())?;
            }
            "harmonic" => {
                let k = p.strength.ok_or("model.potential.strength: required for kind = \"harmonic\"")?;
                require_positive("model.potential.strength", k)?;
                forbid("depth", p.depth.is_some())?;
                forbid("width", p.width.is_some())?;
                forbid("values", p.values.is_some())?;
            }
            "samples" => {
                let values = p
                    .values
                    .as_ref()
                    .ok_or("model.potential.values: required for kind = \"samples\"")?;
                if values.len() != self.grid.len {
                    return Err(format!(
                        "model.potential.values: need one sample per grid point ({} != {})",
                        values.len(),
                        self.grid.len
                    ));
                }
                for (i, &v) in values.iter().enumerate() {
                    require_finite(&format!("model.potential.values[{i}]"), v)?;
                }
                forbid("depth", p.depth.is_some())?;
                forbid("width", p.width.is_some())?;
                forbid("strength", p.strength.is_some())?;
            }
            other => {
                return Err(format!(
                    "model.potential.kind: unknown kind \"{other}\" (expected gaussian-well, \
                     harmonic or samples)"
                ));
            }
        }
        if self.drive.is_empty() {
            return Err("model.drive: need at least one harmonic coefficient".into());
        }
        for (i, f) in self.drive.iter().enumerate() {
            require_finite(&format!("model.drive[{i}][0]"), f[0])?;
            require_finite(&format!("model.drive[{i}][1]"), f[1])?;
        }
        require_positive("model.omega", self.omega)?;
        require_nonnegative("model.kappa", self.kappa)?;
        if self.n_modes == Some(0) {
            return Err("model.n_modes: must be at least 1 when given".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcStarkSolverSection {
    #[serde(default = "d_stark_eta")]
    pub eta: f64,
    /// Gauge-check end time in drive periods.
    #[serde(default = "d_gauge_periods")]
    pub gauge_t1_periods: f64,
    #[serde(default = "d_gauge_steps")]
    pub gauge_steps: usize,
    /// Gate on the dressed width against the lifted golden rule, relative.
    #[serde(default = "d_cross_rtol")]
    pub cross_rtol: f64,
    #[serde(default = "d_gauge_gate")]
    pub gauge_gate: f64,
}

fn d_stark_eta() -> f64 {
    0.3
}
fn d_gauge_periods() -> f64 {
    0.25
}
fn d_gauge_steps() -> usize {
    48
}
fn d_cross_rtol() -> f64 {
    0.02
}
fn d_gauge_gate() -> f64 {
    5e-6
}

impl Default for AcStarkSolverSection {
    fn default() -> Self {
        Self {
            eta: d_stark_eta(),
            gauge_t1_periods: d_gauge_periods(),
            gauge_steps: d_gauge_steps(),
            cross_rtol: d_cross_rtol(),
            gauge_gate: d_gauge_gate(),
        }
    }
}

impl AcStarkConfig {
    pub fn validate(&self) -> Result<(), String> {
        check_schema_version(self.schema_version)?;
        self.model.validate()?;
        let s = &self.solver;
        require_positive("solver.eta", s.eta)?;
        require_positive("solver.gauge_t1_periods", s.gauge_t1_periods)?;
        if s.gauge_steps == 0 {
            return Err("solver.gauge_steps: must be at least 1".into());
        }
        require_positive("solver.cross_rtol", s.cross_rtol)?;
        require_positive("solver.gauge_gate", s.gauge_gate)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultistateConfig {
    pub schema_version: u32,
    pub model: MultistateModelSection,
    #[serde(default)]
    pub solver: MultistateSolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MultistateModelSection {
    /// Diagonal of the bound channel.
    pub bound_levels: Vec<f64>,
    pub band: [f64; 2],
    pub n_band: usize,
    /// Row amplitudes of the coupling; `v[i][m] = row_amps[i] / sqrt(n_band)`.
    pub row_amps: Vec<f64>,
    pub kappa: f64,
    /// Index of the prepared bound level.
    #[serde(default)]
    pub bound_index: usize,
}

impl MultistateModelSection {
    fn validate(&self) -> Result<(), String> {
        if self.bound_levels.is_empty() {
            return Err("model.bound_levels: need at least one level".into());
        }
        for (i, &e) in self.bound_levels.iter().enumerate() {
            require_finite(&format!("model.bound_levels[{i}]"), e)?;
        }
        require_band("model.band", self.band)?;
        if self.n_band < 3 {
            return Err(format!(
                "model.n_band: need at least 3 band levels (got {})",
                self.n_band
            ));
        }
        if self.row_amps.len() != self.bound_levels.len() {
            return Err(format!(
                "model.row_amps: need one amplitude per bound level ({} != {})",
                self.row_amps.len(),
                self.bound_levels.len()
            ));
        }
        for (i, &a) in self.row_amps.iter().enumerate() {
            require_finite(&format!("model.row_amps[{i}]"), a)?;
        }
        require_nonnegative("model.kappa", self.kappa)?;
        if self.bound_index >= self.bound_levels.len() {
            return Err(format!(
                "model.bound_index: out of range (got {}, have {} levels)",
                self.bound_index,
                self.bound_levels.len()
            ));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        (self.band[1] - self.band[0]) / self.n_band as f64
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultistateSolverSection {
    /// Sojourn horizon; defaults to 2.5 estimated lifetimes (or 0.3
    /// Heisenberg times at zero coupling).
    #[serde(default)]
    pub horizon: Option<f64>,
    /// Absolute slack on the sojourn bound; defaults to 1% of the horizon.
    #[serde(default)]
    pub bound_tol: Option<f64>,
    /// Gate on the rate identity against the assembled block, relative.
    #[serde(default = "d_identity_gate")]
    pub identity_gate: f64,
}

fn d_identity_gate() -> f64 {
    1e-10
}

impl Default for MultistateSolverSection {
    fn default() -> Self {
        Self {
            horizon: None,
            bound_tol: None,
            identity_gate: d_identity_gate(),
        }
    }
}

impl MultistateConfig {
    pub fn validate(&self) -> Result<(), String> {
        check_schema_version(self.schema_version)?;
        self.model.validate()?;
        if let Some(h) = self.solver.horizon {
            require_positive("solver.horizon", h)?;
        }
        if let Some(t) = self.solver.bound_tol {
            require_nonnegative("solver.bound_tol", t)?;
        }
        require_positive("solver.identity_gate", self.solver.identity_gate)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub suite: SuiteSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSection {
    /// Random Hermitian matrices in the resolvent-identity check.
    #[serde(default = "d_feshbach_matrices")]
    pub feshbach_matrices: usize,
    /// Random instances in the width-residual chain check.
    #[serde(default = "d_chain_instances")]
    pub chain_instances: usize,
    /// Generator seed; overridden by `--seed`.
    #[serde(default = "d_seed")]
    pub seed: u64,
}

fn d_feshbach_matrices() -> usize {
    20
}
fn d_chain_instances() -> usize {
    60
}
fn d_seed() -> u64 {
    41
}

impl Default for SuiteSection {
    fn default() -> Self {
        Self {
            feshbach_matrices: d_feshbach_matrices(),
            chain_instances: d_chain_instances(),
            seed: d_seed(),
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<(), String> {
        check_schema_version(self.schema_version)?;
        if self.suite.feshbach_matrices == 0 {
            return Err("suite.feshbach_matrices: must be at least 1".into());
        }
        if self.suite.chain_instances == 0 {
            return Err("suite.chain_instances: must be at least 1".into());
        }
        Ok(())
    }
}
