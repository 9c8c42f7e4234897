use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by the spectral, width, sojourn and driving machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: {left} vs {right}")]
    DimensionMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    #[error("matrix is not Hermitian: max asymmetry {deviation:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("eigendecomposition failed verification: {check} residual {residual:.3e} exceeds {tolerance:.3e}")]
    EigenVerification {
        check: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("LAPACK {routine} returned info = {info}")]
    Lapack { routine: &'static str, info: i32 },

    #[error("cannot normalize a (near-)zero vector, norm = {norm:.3e}")]
    ZeroVector { norm: f64 },

    #[error("spectral parameter z = {z} must have a nonzero imaginary part")]
    RealSpectralParameter { z: Complex64 },

    #[error("z = {z} is within {distance:.3e} of the reduced operator's spectrum")]
    SingularReducedResolvent { z: Complex64, distance: f64 },

    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature under-resolved: {given} nodes given, Nyquist guard requires at least {required}")]
    QuadratureUnderResolved { given: usize, required: usize },

    #[error(
        "state {psi_info} is not an eigenvector: residual {residual:.3e} exceeds {tolerance:.3e}"
    )]
    NotAnEigenpair {
        psi_info: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error(
        "admissible eta window is empty (floor {floor:.3e} >= ceiling {ceiling:.3e}); \
         refine the continuum discretization"
    )]
    EtaWindowEmpty { floor: f64, ceiling: f64 },

    #[error("eta = {eta:.3e} lies outside the admissible window [{floor:.3e}, {ceiling:.3e}]")]
    EtaOutsideWindow { eta: f64, floor: f64, ceiling: f64 },

    #[error(
        "non-resonance condition violated: eigenvalue {eigenvalue} matches E0 + {mode}*omega \
         = {target} within {tolerance:.1e}"
    )]
    NonResonant {
        eigenvalue: f64,
        mode: i64,
        target: f64,
        tolerance: f64,
    },

    #[error("failure at kappa = {kappa}: {source}")]
    AtKappa { kappa: f64, source: Box<Error> },

    #[error("resonance width {delta_e:.3e} at kappa = {kappa} exceeds half the band margin {margin:.3e}")]
    WidthBeyondGap {
        kappa: f64,
        delta_e: f64,
        margin: f64,
    },

    #[error("wave packet leaks {leakage:.3e} of its mass into the grid boundary region (limit {limit:.1e})")]
    BoundaryContamination { leakage: f64, limit: f64 },

    #[error(
        "drive displacement {displacement:.3e} exceeds the interpolation safety margin of \
         {limit:.3e} ({max_cells} grid spacings)"
    )]
    DisplacementTooLarge {
        displacement: f64,
        limit: f64,
        max_cells: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
