//! Sojourn times, energy widths and golden-rule resonance widths for finite
//! Hermitian models.
//!
//! The crate is organized around one chain of quantities. A normalized state
//! `psi` and a Hermitian operator `H` determine a spectral measure; the
//! measure determines the survival amplitude `a(t) = <psi, exp(-iHt) psi>`
//! and the sojourn time `integral |a(t)|^2 dt`; a width function built from
//! the resolvent determines an energy width whose reciprocal bounds the
//! sojourn time from below. The remaining modules quantify how that width
//! scales when an eigenstate is weakly coupled to a quasi-continuum: static
//! couplings ([`perturbation`]), time-periodic drives ([`floquet`]) and
//! multistate channel models ([`multistate`]).

pub mod error;
pub mod floquet;
mod linalg;
pub mod models;
pub mod multistate;
pub mod perturbation;
pub mod sojourn;
pub mod spectral;
pub mod stark;
pub mod width;

pub use error::{Error, Result};
