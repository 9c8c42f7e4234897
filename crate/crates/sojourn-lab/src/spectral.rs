//! Finite Hermitian operators, normalized states, spectral measures and
//! resolvent expectations.
//!
//! Everything downstream consumes the spectral measure of a state: the pairs
//! `(E_k, w_k)` with `w_k = |<v_k, psi>|^2` over the operator's eigenpairs.
//! Construction always runs the eigensolver and verifies the decomposition,
//! so later code can treat eigenvalues and eigenvectors as trustworthy.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;

/// Relative tolerance for the Hermiticity check at construction.
const HERMITICITY_RTOL: f64 = 1e-12;

/// Relative scale for merging near-degenerate eigenvalues into one spectral
/// point.
const DEGENERACY_RTOL: f64 = 1e-9;

/// Above this dimension, eigendecomposition verification switches from a full
/// Frobenius-norm reconstruction to matrix-free probes on random vectors.
const FULL_VERIFY_DIM: usize = 512;

const VERIFY_PROBES: usize = 4;

/// A finite Hermitian operator together with its verified eigendecomposition.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    matrix: Array2<Complex64>,
    eigenvalues: Array1<f64>,
    eigenvectors: Array2<Complex64>,
    scale: f64,
}

impl HermitianOperator {
    /// Builds the operator from a dense matrix, checking Hermiticity,
    /// diagonalizing, and verifying the decomposition.
    pub fn new(matrix: Array2<Complex64>) -> Result<Self> {
        let n = matrix.nrows();
        if n != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                context: "HermitianOperator::new",
                left: n,
                right: matrix.ncols(),
            });
        }
        if n == 0 {
            return Err(Error::InvalidArgument(
                "HermitianOperator::new: empty matrix".into(),
            ));
        }
        let mut max_abs = 0.0f64;
        for z in matrix.iter() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::InvalidArgument(
                    "HermitianOperator::new: non-finite entry".into(),
                ));
            }
            max_abs = max_abs.max(z.norm());
        }
        let herm_tol = HERMITICITY_RTOL * max_abs.max(1.0);
        let mut deviation = 0.0f64;
        for i in 0..n {
            for j in i..n {
                deviation = deviation.max((matrix[[i, j]] - matrix[[j, i]].conj()).norm());
            }
        }
        if deviation > herm_tol {
            return Err(Error::NotHermitian {
                deviation,
                tolerance: herm_tol,
            });
        }

        let (eigenvalues, eigenvectors) = linalg::eigh(&matrix.view())?;
        let spectral_radius = eigenvalues
            .iter()
            .fold(0.0f64, |acc, &x| acc.max(x.abs()));
        let op = Self {
            matrix,
            eigenvalues,
            eigenvectors,
            scale: spectral_radius.max(1.0),
        };
        op.verify_decomposition()?;
        Ok(op)
    }

    /// Builds the operator from a real symmetric matrix.
    pub fn from_real(matrix: Array2<f64>) -> Result<Self> {
        Self::new(matrix.mapv(|x| Complex64::new(x, 0.0)))
    }

    /// Diagonal operator with the given entries. The eigendecomposition is
    /// exact (sorted entries, permuted identity eigenvectors), so no solver
    /// runs.
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument(
                "HermitianOperator::diagonal: empty diagonal".into(),
            ));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "HermitianOperator::diagonal: non-finite entry".into(),
            ));
        }
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let mut matrix = Array2::zeros((n, n));
        let mut eigenvalues = Array1::zeros(n);
        let mut eigenvectors = Array2::zeros((n, n));
        for (rank, &idx) in order.iter().enumerate() {
            matrix[[idx, idx]] = Complex64::new(values[idx], 0.0);
            eigenvalues[rank] = values[idx];
            eigenvectors[[idx, rank]] = Complex64::new(1.0, 0.0);
        }
        let spectral_radius = values.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
        Ok(Self {
            matrix,
            eigenvalues,
            eigenvectors,
            scale: spectral_radius.max(1.0),
        })
    }

    fn verify_decomposition(&self) -> Result<()> {
        let n = self.dim();
        let frob = linalg::frob_norm(&self.matrix.view()).max(1.0);
        let recon_tol = 1e-10 * frob * (n as f64).sqrt();
        let orth_tol = 1e-10 * (n as f64);
        if n <= FULL_VERIFY_DIM {
            let mut scaled = self.eigenvectors.clone();
            for (j, lam) in self.eigenvalues.iter().enumerate() {
                scaled.column_mut(j).mapv_inplace(|z| z * lam);
            }
            let rebuilt = linalg::matmul_adj(&scaled.view(), &self.eigenvectors.view())?;
            let residual = linalg::frob_norm(&(&rebuilt - &self.matrix).view());
            if residual > recon_tol {
                return Err(Error::EigenVerification {
                    check: "reconstruction",
                    residual,
                    tolerance: recon_tol,
                });
            }
            let gram = linalg::adj_matmul(&self.eigenvectors.view(), &self.eigenvectors.view())?;
            let eye = Array2::<Complex64>::eye(n);
            let residual = linalg::frob_norm(&(&gram - &eye).view());
            if residual > orth_tol {
                return Err(Error::EigenVerification {
                    check: "orthonormality",
                    residual,
                    tolerance: orth_tol,
                });
            }
        } else {
            // Matrix-free probes: compare A x against V (diag(w) (V^H x)) and
            // V (V^H x) against x on a few deterministic unit vectors.
            for seed in 0..VERIFY_PROBES as u64 {
                let x = linalg::probe_vector(n, seed);
                let ax = linalg::matvec(&self.matrix.view(), &x.view())?;
                let mut coeffs = linalg::adj_matvec(&self.eigenvectors.view(), &x.view())?;
                let back = linalg::matvec(&self.eigenvectors.view(), &coeffs.view())?;
                let residual = linalg::vec_norm(&(&back - &x).view());
                if residual > orth_tol {
                    return Err(Error::EigenVerification {
                        check: "orthonormality probe",
                        residual,
                        tolerance: orth_tol,
                    });
                }
                for (c, lam) in coeffs.iter_mut().zip(self.eigenvalues.iter()) {
                    *c *= lam;
                }
                let rebuilt = linalg::matvec(&self.eigenvectors.view(), &coeffs.view())?;
                let residual = linalg::vec_norm(&(&rebuilt - &ax).view());
                if residual > recon_tol {
                    return Err(Error::EigenVerification {
                        check: "reconstruction probe",
                        residual,
                        tolerance: recon_tol,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    /// Eigenvectors as columns, ordered like [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &Array2<Complex64> {
        &self.eigenvectors
    }

    /// Largest eigenvalue magnitude.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(0.0f64, |acc, &x| acc.max(x.abs()))
    }

    /// Absolute tolerance below which two eigenvalues count as degenerate.
    pub fn merge_tolerance(&self) -> f64 {
        DEGENERACY_RTOL * self.scale
    }

    /// `H v`.
    pub fn apply(&self, v: &Array1<Complex64>) -> Result<Array1<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "HermitianOperator::apply",
                left: self.dim(),
                right: v.len(),
            });
        }
        linalg::matvec(&self.matrix.view(), &v.view())
    }

    /// `<psi, H psi>`, real by Hermiticity.
    pub fn expectation(&self, psi: &State) -> Result<f64> {
        let hv = self.apply(psi.vec())?;
        Ok(linalg::dot(&psi.vec().view(), &hv.view()).re)
    }

    /// `exp(-i H t) v` through the stored eigenbasis, exactly unitary up to
    /// the accuracy of the decomposition.
    pub fn evolve(&self, v: &Array1<Complex64>, t: f64) -> Result<Array1<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "HermitianOperator::evolve",
                left: self.dim(),
                right: v.len(),
            });
        }
        let mut coeffs = linalg::adj_matvec(&self.eigenvectors.view(), &v.view())?;
        for (c, lam) in coeffs.iter_mut().zip(self.eigenvalues.iter()) {
            *c *= Complex64::new(0.0, -lam * t).exp();
        }
        linalg::matvec(&self.eigenvectors.view(), &coeffs.view())
    }

    /// Full-resolvent quadratic form `<v, (H - z)^{-1} v>` for non-real `z`.
    ///
    /// Unlike [`ReducedSpectrum::expectation`] nothing is projected out: every
    /// eigenvector contributes. `v` need not be normalized.
    pub fn resolvent_quadratic_form(
        &self,
        v: &Array1<Complex64>,
        z: Complex64,
    ) -> Result<Complex64> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "HermitianOperator::resolvent_quadratic_form",
                left: self.dim(),
                right: v.len(),
            });
        }
        if z.im == 0.0 {
            return Err(Error::RealSpectralParameter { z });
        }
        let coeffs = linalg::adj_matvec(&self.eigenvectors.view(), &v.view())?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, lam) in coeffs.iter().zip(self.eigenvalues.iter()) {
            acc += c.norm_sqr() / (Complex64::new(*lam, 0.0) - z);
        }
        Ok(acc)
    }
}

/// A normalized state vector.
#[derive(Debug, Clone)]
pub struct State {
    vec: Array1<Complex64>,
}

impl State {
    /// Normalizes the input; rejects vectors of (near-)zero or non-finite
    /// norm.
    pub fn new(vec: Array1<Complex64>) -> Result<Self> {
        let norm = linalg::vec_norm(&vec.view());
        if !norm.is_finite() || norm < 1e-150 {
            return Err(Error::ZeroVector { norm });
        }
        let vec = vec.mapv(|z| z / norm);
        Ok(Self { vec })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(Array1::from_iter(
            values.iter().map(|&x| Complex64::new(x, 0.0)),
        ))
    }

    /// The standard basis vector `e_index`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "State::basis: index {index} out of range for dimension {dim}"
            )));
        }
        let mut v = Array1::zeros(dim);
        v[index] = Complex64::new(1.0, 0.0);
        Ok(Self { vec: v })
    }

    pub fn dim(&self) -> usize {
        self.vec.len()
    }

    pub fn vec(&self) -> &Array1<Complex64> {
        &self.vec
    }

    /// `<self, other>`.
    pub fn inner(&self, other: &State) -> Complex64 {
        linalg::dot(&self.vec.view(), &other.vec.view())
    }
}

/// One atom of a spectral measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasurePoint {
    pub energy: f64,
    pub weight: f64,
}

/// A discrete probability measure on the real line: the spectral measure of a
/// normalized state. Points are sorted by energy and separated by more than
/// the merge tolerance used at construction.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralMeasure {
    points: Vec<MeasurePoint>,
    merge_tol: f64,
}

/// Total-weight defect allowed for a probability measure.
const WEIGHT_SUM_TOL: f64 = 1e-10;

/// Atoms below this weight are numerical zeros (squared roundoff of an
/// orthogonal overlap) and are dropped after merging.
const WEIGHT_FLOOR: f64 = 1e-20;

impl SpectralMeasure {
    /// Builds a measure from raw `(energy, weight)` pairs: sorts, merges
    /// near-coincident energies (weighted-mean energy, summed weight) and
    /// checks that weights are nonnegative and sum to one.
    pub fn from_points(raw: Vec<(f64, f64)>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidArgument(
                "SpectralMeasure::from_points: empty measure".into(),
            ));
        }
        let mut max_abs_e = 0.0f64;
        for &(e, w) in &raw {
            if !e.is_finite() || !w.is_finite() {
                return Err(Error::InvalidArgument(
                    "SpectralMeasure::from_points: non-finite point".into(),
                ));
            }
            if w < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "SpectralMeasure::from_points: negative weight {w} at energy {e}"
                )));
            }
            max_abs_e = max_abs_e.max(e.abs());
        }
        let merge_tol = DEGENERACY_RTOL * max_abs_e.max(1.0);
        Self::assemble(raw, merge_tol)
    }

    fn assemble(mut raw: Vec<(f64, f64)>, merge_tol: f64) -> Result<Self> {
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut points: Vec<MeasurePoint> = Vec::with_capacity(raw.len());
        // Clusters chain: each point merges when it sits within tolerance of
        // the previous one, so a dense ladder can collapse to one atom.
        let mut cluster_e_sum = raw[0].0 * raw[0].1;
        let mut cluster_w = raw[0].1;
        let mut cluster_last = raw[0].0;
        let mut cluster_first = raw[0].0;
        let flush = |points: &mut Vec<MeasurePoint>,
                     e_sum: f64,
                     w: f64,
                     first: f64,
                     last: f64| {
            let energy = if w > 0.0 { e_sum / w } else { 0.5 * (first + last) };
            points.push(MeasurePoint { energy, weight: w });
        };
        for &(e, w) in raw.iter().skip(1) {
            if e - cluster_last <= merge_tol {
                cluster_e_sum += e * w;
                cluster_w += w;
                cluster_last = e;
            } else {
                flush(
                    &mut points,
                    cluster_e_sum,
                    cluster_w,
                    cluster_first,
                    cluster_last,
                );
                cluster_e_sum = e * w;
                cluster_w = w;
                cluster_first = e;
                cluster_last = e;
            }
        }
        flush(
            &mut points,
            cluster_e_sum,
            cluster_w,
            cluster_first,
            cluster_last,
        );
        points.retain(|p| p.weight > WEIGHT_FLOOR);
        if points.is_empty() {
            return Err(Error::InvalidArgument(
                "SpectralMeasure: all weights are numerically zero".into(),
            ));
        }

        let total: f64 = points.iter().map(|p| p.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidArgument(format!(
                "SpectralMeasure: weights sum to {total}, expected 1 within {WEIGHT_SUM_TOL:.1e}"
            )));
        }
        Ok(Self { points, merge_tol })
    }

    pub fn points(&self) -> &[MeasurePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }

    /// Weight of the atom at `energy`, zero when no atom sits within the
    /// merge tolerance.
    pub fn weight_at(&self, energy: f64) -> f64 {
        self.points
            .iter()
            .filter(|p| (p.energy - energy).abs() <= self.merge_tol)
            .map(|p| p.weight)
            .sum()
    }

    /// Smallest gap between consecutive atoms; infinite for fewer than two
    /// atoms.
    pub fn min_gap(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1].energy - w[0].energy)
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest atom magnitude `|E_k|`.
    pub fn spectral_radius(&self) -> f64 {
        self.points
            .iter()
            .fold(0.0f64, |acc, p| acc.max(p.energy.abs()))
    }

    /// Smallest and largest atom energies.
    pub fn support_bounds(&self) -> (f64, f64) {
        (
            self.points.first().expect("nonempty").energy,
            self.points.last().expect("nonempty").energy,
        )
    }

    pub fn merge_tolerance(&self) -> f64 {
        self.merge_tol
    }
}

/// Spectral measure of `psi` with respect to `h`: weights `|<v_k, psi>|^2`
/// over eigenpairs, with degenerate eigenvalues merged.
pub fn spectral_measure(h: &HermitianOperator, psi: &State) -> Result<SpectralMeasure> {
    if h.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            context: "spectral_measure",
            left: h.dim(),
            right: psi.dim(),
        });
    }
    let coeffs = linalg::adj_matvec(&h.eigenvectors().view(), &psi.vec().view())?;
    let raw: Vec<(f64, f64)> = h
        .eigenvalues()
        .iter()
        .zip(coeffs.iter())
        .map(|(&e, c)| (e, c.norm_sqr()))
        .collect();
    SpectralMeasure::assemble(raw, h.merge_tolerance())
}

/// `<psi, (H - z)^{-1} psi> = sum_k w_k / (E_k - z)` for `z` off the real
/// axis.
pub fn resolvent_expectation(mu: &SpectralMeasure, z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 {
        return Err(Error::RealSpectralParameter { z });
    }
    Ok(mu
        .points()
        .iter()
        .map(|p| p.weight / (Complex64::new(p.energy, 0.0) - z))
        .sum())
}

/// Eigendecomposition of `H` compressed to the orthogonal complement of a
/// state, cached for repeated resolvent expectations.
///
/// The complement basis is the trailing `n - 1` columns of the Householder
/// reflection mapping the state to a multiple of `e_0`.
#[derive(Debug, Clone)]
pub struct ReducedSpectrum {
    /// `B W`: maps complement eigencoordinates directly to the ambient space.
    lift: Array2<Complex64>,
    eigenvalues: Array1<f64>,
    scale: f64,
}

impl ReducedSpectrum {
    pub fn new(h: &HermitianOperator, p_range: &State) -> Result<Self> {
        let n = h.dim();
        if n != p_range.dim() {
            return Err(Error::DimensionMismatch {
                context: "ReducedSpectrum::new",
                left: n,
                right: p_range.dim(),
            });
        }
        if n < 2 {
            return Err(Error::InvalidArgument(
                "ReducedSpectrum::new: need dimension >= 2 for a nonempty complement".into(),
            ));
        }
        let basis = complement_basis(p_range);
        let hb = linalg::matmul(&h.matrix().view(), &basis.view())?;
        let h_perp = linalg::adj_matmul(&basis.view(), &hb.view())?;
        let (eigenvalues, vectors) = linalg::eigh(&h_perp.view())?;
        let lift = linalg::matmul(&basis.view(), &vectors.view())?;
        Ok(Self {
            lift,
            eigenvalues,
            scale: h.scale,
        })
    }

    /// Eigenvalues of the compressed operator, ascending.
    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    /// `<v, (H_perp - z)^{-1} v>` where `v` is first projected onto the
    /// complement. Real `z` is admitted as long as it keeps a safe distance
    /// from the compressed spectrum (the projection is what removes the pole
    /// at the original eigenvalue).
    pub fn expectation(&self, v: &Array1<Complex64>, z: Complex64) -> Result<Complex64> {
        if v.len() != self.lift.nrows() {
            return Err(Error::DimensionMismatch {
                context: "ReducedSpectrum::expectation",
                left: self.lift.nrows(),
                right: v.len(),
            });
        }
        if z.im == 0.0 {
            let distance = self
                .eigenvalues
                .iter()
                .fold(f64::INFINITY, |acc, &e| acc.min((e - z.re).abs()));
            if distance <= 1e-12 * self.scale {
                return Err(Error::SingularReducedResolvent { z, distance });
            }
        }
        let coeffs = linalg::adj_matvec(&self.lift.view(), &v.view())?;
        Ok(self
            .eigenvalues
            .iter()
            .zip(coeffs.iter())
            .map(|(&e, c)| c.norm_sqr() / (Complex64::new(e, 0.0) - z))
            .sum())
    }
}

/// Orthonormal basis of the orthogonal complement of `p`, as the columns of
/// an `n x (n-1)` matrix.
fn complement_basis(p: &State) -> Array2<Complex64> {
    let n = p.dim();
    let pv = p.vec();
    // Householder reflection Q = I - 2 u u^H / <u,u> with u = p - alpha e_0,
    // alpha = -p_0/|p_0| (modulus one, anti-aligned so u never cancels).
    // Q maps p to alpha e_0, so its trailing columns span the complement.
    let alpha = if pv[0].norm() > 0.0 {
        -pv[0] / pv[0].norm()
    } else {
        Complex64::new(-1.0, 0.0)
    };
    let mut u = pv.clone();
    u[0] -= alpha;
    let unorm_sq: f64 = u.iter().map(|z| z.norm_sqr()).sum();
    let mut q = Array2::<Complex64>::eye(n);
    if unorm_sq > 0.0 {
        for i in 0..n {
            for j in 0..n {
                q[[i, j]] -= 2.0 * u[i] * u[j].conj() / unorm_sq;
            }
        }
    }
    let mut basis = Array2::zeros((n, n - 1));
    for j in 1..n {
        basis.column_mut(j - 1).assign(&q.column(j));
    }
    basis
}

/// Convenience wrapper: builds the reduced spectrum and evaluates one
/// expectation. Prefer [`ReducedSpectrum`] directly when sweeping `z`.
pub fn reduced_resolvent_expectation(
    h: &HermitianOperator,
    p_range: &State,
    v: &Array1<Complex64>,
    z: Complex64,
) -> Result<Complex64> {
    ReducedSpectrum::new(h, p_range)?.expectation(v, z)
}

/// `|| (H - lambda) psi ||`.
pub fn residual_norm(h: &HermitianOperator, psi: &State, lambda: f64) -> Result<f64> {
    let mut hv = h.apply(psi.vec())?;
    hv.zip_mut_with(psi.vec(), |a, b| *a -= lambda * b);
    Ok(linalg::vec_norm(&hv.view()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Deterministic dense Hermitian test matrix.
    fn sample_hermitian(n: usize, seed: u64) -> HermitianOperator {
        let mut m = Array2::zeros((n, n));
        let v1 = linalg::probe_vector(n * n, seed);
        for i in 0..n {
            for j in 0..n {
                m[[i, j]] = v1[i * n + j];
            }
        }
        let adj = linalg::adjoint(&m.view());
        let herm = (&m + &adj).mapv(|z| 0.5 * z * (n as f64));
        HermitianOperator::new(herm).unwrap()
    }

    fn sample_state(n: usize, seed: u64) -> State {
        State::new(linalg::probe_vector(n, seed)).unwrap()
    }

    #[test]
    fn basis_state_on_a_diagonal_operator_is_a_point_mass() {
        let h = HermitianOperator::diagonal(&[0.5, -1.0, 2.0]).unwrap();
        let psi = State::basis(3, 1).unwrap();
        let mu = spectral_measure(&h, &psi).unwrap();
        assert_eq!(mu.len(), 1);
        assert_abs_diff_eq!(mu.points()[0].energy, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mu.points()[0].weight, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn equal_superposition_splits_weight_evenly() {
        let h = HermitianOperator::diagonal(&[-1.0, 1.0]).unwrap();
        let psi = State::from_real(&[1.0, 1.0]).unwrap();
        let mu = spectral_measure(&h, &psi).unwrap();
        assert_eq!(mu.len(), 2);
        assert_abs_diff_eq!(mu.points()[0].weight, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(mu.points()[1].weight, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn measure_moments_match_operator_powers() {
        // sum_k w_k E_k^m equals <psi, H^m psi>, computed by repeated
        // application of H; an independent check of weights and energies.
        let h = sample_hermitian(8, 3);
        let psi = sample_state(8, 11);
        let mu = spectral_measure(&h, &psi).unwrap();
        let mut power = psi.vec().clone();
        for m in 0..5 {
            let moment_measure: f64 = mu
                .points()
                .iter()
                .map(|p| p.weight * p.energy.powi(m))
                .sum();
            let moment_operator = linalg::dot(&psi.vec().view(), &power.view()).re;
            assert_abs_diff_eq!(moment_measure, moment_operator, epsilon = 1e-10);
            power = h.apply(&power).unwrap();
        }
    }

    #[test]
    fn degenerate_eigenvalues_merge_into_one_atom() {
        let h = HermitianOperator::diagonal(&[0.0, 1e-12, 1.0]).unwrap();
        let psi = State::from_real(&[1.0, 1.0, 1.0]).unwrap();
        let mu = spectral_measure(&h, &psi).unwrap();
        assert_eq!(mu.len(), 2);
        assert_abs_diff_eq!(mu.points()[0].weight, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mu.weight_at(0.0), 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn resolvent_expectation_matches_a_direct_linear_solve() {
        let h = sample_hermitian(8, 5);
        let psi = sample_state(8, 17);
        let mu = spectral_measure(&h, &psi).unwrap();
        let z = c(0.3, 0.05);
        let from_measure = resolvent_expectation(&mu, z).unwrap();
        // (H - z) x = psi  =>  <psi, x> is the resolvent expectation.
        let shifted = h.matrix() - &(Array2::<Complex64>::eye(8).mapv(|e| e * z));
        let x = linalg::solve(&shifted.view(), &psi.vec().view()).unwrap();
        let direct = linalg::dot(&psi.vec().view(), &x.view());
        assert!((from_measure - direct).norm() < 1e-11);
    }

    #[test]
    fn resolvent_is_herglotz_and_conjugate_symmetric() {
        let h = sample_hermitian(6, 23);
        let psi = sample_state(6, 29);
        let mu = spectral_measure(&h, &psi).unwrap();
        for &x in &[-2.0, 0.0, 0.7] {
            for &eta in &[1e-3, 0.1, 2.0] {
                let z = c(x, eta);
                let g = resolvent_expectation(&mu, z).unwrap();
                assert!(g.im > 0.0, "Im must be positive in the upper half plane");
                let g_conj = resolvent_expectation(&mu, z.conj()).unwrap();
                assert!((g_conj - g.conj()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn resolvent_rejects_real_spectral_parameters() {
        let mu = SpectralMeasure::from_points(vec![(0.0, 1.0)]).unwrap();
        let err = resolvent_expectation(&mu, c(0.5, 0.0)).unwrap_err();
        assert!(matches!(err, Error::RealSpectralParameter { .. }));
    }

    /// Gram-Schmidt complement of a state: an implementation independent of
    /// the Householder construction used by `ReducedSpectrum`.
    fn gram_schmidt_complement(p: &State) -> Array2<Complex64> {
        let n = p.dim();
        let mut cols: Vec<Array1<Complex64>> = vec![p.vec().clone()];
        for i in 0..n {
            if cols.len() == n {
                break;
            }
            let mut v: Array1<Complex64> = Array1::zeros(n);
            v[i] = c(1.0, 0.0);
            for b in &cols {
                let coef = linalg::dot(&b.view(), &v.view());
                v.zip_mut_with(b, |a, q| *a -= coef * q);
            }
            let norm = linalg::vec_norm(&v.view());
            if norm > 1e-8 {
                cols.push(v.mapv(|z| z / norm));
            }
        }
        assert_eq!(cols.len(), n);
        let mut basis = Array2::zeros((n, n - 1));
        for (j, col) in cols.iter().skip(1).enumerate() {
            basis.column_mut(j).assign(col);
        }
        basis
    }

    #[test]
    fn reduced_resolvent_matches_a_gram_schmidt_construction() {
        let h = sample_hermitian(6, 41);
        let psi = sample_state(6, 43);
        let v = linalg::probe_vector(6, 47);
        let z = c(0.2, 0.3);
        let fast = reduced_resolvent_expectation(&h, &psi, &v, z).unwrap();

        let basis = gram_schmidt_complement(&psi);
        let hb = linalg::matmul(&h.matrix().view(), &basis.view()).unwrap();
        let h_perp = linalg::adj_matmul(&basis.view(), &hb.view()).unwrap();
        let (w, vecs) = linalg::eigh(&h_perp.view()).unwrap();
        let v_perp = linalg::adj_matvec(&basis.view(), &v.view()).unwrap();
        let coeffs = linalg::adj_matvec(&vecs.view(), &v_perp.view()).unwrap();
        let slow: Complex64 = w
            .iter()
            .zip(coeffs.iter())
            .map(|(&e, cf)| cf.norm_sqr() / (c(e, 0.0) - z))
            .sum();
        assert!((fast - slow).norm() < 1e-10);
    }

    #[test]
    fn complement_basis_is_orthonormal_and_kills_the_state() {
        for seed in [1u64, 2, 9] {
            let psi = sample_state(7, seed);
            let b = complement_basis(&psi);
            let gram = linalg::adj_matmul(&b.view(), &b.view()).unwrap();
            let eye = Array2::<Complex64>::eye(6);
            assert!(linalg::frob_norm(&(&gram - &eye).view()) < 1e-13);
            let proj = linalg::adj_matvec(&b.view(), &psi.vec().view()).unwrap();
            assert!(linalg::vec_norm(&proj.view()) < 1e-13);
        }
    }

    #[test]
    fn reduced_resolvent_allows_real_z_away_from_the_reduced_spectrum() {
        // psi = e_0 on a diagonal operator: the reduced spectrum is the rest
        // of the diagonal, so z = 0 (the removed eigenvalue) is regular.
        let h = HermitianOperator::diagonal(&[0.0, 1.0, -1.0]).unwrap();
        let psi = State::basis(3, 0).unwrap();
        let v = Array1::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        let g = reduced_resolvent_expectation(&h, &psi, &v, c(0.0, 0.0)).unwrap();
        // 1/(1-0) + 1/(-1-0) = 0.
        assert!((g - c(0.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn reduced_resolvent_rejects_real_z_on_the_reduced_spectrum() {
        let h = HermitianOperator::diagonal(&[0.0, 1.0, -1.0]).unwrap();
        let psi = State::basis(3, 0).unwrap();
        let v = Array1::from_elem(3, c(1.0, 0.0));
        let err = reduced_resolvent_expectation(&h, &psi, &v, c(1.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::SingularReducedResolvent { .. }));
    }

    #[test]
    fn residual_norm_vanishes_exactly_on_eigenpairs() {
        let h = sample_hermitian(5, 53);
        let k = 2;
        let psi = State::new(h.eigenvectors().column(k).to_owned()).unwrap();
        let lam = h.eigenvalues()[k];
        assert!(residual_norm(&h, &psi, lam).unwrap() < 1e-13);
        // Off-eigenvalue shift: ||(H - (lam+d)) psi||^2 = ||(H-lam)psi||^2 + d^2.
        let shifted = residual_norm(&h, &psi, lam + 0.5).unwrap();
        assert_abs_diff_eq!(shifted, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn construction_rejects_non_hermitian_input() {
        let m = array![[c(0.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]];
        assert!(matches!(
            HermitianOperator::new(m).unwrap_err(),
            Error::NotHermitian { .. }
        ));
    }

    #[test]
    fn zero_states_and_mismatched_dimensions_are_rejected() {
        assert!(matches!(
            State::new(Array1::zeros(3)).unwrap_err(),
            Error::ZeroVector { .. }
        ));
        let h = HermitianOperator::diagonal(&[0.0, 1.0]).unwrap();
        let psi = State::basis(3, 0).unwrap();
        assert!(matches!(
            spectral_measure(&h, &psi).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
    }

    #[test]
    fn unitary_conjugation_preserves_the_measure() {
        // Rotating H and psi by the same unitary leaves (energies, weights)
        // unchanged.
        let h = sample_hermitian(5, 61);
        let psi = sample_state(5, 67);
        let mu1 = spectral_measure(&h, &psi).unwrap();

        let g = sample_hermitian(5, 71);
        let u = linalg::hermitian_exp(&g.matrix().view(), 1.0).unwrap();
        let hu = linalg::matmul(&h.matrix().view(), &u.view()).unwrap();
        let rotated = linalg::adj_matmul(&u.view(), &hu.view()).unwrap();
        let h2 = HermitianOperator::new(rotated).unwrap();
        let psi2 = State::new(linalg::adj_matvec(&u.view(), &psi.vec().view()).unwrap()).unwrap();
        let mu2 = spectral_measure(&h2, &psi2).unwrap();

        assert_eq!(mu1.len(), mu2.len());
        for (p, q) in mu1.points().iter().zip(mu2.points()) {
            assert_abs_diff_eq!(p.energy, q.energy, epsilon = 1e-10);
            assert_abs_diff_eq!(p.weight, q.weight, epsilon = 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn prop_measures_are_normalized_probability_measures(
            seed in 0u64..1000,
            n in 2usize..7,
        ) {
            let h = sample_hermitian(n, seed);
            let psi = sample_state(n, seed.wrapping_add(1_000_000));
            let mu = spectral_measure(&h, &psi).unwrap();
            prop_assert!((mu.total_weight() - 1.0).abs() < 1e-10);
            prop_assert!(mu.points().iter().all(|p| p.weight >= 0.0));
            let mut prev = f64::NEG_INFINITY;
            for p in mu.points() {
                prop_assert!(p.energy > prev);
                prev = p.energy;
            }
        }

        #[test]
        fn prop_resolvent_imaginary_part_is_signed_by_the_half_plane(
            seed in 0u64..1000,
            x in -3.0f64..3.0,
            eta in 1e-6f64..1.0,
        ) {
            let h = sample_hermitian(4, seed);
            let psi = sample_state(4, seed.wrapping_add(42));
            let mu = spectral_measure(&h, &psi).unwrap();
            let upper = resolvent_expectation(&mu, c(x, eta)).unwrap();
            prop_assert!(upper.im > 0.0);
            let lower = resolvent_expectation(&mu, c(x, -eta)).unwrap();
            prop_assert!(lower.im < 0.0);
            prop_assert!((lower - upper.conj()).norm() < 1e-12);
        }
    }
}
