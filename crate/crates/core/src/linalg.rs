//! Dense complex linear algebra for clockwork-sized operators.
//!
//! Matrices are `nalgebra` dynamic matrices over `Complex64`. Everything
//! here is a pure function of its inputs.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Numerical tolerances used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Hermiticity of operators and density matrices.
    pub hermitian: f64,
    /// `‖U†U − id‖_max` for every unitary we build.
    pub unitary: f64,
    /// Lowest eigenvalue still accepted as positive semidefinite.
    pub psd: f64,
    /// Unit trace of density matrices.
    pub trace: f64,
    /// Euclidean norm of pure states.
    pub norm: f64,
    /// Trace preservation when verifying channels.
    pub tp: f64,
    /// `π₀ + π₁ = id`.
    pub povm: f64,
    /// Below this total probability a step is considered degenerate.
    pub degenerate_probability: f64,
}

pub const TOL: Tolerances = Tolerances {
    hermitian: 1e-9,
    unitary: 1e-10,
    psd: 1e-9,
    trace: 1e-9,
    norm: 1e-10,
    tp: 1e-9,
    povm: 1e-10,
    degenerate_probability: 1e-15,
};

pub(crate) const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Eigenvalues in ascending order with the matching eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct HermitianEigensystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigensystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V·diag(λ)·V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (mut col, &lambda) in scaled.column_iter_mut().zip(&self.eigenvalues) {
            col *= Complex64::from(lambda);
        }
        &scaled * self.eigenvectors.adjoint()
    }

    /// Apply a real function to the spectrum: `V·diag(f(λ))·V†`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (mut col, &lambda) in scaled.column_iter_mut().zip(&self.eigenvalues) {
            col *= Complex64::from(f(lambda));
        }
        &scaled * self.eigenvectors.adjoint()
    }
}

/// Unitary Fourier matrix `F[k][m] = exp(−2πi·m·k/d)/√d`.
///
/// Column `m` is the eigenvector of the cyclic shift `U_P|k⟩ = |k+1 mod d⟩`
/// with eigenvalue `exp(2πi·m/d)`.
pub fn dft_unitary(d: usize) -> Result<ComplexMatrix> {
    if d == 0 {
        return Err(Error::invalid("d", "dimension must be at least 1"));
    }
    let norm = 1.0 / (d as f64).sqrt();
    Ok(ComplexMatrix::from_fn(d, d, |k, m| {
        // reduce m·k mod d first so large d keeps full phase accuracy
        let mk = (m * k) % d;
        Complex64::from_polar(norm, -2.0 * PI * mk as f64 / d as f64)
    }))
}

/// The cyclic shift `U_P = |0⟩⟨d−1| + Σ_k |k+1⟩⟨k|`.
pub fn shift_matrix(d: usize) -> Result<ComplexMatrix> {
    if d == 0 {
        return Err(Error::invalid("d", "dimension must be at least 1"));
    }
    let mut u = ComplexMatrix::zeros(d, d);
    for k in 0..d {
        u[((k + 1) % d, k)] = ONE;
    }
    Ok(u)
}

/// Largest absolute entry of `A − A†`.
pub fn hermitian_deviation(a: &ComplexMatrix) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `‖U†U − id‖_max`.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let g = u.adjoint() * u;
    max_abs_diff(&g, &ComplexMatrix::identity(u.nrows(), u.ncols()))
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Trace of a square matrix.
pub fn trace(a: &ComplexMatrix) -> Complex64 {
    a.diagonal().iter().sum()
}

/// `A ⊗ B` with the first factor as the most significant index.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Eigendecomposition of a Hermitian matrix.
pub fn herm_eigendecompose(h: &ComplexMatrix) -> Result<HermitianEigensystem> {
    if !h.is_square() {
        return Err(Error::dims("square matrix", format!("{}x{}", h.nrows(), h.ncols())));
    }
    let deviation = hermitian_deviation(h);
    if deviation > TOL.hermitian {
        return Err(Error::NotHermitian { deviation });
    }
    // symmetrise so the solver sees an exactly Hermitian input
    let sym = (h + h.adjoint()) * Complex64::from(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = ComplexMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
    Ok(HermitianEigensystem { eigenvalues, eigenvectors })
}

/// `exp(−iHθ) = B·diag(exp(−iλθ))·B†` for `H = B·diag(λ)·B†`.
pub fn unitary_from_phases(basis: &ComplexMatrix, phases: &[f64], theta: f64) -> Result<ComplexMatrix> {
    if !basis.is_square() || basis.nrows() != phases.len() {
        return Err(Error::dims(
            format!("square basis of size {}", phases.len()),
            format!("{}x{}", basis.nrows(), basis.ncols()),
        ));
    }
    if !theta.is_finite() {
        return Err(Error::invalid("theta", "must be finite"));
    }
    let mut scaled = basis.clone();
    for (mut col, &lambda) in scaled.column_iter_mut().zip(phases) {
        col *= Complex64::from_polar(1.0, -lambda * theta);
    }
    Ok(&scaled * basis.adjoint())
}

/// Sum of singular values.
pub fn trace_norm(a: &ComplexMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::dims("square matrix", format!("{}x{}", a.nrows(), a.ncols())));
    }
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    if hermitian_deviation(a) <= TOL.hermitian {
        let eig = herm_eigendecompose(a)?;
        return Ok(eig.eigenvalues.iter().map(|l| l.abs()).sum());
    }
    let svd = a.clone().svd(false, false);
    Ok(svd.singular_values.iter().sum())
}

/// Principal square root of a PSD matrix. Small negative eigenvalues
/// produced by rounding are clamped to zero.
pub fn psd_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = herm_eigendecompose(a)?;
    if let Some(&min) = eig.eigenvalues.first() {
        if min < -TOL.psd {
            return Err(Error::invalid("operator", format!("not positive semidefinite (min eigenvalue {min:.3e})")));
        }
    }
    Ok(eig.map_spectrum(|l| l.max(0.0).sqrt()))
}

/// An operator diagonal in the Fourier basis of [`dft_unitary`], applied to
/// vectors in `O(d log d)` through an FFT.
#[derive(Clone)]
pub struct FourierDiagonal {
    /// Multiplier of Fourier column `m`.
    multipliers: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

impl fmt::Debug for FourierDiagonal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FourierDiagonal").field("dim", &self.multipliers.len()).finish()
    }
}

impl FourierDiagonal {
    /// `exp(−iλ_m θ)` on Fourier column `m`.
    pub fn from_phases(phases: &[f64], theta: f64) -> Self {
        let d = phases.len();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(d);
        let inverse = planner.plan_fft_inverse(d);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        let multipliers = phases.iter().map(|&l| Complex64::from_polar(1.0, -l * theta)).collect();
        Self { multipliers, forward, inverse, scratch_len }
    }

    pub fn dim(&self) -> usize {
        self.multipliers.len()
    }

    pub fn scratch_len(&self) -> usize {
        self.scratch_len
    }

    /// In-place `v ← F·diag(mult)·F†·v`.
    pub fn apply(&self, v: &mut [Complex64], scratch: &mut [Complex64]) {
        let d = self.multipliers.len();
        debug_assert_eq!(v.len(), d);
        // F†v has the +i sign: the unnormalised inverse DFT.
        self.inverse.process_with_scratch(v, &mut scratch[..self.scratch_len]);
        let scale = 1.0 / d as f64;
        for (x, m) in v.iter_mut().zip(&self.multipliers) {
            *x *= m * scale;
        }
        self.forward.process_with_scratch(v, &mut scratch[..self.scratch_len]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(n: usize, entries: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |i, j| {
            let k = 2 * (i * n + j);
            c(entries[k], entries[k + 1])
        })
    }

    fn random_unitary(n: usize, entries: &[f64]) -> ComplexMatrix {
        let a = random_matrix(n, entries);
        a.qr().q()
    }

    #[test]
    fn dft_small_cases() {
        let f1 = dft_unitary(1).unwrap();
        assert!((f1[(0, 0)] - ONE).norm() < 1e-15);

        let f2 = dft_unitary(2).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let expected = ComplexMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]);
        assert!(max_abs_diff(&f2, &expected) < 1e-15);

        assert!(dft_unitary(0).is_err());
    }

    #[test]
    fn dft_columns_are_shift_eigenvectors() {
        // explicit shift against column 1: eigenvalue exp(2πi/4) = i
        let f = dft_unitary(4).unwrap();
        let up = shift_matrix(4).unwrap();
        let col = f.column(1).into_owned();
        let moved = &up * &col;
        let expected = &col * c(0.0, 1.0);
        assert!(moved.iter().zip(expected.iter()).all(|(a, b)| (a - b).norm() < 1e-12));

        for d in 1..12 {
            let f = dft_unitary(d).unwrap();
            let up = shift_matrix(d).unwrap();
            assert!(unitarity_defect(&f) < 1e-12);
            for m in 0..d {
                let col = f.column(m).into_owned();
                let ev = Complex64::from_polar(1.0, 2.0 * PI * m as f64 / d as f64);
                let diff = &up * &col - &col * ev;
                assert!(diff.norm() < 1e-12, "d={d} m={m}");
            }
        }
    }

    #[test]
    fn eigendecompose_examples() {
        let diag = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(3.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]));
        let eig = herm_eigendecompose(&diag).unwrap();
        assert_eq!(eig.eigenvalues.len(), 3);
        for (got, want) in eig.eigenvalues.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }

        let x = ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let eig = herm_eigendecompose(&x).unwrap();
        assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-12);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-12);

        // H_S = U_P + U_P† for d = 4: closed form 2cos(2πm/4)
        let up = shift_matrix(4).unwrap();
        let hs = &up + up.adjoint();
        let eig = herm_eigendecompose(&hs).unwrap();
        let mut closed: Vec<f64> = (0..4).map(|m| 2.0 * (2.0 * PI * m as f64 / 4.0).cos()).collect();
        closed.sort_by(f64::total_cmp);
        for (got, want) in eig.eigenvalues.iter().zip(&closed) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(unitarity_defect(&eig.eigenvectors) < 1e-10);
        assert!(max_abs_diff(&eig.reconstruct(), &hs) < 1e-9);
    }

    #[test]
    fn eigendecompose_rejects_bad_input() {
        let rect = ComplexMatrix::zeros(2, 3);
        assert!(matches!(herm_eigendecompose(&rect), Err(Error::DimensionMismatch { .. })));
        let skew = ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(matches!(herm_eigendecompose(&skew), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn phases_identity_and_shift_anchor() {
        let id = ComplexMatrix::identity(3, 3);
        let u = unitary_from_phases(&id, &[0.0; 3], 1.7).unwrap();
        assert!(max_abs_diff(&u, &id) < 1e-15);

        // exp(−iH_P) = U_P with λ_m = −2πm/d
        for d in 1..16 {
            let f = dft_unitary(d).unwrap();
            let phases: Vec<f64> = (0..d).map(|m| -2.0 * PI * m as f64 / d as f64).collect();
            let u = unitary_from_phases(&f, &phases, 1.0).unwrap();
            assert!(max_abs_diff(&u, &shift_matrix(d).unwrap()) < 1e-10, "d={d}");
        }

        assert!(unitary_from_phases(&id, &[0.0; 2], 1.0).is_err());
    }

    #[test]
    fn ladder_phases_commute_with_shift() {
        let f = dft_unitary(3).unwrap();
        let phases: Vec<f64> = (0..3).map(|m| 2.0 * (2.0 * PI * m as f64 / 3.0).cos()).collect();
        let u = unitary_from_phases(&f, &phases, 0.1).unwrap();
        assert!(unitarity_defect(&u) < 1e-10);
        let up = shift_matrix(3).unwrap();
        let comm = &u * &up - &up * &u;
        assert!(comm.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-10);
    }

    #[test]
    fn trace_norm_examples() {
        assert_eq!(trace_norm(&ComplexMatrix::zeros(3, 3)).unwrap(), 0.0);
        let z = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, -ONE]));
        assert!((trace_norm(&z).unwrap() - 2.0).abs() < 1e-12);

        // |0⟩⟨0| − |+⟩⟨+| has eigenvalues ±1/√2
        let plus = ComplexMatrix::from_element(2, 2, c(0.5, 0.0));
        let mut zero = ComplexMatrix::zeros(2, 2);
        zero[(0, 0)] = ONE;
        let oracle = 2.0 / 2f64.sqrt();
        assert!((trace_norm(&(zero - plus)).unwrap() - oracle).abs() < 1e-12);

        assert!(trace_norm(&ComplexMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn trace_norm_of_non_hermitian_uses_singular_values() {
        // nilpotent |0⟩⟨1| has one singular value 1
        let a = ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!((trace_norm(&a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fourier_diagonal_matches_dense() {
        for d in [1usize, 2, 3, 7, 16, 33] {
            let phases: Vec<f64> = (0..d).map(|m| -2.0 * PI * m as f64 / d as f64).collect();
            let fast = FourierDiagonal::from_phases(&phases, 0.37);
            let dense = unitary_from_phases(&dft_unitary(d).unwrap(), &phases, 0.37).unwrap();
            let v: Vec<Complex64> = (0..d).map(|k| c((k as f64).sin(), (k as f64 * 0.3).cos())).collect();
            let mut w = v.clone();
            let mut scratch = vec![ZERO; fast.scratch_len()];
            fast.apply(&mut w, &mut scratch);
            let expected = &dense * nalgebra::DVector::from_vec(v);
            for (a, b) in w.iter().zip(expected.iter()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let a = ComplexMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(1.0, 0.0)]);
        let s = psd_sqrt(&a).unwrap();
        assert!(max_abs_diff(&(&s * &s), &a) < 1e-12);
        let neg = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, -ONE]));
        assert!(psd_sqrt(&neg).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn trace_norm_unitarily_invariant(
            a in proptest::collection::vec(-1.0f64..1.0, 32),
            u in proptest::collection::vec(-1.0f64..1.0, 32),
            v in proptest::collection::vec(-1.0f64..1.0, 32),
        ) {
            let a = random_matrix(4, &a);
            let u = random_unitary(4, &u);
            let v = random_unitary(4, &v);
            let lhs = trace_norm(&a).unwrap();
            let rhs = trace_norm(&(&u * &a * &v)).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }

        #[test]
        fn phase_family_is_a_group(t1 in -3.0f64..3.0, t2 in -3.0f64..3.0, d in 1usize..9) {
            let f = dft_unitary(d).unwrap();
            let phases: Vec<f64> = (0..d).map(|m| 2.0 * (2.0 * PI * m as f64 / d as f64).cos()).collect();
            let a = unitary_from_phases(&f, &phases, t1).unwrap();
            let b = unitary_from_phases(&f, &phases, t2).unwrap();
            let ab = unitary_from_phases(&f, &phases, t1 + t2).unwrap();
            prop_assert!(unitarity_defect(&a) <= 1e-10);
            prop_assert!(max_abs_diff(&(&a * &b), &ab) < 1e-9);
        }

        #[test]
        fn eigensystem_invariants(entries in proptest::collection::vec(-1.0f64..1.0, 50)) {
            let a = random_matrix(5, &entries);
            let h = &a + a.adjoint();
            let eig = herm_eigendecompose(&h).unwrap();
            prop_assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(unitarity_defect(&eig.eigenvectors) <= 1e-10);
            prop_assert!(max_abs_diff(&eig.reconstruct(), &h) <= 1e-9);
        }
    }
}
