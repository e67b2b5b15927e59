//! States, linear maps given by their action, Choi matrices and CPTP checks.
//!
//! Choi convention: `J(Φ) = Σ_ij Φ(|i⟩⟨j|) ⊗ |i⟩⟨j|`, output factor first.
//! A trace-preserving map therefore has `tr J = in_dim`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, herm_eigendecompose, ComplexMatrix, ONE, TOL, ZERO};

/// Normalised state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("state", "dimension must be at least 1"));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::invalid("state", "non-finite amplitude"));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > TOL.norm {
            return Err(Error::invalid("state", format!("norm {norm} differs from 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Rescale an arbitrary nonzero vector to unit norm.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("state", "cannot normalise a zero or non-finite vector"));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Self::new(amplitudes)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::invalid("index", format!("{index} is outside 0..{dim}")));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn to_vector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.amplitudes)
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn to_density(&self) -> DensityMatrix {
        let v = self.to_vector();
        DensityMatrix { matrix: &v * v.adjoint() }
    }

    /// Probability of the computational basis outcome `index`.
    pub fn population(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }
}

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::dims("nonempty square matrix", format!("{}x{}", matrix.nrows(), matrix.ncols())));
        }
        let deviation = linalg::hermitian_deviation(&matrix);
        if deviation > TOL.hermitian {
            return Err(Error::NotHermitian { deviation });
        }
        let tr = linalg::trace(&matrix).re;
        if (tr - 1.0).abs() > TOL.trace {
            return Err(Error::invalid("density matrix", format!("trace {tr} differs from 1")));
        }
        let min = herm_eigendecompose(&matrix)?.eigenvalues[0];
        if min < -TOL.psd {
            return Err(Error::invalid("density matrix", format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { matrix })
    }

    /// Maximally mixed state `id/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(dim, dim) * Complex64::from(1.0 / dim as f64) }
    }

    pub(crate) fn from_raw(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    /// `ρ ⊗ σ`.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix { matrix: linalg::kron(&self.matrix, &other.matrix) }
    }
}

/// Which tensor factor [`partial_trace`] keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Partial trace of an unnormalised operator on `A ⊗ B`.
pub fn partial_trace_matrix(m: &ComplexMatrix, dims: (usize, usize), keep: Keep) -> Result<ComplexMatrix> {
    let (da, db) = dims;
    if da == 0 || db == 0 || da * db != m.nrows() || !m.is_square() {
        return Err(Error::dims(format!("{da}x{db} = {}", da * db), format!("{}x{}", m.nrows(), m.ncols())));
    }
    Ok(match keep {
        Keep::First => ComplexMatrix::from_fn(da, da, |i, j| (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()),
        Keep::Second => ComplexMatrix::from_fn(db, db, |i, j| (0..da).map(|k| m[(k * db + i, k * db + j)]).sum()),
    })
}

pub fn partial_trace(state: &DensityMatrix, dims: (usize, usize), keep: Keep) -> Result<DensityMatrix> {
    partial_trace_matrix(&state.matrix, dims, keep).map(DensityMatrix::from_raw)
}

type Action = dyn Fn(&ComplexMatrix) -> ComplexMatrix + Send + Sync;

/// A linear map between operator spaces, given by its action.
#[derive(Clone)]
pub struct MapAsAction {
    in_dim: usize,
    out_dim: usize,
    action: Arc<Action>,
}

impl fmt::Debug for MapAsAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MapAsAction").field("in_dim", &self.in_dim).field("out_dim", &self.out_dim).finish()
    }
}

impl MapAsAction {
    pub fn new(in_dim: usize, out_dim: usize, action: impl Fn(&ComplexMatrix) -> ComplexMatrix + Send + Sync + 'static) -> Self {
        Self { in_dim, out_dim, action: Arc::new(action) }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, dim, |x| x.clone())
    }

    /// `ρ ↦ Σ_k K_k ρ K_k†`.
    pub fn from_kraus(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::invalid("kraus", "at least one operator required"))?;
        let (out_dim, in_dim) = first.shape();
        if let Some(k) = kraus.iter().find(|k| k.shape() != (out_dim, in_dim)) {
            return Err(Error::dims(format!("{out_dim}x{in_dim}"), format!("{}x{}", k.nrows(), k.ncols())));
        }
        let adjoints: Vec<ComplexMatrix> = kraus.iter().map(|k| k.adjoint()).collect();
        Ok(Self::new(in_dim, out_dim, move |x| {
            kraus.iter().zip(&adjoints).map(|(k, kd)| k * x * kd).fold(ComplexMatrix::zeros(out_dim, out_dim), |acc, y| acc + y)
        }))
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.shape() != (self.in_dim, self.in_dim) {
            return Err(Error::dims(format!("{0}x{0}", self.in_dim), format!("{}x{}", x.nrows(), x.ncols())));
        }
        let y = (self.action)(x);
        if y.shape() != (self.out_dim, self.out_dim) {
            return Err(Error::dims(format!("{0}x{0} output", self.out_dim), format!("{}x{}", y.nrows(), y.ncols())));
        }
        Ok(y)
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &MapAsAction) -> Result<MapAsAction> {
        if first.out_dim != self.in_dim {
            return Err(Error::dims(self.in_dim, first.out_dim));
        }
        let (outer, inner) = (self.action.clone(), first.action.clone());
        Ok(Self::new(first.in_dim, self.out_dim, move |x| outer(&inner(x))))
    }

    /// `self − other` for maps with equal shapes.
    pub fn minus(&self, other: &MapAsAction) -> Result<MapAsAction> {
        if (self.in_dim, self.out_dim) != (other.in_dim, other.out_dim) {
            return Err(Error::dims(
                format!("{}->{}", self.in_dim, self.out_dim),
                format!("{}->{}", other.in_dim, other.out_dim),
            ));
        }
        let (a, b) = (self.action.clone(), other.action.clone());
        Ok(Self::new(self.in_dim, self.out_dim, move |x| a(x) - b(x)))
    }

    /// Largest entry of `Φ(Σ c_ij E_ij) − Σ c_ij Φ(E_ij)` for a fixed
    /// irregular coefficient pattern.
    pub fn linearity_defect(&self) -> Result<f64> {
        let n = self.in_dim;
        let coeff = |i: usize, j: usize| Complex64::new(((i * 7 + j * 3 + 1) as f64).sin(), ((i * 5 + j + 2) as f64).cos());
        let combined = ComplexMatrix::from_fn(n, n, coeff);
        let lhs = self.apply(&combined)?;
        let mut rhs = ComplexMatrix::zeros(self.out_dim, self.out_dim);
        for i in 0..n {
            for j in 0..n {
                rhs += self.apply(&matrix_unit(n, i, j))? * coeff(i, j);
            }
        }
        Ok(linalg::max_abs_diff(&lhs, &rhs))
    }
}

pub(crate) fn matrix_unit(n: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut e = ComplexMatrix::zeros(n, n);
    e[(i, j)] = ONE;
    e
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    pub in_dim: usize,
    pub out_dim: usize,
    pub matrix: ComplexMatrix,
}

pub fn choi_of(map: &MapAsAction) -> Result<ChoiMatrix> {
    let (n, m) = (map.in_dim, map.out_dim);
    let mut j = ComplexMatrix::zeros(n * m, n * m);
    for a in 0..n {
        for b in 0..n {
            let image = map.apply(&matrix_unit(n, a, b))?;
            // block (r, c) of Φ(E_ab) ⊗ E_ab sits at (r·n + a, c·n + b)
            for r in 0..m {
                for c in 0..m {
                    j[(r * n + a, c * n + b)] += image[(r, c)];
                }
            }
        }
    }
    Ok(ChoiMatrix { in_dim: n, out_dim: m, matrix: j })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CptpReport {
    pub is_cp: bool,
    pub is_tp: bool,
    /// `max(0, −λ_min(J))`.
    pub cp_defect: f64,
    /// `max_ij |tr Φ(E_ij) − δ_ij|`.
    pub tp_defect: f64,
}

pub fn verify_cptp(map: &MapAsAction) -> Result<CptpReport> {
    let choi = choi_of(map)?;
    let deviation = linalg::hermitian_deviation(&choi.matrix);
    // a map that is not Hermiticity preserving cannot be CP
    let cp_defect = if deviation > TOL.hermitian {
        deviation
    } else {
        (-herm_eigendecompose(&choi.matrix)?.eigenvalues[0]).max(0.0)
    };
    let n = map.in_dim;
    let mut tp_defect = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let tr = linalg::trace(&map.apply(&matrix_unit(n, i, j))?);
            let target = if i == j { ONE } else { ZERO };
            tp_defect = tp_defect.max((tr - target).norm());
        }
    }
    Ok(CptpReport { is_cp: cp_defect <= TOL.psd, is_tp: tp_defect <= TOL.tp, cp_defect, tp_defect })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    #[test]
    fn identity_choi_is_unnormalised_bell_projector() {
        let j = choi_of(&MapAsAction::identity(2)).unwrap();
        let bell = DVector::from_vec(vec![ONE, ZERO, ZERO, ONE]);
        let expected = &bell * bell.adjoint();
        assert!(max_abs_diff(&j.matrix, &expected) < 1e-15);
        assert!((linalg::trace(&j.matrix).re - 2.0).abs() < 1e-10);

        for d in 1..6 {
            let j = choi_of(&MapAsAction::identity(d)).unwrap();
            assert!((linalg::trace(&j.matrix).re - d as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn bit_flip_choi_is_rank_one_and_orthogonal_to_identity() {
        let flip = MapAsAction::from_kraus(vec![pauli_x()]).unwrap();
        let j = choi_of(&flip).unwrap();
        let eig = herm_eigendecompose(&j.matrix).unwrap();
        let nonzero = eig.eigenvalues.iter().filter(|l| l.abs() > 1e-12).count();
        assert_eq!(nonzero, 1);
        let id = choi_of(&MapAsAction::identity(2)).unwrap();
        let overlap = linalg::trace(&(&j.matrix * &id.matrix)).norm();
        assert!(overlap < 1e-12);
    }

    #[test]
    fn replacement_channel_choi() {
        let replace = MapAsAction::new(2, 2, |x| {
            let mut out = ComplexMatrix::zeros(2, 2);
            out[(0, 0)] = linalg::trace(x);
            out
        });
        let j = choi_of(&replace).unwrap();
        let mut zero = ComplexMatrix::zeros(2, 2);
        zero[(0, 0)] = ONE;
        let expected = linalg::kron(&zero, &ComplexMatrix::identity(2, 2));
        assert!(max_abs_diff(&j.matrix, &expected) < 1e-15);
    }

    #[test]
    fn verify_identity_and_scaling() {
        let r = verify_cptp(&MapAsAction::identity(3)).unwrap();
        assert!(r.is_cp && r.is_tp);
        assert!(r.cp_defect < 1e-12 && r.tp_defect < 1e-12);

        let double = MapAsAction::new(2, 2, |x| x * Complex64::from(2.0));
        let r = verify_cptp(&double).unwrap();
        assert!(r.is_cp);
        assert!(!r.is_tp);
        assert!((r.tp_defect - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transpose_is_positive_but_not_completely_positive() {
        let transpose = MapAsAction::new(2, 2, |x| x.transpose());
        let r = verify_cptp(&transpose).unwrap();
        assert!(r.is_tp);
        assert!(!r.is_cp);
        assert!((r.cp_defect - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linearity_defect_detects_nonlinear_maps() {
        assert!(MapAsAction::identity(3).linearity_defect().unwrap() < 1e-12);
        let square = MapAsAction::new(2, 2, |x| x * x);
        assert!(square.linearity_defect().unwrap() > 1e-3);
    }

    #[test]
    fn partial_trace_of_product_and_bell_states() {
        let rho = PureState::normalized(vec![ONE, Complex64::new(0.3, 0.4)]).unwrap().to_density();
        let sigma = DensityMatrix::new(ComplexMatrix::from_row_slice(
            3,
            3,
            &[
                Complex64::from(0.5),
                Complex64::new(0.1, 0.1),
                ZERO,
                Complex64::new(0.1, -0.1),
                Complex64::from(0.3),
                ZERO,
                ZERO,
                ZERO,
                Complex64::from(0.2),
            ],
        ))
        .unwrap();
        let joint = rho.tensor(&sigma);
        let a = partial_trace(&joint, (2, 3), Keep::First).unwrap();
        let b = partial_trace(&joint, (2, 3), Keep::Second).unwrap();
        assert!(max_abs_diff(a.matrix(), rho.matrix()) < 1e-12);
        assert!(max_abs_diff(b.matrix(), sigma.matrix()) < 1e-12);
        assert!((a.trace() - 1.0).abs() < 1e-10);

        let h = 1.0 / 2f64.sqrt();
        let bell = PureState::new(vec![Complex64::from(h), ZERO, ZERO, Complex64::from(h)]).unwrap().to_density();
        for keep in [Keep::First, Keep::Second] {
            let r = partial_trace(&bell, (2, 2), keep).unwrap();
            assert!(max_abs_diff(r.matrix(), DensityMatrix::maximally_mixed(2).matrix()) < 1e-12);
        }

        assert!(partial_trace(&bell, (3, 2), Keep::First).is_err());
    }

    #[test]
    fn state_validation() {
        assert!(PureState::new(vec![ONE, ONE]).is_err());
        assert!(PureState::basis(3, 3).is_err());
        assert!(PureState::normalized(vec![ZERO, ZERO]).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::identity(2, 2)).is_err());
        let neg = ComplexMatrix::from_diagonal(&DVector::from_vec(vec![Complex64::from(1.5), Complex64::from(-0.5)]));
        assert!(DensityMatrix::new(neg).is_err());
    }
}
