//! Clock constructors and single-step semantics.
//!
//! One step of a clock is `M = M^meas ∘ M^int`: the clockwork is rotated by
//! the internal unitary `V`, then probed by a binary instrument `(π₀, π₁)`.
//! On "no tick" the clockwork is updated to `√π₀ V ρ V† √π₀`; on "tick" it is
//! either reset to a fixed state or, with reset disabled, updated
//! projectively to `√π₁ V ρ V† √π₁`.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::channels::{DensityMatrix, MapAsAction, PureState};
use crate::error::{Error, Result};
use crate::linalg::{self, dft_unitary, psd_sqrt, unitary_from_phases, ComplexMatrix, FourierDiagonal, ONE, TOL, ZERO};

/// From this dimension upward Fourier-diagonal unitaries are applied by FFT.
const FFT_MIN_DIM: usize = 24;

/// What happens to the clockwork when the instrument reports a tick.
#[derive(Debug, Clone, PartialEq)]
pub enum Reset {
    /// Projective update `√π₁ ρ √π₁` (normalised).
    Disabled,
    /// Jump to a fixed pure state.
    To(PureState),
}

#[derive(Debug, Clone)]
enum PovmKind {
    /// `π₁` is diagonal in the computational basis; holds its diagonal.
    Diagonal(Vec<f64>),
    Dense,
}

/// Binary tick instrument `(π₀, π₁)` with its reset rule.
#[derive(Debug, Clone)]
pub struct TickInstrument {
    pi0: ComplexMatrix,
    pi1: ComplexMatrix,
    sqrt_pi0: ComplexMatrix,
    sqrt_pi1: ComplexMatrix,
    reset: Reset,
    kind: PovmKind,
}

impl TickInstrument {
    /// Instrument with `π₀ = id − π₁`.
    pub fn new(pi1: ComplexMatrix, reset: Reset) -> Result<Self> {
        if !pi1.is_square() {
            return Err(Error::dims("square pi1", format!("{}x{}", pi1.nrows(), pi1.ncols())));
        }
        let d = pi1.nrows();
        let pi0 = ComplexMatrix::identity(d, d) - &pi1;
        Self::from_pair(pi0, pi1, reset)
    }

    pub fn from_pair(pi0: ComplexMatrix, pi1: ComplexMatrix, reset: Reset) -> Result<Self> {
        if pi0.shape() != pi1.shape() || !pi0.is_square() {
            return Err(Error::dims(format!("{:?}", pi0.shape()), format!("{:?}", pi1.shape())));
        }
        let d = pi0.nrows();
        let sum_defect = linalg::max_abs_diff(&(&pi0 + &pi1), &ComplexMatrix::identity(d, d));
        if sum_defect > TOL.povm {
            return Err(Error::invalid("instrument", format!("pi0 + pi1 differs from identity by {sum_defect:.3e}")));
        }
        let sqrt_pi0 = psd_sqrt(&pi0).map_err(|_| Error::invalid("pi0", "must be positive semidefinite"))?;
        let sqrt_pi1 = psd_sqrt(&pi1).map_err(|_| Error::invalid("pi1", "must be positive semidefinite"))?;
        if let Reset::To(state) = &reset {
            if state.dim() != d {
                return Err(Error::dims(format!("reset state of dimension {d}"), state.dim()));
            }
        }
        let off_diagonal = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).filter(|(i, j)| i != j).any(|(i, j)| pi1[(i, j)].norm() > 0.0);
        let kind = if off_diagonal { PovmKind::Dense } else { PovmKind::Diagonal((0..d).map(|j| pi1[(j, j)].re).collect()) };
        Ok(Self { pi0, pi1, sqrt_pi0, sqrt_pi1, reset, kind })
    }

    pub fn dim(&self) -> usize {
        self.pi0.nrows()
    }

    pub fn pi0(&self) -> &ComplexMatrix {
        &self.pi0
    }

    pub fn pi1(&self) -> &ComplexMatrix {
        &self.pi1
    }

    pub fn sqrt_pi0(&self) -> &ComplexMatrix {
        &self.sqrt_pi0
    }

    pub fn sqrt_pi1(&self) -> &ComplexMatrix {
        &self.sqrt_pi1
    }

    pub fn reset(&self) -> &Reset {
        &self.reset
    }

    /// `⟨ψ|π₁|ψ⟩` for an unnormalised vector.
    pub fn tick_weight(&self, psi: &[Complex64]) -> f64 {
        match &self.kind {
            PovmKind::Diagonal(p) => psi.iter().zip(p).map(|(a, w)| w * a.norm_sqr()).sum(),
            PovmKind::Dense => {
                let v = DVector::from_column_slice(psi);
                (v.adjoint() * &self.pi1 * &v)[(0, 0)].re
            }
        }
    }

    /// `⟨ψ|π₀|ψ⟩` for an unnormalised vector.
    pub fn no_tick_weight(&self, psi: &[Complex64]) -> f64 {
        match &self.kind {
            PovmKind::Diagonal(p) => psi.iter().zip(p).map(|(a, w)| (1.0 - w) * a.norm_sqr()).sum(),
            PovmKind::Dense => {
                let v = DVector::from_column_slice(psi);
                (v.adjoint() * &self.pi0 * &v)[(0, 0)].re
            }
        }
    }

    /// In-place `ψ ← √π_outcome ψ`.
    fn apply_sqrt(&self, tick: bool, psi: &mut [Complex64]) {
        match &self.kind {
            PovmKind::Diagonal(p) => {
                for (a, w) in psi.iter_mut().zip(p) {
                    let w = if tick { *w } else { 1.0 - w };
                    *a *= w.max(0.0).sqrt();
                }
            }
            PovmKind::Dense => {
                let m = if tick { &self.sqrt_pi1 } else { &self.sqrt_pi0 };
                let out = m * DVector::from_column_slice(psi);
                psi.copy_from_slice(out.as_slice());
            }
        }
    }

    /// Unnormalised branches `(√π₀ ρ √π₀, tick branch)` for a density operator
    /// that has already been rotated by the internal unitary.
    pub fn branches(&self, rho: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
        let no_tick = &self.sqrt_pi0 * rho * &self.sqrt_pi0;
        let tick = match &self.reset {
            Reset::Disabled => &self.sqrt_pi1 * rho * &self.sqrt_pi1,
            Reset::To(state) => {
                // keep the imaginary part: the map must stay linear on non-Hermitian inputs
                state.to_density().into_matrix() * linalg::trace(&(&self.pi1 * rho))
            }
        };
        (no_tick, tick)
    }
}

/// The internal unitary, with an FFT fast path when it is diagonal in the
/// Fourier basis.
#[derive(Debug, Clone)]
struct InternalUnitary {
    dense: ComplexMatrix,
    fourier: Option<FourierDiagonal>,
}

impl InternalUnitary {
    fn from_fourier_phases(phases: &[f64], theta: f64) -> Result<Self> {
        let d = phases.len();
        let dense = unitary_from_phases(&dft_unitary(d)?, phases, theta)?;
        let fourier = (d >= FFT_MIN_DIM).then(|| FourierDiagonal::from_phases(phases, theta));
        Ok(Self { dense, fourier })
    }

    fn scratch_len(&self) -> usize {
        self.fourier.as_ref().map_or(self.dense.nrows(), |f| f.scratch_len().max(self.dense.nrows()))
    }

    fn apply(&self, psi: &mut [Complex64], scratch: &mut [Complex64]) {
        match &self.fourier {
            Some(f) => f.apply(psi, scratch),
            None => {
                let d = psi.len();
                let out = &mut scratch[..d];
                out.fill(ZERO);
                // column-major storage: accumulate whole columns
                for (col, &x) in self.dense.as_slice().chunks_exact(d).zip(psi.iter()) {
                    for (o, a) in out.iter_mut().zip(col) {
                        *o += a * x;
                    }
                }
                psi.copy_from_slice(out);
            }
        }
    }
}

/// A clock: initial clockwork state, internal unitary and tick instrument.
#[derive(Debug, Clone)]
pub struct QuantumClock {
    d: usize,
    initial: PureState,
    v_int: InternalUnitary,
    instrument: TickInstrument,
    label: String,
    theta: f64,
    delta: f64,
}

/// One branch of a clock step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub tick: bool,
    pub probability: f64,
    /// `None` when the branch has probability zero and the projective
    /// update is undefined.
    pub post_state: Option<PureState>,
}

impl QuantumClock {
    /// Clock from explicit parts. `theta` and `delta` are descriptive only.
    pub fn new(initial: PureState, v_int: ComplexMatrix, instrument: TickInstrument, label: impl Into<String>, theta: f64, delta: f64) -> Result<Self> {
        let d = initial.dim();
        if v_int.shape() != (d, d) || instrument.dim() != d {
            return Err(Error::dims(
                format!("clockwork dimension {d}"),
                format!("v_int {}x{}, instrument {}", v_int.nrows(), v_int.ncols(), instrument.dim()),
            ));
        }
        let defect = linalg::unitarity_defect(&v_int);
        if defect > TOL.unitary {
            return Err(Error::invalid("v_int", format!("not unitary (defect {defect:.3e})")));
        }
        Ok(Self { d, initial, v_int: InternalUnitary { dense: v_int, fourier: None }, instrument, label: label.into(), theta, delta })
    }

    /// Same mechanism, different starting state.
    pub fn with_initial(&self, initial: PureState) -> Result<Self> {
        if initial.dim() != self.d {
            return Err(Error::dims(self.d, initial.dim()));
        }
        Ok(Self { initial, ..self.clone() })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn initial(&self) -> &PureState {
        &self.initial
    }

    pub fn v_int(&self) -> &ComplexMatrix {
        &self.v_int.dense
    }

    pub fn instrument(&self) -> &TickInstrument {
        &self.instrument
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub(crate) fn scratch_len(&self) -> usize {
        self.v_int.scratch_len()
    }

    /// In-place `ψ ← Vψ`; `scratch` must hold at least `scratch_len()` entries.
    pub(crate) fn evolve(&self, psi: &mut [Complex64], scratch: &mut [Complex64]) {
        self.v_int.apply(psi, scratch)
    }

    pub(crate) fn collapse(&self, tick: bool, psi: &mut [Complex64]) {
        self.instrument.apply_sqrt(tick, psi);
    }

    fn check_state(&self, state: &PureState) -> Result<()> {
        if state.dim() != self.d {
            return Err(Error::dims(self.d, state.dim()));
        }
        Ok(())
    }

    fn rotated(&self, state: &PureState) -> Vec<Complex64> {
        let mut psi = state.amplitudes().to_vec();
        let mut scratch = vec![ZERO; self.scratch_len()];
        self.evolve(&mut psi, &mut scratch);
        psi
    }

    /// Both branches of one step from `state`: `(no tick, tick)`.
    pub fn step_both(&self, state: &PureState) -> Result<(StepOutcome, StepOutcome)> {
        self.check_state(state)?;
        let psi = self.rotated(state);
        let p1 = self.instrument.tick_weight(&psi).clamp(0.0, 1.0);
        let p0 = self.instrument.no_tick_weight(&psi).clamp(0.0, 1.0);
        if p0 < TOL.degenerate_probability && p1 < TOL.degenerate_probability {
            return Err(Error::Degenerate("both branch probabilities vanish".into()));
        }
        let branch = |tick: bool, probability: f64| -> StepOutcome {
            let post_state = match (&self.instrument.reset, tick) {
                (Reset::To(reset), true) => Some(reset.clone()),
                _ => {
                    let mut v = psi.clone();
                    self.collapse(tick, &mut v);
                    PureState::normalized(v).ok()
                }
            };
            StepOutcome { tick, probability, post_state }
        };
        Ok((branch(false, p0), branch(true, p1)))
    }

    /// A single branch of one step.
    pub fn step_outcome(&self, state: &PureState, tick: bool) -> Result<StepOutcome> {
        let (no, yes) = self.step_both(state)?;
        Ok(if tick { yes } else { no })
    }

    /// `tr(π₁ V ρ V†)` for the clock's initial state.
    pub fn first_step_tick_probability(&self) -> f64 {
        self.instrument.tick_weight(&self.rotated(&self.initial))
    }

    /// State the clockwork is in right after any tick, if that is fixed.
    pub fn renewal_state(&self) -> Result<PureState> {
        match &self.instrument.reset {
            Reset::To(state) => Ok(state.clone()),
            Reset::Disabled => {
                let eig = linalg::herm_eigendecompose(&self.instrument.pi1)?;
                let rank = eig.eigenvalues.iter().filter(|l| **l > TOL.psd).count();
                if rank != 1 {
                    return Err(Error::NoRenewal(format!(
                        "reset disabled and pi1 has rank {rank}, so the post-tick state depends on the history"
                    )));
                }
                let top = eig.eigenvectors.column(self.d - 1).iter().copied().collect();
                PureState::normalized(top)
            }
        }
    }

    /// Unnormalised `(no tick, tick)` clockwork branches for a density operator.
    pub fn density_branches(&self, rho: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
        let v = &self.v_int.dense;
        self.instrument.branches(&(v * rho * v.adjoint()))
    }

    /// The full channel `C → C ⊗ T`, with the clockwork as the first factor.
    pub fn channel(&self) -> MapAsAction {
        let clock = self.clone();
        let d = self.d;
        MapAsAction::new(d, 2 * d, move |rho| {
            let (no_tick, tick) = clock.density_branches(rho);
            let mut out = ComplexMatrix::zeros(2 * d, 2 * d);
            for r in 0..d {
                for c in 0..d {
                    out[(2 * r, 2 * c)] = no_tick[(r, c)];
                    out[(2 * r + 1, 2 * c + 1)] = tick[(r, c)];
                }
            }
            out
        })
    }

    /// Joint clockwork-and-register state after one step from `rho`.
    pub fn apply_channel(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.channel().apply(rho.matrix()).map(DensityMatrix::from_raw)
    }
}

/// In-place Monte Carlo stepping of a pure clockwork state.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    clock: &'a QuantumClock,
    psi: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl<'a> Stepper<'a> {
    pub fn new(clock: &'a QuantumClock) -> Self {
        Self::from_state(clock, clock.initial())
    }

    pub fn from_state(clock: &'a QuantumClock, state: &PureState) -> Self {
        Self { clock, psi: state.amplitudes().to_vec(), scratch: vec![ZERO; clock.scratch_len()] }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.psi
    }

    /// Advance one step; `u` is a uniform draw in `[0, 1)` and the step ticks
    /// iff `u < p_tick`.
    pub fn step(&mut self, u: f64) -> Result<bool> {
        self.clock.evolve(&mut self.psi, &mut self.scratch);
        let p1 = self.clock.instrument.tick_weight(&self.psi);
        let tick = u < p1;
        match (&self.clock.instrument.reset, tick) {
            (Reset::To(state), true) => self.psi.copy_from_slice(state.amplitudes()),
            _ => {
                self.clock.collapse(tick, &mut self.psi);
                let norm = self.psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                if norm * norm < TOL.degenerate_probability {
                    return Err(Error::Degenerate(format!("branch with tick={tick} has vanishing norm")));
                }
                for a in &mut self.psi {
                    *a /= norm;
                }
            }
        }
        Ok(tick)
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::invalid("theta", format!("must be a finite number > 0, got {theta}")));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid("delta", format!("must lie in (0, 1], got {delta}")));
    }
    Ok(())
}

/// Number of top levels probed by the band instrument: `⌈d/10⌉`.
pub fn band_width(d: usize) -> usize {
    d.div_ceil(10)
}

/// `π₁ = δ·Σ_{j=d−d₀}^{d−1} |j⟩⟨j|` with `d₀ = ⌈d/10⌉`, reset to `|0⟩`.
fn band_instrument(d: usize, delta: f64) -> Result<TickInstrument> {
    let d0 = band_width(d);
    let mut pi1 = ComplexMatrix::zeros(d, d);
    for j in d - d0..d {
        pi1[(j, j)] = Complex64::from(delta);
    }
    TickInstrument::new(pi1, Reset::To(PureState::basis(d, 0)?))
}

/// Eigenphases of `H_P = i ln U_P` on Fourier column `m`: `−2πm/d`.
pub fn shift_hamiltonian_phases(d: usize) -> Vec<f64> {
    (0..d).map(|m| -2.0 * PI * m as f64 / d as f64).collect()
}

/// Eigenphases of `H_S = U_P + U_P†` on Fourier column `m`: `2cos(2πm/d)`.
pub fn ladder_hamiltonian_phases(d: usize) -> Vec<f64> {
    (0..d).map(|m| 2.0 * (2.0 * PI * m as f64 / d as f64).cos()).collect()
}

/// Shift eigenphases with frequencies folded into `(−d/2, d/2]`, so that
/// `exp(−iHν)` translates smooth wavepackets by `ν` sites.
pub fn centered_shift_phases(d: usize) -> Vec<f64> {
    (0..d)
        .map(|m| {
            let m = if 2 * m > d { m as f64 - d as f64 } else { m as f64 };
            -2.0 * PI * m / d as f64
        })
        .collect()
}

/// Two-level clock whose internal map is a NOT and whose instrument is the
/// projective measurement `{|0⟩⟨0|, |1⟩⟨1|}`.
pub fn not_clock(start: u8) -> Result<QuantumClock> {
    if start > 1 {
        return Err(Error::invalid("start", format!("must be 0 or 1, got {start}")));
    }
    let x = ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    let mut pi1 = ComplexMatrix::zeros(2, 2);
    pi1[(1, 1)] = ONE;
    let instrument = TickInstrument::new(pi1, Reset::Disabled)?;
    QuantumClock::new(PureState::basis(2, start as usize)?, x, instrument, "not", 1.0, 1.0)
}

fn fourier_clock(label: &str, phases: Vec<f64>, d: usize, theta: f64, delta: f64, initial_index: usize) -> Result<QuantumClock> {
    if d < 2 {
        return Err(Error::invalid("d", format!("must be at least 2, got {d}")));
    }
    check_theta(theta)?;
    check_delta(delta)?;
    let initial = PureState::basis(d, initial_index)?;
    let v_int = InternalUnitary::from_fourier_phases(&phases, theta)?;
    Ok(QuantumClock { d, initial, v_int, instrument: band_instrument(d, delta)?, label: label.into(), theta, delta })
}

/// Cyclic-shift clock: `V = exp(−i H_P θ)` with `H_P = i ln U_P`.
pub fn peres_clock(d: usize, theta: f64, delta: f64, initial_index: usize) -> Result<QuantumClock> {
    fourier_clock("peres", shift_hamiltonian_phases(d), d, theta, delta, initial_index)
}

/// Nearest-neighbour clock: `V = exp(−i H_S θ)` with `H_S = U_P + U_P†`.
pub fn ladder_clock(d: usize, theta: f64, delta: f64, initial_index: usize) -> Result<QuantumClock> {
    fourier_clock("ladder", ladder_hamiltonian_phases(d), d, theta, delta, initial_index)
}

/// Sites within `width` of `center`, clipped to `0..d`.
pub fn window(d: usize, center: usize, width: usize) -> std::ops::RangeInclusive<usize> {
    center.saturating_sub(width)..=(center + width).min(d - 1)
}

/// Discrete Gaussian with `|ψ(c)|²` of standard deviation `width/2`,
/// supported on `0..=width`.
pub fn wavepacket_state(d: usize, width: usize) -> Result<PureState> {
    let sigma = width as f64 / 2.0;
    let mut amplitudes = vec![ZERO; d];
    for c in window(d, 0, width) {
        amplitudes[c] = Complex64::from((-(c as f64).powi(2) / (4.0 * sigma * sigma)).exp());
    }
    PureState::normalized(amplitudes)
}

/// Wavepacket clock: a packet of breadth `width` starting at site 0 moves by
/// `speed` sites per step, ticks with strength `delta` within `width` of the
/// last site, and is reset to its initial shape on a tick.
pub fn wavepacket_clock(d: usize, width: usize, speed: f64, delta: f64) -> Result<QuantumClock> {
    if width < 1 {
        return Err(Error::invalid("width", "must be at least 1"));
    }
    if 2 * width + 2 > d {
        return Err(Error::invalid("d", format!("need 2*width + 2 <= d, got width {width} and d {d}")));
    }
    if !(speed > 0.0 && speed < 1.0) {
        return Err(Error::invalid("speed", format!("must lie in (0, 1), got {speed}")));
    }
    check_delta(delta)?;
    let initial = wavepacket_state(d, width)?;
    let mut pi1 = ComplexMatrix::zeros(d, d);
    for c in window(d, d - 1, width) {
        pi1[(c, c)] = Complex64::from(delta);
    }
    let overlap: f64 = window(d, 0, width).map(|c| pi1[(c, c)].re).sum();
    if overlap > 0.0 {
        return Err(Error::invalid("width", "initial window overlaps the tick window"));
    }
    let instrument = TickInstrument::new(pi1, Reset::To(initial.clone()))?;
    let v_int = InternalUnitary::from_fourier_phases(&centered_shift_phases(d), speed)?;
    Ok(QuantumClock { d, initial, v_int, instrument, label: "wavepacket".into(), theta: speed, delta })
}
