//! Time scales generated by a clock: sampled tick trajectories, exact
//! first-tick distributions and exact register states for small step counts.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{partial_trace_matrix, DensityMatrix, Keep, PureState};
use crate::clocks::{QuantumClock, Stepper};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, ZERO};

/// Largest register count accepted by [`exact_register_state`].
pub const MAX_EXACT_REGISTERS: usize = 12;
/// Largest `d·2^N` accepted by [`exact_register_state`].
pub const MAX_EXACT_JOINT_DIM: usize = 1 << 14;

/// Tick steps (1-based, strictly increasing) within `1..=horizon`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickTrajectory {
    pub horizon: u64,
    pub tick_times: Vec<u64>,
}

/// Reproducible generator for substream `stream` of `seed`.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Sample the tick times of `clock` over `horizon` steps.
///
/// Uses substream 0 of `rng_seed`, the same stream player A uses in
/// [`crate::game::run_game`].
pub fn sample_trajectory(clock: &QuantumClock, horizon: u64, rng_seed: u64) -> Result<TickTrajectory> {
    if horizon == 0 {
        return Err(Error::invalid("horizon", "must be at least 1"));
    }
    let mut rng = seeded_rng(rng_seed, 0);
    let mut stepper = Stepper::new(clock);
    let mut tick_times = Vec::new();
    for step in 1..=horizon {
        if stepper.step(rng.random::<f64>())? {
            tick_times.push(step);
        }
    }
    Ok(TickTrajectory { horizon, tick_times })
}

/// Distribution of the step at which the first tick happens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaitingTimeDistribution {
    /// `pmf[n − 1]` is the probability that the first tick is at step `n`.
    pub pmf: Vec<f64>,
    /// Probability of no tick within the horizon.
    pub survival: f64,
}

impl WaitingTimeDistribution {
    pub fn horizon(&self) -> usize {
        self.pmf.len()
    }

    /// Probability of a first tick exactly at step `n` (0 outside the horizon).
    pub fn at(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.pmf.get(n - 1).copied().unwrap_or(0.0)
        }
    }

    /// Probability of a first tick strictly before step `n`.
    pub fn before(&self, n: usize) -> f64 {
        self.pmf.iter().take(n.saturating_sub(1)).sum()
    }

    /// `P(G > u)` including the unresolved tail; exact for `u ≤ horizon`.
    pub fn exceeds(&self) -> Vec<f64> {
        let h = self.pmf.len();
        let mut out = vec![0.0; h + 1];
        out[h] = self.survival;
        for u in (0..h).rev() {
            out[u] = out[u + 1] + self.pmf[u];
        }
        out
    }

    pub fn total(&self) -> f64 {
        self.pmf.iter().sum::<f64>() + self.survival
    }

    /// Mean of the first-tick step conditioned on ticking within the horizon.
    pub fn conditional_mean(&self) -> f64 {
        let mass: f64 = self.pmf.iter().sum();
        self.pmf.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum::<f64>() / mass
    }
}

/// Exact first-tick distribution from `source`: with `φ₀ = source`,
/// `w(n) = ‖√π₁ V φ_{n−1}‖²` and `φ_n = √π₀ V φ_{n−1}`.
pub fn waiting_time_pmf(clock: &QuantumClock, source: &PureState, horizon: usize) -> Result<WaitingTimeDistribution> {
    if source.dim() != clock.d() {
        return Err(Error::dims(clock.d(), source.dim()));
    }
    let mut phi: Vec<Complex64> = source.amplitudes().to_vec();
    let mut scratch = vec![ZERO; clock.scratch_len()];
    let mut pmf = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        clock.evolve(&mut phi, &mut scratch);
        let w = clock.instrument().tick_weight(&phi);
        pmf.push(if w < 0.0 { 0.0 } else { w });
        clock.collapse(false, &mut phi);
    }
    let survival = phi.iter().map(|a| a.norm_sqr()).sum();
    Ok(WaitingTimeDistribution { pmf, survival })
}

/// Exact state of the first `n` tick registers.
///
/// Tick registers written by an instrument are classical, so the state is
/// diagonal in the register basis; `probabilities[s]` is the weight of the
/// outcome string `s`, with `T₁` as the most significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct RegisterStateExact {
    pub n: usize,
    pub probabilities: Vec<f64>,
}

impl RegisterStateExact {
    /// The bits `t₁ … t_n` of string index `s`.
    pub fn outcome_bits(&self, s: usize) -> Vec<u8> {
        (0..self.n).map(|j| ((s >> (self.n - 1 - j)) & 1) as u8).collect()
    }

    pub fn probability_of(&self, bits: &[u8]) -> f64 {
        assert_eq!(bits.len(), self.n);
        let s = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        self.probabilities[s]
    }

    /// Dense `2^n × 2^n` density matrix on `T₁ ⊗ … ⊗ T_n`.
    pub fn to_density_matrix(&self) -> DensityMatrix {
        let diag = self.probabilities.iter().map(|&p| Complex64::from(p)).collect::<Vec<_>>();
        DensityMatrix::from_raw(ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)))
    }

    /// Trace out the last register.
    pub fn marginal(&self) -> Result<RegisterStateExact> {
        if self.n == 0 {
            return Err(Error::invalid("n", "no register left to trace out"));
        }
        let probabilities = self.probabilities.chunks(2).map(|pair| pair.iter().sum()).collect();
        Ok(RegisterStateExact { n: self.n - 1, probabilities })
    }
}

/// Register marginal of `∘_{j=1}^n M_{C→CT_j}(ρ⁰_C)`, built by propagating
/// the unnormalised clockwork operator attached to each outcome string.
pub fn exact_register_state(clock: &QuantumClock, n: usize) -> Result<RegisterStateExact> {
    let joint = clock.d().checked_shl(n as u32).unwrap_or(usize::MAX);
    if n > MAX_EXACT_REGISTERS || joint > MAX_EXACT_JOINT_DIM {
        return Err(Error::ResourceGuard(format!(
            "exact register state needs n <= {MAX_EXACT_REGISTERS} and d*2^n <= {MAX_EXACT_JOINT_DIM}, got n = {n}, d = {}",
            clock.d()
        )));
    }
    let mut branches: Vec<ComplexMatrix> = vec![clock.initial().to_density().into_matrix()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(branches.len() * 2);
        for rho in &branches {
            let (no_tick, tick) = clock.density_branches(rho);
            next.push(no_tick);
            next.push(tick);
        }
        branches = next;
    }
    let probabilities = branches.iter().map(|rho| linalg::trace(rho).re.max(0.0)).collect();
    Ok(RegisterStateExact { n, probabilities })
}

/// One application of the clock channel to `ρ_{C T₁…T_k}` (clockwork first),
/// appending a register. Dense and generic; only meant for small checks.
pub fn extend_joint_state(clock: &QuantumClock, joint: &ComplexMatrix, registers: usize) -> Result<ComplexMatrix> {
    let d = clock.d();
    let r = 1usize << registers;
    if joint.shape() != (d * r, d * r) {
        return Err(Error::dims(d * r, joint.nrows()));
    }
    let channel = clock.channel();
    // Φ ⊗ id on (C) ⊗ (T₁…T_k): expand over the register matrix units.
    let mut out = ComplexMatrix::zeros(2 * d * r, 2 * d * r);
    for a in 0..r {
        for b in 0..r {
            let block = ComplexMatrix::from_fn(d, d, |i, j| joint[(i * r + a, j * r + b)]);
            let image = channel.apply(&block)?;
            // image lives on C ⊗ T_new; the result is ordered C ⊗ T₁…T_k ⊗ T_new
            for i in 0..d {
                for j in 0..d {
                    for t in 0..2 {
                        for u in 0..2 {
                            out[((i * r + a) * 2 + t, (j * r + b) * 2 + u)] += image[(2 * i + t, 2 * j + u)];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `ρ^n_{T₁…T_n}` through the dense joint-state route of [`extend_joint_state`].
pub fn dense_register_state(clock: &QuantumClock, n: usize) -> Result<DensityMatrix> {
    let d = clock.d();
    if (d << n) > 256 {
        return Err(Error::ResourceGuard(format!("dense joint state of dimension {} is too large", d << n)));
    }
    let mut joint = clock.initial().to_density().into_matrix();
    for k in 0..n {
        joint = extend_joint_state(clock, &joint, k)?;
    }
    partial_trace_matrix(&joint, (d, 1 << n), Keep::Second).map(DensityMatrix::from_raw)
}
