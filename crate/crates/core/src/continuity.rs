//! How close one clock step, with the tick register discarded, is to doing
//! nothing; and what that buys when the register supply is unreliable.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{choi_of, partial_trace_matrix, Keep, MapAsAction};
use crate::clocks::{QuantumClock, Reset};
use crate::error::{Error, Result};
use crate::linalg::{kron, trace_norm, ComplexMatrix, ONE, ZERO};
use crate::trajectories::seeded_rng;

/// Largest Choi dimension `d²` handled by [`continuity_bounds`].
pub const MAX_CHOI_DIM: usize = 256;

/// Bounds on `‖tr_T ∘ M − id‖◇` for one clock step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub lower: f64,
    pub upper: f64,
    pub d: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub p: f64,
    pub epsilon: f64,
    pub measured_distance: f64,
    /// `2·N·p·ε²`.
    pub bound: f64,
}

/// The clock step with the register traced out:
/// `ρ ↦ √π₀VρV†√π₀ + (tick branch)`.
pub fn restricted_map(clock: &QuantumClock) -> MapAsAction {
    let clock = clock.clone();
    let d = clock.d();
    MapAsAction::new(d, d, move |rho| {
        let (no_tick, tick) = clock.density_branches(rho);
        no_tick + tick
    })
}

/// `‖J‖₁/d ≤ ‖Φ‖◇ ≤ ‖J‖₁` for `Φ = tr_T ∘ M − id` and `J` its Choi matrix.
pub fn continuity_bounds(clock: &QuantumClock) -> Result<ContinuityReport> {
    let d = clock.d();
    if d * d > MAX_CHOI_DIM {
        return Err(Error::ResourceGuard(format!("continuity bounds need d^2 <= {MAX_CHOI_DIM}, got d = {d}")));
    }
    let phi = restricted_map(clock).minus(&MapAsAction::identity(d))?;
    let j = choi_of(&phi)?;
    let norm = trace_norm(&j.matrix)?;
    Ok(ContinuityReport { lower: norm / d as f64, upper: norm, d })
}

/// How the failure patterns of the gear experiment are averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GearAveraging {
    /// Exact average over all `2^N` patterns.
    Exact,
    /// Mean over `trials` sampled patterns.
    Sampled { trials: usize, seed: u64 },
}

/// Kraus operators of a dilation `U` on clockwork ⊗ register (clockwork
/// first) with `U(ρ ⊗ |0⟩⟨0|) = M(ρ)`.
///
/// `U = R ∘ W ∘ (V ⊗ id)`, where the unitary
/// `W = √π₀ ⊗ id + √π₁ ⊗ (|1⟩⟨0| − |0⟩⟨1|)` writes the instrument outcome
/// into the register and `R` applies the reset rule on the `|1⟩` branch.
pub fn register_dilation(clock: &QuantumClock) -> Vec<ComplexMatrix> {
    let d = clock.d();
    let id_d = ComplexMatrix::identity(d, d);
    let id_t = ComplexMatrix::identity(2, 2);
    let proj = |t: usize| crate::channels::matrix_unit(2, t, t);
    let flip = ComplexMatrix::from_row_slice(2, 2, &[ZERO, -ONE, ONE, ZERO]);
    let inst = clock.instrument();
    let w = kron(inst.sqrt_pi0(), &id_t) + kron(inst.sqrt_pi1(), &flip);
    let front = w * kron(clock.v_int(), &id_t);

    let mut out = vec![kron(&id_d, &proj(0)) * &front];
    match inst.reset() {
        Reset::Disabled => out.push(kron(&id_d, &proj(1)) * &front),
        Reset::To(r) => {
            let r = r.to_vector();
            for j in 0..d {
                let mut k = ComplexMatrix::zeros(d, d);
                k.set_column(j, &r);
                out.push(kron(&k, &proj(1)) * &front);
            }
        }
    }
    out
}

struct Gear {
    d: usize,
    kraus: Vec<ComplexMatrix>,
    fresh: ComplexMatrix,
}

impl Gear {
    fn new(clock: &QuantumClock) -> Self {
        let mut fresh = ComplexMatrix::zeros(2, 2);
        fresh[(0, 0)] = ONE;
        Self { d: clock.d(), kraus: register_dilation(clock), fresh }
    }

    fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.kraus.iter().fold(ComplexMatrix::zeros(2 * self.d, 2 * self.d), |acc, k| acc + k * x * k.adjoint())
    }

    fn clockwork(&self, x: &ComplexMatrix) -> ComplexMatrix {
        partial_trace_matrix(x, (self.d, 2), Keep::First).expect("joint state has clockwork-register shape")
    }

    /// Joint state after a gap that delivers a fresh register.
    fn refreshed(&self, x: &ComplexMatrix) -> ComplexMatrix {
        kron(&self.clockwork(x), &self.fresh)
    }

    /// Joint state after `1 + failures.len()` steps; `failures[k]` says
    /// whether gap `k` reused the previous register.
    fn run(&self, rho: &ComplexMatrix, failures: impl IntoIterator<Item = bool>) -> ComplexMatrix {
        let mut x = self.apply(&kron(rho, &self.fresh));
        for failed in failures {
            let input = if failed { x.clone() } else { self.refreshed(&x) };
            x = self.apply(&input);
        }
        x
    }
}

/// Largest `N` for [`GearAveraging::Sampled`] trial lengths and the exact
/// recursion alike; both cost `O(N)` small matrix products per pattern.
pub const MAX_GEAR_STEPS: usize = 1 << 20;

/// Compares `N + 1` clock steps with fresh registers against the same steps
/// when each of the `N` gaps independently (probability `p`) fails to supply
/// a fresh register, so the dilation acts again on the used one.
pub fn gear_failure_experiment(clock: &QuantumClock, n: usize, p: f64, averaging: GearAveraging) -> Result<RobustnessReport> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p", format!("must lie in [0, 1], got {p}")));
    }
    if n > MAX_GEAR_STEPS {
        return Err(Error::ResourceGuard(format!("gear experiment needs N <= {MAX_GEAR_STEPS}, got {n}")));
    }
    let epsilon = continuity_bounds(clock)?.upper;
    let gear = Gear::new(clock);
    let rho = clock.initial().to_density().into_matrix();

    let ideal = gear.clockwork(&gear.run(&rho, std::iter::repeat_n(false, n)));
    let averaged = match averaging {
        GearAveraging::Exact => {
            // the average over patterns is linear, so it can be carried step by step
            let mut x = gear.apply(&kron(&rho, &gear.fresh));
            let (keep, fail) = (ONE * (1.0 - p), ONE * p);
            for _ in 0..n {
                let mixed = gear.refreshed(&x) * keep + &x * fail;
                x = gear.apply(&mixed);
            }
            gear.clockwork(&x)
        }
        GearAveraging::Sampled { trials, seed } => {
            if trials == 0 {
                return Err(Error::invalid("trials", "must be at least 1"));
            }
            let states: Vec<ComplexMatrix> = (0..trials)
                .into_par_iter()
                .map(|i| {
                    let mut rng = seeded_rng(seed, i as u64);
                    let pattern: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < p).collect();
                    gear.clockwork(&gear.run(&rho, pattern))
                })
                .collect();
            let sum = states.iter().fold(ComplexMatrix::zeros(gear.d, gear.d), |acc, s| acc + s);
            sum / ONE.scale(trials as f64)
        }
    };
    let measured_distance = trace_norm(&(&ideal - &averaged))?;
    Ok(RobustnessReport { n, p, epsilon, measured_distance, bound: 2.0 * n as f64 * p * epsilon * epsilon })
}

/// Exact average over all `2^N` failure patterns, weighted by their
/// probabilities. Exponential; kept for cross-checks.
pub fn gear_average_by_enumeration(clock: &QuantumClock, n: usize, p: f64) -> Result<ComplexMatrix> {
    if n > 16 {
        return Err(Error::ResourceGuard(format!("pattern enumeration needs N <= 16, got {n}")));
    }
    let gear = Gear::new(clock);
    let rho = clock.initial().to_density().into_matrix();
    let mut acc = ComplexMatrix::zeros(gear.d, gear.d);
    for mask in 0u32..(1 << n) {
        let failures: Vec<bool> = (0..n).map(|k| mask >> k & 1 == 1).collect();
        let count = failures.iter().filter(|f| **f).count() as i32;
        let weight = p.powi(count) * (1.0 - p).powi(n as i32 - count);
        if weight == 0.0 {
            continue;
        }
        acc += gear.clockwork(&gear.run(&rho, failures)) * ONE.scale(weight);
    }
    Ok(acc)
}

/// Clockwork state after `steps` applications of the clock with fresh
/// registers, through the dilation.
pub fn dilated_clockwork_state(clock: &QuantumClock, steps: usize) -> ComplexMatrix {
    let gear = Gear::new(clock);
    let rho = clock.initial().to_density().into_matrix();
    if steps == 0 {
        return rho;
    }
    gear.clockwork(&gear.run(&rho, std::iter::repeat_n(false, steps - 1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{verify_cptp, DensityMatrix, PureState};
    use crate::clocks::{ladder_clock, not_clock, peres_clock, wavepacket_clock, TickInstrument};
    use crate::linalg::max_abs_diff;
    use num_complex::Complex64;

    fn idle_clock(d: usize) -> QuantumClock {
        let inst = TickInstrument::new(ComplexMatrix::zeros(d, d), Reset::To(PureState::basis(d, 0).unwrap())).unwrap();
        QuantumClock::new(PureState::basis(d, 0).unwrap(), ComplexMatrix::identity(d, d), inst, "idle", 1.0, 0.0).unwrap()
    }

    #[test]
    fn idle_clock_is_exactly_continuous() {
        let r = continuity_bounds(&idle_clock(3)).unwrap();
        assert!(r.lower.abs() < 1e-12 && r.upper.abs() < 1e-12);
    }

    #[test]
    fn not_clock_is_maximally_discontinuous() {
        let r = continuity_bounds(&not_clock(0).unwrap()).unwrap();
        assert!((r.lower - 2.0).abs() < 1e-9, "{r:?}");
        assert!((r.upper - 4.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn not_restricted_map_is_dephased_flip() {
        let clock = not_clock(0).unwrap();
        let map = restricted_map(&clock);
        let x = clock.v_int().clone();
        let rho = ComplexMatrix::from_row_slice(2, 2, &[ONE * 0.3, Complex64::new(0.1, 0.2), Complex64::new(0.1, -0.2), ONE * 0.7]);
        let expected = {
            let flipped = &x * &rho * &x;
            let mut out = ComplexMatrix::zeros(2, 2);
            out[(0, 0)] = flipped[(0, 0)];
            out[(1, 1)] = flipped[(1, 1)];
            out
        };
        assert!(max_abs_diff(&map.apply(&rho).unwrap(), &expected) < 1e-14);
    }

    #[test]
    fn restricted_map_is_partial_trace_of_channel() {
        for clock in [ladder_clock(3, 0.4, 0.3, 1).unwrap(), not_clock(1).unwrap(), peres_clock(4, 0.2, 0.7, 0).unwrap()] {
            let d = clock.d();
            let rho = DensityMatrix::maximally_mixed(d).into_matrix() * ONE.scale(0.5) + clock.initial().to_density().into_matrix() * ONE.scale(0.5);
            let joint = clock.channel().apply(&rho).unwrap();
            let traced = partial_trace_matrix(&joint, (d, 2), Keep::First).unwrap();
            assert!(max_abs_diff(&traced, &restricted_map(&clock).apply(&rho).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn restricted_maps_are_channels() {
        let clocks = [
            not_clock(0).unwrap(),
            peres_clock(5, 0.3, 0.2, 0).unwrap(),
            ladder_clock(6, 1.0, 0.5, 2).unwrap(),
            wavepacket_clock(16, 2, 0.5, 0.1).unwrap(),
        ];
        for clock in &clocks {
            let report = verify_cptp(&restricted_map(clock)).unwrap();
            assert!(report.is_cp && report.tp_defect <= 1e-9, "{}: {report:?}", clock.label());
        }
    }

    #[test]
    fn bounds_are_ordered_and_shrink() {
        let mut last = f64::INFINITY;
        for s in [0.1, 0.05, 0.01] {
            let r = continuity_bounds(&peres_clock(4, s, s, 0).unwrap()).unwrap();
            assert!(r.lower <= r.upper);
            assert!(r.upper < last, "{s}: {r:?}");
            last = r.upper;
        }
        assert!(last < 0.2);
    }

    #[test]
    fn continuity_guard() {
        let clock = peres_clock(17, 0.1, 0.1, 0).unwrap();
        assert!(matches!(continuity_bounds(&clock), Err(Error::ResourceGuard(_))));
    }

    #[test]
    fn dilation_reproduces_the_clock() {
        for clock in [peres_clock(4, 0.3, 0.4, 1).unwrap(), not_clock(0).unwrap(), ladder_clock(3, 0.5, 0.6, 0).unwrap()] {
            let u = MapAsAction::from_kraus(register_dilation(&clock)).unwrap();
            assert!(verify_cptp(&u).unwrap().is_tp);
            let rho = clock.initial().to_density().into_matrix();
            let mut fresh = ComplexMatrix::zeros(2, 2);
            fresh[(0, 0)] = ONE;
            let via_dilation = u.apply(&kron(&rho, &fresh)).unwrap();
            let direct = clock.channel().apply(&rho).unwrap();
            assert!(max_abs_diff(&via_dilation, &direct) < 1e-12, "{}", clock.label());
        }
    }

    #[test]
    fn dilated_steps_follow_restricted_map() {
        let clock = peres_clock(4, 0.5, 0.4, 0).unwrap();
        let map = restricted_map(&clock);
        let mut rho = clock.initial().to_density().into_matrix();
        for _ in 0..5 {
            rho = map.apply(&rho).unwrap();
        }
        assert!(max_abs_diff(&rho, &dilated_clockwork_state(&clock, 5)) < 1e-12);
    }

    #[test]
    fn no_failures_no_distance() {
        let clock = peres_clock(4, 0.05, 0.05, 0).unwrap();
        let r = gear_failure_experiment(&clock, 10, 0.0, GearAveraging::Exact).unwrap();
        assert!(r.measured_distance.abs() < 1e-12);
        assert_eq!(r.bound, 0.0);
    }

    #[test]
    fn exact_average_matches_pattern_enumeration() {
        let clock = peres_clock(4, 0.3, 0.2, 0).unwrap();
        for p in [0.0, 0.25, 0.8, 1.0] {
            let n = 6;
            let oracle = gear_average_by_enumeration(&clock, n, p).unwrap();
            let gear = Gear::new(&clock);
            let rho = clock.initial().to_density().into_matrix();
            let ideal = gear.clockwork(&gear.run(&rho, std::iter::repeat_n(false, n)));
            let r = gear_failure_experiment(&clock, n, p, GearAveraging::Exact).unwrap();
            let d = trace_norm(&(&ideal - &oracle)).unwrap();
            assert!((d - r.measured_distance).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn sampled_average_approaches_exact() {
        let clock = peres_clock(4, 0.3, 0.2, 0).unwrap();
        let exact = gear_failure_experiment(&clock, 5, 0.5, GearAveraging::Exact).unwrap();
        let sampled = gear_failure_experiment(&clock, 5, 0.5, GearAveraging::Sampled { trials: 4000, seed: 5 }).unwrap();
        assert!((exact.measured_distance - sampled.measured_distance).abs() < 0.02, "{exact:?} {sampled:?}");
        let again = gear_failure_experiment(&clock, 5, 0.5, GearAveraging::Sampled { trials: 4000, seed: 5 }).unwrap();
        assert_eq!(sampled, again);
    }

    #[test]
    fn gear_bound_holds_on_small_grid() {
        for (d, s) in [(4, 0.05), (3, 0.1), (2, 0.2)] {
            let clock = peres_clock(d, s, s, 0).unwrap();
            for n in [1, 4, 10] {
                for p in [0.1, 0.3, 1.0] {
                    let r = gear_failure_experiment(&clock, n, p, GearAveraging::Exact).unwrap();
                    assert!(r.measured_distance >= -1e-12);
                    assert!(r.measured_distance <= r.bound + 1e-9, "d={d} s={s} n={n} p={p}: {r:?}");
                }
            }
        }
    }

    #[test]
    fn gear_rejects_bad_probability() {
        let clock = peres_clock(2, 0.1, 0.1, 0).unwrap();
        assert!(gear_failure_experiment(&clock, 1, 1.5, GearAveraging::Exact).is_err());
        assert!(gear_failure_experiment(&clock, 1, 0.5, GearAveraging::Sampled { trials: 0, seed: 0 }).is_err());
    }
}
