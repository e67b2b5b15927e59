//! Simulation toolkit for discrete-step quantum clocks.
//!
//! A clock is a clockwork `C` that is advanced by a fixed internal unitary
//! and then probed by a binary tick instrument, which writes a fresh tick
//! register `T` on every step. On top of that model this crate provides:
//!
//! * [`clocks`]: the NOT clock, the cyclic-shift ("Peres") clock, the
//!   nearest-neighbour ladder clock and the wavepacket clock;
//! * [`trajectories`]: Monte Carlo tick trajectories, exact waiting-time
//!   distributions and exact register states for small step counts;
//! * [`game`]: the Alternate Ticks Game referee, Monte Carlo estimation of
//!   the mean score and two independent exact evaluations of `p_t`;
//! * [`continuity`]: Choi-matrix bounds on the diamond distance of a clock
//!   to the identity, and the stale-register robustness experiment.

pub mod channels;
pub mod clocks;
pub mod continuity;
pub mod error;
pub mod game;
pub mod linalg;
pub mod trajectories;

pub use channels::{choi_of, partial_trace, verify_cptp, ChoiMatrix, CptpReport, DensityMatrix, MapAsAction, PureState};
pub use clocks::{ladder_clock, not_clock, peres_clock, wavepacket_clock, QuantumClock, Reset, StepOutcome, Stepper, TickInstrument};
pub use continuity::{continuity_bounds, gear_failure_experiment, restricted_map, ContinuityReport, GearAveraging, RobustnessReport};
pub use error::{Error, Result};
pub use game::{
    enumerate_pt_bruteforce, estimate_mean_ticks, exact_pt_dp, mean_from_pt, referee_advance, run_game, t_delta_max, Failure,
    GameRecord, MeanTicks, Player, PtCurve, RefereeOutcome, RefereeState,
};
pub use linalg::{ComplexMatrix, HermitianEigensystem, Tolerances, TOL};
pub use trajectories::{exact_register_state, sample_trajectory, waiting_time_pmf, RegisterStateExact, TickTrajectory, WaitingTimeDistribution};

pub use num_complex::Complex64;
