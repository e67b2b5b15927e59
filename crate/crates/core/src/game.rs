//! The Alternate Ticks Game.
//!
//! Two clocks run side by side and a referee watches their tick registers.
//! Ticks must arrive strictly alternating, A first. The game ends at the first
//! tick from the wrong player or at the first step where both players tick.
//!
//! Write `x₁ = a₁, x₂ = b₁, x₃ = a₂, …` for the interleaved tick times of A
//! and B. At least `t` ticks are accepted iff `x₁ < x₂ < … < x_t < x_{t+1}`,
//! with `x_{t+1} = ∞` if that tick never happens. [`exact_pt_dp`] evaluates
//! this through the renewal structure of the two clocks;
//! [`enumerate_pt_bruteforce`] sums over every pair of outcome strings.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::PureState;
use crate::clocks::{QuantumClock, Stepper};
use crate::error::{Error, Result};
use crate::trajectories::{seeded_rng, waiting_time_pmf, TickTrajectory, WaitingTimeDistribution};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    A,
    B,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::A => Player::B,
            Player::B => Player::A,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Failure {
    WrongPlayer,
    Simultaneous,
    /// The horizon was reached without a failure.
    Censored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefereeState {
    pub expected_player: Player,
    pub accepted_ticks: u64,
    pub last_tick_step: Option<u64>,
    last_step: Option<u64>,
}

impl Default for RefereeState {
    fn default() -> Self {
        Self::new()
    }
}

impl RefereeState {
    pub fn new() -> Self {
        Self { expected_player: Player::A, accepted_ticks: 0, last_tick_step: None, last_step: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefereeOutcome {
    Running(RefereeState),
    /// `state` holds the accepted count at the time of failure.
    Failed { cause: Failure, state: RefereeState },
}

/// Feed the register contents of one step to the referee.
pub fn referee_advance(state: &RefereeState, step: u64, tick_a: bool, tick_b: bool) -> Result<RefereeOutcome> {
    if let Some(previous) = state.last_step {
        if step <= previous {
            return Err(Error::OutOfOrderStep { step, previous });
        }
    }
    let mut next = RefereeState { last_step: Some(step), ..*state };
    let outcome = match (tick_a, tick_b) {
        (false, false) => RefereeOutcome::Running(next),
        (true, true) => RefereeOutcome::Failed { cause: Failure::Simultaneous, state: next },
        (a, _) => {
            let player = if a { Player::A } else { Player::B };
            if player == state.expected_player {
                next.accepted_ticks += 1;
                next.expected_player = player.other();
                next.last_tick_step = Some(step);
                RefereeOutcome::Running(next)
            } else {
                RefereeOutcome::Failed { cause: Failure::WrongPlayer, state: next }
            }
        }
    };
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameRecord {
    pub accepted_ticks: u64,
    pub failure: Failure,
    pub failure_step: Option<u64>,
    pub trajectory_a: TickTrajectory,
    pub trajectory_b: TickTrajectory,
}

struct Played {
    accepted: u64,
    failure: Failure,
    failure_step: Option<u64>,
    steps: u64,
    ticks_a: Vec<u64>,
    ticks_b: Vec<u64>,
}

fn play(clock_a: &QuantumClock, clock_b: &QuantumClock, horizon: u64, seed: u64, record: bool) -> Result<Played> {
    let mut rng_a = seeded_rng(seed, 0);
    let mut rng_b = seeded_rng(seed, 1);
    let mut a = Stepper::new(clock_a);
    let mut b = Stepper::new(clock_b);
    let mut referee = RefereeState::new();
    let (mut ticks_a, mut ticks_b) = (Vec::new(), Vec::new());
    for step in 1..=horizon {
        let tick_a = a.step(rng_a.random::<f64>())?;
        let tick_b = b.step(rng_b.random::<f64>())?;
        if record {
            if tick_a {
                ticks_a.push(step);
            }
            if tick_b {
                ticks_b.push(step);
            }
        }
        match referee_advance(&referee, step, tick_a, tick_b)? {
            RefereeOutcome::Running(s) => referee = s,
            RefereeOutcome::Failed { cause, state } => {
                return Ok(Played { accepted: state.accepted_ticks, failure: cause, failure_step: Some(step), steps: step, ticks_a, ticks_b });
            }
        }
    }
    Ok(Played { accepted: referee.accepted_ticks, failure: Failure::Censored, failure_step: None, steps: horizon, ticks_a, ticks_b })
}

/// Play one game; player A uses substream 0 of `rng_seed` and B substream 1.
pub fn run_game(clock_a: &QuantumClock, clock_b: &QuantumClock, horizon: u64, rng_seed: u64) -> Result<GameRecord> {
    if horizon == 0 {
        return Err(Error::invalid("horizon", "must be at least 1"));
    }
    let p = play(clock_a, clock_b, horizon, rng_seed, true)?;
    Ok(GameRecord {
        accepted_ticks: p.accepted,
        failure: p.failure,
        failure_step: p.failure_step,
        trajectory_a: TickTrajectory { horizon: p.steps, tick_times: p.ticks_a },
        trajectory_b: TickTrajectory { horizon: p.steps, tick_times: p.ticks_b },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanTicks {
    pub mean: f64,
    pub stderr: f64,
    /// Fraction of runs that reached the horizon without failing.
    pub censored_fraction: f64,
    pub runs: u64,
}

/// Seed of game `index` in a batch started from `base_seed`.
pub fn game_seed(base_seed: u64, index: u64) -> u64 {
    base_seed ^ index
}

/// Sample mean and standard error of the accepted-tick count over `runs`
/// independent games. Games run in parallel; the result does not depend on
/// the thread count.
pub fn estimate_mean_ticks(clock_a: &QuantumClock, clock_b: &QuantumClock, runs: u64, horizon: u64, base_seed: u64) -> Result<MeanTicks> {
    if runs == 0 {
        return Err(Error::invalid("runs", "must be at least 1"));
    }
    if horizon == 0 {
        return Err(Error::invalid("horizon", "must be at least 1"));
    }
    let results: Vec<(u64, bool)> = (0..runs)
        .into_par_iter()
        .map(|i| play(clock_a, clock_b, horizon, game_seed(base_seed, i), false).map(|p| (p.accepted, p.failure == Failure::Censored)))
        .collect::<Result<_>>()?;
    let n = runs as f64;
    let mean = results.iter().map(|(k, _)| *k as f64).sum::<f64>() / n;
    let stderr = if runs > 1 {
        let var = results.iter().map(|(k, _)| (*k as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let censored_fraction = results.iter().filter(|(_, c)| *c).count() as f64 / n;
    Ok(MeanTicks { mean, stderr, censored_fraction, runs })
}

/// `p[t]` is the probability that at least `t` ticks are accepted by the
/// horizon; `p[0] = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtCurve {
    pub p: Vec<f64>,
    pub horizon: usize,
    /// Probability that the game is still running at the horizon with fewer
    /// than `t_max` accepted ticks, plus any mass dropped numerically; the
    /// infinite-horizon `p[t]` lies in `[p[t], p[t] + tail_bound]`.
    pub tail_bound: f64,
}

impl PtCurve {
    pub fn t_max(&self) -> usize {
        self.p.len().saturating_sub(1)
    }

    pub fn is_monotone(&self) -> bool {
        self.p.windows(2).all(|w| w[1] <= w[0] + 1e-12)
    }
}

/// Expected accepted-tick count, `Σ_{t≥1} p[t]`.
pub fn mean_from_pt(curve: &PtCurve) -> f64 {
    curve.p.iter().skip(1).sum()
}

/// Largest `t` with `p[t] ≥ 1 − threshold`.
pub fn t_delta_max(curve: &PtCurve, threshold: f64) -> usize {
    curve.p.iter().rposition(|&p| p >= 1.0 - threshold).unwrap_or(0)
}

/// pmf entries at or below this weight are skipped by the dynamic program;
/// their total is charged to the tail bound.
const PMF_FLOOR: f64 = 1e-20;
/// Joint states lighter than this are dropped, likewise charged to the tail.
const STATE_FLOOR: f64 = 1e-20;

struct SparseGap {
    /// `(g, P(G = g))` for the entries above the floor, ascending in `g`.
    support: Vec<(usize, f64)>,
    /// `exceeds[u] = P(G > u)` for `u ≤ horizon`.
    exceeds: Vec<f64>,
    skipped: f64,
}

impl SparseGap {
    fn new(w: &WaitingTimeDistribution) -> Self {
        let mut support = Vec::new();
        let mut skipped = 0.0;
        for (i, &p) in w.pmf.iter().enumerate() {
            if p > PMF_FLOOR {
                support.push((i + 1, p));
            } else {
                skipped += p;
            }
        }
        Self { support, exceeds: w.exceeds(), skipped }
    }
}

fn first_and_gap(clock: &QuantumClock, horizon: usize) -> Result<(WaitingTimeDistribution, WaitingTimeDistribution)> {
    let renewal: PureState = clock.renewal_state()?;
    Ok((waiting_time_pmf(clock, clock.initial(), horizon)?, waiting_time_pmf(clock, &renewal, horizon)?))
}

/// Exact `p_t` for `t ≤ t_max` up to the horizon.
///
/// After a tick each clock restarts from the same state, so each player's
/// tick times form a (delayed) renewal process. The program walks through the
/// interleaved events `x_k`, keeping the joint law of `(x_{k−1}, x_k)`: the
/// next event is `x_{k+1} = x_{k−1} + G` with `G` drawn from the waiting-time
/// distribution of the player due, and survives iff `x_{k+1} > x_k`.
pub fn exact_pt_dp(clock_a: &QuantumClock, clock_b: &QuantumClock, t_max: usize, horizon: usize) -> Result<PtCurve> {
    if horizon == 0 {
        return Err(Error::invalid("horizon", "must be at least 1"));
    }
    let (first_a, gap_a) = first_and_gap(clock_a, horizon)?;
    let (first_b, gap_b) = first_and_gap(clock_b, horizon)?;
    let dists = [SparseGap::new(&first_a), SparseGap::new(&first_b), SparseGap::new(&gap_a), SparseGap::new(&gap_b)];
    // event k (1-based): A on odd k, B on even k; the first two are first ticks
    let dist_for = |k: usize| -> &SparseGap {
        let player = (k + 1) % 2;
        if k <= 2 {
            &dists[player]
        } else {
            &dists[2 + player]
        }
    };

    let h = horizon;
    // level[x] lists (x_{k−1}, mass) for states with x_k = x
    let mut level: Vec<Vec<(usize, f64)>> = vec![Vec::new(); h + 1];
    level[0].push((0, 1.0));
    let mut p = vec![0.0; t_max + 1];
    p[0] = 1.0;
    let mut tail = 0.0;
    let mut row = vec![0.0f64; h + 1];

    for k in 0..t_max {
        let dist = dist_for(k + 1);
        let following = dist_for(k + 2);
        let mut next: Vec<Vec<(usize, f64)>> = vec![Vec::new(); h + 1];
        let mut level_mass = 0.0;
        let mut any = false;
        for (x, states) in level.iter().enumerate() {
            if states.is_empty() {
                continue;
            }
            let mut hi = x;
            for &(y, m) in states {
                level_mass += m;
                // neither player has ticked again by the horizon
                tail += m * dist.exceeds[h - y] * following.exceeds[h - x];
                let start = dist.support.partition_point(|&(g, _)| y + g <= x);
                for &(g, w) in &dist.support[start..] {
                    let xn = y + g;
                    if xn > h {
                        break;
                    }
                    row[xn] += m * w;
                    hi = hi.max(xn);
                }
            }
            for (xn, slot) in row.iter_mut().enumerate().take(hi + 1).skip(x + 1) {
                if *slot > STATE_FLOOR {
                    next[xn].push((x, *slot));
                    any = true;
                } else {
                    tail += *slot;
                }
                *slot = 0.0;
            }
        }
        tail += level_mass * dist.skipped;
        if !any {
            break;
        }
        level = next;
        // p_{k+1}: the event after x_{k+1} lands strictly later
        p[k + 1] = level
            .iter()
            .enumerate()
            .flat_map(|(x, states)| states.iter().map(move |&(y, m)| m * following.exceeds[x - y]))
            .sum::<f64>()
            .min(1.0);
    }
    Ok(PtCurve { p, horizon, tail_bound: tail })
}

/// Largest horizon accepted by [`enumerate_pt_bruteforce`].
pub const MAX_BRUTEFORCE_HORIZON: usize = 64;
/// Largest number of joint outcome prefixes [`enumerate_pt_bruteforce`] will
/// visit before giving up.
pub const MAX_BRUTEFORCE_NODES: usize = 1 << 22;
/// Joint outcome strings below this probability are dropped (and counted in
/// the tail bound).
const BRUTEFORCE_PRUNE: f64 = 1e-20;

/// Exact `p_t` by summing over all joint outcome strings up to `horizon`.
///
/// Zero-probability branches are not expanded, so deterministic clocks are
/// cheap; in general the cost grows like `4^horizon`.
pub fn enumerate_pt_bruteforce(clock_a: &QuantumClock, clock_b: &QuantumClock, horizon: usize) -> Result<PtCurve> {
    if horizon == 0 || horizon > MAX_BRUTEFORCE_HORIZON {
        return Err(Error::ResourceGuard(format!("brute-force enumeration needs 1 <= horizon <= {MAX_BRUTEFORCE_HORIZON}, got {horizon}")));
    }
    // accepted[k] = probability that exactly k ticks are accepted by the horizon
    let mut accepted = vec![0.0; horizon + 1];
    let mut undecided = 0.0;
    let mut visited = 0usize;
    let mut stack = vec![(0u64, clock_a.initial().clone(), clock_b.initial().clone(), RefereeState::new(), 1.0f64)];
    while let Some((step, sa, sb, referee, prob)) = stack.pop() {
        if step as usize == horizon {
            let k = referee.accepted_ticks as usize;
            accepted[k] += prob;
            if k < horizon {
                undecided += prob;
            }
            continue;
        }
        visited += 1;
        if visited > MAX_BRUTEFORCE_NODES {
            return Err(Error::ResourceGuard(format!("brute-force enumeration exceeded {MAX_BRUTEFORCE_NODES} nodes")));
        }
        let (a0, a1) = clock_a.step_both(&sa)?;
        let (b0, b1) = clock_b.step_both(&sb)?;
        for oa in [&a0, &a1] {
            for ob in [&b0, &b1] {
                let q = prob * oa.probability * ob.probability;
                if q == 0.0 {
                    continue;
                }
                if q < BRUTEFORCE_PRUNE {
                    undecided += q;
                    continue;
                }
                match referee_advance(&referee, step + 1, oa.tick, ob.tick)? {
                    RefereeOutcome::Failed { state, .. } => accepted[state.accepted_ticks as usize] += q,
                    RefereeOutcome::Running(next) => {
                        let (na, nb) = match (&oa.post_state, &ob.post_state) {
                            (Some(na), Some(nb)) => (na.clone(), nb.clone()),
                            _ => return Err(Error::Degenerate("positive-probability branch without a post-measurement state".into())),
                        };
                        stack.push((step + 1, na, nb, next, q));
                    }
                }
            }
        }
    }
    let mut p = vec![0.0; horizon + 1];
    let mut acc = 0.0;
    for t in (0..=horizon).rev() {
        acc += accepted[t];
        p[t] = acc.min(1.0);
    }
    p[0] = 1.0;
    Ok(PtCurve { p, horizon, tail_bound: undecided })
}
