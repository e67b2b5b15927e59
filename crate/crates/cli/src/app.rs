use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use ticktock_core::{continuity_bounds, exact_pt_dp, gear_failure_experiment, mean_from_pt, run_game, GearAveraging};

use crate::config::SweepConfig;
use crate::error::{CliError, Result};
use crate::strategy::{build_one, build_pair, ClockParams, Strategy};
use crate::sweep::run_sweep;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "TICKTOCK_THREADS";

#[derive(Debug, Parser)]
#[command(name = "ticktock", version, about = "Quantum clocks and the Alternate Ticks Game")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean score over a parameter grid, written as CSV plus a JSON sidecar.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Play one game and print the record as JSON.
    Game {
        #[command(flatten)]
        clock: ClockArgs,
        #[arg(long, default_value_t = 1_000_000)]
        horizon: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Bounds on the distance of one clock step to the identity.
    Continuity {
        #[command(flatten)]
        clock: ClockArgs,
    },
    /// Exact p_t curve and mean score.
    Oracle {
        #[command(flatten)]
        clock: ClockArgs,
        #[arg(long)]
        t_max: usize,
        #[arg(long)]
        horizon: usize,
    },
    /// Stale-register robustness experiment.
    Gear {
        #[command(flatten)]
        clock: ClockArgs,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        p: f64,
    },
}

#[derive(Debug, Args)]
pub struct ClockArgs {
    #[arg(long, value_enum)]
    pub strategy: Strategy,
    /// Clockwork dimension (defaults to 2 for `not`).
    #[arg(long)]
    pub d: Option<usize>,
    /// Step size; packet speed for `wavepacket`.
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Initial basis index of player A.
    #[arg(long)]
    pub offset_a: Option<usize>,
    /// Initial basis index of player B.
    #[arg(long)]
    pub offset_b: Option<usize>,
}

impl ClockArgs {
    fn params(&self) -> Result<ClockParams> {
        let d = match (self.d, self.strategy) {
            (Some(d), _) => d,
            (None, Strategy::Not) => 2,
            (None, s) => return Err(CliError::Usage(format!("--d is required for strategy {s}"))),
        };
        Ok(ClockParams { strategy: self.strategy, d, theta: self.theta, delta: self.delta })
    }

    fn offsets(&self, d: usize) -> Option<[usize; 2]> {
        if self.offset_a.is_none() && self.offset_b.is_none() {
            return None;
        }
        let [a, b] = crate::strategy::default_offsets(d);
        Some([self.offset_a.unwrap_or(a), self.offset_b.unwrap_or(b)])
    }

    fn pair(&self) -> Result<(ticktock_core::QuantumClock, ticktock_core::QuantumClock)> {
        let params = self.params()?;
        build_pair(&params, self.offsets(params.d))
    }
}

#[derive(Serialize)]
struct OracleReport {
    strategy: Strategy,
    d: usize,
    theta: f64,
    delta: f64,
    t_max: usize,
    horizon: usize,
    mean_ticks: f64,
    tail_bound: f64,
    p: Vec<f64>,
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // a second call in the same process (tests) keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn print_json(out: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    writeln!(out, "{text}").map_err(|e| CliError::io("stdout", e))
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Sweep { config, out: dir } => {
            let config = SweepConfig::load(&config)?;
            let outcome = run_sweep(&config, &dir)?;
            writeln!(
                out,
                "wrote {} rows ({} resumed) to {}",
                outcome.rows.len(),
                outcome.resumed,
                outcome.csv_path.display()
            )
            .map_err(|e| CliError::io("stdout", e))
        }
        Command::Game { clock, horizon, seed } => {
            let (a, b) = clock.pair()?;
            print_json(out, &run_game(&a, &b, horizon, seed)?)
        }
        Command::Continuity { clock } => {
            let c = build_one(&clock.params()?)?;
            print_json(out, &continuity_bounds(&c)?)
        }
        Command::Oracle { clock, t_max, horizon } => {
            let params = clock.params()?;
            let (a, b) = clock.pair()?;
            let curve = exact_pt_dp(&a, &b, t_max, horizon)?;
            print_json(
                out,
                &OracleReport {
                    strategy: params.strategy,
                    d: params.d,
                    theta: params.theta,
                    delta: params.delta,
                    t_max,
                    horizon,
                    mean_ticks: mean_from_pt(&curve),
                    tail_bound: curve.tail_bound,
                    p: curve.p,
                },
            )
        }
        Command::Gear { clock, steps, p } => {
            let c = build_one(&clock.params()?)?;
            print_json(out, &gear_failure_experiment(&c, steps, p, GearAveraging::Exact)?)
        }
    }
}

/// Parse `args`, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
