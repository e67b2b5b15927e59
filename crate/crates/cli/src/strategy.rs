//! Named clock families and how a pair of players is built from them.

use std::fmt;

use serde::{Deserialize, Serialize};
use ticktock_core::{ladder_clock, not_clock, peres_clock, wavepacket_clock, Complex64, PureState, QuantumClock};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Peres,
    Ladder,
    Not,
    Wavepacket,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Peres => "peres",
            Strategy::Ladder => "ladder",
            Strategy::Not => "not",
            Strategy::Wavepacket => "wavepacket",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One point of the parameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockParams {
    pub strategy: Strategy,
    pub d: usize,
    pub theta: f64,
    pub delta: f64,
}

/// Default starting positions: A at 0, B half way round.
pub fn default_offsets(d: usize) -> [usize; 2] {
    [0, d / 2]
}

/// Packet half-width used for the wavepacket family.
pub fn wavepacket_width(d: usize) -> usize {
    (d / 8).max(1)
}

fn single(params: &ClockParams, offset: usize) -> Result<QuantumClock> {
    let ClockParams { strategy, d, theta, delta } = *params;
    if d > 0 && offset >= d {
        return Err(CliError::Usage(format!("initial offset {offset} out of range for d = {d}")));
    }
    let clock = match strategy {
        Strategy::Peres => peres_clock(d, theta, delta, offset)?,
        Strategy::Ladder => ladder_clock(d, theta, delta, offset)?,
        Strategy::Not => {
            if d != 2 {
                return Err(CliError::Usage(format!("strategy not needs d = 2, got {d}")));
            }
            not_clock(offset as u8)?
        }
        Strategy::Wavepacket => {
            // theta is the packet speed; the offset rotates the initial packet
            let base = wavepacket_clock(d, wavepacket_width(d), theta, delta)?;
            let amps = base.initial().amplitudes();
            let shifted: Vec<Complex64> = (0..d).map(|c| amps[(c + d - offset) % d]).collect();
            base.with_initial(PureState::new(shifted)?)?
        }
    };
    Ok(clock)
}

/// Clocks for players A and B, identical except for their initial states.
pub fn build_pair(params: &ClockParams, offsets: Option<[usize; 2]>) -> Result<(QuantumClock, QuantumClock)> {
    let [a, b] = offsets.unwrap_or_else(|| default_offsets(params.d));
    Ok((single(params, a)?, single(params, b)?))
}

/// Clock for single-clock reports (player A's clock).
pub fn build_one(params: &ClockParams) -> Result<QuantumClock> {
    single(params, 0)
}
