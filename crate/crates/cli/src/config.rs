use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::strategy::{build_pair, ClockParams, Strategy};

fn default_runs() -> u64 {
    500
}

fn default_horizon() -> u64 {
    1_000_000
}

/// A sweep over `(d, θ, δ)` for one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub strategy: Strategy,
    pub d_values: Vec<usize>,
    pub theta_values: Vec<f64>,
    pub delta_values: Vec<f64>,
    #[serde(default = "default_runs")]
    pub runs: u64,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    pub base_seed: u64,
    /// Initial basis indices of A and B; defaults to `[0, ⌊d/2⌋]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_offsets: Option<[usize; 2]>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: SweepConfig = serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid sweep config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        Self::from_json(&text)
    }

    /// Grid points in output order: θ, then δ, then d.
    pub fn grid(&self) -> Vec<ClockParams> {
        let mut out = Vec::with_capacity(self.theta_values.len() * self.delta_values.len() * self.d_values.len());
        for &theta in &self.theta_values {
            for &delta in &self.delta_values {
                for &d in &self.d_values {
                    out.push(ClockParams { strategy: self.strategy, d, theta, delta });
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |field: &str, msg: String| Err(CliError::Usage(format!("{field}: {msg}")));
        for (field, empty) in [
            ("d_values", self.d_values.is_empty()),
            ("theta_values", self.theta_values.is_empty()),
            ("delta_values", self.delta_values.is_empty()),
        ] {
            if empty {
                return usage(field, "must not be empty".into());
            }
        }
        if self.runs == 0 {
            return usage("runs", "must be at least 1".into());
        }
        if self.horizon == 0 {
            return usage("horizon", "must be at least 1".into());
        }
        // every grid point has to describe a valid clock pair
        for point in self.grid() {
            if let Err(e) = build_pair(&point, self.initial_offsets) {
                let field = match &e {
                    CliError::Core(ticktock_core::Error::InvalidParameter { name, .. }) => match *name {
                        "theta" | "speed" => "theta_values",
                        "delta" => "delta_values",
                        "index" | "start" => "initial_offsets",
                        _ => "d_values",
                    },
                    CliError::Usage(msg) if msg.contains("offset") => "initial_offsets",
                    _ => "d_values",
                };
                return usage(field, format!("d={} theta={} delta={}: {e}", point.d, point.theta, point.delta));
            }
        }
        Ok(())
    }
}
