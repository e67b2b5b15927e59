//! The sweep CSV: one row per grid point, reals with 17 significant digits.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::strategy::Strategy;

pub const HEADER: [&str; 10] = ["strategy", "d", "theta", "delta", "runs", "horizon", "seed", "mean_ticks", "stderr_ticks", "censored_fraction"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub strategy: Strategy,
    pub d: usize,
    pub theta: f64,
    pub delta: f64,
    pub runs: u64,
    pub horizon: u64,
    pub seed: u64,
    pub mean_ticks: f64,
    pub stderr_ticks: f64,
    pub censored_fraction: f64,
}

/// `{:.16e}` round-trips every finite `f64`.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

impl SweepRow {
    pub fn to_record(&self) -> [String; 10] {
        [
            self.strategy.name().to_string(),
            self.d.to_string(),
            format_real(self.theta),
            format_real(self.delta),
            self.runs.to_string(),
            self.horizon.to_string(),
            self.seed.to_string(),
            format_real(self.mean_ticks),
            format_real(self.stderr_ticks),
            format_real(self.censored_fraction),
        ]
    }

    /// The line as written to disk, without the newline.
    pub fn to_line(&self) -> String {
        self.to_record().join(",")
    }

    /// Whether `other` is the same grid point run with the same settings.
    pub fn same_job(&self, other: &SweepRow) -> bool {
        self.strategy == other.strategy
            && self.d == other.d
            && self.theta.to_bits() == other.theta.to_bits()
            && self.delta.to_bits() == other.delta.to_bits()
            && self.runs == other.runs
            && self.horizon == other.horizon
            && self.seed == other.seed
    }
}

pub fn header_line() -> String {
    HEADER.join(",")
}

fn parse_field<T: std::str::FromStr>(record: &csv::StringRecord, index: usize, line: u64) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = record.get(index).ok_or_else(|| CliError::Schema(format!("line {line}: missing column {}", HEADER[index])))?;
    raw.parse().map_err(|e| CliError::Schema(format!("line {line}: column {}: cannot parse {raw:?}: {e}", HEADER[index])))
}

/// Parse a sweep CSV, rejecting any header other than [`HEADER`].
pub fn parse_sweep_csv(reader: impl Read) -> Result<Vec<SweepRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(CliError::Schema(format!("expected header {:?}, found {:?}", header_line(), header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = i as u64 + 2;
        if record.len() != HEADER.len() {
            return Err(CliError::Schema(format!("line {line}: expected {} columns, found {}", HEADER.len(), record.len())));
        }
        let strategy = match &record[0] {
            "peres" => Strategy::Peres,
            "ladder" => Strategy::Ladder,
            "not" => Strategy::Not,
            "wavepacket" => Strategy::Wavepacket,
            other => return Err(CliError::Schema(format!("line {line}: unknown strategy {other:?}"))),
        };
        rows.push(SweepRow {
            strategy,
            d: parse_field(&record, 1, line)?,
            theta: parse_field(&record, 2, line)?,
            delta: parse_field(&record, 3, line)?,
            runs: parse_field(&record, 4, line)?,
            horizon: parse_field(&record, 5, line)?,
            seed: parse_field(&record, 6, line)?,
            mean_ticks: parse_field(&record, 7, line)?,
            stderr_ticks: parse_field(&record, 8, line)?,
            censored_fraction: parse_field(&record, 9, line)?,
        });
    }
    Ok(rows)
}
