//! Sweeps over the parameter grid, written row by row so that an interrupted
//! run picks up where it stopped.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use ticktock_core::estimate_mean_ticks;

use crate::config::SweepConfig;
use crate::error::{CliError, Result};
use crate::schema::{format_real, header_line, parse_sweep_csv, SweepRow};
use crate::strategy::{build_pair, ClockParams};

pub const CSV_NAME: &str = "sweep.csv";
pub const META_NAME: &str = "sweep.json";

/// `base_seed` XOR the first eight bytes of SHA-256 over the grid point.
pub fn grid_seed(base_seed: u64, point: &ClockParams) -> u64 {
    let key = format!("{},{},{},{}", point.strategy, point.d, format_real(point.theta), format_real(point.delta));
    let digest = Sha256::digest(key.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    base_seed ^ u64::from_le_bytes(bytes)
}

fn job(config: &SweepConfig, point: &ClockParams) -> SweepRow {
    SweepRow {
        strategy: point.strategy,
        d: point.d,
        theta: point.theta,
        delta: point.delta,
        runs: config.runs,
        horizon: config.horizon,
        seed: grid_seed(config.base_seed, point),
        mean_ticks: f64::NAN,
        stderr_ticks: f64::NAN,
        censored_fraction: f64::NAN,
    }
}

pub fn run_point(config: &SweepConfig, point: &ClockParams) -> Result<SweepRow> {
    let mut row = job(config, point);
    let (a, b) = build_pair(point, config.initial_offsets)?;
    let m = estimate_mean_ticks(&a, &b, config.runs, config.horizon, row.seed)?;
    row.mean_ticks = m.mean;
    row.stderr_ticks = m.stderr;
    row.censored_fraction = m.censored_fraction;
    Ok(row)
}

#[derive(Debug, Serialize)]
struct Metadata<'a> {
    config: &'a SweepConfig,
    version: &'static str,
    wall_time_seconds: f64,
    rows: usize,
    resumed_rows: usize,
    csv: &'static str,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// Rows found in an earlier, interrupted run and kept as they were.
    pub resumed: usize,
    pub csv_path: PathBuf,
    pub meta_path: PathBuf,
}

/// Rows already on disk, after dropping a torn final line.
fn existing_rows(path: &Path) -> Result<Vec<SweepRow>> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path.display(), e))?;
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    if keep != bytes.len() {
        let file = OpenOptions::new().write(true).open(path).map_err(|e| CliError::io(path.display(), e))?;
        file.set_len(keep as u64).map_err(|e| CliError::io(path.display(), e))?;
    }
    if keep == 0 {
        return Ok(Vec::new());
    }
    parse_sweep_csv(&bytes[..keep])
}

fn has_header(path: &Path) -> Result<bool> {
    let file = File::open(path).map_err(|e| CliError::io(path.display(), e))?;
    let mut first = String::new();
    BufReader::new(file).read_line(&mut first).map_err(|e| CliError::io(path.display(), e))?;
    Ok(!first.is_empty())
}

pub fn run_sweep(config: &SweepConfig, out_dir: &Path) -> Result<SweepOutcome> {
    config.validate()?;
    let start = Instant::now();
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir.display(), e))?;
    let csv_path = out_dir.join(CSV_NAME);
    let meta_path = out_dir.join(META_NAME);
    let grid = config.grid();

    let mut rows = if csv_path.exists() { existing_rows(&csv_path)? } else { Vec::new() };
    if rows.len() > grid.len() {
        return Err(CliError::Usage(format!("{} holds {} rows but the config has {} grid points", csv_path.display(), rows.len(), grid.len())));
    }
    for (i, (row, point)) in rows.iter().zip(&grid).enumerate() {
        if !row.same_job(&job(config, point)) {
            return Err(CliError::Usage(format!(
                "{} row {} was produced by a different config; remove it or choose another --out",
                csv_path.display(),
                i + 1
            )));
        }
    }
    let resumed = rows.len();

    let needs_header = !csv_path.exists() || !has_header(&csv_path)?;
    let mut file = OpenOptions::new().create(true).append(true).open(&csv_path).map_err(|e| CliError::io(csv_path.display(), e))?;
    if needs_header {
        writeln!(file, "{}", header_line()).map_err(|e| CliError::io(csv_path.display(), e))?;
    }

    // points run in parallel in batches; rows go to disk in grid order
    let batch = rayon::current_num_threads().max(1);
    for chunk in grid[resumed..].chunks(batch) {
        let done: Vec<SweepRow> = chunk.par_iter().map(|p| run_point(config, p)).collect::<Result<_>>()?;
        for row in done {
            writeln!(file, "{}", row.to_line()).map_err(|e| CliError::io(csv_path.display(), e))?;
            rows.push(row);
        }
        file.flush().map_err(|e| CliError::io(csv_path.display(), e))?;
    }
    file.sync_all().map_err(|e| CliError::io(csv_path.display(), e))?;

    let meta = Metadata {
        config,
        version: env!("CARGO_PKG_VERSION"),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        rows: rows.len(),
        resumed_rows: resumed,
        csv: CSV_NAME,
    };
    let json = serde_json::to_string_pretty(&meta)?;
    fs::write(&meta_path, json + "\n").map_err(|e| CliError::io(meta_path.display(), e))?;
    Ok(SweepOutcome { rows, resumed, csv_path, meta_path })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::Strategy;

    #[test]
    fn seeds_depend_on_every_coordinate() {
        let p = ClockParams { strategy: Strategy::Peres, d: 10, theta: 1.0, delta: 0.1 };
        let s = grid_seed(42, &p);
        assert_eq!(s, grid_seed(42, &p));
        assert_ne!(s, grid_seed(43, &p));
        assert_ne!(s, grid_seed(42, &ClockParams { d: 11, ..p }));
        assert_ne!(s, grid_seed(42, &ClockParams { theta: 0.1, ..p }));
        assert_ne!(s, grid_seed(42, &ClockParams { delta: 0.05, ..p }));
        assert_ne!(s, grid_seed(42, &ClockParams { strategy: Strategy::Ladder, ..p }));
    }
}
