//! `skylaw` command-line interface.
//!
//! Exit codes: 0 success or clearance granted, 1 clearance denied, 2 input
//! error, 3 no feasible route.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod plots;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "skylaw",
    version,
    about = "Compliance-aware UAV routing over probabilistic airspace rules"
)]
struct Cli {
    /// Mission configuration (flat TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Caps the number of worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file or directory, depending on the subcommand.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit relational-map layers for every relation a constitution uses.
    BuildStarmap {
        /// GeoJSON FeatureCollection with `origin` and tagged features.
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        constitution: PathBuf,
    },
    /// Compute the satisfaction-probability field as a GRID3 file.
    InferField {
        #[command(flatten)]
        inputs: Inputs,
        /// Query one logic objective or rule instead of all logic field
        /// objectives.
        #[arg(long)]
        objective: Option<String>,
        #[command(flatten)]
        setting: SettingArg,
    },
    /// Plan a Pareto set of paths between two points.
    Route {
        #[command(flatten)]
        inputs: Inputs,
        /// GeoJSON map, needed by the radio, noise and risk models.
        #[arg(long)]
        map: Option<PathBuf>,
        /// Start as `x,y,z` in meters.
        #[arg(long, value_parser = parse_point)]
        start: [f64; 3],
        /// Goal as `x,y,z` in meters.
        #[arg(long, value_parser = parse_point)]
        goal: [f64; 3],
        #[command(flatten)]
        setting: SettingArg,
    },
    /// Score a path and decide clearance.
    Clearance {
        #[command(flatten)]
        path: PathInputs,
        #[command(flatten)]
        setting: SettingArg,
    },
    /// Score a path under every mission setting.
    Explain {
        #[command(flatten)]
        path: PathInputs,
    },
    /// Find the mission setting that maximizes a path's score.
    Optimize {
        #[command(flatten)]
        path: PathInputs,
        /// Restrict the search to these options (comma separated, may
        /// repeat). Groups without a listed option stay unrestricted.
        #[arg(long, value_delimiter = ',')]
        allow: Vec<String>,
    },
    /// Render grid slices, rejection curves and path overlays.
    ExportPlots {
        /// GRID3 file to slice.
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Altitudes (meters) of the slices to render; all slices when empty.
        #[arg(long, value_delimiter = ',')]
        altitudes: Vec<f64>,
        /// Rejection-curve CSV files.
        #[arg(long)]
        curve: Vec<PathBuf>,
        /// Path GeoJSON files.
        #[arg(long)]
        path: Vec<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Inputs {
    #[arg(long)]
    constitution: PathBuf,
    /// Relational-map directory written by `build-starmap`.
    #[arg(long)]
    starmap: PathBuf,
}

#[derive(Debug, Args)]
struct PathInputs {
    /// Path GeoJSON (LineString).
    #[arg(long)]
    path: PathBuf,
    #[command(flatten)]
    inputs: Inputs,
    /// Densify the path at the configured waypoint resolution first.
    #[arg(long)]
    resample: bool,
}

#[derive(Debug, Args)]
struct SettingArg {
    /// Mission setting options (comma separated); overrides the config.
    #[arg(long, value_delimiter = ',')]
    setting: Vec<String>,
}

fn parse_point(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,z but got `{s}`"));
    }
    let mut p = [0.0; 3];
    for (slot, part) in p.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|e| format!("bad coordinate `{part}`: {e}"))?;
    }
    Ok(p)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code_for(&e))
        }
    }
}
