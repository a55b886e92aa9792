//! `fmpd`: run worldline experiments, verify catalog spaces, plot results.
//!
//! Exit status: 0 success, 1 I/O failure, 2 bad config / CSV / space
//! construction, 3 closure or geometric singularity, 4 step underflow or
//! step budget exhausted, 5 verification failure.

mod catalog;
mod config;
mod error;
mod plot;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fmpd::spaces::Params;

use error::{CliError, Result};
use plot::PlotKind;

#[derive(Parser)]
#[command(name = "fmpd", version, about = "Spinning-body worldlines on Finsler spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the experiment in a JSON config (or a previous run manifest).
    Run {
        config: PathBuf,
        /// Write outputs here instead of the config's `output.dir`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Check the geometric and dynamical identities on a space.
    Verify {
        space: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        points: usize,
        /// Space parameter override, `key=value`; repeatable.
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, f64)>,
        /// Report CSV; defaults to `<space>.verify.csv`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Draw an SVG line plot from a trajectory or monitor CSV.
    Plot {
        csv: PathBuf,
        #[arg(long, value_enum)]
        kind: PlotKind,
        /// Columns to draw; see `--kind` for defaults.
        #[arg(long, value_delimiter = ',')]
        columns: Vec<String>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn parse_param(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v: f64 = v.parse().map_err(|e| format!("`{v}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn verify(space: &str, seed: u64, points: usize, params: Vec<(String, f64)>, output: Option<PathBuf>) -> Result<()> {
    let params: Params = params.into_iter().collect();
    let desc = catalog::resolve(space, &params)?;
    let suite = fmpd::verify::verify_space(&desc, seed, points);
    print!("{}", suite.table());

    let path = output.unwrap_or_else(|| PathBuf::from(format!("{space}.verify.csv")));
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Io {
        path: path.clone(),
        source: e.into(),
    })?;
    let mut write = |row: [String; 6]| {
        w.write_record(&row).map_err(|e| CliError::Io {
            path: path.clone(),
            source: e.into(),
        })
    };
    write(["check", "measured", "threshold", "bound", "passed", "detail"].map(String::from))?;
    for c in &suite.checks {
        write([
            c.name.clone(),
            format!("{:.6e}", c.measured),
            format!("{:.6e}", c.threshold),
            if c.lower_bound { "min" } else { "max" }.to_string(),
            c.passed.to_string(),
            c.detail.clone(),
        ])?;
    }
    w.flush().map_err(CliError::io(&path))?;

    if suite.passed() {
        Ok(())
    } else {
        let names: Vec<&str> = suite.failures().iter().map(|c| c.name.as_str()).collect();
        Err(CliError::VerifyFailed(names.join(", ")))
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out_dir } => {
            let outcome = run::run(&config, out_dir.as_deref())?;
            println!("trajectory: {}", outcome.trajectory.display());
            println!("monitors:   {}", outcome.monitors.display());
            println!("manifest:   {}", outcome.manifest.display());
            match run::termination_code(&outcome.termination) {
                None => Ok(()),
                Some(code) => Err(CliError::Terminated {
                    label: outcome.termination.label(),
                    code,
                }),
            }
        }
        Command::Verify { space, seed, points, params, output } => verify(&space, seed, points, params, output),
        Command::Plot { csv, kind, columns, output } => plot::plot(Path::new(&csv), kind, &columns, &output),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fmpd: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
