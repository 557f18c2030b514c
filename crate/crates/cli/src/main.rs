//! `dinterp`: reproduces the displacement-interpolation experiments and exposes
//! the library operations on CSV files.

mod commands;
mod run;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "dinterp", version, about = "Displacement interpolation experiments")]
struct Cli {
    #[command(flatten)]
    globals: Globals,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. Unset values take per-experiment defaults,
/// which are recorded in the run manifest.
#[derive(Args, Debug, Clone)]
pub struct Globals {
    /// Cells per 1D grid, or pixels per side of a 2D image.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// 1D domain as `a,b` (use `--domain=-1,1` for negative bounds).
    #[arg(long, global = true, value_parser = parse_domain, allow_hyphen_values = true)]
    pub domain: Option<(f64, f64)>,
    /// Comma-separated interpolation parameters in [0, 1].
    #[arg(long, global = true, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    /// Comma-separated barycentric weights.
    #[arg(long, global = true, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    /// Number of Radon angles (default 4 per pixel row).
    #[arg(long, global = true)]
    pub angles: Option<usize>,
    /// Radon offset oversampling factor.
    #[arg(long, global = true)]
    pub oversample: Option<f64>,
    /// Relative residual tolerance of the Radon inversion.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Iteration cap of the Radon inversion.
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Seed of the random-hats generator.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this value.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory receiving the outputs and `manifest.json`.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Smaller 2D problems (D = 64).
    #[arg(long, global = true)]
    pub quick: bool,
    /// Also render line plots as SVG files.
    #[arg(long, global = true)]
    pub svg: bool,
}

fn parse_domain(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected `a,b`, got `{s}`"));
    }
    let a: f64 = parts[0].trim().parse().map_err(|e| format!("`{}`: {e}", parts[0]))?;
    let b: f64 = parts[1].trim().parse().map_err(|e| format!("`{}`: {e}", parts[1]))?;
    if !(a < b) {
        return Err(format!("domain [{a}, {b}] is empty"));
    }
    Ok((a, b))
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Interpolate between two densities read from CSV files.
    Pair(commands::PairArgs),
    /// Barycentric interpolation of several densities.
    Bary(commands::BaryArgs),
    /// Translated and random hat families with their singular values.
    Hats(commands::HatsArgs),
    /// Three-function interpolation at twelve parameter points.
    TwoParam,
    /// Dilation and translation sweeps of the Mexican-hat wavelet.
    Wavelet,
    /// Interpolated acoustic pressure at t = 0.2n, n = 0..10.
    Acoustics,
    /// Interpolated Burgers solutions at t = 1 + 0.2n, n = 1..10.
    Burgers,
    /// 2D interpolation of the diamond Gaussians through the Radon transform.
    Radon2d,
    /// 2D interpolation of radial oscillations through Fourier and Radon transforms.
    Osc2d(commands::OscArgs),
    /// Write the inputs of a named scenario.
    Scenario(commands::ScenarioArgs),
}

pub enum CliError {
    Usage(String),
    Domain(dinterp::Error),
}

impl From<dinterp::Error> for CliError {
    fn from(e: dinterp::Error) -> Self {
        CliError::Domain(e)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    if let Some(n) = cli.globals.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let g = &cli.globals;
    let result = match &cli.command {
        Command::Pair(a) => commands::pair(g, a),
        Command::Bary(a) => commands::bary(g, a),
        Command::Hats(a) => commands::hats(g, a),
        Command::TwoParam => commands::two_param(g),
        Command::Wavelet => commands::wavelet(g),
        Command::Acoustics => commands::acoustics(g),
        Command::Burgers => commands::burgers(g),
        Command::Radon2d => commands::radon2d(g),
        Command::Osc2d(a) => commands::osc2d(g, a),
        Command::Scenario(a) => commands::scenario(g, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Domain(e)) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(1)
        }
    }
}
