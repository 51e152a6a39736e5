//! Command-line driver: parses arguments, resolves the run configuration,
//! executes a suite and writes its report files.

pub mod config;
pub mod error;
pub mod output;
pub mod suites;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nqmlab_core::ResidualReport;

use crate::config::{parse_tolerance, Overrides, RunConfig, OUT_ENV};
use crate::error::CliError;
use crate::output::{beta_csv, write_atomic, SuiteReport};

#[derive(Debug, Parser)]
#[command(
    name = "nqmlab",
    version,
    about = "Verification suites for composed nonlinear wave functions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the selected identity checks and write verify.json.
    Verify,
    /// Evolve a state directly and through its inner field; write series CSVs.
    Evolve,
    /// Recover the inner field from sampled states and fit its dispersion.
    Recover,
    /// Estimate the time-factor exponent over a list of betas.
    SweepBeta,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration; missing keys take their defaults.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the config file and NQMLAB_OUT).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    pub grid_n: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub p: Option<f64>,
    #[arg(long, global = true)]
    pub mass: Option<f64>,
    #[arg(long, global = true)]
    pub hbar: Option<f64>,
    /// Tolerance override, repeatable: NAME=VALUE.
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE", value_parser = parse_tolerance)]
    pub tolerances: Vec<(String, f64)>,
    /// Print the full JSON report to stdout instead of the summary.
    #[arg(long, global = true)]
    pub json: bool,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            grid_n: self.grid_n,
            p: self.p,
            mass: self.mass,
            hbar: self.hbar,
            tolerances: self.tolerances.clone(),
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code:
/// 0 when every check passes, 1 on a failed check or runtime error, 2 on a
/// usage or configuration error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let env_out = std::env::var_os(OUT_ENV).map(PathBuf::from);
    match execute(&cli, env_out) {
        Ok(report) => i32::from(!report.overall_pass),
        Err(e) => {
            eprintln!("nqmlab: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command and writes its files; the returned report has
/// already been written to the output directory.
pub fn execute(cli: &Cli, env_out: Option<PathBuf>) -> Result<SuiteReport, CliError> {
    let config = RunConfig::resolve(
        cli.common.config.as_deref(),
        &cli.common.overrides(),
        env_out,
    )?;
    let out = config.out_dir();
    let (stem, checks) = match cli.command {
        Command::Verify => ("verify", suites::verify(&config)?),
        Command::Evolve => {
            let run = suites::evolve(&config)?;
            write_text(&out, "direct.csv", &run.direct_csv)?;
            write_text(&out, "induced.csv", &run.induced_csv)?;
            write_text(&out, "divergence.csv", &run.divergence_csv)?;
            ("evolve", run.reports)
        }
        Command::Recover => ("recover", suites::recover(&config)?),
        Command::SweepBeta => {
            let run = suites::sweep_beta(&config)?;
            write_text(&out, "beta_sweep.csv", &beta_csv(&run.rows))?;
            ("sweep-beta", run.reports)
        }
    };
    let report = SuiteReport::new(config, checks);
    let json = report.to_json();
    write_text(&out, &format!("{stem}.json"), &json)?;
    if cli.common.json {
        print!("{json}");
    } else {
        print_summary(&report.checks);
    }
    Ok(report)
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    write_atomic(&dir.join(name), text.as_bytes())
}

fn print_summary(checks: &[ResidualReport]) {
    for c in checks {
        println!(
            "{} {:<20} residual {:.3e} tol {:.1e}",
            if c.pass { "PASS" } else { "FAIL" },
            c.check_name,
            c.residual_linf,
            c.tolerance
        );
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    println!("{} checks, {} failed", checks.len(), failed);
}
