//! `relpot`: kernels, envelopes, simulations and verification suites from the command line.
//!
//! Exit codes: 0 success, 1 a verdict failed, 2 unknown name or bad usage/config,
//! 3 domain, range, singularity or regime violation, 4 quadrature tolerance not reached,
//! 5 I/O failure.

mod config;
mod eval;
mod grid;
mod output;
mod simulate;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use relpot::kernels::Domain;
use relpot::Error;

use config::{Overrides, RunConfig};
use output::Provenance;

pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DOMAIN: u8 = 3;
pub const EXIT_TOLERANCE: u8 = 4;
pub const EXIT_IO: u8 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, msg: msg.into() }
    }

    pub fn io(msg: impl Into<String>) -> Self {
        CliError { code: EXIT_IO, msg: msg.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Lookup { .. } | Error::Config(_) => EXIT_USAGE,
            Error::Domain(_) | Error::Range(_) | Error::Singularity(_) | Error::Regime(_) => EXIT_DOMAIN,
            Error::Tolerance { .. } => EXIT_TOLERANCE,
        };
        CliError { code, msg: e.to_string() }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum DomainArg {
    Halfspace,
    Halfline,
    Interval,
    Ball,
}

impl DomainArg {
    pub fn to_domain(self, r: Option<f64>) -> Result<Domain, CliError> {
        let r = || r.ok_or_else(|| CliError::usage("this domain needs --R"));
        Ok(match self {
            DomainArg::Halfspace => Domain::HalfSpace,
            DomainArg::Halfline => Domain::HalfLine,
            DomainArg::Interval => Domain::Interval { r: r()? },
            DomainArg::Ball => Domain::Ball { r: r()? },
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "relpot", version, about = "Relativistic stable process: kernels, simulation and verification")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Evaluate a kernel or envelope on a grid.
    Eval(eval::EvalArgs),
    /// Run a Monte Carlo estimate.
    Simulate(simulate::SimulateArgs),
    /// Run verification suites and write reports.
    Verify(verify::VerifyArgs),
    /// List eval names and verification checks.
    List,
}

fn list() {
    println!("eval names:");
    for n in eval::names() {
        println!("  {n}");
    }
    println!("verify suites: all, identities, envelopes");
    for c in relpot::verify::registry() {
        let kind = format!("{:?}", c.kind).to_lowercase();
        let off = if c.enabled { "" } else { " (off by default)" };
        println!("  {:<28} {kind}{off}", c.name);
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let rc = RunConfig::resolve(&cli.overrides).map_err(CliError::usage)?;
    let prov = Provenance { seed: rc.mc.master_seed, config_hash: rc.hash() };
    match &cli.cmd {
        Cmd::Eval(a) => {
            let t = eval::run(a, &rc.params, &rc.quad)?;
            output::emit(&t, &prov, rc.format, rc.output.as_deref()).map_err(CliError::io)?;
        }
        Cmd::Simulate(a) => {
            let t = simulate::run(a, &rc.params, &rc.mc)?;
            output::emit(&t, &prov, rc.format, rc.output.as_deref()).map_err(CliError::io)?;
        }
        Cmd::Verify(a) => return verify::run(a, &rc),
        Cmd::List => list(),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("relpot: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}
