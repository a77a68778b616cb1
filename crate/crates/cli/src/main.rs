//! `netsemi`: resolvents, evolution, positivity and spectra of network
//! diffusion and transport models described by a JSON document.

mod commands;
mod config;
mod diag;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{Output, Overrides};
use crate::config::{Method, Model};
use crate::diag::Failure;

#[derive(Parser)]
#[command(name = "netsemi", version, about = "Diffusion and transport semigroups on networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sinks, stochasticity, positivity and conservation checks.
    Validate(Common),
    /// Resolvent at one λ or along a real sweep.
    Resolvent(Common),
    /// Time evolution: trajectory and observables.
    Evolve(Common),
    /// Eigenvalues in a rectangle of the complex plane.
    Spectrum(Common),
    /// Counterexample to positivity.
    Witness(Common),
}

#[derive(Args)]
struct Common {
    /// Model document (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// `re` or `re,im`.
    #[arg(long, value_parser = parse_lambda, allow_hyphen_values = true)]
    lambda: Option<(f64, f64)>,
    /// `start:stop:count` along the real axis.
    #[arg(long, value_parser = parse_sweep, allow_hyphen_values = true)]
    sweep: Option<(f64, f64, usize)>,
    /// Final time.
    #[arg(long)]
    time: Option<f64>,
    /// Time steps (diffusion) or output intervals (transport).
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// `re0:re1:im0:im1`.
    #[arg(long, value_parser = parse_region, allow_hyphen_values = true)]
    region: Option<(f64, f64, f64, f64)>,
}

fn number(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"))
}

fn parse_lambda(s: &str) -> Result<(f64, f64), String> {
    match s.split_once(',') {
        None => Ok((number(s)?, 0.0)),
        Some((re, im)) => Ok((number(re)?, number(im)?)),
    }
}

fn parse_sweep(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err("expected start:stop:count".into());
    };
    let n = n.trim().parse().map_err(|_| format!("`{n}` is not a count"))?;
    Ok((number(a)?, number(b)?, n))
}

fn parse_region(s: &str) -> Result<(f64, f64, f64, f64), String> {
    let parts = s.split(':').map(number).collect::<Result<Vec<_>, _>>()?;
    let [a, b, c, d] = parts[..] else {
        return Err("expected re0:re1:im0:im1".into());
    };
    Ok((a, b, c, d))
}

fn run(cli: Cli) -> Result<serde_json::Value, Failure> {
    let (name, common) = match &cli.command {
        Command::Validate(c) => ("validate", c),
        Command::Resolvent(c) => ("resolvent", c),
        Command::Evolve(c) => ("evolve", c),
        Command::Spectrum(c) => ("spectrum", c),
        Command::Witness(c) => ("witness", c),
    };
    let model = Model::load(&common.config)?;
    let o = Overrides {
        lambda: common.lambda,
        sweep: common.sweep,
        time: common.time,
        steps: common.steps,
        method: common.method,
        region: common.region,
    };
    let mut out = Output::new(&common.out)?;
    match name {
        "validate" => commands::validate(&model, &mut out),
        "resolvent" => commands::resolvent(&model, &o, &mut out),
        "evolve" => commands::evolve(&model, &o, &mut out),
        "spectrum" => commands::spectrum(&model, &o, &mut out),
        _ => commands::witness(&model, &mut out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.exit)
        }
    }
}
