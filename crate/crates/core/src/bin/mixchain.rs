use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mixchain::cli::{dispatch, parse_config, Command};

#[derive(Parser)]
#[command(name = "mixchain", version, about = "MCMC experiments for two-component mixtures")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// key=value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<String>,
    /// Worker threads (0 = all cores); results do not depend on it
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Kernel: da, mh (quasi-moment proposal) or mh-shift
    #[arg(long, global = true)]
    kernel: Option<String>,
    /// Sample sizes, comma separated
    #[arg(long, global = true)]
    n: Option<String>,
    /// Chain lengths, comma separated
    #[arg(long, global = true)]
    m: Option<String>,
    /// Fixed value or n_pow:P
    #[arg(long, global = true, allow_hyphen_values = true)]
    epsilon: Option<String>,
    #[arg(long, global = true)]
    replications: Option<String>,
    /// Also write n^{1/2}(theta(i) - theta_tilde) for `chain`
    #[arg(long, global = true)]
    emit_scaled: bool,
    /// Any other config key, as key=value (repeatable)
    #[arg(long = "set", short = 'D', global = true, value_name = "KEY=VALUE", allow_hyphen_values = true)]
    set: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Simulate datasets
    Gen,
    /// Run one chain and write its path
    Chain,
    /// Standard-error table of the scaled ergodic average
    Table,
    /// One-step drift and diffusion coefficients
    Coeffs,
    /// Total variation to the limit posterior
    Bvm,
    /// Local asymptotic normality residuals
    Lan,
    /// Simulate the limiting diffusion
    Diffusion,
    /// Risk and degeneracy curves
    Risk,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Gen => Command::Gen,
            Cmd::Chain => Command::Chain,
            Cmd::Table => Command::Table,
            Cmd::Coeffs => Command::Coeffs,
            Cmd::Bvm => Command::Bvm,
            Cmd::Lan => Command::Lan,
            Cmd::Diffusion => Command::Diffusion,
            Cmd::Risk => Command::Risk,
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?,
        None => String::new(),
    };
    let mut overrides: Vec<(String, String)> = Vec::new();
    for kv in &cli.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| format!("--set expects key=value, got `{kv}`"))?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    let flags = [
        ("seed", cli.seed.map(|s| s.to_string())),
        ("out", cli.out.clone()),
        ("threads", cli.threads.map(|t| t.to_string())),
        ("kernel", cli.kernel.clone()),
        ("n", cli.n.clone()),
        ("m", cli.m.clone()),
        ("epsilon", cli.epsilon.clone()),
        ("replications", cli.replications.clone()),
        ("emit_scaled", cli.emit_scaled.then(|| "true".to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            overrides.push((k.to_string(), v));
        }
    }
    let cfg = parse_config(&text, &overrides, Some(cli.command.into())).map_err(|e| e.to_string())?;
    let outcome = dispatch(&cfg).map_err(|e| e.to_string())?;
    for line in &outcome.summary {
        println!("{line}");
    }
    for file in &outcome.files {
        println!("wrote {}", file.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mixchain: error: {e}");
            ExitCode::FAILURE
        }
    }
}
