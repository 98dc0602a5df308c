use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use lattice_resonance::generator::Profile;
use lattice_resonance_cli::{exit_code, run, Command, ConfigError, ExperimentConfig, EXIT_VALIDATION};

#[derive(Parser)]
#[command(name = "lattres", version, about = "Resonances and discrete spectrum of perturbed lattice Schrodinger operators")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Stable discrete eigenvalues of window truncations.
    Spectrum(Overrides),
    /// Characteristic values near the thresholds.
    Resonances(Overrides),
    /// Spectrum of the complex-scaled operator.
    Scaling(Overrides),
    /// Boundary values of the resolvent on the band.
    Lap(Overrides),
    /// Free resolvent kernel at a point of the threshold disk.
    Kernel(Overrides),
    /// Check a spec against the decay assumption.
    Verify(Overrides),
    /// Compare scaled eigenvalues with continuation records.
    Xcheck(Overrides),
    /// Dump the reduced Birman-Schwinger matrix at one point.
    BsDump(Overrides),
    /// Write a random spec for a profile.
    Generate(Overrides),
    /// Run a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Validate and print the config as JSON without running it.
        #[arg(long)]
        emit_config: bool,
    },
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    windows: Option<Vec<usize>>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, alias = "rmin")]
    r_min: Option<f64>,
    #[arg(long, alias = "rmax")]
    r_max: Option<f64>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    sectors: Option<usize>,
    #[arg(long)]
    continuation_radius: Option<f64>,
    /// `re,im`
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    theta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    interval: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,
    #[arg(long)]
    energies: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    phi: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    psi: Option<i64>,
    /// `re,im`
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    lambda: Option<Vec<f64>>,
    #[arg(long)]
    delta_band: Option<f64>,
    #[arg(long)]
    profile: Option<Profile>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    fiber_dim: Option<usize>,
    /// Print the resolved config as JSON and exit.
    #[arg(long)]
    emit_config: bool,
}

fn pair(name: &str, v: Vec<f64>) -> Result<[f64; 2]> {
    match v[..] {
        [a, b] => Ok([a, b]),
        _ => Err(ConfigError(format!("--{name} takes two comma-separated values, got {}", v.len())).into()),
    }
}

impl Overrides {
    fn apply(self, command: Command) -> Result<(ExperimentConfig, bool)> {
        let mut c = ExperimentConfig::new(command);
        c.spec_path = self.spec;
        if let Some(v) = self.out {
            c.output_dir = v;
        }
        macro_rules! set {
            ($($field:ident),*) => { $(if let Some(v) = self.$field { c.$field = v; })* };
        }
        set!(seed, window, windows, grid, r_min, r_max, nodes, sectors, continuation_radius, epsilons, energies, phi, psi, delta_band, gamma, fiber_dim);
        c.threshold = self.threshold.or(c.threshold);
        c.profile = self.profile.or(c.profile);
        if let Some(v) = self.theta {
            c.theta = pair("theta", v)?;
        }
        if let Some(v) = self.interval {
            c.interval = pair("interval", v)?;
        }
        if let Some(v) = self.lambda {
            c.lambda = pair("lambda", v)?;
        }
        Ok((c, self.emit_config))
    }
}

fn resolve(cli: Cli) -> Result<(ExperimentConfig, bool)> {
    let (command, o) = match cli.command {
        Sub::Run { config, emit_config } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            return Ok((ExperimentConfig::from_json(&text)?, emit_config));
        }
        Sub::Spectrum(o) => (Command::Spectrum, o),
        Sub::Resonances(o) => (Command::Resonances, o),
        Sub::Scaling(o) => (Command::Scaling, o),
        Sub::Lap(o) => (Command::Lap, o),
        Sub::Kernel(o) => (Command::Kernel, o),
        Sub::Verify(o) => (Command::Verify, o),
        Sub::Xcheck(o) => (Command::Xcheck, o),
        Sub::BsDump(o) => (Command::BsDump, o),
        Sub::Generate(o) => (Command::Generate, o),
    };
    let (config, emit) = o.apply(command)?;
    config.validate()?;
    Ok((config, emit))
}

fn execute(cli: Cli) -> Result<bool> {
    if let Ok(n) = std::env::var("ENGINE_THREADS") {
        let n: usize = n.parse().context("ENGINE_THREADS must be a positive integer")?;
        lattice_resonance::configure_threads(n);
    }
    let (config, emit) = resolve(cli)?;
    if emit {
        println!("{}", config.to_json());
        return Ok(true);
    }
    let outcome = run(&config)?;
    for f in &outcome.files {
        println!("{}", f.display());
    }
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}", serde_json::json!({"error": "check failed", "kind": "validation"}));
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(e) => {
            let code = exit_code(&e);
            let kind = if code == EXIT_VALIDATION { "validation" } else { "numerical" };
            eprintln!("{}", serde_json::json!({"error": format!("{e:#}"), "kind": kind, "exit_code": code}));
            ExitCode::from(code)
        }
    }
}
