//! Command-line front end: `fracwave <command> [--config file] [flags]`.

pub mod config;
pub mod output;
pub mod plot;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use config::{parse_complex, parse_list, Command, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "fracwave", version, about = "Damped fractional wave equation on the circle")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Eigenvalues and eigenmodes near a target.
    Modes(Flags),
    /// Semiclassical resolvent norms over h.
    ResolventScan(Flags),
    /// Resolvent norms along the real λ axis.
    LambdaScan(Flags),
    /// Time evolution and energy decay.
    Evolve(Flags),
    /// Commutator norms against h.
    CommutatorScan(Flags),
    /// The sharp rate constants.
    Rates(Flags),
}

/// Flags shared by every command; they override the config file.
#[derive(Debug, Default, Args)]
struct Flags {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// indicator, tanh, holder:<beta>, constant:<c> or custom:<path>.
    #[arg(long)]
    profile: Option<String>,
    /// galerkin or collocation.
    #[arg(long)]
    discretization: Option<String>,
    #[arg(long)]
    n_modes: Option<usize>,
    /// Complex target such as 13 or 13.03-0.03i.
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    eigenpairs: Option<usize>,
    #[arg(long)]
    full_spectrum: bool,
    /// Comma-separated list.
    #[arg(long)]
    h_grid: Option<String>,
    #[arg(long)]
    z_grid: Option<String>,
    #[arg(long)]
    lambda_grid: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    sample_every: Option<usize>,
    /// Two comma-separated times.
    #[arg(long)]
    fit_window: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// bump or log-bump.
    #[arg(long)]
    symbol: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl Flags {
    fn apply(self, cfg: &mut ExperimentConfig) -> Result<()> {
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field { cfg.$field = v; }
            )*};
        }
        set!(alpha, profile, discretization, eigenpairs, t_final, sample_every, seed, symbol, workers);
        if self.beta.is_some() {
            cfg.beta = self.beta;
        }
        if self.n_modes.is_some() {
            cfg.n_modes = self.n_modes;
        }
        if self.dt.is_some() {
            cfg.dt = self.dt;
        }
        if self.output_dir.is_some() {
            cfg.output_dir = self.output_dir;
        }
        if self.full_spectrum {
            cfg.full_spectrum = true;
        }
        if let Some(t) = self.target {
            cfg.target = parse_complex(&t)?;
        }
        if let Some(g) = self.h_grid {
            cfg.h_grid = Some(parse_list(&g)?);
        }
        if let Some(g) = self.z_grid {
            cfg.z_grid = Some(parse_list(&g)?);
        }
        if let Some(g) = self.lambda_grid {
            cfg.lambda_grid = Some(parse_list(&g)?);
        }
        if let Some(w) = self.fit_window {
            match parse_list(&w)?.as_slice() {
                [a, b] => cfg.fit_window = Some([*a, *b]),
                _ => return Err(Error::Invalid("fit-window takes two times".into())),
            }
        }
        Ok(())
    }
}

/// Builds the configuration from command-line arguments (program name first).
pub fn parse_args<I, T>(args: I) -> std::result::Result<ExperimentConfig, String>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| e.to_string())?;
    let (command, flags) = match cli.command {
        Sub::Modes(f) => (Command::Modes, f),
        Sub::ResolventScan(f) => (Command::ResolventScan, f),
        Sub::LambdaScan(f) => (Command::LambdaScan, f),
        Sub::Evolve(f) => (Command::Evolve, f),
        Sub::CommutatorScan(f) => (Command::CommutatorScan, f),
        Sub::Rates(f) => (Command::Rates, f),
    };
    let mut cfg = match &flags.config {
        Some(path) => ExperimentConfig::load(path).map_err(|e| format!("{}: {e}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    cfg.command = Some(command);
    flags.apply(&mut cfg).map_err(|e| e.to_string())?;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

/// Runs the program and returns the process exit code: 0 on success, 2 for
/// usage or configuration errors, 1 for numerical or I/O failures.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse_args(args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("{}", msg.trim_end());
            return if msg.contains("Usage") && !msg.contains("error") { 0 } else { 2 };
        }
    };
    if cfg.command == Some(Command::Rates) {
        if let Ok(r) = crate::resolvent::RateConstants::new(cfg.alpha, cfg.beta().unwrap_or(0.0)) {
            println!("nu_sharp = {}", r.nu_sharp);
            println!("gamma_sharp = {}", r.gamma_sharp);
        }
    }
    match run::run(&cfg) {
        Ok(report) => {
            for (k, v) in &report.summary {
                log::info!("{k} = {v}");
            }
            println!("wrote {}", report.manifest.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
