//! Command-line flags. Every flag overrides the matching config key.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Mode, Normalization, RunConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "cbs", version, about = "Double-scattering spectra of two driven two-level atoms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single-atom kernels P0, P1, P2 on the frequency grid.
    Kernels(Overrides),
    /// Ladder and crossed spectra, elastic lines and totals.
    Spectra(Overrides),
    /// Frequency-integrated ladder and crossed intensities.
    Totals(Overrides),
    /// Spectra compared against the two-atom master equation.
    Verify(Overrides),
    /// Totals over a grid of Rabi frequencies and detunings.
    Sweep(Overrides),
    /// Whatever `mode` the config file names.
    Run(Overrides),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML config file; missing keys take their defaults.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub rabi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub detuning: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub coupling_mod2: Option<f64>,
    #[arg(long)]
    pub pair_multiplicity: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub range: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub max_panels: Option<usize>,
    #[arg(long, value_enum)]
    pub normalization: Option<Normalization>,
    #[arg(long, allow_hyphen_values = true)]
    pub probe: Option<f64>,
    /// Comma-separated Rabi frequencies.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sweep_rabi: Option<Vec<f64>>,
    /// Comma-separated detunings.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sweep_detuning: Option<Vec<f64>>,
    #[arg(long)]
    pub oracle_phase_points: Option<usize>,
    #[arg(long)]
    pub oracle_tolerance: Option<f64>,
    #[arg(short, long)]
    pub output_dir: Option<PathBuf>,
}

macro_rules! apply {
    ($cfg:ident, $o:ident, $($f:ident),*) => {
        $(if let Some(v) = $o.$f.clone() { $cfg.$f = v; })*
    };
}

impl Overrides {
    /// Config file (or defaults) with the flags applied, then validated.
    pub fn resolve(&self, mode: Option<Mode>) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
                let mut c: RunConfig = toml::from_str(&text).map_err(|e| CliError::Parse(e.message().to_string()))?;
                // validation happens once every flag is in
                if let Some(m) = mode {
                    c.mode = m;
                }
                c
            }
            None => RunConfig {
                mode: mode.unwrap_or(Mode::Spectra),
                ..RunConfig::default()
            },
        };
        let o = self;
        apply!(
            cfg, o, rabi, detuning, gamma, coupling_mod2, pair_multiplicity, points, range, abs_tol, rel_tol, max_panels,
            normalization, probe, sweep_rabi, sweep_detuning, oracle_phase_points, oracle_tolerance, output_dir
        );
        cfg.validate()?;
        Ok(cfg)
    }
}

impl Command {
    pub fn resolve(&self) -> Result<RunConfig> {
        match self {
            Command::Kernels(o) => o.resolve(Some(Mode::Kernels)),
            Command::Spectra(o) => o.resolve(Some(Mode::Spectra)),
            Command::Totals(o) => o.resolve(Some(Mode::Totals)),
            Command::Verify(o) => o.resolve(Some(Mode::Verify)),
            Command::Sweep(o) => o.resolve(Some(Mode::Sweep)),
            Command::Run(o) => o.resolve(None),
        }
    }
}

