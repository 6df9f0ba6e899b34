//! Flat TOML run configuration.
//!
//! Every key is optional; see README.md for the schema. Unknown keys are
//! rejected.

use std::path::PathBuf;

use cbs_core::{AtomFieldParams, QuadOptions};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Kernels,
    #[serde(alias = "ladder-crossed")]
    Spectra,
    Totals,
    #[serde(alias = "verify-oracle")]
    Verify,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    None,
    UnitPeak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub rabi: f64,
    pub detuning: f64,
    pub gamma: f64,
    /// |g|², dimensionless.
    pub coupling_mod2: f64,
    /// Number of ordered atom pairs.
    pub pair_multiplicity: f64,
    pub points: usize,
    /// Grid half-width in units of max(γ, √(Ω²+δ²)).
    pub range: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
    pub normalization: Normalization,
    /// Probe offset ν at which the `kernels` mode samples P1 and P2.
    pub probe: f64,
    pub sweep_rabi: Vec<f64>,
    pub sweep_detuning: Vec<f64>,
    pub oracle_phase_points: usize,
    /// Relative L² above which a verification run is flagged.
    pub oracle_tolerance: f64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let q = QuadOptions::default();
        Self {
            mode: Mode::Spectra,
            rabi: 0.1,
            detuning: -5.0,
            gamma: 1.0,
            coupling_mod2: 1.0,
            pair_multiplicity: 1.0,
            points: cbs_core::transport::DEFAULT_POINTS,
            range: cbs_core::transport::DEFAULT_RANGE,
            abs_tol: q.abs_tol,
            rel_tol: q.rel_tol,
            max_panels: q.max_panels,
            normalization: Normalization::None,
            probe: 0.0,
            sweep_rabi: Vec::new(),
            sweep_detuning: Vec::new(),
            oracle_phase_points: 8,
            oracle_tolerance: 1e-3,
            output_dir: PathBuf::from("."),
        }
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> CliError {
    CliError::Invalid {
        field,
        reason: reason.into(),
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = |field, v: f64| if v.is_finite() { Ok(()) } else { Err(invalid(field, format!("{v} is not finite"))) };
        finite("rabi", self.rabi)?;
        finite("detuning", self.detuning)?;
        finite("probe", self.probe)?;
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(invalid("gamma", format!("{} must be positive", self.gamma)));
        }
        if self.rabi < 0.0 {
            return Err(invalid("rabi", format!("{} must not be negative", self.rabi)));
        }
        if !(self.coupling_mod2 >= 0.0) || !self.coupling_mod2.is_finite() {
            return Err(invalid("coupling_mod2", format!("{} must not be negative", self.coupling_mod2)));
        }
        if !(self.pair_multiplicity > 0.0) || !self.pair_multiplicity.is_finite() {
            return Err(invalid("pair_multiplicity", format!("{} must be positive", self.pair_multiplicity)));
        }
        if self.points < 3 {
            return Err(invalid("points", format!("{} is below the minimum of 3", self.points)));
        }
        if !(self.range > 0.0) || !self.range.is_finite() {
            return Err(invalid("range", format!("{} must be positive", self.range)));
        }
        if !(self.abs_tol > 0.0) || !self.abs_tol.is_finite() {
            return Err(invalid("abs_tol", format!("{} must be positive", self.abs_tol)));
        }
        if !(self.rel_tol > 0.0) || !self.rel_tol.is_finite() {
            return Err(invalid("rel_tol", format!("{} must be positive", self.rel_tol)));
        }
        if self.max_panels == 0 {
            return Err(invalid("max_panels", "must be at least 1"));
        }
        if self.oracle_phase_points < 4 {
            return Err(invalid("oracle_phase_points", format!("{} is below the minimum of 4", self.oracle_phase_points)));
        }
        if !(self.oracle_tolerance > 0.0) {
            return Err(invalid("oracle_tolerance", format!("{} must be positive", self.oracle_tolerance)));
        }
        if self.sweep_rabi.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(invalid("sweep_rabi", "values must be finite and not negative"));
        }
        if self.sweep_detuning.iter().any(|x| !x.is_finite()) {
            return Err(invalid("sweep_detuning", "values must be finite"));
        }
        if self.mode == Mode::Sweep {
            if self.sweep_rabi.is_empty() {
                return Err(invalid("sweep_rabi", "must not be empty in sweep mode"));
            }
            if self.sweep_detuning.is_empty() {
                return Err(invalid("sweep_detuning", "must not be empty in sweep mode"));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<AtomFieldParams> {
        self.params_at(self.rabi, self.detuning)
    }

    pub fn params_at(&self, rabi: f64, detuning: f64) -> Result<AtomFieldParams> {
        Ok(AtomFieldParams::new(rabi, detuning, self.gamma)?.with_coupling(self.coupling_mod2)?)
    }

    pub fn quad(&self) -> QuadOptions {
        QuadOptions {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_panels: self.max_panels,
        }
    }
}

/// Parse and validate configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!((c.rabi, c.detuning, c.points), (0.1, -5.0, 2001));
    }

    #[test]
    fn strong_drive_config() {
        let c = parse_config("rabi = 10\ndetuning = -5\n").unwrap();
        let p = c.params().unwrap();
        assert_eq!((p.rabi, p.detuning, p.gamma), (10.0, -5.0, 1.0));
    }

    #[test]
    fn errors_name_the_field() {
        let e = parse_config("rabi = -1").unwrap_err().to_string();
        assert!(e.contains("rabi"), "{e}");
        let e = parse_config("gamma = 0").unwrap_err().to_string();
        assert!(e.contains("gamma"), "{e}");
        let e = parse_config("points = 2").unwrap_err().to_string();
        assert!(e.contains("points"), "{e}");
        let e = parse_config("rabbi = 1").unwrap_err().to_string();
        assert!(e.contains("rabbi"), "{e}");
        let e = parse_config("rabi = \"strong\"").unwrap_err().to_string();
        assert!(e.contains("invalid type"), "{e}");
    }

    #[test]
    fn sweep_needs_axes() {
        let e = parse_config("mode = \"sweep\"\nsweep_rabi = [1.0]").unwrap_err().to_string();
        assert!(e.contains("sweep_detuning"), "{e}");
        assert!(parse_config("mode = \"sweep\"\nsweep_rabi = [1.0]\nsweep_detuning = [0]").is_ok());
    }

    #[test]
    fn mode_aliases() {
        assert_eq!(parse_config("mode = \"verify-oracle\"").unwrap().mode, Mode::Verify);
        assert_eq!(parse_config("mode = \"ladder-crossed\"").unwrap().mode, Mode::Spectra);
        assert_eq!(parse_config("normalization = \"unit-peak\"").unwrap().normalization, Normalization::UnitPeak);
    }
}
