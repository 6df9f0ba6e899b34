//! Physical parameters, frequency conventions and spectral containers.
//!
//! Every frequency in this crate is an offset from the laser frequency,
//! measured in the same units as `gamma`. The decay rate `gamma` is the
//! excited-state population decay rate, so optical coherences relax at
//! `gamma / 2`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::PhysError;

/// Positions closer than this (in units of `gamma`) are the same line.
pub const LINE_MERGE_TOL: f64 = 1e-9;
/// Lines with smaller weight are dropped by [`SpectralDistribution::merge_lines`].
pub const LINE_DROP_TOL: f64 = 1e-14;

/// Laser and atom parameters shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomFieldParams {
    /// Rabi frequency of the laser.
    pub rabi: f64,
    /// Laser minus atomic resonance frequency.
    pub detuning: f64,
    /// Population decay rate.
    pub gamma: f64,
    /// |g|², the prefactor of the double-scattering intensities. Dimensionless:
    /// the coupling rate between the atoms is |g|·γ.
    pub coupling_mod2: f64,
}

impl Default for AtomFieldParams {
    fn default() -> Self {
        Self {
            rabi: 0.1,
            detuning: -5.0,
            gamma: 1.0,
            coupling_mod2: 1.0,
        }
    }
}

impl AtomFieldParams {
    pub fn new(rabi: f64, detuning: f64, gamma: f64) -> Result<Self, PhysError> {
        let p = Self {
            rabi,
            detuning,
            gamma,
            coupling_mod2: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_coupling(mut self, coupling_mod2: f64) -> Result<Self, PhysError> {
        self.coupling_mod2 = coupling_mod2;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), PhysError> {
        let check = |name: &'static str, value: f64, ok: bool| {
            if value.is_finite() && ok {
                Ok(())
            } else {
                Err(PhysError::InvalidParameter { name, value })
            }
        };
        check("gamma", self.gamma, self.gamma > 0.0)?;
        check("rabi", self.rabi, self.rabi >= 0.0)?;
        check("detuning", self.detuning, true)?;
        check("coupling_mod2", self.coupling_mod2, self.coupling_mod2 >= 0.0)?;
        Ok(())
    }

    /// Saturation parameter s = (Ω²/2) / (δ² + γ²/4).
    pub fn saturation(&self) -> f64 {
        0.5 * self.rabi * self.rabi / (self.detuning * self.detuning + 0.25 * self.gamma * self.gamma)
    }

    /// Generalized Rabi frequency √(Ω² + δ²), the dressed-state splitting.
    pub fn generalized_rabi(&self) -> f64 {
        self.rabi.hypot(self.detuning)
    }

    /// Same physics with every rate multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        Self {
            rabi: self.rabi * factor,
            detuning: self.detuning * factor,
            gamma: self.gamma * factor,
            coupling_mod2: self.coupling_mod2,
        }
    }
}

/// Free function form of [`AtomFieldParams::saturation`].
pub fn saturation(params: &AtomFieldParams) -> f64 {
    params.saturation()
}

/// Weak probe field: Rabi amplitude `value` oscillating as e^{-iνt} in the
/// laser frame, so the total drive is Ω/2 + v e^{-iνt}.
///
/// Only derivatives at `value = 0` are ever used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeAmplitude {
    pub value: Complex64,
    pub nu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectralLabel {
    P0,
    P1,
    P2,
    Ladder,
    Crossed,
    Oracle,
}

impl fmt::Display for SpectralLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SpectralLabel::P0 => "P0",
            SpectralLabel::P1 => "P1",
            SpectralLabel::P2 => "P2",
            SpectralLabel::Ladder => "ladder",
            SpectralLabel::Crossed => "crossed",
            SpectralLabel::Oracle => "oracle",
        };
        f.write_str(s)
    }
}

/// An elastic δ-line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralLine {
    pub position: f64,
    pub weight: Complex64,
}

impl SpectralLine {
    pub fn new(position: f64, weight: Complex64) -> Self {
        Self { position, weight }
    }

    pub fn real(position: f64, weight: f64) -> Self {
        Self::new(position, Complex64::new(weight, 0.0))
    }
}

/// The continuous part of a spectrum.
#[derive(Clone)]
pub enum SmoothPart {
    Zero,
    Analytic(Arc<dyn Fn(f64) -> Complex64 + Send + Sync>),
    /// Samples on a sorted grid, linearly interpolated and zero outside.
    Sampled { omega: Vec<f64>, values: Vec<Complex64> },
}

impl SmoothPart {
    pub fn eval(&self, omega: f64) -> Complex64 {
        match self {
            SmoothPart::Zero => Complex64::new(0.0, 0.0),
            SmoothPart::Analytic(f) => f(omega),
            SmoothPart::Sampled { omega: xs, values } => interpolate(xs, values, omega),
        }
    }
}

fn interpolate(xs: &[f64], ys: &[Complex64], x: f64) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    if xs.is_empty() || x < xs[0] || x > xs[xs.len() - 1] {
        return zero;
    }
    let i = xs.partition_point(|&p| p <= x);
    if i == 0 {
        return ys[0];
    }
    if i == xs.len() {
        return ys[xs.len() - 1];
    }
    let (x0, x1) = (xs[i - 1], xs[i]);
    let t = (x - x0) / (x1 - x0);
    ys[i - 1] * (1.0 - t) + ys[i] * t
}

impl fmt::Debug for SmoothPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SmoothPart::Zero => f.write_str("Zero"),
            SmoothPart::Analytic(_) => f.write_str("Analytic(..)"),
            SmoothPart::Sampled { omega, .. } => write!(f, "Sampled({} points)", omega.len()),
        }
    }
}

/// A spectrum split into elastic δ-lines and a smooth inelastic part.
#[derive(Debug, Clone)]
pub struct SpectralDistribution {
    pub label: SpectralLabel,
    pub lines: Vec<SpectralLine>,
    pub smooth: SmoothPart,
    /// Unit scale for the line merge tolerance.
    pub gamma: f64,
}

impl SpectralDistribution {
    pub fn zero(label: SpectralLabel, gamma: f64) -> Self {
        Self {
            label,
            lines: Vec::new(),
            smooth: SmoothPart::Zero,
            gamma,
        }
    }

    pub fn eval_smooth(&self, omega: f64) -> Complex64 {
        self.smooth.eval(omega)
    }

    pub fn total_line_weight(&self) -> Complex64 {
        self.lines.iter().map(|l| l.weight).sum()
    }

    /// Sum coincident lines and drop lines of negligible weight.
    pub fn merge_lines(mut self) -> Self {
        self.lines = merge_line_list(self.lines, LINE_MERGE_TOL * self.gamma);
        self
    }
}

/// Line merging on a bare list; `tol` is an absolute position tolerance.
pub fn merge_line_list(mut lines: Vec<SpectralLine>, tol: f64) -> Vec<SpectralLine> {
    lines.sort_by(|a, b| a.position.total_cmp(&b.position));
    let mut merged: Vec<SpectralLine> = Vec::with_capacity(lines.len());
    for line in lines {
        match merged.last_mut() {
            Some(last) if (line.position - last.position).abs() < tol => last.weight += line.weight,
            _ => merged.push(line),
        }
    }
    merged.retain(|l| l.weight.norm() >= LINE_DROP_TOL);
    merged
}
