//! Order-|g|² ladder and crossed components of the two-atom spectra.
//!
//! With G21 = |g|e^{iα} and G12 = |g|e^{iβ} the spectra are trigonometric
//! polynomials in (α, β). Atom 1 emitting and atom 2 rescattering gives the
//! phase-free |G12|² part of atom 2's own spectrum (ladder); the interference
//! of the two reversed paths is the e^{i(β−α)} part of the cross spectrum
//! ⟨σ+₁ σ−₂⟩ (crossed). Both components are read off with a discrete Fourier
//! transform over an N×N phase grid, divided by |g|² and extrapolated to
//! |g| → 0 from two moduli.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use cbs_core::AtomFieldParams;

use crate::error::{OracleError, Result};
use crate::liouvillian::{build_two_atom, Correlations, Coupling, CrossDamping};

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionOptions {
    /// The two coupling moduli used for the |g| → 0 extrapolation.
    pub moduli: (f64, f64),
    /// Phase samples per angle.
    pub phase_points: usize,
    pub damping: CrossDamping,
}

impl Default for ExtractionOptions {
    fn default() -> Self {
        Self {
            moduli: (1e-2, 2e-2),
            phase_points: 8,
            damping: CrossDamping::Full,
        }
    }
}

impl ExtractionOptions {
    fn validate(&self) -> Result<()> {
        let (a, b) = self.moduli;
        if !(a > 0.0 && b > 0.0 && a != b) {
            return Err(OracleError::InvalidSetting(format!("coupling moduli {a}, {b} must be distinct and positive")));
        }
        if self.phase_points < 4 {
            return Err(OracleError::InvalidSetting(format!(
                "{} phase points cannot separate the second harmonics",
                self.phase_points
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionDiagnostics {
    /// max |X(g₁) − X(g₂)| / max |X|: size of the |g|² correction removed.
    pub modulus_residual: f64,
    /// Largest |Im| / max |Re| of the crossed component.
    pub crossed_imag_ratio: f64,
    /// Largest |Im| / max |Re| of the ladder component.
    pub ladder_imag_ratio: f64,
}

/// Ladder and crossed spectra per unit |g|², one ordered atom pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSpectra {
    pub params: AtomFieldParams,
    pub omega: Vec<f64>,
    pub ladder: Vec<f64>,
    pub crossed: Vec<f64>,
    pub ladder_line: f64,
    pub crossed_line: f64,
    pub diagnostics: ExtractionDiagnostics,
}

/// Raw (α, β)-grid samples for one coupling modulus.
struct PhaseSamples {
    /// [phase index][frequency index] of s22 and s12
    s22: Vec<Vec<C>>,
    s12: Vec<Vec<C>>,
    l22: Vec<C>,
    l12: Vec<C>,
}

fn sample_phases(params: &AtomFieldParams, modulus: f64, omega: &[f64], opts: &ExtractionOptions) -> Result<PhaseSamples> {
    let n = opts.phase_points;
    let step = 2.0 * std::f64::consts::PI / n as f64;
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
    let per_cell: Vec<Result<(Vec<C>, Vec<C>, C, C)>> = cells
        .par_iter()
        .map(|&(a, b)| {
            let cpl = Coupling::from_phases(modulus, step * a as f64, step * b as f64);
            let corr = build_two_atom(params, cpl, opts.damping)?.correlations()?;
            Ok(spectra_on(&corr, omega))
        })
        .collect();
    let mut out = PhaseSamples {
        s22: Vec::with_capacity(cells.len()),
        s12: Vec::with_capacity(cells.len()),
        l22: Vec::with_capacity(cells.len()),
        l12: Vec::with_capacity(cells.len()),
    };
    for r in per_cell {
        let (s22, s12, l22, l12) = r?;
        out.s22.push(s22);
        out.s12.push(s12);
        out.l22.push(l22);
        out.l12.push(l12);
    }
    Ok(out)
}

fn spectra_on(corr: &Correlations, omega: &[f64]) -> (Vec<C>, Vec<C>, C, C) {
    let mut s22 = Vec::with_capacity(omega.len());
    let mut s12 = Vec::with_capacity(omega.len());
    for &w in omega {
        let m = corr.smooth(w);
        s22.push(m.s[1][1]);
        s12.push(m.s[0][1]);
    }
    let lines = corr.lines();
    (s22, s12, lines[1][1], lines[0][1])
}

/// Coefficient of e^{i(mα + nβ)} from samples on the N×N grid.
fn fourier(values: impl Fn(usize) -> C, n: usize, m: i32, k: i32) -> C {
    let step = 2.0 * std::f64::consts::PI / n as f64;
    let mut acc = C::new(0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            let phase = -(m as f64 * a as f64 + k as f64 * b as f64) * step;
            acc += values(a * n + b) * C::from_polar(1.0, phase);
        }
    }
    acc / (n * n) as f64
}

/// Component per unit |g|² at one modulus: (ladder, crossed) per frequency
/// and for the lines.
fn components(s: &PhaseSamples, base22: &[C], base_l22: C, modulus: f64, n: usize) -> (Vec<C>, Vec<C>, C, C) {
    let g2 = modulus * modulus;
    let npts = base22.len();
    let ladder = (0..npts)
        .map(|w| (fourier(|p| s.s22[p][w], n, 0, 0) - base22[w]) / g2)
        .collect();
    let crossed = (0..npts).map(|w| fourier(|p| s.s12[p][w], n, -1, 1) / g2).collect();
    let ll = (fourier(|p| s.l22[p], n, 0, 0) - base_l22) / g2;
    let cl = fourier(|p| s.l12[p], n, -1, 1) / g2;
    (ladder, crossed, ll, cl)
}

/// Remove the |g|² correction: X = (g₂² X₁ − g₁² X₂) / (g₂² − g₁²).
fn richardson(x1: C, x2: C, g1: f64, g2: f64) -> C {
    let (a, b) = (g1 * g1, g2 * g2);
    (x1 * b - x2 * a) / (b - a)
}

/// Ladder and crossed spectra on `omega` from the two-atom master equation.
pub fn extract_ladder_crossed(params: &AtomFieldParams, omega: &[f64], opts: &ExtractionOptions) -> Result<OracleSpectra> {
    opts.validate()?;
    let n = opts.phase_points;
    let base = build_two_atom(params, Coupling::none(), opts.damping)?.correlations()?;
    let (base22, _, base_l22, _) = spectra_on(&base, omega);
    let (g1, g2) = opts.moduli;
    let s1 = sample_phases(params, g1, omega, opts)?;
    let s2 = sample_phases(params, g2, omega, opts)?;
    let (lad1, cr1, ll1, cl1) = components(&s1, &base22, base_l22, g1, n);
    let (lad2, cr2, ll2, cl2) = components(&s2, &base22, base_l22, g2, n);

    let ladder_c: Vec<C> = lad1.iter().zip(&lad2).map(|(a, b)| richardson(*a, *b, g1, g2)).collect();
    let crossed_c: Vec<C> = cr1.iter().zip(&cr2).map(|(a, b)| richardson(*a, *b, g1, g2)).collect();

    let peak = |v: &[C]| v.iter().fold(0.0f64, |m, z| m.max(z.re.abs()));
    let imag = |v: &[C]| v.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    let spread = |a: &[C], b: &[C]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
    let modulus_residual = ratio(spread(&lad1, &lad2), peak(&ladder_c)).max(ratio(spread(&cr1, &cr2), peak(&crossed_c)));
    let diagnostics = ExtractionDiagnostics {
        modulus_residual,
        crossed_imag_ratio: ratio(imag(&crossed_c), peak(&crossed_c)),
        ladder_imag_ratio: ratio(imag(&ladder_c), peak(&ladder_c)),
    };
    Ok(OracleSpectra {
        params: *params,
        omega: omega.to_vec(),
        ladder: ladder_c.iter().map(|z| z.re).collect(),
        crossed: crossed_c.iter().map(|z| z.re).collect(),
        ladder_line: richardson(ll1, ll2, g1, g2).re,
        crossed_line: richardson(cl1, cl2, g1, g2).re,
        diagnostics,
    })
}

/// Frequency-integrated ladder and crossed intensities per unit |g|², from
/// the equal-time moments ⟨σ+₂σ−₂⟩ and ⟨σ+₁σ−₂⟩. No spectrum is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleTotals {
    pub ladder: f64,
    pub crossed: f64,
    pub modulus_residual: f64,
}

pub fn extract_totals(params: &AtomFieldParams, opts: &ExtractionOptions) -> Result<OracleTotals> {
    opts.validate()?;
    let n = opts.phase_points;
    let step = 2.0 * std::f64::consts::PI / n as f64;
    let base = build_two_atom(params, Coupling::none(), opts.damping)?.equal_time()?[1][1];
    let at = |modulus: f64| -> Result<(C, C)> {
        let mut m22 = Vec::with_capacity(n * n);
        let mut m12 = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let cpl = Coupling::from_phases(modulus, step * a as f64, step * b as f64);
                let m = build_two_atom(params, cpl, opts.damping)?.equal_time()?;
                m22.push(m[1][1]);
                m12.push(m[0][1]);
            }
        }
        let g2 = modulus * modulus;
        Ok((
            (fourier(|p| m22[p], n, 0, 0) - base) / g2,
            fourier(|p| m12[p], n, -1, 1) / g2,
        ))
    };
    let (g1, g2) = opts.moduli;
    let (l1, c1) = at(g1)?;
    let (l2, c2) = at(g2)?;
    let ladder = richardson(l1, l2, g1, g2).re;
    let crossed = richardson(c1, c2, g1, g2).re;
    let scale = ladder.abs().max(crossed.abs());
    let modulus_residual = if scale > 0.0 {
        (l1 - l2).norm().max((c1 - c2).norm()) / scale
    } else {
        0.0
    };
    Ok(OracleTotals {
        ladder,
        crossed,
        modulus_residual,
    })
}

/// √(Σ (a − b)²) / √(Σ b²)
pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourier_picks_single_harmonic() {
        let n = 8;
        let step = 2.0 * std::f64::consts::PI / n as f64;
        let f = |p: usize| {
            let (a, b) = ((p / n) as f64 * step, (p % n) as f64 * step);
            C::from_polar(2.0, b - a) + C::new(0.5, 0.0) + C::from_polar(0.3, 2.0 * a + b)
        };
        assert!((fourier(f, n, -1, 1) - C::new(2.0, 0.0)).norm() < 1e-14);
        assert!((fourier(f, n, 0, 0) - C::new(0.5, 0.0)).norm() < 1e-14);
        assert!(fourier(f, n, 1, 1).norm() < 1e-14);
    }

    #[test]
    fn richardson_removes_quadratic_term() {
        let x = |g: f64| C::new(3.0 + 7.0 * g * g, -1.0 * g * g);
        let r = richardson(x(0.01), x(0.02), 0.01, 0.02);
        assert!((r - C::new(3.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn invalid_settings() {
        let p = AtomFieldParams::default();
        let bad = ExtractionOptions {
            moduli: (0.01, 0.01),
            ..Default::default()
        };
        assert!(extract_ladder_crossed(&p, &[0.0], &bad).is_err());
        let bad = ExtractionOptions {
            phase_points: 2,
            ..Default::default()
        };
        assert!(extract_ladder_crossed(&p, &[0.0], &bad).is_err());
    }
}
