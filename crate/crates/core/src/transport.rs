//! Double-scattering ladder and crossed spectra and their frequency integrals.
//!
//! With P1(ν; ω₂) = a(ν) δ(ω₂ − ν) + b(ν) δ(ω₂) + s(ν; ω₂) and the P0/P2
//! kernels split the same way, the products of distributions are carried out
//! symbolically:
//!
//! ```text
//! I_L(ω_D) = |G|² ∫dν P0(ν) P2(ν; ω_D)
//! I_C(ω_D) = |G|² ∫dν P1*(ω_D − ν; ω_D) P1(ν; ω_D)
//! ```
//!
//! with the coupling rate G = gγ, so that spectra in units of |g|² are
//! unchanged when all rates are scaled together.
//!
//! Line × line gives lines at ω_D = 0, line × smooth gives point evaluations,
//! smooth × smooth gives one quadrature per detection frequency. In the crossed
//! product the b·b* term would carry δ(ω_D)² with the phase of a forward
//! mean-field loop rather than the reversed-path phase; it is not part of the
//! crossed signal and is left out.
//!
//! Quadrature tolerances are relative to [`intensity_scale`], so weak and
//! strong drives get the same relative accuracy.

use std::sync::atomic::{AtomicBool, Ordering};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CbsError, Result};
use crate::kernels::KernelSet;
use crate::phys::{merge_line_list, AtomFieldParams, SmoothPart, SpectralDistribution, SpectralLabel, SpectralLine, LINE_MERGE_TOL};
use crate::quadrature::{integrate_real_line, integrate_upper, par_integrate_real_line, QuadOptions, QuadResult};

/// Grid point count used when none is given.
pub const DEFAULT_POINTS: usize = 2001;
/// Grid half-width in units of max(γ, √(Ω²+δ²)).
pub const DEFAULT_RANGE: f64 = 3.0;

/// Detection frequencies, as offsets from the laser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    points: Vec<f64>,
    hints: Vec<f64>,
}

impl FrequencyGrid {
    /// Sorts `points`, adds the in-range `hints` and rejects duplicates.
    pub fn new(mut points: Vec<f64>, hints: &[f64]) -> Result<Self> {
        if points.iter().any(|x| !x.is_finite()) {
            return Err(CbsError::InvalidGrid("non-finite grid point".into()));
        }
        if points.len() < 3 {
            return Err(CbsError::InvalidGrid(format!("need at least 3 points, got {}", points.len())));
        }
        points.sort_by(f64::total_cmp);
        let (lo, hi) = (points[0], points[points.len() - 1]);
        // + 0.0 folds −0 into +0
        let mut kept: Vec<f64> = hints
            .iter()
            .map(|h| h + 0.0)
            .filter(|h| h.is_finite() && *h >= lo && *h <= hi)
            .collect();
        kept.sort_by(f64::total_cmp);
        kept.dedup();
        for &h in &kept {
            if let Err(i) = points.binary_search_by(|p| p.total_cmp(&h)) {
                points.insert(i, h);
            }
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CbsError::InvalidGrid("grid points must be distinct".into()));
        }
        Ok(Self { points, hints: kept })
    }

    pub fn uniform(min: f64, max: f64, n: usize, hints: &[f64]) -> Result<Self> {
        if !(max > min) || n < 3 {
            return Err(CbsError::InvalidGrid(format!("bad uniform grid [{min}, {max}] with {n} points")));
        }
        let step = (max - min) / (n - 1) as f64;
        let pts = (0..n).map(|i| if i == n - 1 { max } else { min + step * i as f64 }).collect();
        Self::new(pts, hints)
    }

    /// `n` uniform points over [−rW, rW] with W = max(γ, √(Ω²+δ²)), plus the
    /// laser line, the dressed-state sidebands and the atomic resonance.
    pub fn for_params(params: &AtomFieldParams, n: usize, range: f64) -> Result<Self> {
        if !(range > 0.0) {
            return Err(CbsError::InvalidGrid(format!("range multiplier {range} must be positive")));
        }
        let w = params.gamma.max(params.generalized_rabi());
        let hints = default_hints(params);
        Self::uniform(-range * w, range * w, n, &hints)
    }

    pub fn default_for(params: &AtomFieldParams) -> Result<Self> {
        Self::for_params(params, DEFAULT_POINTS, DEFAULT_RANGE)
    }

    /// Same range and hints with a midpoint inserted in every interval.
    pub fn refined(&self) -> Self {
        let mut pts = Vec::with_capacity(2 * self.points.len());
        for w in self.points.windows(2) {
            pts.push(w[0]);
            pts.push(0.5 * (w[0] + w[1]));
        }
        pts.push(self.points[self.points.len() - 1]);
        Self {
            points: pts,
            hints: self.hints.clone(),
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn hints(&self) -> &[f64] {
        &self.hints
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn default_hints(params: &AtomFieldParams) -> Vec<f64> {
    let w = params.generalized_rabi();
    vec![0.0, w, -w, -params.detuning]
}

/// Natural size of the inelastic double-scattering signal, |g|² P_e (P_e − |⟨σ−⟩|²).
pub fn intensity_scale(k: &KernelSet) -> f64 {
    k.params.coupling_mod2 * unit_scale(k)
}

/// Tolerance scales per unit |G|² for smooth densities and for line weights.
fn density_scale(k: &KernelSet) -> f64 {
    unit_scale(k) / k.params.gamma.powi(3)
}

fn weight_scale(k: &KernelSet) -> f64 {
    unit_scale(k) / k.params.gamma.powi(2)
}

fn unit_scale(k: &KernelSet) -> f64 {
    let pe = k.excited_population();
    pe * (pe - k.elastic_weight()).max(0.0)
}

/// Error estimates of the adaptive rule can run slightly optimistic on the
/// sharp Mollow sidebands, so each integral aims a decade below what is
/// declared to the caller.
const SAFETY: f64 = 0.1;

fn scaled(opts: &QuadOptions, scale: f64) -> QuadOptions {
    QuadOptions {
        abs_tol: opts.abs_tol * scale * SAFETY,
        ..*opts
    }
}

fn dedup_sorted(mut v: Vec<f64>, tol: f64) -> Vec<f64> {
    v.retain(|x| x.is_finite());
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < tol);
    v
}

/// Breakpoints for the ν-integrals at detection offset `wd`. The integrands
/// contain resolvents at ±ν, ω_D and ω_D ± ν, so every resonance r appears at
/// ±r and ±wd ± r.
fn inner_breakpoints(hints: &[f64], wd: f64, gamma: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(6 * hints.len() + 1);
    for &r in hints {
        for base in [0.0, wd, -wd] {
            out.push(base + r);
            out.push(base - r);
        }
    }
    out.push(0.5 * wd);
    dedup_sorted(out, 1e-9 * gamma)
}

/// Breakpoints in ω_D for the totals: sums and differences of resonances.
fn outer_breakpoints(hints: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for &r in hints {
        for &q in hints {
            out.push(r + q);
            out.push(r - q);
        }
        out.push(r);
    }
    dedup_sorted(out, 1e-6 * gamma)
}

/// One evaluated value, before multiplication by |G|².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointValue {
    pub value: f64,
    /// Imaginary part of the assembled value before the real cast.
    pub imag: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl PointValue {
    fn from_parts(direct: Complex64, q: QuadResult<Complex64>) -> Self {
        let total = direct + q.value;
        Self {
            value: total.re,
            imag: total.im,
            abs_error: q.abs_error,
            evaluations: q.evaluations,
            converged: q.converged,
        }
    }

    fn scale(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            imag: self.imag * factor,
            abs_error: self.abs_error * factor,
            ..self
        }
    }
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Smooth ladder density at ω_D per unit |G|².
pub fn ladder_smooth_at(k: &KernelSet, wd: f64, opts: &QuadOptions) -> PointValue {
    let hints = k.resonance_hints();
    let gamma = k.params.gamma;
    let w0 = k.elastic_weight();
    // P0 line at ν = 0 times the smooth part of P2(0; ω_D)
    let mut direct = k.probe(0.0).p2_smooth_complex(wd) * w0;
    // P0 smooth at ν = ±ω_D times the P2 lines sitting at ω_D = ±ν
    direct += k.p0_smooth_complex(wd) * k.probe(wd).p2_line_weights_complex()[2];
    direct += k.p0_smooth_complex(-wd) * k.probe(-wd).p2_line_weights_complex()[1];
    let bp = inner_breakpoints(&hints, wd, gamma);
    let q = integrate_real_line(
        |nu| k.p0_smooth_complex(nu) * k.probe(nu).p2_smooth_complex(wd),
        &bp,
        &scaled(opts, density_scale(k)),
    );
    PointValue::from_parts(direct, q)
}

/// Smooth crossed density at ω_D per unit |G|².
pub fn crossed_smooth_at(k: &KernelSet, wd: f64, opts: &QuadOptions) -> PointValue {
    let hints = k.resonance_hints();
    let gamma = k.params.gamma;
    let at_wd = k.probe(wd);
    let at_zero = k.probe(0.0);
    // lines of P1 at ω₂ = ν (ν = ω_D) and of P1* at ν = 0
    let a = at_wd.p1_line_at_probe();
    let s0 = at_zero.p1_smooth(wd);
    let direct = a * s0.conj() + a.conj() * s0;
    // The integrand h(ν) = s*(ω_D − ν) s(ν) obeys h(ω_D − ν) = h(ν)*, so the
    // line integral folds onto ν ≥ ω_D / 2 and comes out real.
    let bp = inner_breakpoints(&hints, wd, gamma);
    let q = integrate_upper(
        |nu| {
            let here = k.probe(nu).p1_smooth(wd);
            let there = k.probe(wd - nu).p1_smooth(wd);
            there.conj() * here + here.conj() * there
        },
        0.5 * wd,
        &bp,
        &scaled(opts, density_scale(k)),
    );
    PointValue::from_parts(direct, q)
}

/// Ladder elastic weight at ω_D = 0 per unit |G|².
pub fn ladder_line_weight(k: &KernelSet, opts: &QuadOptions) -> PointValue {
    let hints = k.resonance_hints();
    let direct: Complex64 = k.probe(0.0).p2_line_weights_complex().iter().sum::<Complex64>() * k.elastic_weight();
    let bp = inner_breakpoints(&hints, 0.0, k.params.gamma);
    let q = integrate_real_line(
        |nu| k.p0_smooth_complex(nu) * k.probe(nu).p2_line_weights_complex()[0],
        &bp,
        &scaled(opts, weight_scale(k)),
    );
    PointValue::from_parts(direct, q)
}

/// Crossed elastic weight at ω_D = 0 per unit |G|².
pub fn crossed_line_weight(k: &KernelSet, opts: &QuadOptions) -> PointValue {
    let hints = k.resonance_hints();
    let p = k.probe(0.0);
    let a = p.p1_line_at_probe();
    let b = p.p1_line_at_laser();
    let direct = a * a.conj() + a * b.conj() + a.conj() * b;
    let bp = inner_breakpoints(&hints, 0.0, k.params.gamma);
    let q = integrate_real_line(
        |nu| {
            let x = k.probe(nu).p1_line_at_laser() * k.probe(-nu).p1_smooth(0.0).conj();
            x + x.conj()
        },
        &bp,
        &scaled(opts, weight_scale(k)),
    );
    PointValue::from_parts(direct, q)
}

/// |G|² = |g|² γ².
fn coupling_rate2(k: &KernelSet) -> f64 {
    k.params.coupling_mod2 * k.params.gamma * k.params.gamma
}

/// Which of the two double-scattering contributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Contribution {
    Ladder,
    Crossed,
}

impl Contribution {
    pub fn label(self) -> SpectralLabel {
        match self {
            Contribution::Ladder => SpectralLabel::Ladder,
            Contribution::Crossed => SpectralLabel::Crossed,
        }
    }

    /// Smooth value including |G|².
    pub fn smooth_at(self, k: &KernelSet, wd: f64, opts: &QuadOptions) -> PointValue {
        let v = match self {
            Contribution::Ladder => ladder_smooth_at(k, wd, opts),
            Contribution::Crossed => crossed_smooth_at(k, wd, opts),
        };
        v.scale(coupling_rate2(k))
    }

    /// Elastic weight at ω_D = 0 including |G|².
    pub fn line_at(self, k: &KernelSet, opts: &QuadOptions) -> PointValue {
        let v = match self {
            Contribution::Ladder => ladder_line_weight(k, opts),
            Contribution::Crossed => crossed_line_weight(k, opts),
        };
        v.scale(coupling_rate2(k))
    }
}

/// A double-scattering spectrum sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSpectrum {
    pub contribution: Contribution,
    pub omega: Vec<f64>,
    pub values: Vec<PointValue>,
    pub line: PointValue,
}

impl SampledSpectrum {
    pub fn smooth_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.value).collect()
    }

    pub fn max_abs_error(&self) -> f64 {
        self.values.iter().map(|v| v.abs_error).fold(self.line.abs_error, f64::max)
    }

    pub fn all_converged(&self) -> bool {
        self.line.converged && self.values.iter().all(|v| v.converged)
    }

    /// Largest |Im|/|Re| over values with |Re| above `floor`.
    pub fn max_imag_ratio(&self, floor: f64) -> f64 {
        self.values
            .iter()
            .chain(std::iter::once(&self.line))
            .filter(|v| v.value.abs() > floor)
            .map(|v| v.imag.abs() / v.value.abs())
            .fold(0.0, f64::max)
    }

    /// Smooth part divided by its largest magnitude.
    pub fn normalized(&self) -> Vec<f64> {
        normalize_unit_peak(&self.smooth_values())
    }

    pub fn to_distribution(&self, gamma: f64) -> SpectralDistribution {
        SpectralDistribution {
            label: self.contribution.label(),
            lines: vec![SpectralLine::real(0.0, self.line.value)],
            smooth: SmoothPart::Sampled {
                omega: self.omega.clone(),
                values: self.values.iter().map(|v| c(v.value)).collect(),
            },
            gamma,
        }
        .merge_lines()
    }
}

/// Divide by max |value|; an identically zero input stays zero.
pub fn normalize_unit_peak(values: &[f64]) -> Vec<f64> {
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        values.to_vec()
    } else {
        values.iter().map(|v| v / peak).collect()
    }
}

/// Evaluate one contribution on every grid point, in parallel.
pub fn sample(which: Contribution, k: &KernelSet, grid: &FrequencyGrid, opts: &QuadOptions) -> SampledSpectrum {
    let values = grid.points().par_iter().map(|&wd| which.smooth_at(k, wd, opts)).collect();
    SampledSpectrum {
        contribution: which,
        omega: grid.points().to_vec(),
        values,
        line: which.line_at(k, opts),
    }
}

pub fn ladder_spectrum(k: &KernelSet, grid: &FrequencyGrid, opts: &QuadOptions) -> SampledSpectrum {
    sample(Contribution::Ladder, k, grid, opts)
}

pub fn crossed_spectrum(k: &KernelSet, grid: &FrequencyGrid, opts: &QuadOptions) -> SampledSpectrum {
    sample(Contribution::Crossed, k, grid, opts)
}

/// Frequency-integrated intensity with its elastic/inelastic split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Total {
    pub elastic: f64,
    pub inelastic: f64,
    pub total: f64,
    pub abs_error: f64,
    pub converged: bool,
}

impl Total {
    pub fn scale(self, factor: f64) -> Self {
        Self {
            elastic: self.elastic * factor,
            inelastic: self.inelastic * factor,
            total: self.total * factor,
            abs_error: self.abs_error * factor,
            ..self
        }
    }
}

/// Σ lines + ∫ smooth dω_D for one contribution, including |G|².
pub fn integrate_total(which: Contribution, k: &KernelSet, opts: &QuadOptions) -> Total {
    let line = which.line_at(k, opts);
    // inner integrals get a tighter budget so the outer integrand is smooth
    let inner = QuadOptions {
        abs_tol: opts.abs_tol * 1e-2,
        rel_tol: opts.rel_tol * 1e-2,
        ..*opts
    };
    let hints = k.resonance_hints();
    let bp = outer_breakpoints(&hints, k.params.gamma);
    let inner_ok = AtomicBool::new(true);
    let q = par_integrate_real_line(
        |wd| {
            let v = which.smooth_at(k, wd, &inner);
            if !v.converged {
                inner_ok.store(false, Ordering::Relaxed);
            }
            v.value
        },
        &bp,
        &scaled(opts, intensity_scale(k)),
    );
    Total {
        elastic: line.value,
        inelastic: q.value,
        total: line.value + q.value,
        abs_error: line.abs_error + q.abs_error,
        converged: line.converged && q.converged && inner_ok.into_inner(),
    }
}

/// Both totals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub ladder: Total,
    pub crossed: Total,
}

impl Totals {
    pub fn compute(k: &KernelSet, opts: &QuadOptions) -> Self {
        Self {
            ladder: integrate_total(Contribution::Ladder, k, opts),
            crossed: integrate_total(Contribution::Crossed, k, opts),
        }
    }

    /// I_C / I_L, or NaN when nothing is scattered.
    pub fn contrast(&self) -> f64 {
        self.crossed.total / self.ladder.total
    }
}

/// Per-run numerical health.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Absolute quadrature tolerance of the smooth densities.
    pub tolerance: f64,
    pub max_abs_error: f64,
    pub max_imag_ratio: f64,
    pub total_evaluations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl Diagnostics {
    pub fn flagged(&self) -> bool {
        !self.converged || !self.warnings.is_empty()
    }
}

/// Ladder and crossed spectra plus totals for one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbsResult {
    pub params: AtomFieldParams,
    /// Number of ordered atom pairs; multiplies every intensity.
    pub pair_multiplicity: f64,
    pub ladder: SampledSpectrum,
    pub crossed: SampledSpectrum,
    pub totals: Option<Totals>,
    pub diagnostics: Diagnostics,
}

/// Values with |Re| below this fraction of the scale are skipped by the
/// reality check.
const REALITY_FLOOR: f64 = 1e-12;
const REALITY_TOL: f64 = 1e-10;

impl CbsResult {
    pub fn compute(
        params: &AtomFieldParams,
        grid: &FrequencyGrid,
        opts: &QuadOptions,
        pair_multiplicity: f64,
        with_totals: bool,
    ) -> Result<Self> {
        if !(pair_multiplicity.is_finite() && pair_multiplicity > 0.0) {
            return Err(crate::error::PhysError::InvalidParameter {
                name: "pair_multiplicity",
                value: pair_multiplicity,
            }
            .into());
        }
        let k = KernelSet::new(params)?;
        let mut ladder = ladder_spectrum(&k, grid, opts);
        let mut crossed = crossed_spectrum(&k, grid, opts);
        let totals = with_totals.then(|| Totals::compute(&k, opts));

        // densities carry one more 1/γ than the weights
        let scale = intensity_scale(&k) / params.gamma;
        let floor = REALITY_FLOOR * scale.max(f64::MIN_POSITIVE);
        let mut warnings = Vec::new();
        let max_imag_ratio = ladder.max_imag_ratio(floor).max(crossed.max_imag_ratio(floor));
        if max_imag_ratio > REALITY_TOL {
            warnings.push(format!("imaginary residue {max_imag_ratio:e} exceeds {REALITY_TOL:e}"));
        }
        let mut converged = ladder.all_converged() && crossed.all_converged();
        if let Some(t) = &totals {
            converged &= t.ladder.converged && t.crossed.converged;
            if t.ladder.total < -t.ladder.abs_error {
                warnings.push(format!("negative ladder total {}", t.ladder.total));
            }
            if t.crossed.total.abs() > t.ladder.total + t.ladder.abs_error + t.crossed.abs_error {
                warnings.push("crossed total exceeds ladder total".into());
            }
        }
        if !converged {
            warnings.push("quadrature did not converge everywhere".into());
        }

        for s in [&mut ladder, &mut crossed] {
            s.line = s.line.scale(pair_multiplicity);
            for v in s.values.iter_mut() {
                *v = v.scale(pair_multiplicity);
            }
        }
        let totals = totals.map(|t| Totals {
            ladder: t.ladder.scale(pair_multiplicity),
            crossed: t.crossed.scale(pair_multiplicity),
        });
        let total_evaluations = ladder
            .values
            .iter()
            .chain(crossed.values.iter())
            .map(|v| v.evaluations)
            .sum();
        let diagnostics = Diagnostics {
            tolerance: opts.abs_tol * scale * pair_multiplicity,
            max_abs_error: ladder.max_abs_error().max(crossed.max_abs_error()),
            max_imag_ratio,
            total_evaluations,
            converged,
            warnings,
        };
        Ok(Self {
            params: *params,
            pair_multiplicity,
            ladder,
            crossed,
            totals,
            diagnostics,
        })
    }

    /// Elastic lines of both contributions, merged by position.
    pub fn elastic_lines(&self) -> Vec<(f64, f64, f64)> {
        let tol = LINE_MERGE_TOL * self.params.gamma;
        let l = merge_line_list(vec![SpectralLine::real(0.0, self.ladder.line.value)], tol);
        let c = merge_line_list(vec![SpectralLine::real(0.0, self.crossed.line.value)], tol);
        let weight = |v: &[SpectralLine]| v.first().map_or(0.0, |l| l.weight.re);
        if l.is_empty() && c.is_empty() {
            Vec::new()
        } else {
            vec![(0.0, weight(&l), weight(&c))]
        }
    }
}
