//! The four probe-derivative kernels of the single-atom frequency correlation.
//!
//! With C(ω₁, ω₂) the double transform of ⟨σ+(t₁)σ−(t₂)⟩ (offsets from the
//! laser, densities per unit angular frequency):
//!
//! ```text
//! C|₀          = δ(ω₁ − ω₂) P0(ω₁)
//! ∂C/∂v        = δ(ω₂ − ω₁ − ν) P1(ν; ω₂)
//! ∂C/∂v*       = δ(ω₁ − ω₂ − ν) P1*(ν; ω₁)
//! ∂²C/∂v∂v*    = δ(ω₁ − ω₂) P2(ν; ω₁)
//! ```
//!
//! Each kernel is a finite set of elastic lines plus a smooth part, both
//! evaluated lazily at the requested arguments.

use std::sync::Arc;

use num_complex::Complex64;

use crate::bloch::{BlochSystem, CorrelationTransform, Grade, GradedState, Vec3};
use crate::error::Result;
use crate::phys::{AtomFieldParams, SmoothPart, SpectralDistribution, SpectralLabel, SpectralLine};

#[derive(Debug, Clone)]
pub struct KernelSet {
    pub params: AtomFieldParams,
    sys: BlochSystem,
    base: GradedState,
}

impl KernelSet {
    pub fn new(params: &AtomFieldParams) -> Result<Self> {
        let sys = BlochSystem::new(params)?;
        sys.check_relaxing()?;
        let base = sys.harmonic_response(0.0);
        Ok(Self {
            params: *params,
            sys,
            base,
        })
    }

    pub fn system(&self) -> &BlochSystem {
        &self.sys
    }

    pub fn steady_state(&self) -> Vec3 {
        self.base[Grade::G00]
    }

    pub fn excited_population(&self) -> f64 {
        self.sys.excited_population()
    }

    /// |⟨σ−⟩|², the weight of the single elastic line of P0.
    pub fn elastic_weight(&self) -> f64 {
        self.steady_state()[0].norm_sqr()
    }

    /// Inelastic resonance fluorescence spectrum.
    pub fn p0_smooth(&self, omega: f64) -> f64 {
        self.p0_smooth_complex(omega).re
    }

    /// [`KernelSet::p0_smooth`] before the real cast.
    pub fn p0_smooth_complex(&self, omega: f64) -> Complex64 {
        self.sys.correlation_transform(self.base.clone()).smooth(Grade::G00, omega)
    }

    pub fn p0_spectrum(&self) -> SpectralDistribution {
        let me = Arc::new(self.clone());
        SpectralDistribution {
            label: SpectralLabel::P0,
            lines: vec![SpectralLine::real(0.0, self.elastic_weight())],
            smooth: SmoothPart::Analytic(Arc::new(move |w| Complex64::new(me.p0_smooth(w), 0.0))),
            gamma: self.params.gamma,
        }
        .merge_lines()
    }

    /// Kernels for a probe at offset `nu`.
    pub fn probe(&self, nu: f64) -> ProbeKernels<'_> {
        let state = self.sys.harmonic_response(nu);
        ProbeKernels {
            ct: self.sys.correlation_transform(state),
        }
    }

    /// Resonance offsets that quadratures should resolve.
    pub fn resonance_hints(&self) -> Vec<f64> {
        let mut hints = self.sys.resonance_offsets();
        hints.push(0.0);
        hints.push(-self.params.detuning);
        let w = self.params.generalized_rabi();
        hints.push(w);
        hints.push(-w);
        hints.sort_by(f64::total_cmp);
        hints.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * self.params.gamma);
        hints
    }
}

/// P1 and P2 at one probe offset ν.
#[derive(Debug, Clone)]
pub struct ProbeKernels<'a> {
    ct: CorrelationTransform<'a>,
}

impl ProbeKernels<'_> {
    pub fn nu(&self) -> f64 {
        self.ct.state().nu
    }

    pub fn transform(&self) -> &CorrelationTransform<'_> {
        &self.ct
    }

    /// Smooth part of P1(ν; ω₂).
    pub fn p1_smooth(&self, omega2: f64) -> Complex64 {
        self.ct.smooth(Grade::G10, omega2)
    }

    /// Weight of the P1 line at ω₂ = ν: ⟨σ+⟩ elastic times the linear response.
    pub fn p1_line_at_probe(&self) -> Complex64 {
        let st = self.ct.state();
        st[Grade::G00][1] * st[Grade::G10][0]
    }

    /// Weight of the P1 line at ω₂ = 0: wave-mixing ⟨σ+⟩ times ⟨σ−⟩ elastic.
    pub fn p1_line_at_laser(&self) -> Complex64 {
        let st = self.ct.state();
        st[Grade::G10][1] * st[Grade::G00][0]
    }

    pub fn p1_lines(&self) -> Vec<SpectralLine> {
        vec![
            SpectralLine::new(self.nu(), self.p1_line_at_probe()),
            SpectralLine::new(0.0, self.p1_line_at_laser()),
        ]
    }

    /// Smooth part of P2(ν; ω₁); real, sign-indefinite.
    pub fn p2_smooth(&self, omega1: f64) -> f64 {
        self.p2_smooth_complex(omega1).re
    }

    /// [`ProbeKernels::p2_smooth`] before the real cast.
    pub fn p2_smooth_complex(&self, omega1: f64) -> Complex64 {
        self.ct.smooth(Grade::G11, omega1)
    }

    /// P2 lines at ω₁ = 0, −ν and +ν, in that order.
    pub fn p2_line_weights(&self) -> [f64; 3] {
        self.p2_line_weights_complex().map(|w| w.re)
    }

    pub fn p2_line_weights_complex(&self) -> [Complex64; 3] {
        let st = self.ct.state();
        let at_laser = st[Grade::G00][1] * st[Grade::G11][0] + st[Grade::G11][1] * st[Grade::G00][0];
        let mirror = st[Grade::G10][1] * st[Grade::G01][0];
        let at_probe = st[Grade::G01][1] * st[Grade::G10][0];
        [at_laser, mirror, at_probe]
    }

    pub fn p2_lines(&self) -> Vec<SpectralLine> {
        let nu = self.nu();
        let [a, b, c] = self.p2_line_weights();
        vec![
            SpectralLine::real(0.0, a),
            SpectralLine::real(-nu, b),
            SpectralLine::real(nu, c),
        ]
    }
}

pub fn p0_spectrum(params: &AtomFieldParams) -> Result<SpectralDistribution> {
    Ok(KernelSet::new(params)?.p0_spectrum())
}

/// Smooth part of P1(ω; ω₂).
pub fn p1_kernel(params: &AtomFieldParams, omega: f64, omega2: f64) -> Result<Complex64> {
    Ok(KernelSet::new(params)?.probe(omega).p1_smooth(omega2))
}

/// Smooth part of P2(ω; ω₁).
pub fn p2_kernel(params: &AtomFieldParams, omega: f64, omega1: f64) -> Result<f64> {
    Ok(KernelSet::new(params)?.probe(omega).p2_smooth(omega1))
}
