//! P0 against the closed-form resonance fluorescence spectrum.

use cbs_core::quadrature::integrate_real_line;
use cbs_core::{AtomFieldParams, KernelSet, QuadOptions};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Inelastic spectrum of a driven two-level atom, written out from the
/// optical Bloch equations by hand:
/// S(ω) = (1/π) Re[N(z) / (D c(z))] at z = −iω.
fn mollow(rabi: f64, det: f64, gamma: f64, omega: f64) -> f64 {
    let (o2, d2, g) = (rabi * rabi, det * det, gamma);
    let z = Complex64::new(0.0, -omega);
    let n = 4.0 * o2 * o2 * o2 + 8.0 * o2 * o2 * g * g + 16.0 * o2 * o2 * g * z + 8.0 * o2 * o2 * z * z;
    let d = (2.0 * o2 + 4.0 * d2 + g * g).powi(2);
    let c = 4.0 * z * z * z + 8.0 * g * z * z + (5.0 * g * g + 4.0 * o2 + 4.0 * d2) * z + g * g * g + 2.0 * o2 * g + 4.0 * d2 * g;
    (n / (c * d)).re / PI
}

fn mean_lower(rabi: f64, det: f64, gamma: f64) -> Complex64 {
    Complex64::new(2.0 * det, -gamma) * rabi / (2.0 * rabi * rabi + 4.0 * det * det + gamma * gamma)
}

fn excited(rabi: f64, det: f64, gamma: f64) -> f64 {
    0.25 * rabi * rabi / (det * det + 0.25 * gamma * gamma + 0.5 * rabi * rabi)
}

fn ks(rabi: f64, det: f64, gamma: f64) -> KernelSet {
    KernelSet::new(&AtomFieldParams::new(rabi, det, gamma).unwrap()).unwrap()
}

#[test]
fn p0_matches_closed_form_on_fine_grid() {
    for (rabi, det) in [(0.1, -5.0), (10.0, -5.0)] {
        let k = ks(rabi, det, 1.0);
        for i in 0..2001 {
            let w = -25.0 + 50.0 * i as f64 / 2000.0;
            let want = mollow(rabi, det, 1.0, w);
            let got = k.p0_smooth(w);
            assert!((got - want).abs() <= 1e-10 * want.abs(), "({rabi}, {det}) at {w}: {got} vs {want}");
        }
    }
}

#[test]
fn p0_matches_closed_form_for_other_units() {
    for (rabi, det, gamma) in [(0.7, 0.0, 1.0), (3.0, 2.0, 2.5), (0.02, -0.3, 0.4), (25.0, 1.0, 1.0)] {
        let k = ks(rabi, det, gamma);
        for i in 0..101 {
            let w = gamma * (-25.0 + 0.5 * i as f64);
            let want = mollow(rabi, det, gamma, w);
            let got = k.p0_smooth(w);
            assert!((got - want).abs() <= 1e-10 * want.abs(), "({rabi}, {det}, {gamma}) at {w}: {got} vs {want}");
        }
    }
}

#[test]
fn steady_state_matches_closed_form() {
    for (rabi, det) in [(0.1, -5.0), (10.0, -5.0), (1.0, 0.0), (2.0, 3.0)] {
        let k = ks(rabi, det, 1.0);
        let m = mean_lower(rabi, det, 1.0);
        assert!((k.steady_state()[0] - m).norm() <= 1e-14 * m.norm());
        assert!((k.excited_population() - excited(rabi, det, 1.0)).abs() <= 1e-14);
    }
}

#[test]
fn sum_rules_over_parameter_sweep() {
    let opts = QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-12,
        ..Default::default()
    };
    for rabi in [0.05, 0.3, 1.0, 4.0, 12.0] {
        for det in [-6.0, -2.0, 0.0, 1.5, 5.0] {
            let k = ks(rabi, det, 1.0);
            let elastic = mean_lower(rabi, det, 1.0).norm_sqr();
            let spec = k.p0_spectrum();
            assert_eq!(spec.lines.len(), 1);
            assert_eq!(spec.lines[0].position, 0.0);
            assert!((spec.lines[0].weight.re - elastic).abs() <= 1e-8);
            let q = integrate_real_line(|w| k.p0_smooth(w), &k.resonance_hints(), &opts);
            assert!(q.converged);
            let want = excited(rabi, det, 1.0) - elastic;
            assert!((q.value - want).abs() <= 1e-8, "({rabi}, {det}): {} vs {want}", q.value);
        }
    }
}
