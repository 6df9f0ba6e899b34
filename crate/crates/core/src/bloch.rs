//! Single-atom optical Bloch equations under a laser plus a weak probe.
//!
//! The Bloch vector is s = (⟨σ−⟩, ⟨σ+⟩, ⟨σz⟩) in the frame rotating at the
//! laser frequency. With the drive E(t) = Ω/2 + v e^{-iνt} the equations read
//!
//! ```text
//! ds₁/dt = (iδ − γ/2) s₁ + i E s₃
//! ds₂/dt = (−iδ − γ/2) s₂ − i E* s₃
//! ds₃/dt = 2i E* s₁ − 2i E s₂ − γ s₃ − γ
//! ```
//!
//! i.e. ds/dt = (m0 + v e^{-iνt} m₊ + v* e^{iνt} m₋) s + b0.
//!
//! Two-time correlations ⟨σ+(t₁)σ−(t₂)⟩ are obtained by quantum regression and
//! evaluated directly in the frequency domain: every one-sided transform is a
//! chain of 3×3 resolvents (−iω − m0)⁻¹, so elastic δ-lines separate exactly
//! from the smooth remainder.

use std::f64::consts::PI;
use std::ops::{Add, Index, Mul};

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::error::{CbsError, Result};
use crate::phys::{AtomFieldParams, SpectralLine};

pub type C = Complex64;
pub type Vec3 = Vector3<C>;
pub type Mat3 = Matrix3<C>;

const I: C = C::new(0.0, 1.0);

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

/// Exchange the ⟨σ−⟩ and ⟨σ+⟩ components and conjugate everything.
pub fn swap_conj(v: &Vec3) -> Vec3 {
    Vec3::new(v[1].conj(), v[0].conj(), v[2].conj())
}

/// Same operation on a generator: P conj(m) P with P swapping the first two
/// basis vectors.
pub fn swap_conj_matrix(m: &Mat3) -> Mat3 {
    let mut out = m.map(|z| z.conj());
    out.swap_rows(0, 1);
    out.swap_columns(0, 1);
    out
}

#[derive(Debug, Clone)]
pub struct BlochSystem {
    pub m0: Mat3,
    pub b0: Vec3,
    pub mplus: Mat3,
    pub mminus: Mat3,
    pub params: AtomFieldParams,
    /// (−m0)⁻¹, the zero-frequency resolvent.
    r0: Mat3,
    steady: Vec3,
    /// (1 + ⟨σz⟩)/2 of the steady state, kept separately so that weak drives
    /// do not lose it to cancellation against −1.
    excited: f64,
}

impl BlochSystem {
    pub fn new(params: &AtomFieldParams) -> Result<Self> {
        params.validate()?;
        let AtomFieldParams {
            rabi,
            detuning,
            gamma,
            ..
        } = *params;
        let half_rabi = 0.5 * rabi;
        #[rustfmt::skip]
        let m0 = Mat3::new(
            C::new(-0.5 * gamma, detuning), c(0.0), I * half_rabi,
            c(0.0), C::new(-0.5 * gamma, -detuning), -I * half_rabi,
            I * rabi, -I * rabi, c(-gamma),
        );
        #[rustfmt::skip]
        let mplus = Mat3::new(
            c(0.0), c(0.0), I,
            c(0.0), c(0.0), c(0.0),
            c(0.0), -I * 2.0, c(0.0),
        );
        let mminus = swap_conj_matrix(&mplus);
        let r0 = (-m0).try_inverse().ok_or(CbsError::SingularGenerator)?;
        // offset u from the ground state (0, 0, −1): m0·u = (iΩ/2, −iΩ/2, 0)
        let u = m0
            .lu()
            .solve(&Vec3::new(I * half_rabi, -I * half_rabi, c(0.0)))
            .ok_or(CbsError::SingularGenerator)?;
        let steady = Vec3::new(u[0], u[1], c(u[2].re - 1.0));
        Ok(Self {
            m0,
            b0: Vec3::new(c(0.0), c(0.0), c(-gamma)),
            mplus,
            mminus,
            params: *params,
            r0,
            steady,
            excited: 0.5 * u[2].re,
        })
    }

    /// Solution of m0·s + b0 = 0.
    pub fn steady_state(&self) -> Vec3 {
        self.steady
    }

    pub fn excited_population(&self) -> f64 {
        self.excited
    }

    /// (−iω·1 − m0)⁻¹
    pub fn resolvent(&self, omega: f64) -> Mat3 {
        if omega == 0.0 {
            return self.r0;
        }
        let mut a = -self.m0;
        for k in 0..3 {
            a[(k, k)] -= I * omega;
        }
        // Re λ(m0) < 0 keeps this invertible for every real ω.
        a.try_inverse().expect("resolvent of a relaxing generator")
    }

    /// (−iω·1 − m0)⁻¹ applied to `rhs`.
    pub fn resolve(&self, omega: f64, rhs: &Vec3) -> Vec3 {
        self.resolvent(omega) * rhs
    }

    pub fn eigenvalues(&self) -> Vec<C> {
        eigenvalues3(&self.m0)
    }

    pub fn max_re_eigenvalue(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Imaginary parts of the m0 eigenvalues, i.e. where spectra resonate.
    pub fn resonance_offsets(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.eigenvalues().iter().map(|z| -z.im).collect();
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn check_relaxing(&self) -> Result<()> {
        let max_re = self.max_re_eigenvalue();
        if max_re < 0.0 {
            Ok(())
        } else {
            Err(CbsError::NotRelaxing { max_re })
        }
    }

    /// Steady state plus first and mixed second order in the probe.
    pub fn harmonic_response(&self, nu: f64) -> GradedState {
        let s00 = self.steady;
        let s10 = self.resolve(nu, &(self.mplus * s00));
        let s01 = self.resolve(-nu, &(self.mminus * s00));
        let s11 = self.resolve(0.0, &(self.mplus * s01 + self.mminus * s10));
        GradedState {
            nu,
            coeffs: [s00, s10, s01, s11],
            excited: self.excited,
        }
    }

    pub fn correlation_transform(&self, state: GradedState) -> CorrelationTransform<'_> {
        CorrelationTransform::new(self, state)
    }
}

/// Eigenvalues of a 3×3 complex matrix from its characteristic cubic.
fn eigenvalues3(m: &Mat3) -> Vec<C> {
    // λ³ + a λ² + b λ + c0 = 0
    let a = -m.trace();
    let b = m[(0, 0)] * m[(1, 1)] + m[(0, 0)] * m[(2, 2)] + m[(1, 1)] * m[(2, 2)]
        - m[(0, 1)] * m[(1, 0)]
        - m[(0, 2)] * m[(2, 0)]
        - m[(1, 2)] * m[(2, 1)];
    let c0 = -m.determinant();
    let mut roots = cubic_roots(a, b, c0);
    // Newton polish against the characteristic polynomial.
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let p = ((*r + a) * *r + b) * *r + c0;
            let dp = (3.0 * *r + 2.0 * a) * *r + b;
            if dp.norm() > 0.0 {
                *r -= p / dp;
            }
        }
    }
    roots
}

fn cubic_roots(a: C, b: C, c0: C) -> Vec<C> {
    // Depressed cubic t³ + p t + q with λ = t − a/3.
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c0;
    let disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    let mut u3 = -q / 2.0 + disc;
    if u3.norm() < (-q / 2.0 - disc).norm() {
        u3 = -q / 2.0 - disc;
    }
    let omega = C::new(-0.5, 0.75f64.sqrt());
    if u3.norm() == 0.0 {
        return vec![-shift; 3];
    }
    let u = u3.powf(1.0 / 3.0);
    (0..3)
        .map(|k| {
            let uk = u * omega.powi(k);
            uk - p / (3.0 * uk) - shift
        })
        .collect()
}

/// Perturbation grade (p, q): coefficient of v^p (v*)^q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Grade {
    G00,
    G10,
    G01,
    G11,
}

impl Grade {
    pub const ALL: [Grade; 4] = [Grade::G00, Grade::G10, Grade::G01, Grade::G11];

    pub fn powers(self) -> (u8, u8) {
        match self {
            Grade::G00 => (0, 0),
            Grade::G10 => (1, 0),
            Grade::G01 => (0, 1),
            Grade::G11 => (1, 1),
        }
    }

    /// n = p − q; the coefficient oscillates as e^{-inνt}.
    pub fn harmonic(self) -> i32 {
        let (p, q) = self.powers();
        p as i32 - q as i32
    }

    /// (p, q) → (q, p)
    pub fn swapped(self) -> Grade {
        match self {
            Grade::G10 => Grade::G01,
            Grade::G01 => Grade::G10,
            g => g,
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    /// Pairs of grades whose powers add up to `self`.
    fn splits(self) -> &'static [(Grade, Grade)] {
        match self {
            Grade::G00 => &[(Grade::G00, Grade::G00)],
            Grade::G10 => &[(Grade::G00, Grade::G10), (Grade::G10, Grade::G00)],
            Grade::G01 => &[(Grade::G00, Grade::G01), (Grade::G01, Grade::G00)],
            Grade::G11 => &[
                (Grade::G00, Grade::G11),
                (Grade::G11, Grade::G00),
                (Grade::G10, Grade::G01),
                (Grade::G01, Grade::G10),
            ],
        }
    }
}

/// Truncated power series in (v, v*) keeping the four grades.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Series([C; 4]);

impl Series {
    fn constant(x: C) -> Self {
        Series([x, c(0.0), c(0.0), c(0.0)])
    }
}

impl Add for Series {
    type Output = Series;
    fn add(self, rhs: Series) -> Series {
        Series(std::array::from_fn(|k| self.0[k] + rhs.0[k]))
    }
}

impl Mul<C> for Series {
    type Output = Series;
    fn mul(self, rhs: C) -> Series {
        Series(self.0.map(|x| x * rhs))
    }
}

impl Mul for Series {
    type Output = Series;
    fn mul(self, rhs: Series) -> Series {
        let mut out = [c(0.0); 4];
        for g in Grade::ALL {
            out[g.index()] = g
                .splits()
                .iter()
                .map(|(a, b)| self.0[a.index()] * rhs.0[b.index()])
                .sum();
        }
        Series(out)
    }
}

/// Long-time periodic Bloch vector expanded in the probe amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedState {
    pub nu: f64,
    coeffs: [Vec3; 4],
    excited: f64,
}

impl GradedState {
    /// Grade-(0,0) excited population.
    pub fn excited_population(&self) -> f64 {
        self.excited
    }

    fn component(&self, k: usize) -> Series {
        Series(self.coeffs.map(|v| v[k]))
    }
}

impl Index<Grade> for GradedState {
    type Output = Vec3;
    fn index(&self, g: Grade) -> &Vec3 {
        &self.coeffs[g.index()]
    }
}

/// Frequency-domain form of ⟨σ+(t₁)σ−(t₂)⟩ for one probe frequency.
///
/// For grade (p, q) with n = p − q the double transform is
/// δ(ω₂ − ω₁ − nν) times [`CorrelationTransform::smooth`] plus the lines from
/// [`CorrelationTransform::lines`]. All densities are per unit angular
/// frequency, so the grade-(0,0) smooth part integrates to the connected
/// excited population.
#[derive(Debug, Clone)]
pub struct CorrelationTransform<'a> {
    sys: &'a BlochSystem,
    state: GradedState,
    /// Connected regression initial conditions per grade.
    init: [Vec3; 4],
}

impl<'a> CorrelationTransform<'a> {
    fn new(sys: &'a BlochSystem, state: GradedState) -> Self {
        let s1 = state.component(0);
        let s2 = state.component(1);
        let s3 = state.component(2);
        // 1 + σz, with the accurate grade-(0,0) value
        let mut lift = Series::constant(c(1.0)) + s3;
        lift.0[0] = c(2.0 * state.excited);
        // ⟨σ+B⟩ − ⟨σ+⟩⟨B⟩ for B = σ−, σ+, σz, using σ+σ− = (1+σz)/2,
        // σ+σ+ = 0 and σ+σz = −σ+.
        let f1 = lift * c(0.5) + s2 * s1 * c(-1.0);
        let f2 = s2 * s2 * c(-1.0);
        let f3 = s2 * lift * c(-1.0);
        let init = std::array::from_fn(|k| Vec3::new(f1.0[k], f2.0[k], f3.0[k]));
        Self { sys, state, init }
    }

    pub fn state(&self) -> &GradedState {
        &self.state
    }

    fn y00(&self, z: f64) -> Vec3 {
        self.sys.resolve(z, &self.init[0])
    }

    fn y10(&self, z: f64) -> Vec3 {
        let nu = self.state.nu;
        let rhs = self.init[1] + self.sys.mplus * self.y00(z - nu);
        self.sys.resolve(z, &rhs)
    }

    fn y01(&self, z: f64) -> Vec3 {
        let nu = self.state.nu;
        let rhs = self.init[2] + self.sys.mminus * self.y00(z + nu);
        self.sys.resolve(z, &rhs)
    }

    fn y11(&self, z: f64) -> Vec3 {
        let nu = self.state.nu;
        let rhs = self.init[3] + self.sys.mplus * self.y01(z - nu) + self.sys.mminus * self.y10(z + nu);
        self.sys.resolve(z, &rhs)
    }

    /// ∫₀^∞ dτ e^{iωτ} of the connected correlation, grade `g`, at ω = `z`.
    pub fn one_sided(&self, g: Grade, z: f64) -> C {
        let y = match g {
            Grade::G00 => self.y00(z),
            Grade::G10 => self.y10(z),
            Grade::G01 => self.y01(z),
            Grade::G11 => self.y11(z),
        };
        y[0]
    }

    /// Smooth coefficient of δ(ω₂ − ω₁ − nν) as a function of ω₂, with the
    /// τ < 0 branch supplied by Hermitian symmetry.
    ///
    /// Same value as combining two [`CorrelationTransform::one_sided`] calls,
    /// but each distinct resolvent is formed once.
    pub fn smooth(&self, g: Grade, omega2: f64) -> C {
        let nu = self.state.nu;
        let sys = self.sys;
        let [i00, i10, i01, i11] = &self.init;
        let (forward, backward) = match g {
            Grade::G00 => {
                let y = (sys.resolvent(omega2) * i00)[0];
                (y, y)
            }
            Grade::G10 | Grade::G01 => {
                // forward at ω₂, backward at ω₁ = ω₂ − nν; each needs the other's resolvent
                let omega1 = omega2 - g.harmonic() as f64 * nu;
                let (r2, r1) = (sys.resolvent(omega2), sys.resolvent(omega1));
                let (m2, i2, m1, i1) = if g == Grade::G10 {
                    (sys.mplus, i10, sys.mminus, i01)
                } else {
                    (sys.mminus, i01, sys.mplus, i10)
                };
                let fwd = (r2 * (i2 + m2 * (r1 * i00)))[0];
                let bwd = (r1 * (i1 + m1 * (r2 * i00)))[0];
                (fwd, bwd)
            }
            Grade::G11 => {
                let rz = sys.resolvent(omega2);
                let y00 = rz * i00;
                let y01 = sys.resolvent(omega2 - nu) * (i01 + sys.mminus * y00);
                let y10 = sys.resolvent(omega2 + nu) * (i10 + sys.mplus * y00);
                let y = (rz * (i11 + sys.mplus * y01 + sys.mminus * y10))[0];
                (y, y)
            }
        };
        (forward + backward.conj()) / (2.0 * PI)
    }

    /// Disconnected part ⟨σ+(t₁)⟩⟨σ−(t₂)⟩ as lines in ω₂.
    pub fn lines(&self, g: Grade) -> Vec<SpectralLine> {
        g.splits()
            .iter()
            .map(|(first, second)| {
                let weight = self.state[*first][1] * self.state[*second][0];
                SpectralLine::new(second.harmonic() as f64 * self.state.nu, weight)
            })
            .collect()
    }
}
