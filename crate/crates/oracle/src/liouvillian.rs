//! Two driven two-level atoms that see each other's scattered field.
//!
//! Each atom is driven by the laser with real Rabi frequency Ω (laser phases
//! are absorbed into the atomic operators) and by the field of the other atom.
//! In that frame the couplings are directional: atom 1 feels G21·σ−₂ and atom
//! 2 feels G12·σ−₁, with the exchange Hamiltonian and the cross-damping
//! rate
//!
//! ```text
//! J = (G21 + G12*) / 2,   Γ = i (G21 − G12*)
//! H = Σⱼ [−δ σ+ⱼσ−ⱼ + Ω/2 (σ+ⱼ + σ−ⱼ)] + J σ+₁σ−₂ + J* σ+₂σ−₁
//! D(ρ) = Σᵢⱼ Γᵢⱼ (σ−ⱼ ρ σ+ᵢ − ½{σ+ᵢσ−ⱼ, ρ}),   Γ₁₁ = Γ₂₂ = γ, Γ₁₂ = Γ
//! ```
//!
//! The Heisenberg equation of σ−₁ then contains i G21 σz₁ σ−₂, i.e. the drive
//! of atom 1 becomes Ω/2 + G21 σ−₂.
//!
//! The state is the 15-vector of expectation values ⟨A⊗B⟩ with
//! A, B ∈ {1, σ−, σ+, σz}, the identity pair removed.

use nalgebra::{DMatrix, Matrix2, Matrix4, SMatrix, SVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use cbs_core::AtomFieldParams;

use crate::error::{OracleError, Result};

pub type C = Complex64;
pub const DIM: usize = 15;
pub type Generator = SMatrix<C, DIM, DIM>;
pub type State = SVector<C, DIM>;
type Op = Matrix4<C>;

/// Largest accepted coupling modulus.
pub const MAX_COUPLING: f64 = 1.0;
/// Above this modulus the |g|² expansion is unreliable.
pub const WARN_COUPLING: f64 = 0.05;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);
const I: C = C::new(0.0, 1.0);

/// Single-atom operator basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    Id,
    Lower,
    Raise,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::Id, Pauli::Lower, Pauli::Raise, Pauli::Z];

    /// Matrix in the (|e⟩, |g⟩) basis.
    fn matrix(self) -> Matrix2<C> {
        match self {
            Pauli::Id => Matrix2::new(ONE, ZERO, ZERO, ONE),
            Pauli::Lower => Matrix2::new(ZERO, ZERO, ONE, ZERO),
            Pauli::Raise => Matrix2::new(ZERO, ONE, ZERO, ZERO),
            Pauli::Z => Matrix2::new(ONE, ZERO, ZERO, -ONE),
        }
    }

    /// Dual element: tr(dual(a)† b) = δ_ab.
    fn dual(self) -> Matrix2<C> {
        match self {
            Pauli::Id | Pauli::Z => self.matrix() * C::new(0.5, 0.0),
            _ => self.matrix(),
        }
    }
}

fn kron(a: &Matrix2<C>, b: &Matrix2<C>) -> Op {
    Op::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

fn pair(a: Pauli, b: Pauli) -> Op {
    kron(&a.matrix(), &b.matrix())
}

/// Position of A⊗B in the 15-vector; `None` for the identity pair.
pub fn index(a: Pauli, b: Pauli) -> Option<usize> {
    let k = 4 * a as usize + b as usize;
    k.checked_sub(1)
}

fn basis() -> impl Iterator<Item = (Pauli, Pauli)> {
    Pauli::ALL
        .into_iter()
        .flat_map(|a| Pauli::ALL.into_iter().map(move |b| (a, b)))
        .skip(1)
}

/// Expansion coefficients of `op`: identity part and the 15 others.
fn expand(op: &Op) -> (C, State) {
    let coeff = |a: Pauli, b: Pauli| (kron(&a.dual(), &b.dual()).adjoint() * op).trace();
    let mut v = State::zeros();
    for (a, b) in basis() {
        v[index(a, b).unwrap()] = coeff(a, b);
    }
    (coeff(Pauli::Id, Pauli::Id), v)
}

/// Row/column of |g g⟩ in the 4×4 product basis.
const GROUND: usize = 3;

/// Both atoms in the ground state.
fn ground_vector() -> State {
    let mut x = State::zeros();
    for (a, b) in basis() {
        x[index(a, b).unwrap()] = pair(a, b)[(GROUND, GROUND)];
    }
    x
}

/// tr[op Δ] for Δ = ρ − ρ_ground given through its expectation offsets.
fn offset_trace(op: &Op, offset: &State) -> C {
    expand(op).1.dot(offset)
}

/// Expectation value of an operator from the offset u = x − x_ground, as
/// ⟨op⟩_ground + v·u so that nothing cancels for weak drives.
fn expectation(op: &Op, offset: &State) -> C {
    let (_, v) = expand(op);
    op[(GROUND, GROUND)] + v.dot(offset)
}

/// Directional couplings between the atoms, in units of γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    /// Field of atom 2 at atom 1, in Rabi units per unit σ−₂ and per γ.
    pub g21: C,
    /// Field of atom 1 at atom 2.
    pub g12: C,
}

impl Coupling {
    pub fn none() -> Self {
        Self { g21: ZERO, g12: ZERO }
    }

    /// G21 = |g| e^{iα}, G12 = |g| e^{iβ}.
    pub fn from_phases(modulus: f64, alpha: f64, beta: f64) -> Self {
        Self {
            g21: C::from_polar(modulus, alpha),
            g12: C::from_polar(modulus, beta),
        }
    }

    /// Propagation phase φ_c = k_L r and laser phase difference Θ between
    /// the atoms: α = φ_c − Θ, β = φ_c + Θ.
    pub fn from_geometry(modulus: f64, propagation_phase: f64, laser_phase: f64) -> Self {
        Self::from_phases(modulus, propagation_phase - laser_phase, propagation_phase + laser_phase)
    }

    pub fn modulus(&self) -> f64 {
        self.g21.norm().max(self.g12.norm())
    }
}

/// Which order-g terms are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CrossDamping {
    /// Exchange Hamiltonian and cross damping.
    #[default]
    Full,
    /// Exchange Hamiltonian only; for sensitivity checks.
    CoherentOnly,
}

#[derive(Debug, Clone)]
pub struct TwoAtomLiouvillian {
    pub params: AtomFieldParams,
    pub coupling: Coupling,
    pub damping: CrossDamping,
    /// d⟨B⟩/dt = generator·⟨B⟩ + inhomogeneity
    pub generator: Generator,
    pub inhomogeneity: State,
}

/// Both atoms' lowering operators and their raising partners.
fn lowering(atom: usize) -> Op {
    if atom == 1 {
        pair(Pauli::Lower, Pauli::Id)
    } else {
        pair(Pauli::Id, Pauli::Lower)
    }
}

fn raising(atom: usize) -> Op {
    lowering(atom).adjoint()
}

pub fn build_two_atom(params: &AtomFieldParams, coupling: Coupling, damping: CrossDamping) -> Result<TwoAtomLiouvillian> {
    params.validate().map_err(cbs_core::CbsError::from)?;
    let modulus = coupling.modulus();
    if !modulus.is_finite() || modulus >= MAX_COUPLING {
        return Err(OracleError::CouplingTooLarge(modulus));
    }
    if modulus > WARN_COUPLING {
        log::warn!("coupling modulus {modulus} is outside the weak-coupling regime");
    }
    let AtomFieldParams {
        rabi,
        detuning,
        gamma,
        ..
    } = *params;
    let (s1m, s2m, s1p, s2p) = (lowering(1), lowering(2), raising(1), raising(2));
    let (g21, g12) = (coupling.g21 * gamma, coupling.g12 * gamma);
    let exchange = 0.5 * (g21 + g12.conj());
    let cross = match damping {
        CrossDamping::Full => I * (g21 - g12.conj()),
        CrossDamping::CoherentOnly => ZERO,
    };
    let half_rabi = C::new(0.5 * rabi, 0.0);
    let mut h = Op::zeros();
    for (sm, sp) in [(&s1m, &s1p), (&s2m, &s2p)] {
        h += sp * sm * C::new(-detuning, 0.0) + (sp + sm) * half_rabi;
    }
    h += s1p * s2m * exchange + s2p * s1m * exchange.conj();
    // Γᵢⱼ with jump pairs (σ+ᵢ, σ−ⱼ)
    let rates = [
        (gamma.into(), &s1p, &s1m),
        (gamma.into(), &s2p, &s2m),
        (cross, &s1p, &s2m),
        (cross.conj(), &s2p, &s1m),
    ];
    let adjoint = |x: &Op| -> Op {
        let mut out = (h * x - x * h) * I;
        for (rate, sp, sm) in rates.iter() {
            let rate: C = *rate;
            let ppm = *sp * *sm;
            out += (*sp * x * *sm - (ppm * x + x * ppm) * C::new(0.5, 0.0)) * rate;
        }
        out
    };
    let mut generator = Generator::zeros();
    let mut inhomogeneity = State::zeros();
    for (a, b) in basis() {
        let row = index(a, b).unwrap();
        let (id, v) = expand(&adjoint(&pair(a, b)));
        inhomogeneity[row] = id;
        generator.set_row(row, &v.transpose());
    }
    Ok(TwoAtomLiouvillian {
        params: *params,
        coupling,
        damping,
        generator,
        inhomogeneity,
    })
}

impl TwoAtomLiouvillian {
    pub fn steady_state(&self) -> Result<State> {
        Ok(ground_vector() + self.steady_offset()?)
    }

    /// Steady state minus the two-atom ground state.
    fn steady_offset(&self) -> Result<State> {
        let g = ground_vector();
        let rhs = -(self.inhomogeneity + self.generator * g);
        let lu = self.generator.lu();
        let u = lu.solve(&rhs).ok_or(OracleError::Singular)?;
        // one refinement step for componentwise accuracy of the small entries
        let fix = lu.solve(&(rhs - self.generator * u)).ok_or(OracleError::Singular)?;
        Ok(u + fix)
    }

    /// Eigenvalues of the generator from a complex Schur decomposition.
    pub fn eigenvalues(&self) -> Vec<C> {
        let m = DMatrix::from_fn(DIM, DIM, |r, c| self.generator[(r, c)]);
        let (_, t) = nalgebra::linalg::Schur::new(m).unpack();
        (0..DIM).map(|k| t[(k, k)]).collect()
    }

    pub fn max_re_eigenvalue(&self) -> f64 {
        self.eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn check_relaxing(&self) -> Result<()> {
        let max_re = self.max_re_eigenvalue();
        if max_re < 0.0 {
            Ok(())
        } else {
            Err(OracleError::NotRelaxing(max_re))
        }
    }

    /// Density matrix in the (e, g)⊗(e, g) basis.
    pub fn density_matrix(&self, state: &State) -> Matrix4<C> {
        rho_from_expectations(state)
    }

    /// Equal-time moments ⟨σ+ᵢ σ−ⱼ⟩, the frequency integrals of the spectra.
    pub fn equal_time(&self) -> Result<[[C; 2]; 2]> {
        let offset = self.steady_offset()?;
        Ok(std::array::from_fn(|i| {
            std::array::from_fn(|j| expectation(&(raising(i + 1) * lowering(j + 1)), &offset))
        }))
    }

    /// Regression data for ⟨σ+ᵢ(t) σ−ⱼ(t + τ)⟩.
    pub fn correlations(&self) -> Result<Correlations> {
        self.check_relaxing()?;
        let offset = self.steady_offset()?;
        let mean_lower = [expectation(&lowering(1), &offset), expectation(&lowering(2), &offset)];
        let init = [1, 2].map(|i| {
            let sp = raising(i);
            let mean_sp = mean_lower[i - 1].conj();
            let mut y = State::zeros();
            for (a, b) in basis() {
                let k = index(a, b).unwrap();
                // Connected ⟨σ+ᵢ B⟩ − ⟨σ+ᵢ⟩⟨B⟩ with ρ = ρ_g + Δ. Since ⟨σ+ᵢ⟩_g = 0
                // it equals ⟨σ+ᵢ B⟩_g + tr[σ+ᵢ (B − ⟨B⟩_g) Δ] − ⟨σ+ᵢ⟩ tr[B Δ],
                // which has no cancellation between O(1) and O(Ω) terms.
                let op = pair(a, b);
                let shifted = op - Op::identity() * op[(GROUND, GROUND)];
                y[k] = (sp * op)[(GROUND, GROUND)] + offset_trace(&(sp * shifted), &offset)
                    - mean_sp * offset_trace(&op, &offset);
            }
            y
        });
        Ok(Correlations {
            generator: self.generator,
            mean_lower,
            init,
        })
    }
}

/// ρ = Σ ⟨P⟩ dual(P)†, so that tr(ρ P) = ⟨P⟩ for every basis element.
fn rho_from_expectations(state: &State) -> Op {
    let mut rho = kron(&Pauli::Id.dual(), &Pauli::Id.dual()).adjoint();
    for (a, b) in basis() {
        rho += kron(&a.dual(), &b.dual()).adjoint() * state[index(a, b).unwrap()];
    }
    rho
}

/// Stationary two-time correlations of the two atoms.
#[derive(Debug, Clone)]
pub struct Correlations {
    generator: Generator,
    /// ⟨σ−₁⟩, ⟨σ−₂⟩
    pub mean_lower: [C; 2],
    /// Connected initial conditions for σ+₁ and σ+₂.
    init: [State; 2],
}

/// Smooth cross spectra of both atoms at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumMatrix {
    /// s[i][j]: smooth part of the transform of ⟨σ+ᵢ(t) σ−ⱼ(t + τ)⟩.
    pub s: [[C; 2]; 2],
}

impl Correlations {
    /// Elastic line weights ⟨σ+ᵢ⟩⟨σ−ⱼ⟩ at zero offset.
    pub fn lines(&self) -> [[C; 2]; 2] {
        let m = self.mean_lower;
        [[m[0].conj() * m[0], m[0].conj() * m[1]], [m[1].conj() * m[0], m[1].conj() * m[1]]]
    }

    pub fn smooth(&self, omega: f64) -> SpectrumMatrix {
        let mut a = -self.generator;
        for k in 0..DIM {
            a[(k, k)] -= I * omega;
        }
        let lu = a.lu();
        let y = self.init.map(|b| lu.solve(&b).expect("relaxing generator"));
        let lower = [index(Pauli::Lower, Pauli::Id).unwrap(), index(Pauli::Id, Pauli::Lower).unwrap()];
        let two_pi = 2.0 * std::f64::consts::PI;
        let s = std::array::from_fn(|i| std::array::from_fn(|j| (y[i][lower[j]] + y[j][lower[i]].conj()) / two_pi));
        SpectrumMatrix { s }
    }
}

/// Intensity seen by a detector that weights the atoms' fields by `f`.
pub fn detected(s: &[[C; 2]; 2], f: [C; 2]) -> C {
    let mut out = ZERO;
    for i in 0..2 {
        for j in 0..2 {
            out += f[i].conj() * f[j] * s[i][j];
        }
    }
    out
}

/// Smooth detected spectrum on `omega` and the elastic weight at zero offset.
/// Errors when the generator does not relax.
pub fn detected_spectrum(liouv: &TwoAtomLiouvillian, omega: &[f64], f: [C; 2]) -> Result<(Vec<C>, C)> {
    let corr = liouv.correlations()?;
    let smooth = omega.iter().map(|&w| detected(&corr.smooth(w).s, f)).collect();
    Ok((smooth, detected(&corr.lines(), f)))
}
