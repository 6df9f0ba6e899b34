//! Coherent backscattering of intense laser light by two distant two-level
//! atoms, built from single-atom optical Bloch equations.

pub mod bloch;
pub mod error;
pub mod kernels;
pub mod phys;
pub mod quadrature;
pub mod transport;

pub use bloch::{BlochSystem, CorrelationTransform, Grade, GradedState};
pub use error::{CbsError, PhysError, Result};
pub use kernels::{p0_spectrum, p1_kernel, p2_kernel, KernelSet, ProbeKernels};
pub use phys::{saturation, AtomFieldParams, ProbeAmplitude, SmoothPart, SpectralDistribution, SpectralLabel, SpectralLine};
pub use quadrature::QuadOptions;
pub use transport::{CbsResult, Contribution, FrequencyGrid, SampledSpectrum, Totals};
