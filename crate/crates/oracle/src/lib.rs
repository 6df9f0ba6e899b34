//! Reference solution for two atoms coupled through their scattered light,
//! from the full two-atom master equation.

pub mod error;
pub mod extract;
pub mod liouvillian;

pub use error::{OracleError, Result};
pub use extract::{
    extract_ladder_crossed, extract_totals, relative_l2, ExtractionDiagnostics, ExtractionOptions, OracleSpectra, OracleTotals,
};
pub use liouvillian::{build_two_atom, detected, detected_spectrum, Correlations, Coupling, CrossDamping, TwoAtomLiouvillian};
