use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Core(#[from] cbs_core::CbsError),
    #[error("coupling modulus {0} is not below 1")]
    CouplingTooLarge(f64),
    #[error("two-atom generator is singular")]
    Singular,
    #[error("two-atom generator is not relaxing (max Re λ = {0})")]
    NotRelaxing(f64),
    #[error("invalid extraction setting: {0}")]
    InvalidSetting(String),
}

pub type Result<T> = std::result::Result<T, OracleError>;
