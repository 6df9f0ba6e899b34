use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhysError {
    #[error("invalid value {value} for parameter `{name}`")]
    InvalidParameter { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CbsError {
    #[error(transparent)]
    Phys(#[from] PhysError),
    #[error("Bloch generator is singular; no unique steady state")]
    SingularGenerator,
    #[error("Bloch generator does not relax (max Re eigenvalue {max_re})")]
    NotRelaxing { max_re: f64 },
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T> = std::result::Result<T, CbsError>;
