use thiserror::Error;

use crate::solver::RunDiagnostics;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown model '{0}'")]
    UnknownModel(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("entropy-variable inversion did not converge: {0}")]
    NoConvergence(String),
    #[error("augmentation variant mismatch: {0}")]
    VariantMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid augmentation: {0}")]
    InvalidAugmentation(String),
    #[error("invalid solver setup: {0}")]
    InvalidSetup(String),
    #[error("resolution violated: dx = {dx:e} > eps/8 = {limit:e} (eps = {eps:e})")]
    ResolutionViolation { dx: f64, eps: f64, limit: f64 },
    #[error("state left the inflated domain box at t = {t}")]
    StateBlowup { t: f64, partial: Box<RunDiagnostics> },
    #[error("non-finite diagnostic at t = {t}")]
    NonFiniteDiagnostic { t: f64, partial: Box<RunDiagnostics> },
    #[error("no jump found in the profile")]
    NoJumpFound,
    #[error("invalid diagnostic input: {0}")]
    InvalidDiagnostic(String),
}
