//! Renormalization with torus targets and with `GL(n, ℂ)` targets.

mod lie;
mod torus;

pub use lie::{expm, from_rows, to_rows, lie_renormalize, matrix_df, CMat, LieOptions, LieRenormReport, LieStep, MatrixHoloMap};
pub use torus::{
    constant_adjusted_renormalize, quotient_distance, torus_renormalize, AdjustedReport, TorusClass, TorusMap,
    TorusOptions, TorusReport,
};

use thiserror::Error;

use crate::field::FieldError;
use crate::renorm::RenormError;
use crate::sexpr::ParseError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroupError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Renorm(#[from] RenormError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("singular matrix{}: det = {det:e}", step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    Singular { det: f64, step: Option<usize> },
    #[error("derivative cross-check failed: {0}")]
    Mismatch(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}
