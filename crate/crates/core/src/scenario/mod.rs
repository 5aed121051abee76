//! Batch scenarios: TOML configs, dispatch to the analysis modules and
//! machine-readable reports.

mod config;
pub mod library;
mod run;

pub use config::{
    BoxSpec, ImageSpec, LieSpec, MapSpec, MatrixRows, NormalitySpec, NormalityTest, OutputConfig, RenormalizeSpec,
    ScenarioConfig, ScenarioKind, TorusSpec, TubeSpec,
};
pub use run::{execute, report_doc, run_scenario, write_outputs, CsvTable, Outcome, Provenance, Status};

use thiserror::Error;

use crate::field::FieldError;
use crate::group::GroupError;
use crate::renorm::RenormError;
use crate::sexpr::ParseError;
use crate::tube::TubeError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Precondition(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl ScenarioError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Parse(_) => 2,
            ScenarioError::Precondition(_) => 3,
            ScenarioError::Numeric(_) => 4,
            ScenarioError::Io(_) => 1,
        }
    }

    pub(crate) fn in_field(field: &str, e: ParseError) -> Self {
        ScenarioError::Parse(format!("in `{field}` at {e}"))
    }
}

impl From<FieldError> for ScenarioError {
    fn from(e: FieldError) -> Self {
        match e {
            FieldError::Overflow | FieldError::NonFinite => ScenarioError::Numeric(e.to_string()),
            _ => ScenarioError::Precondition(e.to_string()),
        }
    }
}

impl From<RenormError> for ScenarioError {
    fn from(e: RenormError) -> Self {
        match e {
            RenormError::Field(f) => f.into(),
            RenormError::Precondition(_) => ScenarioError::Precondition(e.to_string()),
            RenormError::SelectionIncomplete { .. } => ScenarioError::Numeric(e.to_string()),
        }
    }
}

impl From<TubeError> for ScenarioError {
    fn from(e: TubeError) -> Self {
        ScenarioError::Precondition(e.to_string())
    }
}

impl From<GroupError> for ScenarioError {
    fn from(e: GroupError) -> Self {
        match e {
            GroupError::Field(f) => f.into(),
            GroupError::Renorm(r) => r.into(),
            GroupError::Parse(p) => ScenarioError::Parse(p.to_string()),
            GroupError::Singular { .. } | GroupError::Invalid(_) => ScenarioError::Precondition(e.to_string()),
            GroupError::Mismatch(_) => ScenarioError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for ScenarioError {
    fn from(e: std::io::Error) -> Self {
        ScenarioError::Io(e.to_string())
    }
}
