//! Planar open sets with exact line slices, and the hyperbolicity criteria
//! for tubes over them.

pub mod catalog;
mod classify;
mod curve;
mod domain;
mod hull;
mod lines;
mod slice;

pub use classify::{
    bounded_point, classify_tube, corollary_escape_check, BoundedOutcome, BrodyVerdict, ClassifyOptions,
    EscapeOptions, EscapeOutcome, EscapeReport, EscapeVariant, Evidence, KobayashiVerdict, Schedule,
    SegmentWitness, TubeReport, VariantCheck,
};
pub use curve::Curve;
pub use domain::{rotation, DomainExpr, Mat2, Point};
pub use hull::{hull_classify, support, HullClass, HullOptions, Normalization};
pub use lines::{contains_affine_line, Line, LineAnswer};
pub use slice::{Interval, Slice, SliceSet};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TubeError {
    #[error("invalid domain: {0}")]
    Invalid(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}
