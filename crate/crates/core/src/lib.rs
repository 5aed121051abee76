//! Rescaling of harmonic functions and maps toward affine limits, Marty-type
//! normality tests, and hyperbolicity criteria for tube domains in `ℂ²`.

pub mod field;
pub mod group;
pub mod maps;
pub mod normality;
pub mod renorm;
pub mod scenario;
pub mod sexpr;
pub mod tube;
