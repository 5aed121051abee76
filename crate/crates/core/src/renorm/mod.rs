//! Selection of near-maximal points, rescaling sequences with `g̃ₙ(0) = 1`,
//! and classification of their limits.

mod probe;
mod rescale;
mod select;

pub use probe::{classify, limit_probe, ConvergenceReport, LimitClass, ProbeOptions};
pub use rescale::{
    make_rescaling, HarmonicFamily, PhiField, RenormStep, RenormTrace, RescaleFamily, RescaleOptions,
    Sampling,
};
pub use select::{check_selection, zalcman_select, Budget, ContinuousBall, FiniteSpace, MetricSpaceView, Selection};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{tilde_derivative, AffineChart, FieldError, HarmonicExpr};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenormError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("selection incomplete{}: best candidate {best:?} with phi = {phi}", step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    SelectionIncomplete {
        step: Option<usize>,
        best: Vec<f64>,
        phi: f64,
    },
}

impl RenormError {
    pub(crate) fn at_step(self, n: usize) -> Self {
        match self {
            RenormError::SelectionIncomplete { best, phi, .. } => RenormError::SelectionIncomplete {
                step: Some(n),
                best,
                phi,
            },
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntireOptions {
    /// Number of dilation indices `n = 0..steps`.
    pub steps: usize,
    /// `fₙ(z) = f(p + λⁿ z)` with this `λ`.
    pub dilation: f64,
    /// Number of trailing steps used for classification.
    pub window: usize,
    pub rescale: RescaleOptions,
    pub probe: ProbeOptions,
}

impl Default for EntireOptions {
    fn default() -> Self {
        Self {
            steps: 24,
            dilation: 2.0,
            window: 3,
            rescale: RescaleOptions::default(),
            probe: ProbeOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntireRun {
    pub trace: RenormTrace,
    pub report: ConvergenceReport,
    /// `f(Bₙ + Aₙ x) = gₙ(x)` in the original coordinates.
    pub charts: Vec<AffineChart>,
}

/// Renormalizes an entire harmonic function along `fₙ(z) = f(p + λⁿ z)`.
pub fn renormalize_entire(f: &HarmonicExpr, p: &[f64], opts: &EntireOptions) -> Result<EntireRun, RenormError> {
    if p.len() != f.dim() {
        return Err(FieldError::DimensionMismatch {
            expected: f.dim(),
            found: p.len(),
        }
        .into());
    }
    if !(tilde_derivative(f, p)? > 0.0) {
        return Err(RenormError::Precondition("gradient vanishes at the seed point".into()));
    }
    if !(opts.dilation > 1.0) {
        return Err(RenormError::Precondition("dilation must exceed 1".into()));
    }
    let dim = f.dim();
    let lambda = |n: usize| opts.dilation.powi(n as i32);
    let fseq = |n: usize| f.clone().compose(&AffineChart::new(lambda(n), p.to_vec())?);
    let family = HarmonicFamily(fseq);
    let origin = vec![0.0; dim];
    let indices: Vec<usize> = (0..opts.steps).collect();
    let trace = make_rescaling(&family, &origin, &|_| vec![0.0; dim], &indices, &opts.rescale)?;

    let window: Vec<usize> = trace
        .steps
        .iter()
        .rev()
        .take(opts.window.max(1))
        .rev()
        .map(|s| s.n)
        .collect();
    let report = limit_probe(&trace, fseq, &opts.rescale.probe(dim)?, &window, &opts.probe)?;
    let charts = trace
        .steps
        .iter()
        .map(|s| AffineChart::new(lambda(s.n), p.to_vec()).map(|c| c.then(&s.chart())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EntireRun { trace, report, charts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::HolExpr;

    #[test]
    fn affine_function_first_step_identity_like() {
        let f = HarmonicExpr::affine(0.0, &[1.0, 0.0]).unwrap();
        let run = renormalize_entire(&f, &[0.0, 0.0], &EntireOptions::default()).unwrap();
        assert_eq!(run.report.class, LimitClass::AffineNonconstant);
        let first = &run.charts[0];
        assert!((first.scale - 1.0).abs() < 1e-12);
        assert!(first.center.iter().all(|c| c.abs() < 1e-12));
        assert!(run.report.residuals.iter().all(|r| *r < 1e-12));
    }

    #[test]
    fn square_real_part_goes_affine() {
        let f = HarmonicExpr::re(HolExpr::power(2));
        let run = renormalize_entire(&f, &[1.0, 0.0], &EntireOptions::default()).unwrap();
        assert_eq!(run.report.class, LimitClass::AffineNonconstant, "{:?}", run.report);
        assert!(run.trace.steps.len() <= 30);
        // Oracle: gₙ recomputed from the composed chart in original coordinates.
        let chart = run.charts.last().unwrap();
        let g = f.clone().compose(chart).unwrap();
        let a = run.report.affine.as_ref().unwrap();
        for x in [[0.3, -0.2], [-1.0, 1.0], [0.9, 0.9]] {
            assert!((g.eval(&x).unwrap() - a.eval(&x)).abs() <= 1e-2);
        }
    }

    #[test]
    fn zero_gradient_seed_rejected() {
        let f = HarmonicExpr::re(HolExpr::power(2));
        assert!(matches!(
            renormalize_entire(&f, &[0.0, 0.0], &EntireOptions::default()),
            Err(RenormError::Precondition(_))
        ));
    }
}
