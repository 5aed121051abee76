use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{RenormError, RenormTrace};
use crate::field::{fit_samples, AffineFunc, FieldError, GridSpec, HarmonicExpr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitClass {
    AffineNonconstant,
    ConstantFinite,
    PlusInfinity,
    MinusInfinity,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeOptions {
    pub res_max: f64,
    pub grad_min: f64,
    /// `±∞` requires the extreme grid values to pass this level monotonically.
    pub divergence: f64,
    /// No finite class is returned once a final value exceeds this in modulus.
    pub finite_cap: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            res_max: 1e-2,
            grad_min: 0.1,
            divergence: 1e3,
            finite_cap: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub class: LimitClass,
    pub affine: Option<AffineFunc>,
    /// Affine-fit residual of `gₙ` on the probe, per window step.
    pub residuals: Vec<f64>,
    /// `sup |gₙ − gₙ₊₁|` on the probe between consecutive window steps.
    pub gaps: Vec<f64>,
    pub window: Vec<usize>,
    pub final_max_abs: f64,
}

/// Samples `gₙ = fₙ(aₙ x + bₙ)` on the probe for the window steps and
/// classifies the limit. Never guesses: anything unproven is `Undecided`.
pub fn limit_probe<F>(
    trace: &RenormTrace,
    fseq: F,
    probe: &GridSpec,
    window: &[usize],
    opts: &ProbeOptions,
) -> Result<ConvergenceReport, RenormError>
where
    F: Fn(usize) -> Result<HarmonicExpr, FieldError>,
{
    if trace.steps.is_empty() {
        return Err(RenormError::Precondition("empty trace".into()));
    }
    if !probe.region.contains(&vec![0.0; probe.dim()]) {
        return Err(RenormError::Precondition("probe box must contain the origin".into()));
    }
    let steps: Vec<_> = trace
        .steps
        .iter()
        .filter(|s| window.contains(&s.n))
        .collect();
    if steps.is_empty() {
        return Err(RenormError::Precondition("window selects no trace step".into()));
    }
    let pts = probe.points();
    let mut samples = Vec::with_capacity(steps.len());
    for s in &steps {
        let g = fseq(s.n)?.compose(&s.chart())?;
        let vals = pts
            .par_iter()
            .map(|x| g.eval(x))
            .collect::<Result<Vec<_>, _>>()?;
        samples.push(vals);
    }
    classify(&pts, &samples, steps.iter().map(|s| s.n).collect(), opts)
}

/// Classification from sampled values `values[k][i] = g_{window[k]}(pts[i])`.
pub fn classify(
    pts: &[Vec<f64>],
    values: &[Vec<f64>],
    window: Vec<usize>,
    opts: &ProbeOptions,
) -> Result<ConvergenceReport, RenormError> {
    let gaps: Vec<f64> = values
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .collect();
    let last = values.last().ok_or(FieldError::DegenerateGrid)?;
    let final_max_abs = last.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mins: Vec<f64> = values.iter().map(|v| v.iter().cloned().fold(f64::INFINITY, f64::min)).collect();
    let maxs: Vec<f64> = values
        .iter()
        .map(|v| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let increasing = mins.windows(2).all(|w| w[1] > w[0]);
    let decreasing = maxs.windows(2).all(|w| w[1] < w[0]);

    let residuals = values
        .iter()
        .map(|v| fit_samples(pts, v).map(|f| f.residual))
        .collect::<Result<Vec<_>, _>>()?;

    let mut affine = None;
    let class = if values.len() > 1 && increasing && mins[mins.len() - 1] > opts.divergence {
        LimitClass::PlusInfinity
    } else if values.len() > 1 && decreasing && maxs[maxs.len() - 1] < -opts.divergence {
        LimitClass::MinusInfinity
    } else if final_max_abs > opts.finite_cap {
        LimitClass::Undecided
    } else {
        let fit = fit_samples(pts, last)?;
        let grad = fit.affine.gradient_norm();
        let class = if fit.residual > opts.res_max {
            LimitClass::Undecided
        } else if grad >= opts.grad_min {
            LimitClass::AffineNonconstant
        } else if grad <= opts.res_max && gaps.last().is_none_or(|g| *g <= opts.res_max) {
            LimitClass::ConstantFinite
        } else {
            LimitClass::Undecided
        };
        affine = Some(fit.affine);
        class
    };

    Ok(ConvergenceReport {
        class,
        affine,
        residuals,
        gaps,
        window,
        final_max_abs,
    })
}
