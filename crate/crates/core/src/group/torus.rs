use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GroupError;
use crate::field::{fit_samples, AffineChart, AffineFunc, FieldError, HarmonicExpr};
use crate::maps::{ComponentClass, HarmonicMap, MapRenormOptions, MapRenormReport};
use crate::renorm::{limit_probe, make_rescaling, PhiField, RenormTrace, RescaleFamily, RescaleOptions};

/// A map into `ℝⁿ/ℤⁿ` given by a harmonic lift into `ℝⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusMap {
    pub lift: HarmonicMap,
}

impl TorusMap {
    pub fn new(lift: HarmonicMap) -> Self {
        Self { lift }
    }

    pub fn target_dim(&self) -> usize {
        self.lift.target_dim()
    }

    /// The same torus map through the lift shifted by `shift`.
    pub fn shifted(&self, shift: &[f64]) -> Result<Self, FieldError> {
        if shift.len() != self.target_dim() {
            return Err(FieldError::DimensionMismatch {
                expected: self.target_dim(),
                found: shift.len(),
            });
        }
        let comps = self
            .lift
            .components()
            .iter()
            .zip(shift)
            .map(|(c, s)| c.clone().plus_constant(*s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            lift: HarmonicMap::new(comps)?,
        })
    }

    pub fn derivative(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, FieldError> {
        self.lift.differential(x)
    }
}

fn frobenius(m: &[Vec<f64>]) -> f64 {
    m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

impl PhiField for TorusMap {
    fn dim(&self) -> usize {
        self.lift.source_dim()
    }

    fn phi(&self, x: &[f64]) -> Result<f64, FieldError> {
        Ok(frobenius(&self.derivative(x)?))
    }

    fn rescaled(&self, chart: &AffineChart) -> Result<Self, FieldError> {
        Ok(Self {
            lift: self.lift.rescaled(chart)?,
        })
    }
}

struct TorusFamily<F>(F);

impl<F> RescaleFamily for TorusFamily<F>
where
    F: Fn(usize) -> Result<TorusMap, FieldError> + Sync,
{
    type Member = TorusMap;

    fn member(&self, n: usize) -> Result<TorusMap, FieldError> {
        (self.0)(n)
    }
}

/// Euclidean distance from `a − b` to the nearest point of `ℤⁿ`.
pub fn quotient_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            let r = d - d.round();
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TorusClass {
    AffineNonconstant,
    AffineConstant,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TorusOptions {
    pub rescale: RescaleOptions,
    pub res_max: f64,
    pub grad_min: f64,
}

impl Default for TorusOptions {
    fn default() -> Self {
        Self {
            rescale: RescaleOptions::default(),
            res_max: 1e-2,
            grad_min: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusStep {
    pub n: usize,
    /// `sup ‖DGₙ(x) − D̄‖` over the probe.
    pub constancy: f64,
    /// `sup` quotient distance between `Gₙ` and its affine fit.
    pub quotient_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusReport {
    pub class: TorusClass,
    /// Probe mean of the rescaled differential at the last step.
    pub differential: Vec<Vec<f64>>,
    /// Affine limit components; constants reduced to `[0, 1)`.
    pub affine: Vec<AffineFunc>,
    pub steps: Vec<TorusStep>,
}

fn torus_step(g: &TorusMap, n: usize, pts: &[Vec<f64>]) -> Result<(TorusStep, Vec<Vec<f64>>, Vec<AffineFunc>), FieldError> {
    let samples = pts
        .par_iter()
        .map(|x| Ok((g.lift.eval(x)?, g.derivative(x)?)))
        .collect::<Result<Vec<_>, FieldError>>()?;
    let (rows, cols) = (g.target_dim(), pts[0].len());
    let mut mean = vec![vec![0.0; cols]; rows];
    for (_, d) in &samples {
        for (mr, dr) in mean.iter_mut().zip(d) {
            for (m, v) in mr.iter_mut().zip(dr) {
                *m += v / pts.len() as f64;
            }
        }
    }
    let constancy = samples
        .iter()
        .map(|(_, d)| {
            let diff: Vec<Vec<f64>> = d
                .iter()
                .zip(&mean)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect();
            frobenius(&diff)
        })
        .fold(0.0, f64::max);
    let mut affine = Vec::with_capacity(rows);
    for i in 0..rows {
        let vals: Vec<f64> = samples.iter().map(|(v, _)| v[i]).collect();
        let mut fit = fit_samples(pts, &vals)?.affine;
        fit.constant = fit.constant.rem_euclid(1.0);
        affine.push(fit);
    }
    let quotient_residual = pts
        .iter()
        .zip(&samples)
        .map(|(x, (v, _))| {
            let a: Vec<f64> = affine.iter().map(|f| f.eval(x)).collect();
            quotient_distance(v, &a)
        })
        .fold(0.0, f64::max);
    Ok((
        TorusStep {
            n,
            constancy,
            quotient_residual,
        },
        mean,
        affine,
    ))
}

/// Rescales with `φ = ‖F′‖` and measures how close the rescaled maps are to
/// an affine map modulo `ℤⁿ`.
pub fn torus_renormalize<F>(
    fseq: F,
    r: &[f64],
    rseq: &(dyn Fn(usize) -> Vec<f64> + Sync),
    indices: &[usize],
    opts: &TorusOptions,
) -> Result<(RenormTrace, TorusReport), GroupError>
where
    F: Fn(usize) -> Result<TorusMap, FieldError> + Sync,
{
    let family = TorusFamily(fseq);
    let trace = make_rescaling(&family, r, rseq, indices, &opts.rescale)?;
    let pts = opts.rescale.probe(r.len())?.points();
    let mut steps = Vec::with_capacity(trace.steps.len());
    let mut last = None;
    for s in &trace.steps {
        let g = family.member(s.n)?.rescaled(&s.chart())?;
        let (step, mean, affine) = torus_step(&g, s.n, &pts)?;
        steps.push(step);
        last = Some((mean, affine));
    }
    let (differential, affine) = last.ok_or_else(|| GroupError::Invalid("empty trace".into()))?;
    let fin = steps.last().expect("nonempty trace");
    let norm = frobenius(&differential);
    let class = if fin.quotient_residual > opts.res_max || fin.constancy > opts.res_max {
        TorusClass::Undecided
    } else if norm >= opts.grad_min {
        TorusClass::AffineNonconstant
    } else if norm <= opts.res_max {
        TorusClass::AffineConstant
    } else {
        TorusClass::Undecided
    };
    Ok((
        trace,
        TorusReport {
            class,
            differential,
            affine,
            steps,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustedReport {
    /// `(n, cₙ)` with `cₙ = −fₙ(bₙ)`.
    pub constants: Vec<(usize, Vec<f64>)>,
    pub report: MapRenormReport,
    /// Component classes of the same rescalings without the shift.
    pub unshifted: Vec<ComponentClass>,
}

/// Rescales with `φ = ‖F′‖`, shifts by `cₙ = −fₙ(bₙ)` and classifies the
/// components of `fₙ(aₙ x + bₙ) + cₙ`.
pub fn constant_adjusted_renormalize<F>(
    fseq: F,
    r: &[f64],
    rseq: &(dyn Fn(usize) -> Vec<f64> + Sync),
    indices: &[usize],
    opts: &MapRenormOptions,
) -> Result<(RenormTrace, AdjustedReport), GroupError>
where
    F: Fn(usize) -> Result<HarmonicMap, FieldError> + Sync,
{
    let family = TorusFamily(|n: usize| fseq(n).map(TorusMap::new));
    let trace = make_rescaling(&family, r, rseq, indices, &opts.rescale)?;
    let mut constants = Vec::with_capacity(trace.steps.len());
    for s in &trace.steps {
        let v = fseq(s.n)?.eval(&s.b)?;
        constants.push((s.n, v.into_iter().map(|x| -x).collect::<Vec<f64>>()));
    }
    let shift: HashMap<usize, Vec<f64>> = constants.iter().cloned().collect();
    let window: Vec<usize> = if opts.window.is_empty() {
        let ns: Vec<usize> = trace.steps.iter().map(|s| s.n).collect();
        ns[ns.len().saturating_sub(3)..].to_vec()
    } else {
        opts.window.clone()
    };
    let probe = opts.rescale.probe(r.len())?;
    let m = fseq(trace.steps[0].n)?.target_dim();
    let component = |n: usize, i: usize| -> Result<HarmonicExpr, FieldError> {
        let h = fseq(n)?;
        h.components().get(i).cloned().ok_or(FieldError::DimensionMismatch {
            expected: m,
            found: h.target_dim(),
        })
    };
    let mut components = Vec::with_capacity(m);
    let mut unshifted = Vec::with_capacity(m);
    for i in 0..m {
        let shifted = |n: usize| {
            let c = shift.get(&n).map(|c| c[i]).unwrap_or(0.0);
            component(n, i)?.plus_constant(c)
        };
        components.push(limit_probe(&trace, shifted, &probe, &window, &opts.probe)?);
        let plain = limit_probe(&trace, |n| component(n, i), &probe, &window, &opts.probe)?;
        unshifted.push(plain.class.into());
    }
    let classes: Vec<ComponentClass> = components.iter().map(|c| c.class.into()).collect();
    let guarantee = classes.contains(&ComponentClass::AffineNonconstant);
    Ok((
        trace,
        AdjustedReport {
            constants,
            report: MapRenormReport {
                classes,
                components,
                guarantee,
            },
            unshifted,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::HolExpr;
    use crate::renorm::RenormError;
    use num_complex::Complex64;

    fn origin(_: usize) -> Vec<f64> {
        vec![0.0, 0.0]
    }

    #[test]
    fn quotient_distance_ignores_lattice_shifts() {
        assert!(quotient_distance(&[3.25, -1.0], &[0.25, 4.0]) < 1e-15);
        assert!((quotient_distance(&[0.9], &[0.0]) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn lifts_differing_by_constants_share_derivatives() {
        let lift = HarmonicMap::from_holomorphic(HolExpr::power(2), HolExpr::exp(HolExpr::z()));
        let t = TorusMap::new(lift);
        let s = t.shifted(&[3.0, -7.0]).unwrap();
        let x = [0.3, -1.2];
        assert_eq!(t.derivative(&x).unwrap(), s.derivative(&x).unwrap());
        assert_eq!(t.phi(&x).unwrap(), s.phi(&x).unwrap());
    }

    #[test]
    fn linear_lifts_are_affine_mod_lattice() {
        let fseq = |k: usize| {
            let u = HarmonicExpr::affine(0.0, &[k as f64, 0.0])?;
            Ok(TorusMap::new(HarmonicMap::new(vec![u])?))
        };
        let (_, report) = torus_renormalize(fseq, &[0.0, 0.0], &origin, &[20, 21, 22], &TorusOptions::default()).unwrap();
        assert_eq!(report.class, TorusClass::AffineNonconstant);
        assert!(report.steps.iter().all(|s| s.constancy < 1e-9));
    }

    #[test]
    fn squares_into_the_two_torus() {
        let fseq = |k: usize| {
            let kz2 = HolExpr::poly(vec![Complex64::new(0.0, 0.0); 2].into_iter().chain([Complex64::new((k * k) as f64, 0.0)]).collect());
            Ok(TorusMap::new(HarmonicMap::new(vec![HarmonicExpr::re(kz2.clone()), HarmonicExpr::im(kz2)])?))
        };
        let indices: Vec<usize> = (10..14).collect();
        let (_, report) =
            torus_renormalize(fseq, &[0.0, 0.0], &|_| vec![0.5, 0.5], &indices, &TorusOptions::default()).unwrap();
        assert_eq!(report.class, TorusClass::AffineNonconstant);
        assert!(report.steps.last().unwrap().quotient_residual <= 1e-2);
    }

    #[test]
    fn constant_maps_are_rejected() {
        let fseq = |_: usize| Ok(TorusMap::new(HarmonicMap::new(vec![HarmonicExpr::constant(2, 0.4)?])?));
        let err = torus_renormalize(fseq, &[0.0, 0.0], &origin, &[1, 2, 3], &TorusOptions::default()).unwrap_err();
        assert!(matches!(err, GroupError::Renorm(RenormError::Precondition(_))));
    }

    #[test]
    fn runaway_constants_are_cancelled() {
        let fseq = |k: usize| {
            let kf = k as f64;
            HarmonicMap::new(vec![HarmonicExpr::affine(kf * kf, &[kf, 0.0])?])
        };
        let indices: Vec<usize> = (20..24).collect();
        let (trace, rep) =
            constant_adjusted_renormalize(fseq, &[0.0, 0.0], &origin, &indices, &MapRenormOptions::default()).unwrap();
        assert_eq!(rep.report.classes, vec![ComponentClass::AffineNonconstant]);
        for ((n, c), s) in rep.constants.iter().zip(&trace.steps) {
            let kf = *n as f64;
            assert!((c[0] + kf * kf + kf * s.b[0]).abs() < 1e-9);
        }
        let fit = rep.report.components[0].affine.as_ref().unwrap();
        assert!(fit.constant.abs() < 1e-9);
        assert!(rep.report.components[0].final_max_abs < 2.0);
    }

    #[test]
    fn exponential_after_shift() {
        let fseq = |k: usize| {
            let ekz = HolExpr::exp(HolExpr::poly(vec![Complex64::new(0.0, 0.0), Complex64::new(k as f64, 0.0)]));
            HarmonicMap::new(vec![HarmonicExpr::re(ekz)])
        };
        let indices: Vec<usize> = (300..304).collect();
        let (_, rep) =
            constant_adjusted_renormalize(fseq, &[0.0, 0.0], &origin, &indices, &MapRenormOptions::default()).unwrap();
        assert!(rep.report.guarantee);
        let fit = rep.report.components[0].affine.as_ref().unwrap();
        assert!(fit.constant.abs() < 1e-6);
    }

    #[test]
    fn bounded_values_keep_classification() {
        let fseq = |k: usize| {
            let kz = HolExpr::poly(vec![Complex64::new(0.0, 0.0), Complex64::new(k as f64, 0.0)]);
            HarmonicMap::new(vec![HarmonicExpr::re(HolExpr::mul(vec![kz.clone(), kz]))])
        };
        let indices: Vec<usize> = (20..24).collect();
        let (_, rep) =
            constant_adjusted_renormalize(fseq, &[0.0, 0.0], &|_| vec![0.01, 0.0], &indices, &MapRenormOptions::default())
                .unwrap();
        assert!(rep.constants.iter().all(|(_, c)| c[0].abs() < 1e3));
        assert_eq!(rep.report.classes, rep.unshifted);
    }
}
