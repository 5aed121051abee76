use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::select::{zalcman_select, Budget, ContinuousBall};
use super::RenormError;
use crate::field::{tilde_derivative, AffineChart, FieldError, GridSpec, HarmonicExpr, ProbeBox};

/// A field carrying a first-order weight `φ` that scales linearly under
/// charts: the weight of `x ↦ f(a x + b)` at `x` is `a·φ(a x + b)`.
pub trait PhiField: Sync {
    fn dim(&self) -> usize;
    fn phi(&self, x: &[f64]) -> Result<f64, FieldError>;
    fn rescaled(&self, chart: &AffineChart) -> Result<Self, FieldError>
    where
        Self: Sized;
}

impl PhiField for HarmonicExpr {
    fn dim(&self) -> usize {
        HarmonicExpr::dim(self)
    }

    fn phi(&self, x: &[f64]) -> Result<f64, FieldError> {
        tilde_derivative(self, x)
    }

    fn rescaled(&self, chart: &AffineChart) -> Result<Self, FieldError> {
        self.clone().compose(chart)
    }
}

/// An indexed sequence of fields `n ↦ fₙ`.
pub trait RescaleFamily: Sync {
    type Member: PhiField;
    fn member(&self, n: usize) -> Result<Self::Member, FieldError>;
}

/// Adapter for closures producing harmonic expressions.
pub struct HarmonicFamily<F>(pub F);

impl<F> RescaleFamily for HarmonicFamily<F>
where
    F: Fn(usize) -> Result<HarmonicExpr, FieldError> + Sync,
{
    type Member = HarmonicExpr;

    fn member(&self, n: usize) -> Result<HarmonicExpr, FieldError> {
        (self.0)(n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RescaleOptions {
    /// Radius of the closed ball `V` around the base point.
    pub ball_radius: f64,
    pub base_n: usize,
    pub levels: usize,
    pub local_search: bool,
    pub budget: Budget,
    /// Indices with `φₙ(rₙ)` at or below this value are skipped.
    pub threshold: f64,
    pub probe_half: f64,
    pub probe_points: usize,
}

impl Default for RescaleOptions {
    fn default() -> Self {
        Self {
            ball_radius: 1.0,
            base_n: 8,
            levels: 3,
            local_search: true,
            budget: Budget::default(),
            threshold: 10.0,
            probe_half: 1.0,
            probe_points: 21,
        }
    }
}

impl RescaleOptions {
    pub fn finest_n(&self) -> usize {
        self.base_n << (self.levels.max(1) - 1)
    }

    pub fn probe(&self, dim: usize) -> Result<GridSpec, FieldError> {
        GridSpec::new(ProbeBox::cube(dim, self.probe_half), self.probe_points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenormStep {
    pub n: usize,
    /// Scale `aₙ = 1/φₙ(qₙ)`.
    pub a: f64,
    /// Centre `bₙ = qₙ`.
    pub b: Vec<f64>,
    pub eps: f64,
    pub tau: f64,
    pub phi_start: f64,
    pub phi_selected: f64,
    pub gtilde0: f64,
    /// `sup g̃ₙ` over the probe grid.
    pub sup_bound: f64,
    /// Sampling slack of the selection certificate seen on the probe.
    pub delta_grid: f64,
    pub lipschitz: f64,
    pub bound_ok: bool,
    pub iterations: usize,
    pub samples: usize,
    pub skipped_samples: usize,
}

impl RenormStep {
    pub fn chart(&self) -> AffineChart {
        AffineChart {
            scale: self.a,
            center: self.b.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub base_n: usize,
    pub levels: usize,
    pub finest_n: usize,
    pub local_search: bool,
    /// Continuous selections are certified on samples only.
    pub exhaustive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenormTrace {
    pub base_point: Vec<f64>,
    pub steps: Vec<RenormStep>,
    pub skipped: Vec<usize>,
    pub sampling: Sampling,
}

/// Builds the rescaling sequence `gₙ(x) = fₙ(aₙ x + bₙ)` with `g̃ₙ(0) = 1`.
///
/// For each index, `φ = f̃ₙ` on the closed ball around `r`, `εₙ = φ(rₙ)^{-1/3}`
/// and `τₙ = 1 + εₙ`; the selected `qₙ` gives `bₙ = qₙ`, `aₙ = 1/φ(qₙ)`.
pub fn make_rescaling<Fam: RescaleFamily>(
    family: &Fam,
    r: &[f64],
    rseq: &(dyn Fn(usize) -> Vec<f64> + Sync),
    indices: &[usize],
    opts: &RescaleOptions,
) -> Result<RenormTrace, RenormError> {
    let dim = r.len();
    let probe = opts.probe(dim)?;
    let probe_pts = probe.points();

    let mut members = Vec::new();
    let mut skipped = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for &n in indices {
        let f = family.member(n)?;
        if f.dim() != dim {
            return Err(FieldError::DimensionMismatch {
                expected: dim,
                found: f.dim(),
            }
            .into());
        }
        let rn = rseq(n);
        let phi0 = f.phi(&rn)?;
        if !(phi0 > opts.threshold) {
            skipped.push(n);
            continue;
        }
        if !(phi0 > last) {
            return Err(RenormError::Precondition(format!(
                "phi_n(r_n) must increase strictly; index {n} gives {phi0} after {last}"
            )));
        }
        last = phi0;
        members.push((n, f, rn, phi0));
    }
    if members.is_empty() {
        return Err(RenormError::Precondition(format!(
            "phi_n(r_n) never exceeds the threshold {}",
            opts.threshold
        )));
    }

    let mut steps = Vec::with_capacity(members.len());
    for (n, f, rn, phi0) in members {
        let space = ContinuousBall {
            center: r.to_vec(),
            radius: opts.ball_radius,
            phi: |x: &[f64]| f.phi(x),
            base_n: opts.base_n,
            levels: opts.levels,
            local_search: opts.local_search,
        };
        let eps = phi0.powf(-1.0 / 3.0);
        let tau = 1.0 + eps;
        let sel = zalcman_select(&space, &rn, tau, eps, opts.budget).map_err(|e| e.at_step(n))?;
        let chart = AffineChart::new(1.0 / sel.phi, sel.point.clone())?;
        let g = f.rescaled(&chart)?;
        let gtilde0 = g.phi(&vec![0.0; dim])?;
        let values = probe_pts
            .par_iter()
            .map(|x| g.phi(x))
            .collect::<Result<Vec<_>, _>>()?;
        let sup_bound = values.iter().cloned().fold(0.0, f64::max);
        let lipschitz = grid_lipschitz(&probe, &values);
        let delta_grid = lipschitz * (dim as f64).sqrt() / (2.0 * eps * opts.finest_n() as f64);
        steps.push(RenormStep {
            n,
            a: chart.scale,
            b: chart.center,
            eps,
            tau,
            phi_start: phi0,
            phi_selected: sel.phi,
            gtilde0,
            sup_bound,
            delta_grid,
            lipschitz,
            bound_ok: sup_bound <= tau + delta_grid + 1e-9,
            iterations: sel.iterations,
            samples: sel.samples,
            skipped_samples: sel.skipped,
        });
    }

    Ok(RenormTrace {
        base_point: r.to_vec(),
        steps,
        skipped,
        sampling: Sampling {
            base_n: opts.base_n,
            levels: opts.levels,
            finest_n: opts.finest_n(),
            local_search: opts.local_search,
            exhaustive: false,
        },
    })
}

/// Largest difference quotient between axis neighbours of a grid.
pub(crate) fn grid_lipschitz(grid: &GridSpec, values: &[f64]) -> f64 {
    let m = grid.dim();
    let n = grid.points_per_axis;
    let mut best: f64 = 0.0;
    for axis in 0..m {
        let h = (grid.region.hi[axis] - grid.region.lo[axis]) / (n - 1) as f64;
        if h <= 0.0 {
            continue;
        }
        let stride = n.pow((m - 1 - axis) as u32);
        for (flat, v) in values.iter().enumerate() {
            if (flat / stride) % n + 1 < n {
                best = best.max((values[flat + stride] - v).abs() / h);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::HolExpr;

    fn affine_family(n: usize) -> Result<HarmonicExpr, FieldError> {
        HarmonicExpr::affine(0.0, &[n as f64, 0.0])
    }

    #[test]
    fn affine_sequence_normalises_exactly() {
        let indices: Vec<usize> = (11..=15).collect();
        let trace = make_rescaling(
            &HarmonicFamily(affine_family),
            &[0.0, 0.0],
            &|_| vec![0.0, 0.0],
            &indices,
            &RescaleOptions::default(),
        )
        .unwrap();
        assert_eq!(trace.steps.len(), 5);
        for s in &trace.steps {
            assert_eq!(s.b, vec![0.0, 0.0]);
            assert!((s.a - 1.0 / s.n as f64).abs() < 1e-15);
            assert!((s.gtilde0 - 1.0).abs() < 1e-12);
            assert!(s.bound_ok);
        }
    }

    #[test]
    fn low_indices_are_skipped() {
        let trace = make_rescaling(
            &HarmonicFamily(affine_family),
            &[0.0, 0.0],
            &|_| vec![0.0, 0.0],
            &[3, 9, 12],
            &RescaleOptions::default(),
        )
        .unwrap();
        assert_eq!(trace.skipped, vec![3, 9]);
        assert_eq!(trace.steps.len(), 1);
    }

    #[test]
    fn non_monotone_sequence_rejected() {
        let err = make_rescaling(
            &HarmonicFamily(affine_family),
            &[0.0, 0.0],
            &|_| vec![0.0, 0.0],
            &[20, 15],
            &RescaleOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, RenormError::Precondition(_)));
    }

    #[test]
    fn scaled_square_near_origin() {
        // fₙ = Re((nz)²) with rₙ = (1/n, 1/n) → 0.
        let fam = HarmonicFamily(|n: usize| {
            HarmonicExpr::re(HolExpr::power(2)).compose(&AffineChart::new(n as f64, vec![0.0, 0.0])?)
        });
        let rseq = |n: usize| vec![1.0 / n as f64, 1.0 / n as f64];
        let indices: Vec<usize> = (4..=40).step_by(6).collect();
        let trace = make_rescaling(&fam, &[0.0, 0.0], &rseq, &indices, &RescaleOptions::default()).unwrap();
        assert!(!trace.steps.is_empty());
        let mut prev_a = f64::INFINITY;
        for s in &trace.steps {
            assert!((s.gtilde0 - 1.0).abs() < 1e-9);
            assert!(s.bound_ok, "{s:?}");
            assert!(s.a < prev_a);
            prev_a = s.a;
        }
        let last = trace.steps.last().unwrap();
        assert!(crate::field::distance(&last.b, &[0.0, 0.0]) < 0.5);
    }

    #[test]
    fn lipschitz_of_linear_grid_values() {
        let g = GridSpec::new(ProbeBox::cube(2, 1.0), 5).unwrap();
        let vals: Vec<f64> = g.points().iter().map(|x| 3.0 * x[0] - x[1]).collect();
        assert!((grid_lipschitz(&g, &vals) - 3.0).abs() < 1e-12);
    }
}
