//! Derivative-bound normality tests for finite samples of harmonic families
//! and the one-sided Brody test for entire harmonic functions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::{
    affine_fit, norm, tilde_from_parts, AffineFit, FieldError, GridSpec, HarmonicExpr, ProbeBox, ScalarField,
};

/// Finitely many harmonic functions on a common box.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySample {
    pub members: Vec<HarmonicExpr>,
    pub domain: ProbeBox,
}

impl FamilySample {
    pub fn new(members: Vec<HarmonicExpr>, domain: ProbeBox) -> Result<Self, FieldError> {
        let m = domain.dim();
        if m == 0 {
            return Err(FieldError::ZeroDimension);
        }
        if let Some(f) = members.iter().find(|f| f.dim() != m) {
            return Err(FieldError::DimensionMismatch {
                expected: m,
                found: f.dim(),
            });
        }
        Ok(Self { members, domain })
    }

    /// Grid points lying in `k`, after checking `k ⊆ domain`.
    fn sample_points(&self, k: &ProbeBox, grid: &GridSpec) -> Result<Vec<Vec<f64>>, FieldError> {
        if !self.domain.contains_box(k) {
            return Err(FieldError::Precondition("compact box must lie in the family domain".into()));
        }
        if grid.dim() != k.dim() {
            return Err(FieldError::DimensionMismatch {
                expected: k.dim(),
                found: grid.dim(),
            });
        }
        let pts: Vec<Vec<f64>> = grid.points().into_iter().filter(|x| k.contains(x)).collect();
        if pts.is_empty() {
            return Err(FieldError::DegenerateGrid);
        }
        Ok(pts)
    }

    /// `(value, |∇f|)` for every member at every point, member-major.
    fn scan(&self, pts: &[Vec<f64>]) -> Result<Vec<Vec<(f64, f64)>>, FieldError> {
        self.members
            .iter()
            .map(|f| {
                pts.par_iter()
                    .map(|x| f.value_and_gradient(x).map(|(v, g)| (v, norm(&g))))
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    BoundedDerivative,
    UnboundedDerivative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub index: usize,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub sup: f64,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub threshold: f64,
    pub samples: usize,
}

pub const DEFAULT_M_BIG: f64 = 1e4;

/// `sup f̃` over the sampled members and points of `k`; unbounded when it
/// exceeds `m_big`, with the maximizing (member, point) as witness.
pub fn marty_bound(
    fam: &FamilySample,
    k: &ProbeBox,
    grid: &GridSpec,
    m_big: f64,
) -> Result<NormalityReport, FieldError> {
    let pts = fam.sample_points(k, grid)?;
    let scan = fam.scan(&pts)?;
    let mut sup = 0.0;
    let mut arg = None;
    for (i, row) in scan.iter().enumerate() {
        for (j, &(v, g)) in row.iter().enumerate() {
            let t = tilde_from_parts(v, g);
            if t > sup {
                sup = t;
                arg = Some((i, j));
            }
        }
    }
    let unbounded = sup > m_big;
    Ok(NormalityReport {
        sup,
        verdict: if unbounded {
            Verdict::UnboundedDerivative
        } else {
            Verdict::BoundedDerivative
        },
        witness: arg.filter(|_| unbounded).map(|(i, j)| Witness {
            index: i,
            point: pts[j].clone(),
        }),
        threshold: m_big,
        samples: pts.len() * fam.members.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub point: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetReport {
    pub pass: bool,
    /// No sampled point fell in any level band.
    pub vacuous: bool,
    /// Band half-width used per member.
    pub deltas: Vec<f64>,
    pub band_points: usize,
    pub violations: Vec<Violation>,
}

/// Checks `|∇f| ≤ M_K` on the band `|f − a| ≤ δ` for every member. `delta`
/// defaults to `10⁻³` times the range of each member on the sample.
pub fn criterion_levelset(
    fam: &FamilySample,
    a: f64,
    k: &ProbeBox,
    m_k: f64,
    grid: &GridSpec,
    delta: Option<f64>,
) -> Result<LevelSetReport, FieldError> {
    if let Some(d) = delta {
        if !(d > 0.0) {
            return Err(FieldError::Invalid(format!("band width must be positive, got {d}")));
        }
    }
    let pts = fam.sample_points(k, grid)?;
    let scan = fam.scan(&pts)?;
    let mut deltas = Vec::with_capacity(scan.len());
    let mut band_points = 0;
    let mut violations = Vec::new();
    for (i, row) in scan.iter().enumerate() {
        let d = delta.unwrap_or_else(|| {
            let (lo, hi) = row
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &(v, _)| (l.min(v), h.max(v)));
            1e-3 * (hi - lo)
        });
        deltas.push(d);
        for (j, &(v, g)) in row.iter().enumerate() {
            if (v - a).abs() <= d {
                band_points += 1;
                if g > m_k {
                    violations.push(Violation {
                        index: i,
                        point: pts[j].clone(),
                        value: v,
                        grad_norm: g,
                        bound: m_k,
                    });
                }
            }
        }
    }
    Ok(LevelSetReport {
        pass: violations.is_empty(),
        vacuous: band_points == 0,
        deltas,
        band_points,
        violations,
    })
}

/// A function `ℝ → [0, ∞]` given by a table and linear interpolation,
/// constant beyond the end points. Infinite entries are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedFn {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl TabulatedFn {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, FieldError> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(FieldError::Invalid("table needs matching, nonempty columns".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) || xs.iter().any(|x| !x.is_finite()) {
            return Err(FieldError::Invalid("abscissae must be finite and strictly increasing".into()));
        }
        if ys.iter().any(|y| y.is_nan() || *y < 0.0) {
            return Err(FieldError::Invalid("values must lie in [0, inf]".into()));
        }
        if ys.iter().all(|y| y.is_infinite()) {
            return Err(FieldError::Invalid("at least one value must be finite".into()));
        }
        Ok(Self { xs, ys })
    }

    pub fn constant(c: f64) -> Result<Self, FieldError> {
        Self::new(vec![0.0], vec![c])
    }

    /// `l ≡ ∞`.
    pub fn infinite() -> Self {
        Self {
            xs: vec![0.0],
            ys: vec![f64::INFINITY],
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = self.xs.partition_point(|&t| t <= x) - 1;
        let (x0, x1, y0, y1) = (self.xs[i], self.xs[i + 1], self.ys[i], self.ys[i + 1]);
        if y0.is_infinite() || y1.is_infinite() {
            return f64::INFINITY;
        }
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub pass: bool,
    pub samples: usize,
    pub violations: Vec<Violation>,
}

/// Checks `|∇f(x)| ≤ l(f(x))` on the sample.
pub fn criterion_gradient_dominated(
    fam: &FamilySample,
    l: &TabulatedFn,
    k: &ProbeBox,
    grid: &GridSpec,
) -> Result<DominationReport, FieldError> {
    let pts = fam.sample_points(k, grid)?;
    let scan = fam.scan(&pts)?;
    let mut violations = Vec::new();
    for (i, row) in scan.iter().enumerate() {
        for (j, &(v, g)) in row.iter().enumerate() {
            let bound = l.eval(v);
            if g > bound {
                violations.push(Violation {
                    index: i,
                    point: pts[j].clone(),
                    value: v,
                    grad_norm: g,
                    bound,
                });
            }
        }
    }
    Ok(DominationReport {
        pass: violations.is_empty(),
        samples: pts.len() * fam.members.len(),
        violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BrodyVerdict {
    /// `f̃ ≤ M` on every probe. This is evidence, not proof.
    ConsistentWithBrody,
    Refuted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrodyReport {
    pub verdict: BrodyVerdict,
    pub bound: f64,
    /// `sup f̃` per probe box.
    pub sups: Vec<f64>,
    /// Affine-fit residual per probe box.
    pub residuals: Vec<f64>,
    /// Fit on the largest box, when consistent.
    pub fit: Option<AffineFit>,
    pub witness: Option<Vec<f64>>,
}

/// Scans nested probe boxes for a point with `f̃ > M`.
pub fn brody_verdict(
    f: &HarmonicExpr,
    m: f64,
    boxes: &[ProbeBox],
    points_per_axis: usize,
) -> Result<BrodyReport, FieldError> {
    if boxes.is_empty() {
        return Err(FieldError::Precondition("at least one probe box is required".into()));
    }
    if boxes.windows(2).any(|w| !w[1].contains_box(&w[0])) {
        return Err(FieldError::Precondition("probe boxes must be nested".into()));
    }
    let last = &boxes[boxes.len() - 1];
    let side = last
        .lo
        .iter()
        .zip(&last.hi)
        .map(|(l, h)| h - l)
        .fold(f64::INFINITY, f64::min);
    if side < 100.0 {
        return Err(FieldError::Precondition(format!("largest probe side is {side}, need at least 100")));
    }
    let mut sups = Vec::with_capacity(boxes.len());
    let mut residuals = Vec::with_capacity(boxes.len());
    let mut witness = None;
    let mut fit = None;
    for b in boxes {
        let grid = GridSpec::new(b.clone(), points_per_axis)?;
        let pts = grid.points();
        let tildes: Vec<f64> = pts
            .par_iter()
            .map(|x| match f.value_and_gradient(x) {
                Ok((v, g)) => Ok(tilde_from_parts(v, norm(&g))),
                // |f| beyond f64 range makes 1/cosh f vanish unless the
                // gradient also overflows, which we treat as unbounded.
                Err(FieldError::Overflow) => Ok(if f.eval(x).is_ok() { f64::INFINITY } else { 0.0 }),
                Err(e) => Err(e),
            })
            .collect::<Result<_, _>>()?;
        let (j, sup) = tildes
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (j, &t)| if t > acc.1 { (j, t) } else { acc });
        sups.push(sup);
        let r = affine_fit(|x| f.eval(x), &grid).map(|a| a.residual).unwrap_or(f64::INFINITY);
        residuals.push(r);
        if sup > m && witness.is_none() {
            witness = Some(pts[j].clone());
        }
        if std::ptr::eq(b, last) && witness.is_none() {
            fit = Some(affine_fit(|x| f.eval(x), &grid)?);
        }
    }
    Ok(BrodyReport {
        verdict: if witness.is_some() {
            BrodyVerdict::Refuted
        } else {
            BrodyVerdict::ConsistentWithBrody
        },
        bound: m,
        sups,
        residuals,
        fit,
        witness,
    })
}

/// Nested centred cubes with the given half-sides.
pub fn nested_cubes(dim: usize, halves: &[f64]) -> Vec<ProbeBox> {
    halves.iter().map(|h| ProbeBox::cube(dim, *h)).collect()
}

/// `sup_t f̃_t(0)` over translates `f_t(x) = f(x + t)` for `t` in the sample.
pub fn translate_sup<F: ScalarField + ?Sized>(f: &F, translations: &[Vec<f64>]) -> Result<f64, FieldError> {
    let origin = vec![0.0; f.dim()];
    translations.iter().try_fold(0.0, |acc: f64, t| {
        let shifted = |x: &[f64]| -> Vec<f64> { x.iter().zip(t).map(|(a, b)| a + b).collect() };
        let (v, g) = f.value_and_gradient(&shifted(&origin))?;
        Ok(acc.max(tilde_from_parts(v, norm(&g))))
    })
}
