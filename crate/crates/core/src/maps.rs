//! Harmonic maps `ℝⁿ → ℝᵐ`: Jacobians, rank degeneracy, holomorphy up to an
//! affine recombination, component-wise renormalization and image probes.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::{tilde_derivative, AffineChart, FieldError, GridSpec, HarmonicExpr, HolExpr};
use crate::renorm::{
    limit_probe, make_rescaling, ConvergenceReport, LimitClass, PhiField, ProbeOptions, RenormError, RenormTrace,
    RescaleFamily, RescaleOptions,
};
use crate::tube::DomainExpr;

/// Minors at or below this level (relative to the gradient scale) count as zero.
pub const MINOR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicMap {
    components: Vec<HarmonicExpr>,
    parents: Option<(HolExpr, HolExpr)>,
}

impl HarmonicMap {
    pub fn new(components: Vec<HarmonicExpr>) -> Result<Self, FieldError> {
        let dim = components.first().map(|c| c.dim()).ok_or(FieldError::EmptySum)?;
        if let Some(c) = components.iter().find(|c| c.dim() != dim) {
            return Err(FieldError::DimensionMismatch {
                expected: dim,
                found: c.dim(),
            });
        }
        Ok(Self {
            components,
            parents: None,
        })
    }

    /// `(Re f, Re g)` on `ℝ² ≅ ℂ`, keeping the holomorphic parents.
    pub fn from_holomorphic(f: HolExpr, g: HolExpr) -> Self {
        Self {
            components: vec![HarmonicExpr::re(f.clone()), HarmonicExpr::re(g.clone())],
            parents: Some((f, g)),
        }
    }

    pub fn components(&self) -> &[HarmonicExpr] {
        &self.components
    }

    pub fn parents(&self) -> Option<(&HolExpr, &HolExpr)> {
        self.parents.as_ref().map(|(f, g)| (f, g))
    }

    pub fn source_dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn target_dim(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, FieldError> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    /// Rows are the component gradients.
    pub fn differential(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, FieldError> {
        self.components.iter().map(|c| c.gradient(x)).collect()
    }

    /// `Σᵢ f̃ᵢ(x)`
    pub fn map_tilde(&self, x: &[f64]) -> Result<f64, FieldError> {
        self.components
            .iter()
            .map(|c| tilde_derivative(c, x))
            .sum()
    }
}

impl PhiField for HarmonicMap {
    fn dim(&self) -> usize {
        self.source_dim()
    }

    fn phi(&self, x: &[f64]) -> Result<f64, FieldError> {
        self.map_tilde(x)
    }

    fn rescaled(&self, chart: &AffineChart) -> Result<Self, FieldError> {
        let components = self
            .components
            .iter()
            .map(|c| c.clone().compose(chart))
            .collect::<Result<Vec<_>, _>>()?;
        let parents = match &self.parents {
            Some((f, g)) if chart.center.len() == 2 => {
                let c = Complex64::new(chart.scale, 0.0);
                let d = Complex64::new(chart.center[0], chart.center[1]);
                Some((f.precompose_affine(c, d), g.precompose_affine(c, d)))
            }
            _ => None,
        };
        Ok(Self { components, parents })
    }
}

/// Adapter for closures producing harmonic maps.
pub struct MapFamily<F>(pub F);

impl<F> RescaleFamily for MapFamily<F>
where
    F: Fn(usize) -> Result<HarmonicMap, FieldError> + Sync,
{
    type Member = HarmonicMap;

    fn member(&self, n: usize) -> Result<HarmonicMap, FieldError> {
        (self.0)(n)
    }
}

fn complex(z: [f64; 2]) -> Complex64 {
    Complex64::new(z[0], z[1])
}

fn parents_of(h: &HarmonicMap) -> Result<(&HolExpr, &HolExpr), FieldError> {
    h.parents()
        .ok_or_else(|| FieldError::Precondition("map has no holomorphic parents".into()))
}

/// `Im(f′(z)·conj g′(z))` for `H = (Re f, Re g)`.
pub fn jacobian(h: &HarmonicMap, z: [f64; 2]) -> Result<f64, FieldError> {
    let (f, g) = parents_of(h)?;
    let w = complex(z);
    Ok((f.derivative(w) * g.derivative(w).conj()).im)
}

/// Largest 2×2 minor of the differential relative to `max(1, |∇u||∇v|)`,
/// taken over target pairs and source coordinate pairs.
fn relative_max_minor(d: &[Vec<f64>]) -> (f64, f64) {
    let mut best: (f64, f64) = (0.0, 0.0);
    for a in 0..d.len() {
        for b in a + 1..d.len() {
            let na = d[a].iter().map(|v| v * v).sum::<f64>().sqrt();
            let nb = d[b].iter().map(|v| v * v).sum::<f64>().sqrt();
            let scale = (na * nb).max(1.0);
            for i in 0..d[a].len() {
                for j in i + 1..d[a].len() {
                    let m = d[a][i] * d[b][j] - d[a][j] * d[b][i];
                    if m.abs() / scale > best.0 {
                        best = (m.abs() / scale, m);
                    }
                }
            }
        }
    }
    best
}

/// Total least squares line through a planar cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub point: [f64; 2],
    pub dir: [f64; 2],
    /// `sup` distance of the cloud to the line.
    pub residual: f64,
}

pub fn fit_line(cloud: &[[f64; 2]]) -> Option<LineFit> {
    if cloud.is_empty() {
        return None;
    }
    let n = cloud.len() as f64;
    let cx = cloud.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = cloud.iter().map(|p| p[1]).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in cloud {
        let (dx, dy) = (p[0] - cx, p[1] - cy);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let dir = [theta.cos(), theta.sin()];
    let residual = cloud
        .iter()
        .map(|p| ((p[0] - cx) * dir[1] - (p[1] - cy) * dir[0]).abs())
        .fold(0.0, f64::max);
    Some(LineFit {
        point: [cx, cy],
        dir,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rank")]
pub enum RankReport {
    DegenerateOnGrid {
        line: LineFit,
        /// The image cloud collapses to a single point.
        single_point: bool,
        max_minor: f64,
    },
    FullRankWitness {
        point: Vec<f64>,
        minor: f64,
    },
}

/// Spread below which an image cloud counts as one point.
const POINT_SPREAD: f64 = 1e-12;

pub fn rank_degenerate_probe(h: &HarmonicMap, grid: &GridSpec) -> Result<RankReport, FieldError> {
    if grid.dim() != h.source_dim() {
        return Err(FieldError::DimensionMismatch {
            expected: h.source_dim(),
            found: grid.dim(),
        });
    }
    if h.target_dim() != 2 {
        return Err(FieldError::Precondition("rank probe needs a planar target".into()));
    }
    let pts = grid.points();
    let samples = pts
        .par_iter()
        .map(|x| Ok((h.eval(x)?, relative_max_minor(&h.differential(x)?))))
        .collect::<Result<Vec<_>, FieldError>>()?;
    let mut max_minor = 0.0;
    for (x, (_, (rel, m))) in pts.iter().zip(&samples) {
        if *rel > MINOR_TOL {
            return Ok(RankReport::FullRankWitness {
                point: x.clone(),
                minor: *m,
            });
        }
        max_minor = f64::max(max_minor, *rel);
    }
    let cloud: Vec<[f64; 2]> = samples.iter().map(|(v, _)| [v[0], v[1]]).collect();
    let line = fit_line(&cloud).ok_or(FieldError::DegenerateGrid)?;
    let spread = cloud
        .iter()
        .map(|p| (p[0] - line.point[0]).hypot(p[1] - line.point[1]))
        .fold(0.0, f64::max);
    Ok(RankReport::DegenerateOnGrid {
        line,
        single_point: spread <= POINT_SPREAD,
        max_minor,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolomorphyWitness {
    pub c: Complex64,
    pub z0: [f64; 2],
    /// `sup |f′ − c·g′|` over the grid.
    pub residual: f64,
    /// Sends `(Re g, Im g)` to `(Re f, Re g)` up to an additive constant.
    pub recombination: [[f64; 2]; 2],
    pub offset: [f64; 2],
    pub invertible: bool,
    pub min_jacobian: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome")]
pub enum HolomorphyOutcome {
    Witness(HolomorphyWitness),
    NonPositiveJacobian { point: [f64; 2], jacobian: f64 },
}

pub fn holomorphy_witness(h: &HarmonicMap, grid: &GridSpec) -> Result<HolomorphyOutcome, FieldError> {
    let (f, g) = parents_of(h)?;
    if grid.dim() != 2 {
        return Err(FieldError::DimensionMismatch {
            expected: 2,
            found: grid.dim(),
        });
    }
    let pts: Vec<[f64; 2]> = grid.points().iter().map(|p| [p[0], p[1]]).collect();
    let derivs: Vec<(Complex64, Complex64)> = pts
        .par_iter()
        .map(|p| (f.derivative(complex(*p)), g.derivative(complex(*p))))
        .collect();
    let mut min_jacobian = f64::INFINITY;
    for (p, (df, dg)) in pts.iter().zip(&derivs) {
        let j = (df * dg.conj()).im;
        if j < -MINOR_TOL {
            return Ok(HolomorphyOutcome::NonPositiveJacobian { point: *p, jacobian: j });
        }
        min_jacobian = min_jacobian.min(j);
    }
    let (k0, dg0) = derivs
        .iter()
        .enumerate()
        .map(|(k, (_, dg))| (k, dg.norm()))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    if !(dg0 > 0.0) {
        return Err(FieldError::Precondition("g' vanishes on the whole grid".into()));
    }
    let c = derivs[k0].0 / derivs[k0].1;
    let residual = derivs.iter().map(|(df, dg)| (df - c * dg).norm()).fold(0.0, f64::max);
    let z0 = pts[k0];
    let w0 = complex(z0);
    let shift = f.eval(w0) - c * g.eval(w0);
    Ok(HolomorphyOutcome::Witness(HolomorphyWitness {
        c,
        z0,
        residual,
        recombination: [[c.re, -c.im], [1.0, 0.0]],
        offset: [shift.re, 0.0],
        invertible: c.im.abs() > MINOR_TOL,
        min_jacobian,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComponentClass {
    AffineNonconstant,
    AffineConstant,
    PlusInfinity,
    MinusInfinity,
    Undecided,
}

impl From<LimitClass> for ComponentClass {
    fn from(c: LimitClass) -> Self {
        match c {
            LimitClass::AffineNonconstant => ComponentClass::AffineNonconstant,
            LimitClass::ConstantFinite => ComponentClass::AffineConstant,
            LimitClass::PlusInfinity => ComponentClass::PlusInfinity,
            LimitClass::MinusInfinity => ComponentClass::MinusInfinity,
            LimitClass::Undecided => ComponentClass::Undecided,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRenormReport {
    pub classes: Vec<ComponentClass>,
    pub components: Vec<ConvergenceReport>,
    pub guarantee: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapRenormOptions {
    pub rescale: RescaleOptions,
    pub probe: ProbeOptions,
    /// Trace indices fed to the limit probe; empty means the last three.
    pub window: Vec<usize>,
}

/// Rescales `Hₖ` with the map weight `Σᵢ f̃ᵢ` and classifies every component
/// of the rescaled maps `Fₖ(x) = Hₖ(aₖ x + bₖ)`.
pub fn map_renormalize<F>(
    hseq: F,
    r: &[f64],
    rseq: &(dyn Fn(usize) -> Vec<f64> + Sync),
    indices: &[usize],
    opts: &MapRenormOptions,
) -> Result<(RenormTrace, MapRenormReport), RenormError>
where
    F: Fn(usize) -> Result<HarmonicMap, FieldError> + Sync,
{
    let family = MapFamily(hseq);
    let trace = make_rescaling(&family, r, rseq, indices, &opts.rescale)?;
    let window: Vec<usize> = if opts.window.is_empty() {
        let ns: Vec<usize> = trace.steps.iter().map(|s| s.n).collect();
        ns[ns.len().saturating_sub(3)..].to_vec()
    } else {
        opts.window.clone()
    };
    let probe = opts.rescale.probe(r.len())?;
    let m = family.member(trace.steps[0].n)?.target_dim();
    let mut components = Vec::with_capacity(m);
    for i in 0..m {
        let seq = |n: usize| -> Result<HarmonicExpr, FieldError> {
            let h = family.member(n)?;
            h.components
                .get(i)
                .cloned()
                .ok_or(FieldError::DimensionMismatch {
                    expected: m,
                    found: h.target_dim(),
                })
        };
        components.push(limit_probe(&trace, seq, &probe, &window, &opts.probe)?);
    }
    let classes: Vec<ComponentClass> = components.iter().map(|c| c.class.into()).collect();
    let guarantee = classes.contains(&ComponentClass::AffineNonconstant);
    Ok((
        trace,
        MapRenormReport {
            classes,
            components,
            guarantee,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index")]
pub enum Functional {
    Product,
    Coordinate(usize),
}

impl Functional {
    pub fn eval(&self, v: &[f64]) -> f64 {
        match self {
            Functional::Product => v.iter().product(),
            Functional::Coordinate(i) => v[*i],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub source: Vec<f64>,
    pub image: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageReport {
    pub samples: usize,
    pub members: usize,
    pub violations: Vec<Violation>,
    /// `(min, max)` of the functional over the image.
    pub functional_range: Option<(f64, f64)>,
}

pub fn image_probe(
    h: &HarmonicMap,
    samples: &[Vec<f64>],
    d: &DomainExpr,
    functional: Option<Functional>,
) -> Result<ImageReport, FieldError> {
    if h.target_dim() != 2 {
        return Err(FieldError::Precondition("image probe needs a planar target".into()));
    }
    if let Some(Functional::Coordinate(i)) = functional {
        if i >= 2 {
            return Err(FieldError::CoordOutOfRange { index: i, dim: 2 });
        }
    }
    let images = samples
        .par_iter()
        .map(|x| h.eval(x).map(|v| [v[0], v[1]]))
        .collect::<Result<Vec<_>, _>>()?;
    let mut violations = Vec::new();
    let mut range: Option<(f64, f64)> = None;
    for (x, v) in samples.iter().zip(&images) {
        if !d.contains_point(*v) {
            violations.push(Violation {
                source: x.clone(),
                image: *v,
            });
        }
        if let Some(fun) = functional {
            let val = fun.eval(v);
            range = Some(match range {
                None => (val, val),
                Some((lo, hi)) => (lo.min(val), hi.max(val)),
            });
        }
    }
    Ok(ImageReport {
        samples: samples.len(),
        members: samples.len() - violations.len(),
        violations,
        functional_range: range,
    })
}

/// `(Re eᶻ, Re e⁻ᶻ)`, whose image satisfies `u·v = cos²(Im z)`.
pub fn w_map() -> HarmonicMap {
    let minus_z = HolExpr::poly(vec![Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0)]);
    HarmonicMap::from_holomorphic(HolExpr::exp(HolExpr::z()), HolExpr::exp(minus_z))
}

/// `u·v − cos²y` at `z = x + iy` for the map [`w_map`].
pub fn w_identity_defect(z: [f64; 2]) -> Result<f64, FieldError> {
    let v = w_map().eval(&z)?;
    Ok(v[0] * v[1] - z[1].cos().powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ProbeBox;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn fd_det(h: &HarmonicMap, z: [f64; 2]) -> f64 {
        let e = 1e-5;
        let d = |i: usize| {
            let mut p = z.to_vec();
            let mut m = z.to_vec();
            p[i] += e;
            m[i] -= e;
            let (a, b) = (h.eval(&p).unwrap(), h.eval(&m).unwrap());
            [(a[0] - b[0]) / (2.0 * e), (a[1] - b[1]) / (2.0 * e)]
        };
        let (dx, dy) = (d(0), d(1));
        dx[0] * dy[1] - dy[0] * dx[1]
    }

    #[test]
    fn jacobian_examples() {
        let h = HarmonicMap::from_holomorphic(HolExpr::power(2), HolExpr::z());
        assert!((jacobian(&h, [1.0, 1.0]).unwrap() - 2.0).abs() < 1e-12);
        assert!((fd_det(&h, [1.0, 1.0]) - 2.0).abs() < 1e-6);

        let same = HarmonicMap::from_holomorphic(HolExpr::exp(HolExpr::z()), HolExpr::exp(HolExpr::z()));
        assert_eq!(jacobian(&same, [0.3, -0.7]).unwrap(), 0.0);

        let iz = HolExpr::poly(vec![c(0.0, 0.0), c(0.0, 1.0)]);
        let h = HarmonicMap::from_holomorphic(HolExpr::z(), iz);
        for z in [[0.0, 0.0], [2.0, -1.0]] {
            assert!((jacobian(&h, z).unwrap() + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn map_tilde_is_component_sum() {
        let h = HarmonicMap::from_holomorphic(HolExpr::power(3), HolExpr::exp(HolExpr::z()));
        let x = [0.4, -0.2];
        let sum: f64 = h.components().iter().map(|c| tilde_derivative(c, &x).unwrap()).sum();
        assert_eq!(h.map_tilde(&x).unwrap(), sum);
    }

    #[test]
    fn rescaled_parents_follow_components() {
        let h = HarmonicMap::from_holomorphic(HolExpr::power(2), HolExpr::exp(HolExpr::z()));
        let chart = AffineChart::new(0.5, vec![1.0, -0.3]).unwrap();
        let r = h.rescaled(&chart).unwrap();
        let (f, g) = r.parents().unwrap();
        let x = [0.2, 0.9];
        let v = r.eval(&x).unwrap();
        assert!((f.eval(c(x[0], x[1])).re - v[0]).abs() < 1e-12);
        assert!((g.eval(c(x[0], x[1])).re - v[1]).abs() < 1e-12);
    }

    fn grid(half: f64) -> GridSpec {
        GridSpec::new(ProbeBox::cube(2, half), 11).unwrap()
    }

    #[test]
    fn rank_probe_examples() {
        let u = HarmonicExpr::re(HolExpr::power(2));
        let v = u.clone().scaled(3.0).unwrap().plus_constant(1.0).unwrap();
        let h = HarmonicMap::new(vec![u, v]).unwrap();
        match rank_degenerate_probe(&h, &grid(1.0)).unwrap() {
            RankReport::DegenerateOnGrid { line, single_point, .. } => {
                assert!(line.residual <= 1e-9);
                assert!(!single_point);
                assert!((line.dir[1] / line.dir[0] - 3.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }

        let h = HarmonicMap::new(vec![HarmonicExpr::re(HolExpr::power(2)), HarmonicExpr::im(HolExpr::power(2))]).unwrap();
        assert!(matches!(
            rank_degenerate_probe(&h, &grid(1.0)).unwrap(),
            RankReport::FullRankWitness { .. }
        ));

        let k = HarmonicExpr::constant(2, 1.5).unwrap();
        let h = HarmonicMap::new(vec![k.clone(), k]).unwrap();
        assert!(matches!(
            rank_degenerate_probe(&h, &grid(1.0)).unwrap(),
            RankReport::DegenerateOnGrid { single_point: true, .. }
        ));
    }

    #[test]
    fn holomorphy_examples() {
        let g = HolExpr::exp(HolExpr::z());
        let f = HolExpr::mul(vec![HolExpr::constant(c(2.0, 1.0)), g.clone()]);
        let h = HarmonicMap::from_holomorphic(f, g);
        let HolomorphyOutcome::Witness(w) = holomorphy_witness(&h, &grid(1.0)).unwrap() else {
            panic!("expected witness");
        };
        assert!((w.c - c(2.0, 1.0)).norm() < 1e-12);
        assert!(w.residual <= 1e-10);
        assert!(w.invertible);

        let upper = GridSpec::new(ProbeBox::new(vec![-1.0, 0.1], vec![1.0, 2.0]).unwrap(), 11).unwrap();
        let h = HarmonicMap::from_holomorphic(HolExpr::power(2), HolExpr::z());
        let HolomorphyOutcome::Witness(w) = holomorphy_witness(&h, &upper).unwrap() else {
            panic!("expected witness");
        };
        assert!(w.min_jacobian >= 0.0);
        assert!(w.residual > 1.0);

        let iz = HolExpr::poly(vec![c(0.0, 0.0), c(0.0, 1.0)]);
        let h = HarmonicMap::from_holomorphic(HolExpr::z(), iz);
        assert!(matches!(
            holomorphy_witness(&h, &grid(1.0)).unwrap(),
            HolomorphyOutcome::NonPositiveJacobian { .. }
        ));

        let h = HarmonicMap::from_holomorphic(HolExpr::z(), HolExpr::real(3.0));
        assert!(matches!(holomorphy_witness(&h, &grid(1.0)), Err(FieldError::Precondition(_))));
    }

    #[test]
    fn recombination_reproduces_components() {
        let g = HolExpr::add(vec![HolExpr::power(2), HolExpr::z()]);
        let f = HolExpr::add(vec![
            HolExpr::mul(vec![HolExpr::constant(c(0.5, 2.0)), g.clone()]),
            HolExpr::constant(c(1.0, 4.0)),
        ]);
        let h = HarmonicMap::from_holomorphic(f.clone(), g.clone());
        let HolomorphyOutcome::Witness(w) = holomorphy_witness(&h, &grid(1.0)).unwrap() else {
            panic!("expected witness");
        };
        let z = c(0.3, -0.8);
        let gz = g.eval(z);
        let m = w.recombination;
        let re_f = m[0][0] * gz.re + m[0][1] * gz.im + w.offset[0];
        let re_g = m[1][0] * gz.re + m[1][1] * gz.im + w.offset[1];
        assert!((re_f - f.eval(z).re).abs() < 1e-9);
        assert!((re_g - gz.re).abs() < 1e-12);
    }

    #[test]
    fn map_renormalize_linear_example() {
        let hseq = |k: usize| {
            let u = HarmonicExpr::affine(0.0, &[k as f64, 0.0])?;
            HarmonicMap::new(vec![u, HarmonicExpr::constant(2, 0.0)?])
        };
        let indices: Vec<usize> = (20..=24).collect();
        let (trace, report) =
            map_renormalize(hseq, &[0.0, 0.0], &|_| vec![0.0, 0.0], &indices, &MapRenormOptions::default()).unwrap();
        assert!(!trace.steps.is_empty());
        assert_eq!(report.classes, vec![ComponentClass::AffineNonconstant, ComponentClass::AffineConstant]);
        assert!(report.guarantee);
    }

    #[test]
    fn image_probe_examples() {
        let h = w_map();
        let samples: Vec<Vec<f64>> = grid(3.0).points();
        let quadrants = DomainExpr::parse("(union (inter (halfplane 1 0 0) (halfplane 0 1 0)) (inter (halfplane -1 0 0) (halfplane 0 -1 0)))").unwrap();
        let r = image_probe(&h, &samples, &quadrants, Some(Functional::Product)).unwrap();
        let (lo, hi) = r.functional_range.unwrap();
        assert!(lo >= -1e-12 && hi <= 1.0 + 1e-12);

        let id = HarmonicMap::new(vec![HarmonicExpr::coord(2, 0).unwrap(), HarmonicExpr::coord(2, 1).unwrap()]).unwrap();
        let big = DomainExpr::disk(0.0, 0.0, 10.0).unwrap();
        let r = image_probe(&id, &samples, &big, None).unwrap();
        assert_eq!(r.members, samples.len());

        let sq = HarmonicMap::new(vec![HarmonicExpr::re(HolExpr::power(2)), HarmonicExpr::im(HolExpr::power(2))]).unwrap();
        let upper = DomainExpr::half_plane(0.0, 1.0, 0.0).unwrap();
        let left: Vec<Vec<f64>> = (1..5).map(|k| vec![-(k as f64) * 0.3, 0.5]).collect();
        let r = image_probe(&sq, &left, &upper, None).unwrap();
        assert_eq!(r.violations.len(), left.len());
    }

    #[test]
    fn w_identity_holds() {
        for z in [[0.0, 0.0], [1.3, -2.2], [-4.0, 7.5], [2.0, std::f64::consts::FRAC_PI_2]] {
            assert!(w_identity_defect(z).unwrap().abs() <= 1e-12);
        }
        let v = w_map().eval(&[0.7, std::f64::consts::FRAC_PI_2]).unwrap();
        assert!(v[0].abs() < 1e-12 && v[1].abs() < 1e-12);
    }
}
