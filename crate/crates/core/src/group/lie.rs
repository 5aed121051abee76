use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GroupError;
use crate::field::{AffineChart, FieldError, HolExpr};
use crate::renorm::{make_rescaling, PhiField, RenormTrace, RescaleFamily, RescaleOptions};

pub type CMat = DMatrix<Complex64>;

const SINGULAR_TOL: f64 = 1e-12;
const CROSS_CHECK_TOL: f64 = 1e-6;

/// `exp(z·X)` by scaling and squaring with a Padé approximant.
pub fn expm(x: &CMat, z: Complex64) -> CMat {
    (x * z).exp()
}

pub fn to_rows(m: &CMat) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<CMat, GroupError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(GroupError::Invalid("matrix must be square and nonempty".into()));
    }
    Ok(CMat::from_fn(n, n, |i, j| rows[i][j]))
}

/// A holomorphic map `U ⊂ ℂ → GL(n, ℂ)`.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixHoloMap {
    /// Row-major entry expressions.
    Entrywise { n: usize, entries: Vec<HolExpr> },
    /// `z ↦ g·exp(zX)`
    GroupExp { g: CMat, x: CMat },
}

impl MatrixHoloMap {
    pub fn entrywise(n: usize, entries: Vec<HolExpr>) -> Result<Self, GroupError> {
        if n == 0 || entries.len() != n * n {
            return Err(GroupError::Invalid(format!("expected {} entries, got {}", n * n, entries.len())));
        }
        Ok(Self::Entrywise { n, entries })
    }

    pub fn parse_entries(n: usize, entries: &[String]) -> Result<Self, GroupError> {
        let parsed = entries
            .iter()
            .map(|e| HolExpr::parse(e))
            .collect::<Result<Vec<_>, _>>()?;
        Self::entrywise(n, parsed)
    }

    pub fn group_exp(g: CMat, x: CMat) -> Result<Self, GroupError> {
        if !g.is_square() || !x.is_square() || g.nrows() != x.nrows() || g.nrows() == 0 {
            return Err(GroupError::Invalid("g and X must be square of equal size".into()));
        }
        Ok(Self::GroupExp { g, x })
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Entrywise { n, .. } => *n,
            Self::GroupExp { g, .. } => g.nrows(),
        }
    }

    pub fn eval(&self, z: Complex64) -> CMat {
        match self {
            Self::Entrywise { n, entries } => CMat::from_fn(*n, *n, |i, j| entries[i * n + j].eval(z)),
            Self::GroupExp { g, x } => g * expm(x, z),
        }
    }

    /// Entrywise `F′(z)`.
    pub fn derivative(&self, z: Complex64) -> CMat {
        match self {
            Self::Entrywise { n, entries } => CMat::from_fn(*n, *n, |i, j| entries[i * n + j].derivative(z)),
            Self::GroupExp { g, x } => g * expm(x, z) * x,
        }
    }

    /// `z ↦ F(a z + b)`
    pub fn precompose(&self, a: Complex64, b: Complex64) -> Self {
        match self {
            Self::Entrywise { n, entries } => Self::Entrywise {
                n: *n,
                entries: entries.iter().map(|e| e.precompose_affine(a, b)).collect(),
            },
            Self::GroupExp { g, x } => Self::GroupExp {
                g: g * expm(x, b),
                x: x * a,
            },
        }
    }

    /// `z ↦ h·F(z)`
    pub fn left_mul(&self, h: &CMat) -> Self {
        match self {
            Self::Entrywise { n, entries } => {
                let n = *n;
                let entries = (0..n * n)
                    .map(|ik| {
                        let (i, k) = (ik / n, ik % n);
                        HolExpr::add(
                            (0..n)
                                .map(|j| HolExpr::mul(vec![HolExpr::constant(h[(i, j)]), entries[j * n + k].clone()]))
                                .collect(),
                        )
                    })
                    .collect();
                Self::Entrywise { n, entries }
            }
            Self::GroupExp { g, x } => Self::GroupExp { g: h * g, x: x.clone() },
        }
    }
}

fn inverse_checked(m: &CMat, step: Option<usize>) -> Result<CMat, GroupError> {
    let det = m.determinant();
    let largest = m.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let log_scale = m.nrows() as f64 * largest.ln();
    if !largest.is_finite() || !(det.norm().ln() > SINGULAR_TOL.ln() + log_scale) {
        return Err(GroupError::Singular { det: det.norm(), step });
    }
    m.clone()
        .try_inverse()
        .ok_or(GroupError::Singular { det: det.norm(), step })
}

/// `F(z)⁻¹·F′(z)`, with `F′` cross-checked by central differences.
pub fn matrix_df(f: &MatrixHoloMap, z: Complex64) -> Result<CMat, GroupError> {
    let inv = inverse_checked(&f.eval(z), None)?;
    let d = f.derivative(z);
    let df = &inv * &d;
    let h = 1e-5 / df.norm().max(1.0);
    let fd = (f.eval(z + h) - f.eval(z - h)) / Complex64::new(2.0 * h, 0.0);
    let err = (&fd - &d).norm();
    if !(err <= CROSS_CHECK_TOL * d.norm().max(1.0)) {
        return Err(GroupError::Mismatch(format!("|F' - central difference| = {err:e} at z = {z}")));
    }
    Ok(df)
}

impl PhiField for MatrixHoloMap {
    fn dim(&self) -> usize {
        2
    }

    /// `‖DF‖` in the Frobenius norm.
    fn phi(&self, x: &[f64]) -> Result<f64, FieldError> {
        match matrix_df(self, Complex64::new(x[0], x[1])) {
            Ok(df) => Ok(df.norm()),
            Err(GroupError::Field(e)) => Err(e),
            Err(e) => Err(FieldError::Precondition(e.to_string())),
        }
    }

    fn rescaled(&self, chart: &AffineChart) -> Result<Self, FieldError> {
        if chart.center.len() != 2 {
            return Err(FieldError::DimensionMismatch {
                expected: 2,
                found: chart.center.len(),
            });
        }
        Ok(self.precompose(
            Complex64::new(chart.scale, 0.0),
            Complex64::new(chart.center[0], chart.center[1]),
        ))
    }
}

struct MatrixFamily<F>(F);

impl<F> RescaleFamily for MatrixFamily<F>
where
    F: Fn(usize) -> Result<MatrixHoloMap, FieldError> + Sync,
{
    type Member = MatrixHoloMap;

    fn member(&self, n: usize) -> Result<MatrixHoloMap, FieldError> {
        (self.0)(n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LieOptions {
    pub rescale: RescaleOptions,
    /// `‖X‖` at or above this level counts as a nonconstant limit.
    pub nonconstant_min: f64,
}

impl Default for LieOptions {
    fn default() -> Self {
        Self {
            rescale: RescaleOptions::default(),
            nonconstant_min: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LieStep {
    pub n: usize,
    pub x_norm: f64,
    pub residual: f64,
    pub df_constancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LieRenormReport {
    pub n: usize,
    /// Limit anchor `Uₖ(0)`.
    pub g: Vec<Vec<Complex64>>,
    #[serde(rename = "X")]
    pub x: Vec<Vec<Complex64>>,
    /// `gₖ = uₖ(0)⁻¹`
    pub normalizer: Vec<Vec<Complex64>>,
    /// `sup ‖Uₖ(z) − g·exp(zX)‖` over the probe.
    pub residual: f64,
    /// `sup ‖DUₖ(z) − X‖` over the probe.
    pub df_constancy: f64,
    pub nonconstant: bool,
    pub steps: Vec<LieStep>,
}

struct Normalized {
    anchor: CMat,
    x: CMat,
    normalizer: CMat,
    residual: f64,
    df_constancy: f64,
}

fn normalize_step(u: &MatrixHoloMap, n: usize, pts: &[Complex64]) -> Result<Normalized, GroupError> {
    let normalizer = inverse_checked(&u.eval(Complex64::new(0.0, 0.0)), Some(n))?;
    let big_u = u.left_mul(&normalizer);
    let dfs = pts
        .par_iter()
        .map(|z| matrix_df(&big_u, *z))
        .collect::<Result<Vec<_>, _>>()?;
    let dim = u.n();
    let mut x = CMat::zeros(dim, dim);
    for d in &dfs {
        x += d;
    }
    x /= Complex64::new(dfs.len() as f64, 0.0);
    let df_constancy = dfs.iter().map(|d| (d - &x).norm()).fold(0.0, f64::max);
    let anchor = big_u.eval(Complex64::new(0.0, 0.0));
    let residual = pts
        .par_iter()
        .map(|z| (big_u.eval(*z) - &anchor * expm(&x, *z)).norm())
        .reduce(|| 0.0, f64::max);
    Ok(Normalized {
        anchor,
        x,
        normalizer,
        residual,
        df_constancy,
    })
}

/// Rescales with `φ = ‖DF‖`, normalizes `Uₖ = uₖ(0)⁻¹uₖ` and fits the limit
/// `g·exp(zX)` with `X` the probe mean of `DUₖ`.
pub fn lie_renormalize<F>(
    fseq: F,
    r: &[f64],
    rseq: &(dyn Fn(usize) -> Vec<f64> + Sync),
    indices: &[usize],
    opts: &LieOptions,
) -> Result<(RenormTrace, LieRenormReport), GroupError>
where
    F: Fn(usize) -> Result<MatrixHoloMap, FieldError> + Sync,
{
    if r.len() != 2 {
        return Err(FieldError::DimensionMismatch {
            expected: 2,
            found: r.len(),
        }
        .into());
    }
    let family = MatrixFamily(fseq);
    let trace = make_rescaling(&family, r, rseq, indices, &opts.rescale)?;
    let pts: Vec<Complex64> = opts
        .rescale
        .probe(2)?
        .points()
        .iter()
        .map(|p| Complex64::new(p[0], p[1]))
        .collect();
    let mut steps = Vec::with_capacity(trace.steps.len());
    let mut last = None;
    for s in &trace.steps {
        let u = family.member(s.n)?.rescaled(&s.chart())?;
        let norm = normalize_step(&u, s.n, &pts)?;
        steps.push(LieStep {
            n: s.n,
            x_norm: norm.x.norm(),
            residual: norm.residual,
            df_constancy: norm.df_constancy,
        });
        last = Some((s.n, norm));
    }
    let (n, fin) = last.ok_or_else(|| GroupError::Invalid("empty trace".into()))?;
    Ok((
        trace,
        LieRenormReport {
            n,
            g: to_rows(&fin.anchor),
            x: to_rows(&fin.x),
            normalizer: to_rows(&fin.normalizer),
            residual: fin.residual,
            df_constancy: fin.df_constancy,
            nonconstant: fin.x.norm() >= opts.nonconstant_min,
            steps,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renorm::RenormError;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn nilpotent() -> CMat {
        CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
    }

    #[test]
    fn expm_examples() {
        let zero = CMat::zeros(3, 3);
        assert!((expm(&zero, c(2.0, -1.0)) - CMat::identity(3, 3)).norm() < 1e-15);

        let e = expm(&nilpotent(), c(3.0, 0.0));
        let want = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(3.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!((e - want).norm() < 1e-14);

        let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0)]));
        let e = expm(&d, c(2f64.ln(), 0.0));
        assert!((e[(0, 0)] - c(2.0, 0.0)).norm() < 1e-14);
        assert!((e[(1, 1)] - c(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn expm_inverse_property() {
        let x = CMat::from_row_slice(2, 2, &[c(0.3, 1.0), c(-2.0, 0.5), c(1.5, 0.0), c(-0.4, -0.7)]);
        let x = &x * Complex64::new(10.0 / x.norm(), 0.0);
        for z in [c(1.0, 0.0), c(0.0, 1.0), c(-0.6, 0.8)] {
            let p = expm(&x, z) * expm(&x, -z);
            assert!((p - CMat::identity(2, 2)).norm() <= 1e-10);
        }
    }

    #[test]
    fn df_examples() {
        let f = MatrixHoloMap::group_exp(CMat::identity(2, 2), nilpotent()).unwrap();
        for z in [c(0.0, 0.0), c(1.5, -2.0)] {
            assert!((matrix_df(&f, z).unwrap() - nilpotent()).norm() < 1e-12);
        }

        let ez2 = HolExpr::exp(HolExpr::power(2));
        let f = MatrixHoloMap::entrywise(1, vec![ez2]).unwrap();
        let z = c(0.7, -0.4);
        assert!((matrix_df(&f, z).unwrap()[(0, 0)] - 2.0 * z).norm() < 1e-12);

        let g = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(1.0, 1.0), c(0.0, -1.0), c(3.0, 0.0)]);
        let x = CMat::from_row_slice(2, 2, &[c(0.1, 0.0), c(0.5, 0.0), c(-0.3, 0.2), c(0.0, 0.4)]);
        let f = MatrixHoloMap::group_exp(g, x.clone()).unwrap();
        assert!((matrix_df(&f, c(0.4, 0.9)).unwrap() - x).norm() < 1e-10);
    }

    #[test]
    fn df_is_left_invariant() {
        let entries: Vec<HolExpr> = ["(exp z)", "(poly (0 0) (1 0))", "(c 0 1)", "(exp (poly (0 0) (0 0) (1 0)))"]
            .iter()
            .map(|s| HolExpr::parse(s).unwrap())
            .collect();
        let f = MatrixHoloMap::entrywise(2, entries).unwrap();
        let g = CMat::from_row_slice(2, 2, &[c(1.0, 2.0), c(-0.5, 0.0), c(0.3, 0.3), c(2.0, -1.0)]);
        let z = c(0.2, 0.5);
        let a = matrix_df(&f, z).unwrap();
        let b = matrix_df(&f.left_mul(&g), z).unwrap();
        assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn singular_values_are_reported() {
        let f = MatrixHoloMap::entrywise(2, vec![HolExpr::z(), HolExpr::z(), HolExpr::z(), HolExpr::z()]).unwrap();
        assert!(matches!(matrix_df(&f, c(1.0, 0.0)), Err(GroupError::Singular { .. })));
    }

    #[test]
    fn precompose_matches_direct_evaluation() {
        let g = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(1.0, 1.0), c(0.0, -1.0), c(3.0, 0.0)]);
        let f = MatrixHoloMap::group_exp(g, nilpotent()).unwrap();
        let (a, b, z) = (c(0.5, 0.0), c(1.0, -2.0), c(0.3, 0.3));
        assert!((f.precompose(a, b).eval(z) - f.eval(a * z + b)).norm() < 1e-12);
    }

    #[test]
    fn nilpotent_scalings_recover_the_generator() {
        let fseq = |k: usize| Ok(MatrixHoloMap::group_exp(CMat::identity(2, 2), nilpotent() * c(k as f64, 0.0)).unwrap());
        let indices: Vec<usize> = (20..24).collect();
        let (_, rep) = lie_renormalize(fseq, &[0.0, 0.0], &|_| vec![0.0, 0.0], &indices, &LieOptions::default()).unwrap();
        let x = from_rows(&rep.x).unwrap();
        assert!((x - nilpotent()).norm() < 1e-8);
        assert!(rep.df_constancy <= 1e-8);
        assert!(rep.residual <= 1e-8);
        assert!(rep.nonconstant);
    }

    #[test]
    fn scalar_gaussian_limit_is_exponential() {
        let fseq = |k: usize| {
            let kf = k as f64;
            let arg = HolExpr::poly(vec![c(kf * kf, 0.0), c(2.0 * kf, 0.0), c(1.0, 0.0)]);
            Ok(MatrixHoloMap::entrywise(1, vec![HolExpr::exp(arg)]).unwrap())
        };
        let indices: Vec<usize> = (8..12).collect();
        let (_, rep) = lie_renormalize(fseq, &[0.0, 0.0], &|_| vec![0.0, 0.0], &indices, &LieOptions::default()).unwrap();
        assert!((rep.x[0][0].norm() - 1.0).abs() < 1e-2);
        assert!(rep.residual < 5e-2);
        assert!(rep.steps.windows(2).all(|w| w[1].df_constancy <= w[0].df_constancy));
        assert!(rep.steps.windows(2).all(|w| w[1].residual <= w[0].residual));
    }

    #[test]
    fn constant_matrices_are_rejected() {
        let fseq = |_: usize| Ok(MatrixHoloMap::group_exp(CMat::identity(2, 2) * c(2.0, 0.0), CMat::zeros(2, 2)).unwrap());
        let err = lie_renormalize(fseq, &[0.0, 0.0], &|_| vec![0.0, 0.0], &[1, 2, 3], &LieOptions::default()).unwrap_err();
        assert!(matches!(err, GroupError::Renorm(RenormError::Precondition(_))));
    }
}
