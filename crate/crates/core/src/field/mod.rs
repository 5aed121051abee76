//! Harmonic functions on `ℝᵐ`: exact evaluation and gradients, the
//! Marty-type derivative `f̃ = |∇f| / cosh f`, spherical means, Harnack
//! checks and affine fitting.

mod expr;
mod fit;
mod harnack;
mod quadrature;

pub use expr::{HarmonicExpr, HarmonicPoly, HolExpr};
pub use fit::{affine_fit, fit_samples, AffineFit};
pub use harnack::{harnack_check, harnack_constant, HarnackReport};
pub use quadrature::{gauss_legendre, spherical_mean};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("numeric overflow during evaluation")]
    Overflow,
    #[error("non-finite input")]
    NonFinite,
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("coordinate {index} out of range for dimension {dim}")]
    CoordOutOfRange { index: usize, dim: usize },
    #[error("sum of zero terms")]
    EmptySum,
    #[error("not harmonic: {0}")]
    NotHarmonic(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("degenerate grid")]
    DegenerateGrid,
    #[error("invalid argument: {0}")]
    Invalid(String),
}

/// A real-valued field with a gradient; harmonic expressions and the
/// closed-form Poisson kernels both implement it.
pub trait ScalarField: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Result<f64, FieldError>;
    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>), FieldError>;

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, FieldError> {
        Ok(self.value_and_gradient(x)?.1)
    }
}

/// `x ↦ scale·x + center` with `scale > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineChart {
    pub scale: f64,
    pub center: Vec<f64>,
}

impl AffineChart {
    pub fn new(scale: f64, center: Vec<f64>) -> Result<Self, FieldError> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(FieldError::Invalid(format!("chart scale must be positive, got {scale}")));
        }
        if center.is_empty() {
            return Err(FieldError::ZeroDimension);
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(FieldError::NonFinite);
        }
        Ok(Self { scale, center })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            scale: 1.0,
            center: vec![0.0; dim],
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.center)
            .map(|(xi, ci)| self.scale * xi + ci)
            .collect()
    }

    /// `self ∘ inner`
    pub fn then(&self, inner: &AffineChart) -> AffineChart {
        AffineChart {
            scale: self.scale * inner.scale,
            center: self.apply(&inner.center),
        }
    }
}

/// `x ↦ constant + ⟨gradient, x⟩`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFunc {
    #[serde(rename = "c")]
    pub constant: f64,
    #[serde(rename = "v")]
    pub gradient: Vec<f64>,
}

impl AffineFunc {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + dot(&self.gradient, x)
    }

    pub fn gradient_norm(&self) -> f64 {
        norm(&self.gradient)
    }

    pub fn is_nonconstant(&self) -> bool {
        self.gradient.iter().any(|g| *g != 0.0)
    }
}

/// Axis-aligned closed box `∏ [loᵢ, hiᵢ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ProbeBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, FieldError> {
        if lo.len() != hi.len() {
            return Err(FieldError::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(FieldError::ZeroDimension);
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
            return Err(FieldError::Invalid("box requires finite lo ≤ hi".into()));
        }
        Ok(Self { lo, hi })
    }

    /// `[-half, half]^dim`
    pub fn cube(dim: usize, half: f64) -> Self {
        Self {
            lo: vec![-half; dim],
            hi: vec![half; dim],
        }
    }

    /// `center + [-half, half]^dim`
    pub fn around(center: &[f64], half: f64) -> Self {
        Self {
            lo: center.iter().map(|c| c - half).collect(),
            hi: center.iter().map(|c| c + half).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *l <= *v && *v <= *h)
    }

    pub fn contains_box(&self, other: &ProbeBox) -> bool {
        self.contains(&other.lo) && self.contains(&other.hi)
    }
}

/// Tensor grid with `points_per_axis ≥ 2` points on each side of the box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub region: ProbeBox,
    pub points_per_axis: usize,
}

impl GridSpec {
    pub fn new(region: ProbeBox, points_per_axis: usize) -> Result<Self, FieldError> {
        if points_per_axis < 2 {
            return Err(FieldError::Invalid("grid needs at least 2 points per axis".into()));
        }
        Ok(Self {
            region,
            points_per_axis,
        })
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points in lexicographic order (last axis fastest).
    pub fn points(&self) -> Vec<Vec<f64>> {
        let m = self.dim();
        let n = self.points_per_axis;
        let axis: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let (lo, hi) = (self.region.lo[i], self.region.hi[i]);
                (0..n)
                    .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
                    .collect()
            })
            .collect();
        let mut out = Vec::with_capacity(self.len());
        let mut idx = vec![0usize; m];
        loop {
            out.push(idx.iter().enumerate().map(|(i, &k)| axis[i][k]).collect());
            let mut d = m;
            loop {
                if d == 0 {
                    return out;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < n {
                    break;
                }
                idx[d] = 0;
            }
        }
    }

    /// Largest distance between neighbouring points along any axis.
    pub fn spacing(&self) -> f64 {
        self.region
            .lo
            .iter()
            .zip(&self.region.hi)
            .map(|(l, h)| (h - l) / (self.points_per_axis - 1) as f64)
            .fold(0.0, f64::max)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Euclidean distance.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `ln cosh t`, stable for all finite `t`.
pub fn log_cosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `|g| / cosh(v)` evaluated in the log domain.
pub fn tilde_from_parts(value: f64, grad_norm: f64) -> f64 {
    if grad_norm == 0.0 {
        return 0.0;
    }
    (grad_norm.ln() - log_cosh(value)).exp()
}

/// `ln f̃` from value and gradient norm; finite whenever the gradient is nonzero.
pub fn log_tilde_from_parts(value: f64, grad_norm: f64) -> f64 {
    grad_norm.ln() - log_cosh(value)
}

/// `f̃(x) = |∇f(x)| / cosh f(x)`
pub fn tilde_derivative<F: ScalarField + ?Sized>(f: &F, x: &[f64]) -> Result<f64, FieldError> {
    let (v, g) = f.value_and_gradient(x)?;
    Ok(tilde_from_parts(v, norm(&g)))
}

/// Poisson kernel of the ball `B(center, |pole − center|)` with boundary pole
/// `pole`, scaled so that its mean over spheres around `center` is one:
/// `P(x) = ρ^{m-2} (ρ² − |x−c|²) / |x − pole|^m`. Positive harmonic on the ball.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonKernel {
    pub center: Vec<f64>,
    pub radius: f64,
    pub pole: Vec<f64>,
}

impl PoissonKernel {
    pub fn new(center: Vec<f64>, pole: Vec<f64>) -> Result<Self, FieldError> {
        if center.len() != pole.len() {
            return Err(FieldError::DimensionMismatch {
                expected: center.len(),
                found: pole.len(),
            });
        }
        let d: Vec<f64> = pole.iter().zip(&center).map(|(p, c)| p - c).collect();
        let radius = norm(&d);
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(FieldError::Invalid("pole must differ from the center".into()));
        }
        Ok(Self { center, radius, pole })
    }
}

impl ScalarField for PoissonKernel {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn eval(&self, x: &[f64]) -> Result<f64, FieldError> {
        Ok(self.value_and_gradient(x)?.0)
    }

    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>), FieldError> {
        let m = self.dim();
        if x.len() != m {
            return Err(FieldError::DimensionMismatch {
                expected: m,
                found: x.len(),
            });
        }
        let xc: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let xp: Vec<f64> = x.iter().zip(&self.pole).map(|(a, b)| a - b).collect();
        let r2 = self.radius * self.radius;
        let num = r2 - dot(&xc, &xc);
        let d2 = dot(&xp, &xp);
        if d2 == 0.0 {
            return Err(FieldError::Overflow);
        }
        let mf = m as f64;
        let k = self.radius.powi(m as i32 - 2);
        let dm = d2.powf(mf / 2.0);
        let value = k * num / dm;
        // ∇ = k(−2(x−c)/|x−p|^m − m·num·(x−p)/|x−p|^{m+2})
        let grad = xc
            .iter()
            .zip(&xp)
            .map(|(a, b)| k * (-2.0 * a / dm - mf * num * b / (dm * d2)))
            .collect();
        Ok((value, grad))
    }
}
