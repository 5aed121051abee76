use serde::{Deserialize, Serialize};

use super::{norm, FieldError, GridSpec, ScalarField};

/// `3^{-m}`: two-sided Poisson bounds on `B(p, 2R)` restricted to `B(p, R)`
/// give `((2R − R)/(2R + R))^m`.
pub fn harnack_constant(dim: usize) -> f64 {
    3f64.powi(-(dim as i32))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnackReport {
    pub constant: f64,
    /// `min f / max f` over the sampled inner ball.
    pub worst_ratio: f64,
    pub samples: usize,
    pub pass: bool,
}

impl HarnackReport {
    pub fn margin(&self) -> f64 {
        self.worst_ratio / self.constant
    }
}

/// Checks `A·f(x) ≤ f(y)` for all sampled `x, y ∈ B(p, R)` with `A = 3^{-m}`.
///
/// Inner samples are the grid points strictly inside `B(p, R)`. Positivity on
/// `B(p, 2R)` is checked on those points, their dilation by 2 about `p`, and
/// any grid point inside the larger ball.
pub fn harnack_check<F: ScalarField + ?Sized>(
    f: &F,
    p: &[f64],
    radius: f64,
    sample: &GridSpec,
) -> Result<HarnackReport, FieldError> {
    let m = f.dim();
    if p.len() != m || sample.dim() != m {
        return Err(FieldError::DimensionMismatch {
            expected: m,
            found: if p.len() != m { p.len() } else { sample.dim() },
        });
    }
    if !(radius > 0.0) {
        return Err(FieldError::Invalid("radius must be positive".into()));
    }
    let dist = |x: &[f64]| norm(&x.iter().zip(p).map(|(a, b)| a - b).collect::<Vec<_>>());

    let points = sample.points();
    let inner: Vec<&Vec<f64>> = points.iter().filter(|x| dist(x) < radius).collect();
    if inner.is_empty() {
        return Err(FieldError::DegenerateGrid);
    }

    let mut outer: Vec<Vec<f64>> = points
        .iter()
        .filter(|x| dist(x) < 2.0 * radius)
        .cloned()
        .collect();
    outer.extend(
        inner
            .iter()
            .map(|x| x.iter().zip(p).map(|(a, c)| c + 2.0 * (a - c)).collect()),
    );
    for x in &outer {
        let v = f.eval(x)?;
        if !(v > 0.0) {
            return Err(FieldError::Precondition(format!(
                "f = {v} is not positive at {x:?} inside B(p, 2R)"
            )));
        }
    }

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in &inner {
        let v = f.eval(x)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let constant = harnack_constant(m);
    let worst_ratio = lo / hi;
    Ok(HarnackReport {
        constant,
        worst_ratio,
        samples: inner.len(),
        pass: worst_ratio >= constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{HarmonicExpr, PoissonKernel, ProbeBox};

    fn grid(dim: usize, half: f64, n: usize) -> GridSpec {
        GridSpec::new(ProbeBox::cube(dim, half), n).unwrap()
    }

    #[test]
    fn constant_function_ratio_one() {
        let f = HarmonicExpr::constant(2, 1.0).unwrap();
        let r = harnack_check(&f, &[0.0, 0.0], 1.0, &grid(2, 1.0, 21)).unwrap();
        assert!(r.pass);
        assert_eq!(r.worst_ratio, 1.0);
    }

    #[test]
    fn poisson_kernel_with_boundary_pole() {
        let k = PoissonKernel::new(vec![0.0, 0.0], vec![2.0, 0.0]).unwrap();
        let r = harnack_check(&k, &[0.0, 0.0], 1.0, &grid(2, 1.0, 41)).unwrap();
        assert!(r.pass);
        assert_eq!(r.constant, 1.0 / 9.0);
        // The closed-ball extremes give exactly (1/3)/3 = 1/9.
        assert!(r.worst_ratio < 0.13);
    }

    #[test]
    fn shifted_affine() {
        let f = HarmonicExpr::affine(1.0, &[1.0, 0.0]).unwrap();
        let r = harnack_check(&f, &[0.0, 0.0], 0.4, &grid(2, 0.4, 17)).unwrap();
        assert!(r.pass);
        // Oracle: enumeration over the same inner sample.
        let pts: Vec<f64> = grid(2, 0.4, 17)
            .points()
            .into_iter()
            .filter(|x| norm(x) < 0.4)
            .map(|x| 1.0 + x[0])
            .collect();
        let lo = pts.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = pts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(r.worst_ratio, lo / hi);
    }

    #[test]
    fn nonpositive_sample_is_precondition_error() {
        let f = HarmonicExpr::affine(0.5, &[1.0, 0.0]).unwrap();
        let err = harnack_check(&f, &[0.0, 0.0], 1.0, &grid(2, 1.0, 11)).unwrap_err();
        assert!(matches!(err, FieldError::Precondition(_)));
    }
}
