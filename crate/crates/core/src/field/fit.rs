use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AffineFunc, FieldError, GridSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    pub affine: AffineFunc,
    /// `max |f − fit|` over the sample points.
    pub residual: f64,
}

/// Least-squares affine fit of `f` over the grid points.
pub fn affine_fit<F>(f: F, grid: &GridSpec) -> Result<AffineFit, FieldError>
where
    F: Fn(&[f64]) -> Result<f64, FieldError> + Sync,
{
    let points = grid.points();
    let values = points
        .par_iter()
        .map(|x| f(x))
        .collect::<Result<Vec<_>, _>>()?;
    fit_samples(&points, &values)
}

/// Least-squares affine fit of given samples.
pub fn fit_samples(points: &[Vec<f64>], values: &[f64]) -> Result<AffineFit, FieldError> {
    let n = points.len();
    if n == 0 || n != values.len() {
        return Err(FieldError::DegenerateGrid);
    }
    let m = points[0].len();
    if points.iter().all(|p| p == &points[0]) {
        return Err(FieldError::DegenerateGrid);
    }
    // Centre the coordinates so the constant column stays well conditioned.
    let mean: Vec<f64> = (0..m)
        .map(|j| points.iter().map(|p| p[j]).sum::<f64>() / n as f64)
        .collect();
    let design = DMatrix::from_fn(n, m + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            points[i][j - 1] - mean[j - 1]
        }
    });
    let rhs = DVector::from_column_slice(values);
    let svd = design.svd(true, true);
    let eps = 1e-12 * svd.singular_values.max();
    let coef = svd
        .solve(&rhs, eps)
        .map_err(|e| FieldError::Invalid(e.to_string()))?;
    let gradient: Vec<f64> = (0..m).map(|j| coef[j + 1]).collect();
    let constant = coef[0] - gradient.iter().zip(&mean).map(|(g, c)| g * c).sum::<f64>();
    let affine = AffineFunc { constant, gradient };
    let residual = points
        .iter()
        .zip(values)
        .map(|(p, v)| (v - affine.eval(p)).abs())
        .fold(0.0, f64::max);
    Ok(AffineFit { affine, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{HarmonicExpr, HolExpr, ProbeBox};

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(ProbeBox::cube(2, 1.0), n).unwrap()
    }

    #[test]
    fn exact_affine_recovered() {
        let fit = affine_fit(|x| Ok(3.0 + 2.0 * x[0] - x[1]), &grid(7)).unwrap();
        assert!((fit.affine.constant - 3.0).abs() < 1e-12);
        assert!((fit.affine.gradient[0] - 2.0).abs() < 1e-12);
        assert!((fit.affine.gradient[1] + 1.0).abs() < 1e-12);
        assert!(fit.residual <= 1e-12);
    }

    #[test]
    fn constant_function() {
        let fit = affine_fit(|_| Ok(5.0), &grid(5)).unwrap();
        assert!((fit.affine.constant - 5.0).abs() < 1e-12);
        assert!(fit.affine.gradient_norm() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn saddle_on_symmetric_grid() {
        let f = HarmonicExpr::re(HolExpr::power(2));
        let mut prev = 0.0;
        for n in [5, 9, 17, 33] {
            let fit = affine_fit(|x| f.eval(x), &grid(n)).unwrap();
            assert!(fit.affine.constant.abs() < 1e-12);
            assert!(fit.affine.gradient_norm() < 1e-12);
            // Odd moments vanish; the residual is sup |x² − y²| = 1 at the corners.
            assert!((fit.residual - 1.0).abs() < 1e-12);
            assert!(fit.residual >= prev);
            prev = fit.residual;
        }
    }

    #[test]
    fn degenerate_grid_is_error() {
        let g = GridSpec::new(ProbeBox::new(vec![1.0, 1.0], vec![1.0, 1.0]).unwrap(), 3).unwrap();
        assert!(matches!(affine_fit(|_| Ok(0.0), &g), Err(FieldError::DegenerateGrid)));
    }
}
