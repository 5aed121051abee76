use std::f64::consts::PI;

use super::FieldError;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))`
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Mean of `f` over the sphere `|x| = r` in `ℝ^dim` with respect to the
/// unit-mass uniform measure.
///
/// Uses hyperspherical coordinates: a `2·quad`-point trapezoid rule in the
/// azimuth and, for each polar angle with weight `sin^p θ`, either
/// Gauss–Legendre in `cos θ` (odd `p`) or the midpoint rule in `θ` (even `p`).
/// Both are exact on polynomials of moderate degree.
pub fn spherical_mean<F>(f: F, dim: usize, r: f64, quad: usize) -> Result<f64, FieldError>
where
    F: Fn(&[f64]) -> Result<f64, FieldError>,
{
    if dim == 0 {
        return Err(FieldError::ZeroDimension);
    }
    if !(r > 0.0) {
        return Err(FieldError::Invalid(format!("radius must be positive, got {r}")));
    }
    if quad == 0 {
        return Err(FieldError::Invalid("quadrature order must be positive".into()));
    }
    if dim == 1 {
        return Ok(0.5 * (f(&[r])? + f(&[-r])?));
    }
    let (gl_nodes, gl_weights) = gauss_legendre(quad);
    let n_phi = 2 * quad;
    let phis: Vec<f64> = (0..n_phi).map(|k| 2.0 * PI * k as f64 / n_phi as f64).collect();

    // Polar angle i (dim − 2 of them) carries weight sin^{dim−2−i}.
    // Each rule is stored as (cos θ, sin θ, weight).
    let rules: Vec<Vec<(f64, f64, f64)>> = (0..dim - 2)
        .map(|i| {
            let p = (dim - 2 - i) as i32;
            let raw: Vec<(f64, f64, f64)> = if p % 2 == 1 {
                gl_nodes
                    .iter()
                    .zip(&gl_weights)
                    .map(|(&t, &w)| {
                        let s = (1.0 - t * t).sqrt();
                        (t, s, w * s.powi(p - 1))
                    })
                    .collect()
            } else {
                (0..quad)
                    .map(|k| {
                        let th = PI * (k as f64 + 0.5) / quad as f64;
                        (th.cos(), th.sin(), th.sin().powi(p))
                    })
                    .collect()
            };
            let total: f64 = raw.iter().map(|r| r.2).sum();
            raw.into_iter().map(|(c, s, w)| (c, s, w / total)).collect()
        })
        .collect();

    let mut acc = 0.0;
    let mut idx = vec![0usize; dim - 2];
    let mut x = vec![0.0; dim];
    loop {
        let mut weight = 1.0;
        let mut sin_prod = r;
        for (i, &k) in idx.iter().enumerate() {
            let (c, sn, w) = rules[i][k];
            weight *= w;
            x[i] = sin_prod * c;
            sin_prod *= sn;
        }
        let mut ring = 0.0;
        for phi in &phis {
            x[dim - 2] = sin_prod * phi.cos();
            x[dim - 1] = sin_prod * phi.sin();
            ring += f(&x)?;
        }
        acc += weight * ring / n_phi as f64;

        let mut d = idx.len();
        loop {
            if d == 0 {
                return Ok(acc);
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < quad {
                break;
            }
            idx[d] = 0;
        }
    }
}
