use std::cmp::Ordering;
use std::fmt::Debug;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RenormError;
use crate::field::FieldError;

/// A metric space with a nonnegative weight `φ`, explored through ball queries.
pub trait MetricSpaceView: Sync {
    type Point: Clone + Debug + Send + Sync;

    fn distance(&self, a: &Self::Point, b: &Self::Point) -> f64;
    fn phi(&self, x: &Self::Point) -> Result<f64, FieldError>;
    /// Candidate points of the closed ball `B(center, radius)` at a refinement
    /// level. Finite spaces return the whole ball at every level.
    fn ball(&self, center: &Self::Point, radius: f64, level: usize) -> Vec<Self::Point>;
    fn levels(&self) -> usize;
    /// True when `ball` enumerates every point, so certificates are exact.
    fn exhaustive(&self) -> bool;
    fn coords(&self, x: &Self::Point) -> Vec<f64>;

    /// Tries to reach `φ > target` inside `B(center, radius)` starting from
    /// `start`. Returns the point and the number of evaluations spent.
    fn refine(
        &self,
        _start: &Self::Point,
        _center: &Self::Point,
        _radius: f64,
        _target: f64,
    ) -> (Option<(Self::Point, f64)>, usize) {
        (None, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub max_iterations: usize,
    pub max_samples: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            max_samples: 20_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection<P> {
    pub point: P,
    pub phi: f64,
    pub iterations: usize,
    pub samples: usize,
    /// Samples whose weight could not be evaluated (overflow); they are skipped.
    pub skipped: usize,
    pub exhaustive: bool,
}

/// Finite metric space given by a distance matrix and weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteSpace {
    pub dist: Vec<Vec<f64>>,
    pub phi: Vec<f64>,
}

impl FiniteSpace {
    pub fn new(dist: Vec<Vec<f64>>, phi: Vec<f64>) -> Result<Self, FieldError> {
        let n = phi.len();
        if n == 0 {
            return Err(FieldError::Invalid("empty metric space".into()));
        }
        if dist.len() != n || dist.iter().any(|row| row.len() != n) {
            return Err(FieldError::DimensionMismatch {
                expected: n,
                found: dist.len(),
            });
        }
        if phi.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(FieldError::Invalid("weights must be finite and nonnegative".into()));
        }
        Ok(Self { dist, phi })
    }

    /// Points of `ℝᵏ` with the Euclidean distance.
    pub fn euclidean(points: &[Vec<f64>], phi: Vec<f64>) -> Result<Self, FieldError> {
        let dist = points
            .iter()
            .map(|a| points.iter().map(|b| crate::field::distance(a, b)).collect())
            .collect();
        Self::new(dist, phi)
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// Checks the metric axioms on every triple, with relative slack `tol`.
    pub fn check_metric(&self, tol: f64) -> bool {
        let n = self.len();
        for i in 0..n {
            if self.dist[i][i] != 0.0 {
                return false;
            }
            for j in 0..n {
                let d = self.dist[i][j];
                if d < 0.0 || d != self.dist[j][i] || (i != j && d == 0.0) {
                    return false;
                }
                for k in 0..n {
                    if d > (self.dist[i][k] + self.dist[k][j]) * (1.0 + tol) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

impl MetricSpaceView for FiniteSpace {
    type Point = usize;

    fn distance(&self, a: &usize, b: &usize) -> f64 {
        self.dist[*a][*b]
    }

    fn phi(&self, x: &usize) -> Result<f64, FieldError> {
        Ok(self.phi[*x])
    }

    fn ball(&self, center: &usize, radius: f64, _level: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&j| self.dist[*center][j] <= radius)
            .collect()
    }

    fn levels(&self) -> usize {
        1
    }

    fn exhaustive(&self) -> bool {
        true
    }

    fn coords(&self, x: &usize) -> Vec<f64> {
        vec![*x as f64]
    }
}

/// Closed ball `V = B(center, radius) ⊂ ℝᵐ` with a weight `φ`, sampled by
/// cubic grids of `(2n+1)ᵐ` points with `n = base_n·2^level`.
pub struct ContinuousBall<F> {
    pub center: Vec<f64>,
    pub radius: f64,
    pub phi: F,
    pub base_n: usize,
    pub levels: usize,
    /// Run a compass search from the best samples before certifying.
    pub local_search: bool,
}

impl<F> ContinuousBall<F>
where
    F: Fn(&[f64]) -> Result<f64, FieldError> + Sync,
{
    pub fn new(center: Vec<f64>, radius: f64, phi: F) -> Self {
        Self {
            center,
            radius,
            phi,
            base_n: 8,
            levels: 3,
            local_search: true,
        }
    }

    pub fn finest_n(&self) -> usize {
        self.base_n << (self.levels.max(1) - 1)
    }

    fn in_v(&self, x: &[f64]) -> bool {
        crate::field::distance(x, &self.center) <= self.radius
    }
}

impl<F> MetricSpaceView for ContinuousBall<F>
where
    F: Fn(&[f64]) -> Result<f64, FieldError> + Sync,
{
    type Point = Vec<f64>;

    fn distance(&self, a: &Vec<f64>, b: &Vec<f64>) -> f64 {
        crate::field::distance(a, b)
    }

    fn phi(&self, x: &Vec<f64>) -> Result<f64, FieldError> {
        (self.phi)(x)
    }

    fn ball(&self, center: &Vec<f64>, radius: f64, level: usize) -> Vec<Vec<f64>> {
        let m = center.len();
        let n = (self.base_n << level) as i64;
        let h = radius / n as f64;
        let side = (2 * n + 1) as usize;
        let total = side.pow(m as u32);
        let mut out = Vec::new();
        let mut x = vec![0.0; m];
        for flat in 0..total {
            let mut rem = flat;
            let mut r2 = 0i64;
            for i in (0..m).rev() {
                let k = (rem % side) as i64 - n;
                rem /= side;
                r2 += k * k;
                x[i] = center[i] + h * k as f64;
            }
            if r2 <= n * n && self.in_v(&x) {
                out.push(x.clone());
            }
        }
        out
    }

    fn levels(&self) -> usize {
        self.levels
    }

    fn exhaustive(&self) -> bool {
        false
    }

    fn coords(&self, x: &Vec<f64>) -> Vec<f64> {
        x.clone()
    }

    fn refine(
        &self,
        start: &Vec<f64>,
        center: &Vec<f64>,
        radius: f64,
        target: f64,
    ) -> (Option<(Vec<f64>, f64)>, usize) {
        if !self.local_search {
            return (None, 0);
        }
        let m = start.len();
        let mut x = start.clone();
        let mut fx = match (self.phi)(&x) {
            Ok(v) => v,
            Err(_) => return (None, 1),
        };
        let mut evals = 1;
        let mut h = radius / (2 * self.finest_n()) as f64;
        let floor = radius * 1e-7;
        while h > floor && evals < 400 {
            let mut best: Option<(Vec<f64>, f64)> = None;
            for i in 0..m {
                for s in [-1.0, 1.0] {
                    let mut y = x.clone();
                    y[i] += s * h;
                    if crate::field::distance(&y, center) > radius || !self.in_v(&y) {
                        continue;
                    }
                    evals += 1;
                    if let Ok(v) = (self.phi)(&y) {
                        if v > best.as_ref().map_or(fx, |b| b.1) {
                            best = Some((y, v));
                        }
                    }
                }
            }
            match best {
                Some((y, v)) => {
                    x = y;
                    fx = v;
                    if fx > target {
                        return (Some((x, fx)), evals);
                    }
                    h *= 1.5;
                }
                None => h *= 0.5,
            }
        }
        (None, evals)
    }
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Constructive selection: ascends from `p` until no point of the ball of
/// radius `1/(ε·φ(q))` around the current `q` has `φ > τ·φ(q)`.
///
/// The returned point satisfies `d(p,q) ≤ τ/(ε φ(p) (τ−1))`, `φ(q) ≥ φ(p)` and
/// `φ(x) ≤ τ φ(q)` on every inspected point of `B(q, 1/(ε φ(q)))`; the last
/// property is exact when the space is enumerated exhaustively.
pub fn zalcman_select<V: MetricSpaceView>(
    space: &V,
    p: &V::Point,
    tau: f64,
    eps: f64,
    budget: Budget,
) -> Result<Selection<V::Point>, RenormError> {
    if !(tau > 1.0) || !tau.is_finite() {
        return Err(RenormError::Precondition(format!("tau must exceed 1, got {tau}")));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(RenormError::Precondition(format!("eps must be positive, got {eps}")));
    }
    let phi_p = space.phi(p)?;
    if !(phi_p > 0.0) || !phi_p.is_finite() {
        return Err(RenormError::Precondition(format!(
            "phi at the start point must be positive and finite, got {phi_p}"
        )));
    }

    let mut cur = p.clone();
    let mut phi_cur = phi_p;
    let mut samples = 0usize;
    let mut skipped = 0usize;
    let incomplete = |best: &V::Point, phi: f64| RenormError::SelectionIncomplete {
        step: None,
        best: space.coords(best),
        phi,
    };

    for iteration in 0..budget.max_iterations {
        let radius = 1.0 / (eps * phi_cur);
        let threshold = tau * phi_cur;
        let mut next: Option<(V::Point, f64)> = None;
        let mut finest: Vec<(V::Point, f64)> = Vec::new();

        for level in 0..space.levels().max(1) {
            let pts = space.ball(&cur, radius, level);
            samples += pts.len();
            if samples > budget.max_samples {
                return Err(incomplete(&cur, phi_cur));
            }
            let vals: Vec<Result<f64, FieldError>> = pts.par_iter().map(|x| space.phi(x)).collect();
            let mut scored = Vec::with_capacity(pts.len());
            for (x, v) in pts.into_iter().zip(vals) {
                match v {
                    Ok(v) if v.is_finite() => scored.push((x, v)),
                    Ok(_) | Err(FieldError::Overflow) => skipped += 1,
                    Err(e) => return Err(e.into()),
                }
            }
            next = scored
                .iter()
                .filter(|(_, v)| *v > threshold)
                .min_by(|a, b| {
                    b.1.total_cmp(&a.1)
                        .then_with(|| space.distance(p, &a.0).total_cmp(&space.distance(p, &b.0)))
                        .then_with(|| lex(&space.coords(&a.0), &space.coords(&b.0)))
                })
                .cloned();
            if next.is_some() || space.exhaustive() {
                break;
            }
            finest = scored;
        }

        if next.is_none() && !space.exhaustive() {
            finest.sort_by(|a, b| b.1.total_cmp(&a.1));
            for (start, _) in finest.iter().take(3) {
                let (found, evals) = space.refine(start, &cur, radius, threshold);
                samples += evals;
                if found.is_some() {
                    next = found;
                    break;
                }
            }
        }

        match next {
            Some((x, v)) => {
                cur = x;
                phi_cur = v;
            }
            None => {
                return Ok(Selection {
                    point: cur,
                    phi: phi_cur,
                    iterations: iteration,
                    samples,
                    skipped,
                    exhaustive: space.exhaustive(),
                })
            }
        }
    }
    Err(incomplete(&cur, phi_cur))
}

/// Checks the three selection inequalities for `q` by enumerating a finite space.
pub fn check_selection(space: &FiniteSpace, p: usize, q: usize, tau: f64, eps: f64) -> bool {
    let slack = 1.0 + 1e-12;
    let (fp, fq) = (space.phi[p], space.phi[q]);
    let c1 = space.dist[p][q] <= tau / (eps * fp * (tau - 1.0)) * slack;
    let c2 = fq >= fp;
    let c3 = (0..space.len())
        .filter(|&x| space.dist[x][q] <= 1.0 / (eps * fq))
        .all(|x| space.phi[x] <= tau * fq);
    c1 && c2 && c3
}
