use serde::{Deserialize, Serialize};

use super::slice::{Interval, SliceSet};

/// Boundary curves `y = h(x)` used by the below/above primitives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Curve {
    /// `h(x) = t`.
    Constant { t: f64 },
    /// `h(x) = m x + c`.
    Linear { m: f64, c: f64 },
    /// `h(x) = s·e^{-|x|} + t`.
    ExpCusp { s: f64, t: f64 },
    /// `h(x) = c / x`, defined on `x > 0` only.
    Hyperbola { c: f64 },
    /// `h(x) = a x² + b`.
    Parabola { a: f64, b: f64 },
}

const BISECT_ITERS: usize = 200;

impl Curve {
    /// Open interval on which `h` is defined.
    pub fn domain(&self) -> Interval {
        match self {
            Curve::Hyperbola { .. } => Interval::new(0.0, f64::INFINITY),
            _ => Interval::FULL,
        }
    }

    pub fn eval(&self, x: f64) -> Option<f64> {
        if !self.domain().contains(x) {
            return None;
        }
        Some(match *self {
            Curve::Constant { t } => t,
            Curve::Linear { m, c } => m * x + c,
            Curve::ExpCusp { s, t } => s * (-x.abs()).exp() + t,
            Curve::Hyperbola { c } => c / x,
            Curve::Parabola { a, b } => a * x * x + b,
        })
    }

    /// The set of `x` in the domain with `sign·(h(x) − m x − k) > 0`.
    ///
    /// The flag reports whether an endpoint was located by bisection.
    pub fn compare_line(&self, m: f64, k: f64, sign: f64) -> (SliceSet, bool) {
        let dom = self.domain();
        let g = |x: f64| sign * (self.eval(x).unwrap_or(f64::NAN) - m * x - k);
        match *self {
            Curve::Constant { t } => (sweep(&g, dom, linear_root(-m, t - k)), false),
            Curve::Linear { m: m0, c } => (sweep(&g, dom, linear_root(m0 - m, c - k)), false),
            Curve::Parabola { a, b } => (sweep(&g, dom, quadratic_roots(a, -m, b - k)), false),
            Curve::Hyperbola { c } => {
                // On x > 0 the sign of c/x − m x − k matches c − k x − m x².
                let roots = quadratic_roots(-m, -k, c).into_iter().filter(|r| *r > 0.0).collect();
                (sweep(&g, dom, roots), false)
            }
            Curve::ExpCusp { s, t } => exp_cusp_compare(s, t - k, m, &g),
        }
    }
}

fn linear_root(alpha: f64, beta: f64) -> Vec<f64> {
    if alpha == 0.0 {
        Vec::new()
    } else {
        vec![-beta / alpha]
    }
}

/// Real roots of `a x² + b x + c`, sorted and deduplicated.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return linear_root(b, c);
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sgn = if b < 0.0 { -1.0 } else { 1.0 };
    let q = -0.5 * (b + sgn * disc.sqrt());
    let mut r = if q == 0.0 {
        vec![0.0]
    } else {
        vec![q / a, c / q]
    };
    r.sort_by(f64::total_cmp);
    r.dedup();
    r
}

/// Positive set of `g` on `dom` given cut points between which `g` has no zero.
pub(crate) fn sweep(g: &dyn Fn(f64) -> f64, dom: Interval, cuts: Vec<f64>) -> SliceSet {
    let mut pts: Vec<f64> = cuts.into_iter().filter(|c| dom.contains(*c)).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut bounds = Vec::with_capacity(pts.len() + 2);
    bounds.push(dom.lo);
    bounds.extend_from_slice(&pts);
    bounds.push(dom.hi);

    let mut out = Vec::new();
    let mut open: Option<f64> = None;
    for w in 0..bounds.len() - 1 {
        let gap = Interval::new(bounds[w], bounds[w + 1]);
        let positive = g(gap_point(gap)) > 0.0;
        match (positive, open) {
            (true, None) => open = Some(gap.lo),
            (false, Some(lo)) => {
                out.push(Interval::new(lo, gap.lo));
                open = None;
            }
            _ => {}
        }
        // Close at an interior cut unless the function stays positive through it.
        if let Some(lo) = open {
            if w + 1 < bounds.len() - 1 && !(g(gap.hi) > 0.0) {
                out.push(Interval::new(lo, gap.hi));
                open = None;
            }
        }
    }
    if let Some(lo) = open {
        out.push(Interval::new(lo, dom.hi));
    }
    SliceSet::from_intervals(out)
}

fn gap_point(gap: Interval) -> f64 {
    match (gap.lo.is_finite(), gap.hi.is_finite()) {
        (true, true) => {
            let mid = 0.5 * gap.lo + 0.5 * gap.hi;
            if gap.contains(mid) {
                mid
            } else {
                gap.lo
            }
        }
        (true, false) => gap.lo + gap.lo.abs().max(1.0),
        (false, true) => gap.hi - gap.hi.abs().max(1.0),
        (false, false) => 0.0,
    }
}

/// `g(x) = s e^{-|x|} + d − m x`, compared with zero by monotone pieces.
fn exp_cusp_compare(s: f64, d: f64, m: f64, g: &dyn Fn(f64) -> f64) -> (SliceSet, bool) {
    if m == 0.0 {
        return (sweep(g, Interval::FULL, exp_cusp_level_roots(s, d)), false);
    }
    // Critical points: x > 0 where e^{-x} = −m/s, x < 0 where e^{x} = m/s.
    let mut cuts = vec![0.0];
    if s != 0.0 {
        let rp = -m / s;
        if rp > 0.0 && rp < 1.0 {
            cuts.push(-rp.ln());
        }
        let rn = m / s;
        if rn > 0.0 && rn < 1.0 {
            cuts.push(rn.ln());
        }
    }
    cuts.sort_by(f64::total_cmp);
    // Beyond ±far the linear term fixes the sign: |m x| > |d| + |s|.
    let reach = cuts.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
    let far = reach + 2.0 * (d.abs() + s.abs()) / m.abs() + 1.0;
    let mut bounds = vec![-far];
    bounds.extend_from_slice(&cuts);
    bounds.push(far);
    let mut roots = Vec::new();
    if far.is_finite() {
        for w in bounds.windows(2) {
            if let Some(r) = monotone_root(g, w[0], w[1]) {
                roots.push(r);
            }
        }
    }
    let approximate = !roots.is_empty();
    cuts.extend(roots);
    (sweep(g, Interval::FULL, cuts), approximate)
}

/// Closed-form roots of `s e^{-|x|} + d = 0`.
fn exp_cusp_level_roots(s: f64, d: f64) -> Vec<f64> {
    if s == 0.0 {
        return Vec::new();
    }
    let q = -d / s;
    if q > 0.0 && q <= 1.0 {
        let r = -q.ln();
        vec![-r, r]
    } else {
        Vec::new()
    }
}

/// Root of a continuous monotone `g` on `[a, b]` when its sign changes there.
fn monotone_root(g: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> Option<f64> {
    let (ga, gb) = (g(a), g(b));
    if ga == 0.0 {
        return Some(a);
    }
    if gb == 0.0 {
        return Some(b);
    }
    if (ga > 0.0) == (gb > 0.0) {
        return None;
    }
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * a + 0.5 * b;
        if mid <= a || mid >= b {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return Some(mid);
        }
        if (gm > 0.0) == (ga > 0.0) {
            a = mid;
        } else {
            b = mid;
        }
    }
    Some(0.5 * a + 0.5 * b)
}
