use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::curve::Curve;
use super::domain::{dot2, inverse, mat_vec, norm2, rot90, rotation, transpose, DomainExpr, Mat2, Point};
use super::TubeError;

const DIR_TOL: f64 = 1e-12;

/// `sup {⟨u, p⟩ : p ∈ d}`, exact on primitives and an upper bound on
/// intersections.
pub fn support(d: &DomainExpr, u: Point) -> f64 {
    let un = norm2(u);
    if un == 0.0 {
        return 0.0;
    }
    let tiny = DIR_TOL * un;
    match d {
        DomainExpr::HalfPlane { a, b, c } => {
            let w = [*a, *b];
            let wn = norm2(w);
            if wn == 0.0 {
                return if *c > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
            }
            let cross = u[0] * w[1] - u[1] * w[0];
            if cross.abs() <= DIR_TOL * un * wn && dot2(u, w) < 0.0 {
                un / wn * c
            } else {
                f64::INFINITY
            }
        }
        DomainExpr::VerticalStrip { x0, x1 } => {
            if u[1].abs() > tiny {
                f64::INFINITY
            } else if u[0] > 0.0 {
                u[0] * x1
            } else {
                u[0] * x0
            }
        }
        DomainExpr::Disk { cx, cy, r } => u[0] * cx + u[1] * cy + r * un,
        DomainExpr::Below { curve } => curve_support(curve, u, 1.0, tiny),
        DomainExpr::Above { curve } => curve_support(curve, u, -1.0, tiny),
        DomainExpr::Union { parts } => parts.iter().map(|p| support(p, u)).fold(f64::NEG_INFINITY, f64::max),
        DomainExpr::Intersection { parts } => parts.iter().map(|p| support(p, u)).fold(f64::INFINITY, f64::min),
        DomainExpr::AffineImage { m, t, inner } => support(inner, mat_vec(&transpose(m), u)) + dot2(u, *t),
    }
}

/// Support of `{y < h(x)}` for `side = 1` and `{y > h(x)}` for `side = −1`.
fn curve_support(curve: &Curve, u: Point, side: f64, tiny: f64) -> f64 {
    // Reflect `y ↦ −y` so both cases read as a region below `side·h`.
    let (u1, u2) = (u[0], side * u[1]);
    if u2 < -tiny {
        return f64::INFINITY;
    }
    if u2 <= tiny {
        return match curve {
            Curve::Hyperbola { .. } if u1 <= tiny => 0.0,
            _ if u1.abs() <= tiny => 0.0,
            _ => f64::INFINITY,
        };
    }
    // u2 > 0: sup over x of u1 x + u2·side·h(x).
    let flat = u1.abs() <= tiny;
    match *curve {
        Curve::Constant { t } if flat => u2 * side * t,
        Curve::Linear { m, c } if (u1 + u2 * side * m).abs() <= tiny => u2 * side * c,
        Curve::ExpCusp { s, t } if flat => {
            let peak = if side > 0.0 { t + s.max(0.0) } else { t + s.min(0.0) };
            u2 * side * peak
        }
        Curve::Parabola { a, b } => {
            let lead = side * a;
            if lead < 0.0 {
                u2 * side * b - u1 * u1 / (4.0 * u2 * lead)
            } else if lead == 0.0 && flat {
                u2 * side * b
            } else {
                f64::INFINITY
            }
        }
        Curve::Hyperbola { c } if side < 0.0 => {
            if u1 > tiny {
                f64::INFINITY
            } else if flat {
                0.0
            } else {
                -2.0 * (u1 * u2 * c).abs().sqrt()
            }
        }
        _ => f64::INFINITY,
    }
}

/// Directions in which some primitive can have finite support, pushed through
/// the affine maps of the tree.
fn special_directions(d: &DomainExpr, out: &mut Vec<Point>) {
    match d {
        DomainExpr::HalfPlane { a, b, .. } => out.push([-a, -b]),
        DomainExpr::VerticalStrip { .. } => out.extend([[1.0, 0.0], [-1.0, 0.0]]),
        DomainExpr::Below { curve } | DomainExpr::Above { curve } => {
            let side = if matches!(d, DomainExpr::Below { .. }) { 1.0 } else { -1.0 };
            out.extend([[0.0, side], [1.0, 0.0], [-1.0, 0.0]]);
            match *curve {
                Curve::Linear { m, .. } => out.push([-side * m, side]),
                Curve::Hyperbola { .. } => out.push([-1.0, side]),
                _ => {}
            }
        }
        DomainExpr::Disk { .. } => {}
        DomainExpr::Union { parts } | DomainExpr::Intersection { parts } => {
            for p in parts {
                special_directions(p, out);
            }
        }
        DomainExpr::AffineImage { m, inner, .. } => {
            let mut inner_dirs = Vec::new();
            special_directions(inner, &mut inner_dirs);
            let mit = transpose(&inverse(m));
            out.extend(inner_dirs.into_iter().map(|u| mat_vec(&mit, u)));
        }
    }
}

fn unit(u: Point) -> Point {
    let n = norm2(u);
    [u[0] / n, u[1] / n]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HullOptions {
    /// Number of evenly spaced trial directions.
    pub directions: usize,
    /// Directions used when collecting far points.
    pub far_directions: usize,
    /// Radius the sampled hull must contain around a point of the domain.
    pub full_radius: f64,
    /// Largest distance at which far points are sought.
    pub far_cap: f64,
}

impl Default for HullOptions {
    fn default() -> Self {
        Self {
            directions: 360,
            far_directions: 72,
            full_radius: 5.0,
            far_cap: 1e4,
        }
    }
}

/// Rigid motion `p ↦ R p + t` bringing a bounded-support side to `{y > 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub rotation: Mat2,
    pub translation: Point,
}

impl Normalization {
    /// `R u = (0, −1)` and a shift of `offset` upward.
    pub fn for_direction(u: Point, offset: f64) -> Self {
        let u = unit(u);
        let angle = u[1].atan2(u[0]);
        let theta = -std::f64::consts::FRAC_PI_2 - angle;
        Self {
            rotation: rotation(theta),
            translation: [0.0, offset],
        }
    }

    pub fn apply(&self, d: &DomainExpr) -> Result<DomainExpr, TubeError> {
        if self.rotation == [[1.0, 0.0], [0.0, 1.0]] && self.translation == [0.0, 0.0] {
            return Ok(d.clone());
        }
        DomainExpr::affine_image(self.rotation, self.translation, d.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum HullClass {
    /// `⟨u, p⟩ < offset` on the whole domain.
    InHalfPlane {
        normal: Point,
        offset: f64,
        /// Other axis directions with finite support.
        bounded_axes: Vec<(Point, f64)>,
        normalization: Normalization,
    },
    /// The sampled points span a disk of the configured radius.
    FullPlane { witnesses: Vec<Point>, center: Point, radius: f64 },
    Undecided { reason: String },
}

/// Decides whether the convex hull of `d` is a half-plane-bounded set or the
/// whole plane.
pub fn hull_classify(d: &DomainExpr, opts: &HullOptions) -> HullClass {
    let mut dirs: Vec<Point> = vec![[0.0, -1.0], [0.0, 1.0], [1.0, 0.0], [-1.0, 0.0]];
    let mut special = Vec::new();
    special_directions(d, &mut special);
    dirs.extend(special.into_iter().filter(|u| norm2(*u) > 0.0).map(unit));
    let n = opts.directions.max(4);
    dirs.extend((0..n).map(|i| {
        let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
        [a.cos(), a.sin()]
    }));

    let finite = dirs.iter().map(|u| (*u, support(d, *u))).find(|(_, h)| h.is_finite());
    if let Some((u, h)) = finite {
        let bounded_axes = [[0.0, -1.0], [0.0, 1.0], [1.0, 0.0], [-1.0, 0.0]]
            .into_iter()
            .filter(|a| *a != u)
            .map(|a| (a, support(d, a)))
            .filter(|(_, s)| s.is_finite())
            .collect();
        return HullClass::InHalfPlane {
            normal: u,
            offset: h,
            bounded_axes,
            normalization: Normalization::for_direction(u, h),
        };
    }

    let base = base_points(d);
    if base.is_empty() {
        return HullClass::Undecided {
            reason: "no point of the domain was found".into(),
        };
    }
    let far = far_points(d, &base, opts);
    let mut pts = base.clone();
    pts.extend(far.iter().copied());
    let hull = convex_hull(&pts);
    let best = base
        .iter()
        .map(|c| (*c, inradius_at(&hull, *c)))
        .fold(None::<(Point, f64)>, |acc, x| match acc {
            Some(a) if a.1 >= x.1 => Some(a),
            _ => Some(x),
        })
        .unwrap();
    if best.1 >= opts.full_radius {
        HullClass::FullPlane {
            witnesses: hull,
            center: best.0,
            radius: best.1,
        }
    } else {
        HullClass::Undecided {
            reason: format!(
                "no finite support found, sampled hull only holds radius {:.3} around a domain point",
                best.1
            ),
        }
    }
}

/// Points of `d` read off horizontal and vertical slices at a ladder of levels.
pub(crate) fn base_points(d: &DomainExpr) -> Vec<Point> {
    let mut levels = vec![0.0];
    for k in -6..=6 {
        let v = 2f64.powi(k);
        levels.extend([v, -v]);
    }
    let mut out = Vec::new();
    for &b in &levels {
        for iv in d.horizontal_slice(b).set.intervals() {
            let p = [iv.sample(100.0), b];
            if d.contains_point(p) {
                out.push(p);
            }
        }
        for iv in d.vertical_slice(b).set.intervals() {
            let p = [b, iv.sample(100.0)];
            if d.contains_point(p) {
                out.push(p);
            }
        }
    }
    out.sort_by(|a, b| (a[0], a[1]).partial_cmp(&(b[0], b[1])).unwrap());
    out.dedup();
    out
}

/// For each trial direction, the verified point of `d` farthest along it.
pub(crate) fn far_points(d: &DomainExpr, base: &[Point], opts: &HullOptions) -> Vec<Point> {
    let n = opts.far_directions.max(3);
    let mut offsets = vec![0.0];
    for k in -10..=3 {
        let v = 2f64.powi(k);
        offsets.extend([v, -v]);
    }
    let ladder: Vec<f64> = (0..=60)
        .map(|k| 2f64.powf(k as f64 / 4.0))
        .take_while(|s| *s <= opts.far_cap)
        .collect();
    (0..n)
        .into_par_iter()
        .filter_map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let u = [a.cos(), a.sin()];
            let nrm = rot90(u);
            let mut best: Option<(f64, Point)> = None;
            let mut consider = |p: Point| {
                let score = dot2(u, p);
                if best.is_none_or(|(s, _)| score > s) && d.contains_point(p) {
                    best = Some((score, p));
                }
            };
            let origins = offsets
                .iter()
                .map(|c| [c * nrm[0], c * nrm[1]])
                .chain(base.iter().copied());
            for o in origins {
                let slice = d.line_slice(o, u).set;
                for iv in slice.intervals() {
                    if iv.hi <= 0.0 {
                        continue;
                    }
                    for &s in &ladder {
                        if iv.contains(s) {
                            consider([o[0] + s * u[0], o[1] + s * u[1]]);
                        }
                    }
                }
            }
            best.map(|(_, p)| p)
        })
        .collect()
}

/// Convex hull in counterclockwise order.
pub(crate) fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| (a[0], a[1]).partial_cmp(&(b[0], b[1])).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: Point, a: Point, b: Point| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut lower: Vec<Point> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], *p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], *p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Distance from `c` to the boundary of a counterclockwise hull, negative
/// when `c` lies outside.
pub(crate) fn inradius_at(hull: &[Point], c: Point) -> f64 {
    if hull.len() < 3 {
        return f64::NEG_INFINITY;
    }
    (0..hull.len())
        .map(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
            let e = [b[0] - a[0], b[1] - a[1]];
            let len = norm2(e);
            ((c[0] - a[0]) * e[1] - (c[1] - a[1]) * e[0]) / -len
        })
        .fold(f64::INFINITY, f64::min)
}
