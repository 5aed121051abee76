use serde::{Deserialize, Serialize};

use super::curve::Curve;
use super::domain::{dot2, inverse, mat_vec, norm2, rot90, DomainExpr, Point};

const DIR_TOL: f64 = 1e-12;

/// The line `{point + s·dir : s ∈ ℝ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub point: Point,
    pub dir: Point,
}

impl Line {
    pub fn at(&self, s: f64) -> Point {
        [self.point[0] + s * self.dir[0], self.point[1] + s * self.dir[1]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "answer", rename_all = "snake_case")]
pub enum LineAnswer {
    Yes { witness: Line },
    No,
    Undecided { reason: String },
}

/// Interval of offsets with open or closed ends.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Span {
    lo: f64,
    lo_closed: bool,
    hi: f64,
    hi_closed: bool,
}

impl Span {
    fn all() -> Self {
        Span {
            lo: f64::NEG_INFINITY,
            lo_closed: false,
            hi: f64::INFINITY,
            hi_closed: false,
        }
    }

    fn above(v: f64, closed: bool) -> Self {
        Span {
            lo: v,
            lo_closed: closed,
            ..Span::all()
        }
    }

    fn below(v: f64, closed: bool) -> Self {
        Span {
            hi: v,
            hi_closed: closed,
            ..Span::all()
        }
    }

    fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    fn intersect(&self, o: &Span) -> Span {
        let (lo, lo_closed) = if self.lo > o.lo {
            (self.lo, self.lo_closed)
        } else if o.lo > self.lo {
            (o.lo, o.lo_closed)
        } else {
            (self.lo, self.lo_closed && o.lo_closed)
        };
        let (hi, hi_closed) = if self.hi < o.hi {
            (self.hi, self.hi_closed)
        } else if o.hi < self.hi {
            (o.hi, o.hi_closed)
        } else {
            (self.hi, self.hi_closed && o.hi_closed)
        };
        Span {
            lo,
            lo_closed,
            hi,
            hi_closed,
        }
    }

    /// Image under `c ↦ alpha c + beta`.
    fn map(&self, alpha: f64, beta: f64) -> Span {
        let f = |x: f64| if x.is_infinite() { x * alpha.signum() } else { alpha * x + beta };
        let (a, b) = (f(self.lo), f(self.hi));
        if alpha > 0.0 {
            Span {
                lo: a,
                lo_closed: self.lo_closed,
                hi: b,
                hi_closed: self.hi_closed,
            }
        } else {
            Span {
                lo: b,
                lo_closed: self.hi_closed,
                hi: a,
                hi_closed: self.lo_closed,
            }
        }
    }

    fn pick(&self) -> f64 {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => 0.5 * self.lo + 0.5 * self.hi,
            (true, false) => self.lo + 1.0,
            (false, true) => self.hi - 1.0,
            (false, false) => 0.0,
        }
    }
}

/// Offsets `c` for which `{c·n + s·e}` lies in `d`, where `n = rot90(e)`.
/// Exact for union-free trees; a subset of the true set otherwise.
fn offsets(d: &DomainExpr, e: Point) -> Vec<Span> {
    let n = rot90(e);
    match d {
        DomainExpr::HalfPlane { a, b, c } => {
            let w = [*a, *b];
            let wn = norm2(w);
            if wn == 0.0 {
                return if *c > 0.0 { vec![Span::all()] } else { vec![] };
            }
            if dot2(w, e).abs() > DIR_TOL * wn {
                return vec![];
            }
            // c·⟨w, n⟩ + c0 > 0.
            let wn_dot = dot2(w, n);
            if wn_dot > 0.0 {
                vec![Span::above(-c / wn_dot, false)]
            } else {
                vec![Span::below(-c / wn_dot, false)]
            }
        }
        DomainExpr::VerticalStrip { x0, x1 } => {
            if e[0].abs() > DIR_TOL {
                return vec![];
            }
            // x = c·n.x with n.x = −e.y = ∓1.
            let span = Span {
                lo: *x0,
                lo_closed: false,
                hi: *x1,
                hi_closed: false,
            };
            vec![span.map(1.0 / n[0], 0.0)]
        }
        DomainExpr::Disk { .. } => vec![],
        DomainExpr::Below { curve } => curve_offsets(curve, e, 1.0),
        DomainExpr::Above { curve } => curve_offsets(curve, e, -1.0),
        DomainExpr::Intersection { parts } => {
            let mut acc = vec![Span::all()];
            for p in parts {
                let next = offsets(p, e);
                acc = acc
                    .iter()
                    .flat_map(|a| next.iter().map(move |b| a.intersect(b)))
                    .filter(|s| !s.is_empty())
                    .collect();
                if acc.is_empty() {
                    break;
                }
            }
            acc
        }
        DomainExpr::Union { parts } => parts.iter().flat_map(|p| offsets(p, e)).collect(),
        DomainExpr::AffineImage { m, t, inner } => {
            let mi = inverse(m);
            let f = mat_vec(&mi, e);
            let fl = norm2(f);
            let ep = [f[0] / fl, f[1] / fl];
            let np = rot90(ep);
            let alpha = dot2(np, mat_vec(&mi, n));
            let beta = -dot2(np, mat_vec(&mi, *t));
            // c' = alpha c + beta, so c = (c' − beta)/alpha.
            offsets(inner, ep)
                .into_iter()
                .map(|s| s.map(1.0 / alpha, -beta / alpha))
                .collect()
        }
    }
}

/// Offsets for `{y < h(x)}` (`side = 1`) or `{y > h(x)}` (`side = −1`).
fn curve_offsets(curve: &Curve, e: Point, side: f64) -> Vec<Span> {
    if e[0].abs() <= DIR_TOL {
        return vec![];
    }
    let m = e[1] / e[0];
    let flat = m.abs() <= DIR_TOL;
    // Conditions on the intercept k, as (bound, closed): k < bound or k > bound.
    let bound: Option<(f64, bool)> = match *curve {
        Curve::Constant { t } if flat => Some((t, false)),
        Curve::Linear { m: m0, c } if (m - m0).abs() <= DIR_TOL * m0.abs().max(1.0) => Some((c, false)),
        Curve::ExpCusp { s, t } if flat => {
            // Below needs k ≤ inf h, above needs k ≥ sup h; attained extremes are strict.
            let toward = side * s;
            if toward > 0.0 {
                Some((t, true))
            } else if toward < 0.0 {
                Some((t + s, false))
            } else {
                Some((t, false))
            }
        }
        Curve::Parabola { a, b } => {
            let lead = side * a;
            if lead > 0.0 {
                Some((b - m * m / (4.0 * a), false))
            } else if lead == 0.0 && flat {
                Some((b, false))
            } else {
                None
            }
        }
        _ => None,
    };
    let Some((k0, closed)) = bound else {
        return vec![];
    };
    let k_span = if side > 0.0 {
        Span::below(k0, closed)
    } else {
        Span::above(k0, closed)
    };
    // The intercept of {c n + s e} is k = c / e.x.
    vec![k_span.map(e[0], 0.0)]
}

/// Direction sets that can carry a line inside `d`.
#[derive(Debug, Clone, PartialEq)]
enum DirSet {
    Finite(Vec<Point>),
    AllExcept(Vec<Point>),
}

fn parallel(a: Point, b: Point) -> bool {
    (a[0] * b[1] - a[1] * b[0]).abs() <= 1e-9 * norm2(a) * norm2(b)
}

fn unit(u: Point) -> Point {
    let n = norm2(u);
    [u[0] / n, u[1] / n]
}

fn dir_set(d: &DomainExpr) -> DirSet {
    match d {
        DomainExpr::HalfPlane { a, b, c } => {
            if *a == 0.0 && *b == 0.0 {
                if *c > 0.0 {
                    DirSet::AllExcept(vec![])
                } else {
                    DirSet::Finite(vec![])
                }
            } else {
                DirSet::Finite(vec![unit(rot90([*a, *b]))])
            }
        }
        DomainExpr::VerticalStrip { .. } => DirSet::Finite(vec![[0.0, 1.0]]),
        DomainExpr::Disk { .. } => DirSet::Finite(vec![]),
        DomainExpr::Below { curve } | DomainExpr::Above { curve } => {
            let side = if matches!(d, DomainExpr::Below { .. }) { 1.0 } else { -1.0 };
            match *curve {
                Curve::Linear { m, .. } => DirSet::Finite(vec![unit([1.0, m])]),
                Curve::Parabola { a, .. } if side * a > 0.0 => DirSet::AllExcept(vec![[0.0, 1.0]]),
                Curve::Parabola { a, .. } if a == 0.0 => DirSet::Finite(vec![[1.0, 0.0]]),
                Curve::Parabola { .. } | Curve::Hyperbola { .. } => DirSet::Finite(vec![]),
                Curve::Constant { .. } | Curve::ExpCusp { .. } => DirSet::Finite(vec![[1.0, 0.0]]),
            }
        }
        DomainExpr::Intersection { parts } => {
            let mut acc = DirSet::AllExcept(vec![]);
            for p in parts {
                acc = match (acc, dir_set(p)) {
                    (DirSet::Finite(a), DirSet::Finite(b)) => {
                        DirSet::Finite(a.into_iter().filter(|u| b.iter().any(|v| parallel(*u, *v))).collect())
                    }
                    (DirSet::Finite(a), DirSet::AllExcept(x)) | (DirSet::AllExcept(x), DirSet::Finite(a)) => {
                        DirSet::Finite(a.into_iter().filter(|u| !x.iter().any(|v| parallel(*u, *v))).collect())
                    }
                    (DirSet::AllExcept(mut x), DirSet::AllExcept(y)) => {
                        x.extend(y);
                        DirSet::AllExcept(x)
                    }
                };
            }
            acc
        }
        DomainExpr::Union { parts } => {
            let mut finite = Vec::new();
            let mut except: Option<Vec<Point>> = None;
            for p in parts {
                match dir_set(p) {
                    DirSet::Finite(v) => finite.extend(v),
                    DirSet::AllExcept(x) => {
                        except = Some(match except {
                            None => x,
                            Some(prev) => prev.into_iter().filter(|u| x.iter().any(|v| parallel(*u, *v))).collect(),
                        })
                    }
                }
            }
            match except {
                Some(x) => DirSet::AllExcept(x.into_iter().filter(|u| !finite.iter().any(|v| parallel(*u, *v))).collect()),
                None => DirSet::Finite(finite),
            }
        }
        DomainExpr::AffineImage { m, inner, .. } => match dir_set(inner) {
            DirSet::Finite(v) => DirSet::Finite(v.into_iter().map(|u| unit(mat_vec(m, u))).collect()),
            DirSet::AllExcept(x) => DirSet::AllExcept(x.into_iter().map(|u| unit(mat_vec(m, u))).collect()),
        },
    }
}

fn witness_for(d: &DomainExpr, e: Point) -> Option<Line> {
    let spans = offsets(d, e);
    let span = spans.iter().find(|s| !s.is_empty())?;
    let c = span.pick();
    let n = rot90(e);
    Some(Line {
        point: [c * n[0], c * n[1]],
        dir: e,
    })
}

fn grid_directions(count: usize) -> Vec<Point> {
    (0..count)
        .map(|i| {
            let a = std::f64::consts::PI * i as f64 / count as f64;
            [a.cos(), a.sin()]
        })
        .collect()
}

/// Whether `d` contains a full affine line.
pub fn contains_affine_line(d: &DomainExpr) -> LineAnswer {
    let exact = d.is_union_free();
    let dirs = dir_set(d);
    let candidates: Vec<Point> = match &dirs {
        DirSet::Finite(v) => v.clone(),
        DirSet::AllExcept(x) => {
            let mut v = vec![[1.0, 0.0]];
            v.extend(grid_directions(180));
            v.into_iter().filter(|u| !x.iter().any(|w| parallel(*u, *w))).collect()
        }
    };
    for e in &candidates {
        if let Some(line) = witness_for(d, *e) {
            if [0.0, 1.0, -1.0, 100.0, -100.0].iter().all(|s| d.contains_point(line.at(*s))) {
                return LineAnswer::Yes { witness: line };
            }
        }
    }
    if !exact {
        // A union may hold a line no single branch holds; try slices directly.
        let mut dirs = candidates.clone();
        dirs.extend(grid_directions(36));
        for e in dirs {
            let n = rot90(e);
            for i in -40..=40 {
                let c = i as f64 * 0.25;
                let line = Line {
                    point: [c * n[0], c * n[1]],
                    dir: e,
                };
                if d.line_slice(line.point, line.dir).set.is_full() {
                    return LineAnswer::Yes { witness: line };
                }
            }
        }
        return LineAnswer::Undecided {
            reason: "union tree with no line found on sampled candidates".into(),
        };
    }
    match dirs {
        DirSet::Finite(_) => LineAnswer::No,
        DirSet::AllExcept(_) => LineAnswer::Undecided {
            reason: "infinitely many admissible directions, none carried a line on the sampled grid".into(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tube::catalog;
    use crate::tube::domain::rotation;

    #[test]
    fn strip_contains_horizontal_line() {
        match contains_affine_line(&catalog::strip()) {
            LineAnswer::Yes { witness } => {
                assert!(witness.dir[1].abs() < 1e-15);
                assert!(witness.point[1] > 0.0 && witness.point[1] < 1.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parabola_and_cusp_contain_no_line() {
        assert_eq!(contains_affine_line(&catalog::parabola()), LineAnswer::No);
        assert_eq!(contains_affine_line(&catalog::exp_cusp()), LineAnswer::No);
    }

    #[test]
    fn region_below_parabola_holds_lines() {
        let d = DomainExpr::parse("(below (parabola 1 0))").unwrap();
        assert!(matches!(contains_affine_line(&d), LineAnswer::Yes { .. }));
        let lens = DomainExpr::parse("(inter (below (parabola 1 0)) (above (parabola -1 -2)))").unwrap();
        assert!(matches!(contains_affine_line(&lens), LineAnswer::Yes { .. }));
    }

    #[test]
    fn closed_offsets_respect_attained_extremes() {
        // k = 1 touches the cusp peak from above: strict, so no line at y = 1.
        let d = DomainExpr::parse("(inter (above (expcusp 1 0)) (below (const 1.5)))").unwrap();
        assert!(matches!(contains_affine_line(&d), LineAnswer::Yes { .. }));
        let d = DomainExpr::parse("(inter (above (expcusp 1 0)) (below (const 1)))").unwrap();
        assert_eq!(contains_affine_line(&d), LineAnswer::No);
        // y > −e^{-|x|}: the line y = 0 stays inside.
        let d = DomainExpr::parse("(inter (above (expcusp -1 0)) (below (const 0.001)))").unwrap();
        assert!(matches!(contains_affine_line(&d), LineAnswer::Yes { .. }));
    }

    #[test]
    fn rotated_strip_keeps_its_line() {
        let d = DomainExpr::affine_image(rotation(0.7), [3.0, -1.0], catalog::strip()).unwrap();
        match contains_affine_line(&d) {
            LineAnswer::Yes { witness } => {
                for s in [-1e3, -1.0, 0.0, 2.0, 1e3] {
                    assert!(d.contains_point(witness.at(s)));
                }
            }
            other => panic!("{other:?}"),
        }
    }
}
