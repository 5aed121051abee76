use std::fmt;

use serde::{Deserialize, Serialize};

use super::curve::Curve;
use super::slice::{Slice, SliceSet};
use super::TubeError;
use crate::sexpr::{self, expect_arity, fmt_num, ParseError, SExpr};

pub type Point = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

/// Open planar set built from primitives and set operations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum DomainExpr {
    /// `a x + b y + c > 0`.
    HalfPlane { a: f64, b: f64, c: f64 },
    /// `y < h(x)` on the domain of `h`.
    Below { curve: Curve },
    /// `y > h(x)` on the domain of `h`.
    Above { curve: Curve },
    /// `x0 < x < x1`.
    VerticalStrip { x0: f64, x1: f64 },
    /// `|p − (cx, cy)| < r`.
    Disk { cx: f64, cy: f64, r: f64 },
    Union { parts: Vec<DomainExpr> },
    Intersection { parts: Vec<DomainExpr> },
    /// Image `{M q + t : q ∈ inner}` under an invertible affine map.
    AffineImage { m: Mat2, t: Point, inner: Box<DomainExpr> },
}

pub(crate) fn mat_vec(m: &Mat2, v: Point) -> Point {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

pub(crate) fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub(crate) fn inverse(m: &Mat2) -> Mat2 {
    let d = det(m);
    [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
}

pub(crate) fn transpose(m: &Mat2) -> Mat2 {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}


pub(crate) fn dot2(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn norm2(a: Point) -> f64 {
    a[0].hypot(a[1])
}

pub(crate) fn rot90(a: Point) -> Point {
    [-a[1], a[0]]
}

/// Exact rotation for multiples of a quarter turn, `cos/sin` otherwise.
pub fn rotation(theta: f64) -> Mat2 {
    let quarter = theta / std::f64::consts::FRAC_PI_2;
    let (c, s) = if (quarter - quarter.round()).abs() < 1e-12 {
        match (quarter.round() as i64).rem_euclid(4) {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        }
    } else {
        (theta.cos(), theta.sin())
    };
    [[c, -s], [s, c]]
}

impl DomainExpr {
    pub fn half_plane(a: f64, b: f64, c: f64) -> Result<Self, TubeError> {
        check_finite(&[a, b, c])?;
        Ok(DomainExpr::HalfPlane { a, b, c })
    }

    pub fn below(curve: Curve) -> Result<Self, TubeError> {
        check_curve(&curve)?;
        Ok(DomainExpr::Below { curve })
    }

    pub fn above(curve: Curve) -> Result<Self, TubeError> {
        check_curve(&curve)?;
        Ok(DomainExpr::Above { curve })
    }

    pub fn vertical_strip(x0: f64, x1: f64) -> Result<Self, TubeError> {
        check_finite(&[x0, x1])?;
        if !(x0 < x1) {
            return Err(TubeError::Invalid(format!("strip needs x0 < x1, got {x0} and {x1}")));
        }
        Ok(DomainExpr::VerticalStrip { x0, x1 })
    }

    pub fn disk(cx: f64, cy: f64, r: f64) -> Result<Self, TubeError> {
        check_finite(&[cx, cy, r])?;
        if !(r > 0.0) {
            return Err(TubeError::Invalid(format!("disk radius must be positive, got {r}")));
        }
        Ok(DomainExpr::Disk { cx, cy, r })
    }

    pub fn union(parts: Vec<DomainExpr>) -> Result<Self, TubeError> {
        if parts.is_empty() {
            return Err(TubeError::Invalid("union of no parts".into()));
        }
        Ok(DomainExpr::Union { parts })
    }

    pub fn intersection(parts: Vec<DomainExpr>) -> Result<Self, TubeError> {
        if parts.is_empty() {
            return Err(TubeError::Invalid("intersection of no parts".into()));
        }
        Ok(DomainExpr::Intersection { parts })
    }

    pub fn affine_image(m: Mat2, t: Point, inner: DomainExpr) -> Result<Self, TubeError> {
        check_finite(&[m[0][0], m[0][1], m[1][0], m[1][1], t[0], t[1]])?;
        let d = det(&m);
        let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        if !(d.abs() > 1e-12 * scale * scale) {
            return Err(TubeError::Invalid("affine map is not invertible".into()));
        }
        Ok(DomainExpr::AffineImage {
            m,
            t,
            inner: Box::new(inner),
        })
    }

    pub fn contains_point(&self, p: Point) -> bool {
        match self {
            DomainExpr::HalfPlane { a, b, c } => a * p[0] + b * p[1] + c > 0.0,
            DomainExpr::Below { curve } => curve.eval(p[0]).is_some_and(|h| p[1] < h),
            DomainExpr::Above { curve } => curve.eval(p[0]).is_some_and(|h| p[1] > h),
            DomainExpr::VerticalStrip { x0, x1 } => *x0 < p[0] && p[0] < *x1,
            DomainExpr::Disk { cx, cy, r } => {
                let (dx, dy) = (p[0] - cx, p[1] - cy);
                dx * dx + dy * dy < r * r
            }
            DomainExpr::Union { parts } => parts.iter().any(|d| d.contains_point(p)),
            DomainExpr::Intersection { parts } => parts.iter().all(|d| d.contains_point(p)),
            DomainExpr::AffineImage { m, t, inner } => {
                inner.contains_point(mat_vec(&inverse(m), [p[0] - t[0], p[1] - t[1]]))
            }
        }
    }

    /// `{s : o + s v ∈ d}` for a nonzero direction `v`.
    pub fn line_slice(&self, o: Point, v: Point) -> Slice {
        match self {
            DomainExpr::HalfPlane { a, b, c } => {
                let alpha = a * v[0] + b * v[1];
                let beta = a * o[0] + b * o[1] + c;
                exact(linear_positive(alpha, beta))
            }
            DomainExpr::VerticalStrip { x0, x1 } => {
                let lower = linear_positive(v[0], o[0] - x0);
                let upper = linear_positive(-v[0], x1 - o[0]);
                exact(lower.intersect(&upper))
            }
            DomainExpr::Disk { cx, cy, r } => {
                let w = [o[0] - cx, o[1] - cy];
                let qa = dot2(v, v);
                let qb = dot2(w, v);
                let qc = dot2(w, w) - r * r;
                let disc = qb * qb - qa * qc;
                if !(disc > 0.0) {
                    return exact(SliceSet::empty());
                }
                let sq = disc.sqrt();
                let q = -(qb + if qb < 0.0 { -sq } else { sq });
                let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / qa, qc / q) };
                exact(SliceSet::from_interval(r1.min(r2), r1.max(r2)))
            }
            DomainExpr::Below { curve } => curve_slice(curve, o, v, 1.0),
            DomainExpr::Above { curve } => curve_slice(curve, o, v, -1.0),
            DomainExpr::Union { parts } => combine(parts, o, v, SliceSet::empty(), |a, b| a.union(b)),
            DomainExpr::Intersection { parts } => combine(parts, o, v, SliceSet::full(), |a, b| a.intersect(b)),
            DomainExpr::AffineImage { m, t, inner } => {
                let mi = inverse(m);
                inner.line_slice(mat_vec(&mi, [o[0] - t[0], o[1] - t[1]]), mat_vec(&mi, v))
            }
        }
    }

    /// `{x : (x, b) ∈ d}`.
    pub fn horizontal_slice(&self, b: f64) -> Slice {
        self.line_slice([0.0, b], [1.0, 0.0])
    }

    /// `{y : (x, y) ∈ d}`.
    pub fn vertical_slice(&self, x: f64) -> Slice {
        self.line_slice([x, 0.0], [0.0, 1.0])
    }

    /// Whether `[−k, k] × {b}` lies in `d`.
    pub fn seg_fits(&self, k: f64, b: f64) -> bool {
        self.horizontal_slice(b).set.covers_closed(-k, k)
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        Self::from_sexpr(&sexpr::parse(text)?)
    }

    pub fn from_sexpr(form: &SExpr) -> Result<Self, ParseError> {
        let (head, args) = form.head()?;
        let invalid = |e: TubeError| ParseError::at(form.pos(), e.to_string());
        let nums = |n: usize| -> Result<Vec<f64>, ParseError> {
            expect_arity(form, args, n)?;
            args.iter().map(SExpr::finite).collect()
        };
        match head {
            "halfplane" => {
                let v = nums(3)?;
                DomainExpr::half_plane(v[0], v[1], v[2]).map_err(invalid)
            }
            "below" | "above" => {
                expect_arity(form, args, 1)?;
                let curve = curve_from_sexpr(&args[0])?;
                if head == "below" {
                    DomainExpr::below(curve).map_err(invalid)
                } else {
                    DomainExpr::above(curve).map_err(invalid)
                }
            }
            "vstrip" => {
                let v = nums(2)?;
                DomainExpr::vertical_strip(v[0], v[1]).map_err(invalid)
            }
            "disk" => {
                let v = nums(3)?;
                DomainExpr::disk(v[0], v[1], v[2]).map_err(invalid)
            }
            "union" | "inter" => {
                let parts = args.iter().map(DomainExpr::from_sexpr).collect::<Result<Vec<_>, _>>()?;
                if head == "union" {
                    DomainExpr::union(parts).map_err(invalid)
                } else {
                    DomainExpr::intersection(parts).map_err(invalid)
                }
            }
            "affine" => {
                expect_arity(form, args, 3)?;
                let m = number_list(&args[0], 4)?;
                let t = number_list(&args[1], 2)?;
                let inner = DomainExpr::from_sexpr(&args[2])?;
                DomainExpr::affine_image([[m[0], m[1]], [m[2], m[3]]], [t[0], t[1]], inner).map_err(invalid)
            }
            other => Err(ParseError::at(form.pos(), format!("unknown domain form '{other}'"))),
        }
    }

    pub fn to_sexpr(&self) -> String {
        let n = |v: &[f64]| v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(" ");
        match self {
            DomainExpr::HalfPlane { a, b, c } => format!("(halfplane {})", n(&[*a, *b, *c])),
            DomainExpr::Below { curve } => format!("(below {})", curve_to_sexpr(curve)),
            DomainExpr::Above { curve } => format!("(above {})", curve_to_sexpr(curve)),
            DomainExpr::VerticalStrip { x0, x1 } => format!("(vstrip {})", n(&[*x0, *x1])),
            DomainExpr::Disk { cx, cy, r } => format!("(disk {})", n(&[*cx, *cy, *r])),
            DomainExpr::Union { parts } | DomainExpr::Intersection { parts } => {
                let head = if matches!(self, DomainExpr::Union { .. }) { "union" } else { "inter" };
                let inner: Vec<String> = parts.iter().map(DomainExpr::to_sexpr).collect();
                format!("({head} {})", inner.join(" "))
            }
            DomainExpr::AffineImage { m, t, inner } => format!(
                "(affine ({}) ({}) {})",
                n(&[m[0][0], m[0][1], m[1][0], m[1][1]]),
                n(t),
                inner.to_sexpr()
            ),
        }
    }

    /// Whether the tree uses no union node.
    pub fn is_union_free(&self) -> bool {
        match self {
            DomainExpr::Union { .. } => false,
            DomainExpr::Intersection { parts } => parts.iter().all(DomainExpr::is_union_free),
            DomainExpr::AffineImage { inner, .. } => inner.is_union_free(),
            _ => true,
        }
    }
}

impl fmt::Display for DomainExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sexpr())
    }
}

fn check_finite(v: &[f64]) -> Result<(), TubeError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(TubeError::Invalid("non-finite domain parameter".into()))
    }
}

fn check_curve(curve: &Curve) -> Result<(), TubeError> {
    match *curve {
        Curve::Constant { t } => check_finite(&[t]),
        Curve::Linear { m, c } => check_finite(&[m, c]),
        Curve::ExpCusp { s, t } => check_finite(&[s, t]),
        Curve::Parabola { a, b } => check_finite(&[a, b]),
        Curve::Hyperbola { c } => {
            check_finite(&[c])?;
            if c > 0.0 {
                Ok(())
            } else {
                Err(TubeError::Invalid(format!("hyperbola constant must be positive, got {c}")))
            }
        }
    }
}

fn exact(set: SliceSet) -> Slice {
    Slice {
        set,
        approximate: false,
    }
}

/// `{s : alpha s + beta > 0}`.
fn linear_positive(alpha: f64, beta: f64) -> SliceSet {
    if alpha == 0.0 {
        if beta > 0.0 {
            SliceSet::full()
        } else {
            SliceSet::empty()
        }
    } else if alpha > 0.0 {
        SliceSet::from_interval(-beta / alpha, f64::INFINITY)
    } else {
        SliceSet::from_interval(f64::NEG_INFINITY, -beta / alpha)
    }
}

fn curve_slice(curve: &Curve, o: Point, v: Point, sign: f64) -> Slice {
    if v[0] == 0.0 {
        // Vertical line at x = o.x: a single height bound.
        return match curve.eval(o[0]) {
            Some(h) => exact(linear_positive(-sign * v[1], sign * (h - o[1]))),
            None => exact(SliceSet::empty()),
        };
    }
    let m = v[1] / v[0];
    let k = o[1] - m * o[0];
    let (xs, approximate) = curve.compare_line(m, k, sign);
    Slice {
        set: xs.affine_map(1.0 / v[0], -o[0] / v[0]),
        approximate,
    }
}

fn combine(
    parts: &[DomainExpr],
    o: Point,
    v: Point,
    init: SliceSet,
    op: impl Fn(&SliceSet, &SliceSet) -> SliceSet,
) -> Slice {
    let mut set = init;
    let mut approximate = false;
    for p in parts {
        let s = p.line_slice(o, v);
        set = op(&set, &s.set);
        approximate |= s.approximate;
    }
    Slice { set, approximate }
}

fn number_list(form: &SExpr, n: usize) -> Result<Vec<f64>, ParseError> {
    let items = form
        .as_list()
        .ok_or_else(|| ParseError::at(form.pos(), format!("expected a list of {n} numbers")))?;
    if items.len() != n {
        return Err(ParseError::at(form.pos(), format!("expected {n} numbers, found {}", items.len())));
    }
    items.iter().map(SExpr::finite).collect()
}

fn curve_from_sexpr(form: &SExpr) -> Result<Curve, ParseError> {
    let (head, args) = form.head()?;
    let nums = |n: usize| -> Result<Vec<f64>, ParseError> {
        expect_arity(form, args, n)?;
        args.iter().map(SExpr::finite).collect()
    };
    let curve = match head {
        "const" => Curve::Constant { t: nums(1)?[0] },
        "linear" => {
            let v = nums(2)?;
            Curve::Linear { m: v[0], c: v[1] }
        }
        "expcusp" => {
            let v = nums(2)?;
            Curve::ExpCusp { s: v[0], t: v[1] }
        }
        "hyperbola" => Curve::Hyperbola { c: nums(1)?[0] },
        "parabola" => {
            let v = nums(2)?;
            Curve::Parabola { a: v[0], b: v[1] }
        }
        other => return Err(ParseError::at(form.pos(), format!("unknown curve '{other}'"))),
    };
    check_curve(&curve).map_err(|e| ParseError::at(form.pos(), e.to_string()))?;
    Ok(curve)
}

fn curve_to_sexpr(curve: &Curve) -> String {
    match *curve {
        Curve::Constant { t } => format!("(const {})", fmt_num(t)),
        Curve::Linear { m, c } => format!("(linear {} {})", fmt_num(m), fmt_num(c)),
        Curve::ExpCusp { s, t } => format!("(expcusp {} {})", fmt_num(s), fmt_num(t)),
        Curve::Hyperbola { c } => format!("(hyperbola {})", fmt_num(c)),
        Curve::Parabola { a, b } => format!("(parabola {} {})", fmt_num(a), fmt_num(b)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_cusp() -> DomainExpr {
        DomainExpr::parse("(inter (halfplane 0 1 0) (below (expcusp 1 0)))").unwrap()
    }

    #[test]
    fn membership_examples() {
        let upper = DomainExpr::half_plane(0.0, 1.0, 0.0).unwrap();
        assert!(upper.contains_point([0.0, 1.0]));
        assert!(!exp_cusp().contains_point([1.0, 0.5]));
        let u = DomainExpr::union(vec![upper.clone(), exp_cusp()]).unwrap();
        assert!(u.contains_point([0.0, 1.0]));
    }

    #[test]
    fn slice_examples() {
        let upper = DomainExpr::half_plane(0.0, 1.0, 0.0).unwrap();
        assert!(upper.horizontal_slice(1.0).set.is_full());
        let s = exp_cusp().horizontal_slice(0.1);
        assert!(!s.approximate);
        let iv = s.set.intervals();
        assert_eq!(iv.len(), 1);
        assert!((iv[0].lo + 10f64.ln()).abs() < 1e-12 && (iv[0].hi - 10f64.ln()).abs() < 1e-12);
        let strip = DomainExpr::parse("(inter (vstrip -1 1) (halfplane 0 1 0))").unwrap();
        assert_eq!(strip.horizontal_slice(2.0).set, SliceSet::from_interval(-1.0, 1.0));
    }

    #[test]
    fn seg_fits_examples() {
        assert!(exp_cusp().seg_fits(1.0, 0.1));
        assert!(!exp_cusp().seg_fits(3.0, 0.1));
        let upper = DomainExpr::half_plane(0.0, 1.0, 0.0).unwrap();
        assert!(upper.seg_fits(1e9, 1.0));
    }

    #[test]
    fn disk_and_vertical_slices() {
        let d = DomainExpr::disk(1.0, 2.0, 0.5).unwrap();
        let s = d.vertical_slice(1.0).set;
        assert_eq!(s, SliceSet::from_interval(1.5, 2.5));
        let parabola = DomainExpr::parse("(above (parabola 1 0))").unwrap();
        assert_eq!(parabola.vertical_slice(2.0).set, SliceSet::from_interval(4.0, f64::INFINITY));
        let hyper = DomainExpr::parse("(below (hyperbola 1))").unwrap();
        assert!(hyper.vertical_slice(-1.0).set.is_empty());
    }

    #[test]
    fn affine_image_slices_follow_preimage() {
        let rot = rotation(std::f64::consts::FRAC_PI_2);
        let d = DomainExpr::affine_image(rot, [0.0, 0.0], exp_cusp()).unwrap();
        // The image is {x < 0, |y| < ln(1/(-x))...}; check membership agreement on a grid.
        for i in -30..30 {
            let b = i as f64 * 0.137;
            let s = d.horizontal_slice(b);
            for j in -40..40 {
                let x = j as f64 * 0.0531;
                assert_eq!(s.set.contains(x), d.contains_point([x, b]), "({x}, {b})");
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let text = "(union (affine (0 -1 1 0) (1 2) (inter (halfplane 1 0 0) (above (linear 0.5 -1)))) (disk 0 0 0.5) (below (hyperbola 2)) (vstrip -1 1) (above (parabola 1 0)) (below (const 3)))";
        let d = DomainExpr::parse(text).unwrap();
        assert_eq!(DomainExpr::parse(&d.to_sexpr()).unwrap(), d);
        assert!(DomainExpr::parse("(affine (1 2 2 4) (0 0) (disk 0 0 1))").is_err());
        assert!(DomainExpr::parse("(below (hyperbola -1))").is_err());
        assert!(DomainExpr::parse("(blob 1)").is_err());
    }
}
