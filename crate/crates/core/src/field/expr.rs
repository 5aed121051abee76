//! Expression trees for harmonic functions.
//!
//! Every constructor returns a harmonic function: the primitive set is closed
//! under sums, real multiples and scale-translate precomposition, and the
//! holomorphic primitives only enter through their real or imaginary part.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{AffineChart, FieldError, ScalarField};
use crate::sexpr::{self, expect_arity, fmt_num, ParseError, SExpr};

/// Holomorphic expression in one complex variable `z`.
#[derive(Debug, Clone, PartialEq)]
pub enum HolExpr {
    Z,
    Const(Complex64),
    Add(Vec<HolExpr>),
    Mul(Vec<HolExpr>),
    Exp(Box<HolExpr>),
    /// Coefficients in ascending degree.
    Poly(Vec<Complex64>),
}

impl HolExpr {
    pub fn z() -> Self {
        HolExpr::Z
    }

    pub fn constant(c: Complex64) -> Self {
        HolExpr::Const(c)
    }

    pub fn real(c: f64) -> Self {
        HolExpr::Const(Complex64::new(c, 0.0))
    }

    pub fn add(terms: Vec<HolExpr>) -> Self {
        HolExpr::Add(terms)
    }

    pub fn mul(factors: Vec<HolExpr>) -> Self {
        HolExpr::Mul(factors)
    }

    pub fn exp(inner: HolExpr) -> Self {
        HolExpr::Exp(Box::new(inner))
    }

    pub fn poly(coeffs: Vec<Complex64>) -> Self {
        HolExpr::Poly(coeffs)
    }

    /// `z^k`
    pub fn power(k: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); k + 1];
        coeffs[k] = Complex64::new(1.0, 0.0);
        HolExpr::Poly(coeffs)
    }

    /// `self(c·z + d)`
    pub fn precompose_affine(&self, c: Complex64, d: Complex64) -> HolExpr {
        let arg = HolExpr::Poly(vec![d, c]);
        self.substitute(&arg)
    }

    fn substitute(&self, arg: &HolExpr) -> HolExpr {
        match self {
            HolExpr::Z => arg.clone(),
            HolExpr::Const(c) => HolExpr::Const(*c),
            HolExpr::Add(t) => HolExpr::Add(t.iter().map(|e| e.substitute(arg)).collect()),
            HolExpr::Mul(t) => HolExpr::Mul(t.iter().map(|e| e.substitute(arg)).collect()),
            HolExpr::Exp(e) => HolExpr::Exp(Box::new(e.substitute(arg))),
            HolExpr::Poly(c) => {
                // Horner form keeps the expression closed under substitution.
                let mut acc = HolExpr::Const(*c.last().unwrap_or(&Complex64::new(0.0, 0.0)));
                for coeff in c.iter().rev().skip(1) {
                    acc = HolExpr::Add(vec![
                        HolExpr::Mul(vec![acc, arg.clone()]),
                        HolExpr::Const(*coeff),
                    ]);
                }
                acc
            }
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.eval_with_derivative(z).0
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        self.eval_with_derivative(z).1
    }

    /// Value and complex derivative at `z`.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        match self {
            HolExpr::Z => (z, one),
            HolExpr::Const(c) => (*c, zero),
            HolExpr::Add(terms) => terms.iter().fold((zero, zero), |(v, d), t| {
                let (tv, td) = t.eval_with_derivative(z);
                (v + tv, d + td)
            }),
            HolExpr::Mul(factors) => factors.iter().fold((one, zero), |(v, d), t| {
                let (tv, td) = t.eval_with_derivative(z);
                (v * tv, d * tv + v * td)
            }),
            HolExpr::Exp(inner) => {
                let (v, d) = inner.eval_with_derivative(z);
                let e = v.exp();
                (e, e * d)
            }
            HolExpr::Poly(coeffs) => {
                let mut v = zero;
                let mut d = zero;
                for c in coeffs.iter().rev() {
                    d = d * z + v;
                    v = v * z + c;
                }
                (v, d)
            }
        }
    }

    fn to_sexpr(&self) -> String {
        match self {
            HolExpr::Z => "z".to_string(),
            HolExpr::Const(c) => format!("(c {} {})", fmt_num(c.re), fmt_num(c.im)),
            HolExpr::Add(t) => list_form("+", t.iter().map(|e| e.to_sexpr())),
            HolExpr::Mul(t) => list_form("*", t.iter().map(|e| e.to_sexpr())),
            HolExpr::Exp(e) => format!("(exp {})", e.to_sexpr()),
            HolExpr::Poly(c) => list_form(
                "poly",
                c.iter()
                    .map(|c| format!("({} {})", fmt_num(c.re), fmt_num(c.im))),
            ),
        }
    }

    pub fn parse(text: &str) -> Result<HolExpr, ParseError> {
        Self::from_sexpr(&sexpr::parse(text)?)
    }

    pub(crate) fn from_sexpr(form: &SExpr) -> Result<HolExpr, ParseError> {
        if let Some(atom) = form.as_atom() {
            if atom == "z" {
                return Ok(HolExpr::Z);
            }
            return Ok(HolExpr::real(form.finite()?));
        }
        let (head, args) = form.head()?;
        match head {
            "c" => {
                expect_arity(form, args, 2)?;
                Ok(HolExpr::Const(Complex64::new(
                    args[0].finite()?,
                    args[1].finite()?,
                )))
            }
            "+" => Ok(HolExpr::Add(
                args.iter().map(HolExpr::from_sexpr).collect::<Result<_, _>>()?,
            )),
            "*" => Ok(HolExpr::Mul(
                args.iter().map(HolExpr::from_sexpr).collect::<Result<_, _>>()?,
            )),
            "exp" => {
                expect_arity(form, args, 1)?;
                Ok(HolExpr::exp(HolExpr::from_sexpr(&args[0])?))
            }
            "poly" => {
                let coeffs = args
                    .iter()
                    .map(|a| {
                        let pair = a
                            .as_list()
                            .filter(|p| p.len() == 2)
                            .ok_or_else(|| ParseError::at(a.pos(), "expected (re im)"))?;
                        Ok(Complex64::new(pair[0].finite()?, pair[1].finite()?))
                    })
                    .collect::<Result<Vec<_>, ParseError>>()?;
                Ok(HolExpr::Poly(coeffs))
            }
            other => Err(ParseError::at(
                form.pos(),
                format!("unknown holomorphic form `{other}`"),
            )),
        }
    }
}

impl fmt::Display for HolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sexpr())
    }
}

fn list_form(head: &str, items: impl Iterator<Item = String>) -> String {
    let mut s = format!("({head}");
    for item in items {
        s.push(' ');
        s.push_str(&item);
    }
    s.push(')');
    s
}

/// Polynomial in `m` real variables whose Laplacian vanishes identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicPoly {
    dim: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl HarmonicPoly {
    /// Builds the polynomial and rejects it unless its symbolic Laplacian is zero.
    pub fn new(dim: usize, terms: Vec<(Vec<u32>, f64)>) -> Result<Self, FieldError> {
        let mut map: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (exps, c) in terms {
            if exps.len() != dim {
                return Err(FieldError::DimensionMismatch {
                    expected: dim,
                    found: exps.len(),
                });
            }
            if !c.is_finite() {
                return Err(FieldError::NonFinite);
            }
            *map.entry(exps).or_insert(0.0) += c;
        }
        map.retain(|_, c| *c != 0.0);
        let poly = HarmonicPoly { dim, terms: map };
        let scale = poly.terms.values().fold(0.0f64, |m, c| m.max(c.abs()));
        let lap = poly.laplacian();
        if let Some((mono, c)) = lap.iter().find(|(_, c)| c.abs() > 1e-12 * scale.max(1.0)) {
            return Err(FieldError::NotHarmonic(format!(
                "Laplacian has coefficient {c} on monomial {mono:?}"
            )));
        }
        Ok(poly)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, f64)> {
        self.terms.iter().map(|(k, v)| (k, *v))
    }

    /// Symbolic Laplacian as a coefficient table.
    pub fn laplacian(&self) -> BTreeMap<Vec<u32>, f64> {
        let mut out: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (exps, &c) in &self.terms {
            for i in 0..self.dim {
                let e = exps[i];
                if e >= 2 {
                    let mut lowered = exps.clone();
                    lowered[i] -= 2;
                    *out.entry(lowered).or_insert(0.0) += c * f64::from(e) * f64::from(e - 1);
                }
            }
        }
        out
    }

    fn value_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut value = 0.0;
        let mut grad = vec![0.0; self.dim];
        for (exps, &c) in &self.terms {
            let mut mono = c;
            for (xi, &e) in x.iter().zip(exps) {
                mono *= xi.powi(e as i32);
            }
            value += mono;
            for i in 0..self.dim {
                let e = exps[i];
                if e == 0 {
                    continue;
                }
                let mut d = c * f64::from(e);
                for (j, (xj, &ej)) in x.iter().zip(exps).enumerate() {
                    let p = if j == i { ej - 1 } else { ej };
                    d *= xj.powi(p as i32);
                }
                grad[i] += d;
            }
        }
        (value, grad)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Coord(usize),
    Const(f64),
    Sum(Vec<Node>),
    Scale(f64, Box<Node>),
    Poly(HarmonicPoly),
    Re(HolExpr),
    Im(HolExpr),
    Chart(AffineChart, Box<Node>),
    /// A planar harmonic function of the coordinate pair `(i, j)`.
    Planar(usize, usize, Box<Node>),
}

/// Harmonic function on `ℝᵐ` given by a closed set of harmonicity-preserving
/// constructors.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicExpr {
    dim: usize,
    node: Node,
}

impl HarmonicExpr {
    pub fn coord(dim: usize, i: usize) -> Result<Self, FieldError> {
        if dim == 0 {
            return Err(FieldError::ZeroDimension);
        }
        if i >= dim {
            return Err(FieldError::CoordOutOfRange { index: i, dim });
        }
        Ok(Self {
            dim,
            node: Node::Coord(i),
        })
    }

    pub fn constant(dim: usize, c: f64) -> Result<Self, FieldError> {
        if dim == 0 {
            return Err(FieldError::ZeroDimension);
        }
        if !c.is_finite() {
            return Err(FieldError::NonFinite);
        }
        Ok(Self {
            dim,
            node: Node::Const(c),
        })
    }

    /// `constant + ⟨gradient, x⟩`
    pub fn affine(constant: f64, gradient: &[f64]) -> Result<Self, FieldError> {
        let dim = gradient.len();
        let mut terms = vec![Self::constant(dim, constant)?];
        for (i, &g) in gradient.iter().enumerate() {
            if g != 0.0 {
                terms.push(Self::coord(dim, i)?.scaled(g)?);
            }
        }
        Self::sum(terms)
    }

    pub fn sum(terms: Vec<HarmonicExpr>) -> Result<Self, FieldError> {
        let dim = terms.first().map(|t| t.dim).ok_or(FieldError::EmptySum)?;
        if let Some(t) = terms.iter().find(|t| t.dim != dim) {
            return Err(FieldError::DimensionMismatch {
                expected: dim,
                found: t.dim,
            });
        }
        Ok(Self {
            dim,
            node: Node::Sum(terms.into_iter().map(|t| t.node).collect()),
        })
    }

    pub fn scaled(self, factor: f64) -> Result<Self, FieldError> {
        if !factor.is_finite() {
            return Err(FieldError::NonFinite);
        }
        Ok(Self {
            dim: self.dim,
            node: Node::Scale(factor, Box::new(self.node)),
        })
    }

    pub fn plus_constant(self, c: f64) -> Result<Self, FieldError> {
        let dim = self.dim;
        Self::sum(vec![self, Self::constant(dim, c)?])
    }

    pub fn poly(poly: HarmonicPoly) -> Self {
        Self {
            dim: poly.dim(),
            node: Node::Poly(poly),
        }
    }

    /// `Re h(x₁ + i x₂)` on `ℝ²`.
    pub fn re(h: HolExpr) -> Self {
        Self {
            dim: 2,
            node: Node::Re(h),
        }
    }

    /// `Im h(x₁ + i x₂)` on `ℝ²`.
    pub fn im(h: HolExpr) -> Self {
        Self {
            dim: 2,
            node: Node::Im(h),
        }
    }

    /// `x ↦ self(chart.scale · x + chart.center)`
    pub fn compose(self, chart: &AffineChart) -> Result<Self, FieldError> {
        if chart.center.len() != self.dim {
            return Err(FieldError::DimensionMismatch {
                expected: self.dim,
                found: chart.center.len(),
            });
        }
        Ok(Self {
            dim: self.dim,
            node: Node::Chart(chart.clone(), Box::new(self.node)),
        })
    }

    /// Lifts a planar harmonic function to `ℝ^dim` through coordinates `(i, j)`.
    pub fn planar(dim: usize, i: usize, j: usize, inner: HarmonicExpr) -> Result<Self, FieldError> {
        if inner.dim != 2 {
            return Err(FieldError::DimensionMismatch {
                expected: 2,
                found: inner.dim,
            });
        }
        for k in [i, j] {
            if k >= dim {
                return Err(FieldError::CoordOutOfRange { index: k, dim });
            }
        }
        if i == j {
            return Err(FieldError::Invalid("planar coordinates must differ".into()));
        }
        Ok(Self {
            dim,
            node: Node::Planar(i, j, Box::new(inner.node)),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), FieldError> {
        if x.len() != self.dim {
            return Err(FieldError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, FieldError> {
        self.check_dim(x)?;
        let v = eval_node(&self.node, x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(FieldError::Overflow)
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, FieldError> {
        Ok(self.value_and_gradient(x)?.1)
    }

    pub fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>), FieldError> {
        self.check_dim(x)?;
        let (v, g) = value_grad_node(&self.node, x);
        if v.is_finite() && g.iter().all(|c| c.is_finite()) {
            Ok((v, g))
        } else {
            Err(FieldError::Overflow)
        }
    }

    pub fn parse(text: &str, dim: usize) -> Result<Self, ParseError> {
        let form = sexpr::parse(text)?;
        Self::from_sexpr(&form, dim)
    }

    pub(crate) fn from_sexpr(form: &SExpr, dim: usize) -> Result<Self, ParseError> {
        let node = node_from_sexpr(form, dim)?;
        Ok(Self { dim, node })
    }
}

impl ScalarField for HarmonicExpr {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Result<f64, FieldError> {
        HarmonicExpr::eval(self, x)
    }

    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>), FieldError> {
        HarmonicExpr::value_and_gradient(self, x)
    }
}

fn to_complex(x: &[f64]) -> Complex64 {
    Complex64::new(x[0], x[1])
}

fn eval_node(node: &Node, x: &[f64]) -> f64 {
    match node {
        Node::Coord(i) => x[*i],
        Node::Const(c) => *c,
        Node::Sum(t) => t.iter().map(|n| eval_node(n, x)).sum(),
        Node::Scale(a, n) => a * eval_node(n, x),
        Node::Poly(p) => p.value_grad(x).0,
        Node::Re(h) => h.eval(to_complex(x)).re,
        Node::Im(h) => h.eval(to_complex(x)).im,
        Node::Chart(chart, n) => eval_node(n, &chart.apply(x)),
        Node::Planar(i, j, n) => eval_node(n, &[x[*i], x[*j]]),
    }
}

fn value_grad_node(node: &Node, x: &[f64]) -> (f64, Vec<f64>) {
    let m = x.len();
    match node {
        Node::Coord(i) => {
            let mut g = vec![0.0; m];
            g[*i] = 1.0;
            (x[*i], g)
        }
        Node::Const(c) => (*c, vec![0.0; m]),
        Node::Sum(t) => t.iter().fold((0.0, vec![0.0; m]), |(v, mut g), n| {
            let (tv, tg) = value_grad_node(n, x);
            g.iter_mut().zip(&tg).for_each(|(a, b)| *a += b);
            (v + tv, g)
        }),
        Node::Scale(a, n) => {
            let (v, g) = value_grad_node(n, x);
            (a * v, g.into_iter().map(|c| a * c).collect())
        }
        Node::Poly(p) => p.value_grad(x),
        // Cauchy-Riemann: ∂ₓRe h = Re h', ∂ᵧRe h = −Im h'.
        Node::Re(h) => {
            let (v, d) = h.eval_with_derivative(to_complex(x));
            (v.re, vec![d.re, -d.im])
        }
        Node::Im(h) => {
            let (v, d) = h.eval_with_derivative(to_complex(x));
            (v.im, vec![d.im, d.re])
        }
        Node::Chart(chart, n) => {
            let (v, g) = value_grad_node(n, &chart.apply(x));
            (v, g.into_iter().map(|c| chart.scale * c).collect())
        }
        Node::Planar(i, j, n) => {
            let (v, g2) = value_grad_node(n, &[x[*i], x[*j]]);
            let mut g = vec![0.0; m];
            g[*i] = g2[0];
            g[*j] = g2[1];
            (v, g)
        }
    }
}

fn node_to_sexpr(node: &Node) -> String {
    match node {
        Node::Coord(i) => format!("(coord {i})"),
        Node::Const(c) => format!("(const {})", fmt_num(*c)),
        Node::Sum(t) => list_form("sum", t.iter().map(node_to_sexpr)),
        Node::Scale(a, n) => format!("(scale {} {})", fmt_num(*a), node_to_sexpr(n)),
        Node::Poly(p) => list_form(
            "hpoly",
            p.terms().map(|(exps, c)| {
                let mut s = format!("({}", fmt_num(c));
                for e in exps {
                    s.push_str(&format!(" {e}"));
                }
                s.push(')');
                s
            }),
        ),
        Node::Re(h) => format!("(re {h})"),
        Node::Im(h) => format!("(im {h})"),
        Node::Chart(chart, n) => {
            let center: Vec<String> = chart.center.iter().map(|c| fmt_num(*c)).collect();
            format!(
                "(chart {} ({}) {})",
                fmt_num(chart.scale),
                center.join(" "),
                node_to_sexpr(n)
            )
        }
        Node::Planar(i, j, n) => format!("(planar {i} {j} {})", node_to_sexpr(n)),
    }
}

fn node_from_sexpr(form: &SExpr, dim: usize) -> Result<Node, ParseError> {
    let err = |msg: String| ParseError::at(form.pos(), msg);
    let (head, args) = form.head()?;
    let node = match head {
        "coord" => {
            expect_arity(form, args, 1)?;
            let i = args[0].index()?;
            if i >= dim {
                return Err(err(format!("coordinate {i} out of range for dimension {dim}")));
            }
            Node::Coord(i)
        }
        "const" => {
            expect_arity(form, args, 1)?;
            Node::Const(args[0].finite()?)
        }
        "sum" => {
            if args.is_empty() {
                return Err(err("sum needs at least one term".into()));
            }
            Node::Sum(
                args.iter()
                    .map(|a| node_from_sexpr(a, dim))
                    .collect::<Result<_, _>>()?,
            )
        }
        "scale" => {
            expect_arity(form, args, 2)?;
            Node::Scale(args[0].finite()?, Box::new(node_from_sexpr(&args[1], dim)?))
        }
        "hpoly" => {
            let terms = args
                .iter()
                .map(|t| {
                    let items = t
                        .as_list()
                        .ok_or_else(|| ParseError::at(t.pos(), "expected (coeff e1 ... em)"))?;
                    let (c, exps) = items
                        .split_first()
                        .ok_or_else(|| ParseError::at(t.pos(), "empty term"))?;
                    let exps = exps
                        .iter()
                        .map(|e| e.index().map(|v| v as u32))
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok((exps, c.finite()?))
                })
                .collect::<Result<Vec<_>, ParseError>>()?;
            let poly = HarmonicPoly::new(dim, terms).map_err(|e| err(e.to_string()))?;
            Node::Poly(poly)
        }
        "re" | "im" => {
            expect_arity(form, args, 1)?;
            if dim != 2 {
                return Err(err(format!("`{head}` requires dimension 2, found {dim}")));
            }
            let h = HolExpr::from_sexpr(&args[0])?;
            if head == "re" {
                Node::Re(h)
            } else {
                Node::Im(h)
            }
        }
        "chart" => {
            expect_arity(form, args, 3)?;
            let scale = args[0].finite()?;
            let center = args[1]
                .as_list()
                .ok_or_else(|| ParseError::at(args[1].pos(), "expected center list"))?
                .iter()
                .map(SExpr::finite)
                .collect::<Result<Vec<_>, _>>()?;
            if center.len() != dim {
                return Err(err(format!(
                    "chart center has {} coordinates, expected {dim}",
                    center.len()
                )));
            }
            let chart = AffineChart::new(scale, center).map_err(|e| err(e.to_string()))?;
            Node::Chart(chart, Box::new(node_from_sexpr(&args[2], dim)?))
        }
        "planar" => {
            expect_arity(form, args, 3)?;
            let i = args[0].index()?;
            let j = args[1].index()?;
            if i >= dim || j >= dim || i == j {
                return Err(err(format!("invalid planar coordinates ({i}, {j})")));
            }
            Node::Planar(i, j, Box::new(node_from_sexpr(&args[2], 2)?))
        }
        other => return Err(err(format!("unknown expression form `{other}`"))),
    };
    Ok(node)
}

impl fmt::Display for HarmonicExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&node_to_sexpr(&self.node))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn re_z2() -> HarmonicExpr {
        HarmonicExpr::re(HolExpr::power(2))
    }

    #[test]
    fn eval_examples() {
        assert_eq!(re_z2().eval(&[1.0, 0.0]).unwrap(), 1.0);
        let aff = HarmonicExpr::affine(3.0, &[2.0, 0.0, 0.0]).unwrap();
        assert_eq!(aff.eval(&[0.0, 0.0, 0.0]).unwrap(), 3.0);
        let re_exp = HarmonicExpr::re(HolExpr::exp(HolExpr::z()));
        assert!((re_exp.eval(&[0.0, PI]).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_examples() {
        assert_eq!(re_z2().gradient(&[1.0, 0.0]).unwrap(), vec![2.0, 0.0]);
        let aff = HarmonicExpr::affine(-1.0, &[0.5, -2.0]).unwrap();
        assert_eq!(aff.gradient(&[7.0, 3.0]).unwrap(), vec![0.5, -2.0]);
        let re_exp = HarmonicExpr::re(HolExpr::exp(HolExpr::z()));
        let g = re_exp.gradient(&[0.0, 0.0]).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-15 && g[1].abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_and_overflow_are_errors() {
        assert!(matches!(
            re_z2().eval(&[1.0]),
            Err(FieldError::DimensionMismatch { expected: 2, found: 1 })
        ));
        let re_exp = HarmonicExpr::re(HolExpr::exp(HolExpr::z()));
        assert!(matches!(re_exp.eval(&[800.0, 0.0]), Err(FieldError::Overflow)));
    }

    #[test]
    fn non_harmonic_polynomial_rejected() {
        // x² + y² has Laplacian 4.
        let err = HarmonicPoly::new(2, vec![(vec![2, 0], 1.0), (vec![0, 2], 1.0)]).unwrap_err();
        assert!(matches!(err, FieldError::NotHarmonic(_)));
        // x² − y², x³ − 3xy² are fine.
        HarmonicPoly::new(2, vec![(vec![2, 0], 1.0), (vec![0, 2], -1.0)]).unwrap();
        HarmonicPoly::new(2, vec![(vec![3, 0], 1.0), (vec![1, 2], -3.0)]).unwrap();
        // 2z² − x² − y² in three variables.
        HarmonicPoly::new(
            3,
            vec![(vec![0, 0, 2], 2.0), (vec![2, 0, 0], -1.0), (vec![0, 2, 0], -1.0)],
        )
        .unwrap();
    }

    #[test]
    fn polynomial_gradient_matches_holomorphic_form() {
        let p = HarmonicExpr::poly(
            HarmonicPoly::new(2, vec![(vec![3, 0], 1.0), (vec![1, 2], -3.0)]).unwrap(),
        );
        let h = HarmonicExpr::re(HolExpr::power(3));
        for x in [[0.3, -1.2], [2.0, 0.5], [-1.0, -1.0]] {
            let (pv, pg) = p.value_and_gradient(&x).unwrap();
            let (hv, hg) = h.value_and_gradient(&x).unwrap();
            assert!((pv - hv).abs() < 1e-12);
            assert!((pg[0] - hg[0]).abs() < 1e-12 && (pg[1] - hg[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn chart_and_planar_chain_rule() {
        let chart = AffineChart::new(0.5, vec![1.0, -2.0]).unwrap();
        let g = re_z2().compose(&chart).unwrap();
        let x = [0.4, 0.6];
        let y = chart.apply(&x);
        assert_eq!(g.eval(&x).unwrap(), re_z2().eval(&y).unwrap());
        let gy = re_z2().gradient(&y).unwrap();
        let gx = g.gradient(&x).unwrap();
        assert_eq!(gx, vec![0.5 * gy[0], 0.5 * gy[1]]);

        let lifted = HarmonicExpr::planar(3, 2, 0, re_z2()).unwrap();
        let v = lifted.value_and_gradient(&[1.0, 5.0, 3.0]).unwrap();
        assert_eq!(v.0, 9.0 - 1.0);
        assert_eq!(v.1, vec![-2.0, 0.0, 6.0]);
    }

    #[test]
    fn text_form_round_trips() {
        let chart = AffineChart::new(0.25, vec![0.1, -3.0]).unwrap();
        let h = HolExpr::add(vec![
            HolExpr::power(2),
            HolExpr::exp(HolExpr::mul(vec![HolExpr::constant(Complex64::new(0.0, 1.0)), HolExpr::z()])),
        ]);
        let e = HarmonicExpr::sum(vec![
            HarmonicExpr::re(h.clone()).scaled(1.5).unwrap(),
            HarmonicExpr::im(h).compose(&chart).unwrap(),
            HarmonicExpr::affine(0.1, &[1.0, -0.3]).unwrap(),
        ])
        .unwrap();
        let text = e.to_string();
        let back = HarmonicExpr::parse(&text, 2).unwrap();
        assert_eq!(back, e);
        assert_eq!(back.to_string(), text);
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(HarmonicExpr::parse("(re z)", 3).is_err());
        assert!(HarmonicExpr::parse("(coord 4)", 2).is_err());
        assert!(HarmonicExpr::parse("(hpoly (1 2 0) (1 0 2))", 2).is_err());
        let e = HarmonicExpr::parse("(sum (coord 0)\n (bogus 1))", 2).unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn precompose_affine_matches_direct_evaluation() {
        let h = HolExpr::add(vec![HolExpr::power(3), HolExpr::exp(HolExpr::z())]);
        let c = Complex64::new(2.0, -0.5);
        let d = Complex64::new(0.3, 1.0);
        let g = h.precompose_affine(c, d);
        let z = Complex64::new(-0.4, 0.7);
        let (gv, gd) = g.eval_with_derivative(z);
        let (hv, hd) = h.eval_with_derivative(c * z + d);
        assert!((gv - hv).norm() < 1e-12);
        assert!((gd - c * hd).norm() < 1e-12);
    }
}
