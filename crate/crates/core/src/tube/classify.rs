use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::domain::{rot90, DomainExpr, Point};
use super::hull::{hull_classify, support, HullClass, HullOptions};
use super::lines::{contains_affine_line, Line, LineAnswer};
use super::TubeError;

/// Schedule `k_j = k_base^j`, `δ_j = δ_base^j` for `j = 1..=levels`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Schedule {
    pub levels: u32,
    pub k_base: f64,
    pub delta_base: f64,
    /// Heights tried per window.
    pub samples: usize,
    /// Abscissae in `[−k, k]` tried for a blocking vertical slice.
    pub cut_points: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            levels: 10,
            k_base: 2.0,
            delta_base: 0.5,
            samples: 64,
            cut_points: 17,
        }
    }
}

impl Schedule {
    pub fn steps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (1..=self.levels as i32).map(|j| (self.k_base.powi(j), self.delta_base.powi(j)))
    }
}

/// Height `b` with `[−k, k] × {b}` inside the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentWitness {
    pub k: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum BoundedOutcome {
    /// No height within `delta` of `a₂` carries `[−k, k]`, because the
    /// vertical slice at `cut_x` misses the closed window.
    Bounded { k: f64, delta: f64, cut_x: f64 },
    Unbounded { witnesses: Vec<SegmentWitness> },
    Undecided { reason: String },
}

/// Semi-decides whether `a` is a bounded point of a domain lying in `{y > 0}`.
pub fn bounded_point(d: &DomainExpr, a: Point, schedule: &Schedule) -> Result<BoundedOutcome, TubeError> {
    if !(support(d, [0.0, -1.0]) <= 1e-9) {
        return Err(TubeError::Precondition("domain is not contained in {y > 0}".into()));
    }
    if !d.contains_point(a) {
        return Err(TubeError::Precondition(format!("point {a:?} is not in the domain")));
    }
    let mut witnesses = Vec::new();
    let mut missing = None;
    for (k, delta) in schedule.steps() {
        let lo = a[1] - delta;
        let hi = a[1] + delta;
        let blocked = (0..schedule.cut_points.max(2)).find_map(|i| {
            let x = -k + 2.0 * k * i as f64 / (schedule.cut_points.max(2) - 1) as f64;
            (!d.vertical_slice(x).set.meets_closed(lo, hi)).then_some(x)
        });
        if let Some(cut_x) = blocked {
            return Ok(BoundedOutcome::Bounded { k, delta, cut_x });
        }
        if missing.is_none() {
            let mut heights: Vec<f64> = (0..schedule.samples.max(2))
                .map(|i| lo + 2.0 * delta * i as f64 / (schedule.samples.max(2) - 1) as f64)
                .filter(|b| *b > 0.0)
                .collect();
            heights.push(a[1]);
            heights.sort_by(|x, y| (x - a[1]).abs().total_cmp(&(y - a[1]).abs()));
            match heights.into_iter().find(|b| d.seg_fits(k, *b)) {
                Some(b) => witnesses.push(SegmentWitness { k, b }),
                None => missing = Some(k),
            }
        }
    }
    match missing {
        None => Ok(BoundedOutcome::Unbounded { witnesses }),
        Some(k) => Ok(BoundedOutcome::Undecided {
            reason: format!("no long segment found at k = {k} and no blocking slice within the schedule"),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EscapeOptions {
    /// Radius of the ball on which adherence and escape are tested.
    pub radius: f64,
    pub deltas: Vec<f64>,
    pub line_directions: usize,
    pub line_offsets: Vec<f64>,
    pub points_per_line: usize,
    pub t_grid: Vec<f64>,
}

impl Default for EscapeOptions {
    fn default() -> Self {
        Self {
            radius: 20.0,
            deltas: vec![1e-2, 1e-3, 1e-4],
            line_directions: 24,
            line_offsets: (-4..=4).map(|i| i as f64 * 0.5).collect(),
            points_per_line: 101,
            t_grid: (-10..=10).map(|i| i as f64 * 0.5).collect(),
        }
    }
}

/// The coordinate-wise escape patterns: one coordinate tends to `±∞` while
/// the other tends to an arbitrary `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscapeVariant {
    XToPlusInfinity,
    XToMinusInfinity,
    YToPlusInfinity,
    YToMinusInfinity,
}

impl EscapeVariant {
    pub const ALL: [EscapeVariant; 4] = [
        EscapeVariant::XToPlusInfinity,
        EscapeVariant::XToMinusInfinity,
        EscapeVariant::YToPlusInfinity,
        EscapeVariant::YToMinusInfinity,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantCheck {
    pub variant: EscapeVariant,
    pub holds: bool,
    /// First grid value of `t` for which no escaping point was found.
    pub failing_t: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscapeOutcome {
    Property1,
    Property2,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeReport {
    pub outcome: EscapeOutcome,
    pub adherent_line: Option<Line>,
    pub lines_tested: usize,
    pub variants: Vec<VariantCheck>,
}

const NEAR_FRACTIONS: [f64; 5] = [0.0, 0.5, -0.5, 0.9, -0.9];

/// Whether some point of `d` lies within `delta` of `p`.
fn near(d: &DomainExpr, p: Point, delta: f64) -> bool {
    if d.contains_point(p) {
        return true;
    }
    NEAR_FRACTIONS.iter().any(|f| {
        let w = delta * (1.0 - f * f).sqrt();
        d.horizontal_slice(p[1] + f * delta).set.meets_open(p[0] - w, p[0] + w)
            || d.vertical_slice(p[0] + f * delta).set.meets_open(p[1] - w, p[1] + w)
    })
}

fn line_is_adherent(d: &DomainExpr, line: &Line, opts: &EscapeOptions) -> bool {
    let c2 = line.point[0] * line.point[0] + line.point[1] * line.point[1];
    let half = (opts.radius * opts.radius - c2).max(0.0).sqrt();
    let n = opts.points_per_line.max(2);
    let pts: Vec<Point> = (0..n)
        .map(|i| line.at(-half + 2.0 * half * i as f64 / (n - 1) as f64))
        .collect();
    opts.deltas.iter().all(|delta| pts.iter().all(|p| near(d, *p, *delta)))
}

fn variant_holds(d: &DomainExpr, variant: EscapeVariant, opts: &EscapeOptions) -> VariantCheck {
    let r = opts.radius;
    let escapes = |t: f64, delta: f64| {
        NEAR_FRACTIONS.iter().any(|f| {
            let level = t + f * delta;
            match variant {
                EscapeVariant::XToPlusInfinity => d.horizontal_slice(level).set.sup() > r,
                EscapeVariant::XToMinusInfinity => d.horizontal_slice(level).set.inf() < -r,
                EscapeVariant::YToPlusInfinity => d.vertical_slice(level).set.sup() > r,
                EscapeVariant::YToMinusInfinity => d.vertical_slice(level).set.inf() < -r,
            }
        })
    };
    let failing_t = opts
        .t_grid
        .iter()
        .copied()
        .find(|t| !opts.deltas.iter().all(|delta| escapes(*t, *delta)));
    VariantCheck {
        variant,
        holds: failing_t.is_none(),
        failing_t,
    }
}

/// Samples the two alternatives available to a non-hyperbolic base whose
/// convex hull is the plane: an adherent line, or coordinate escape.
pub fn corollary_escape_check(d: &DomainExpr, opts: &EscapeOptions) -> EscapeReport {
    let n = opts.line_directions.max(1);
    let lines: Vec<Line> = (0..n)
        .flat_map(|i| {
            let a = std::f64::consts::PI * i as f64 / n as f64;
            let e = [a.cos(), a.sin()];
            let nrm = rot90(e);
            opts.line_offsets.iter().map(move |c| Line {
                point: [c * nrm[0], c * nrm[1]],
                dir: e,
            })
        })
        .collect();
    let adherent_line = lines
        .par_iter()
        .find_first(|l| line_is_adherent(d, l, opts))
        .copied();
    let variants: Vec<VariantCheck> = EscapeVariant::ALL.iter().map(|v| variant_holds(d, *v, opts)).collect();
    let outcome = if adherent_line.is_some() {
        EscapeOutcome::Property1
    } else if variants.iter().any(|v| v.holds) {
        EscapeOutcome::Property2
    } else {
        EscapeOutcome::Neither
    };
    EscapeReport {
        outcome,
        adherent_line,
        lines_tested: lines.len(),
        variants,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BrodyVerdict {
    Hyperbolic,
    NotHyperbolic,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KobayashiVerdict {
    Hyperbolic,
    NotHyperbolic,
    CertifiedByCorollary,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    SupportBound { normal: Point, offset: f64 },
    SpanningSample { center: Point, radius: f64, points: usize },
    LineWitness { line: Line },
    NoLine,
    LineUndecided { reason: String },
    BoundedPoint { point: Point, k: f64, delta: f64, cut_x: f64 },
    UnboundedPoint { point: Point, witnesses: Vec<SegmentWitness> },
    UndecidedPoint { point: Point, reason: String },
    Escape(EscapeReport),
    ImpliedByKobayashi,
    HullUndecided { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyOptions {
    pub hull: HullOptions,
    pub schedule: Schedule,
    pub escape: EscapeOptions,
    /// Heights of the normalized domain whose slice midpoints are tested.
    pub witness_heights: Vec<f64>,
    pub witness_cap: usize,
    pub random_probes: usize,
    pub seed: u64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            hull: HullOptions::default(),
            schedule: Schedule::default(),
            escape: EscapeOptions::default(),
            witness_heights: (-3..=3).map(|k| 2f64.powi(k)).collect(),
            witness_cap: 16,
            random_probes: 16,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeReport {
    pub hull: HullClass,
    pub brody: BrodyVerdict,
    pub kobayashi: KobayashiVerdict,
    pub evidence: Vec<Evidence>,
}

/// Points of a normalized domain used to test boundedness.
fn witness_points(d: &DomainExpr, opts: &ClassifyOptions) -> Vec<Point> {
    let mut pts = Vec::new();
    for &h in &opts.witness_heights {
        for iv in d.horizontal_slice(h).set.intervals() {
            let p = [iv.sample(100.0), h];
            if pts.len() < opts.witness_cap && d.contains_point(p) {
                pts.push(p);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut tries = 0;
    let mut found = 0;
    while found < opts.random_probes && tries < 20 * opts.random_probes.max(1) {
        tries += 1;
        let h = 2f64.powf(rng.random_range(-3.0..3.0));
        let slice = d.horizontal_slice(h).set;
        if slice.is_empty() {
            continue;
        }
        let iv = slice.intervals()[rng.random_range(0..slice.intervals().len())];
        let (lo, hi) = (iv.lo.max(-100.0), iv.hi.min(100.0));
        if !(lo < hi) {
            continue;
        }
        let p = [rng.random_range(lo..hi), h];
        if d.contains_point(p) {
            pts.push(p);
            found += 1;
        }
    }
    pts
}

/// Full pipeline: hull, normalization, line containment, bounded points, and
/// the escape alternatives when the hull is the plane.
pub fn classify_tube(d: &DomainExpr, opts: &ClassifyOptions) -> Result<TubeReport, TubeError> {
    let hull = hull_classify(d, &opts.hull);
    let mut evidence = Vec::new();
    let (brody, kobayashi) = match &hull {
        HullClass::InHalfPlane {
            normal,
            offset,
            normalization,
            ..
        } => {
            evidence.push(Evidence::SupportBound {
                normal: *normal,
                offset: *offset,
            });
            let nd = normalization.apply(d)?;
            let brody = match contains_affine_line(&nd) {
                LineAnswer::Yes { witness } => {
                    evidence.push(Evidence::LineWitness { line: witness });
                    BrodyVerdict::NotHyperbolic
                }
                LineAnswer::No => {
                    evidence.push(Evidence::NoLine);
                    BrodyVerdict::Hyperbolic
                }
                LineAnswer::Undecided { reason } => {
                    evidence.push(Evidence::LineUndecided { reason });
                    BrodyVerdict::Undecided
                }
            };
            let pts = witness_points(&nd, opts);
            let outcomes = pts
                .par_iter()
                .map(|p| bounded_point(&nd, *p, &opts.schedule).map(|o| (*p, o)))
                .collect::<Result<Vec<_>, _>>()?;
            let mut all_bounded = !outcomes.is_empty();
            let mut any_unbounded = false;
            for (point, o) in outcomes {
                match o {
                    BoundedOutcome::Bounded { k, delta, cut_x } => evidence.push(Evidence::BoundedPoint {
                        point,
                        k,
                        delta,
                        cut_x,
                    }),
                    BoundedOutcome::Unbounded { witnesses } => {
                        any_unbounded = true;
                        all_bounded = false;
                        evidence.push(Evidence::UnboundedPoint { point, witnesses });
                    }
                    BoundedOutcome::Undecided { reason } => {
                        all_bounded = false;
                        evidence.push(Evidence::UndecidedPoint { point, reason });
                    }
                }
            }
            let kobayashi = if any_unbounded {
                KobayashiVerdict::NotHyperbolic
            } else if all_bounded {
                KobayashiVerdict::Hyperbolic
            } else {
                KobayashiVerdict::Undecided
            };
            (brody, kobayashi)
        }
        HullClass::FullPlane {
            center,
            radius,
            witnesses,
        } => {
            evidence.push(Evidence::SpanningSample {
                center: *center,
                radius: *radius,
                points: witnesses.len(),
            });
            let escape = corollary_escape_check(d, &opts.escape);
            let kobayashi = if escape.outcome == EscapeOutcome::Neither {
                KobayashiVerdict::CertifiedByCorollary
            } else {
                KobayashiVerdict::Undecided
            };
            evidence.push(Evidence::Escape(escape));
            let brody = match contains_affine_line(d) {
                LineAnswer::Yes { witness } => {
                    evidence.push(Evidence::LineWitness { line: witness });
                    BrodyVerdict::NotHyperbolic
                }
                _ if kobayashi == KobayashiVerdict::CertifiedByCorollary => {
                    evidence.push(Evidence::ImpliedByKobayashi);
                    BrodyVerdict::Hyperbolic
                }
                LineAnswer::No => BrodyVerdict::Undecided,
                LineAnswer::Undecided { reason } => {
                    evidence.push(Evidence::LineUndecided { reason });
                    BrodyVerdict::Undecided
                }
            };
            (brody, kobayashi)
        }
        HullClass::Undecided { reason } => {
            evidence.push(Evidence::HullUndecided { reason: reason.clone() });
            (BrodyVerdict::Undecided, KobayashiVerdict::Undecided)
        }
    };
    Ok(TubeReport {
        hull,
        brody,
        kobayashi,
        evidence,
    })
}
