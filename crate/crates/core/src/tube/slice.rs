use serde::{Deserialize, Serialize};

/// Open interval `(lo, hi)` with endpoints in `ℝ ∪ {±∞}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const FULL: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    /// A representative interior point, kept within `[-cap, cap]` when possible.
    pub fn sample(&self, cap: f64) -> f64 {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => 0.5 * self.lo + 0.5 * self.hi,
            (true, false) => {
                if self.lo < cap {
                    (self.lo + 1.0).max(0.5 * (self.lo + cap)).min(cap)
                } else {
                    self.lo + self.lo.abs().max(1.0)
                }
            }
            (false, true) => -Interval::new(-self.hi, f64::INFINITY).sample(cap),
            (false, false) => 0.0,
        }
    }
}

/// Finite union of disjoint open intervals, sorted by left endpoint.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SliceSet {
    intervals: Vec<Interval>,
}

impl SliceSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full() -> Self {
        Self {
            intervals: vec![Interval::FULL],
        }
    }

    pub fn from_interval(lo: f64, hi: f64) -> Self {
        Self::from_intervals(vec![Interval::new(lo, hi)])
    }

    /// Normalizes arbitrary open intervals: drops empty ones and merges
    /// overlapping ones. Touching intervals `(a, b)`, `(b, c)` stay apart.
    pub fn from_intervals(mut v: Vec<Interval>) -> Self {
        v.retain(|i| !i.is_empty());
        v.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut out: Vec<Interval> = Vec::with_capacity(v.len());
        for i in v {
            match out.last_mut() {
                Some(last) if i.lo < last.hi => last.hi = last.hi.max(i.hi),
                _ => out.push(i),
            }
        }
        Self { intervals: out }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.intervals.len() == 1 && self.intervals[0] == Interval::FULL
    }

    pub fn contains(&self, x: f64) -> bool {
        let i = self.intervals.partition_point(|iv| iv.hi <= x);
        self.intervals.get(i).is_some_and(|iv| iv.contains(x))
    }

    /// Whether the closed segment `[lo, hi]` lies inside one interval.
    pub fn covers_closed(&self, lo: f64, hi: f64) -> bool {
        self.intervals.iter().any(|iv| iv.lo < lo && hi < iv.hi)
    }

    /// Whether the set meets the open interval `(lo, hi)`.
    pub fn meets_open(&self, lo: f64, hi: f64) -> bool {
        self.intervals.iter().any(|iv| iv.lo.max(lo) < iv.hi.min(hi))
    }

    /// Whether the set meets the closed interval `[lo, hi]`.
    pub fn meets_closed(&self, lo: f64, hi: f64) -> bool {
        lo <= hi && self.intervals.iter().any(|iv| iv.lo < hi && lo < iv.hi)
    }

    pub fn union(&self, other: &SliceSet) -> SliceSet {
        let mut v = self.intervals.clone();
        v.extend_from_slice(&other.intervals);
        Self::from_intervals(v)
    }

    pub fn intersect(&self, other: &SliceSet) -> SliceSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let (a, b) = (self.intervals[i], other.intervals[j]);
            let iv = Interval::new(a.lo.max(b.lo), a.hi.min(b.hi));
            if !iv.is_empty() {
                out.push(iv);
            }
            if a.hi < b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { intervals: out }
    }

    /// Image under `s ↦ scale·s + shift`.
    pub fn affine_map(&self, scale: f64, shift: f64) -> SliceSet {
        Self::from_intervals(
            self.intervals
                .iter()
                .map(|iv| {
                    let (a, b) = (map_end(iv.lo, scale, shift), map_end(iv.hi, scale, shift));
                    if scale > 0.0 {
                        Interval::new(a, b)
                    } else {
                        Interval::new(b, a)
                    }
                })
                .collect(),
        )
    }

    pub fn sup(&self) -> f64 {
        self.intervals.last().map_or(f64::NEG_INFINITY, |iv| iv.hi)
    }

    pub fn inf(&self) -> f64 {
        self.intervals.first().map_or(f64::INFINITY, |iv| iv.lo)
    }
}

fn map_end(x: f64, scale: f64, shift: f64) -> f64 {
    if x.is_infinite() {
        x * scale.signum()
    } else {
        scale * x + shift
    }
}

/// A slice together with whether any endpoint came from root refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub set: SliceSet,
    pub approximate: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_keeps_touching_intervals_apart() {
        let s = SliceSet::from_intervals(vec![
            Interval::new(2.0, 3.0),
            Interval::new(0.0, 1.0),
            Interval::new(1.0, 2.0),
            Interval::new(0.5, 0.7),
            Interval::new(5.0, 4.0),
        ]);
        assert_eq!(s.intervals().len(), 3);
        assert!(!s.contains(1.0) && !s.contains(2.0));
        assert!(s.contains(0.9) && s.contains(2.5));
    }

    #[test]
    fn intersection_and_union() {
        let a = SliceSet::from_intervals(vec![Interval::new(0.0, 2.0), Interval::new(3.0, f64::INFINITY)]);
        let b = SliceSet::from_interval(1.0, 4.0);
        let c = a.intersect(&b);
        assert_eq!(c.intervals(), &[Interval::new(1.0, 2.0), Interval::new(3.0, 4.0)]);
        assert!(!a.union(&b).is_full());
        assert!(a.union(&SliceSet::from_interval(f64::NEG_INFINITY, 0.5)).union(&b).is_full());
    }

    #[test]
    fn closed_cover() {
        let s = SliceSet::from_interval(-2.0, 2.0);
        assert!(s.covers_closed(-1.0, 1.0));
        assert!(!s.covers_closed(-2.0, 1.0));
        assert!(SliceSet::full().covers_closed(-1e300, 1e300));
    }

    #[test]
    fn affine_map_reverses() {
        let s = SliceSet::from_interval(1.0, f64::INFINITY);
        let t = s.affine_map(-2.0, 1.0);
        assert_eq!(t.intervals(), &[Interval::new(f64::NEG_INFINITY, -1.0)]);
    }

    #[test]
    fn samples_are_interior() {
        for iv in [
            Interval::new(1.0, 2.0),
            Interval::new(5.0, f64::INFINITY),
            Interval::new(f64::NEG_INFINITY, -3.0),
            Interval::FULL,
            Interval::new(1e6, f64::INFINITY),
        ] {
            assert!(iv.contains(iv.sample(100.0)), "{iv:?}");
        }
    }
}
