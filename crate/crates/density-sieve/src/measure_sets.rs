//! Exact arithmetic on finite unions of half-open rational intervals.
//!
//! Every set lives inside a bounded `Window` [lo, hi). Intervals are half-open
//! `[lo, hi)`, so disjoint dyadic partitions are exactly representable and
//! boundary points are unambiguous. All values are immutable after
//! construction and all operations are pure.

use std::cmp::Ordering;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{rat_zero, Rat, Rq};

/// The finite-measure carrier [lo, hi). Its length is the total mass
/// available to any set constructed inside it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    lo: Rat,
    hi: Rat,
}

impl Window {
    pub fn new(lo: Rat, hi: Rat) -> Result<Self> {
        if lo >= hi {
            return Err(Error::InvalidParameter(format!(
                "window requires lo < hi, got [{lo}, {hi})"
            )));
        }
        Ok(Window { lo, hi })
    }

    /// The canonical unit window [0, 1).
    pub fn unit() -> Self {
        Window { lo: rat_zero(), hi: Rat::from_integer(1.into()) }
    }

    pub fn lo(&self) -> &Rat {
        &self.lo
    }

    pub fn hi(&self) -> &Rat {
        &self.hi
    }

    pub fn length(&self) -> Rat {
        &self.hi - &self.lo
    }
}

/// Half-open interval [lo, hi) with lo < hi. Empty intervals are never stored
/// inside an `IntervalUnion`; raw (possibly empty) intervals only exist as
/// normalization input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub lo: Rat,
    pub hi: Rat,
}

impl Interval {
    pub fn new(lo: Rat, hi: Rat) -> Self {
        Interval { lo, hi }
    }

    fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }

    pub fn length(&self) -> Rat {
        &self.hi - &self.lo
    }
}

/// Normalized finite union of half-open intervals inside a window:
/// pairwise disjoint, sorted by lower endpoint, adjacent intervals merged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalUnion {
    intervals: Vec<Interval>,
    window: Window,
}

/// Canonicalizes raw intervals: clips to the window, drops empties, sorts,
/// and merges overlapping or adjacent pieces.
pub fn normalize(raw: Vec<Interval>, window: Window) -> IntervalUnion {
    let mut clipped: Vec<Interval> = raw
        .into_iter()
        .map(|iv| Interval {
            lo: iv.lo.max(window.lo.clone()),
            hi: iv.hi.min(window.hi.clone()),
        })
        .filter(|iv| !iv.is_empty())
        .collect();
    clipped.sort_by(|a, b| a.lo.cmp(&b.lo).then_with(|| a.hi.cmp(&b.hi)));
    let mut merged: Vec<Interval> = Vec::with_capacity(clipped.len());
    for iv in clipped {
        match merged.last_mut() {
            Some(last) if iv.lo <= last.hi => {
                if iv.hi > last.hi {
                    last.hi = iv.hi;
                }
            }
            _ => merged.push(iv),
        }
    }
    IntervalUnion { intervals: merged, window }
}

impl IntervalUnion {
    pub fn empty(window: Window) -> Self {
        IntervalUnion { intervals: Vec::new(), window }
    }

    pub fn full(window: Window) -> Self {
        let iv = Interval { lo: window.lo.clone(), hi: window.hi.clone() };
        IntervalUnion { intervals: vec![iv], window }
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    fn check_window(&self, other: &IntervalUnion) -> Result<()> {
        if self.window != other.window {
            return Err(Error::WindowMismatch);
        }
        Ok(())
    }

    /// Set union. Both operands must share a window.
    pub fn union(&self, other: &IntervalUnion) -> Result<IntervalUnion> {
        self.check_window(other)?;
        let mut raw = self.intervals.clone();
        raw.extend(other.intervals.iter().cloned());
        Ok(normalize(raw, self.window.clone()))
    }

    /// Set intersection by a two-pointer walk over the sorted interval lists.
    pub fn intersect(&self, other: &IntervalUnion) -> Result<IntervalUnion> {
        self.check_window(other)?;
        let mut out = Vec::new();
        let (mut i, mut j) = (0usize, 0usize);
        while i < self.intervals.len() && j < other.intervals.len() {
            let a = &self.intervals[i];
            let b = &other.intervals[j];
            let lo = (&a.lo).max(&b.lo).clone();
            let hi = (&a.hi).min(&b.hi).clone();
            if lo < hi {
                out.push(Interval { lo, hi });
            }
            if a.hi <= b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Ok(IntervalUnion { intervals: out, window: self.window.clone() })
    }

    /// window \ self.
    pub fn complement_within(&self) -> IntervalUnion {
        let mut out = Vec::new();
        let mut cursor = self.window.lo.clone();
        for iv in &self.intervals {
            if cursor < iv.lo {
                out.push(Interval { lo: cursor, hi: iv.lo.clone() });
            }
            cursor = iv.hi.clone();
        }
        if cursor < self.window.hi {
            out.push(Interval { lo: cursor, hi: self.window.hi.clone() });
        }
        IntervalUnion { intervals: out, window: self.window.clone() }
    }

    /// self \ other.
    pub fn difference(&self, other: &IntervalUnion) -> Result<IntervalUnion> {
        self.intersect(&other.complement_within())
    }

    /// Exact Lebesgue measure: the sum of interval lengths.
    pub fn measure(&self) -> Rat {
        self.intervals.iter().map(Interval::length).fold(rat_zero(), |a, b| a + b)
    }

    /// Membership at a point (half-open boundaries: hi is excluded).
    pub fn contains_point(&self, x: &Rat) -> bool {
        let idx = self.intervals.partition_point(|iv| iv.lo <= *x);
        idx > 0 && *x < self.intervals[idx - 1].hi
    }

    /// Number of stored intervals; budget checks use this.
    pub fn interval_count(&self) -> usize {
        self.intervals.len()
    }
}

/// The m-fold coverage region { x : x lies in at least m of the given sets },
/// computed by an endpoint sweep carrying a multiplicity counter.
///
/// m = 0 yields the full window.
pub fn kfold_region(sets: &[IntervalUnion], m: usize) -> Result<IntervalUnion> {
    let window = match sets.first() {
        Some(s) => s.window().clone(),
        None => {
            return Err(Error::InvalidParameter(
                "kfold_region needs at least one set to fix the window".into(),
            ))
        }
    };
    for s in sets {
        if *s.window() != window {
            return Err(Error::WindowMismatch);
        }
    }
    if m == 0 {
        return Ok(IntervalUnion::full(window));
    }
    // (coordinate, delta) events; +1 at lo, -1 at hi.
    let mut events: Vec<(Rat, i64)> = Vec::new();
    for s in sets {
        for iv in s.intervals() {
            events.push((iv.lo.clone(), 1));
            events.push((iv.hi.clone(), -1));
        }
    }
    events.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.cmp(&a.1)));
    let mut out: Vec<Interval> = Vec::new();
    let mut depth: i64 = 0;
    let mut open_at: Option<Rat> = None;
    let mut i = 0usize;
    while i < events.len() {
        let coord = events[i].0.clone();
        let mut delta = 0i64;
        while i < events.len() && events[i].0 == coord {
            delta += events[i].1;
            i += 1;
        }
        let before = depth;
        depth += delta;
        let target = m as i64;
        match (before >= target, depth >= target) {
            (false, true) => open_at = Some(coord),
            (true, false) => {
                let lo = open_at.take().expect("sweep opened a region");
                if lo < coord {
                    out.push(Interval { lo, hi: coord });
                }
            }
            _ => {}
        }
    }
    debug_assert!(open_at.is_none(), "sweep must close every region");
    Ok(normalize(out, window))
}

fn quad_to_json(lo: &Rat, hi: &Rat) -> Vec<serde_json::Value> {
    let mut v = Vec::with_capacity(4);
    for part in [lo.numer(), lo.denom(), hi.numer(), hi.denom()] {
        let rq = serde_json::to_value(Rq(Rat::from_integer(part.clone()))).expect("int to json");
        // Rq serializes as [n, 1]; take the numerator entry.
        v.push(rq.as_array().unwrap()[0].clone());
    }
    v
}

fn quad_from_json(v: &[serde_json::Value]) -> std::result::Result<(Rat, Rat), String> {
    if v.len() != 4 {
        return Err("interval quadruple must have 4 entries".into());
    }
    let mut parts = Vec::with_capacity(4);
    for item in v {
        let wrapped = serde_json::Value::Array(vec![item.clone(), serde_json::Value::from(1)]);
        let rq: Rq = serde_json::from_value(wrapped).map_err(|e| e.to_string())?;
        parts.push(rq.0.to_integer());
    }
    if parts[1] <= 0.into() || parts[3] <= 0.into() {
        return Err("interval denominators must be positive".into());
    }
    let lo = Rat::new(parts[0].clone(), parts[1].clone());
    let hi = Rat::new(parts[2].clone(), parts[3].clone());
    Ok((lo, hi))
}

impl Serialize for Window {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        quad_to_json(&self.lo, &self.hi).serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Window {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<serde_json::Value> = Vec::deserialize(de)?;
        let (lo, hi) = quad_from_json(&v).map_err(D::Error::custom)?;
        Window::new(lo, hi).map_err(|e| D::Error::custom(e.to_string()))
    }
}

impl Serialize for IntervalUnion {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = ser.serialize_struct("IntervalUnion", 2)?;
        let ivs: Vec<Vec<serde_json::Value>> =
            self.intervals.iter().map(|iv| quad_to_json(&iv.lo, &iv.hi)).collect();
        st.serialize_field("intervals", &ivs)?;
        st.serialize_field("window", &self.window)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for IntervalUnion {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            intervals: Vec<Vec<serde_json::Value>>,
            window: Window,
        }
        let raw = Raw::deserialize(de)?;
        let mut ivs = Vec::with_capacity(raw.intervals.len());
        for q in &raw.intervals {
            let (lo, hi) = quad_from_json(q).map_err(D::Error::custom)?;
            ivs.push(Interval { lo, hi });
        }
        // Re-normalizing keeps the invariant even for hand-edited files.
        Ok(normalize(ivs, raw.window))
    }
}

/// Total order on interval unions for canonical sorting in outputs.
pub fn cmp_unions(a: &IntervalUnion, b: &IntervalUnion) -> Ordering {
    a.intervals
        .iter()
        .map(|iv| (&iv.lo, &iv.hi))
        .cmp(b.intervals.iter().map(|iv| (&iv.lo, &iv.hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn u(pairs: &[(i64, i64, i64, i64)]) -> IntervalUnion {
        let raw = pairs
            .iter()
            .map(|&(a, b, c, d)| Interval::new(rat(a, b), rat(c, d)))
            .collect();
        normalize(raw, Window::unit())
    }

    #[test]
    fn normalize_merges_adjacent() {
        let got = u(&[(0, 1, 1, 2), (1, 2, 1, 1)]);
        assert_eq!(got, u(&[(0, 1, 1, 1)]));
    }

    #[test]
    fn normalize_merges_overlap() {
        let got = u(&[(1, 3, 1, 1), (0, 1, 2, 3)]);
        assert_eq!(got, u(&[(0, 1, 1, 1)]));
    }

    #[test]
    fn normalize_drops_empty() {
        let got = u(&[(1, 4, 1, 4)]);
        assert!(got.is_empty());
    }

    #[test]
    fn normalize_idempotent() {
        let once = u(&[(0, 1, 1, 2), (1, 3, 2, 3), (5, 6, 1, 1)]);
        let twice = normalize(once.intervals().to_vec(), Window::unit());
        assert_eq!(once, twice);
    }

    #[test]
    fn union_examples() {
        let a = u(&[(0, 1, 1, 4)]);
        let b = u(&[(1, 2, 1, 1)]);
        assert_eq!(a.union(&b).unwrap(), u(&[(0, 1, 1, 4), (1, 2, 1, 1)]));
        let e = IntervalUnion::empty(Window::unit());
        assert_eq!(a.union(&e).unwrap(), a);
        let c = u(&[(0, 1, 1, 2)]);
        let d = u(&[(1, 4, 3, 4)]);
        assert_eq!(c.union(&d).unwrap(), u(&[(0, 1, 3, 4)]));
    }

    #[test]
    fn union_window_mismatch() {
        let a = u(&[(0, 1, 1, 4)]);
        let w2 = Window::new(rat(1, 1), rat(2, 1)).unwrap();
        let b = IntervalUnion::full(w2);
        assert!(matches!(a.union(&b), Err(Error::WindowMismatch)));
    }

    #[test]
    fn intersect_examples() {
        let a = u(&[(0, 1, 2, 3)]);
        let b = u(&[(1, 3, 1, 1)]);
        assert_eq!(a.intersect(&b).unwrap(), u(&[(1, 3, 2, 3)]));
        let full = IntervalUnion::full(Window::unit());
        assert_eq!(a.intersect(&full).unwrap(), a);
        let c = u(&[(0, 1, 1, 4)]);
        let d = u(&[(1, 2, 1, 1)]);
        assert!(c.intersect(&d).unwrap().is_empty());
    }

    #[test]
    fn complement_examples() {
        assert!(IntervalUnion::full(Window::unit()).complement_within().is_empty());
        assert_eq!(
            IntervalUnion::empty(Window::unit()).complement_within(),
            IntervalUnion::full(Window::unit())
        );
        assert_eq!(
            u(&[(1, 4, 1, 2)]).complement_within(),
            u(&[(0, 1, 1, 4), (1, 2, 1, 1)])
        );
    }

    #[test]
    fn measure_examples() {
        assert_eq!(u(&[(0, 1, 1, 4), (1, 2, 1, 1)]).measure(), rat(3, 4));
        assert_eq!(IntervalUnion::empty(Window::unit()).measure(), rat(0, 1));
        assert_eq!(IntervalUnion::full(Window::unit()).measure(), rat(1, 1));
    }

    #[test]
    fn measure_plus_complement_is_window_length() {
        let a = u(&[(1, 8, 1, 3), (1, 2, 7, 9)]);
        assert_eq!(a.measure() + a.complement_within().measure(), rat(1, 1));
    }

    #[test]
    fn kfold_examples() {
        let sets = vec![u(&[(0, 1, 2, 3)]), u(&[(1, 3, 1, 1)])];
        assert_eq!(kfold_region(&sets, 2).unwrap(), u(&[(1, 3, 2, 3)]));
        let all = kfold_region(&sets, 1).unwrap();
        assert_eq!(all, sets[0].union(&sets[1]).unwrap());
        assert_eq!(kfold_region(&sets, 0).unwrap(), IntervalUnion::full(Window::unit()));
        assert!(kfold_region(&sets, 3).unwrap().is_empty());
    }

    #[test]
    fn contains_point_examples() {
        let a = u(&[(0, 1, 1, 2)]);
        assert!(!a.contains_point(&rat(1, 2)));
        assert!(a.contains_point(&rat(0, 1)));
        let merged = u(&[(0, 1, 1, 2), (1, 2, 1, 1)]);
        assert!(merged.contains_point(&rat(3, 4)));
    }
}
