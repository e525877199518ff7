//! Lazy presentations of infinite sequences {A_n} of interval unions.
//!
//! Families are pure generators: the same index always yields a structurally
//! identical set, and the random family derives each set from (seed, n) by a
//! counter-based construction so access order is irrelevant.
//!
//! Each family also exposes `range_union`, the union of a contiguous index
//! range. For the builtin structured families this has a closed form, which
//! is what makes deep block construction tractable: block lengths grow
//! geometrically for the dyadic family, far past anything a per-index scan
//! could touch.

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::measure_sets::{normalize, Interval, IntervalUnion, Window};
use crate::rational::{parse_rat, rat_u64, Rat};
use crate::rng::{self, draw};

/// What a file-backed family does past its finite prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Continuation {
    #[serde(rename = "repeat")]
    Repeat,
    #[serde(rename = "dyadic-after")]
    DyadicAfter,
    #[serde(rename = "error-after")]
    ErrorAfter,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    /// Level L contributes the 2^L dyadic intervals, concatenated over L:
    /// A_0 = [0,1); A_1, A_2 the halves; A_3..A_6 the quarters; and so on.
    Dyadic,
    /// A_n = [n*step mod 1, n*step + length mod 1); wrapping splits in two.
    Rotation { step: Rat, length: Rat },
    /// Uniform left endpoints, shrinking lengths 1/(n/4 + 2). The divergent
    /// length sum makes i.o. coverage plausible but it is not certified;
    /// statistical use only.
    Random { seed: u64 },
    /// Finite prefix from a file plus an explicit continuation rule.
    File { sets: Vec<IntervalUnion>, continuation: Continuation },
}

/// A lazy cover family over a window.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverFamily {
    window: Window,
    kind: FamilyKind,
}

/// Largest L with 2^L - 1 <= n, i.e. the dyadic level containing index n.
fn dyadic_level(n: u64) -> u32 {
    63 - (n + 1).leading_zeros()
}

impl CoverFamily {
    pub fn dyadic(window: Window) -> CoverFamily {
        CoverFamily { window, kind: FamilyKind::Dyadic }
    }

    pub fn dyadic_unit() -> CoverFamily {
        Self::dyadic(Window::unit())
    }

    pub fn rotation(window: Window, step: Rat, length: Rat) -> Result<CoverFamily> {
        for (name, v) in [("step", &step), ("length", &length)] {
            if !v.is_positive() || *v >= Rat::one() {
                return Err(Error::InvalidParameter(format!(
                    "rotation {name} must lie in (0,1), got {v}"
                )));
            }
        }
        Ok(CoverFamily { window, kind: FamilyKind::Rotation { step, length } })
    }

    pub fn shrinking_random(window: Window, seed: u64) -> CoverFamily {
        CoverFamily { window, kind: FamilyKind::Random { seed } }
    }

    pub fn from_sets(
        window: Window,
        sets: Vec<IntervalUnion>,
        continuation: Continuation,
    ) -> Result<CoverFamily> {
        if sets.is_empty() {
            return Err(Error::Malformed("file family needs at least one set".into()));
        }
        for (i, s) in sets.iter().enumerate() {
            if *s.window() != window {
                return Err(Error::Malformed(format!(
                    "set {i} escapes the family window"
                )));
            }
        }
        Ok(CoverFamily { window, kind: FamilyKind::File { sets, continuation } })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    /// Affine map from unit coordinates into the window.
    fn scale(&self, x: Rat) -> Rat {
        self.window.lo() + self.window.length() * x
    }

    fn scaled_interval(&self, lo: Rat, hi: Rat) -> Interval {
        Interval::new(self.scale(lo), self.scale(hi))
    }

    /// Interval(s) in unit coordinates for [start, start+length) mod 1.
    fn wrapped(&self, start: Rat, length: Rat) -> Vec<Interval> {
        let one = Rat::one();
        let start = &start - start.floor();
        let end = &start + &length;
        if end <= one {
            vec![self.scaled_interval(start, end)]
        } else {
            vec![
                self.scaled_interval(start, one.clone()),
                self.scaled_interval(Rat::zero(), end - one),
            ]
        }
    }

    /// The n-th set of the family.
    pub fn get(&self, n: u64) -> Result<IntervalUnion> {
        match &self.kind {
            FamilyKind::Dyadic => {
                let level = dyadic_level(n);
                let cell = n - ((1u64 << level) - 1);
                let den = rat_u64(1u64 << level);
                let lo = rat_u64(cell) / &den;
                let hi = rat_u64(cell + 1) / &den;
                Ok(normalize(vec![self.scaled_interval(lo, hi)], self.window.clone()))
            }
            FamilyKind::Rotation { step, length } => {
                let start = rat_u64(n) * step;
                Ok(normalize(self.wrapped(start, length.clone()), self.window.clone()))
            }
            FamilyKind::Random { seed } => {
                let length = rat_u64(1) / rat_u64(n / 4 + 2);
                // 53-bit uniform start position.
                let u = draw(*seed, rng::domain::FAMILY, n) >> 11;
                let start = rat_u64(u) / rat_u64(1u64 << 53);
                Ok(normalize(self.wrapped(start, length), self.window.clone()))
            }
            FamilyKind::File { sets, continuation } => {
                let len = sets.len() as u64;
                if n < len {
                    return Ok(sets[n as usize].clone());
                }
                match continuation {
                    Continuation::Repeat => Ok(sets[(n % len) as usize].clone()),
                    Continuation::DyadicAfter => {
                        CoverFamily::dyadic(self.window.clone()).get(n - len)
                    }
                    Continuation::ErrorAfter => Err(Error::IndexOutOfRange {
                        index: n,
                        reason: format!(
                            "family declares error-after with {len} sets"
                        ),
                    }),
                }
            }
        }
    }

    /// Whether `range_union` is cheap enough for a galloping boundary search
    /// (closed form or bounded fold), as opposed to per-index work.
    pub fn fast_range(&self) -> bool {
        match &self.kind {
            FamilyKind::Dyadic | FamilyKind::Rotation { .. } => true,
            FamilyKind::File { continuation, .. } => {
                matches!(continuation, Continuation::Repeat | Continuation::DyadicAfter)
            }
            FamilyKind::Random { .. } => false,
        }
    }

    /// Union of A_a, .., A_{b-1}. Closed form for the structured families;
    /// a metered fold otherwise.
    pub fn range_union(&self, a: u64, b: u64, budget: &Budget) -> Result<IntervalUnion> {
        if a >= b {
            return Ok(IntervalUnion::empty(self.window.clone()));
        }
        match &self.kind {
            FamilyKind::Dyadic => Ok(self.dyadic_range_union(a, b)),
            FamilyKind::Rotation { step, .. } => {
                // Sets repeat with period q (step = p/q in lowest terms), so a
                // fold over at most q consecutive indices is exhaustive.
                let q = step
                    .denom()
                    .try_into()
                    .map_err(|_| Error::SizeCap { context: "rotation period exceeds u64".into() })?;
                let b_eff = b.min(a.saturating_add(q));
                self.fold_range(a, b_eff, budget)
            }
            FamilyKind::File { sets, continuation } => {
                let len = sets.len() as u64;
                match continuation {
                    Continuation::Repeat => {
                        let b_eff = b.min(a.saturating_add(len));
                        self.fold_range(a, b_eff, budget)
                    }
                    Continuation::DyadicAfter => {
                        let prefix_end = b.min(len);
                        let mut acc = if a < prefix_end {
                            self.fold_range(a, prefix_end, budget)?
                        } else {
                            IntervalUnion::empty(self.window.clone())
                        };
                        if b > len {
                            let sub = CoverFamily::dyadic(self.window.clone());
                            let tail = sub.dyadic_range_union(a.saturating_sub(len).min(b - len), b - len);
                            acc = acc.union(&tail)?;
                        }
                        Ok(acc)
                    }
                    Continuation::ErrorAfter => self.fold_range(a, b, budget),
                }
            }
            FamilyKind::Random { .. } => self.fold_range(a, b, budget),
        }
    }

    fn fold_range(&self, a: u64, b: u64, budget: &Budget) -> Result<IntervalUnion> {
        let mut meter = budget.start(format!("folding family sets over [{a}, {b})"));
        let mut raw: Vec<Interval> = Vec::new();
        for n in a..b {
            meter.tick()?;
            raw.extend(self.get(n)?.intervals().iter().cloned());
        }
        Ok(normalize(raw, self.window.clone()))
    }

    fn dyadic_range_union(&self, a: u64, b: u64) -> IntervalUnion {
        let mut raw = Vec::new();
        let top = dyadic_level(b - 1);
        for level in dyadic_level(a)..=top {
            let first = (1u64 << level) - 1;
            let last = (1u64 << (level + 1)) - 1; // exclusive
            let lo_idx = a.max(first);
            let hi_idx = b.min(last);
            if lo_idx >= hi_idx {
                continue;
            }
            let den = rat_u64(1u64 << level);
            let lo = rat_u64(lo_idx - first) / &den;
            let hi = rat_u64(hi_idx - first) / &den;
            raw.push(self.scaled_interval(lo, hi));
        }
        normalize(raw, self.window.clone())
    }

    /// Structured descriptor for provenance embedding and reconstruction.
    pub fn spec(&self) -> FamilySpec {
        let (kind, params, seed) = match &self.kind {
            FamilyKind::Dyadic => ("dyadic".to_string(), None, None),
            FamilyKind::Rotation { step, length } => (
                "rotation".to_string(),
                Some(serde_json::json!({
                    "step": crate::rational::format_rat(step),
                    "length": crate::rational::format_rat(length),
                })),
                None,
            ),
            FamilyKind::Random { seed } => ("random".to_string(), None, Some(*seed)),
            FamilyKind::File { sets, continuation } => (
                "file".to_string(),
                Some(serde_json::json!({
                    "sets": sets,
                    "continuation": continuation,
                })),
                None,
            ),
        };
        FamilySpec { window: self.window.clone(), kind, params, seed }
    }

    pub fn from_spec(spec: &FamilySpec) -> Result<CoverFamily> {
        let window = spec.window.clone();
        match spec.kind.as_str() {
            "dyadic" => Ok(CoverFamily::dyadic(window)),
            "rotation" => {
                let params = spec
                    .params
                    .as_ref()
                    .ok_or_else(|| Error::Malformed("rotation family needs params".into()))?;
                let get = |name: &str| -> Result<Rat> {
                    let v = params
                        .get(name)
                        .and_then(|v| v.as_str())
                        .ok_or_else(|| Error::Malformed(format!("rotation needs string param {name:?}")))?;
                    parse_rat(v)
                };
                CoverFamily::rotation(window, get("step")?, get("length")?)
            }
            "random" => {
                let seed = spec
                    .seed
                    .ok_or_else(|| Error::Malformed("random family needs a seed".into()))?;
                Ok(CoverFamily::shrinking_random(window, seed))
            }
            "file" => {
                let params = spec
                    .params
                    .as_ref()
                    .ok_or_else(|| Error::Malformed("file family needs params".into()))?;
                let sets: Vec<IntervalUnion> = serde_json::from_value(
                    params
                        .get("sets")
                        .cloned()
                        .ok_or_else(|| Error::Malformed("file family needs sets".into()))?,
                )?;
                let continuation: Continuation = serde_json::from_value(
                    params
                        .get("continuation")
                        .cloned()
                        .ok_or_else(|| Error::Malformed("file family needs a continuation rule".into()))?,
                )?;
                CoverFamily::from_sets(window, sets, continuation)
            }
            other => Err(Error::Malformed(format!("unknown family kind {other:?}"))),
        }
    }

    /// Loads a family spec from a JSON file.
    pub fn from_file(path: &std::path::Path) -> Result<CoverFamily> {
        let text = std::fs::read_to_string(path)?;
        let spec: FamilySpec = serde_json::from_str(&text)?;
        CoverFamily::from_spec(&spec)
    }
}

/// JSON family spec:
/// {"window": ..., "kind": "dyadic"|"rotation"|"random"|"file",
///  "params": {...}, "seed": uint64?}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub window: Window,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// A sigma-finite family: pairwise disjoint windows, each carrying its own
/// cover family.
#[derive(Debug, Clone)]
pub struct SigmaFiniteFamily {
    pieces: Vec<CoverFamily>,
}

impl SigmaFiniteFamily {
    pub fn new(pieces: Vec<CoverFamily>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidParameter("sigma-finite family needs pieces".into()));
        }
        for i in 0..pieces.len() {
            for j in (i + 1)..pieces.len() {
                let (a, b) = (pieces[i].window(), pieces[j].window());
                if a.lo() < b.hi() && b.lo() < a.hi() {
                    return Err(Error::InvalidParameter(format!(
                        "windows {i} and {j} overlap"
                    )));
                }
            }
        }
        Ok(SigmaFiniteFamily { pieces })
    }

    pub fn pieces(&self) -> &[CoverFamily] {
        &self.pieces
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_sets::kfold_region;
    use crate::rational::rat;

    fn unit_ivu(pairs: &[(i64, i64, i64, i64)]) -> IntervalUnion {
        let raw = pairs
            .iter()
            .map(|&(a, b, c, d)| Interval::new(rat(a, b), rat(c, d)))
            .collect();
        normalize(raw, Window::unit())
    }

    #[test]
    fn dyadic_examples() {
        let f = CoverFamily::dyadic_unit();
        assert_eq!(f.get(0).unwrap(), unit_ivu(&[(0, 1, 1, 1)]));
        assert_eq!(f.get(1).unwrap(), unit_ivu(&[(0, 1, 1, 2)]));
        assert_eq!(f.get(2).unwrap(), unit_ivu(&[(1, 2, 1, 1)]));
        assert_eq!(f.get(4).unwrap(), unit_ivu(&[(1, 4, 1, 2)]));
        assert_eq!(f.get(6).unwrap(), unit_ivu(&[(3, 4, 1, 1)]));
    }

    #[test]
    fn dyadic_one_hit_per_level() {
        let f = CoverFamily::dyadic_unit();
        for x in [rat(1, 3), rat(2, 5), rat(7, 8)] {
            for levels in 1..=6u32 {
                let n_max = (1u64 << levels) - 1;
                let hits = (0..n_max)
                    .filter(|&n| f.get(n).unwrap().contains_point(&x))
                    .count() as u32;
                assert_eq!(hits, levels, "x={x} levels={levels}");
            }
        }
    }

    #[test]
    fn dyadic_kfold_full_window_per_level() {
        let f = CoverFamily::dyadic_unit();
        for level in 0..=6u32 {
            let n_max = (1u64 << (level + 1)) - 1;
            let sets: Vec<_> = (0..n_max).map(|n| f.get(n).unwrap()).collect();
            let region = kfold_region(&sets, (level + 1) as usize).unwrap();
            assert_eq!(region, IntervalUnion::full(Window::unit()), "level={level}");
        }
    }

    #[test]
    fn dyadic_range_union_matches_fold() {
        let f = CoverFamily::dyadic_unit();
        let budget = Budget::from_env();
        for (a, b) in [(0, 1), (0, 7), (3, 9), (5, 21), (9, 21), (14, 14), (1, 2)] {
            let fast = f.range_union(a, b, &budget).unwrap();
            let slow = f.fold_range(a, b, &budget).unwrap();
            assert_eq!(fast, slow, "range [{a}, {b})");
        }
    }

    #[test]
    fn rotation_examples() {
        let f = CoverFamily::rotation(Window::unit(), rat(1, 3), rat(1, 2)).unwrap();
        assert_eq!(f.get(0).unwrap(), unit_ivu(&[(0, 1, 1, 2)]));
        assert_eq!(f.get(1).unwrap(), unit_ivu(&[(1, 3, 5, 6)]));
        assert_eq!(f.get(2).unwrap(), unit_ivu(&[(2, 3, 1, 1), (0, 1, 1, 6)]));
        for n in 0..=100u64 {
            assert_eq!(f.get(n).unwrap().measure(), rat(1, 2), "n={n}");
        }
        // Any 3 consecutive sets cover the window.
        let u = f.range_union(0, 3, &Budget::from_env()).unwrap();
        assert_eq!(u, IntervalUnion::full(Window::unit()));
    }

    #[test]
    fn rotation_rejects_bad_params() {
        assert!(CoverFamily::rotation(Window::unit(), rat(0, 1), rat(1, 2)).is_err());
        assert!(CoverFamily::rotation(Window::unit(), rat(1, 3), rat(3, 2)).is_err());
    }

    #[test]
    fn rotation_kfold_multiplicity() {
        let f = CoverFamily::rotation(Window::unit(), rat(1, 3), rat(1, 2)).unwrap();
        for m in 1..=20usize {
            let sets: Vec<_> = (0..3 * m as u64).map(|n| f.get(n).unwrap()).collect();
            let region = kfold_region(&sets, m).unwrap();
            assert_eq!(region, IntervalUnion::full(Window::unit()), "m={m}");
        }
    }

    #[test]
    fn random_family_is_deterministic_and_seed_sensitive() {
        let w = Window::unit();
        let f1 = CoverFamily::shrinking_random(w.clone(), 11);
        let f2 = CoverFamily::shrinking_random(w.clone(), 11);
        assert_eq!(f1.get(5).unwrap(), f2.get(5).unwrap());
        for n in 0..40u64 {
            assert_eq!(f1.get(n).unwrap().measure(), rat(1, (n / 4 + 2) as i64));
        }
        let g = CoverFamily::shrinking_random(w, 12);
        assert!((0..10u64).any(|n| f1.get(n).unwrap() != g.get(n).unwrap()));
    }

    #[test]
    fn file_family_continuations() {
        let w = Window::unit();
        let sets = vec![
            unit_ivu(&[(0, 1, 1, 2)]),
            unit_ivu(&[(1, 2, 1, 1)]),
            unit_ivu(&[(1, 4, 3, 4)]),
        ];
        let repeat = CoverFamily::from_sets(w.clone(), sets.clone(), Continuation::Repeat).unwrap();
        assert_eq!(repeat.get(5).unwrap(), repeat.get(2).unwrap());

        let err_after =
            CoverFamily::from_sets(w.clone(), sets.clone(), Continuation::ErrorAfter).unwrap();
        assert!(matches!(err_after.get(3), Err(Error::IndexOutOfRange { .. })));

        let dy = CoverFamily::from_sets(w, sets, Continuation::DyadicAfter).unwrap();
        assert_eq!(dy.get(3).unwrap(), unit_ivu(&[(0, 1, 1, 1)]));
        assert_eq!(dy.get(7).unwrap(), unit_ivu(&[(1, 4, 1, 2)]));
    }

    #[test]
    fn file_family_rejects_escaping_sets() {
        let w2 = Window::new(rat(0, 1), rat(2, 1)).unwrap();
        let escaping = normalize(vec![Interval::new(rat(0, 1), rat(3, 2))], w2);
        assert!(CoverFamily::from_sets(Window::unit(), vec![escaping], Continuation::Repeat).is_err());
    }

    #[test]
    fn spec_round_trip() {
        let fams = vec![
            CoverFamily::dyadic_unit(),
            CoverFamily::rotation(Window::unit(), rat(1, 3), rat(1, 2)).unwrap(),
            CoverFamily::shrinking_random(Window::unit(), 99),
            CoverFamily::from_sets(
                Window::unit(),
                vec![unit_ivu(&[(0, 1, 1, 1)])],
                Continuation::Repeat,
            )
            .unwrap(),
        ];
        for f in fams {
            let spec = f.spec();
            let text = serde_json::to_string(&spec).unwrap();
            let back = CoverFamily::from_spec(&serde_json::from_str(&text).unwrap()).unwrap();
            assert_eq!(back, f);
        }
    }

    #[test]
    fn sigma_finite_rejects_overlap() {
        let w1 = Window::unit();
        let w2 = Window::new(rat(1, 2), rat(3, 2)).unwrap();
        let pieces = vec![CoverFamily::dyadic(w1), CoverFamily::dyadic(w2)];
        assert!(SigmaFiniteFamily::new(pieces).is_err());
    }

    #[test]
    fn generator_purity() {
        let f = CoverFamily::rotation(Window::unit(), rat(2, 7), rat(1, 3)).unwrap();
        for n in 0..50u64 {
            assert_eq!(f.get(n).unwrap(), f.get(n).unwrap());
        }
    }
}
