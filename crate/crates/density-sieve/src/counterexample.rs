//! The combinatorial counterexample on Cantor space.
//!
//! A block system of clopen cylinders is built so that each block partitions
//! the space, each block refines the previous one, and every parent's
//! immediate successors span an index range (t, s) with s >= 2t. That growth
//! lets any density-zero index set be defeated: past its density-1/2
//! threshold, every parent has a successor whose index escapes the set, so a
//! nested chain (hence a point) is covered only finitely often.
//!
//! Block sizes grow like iterated doubling, so indices reach ~2^127 by depth
//! four; blocks too large to materialize are kept as child ranges, and
//! anything past that fails with a size-cap error rather than an attempt.

use num::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::index_sets::{isqrt_u128, IndexSet};
use crate::rational::rat;

/// Largest block materialized as explicit cylinders.
const EXPLICIT_CAP: u128 = 4096;
/// Largest number of child ranges per block (= parent block size).
const RANGE_CAP: u128 = 1 << 16;

/// A clopen cylinder: all infinite binary sequences extending the prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cylinder {
    bits: Vec<bool>,
}

impl Cylinder {
    pub fn root() -> Self {
        Cylinder { bits: Vec::new() }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Cylinder { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Whether self's prefix extends other's (self ⊆ other as sets).
    pub fn extends(&self, other: &Cylinder) -> bool {
        self.bits.len() >= other.bits.len() && self.bits[..other.bits.len()] == other.bits[..]
    }

    /// Two cylinders are disjoint iff neither prefix extends the other.
    pub fn disjoint(&self, other: &Cylinder) -> bool {
        !self.extends(other) && !other.extends(self)
    }

    /// The child obtained by appending `bits` low-to-high from `value`
    /// (most significant first, width `width`).
    fn child(&self, value: u128, width: u32) -> Cylinder {
        let mut bits = self.bits.clone();
        for i in (0..width).rev() {
            bits.push(value >> i & 1 == 1);
        }
        Cylinder { bits }
    }

    pub fn to_bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn from_bit_string(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => {
                    return Err(Error::Malformed(format!(
                        "cylinder bit strings use 0/1 only, got {other:?}"
                    )))
                }
            }
        }
        Ok(Cylinder { bits })
    }
}

impl Serialize for Cylinder {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_bit_string().serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Cylinder {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        Cylinder::from_bit_string(&s).map_err(serde::de::Error::custom)
    }
}

fn u128_to_json(n: u128) -> String {
    n.to_string()
}

fn u128_from_json(s: &str) -> Result<u128> {
    s.parse().map_err(|_| Error::Malformed(format!("not a u128: {s:?}")))
}

/// The immediate successors of one parent: indices start .. start + 2^child_bits,
/// realized as the parent's equal dyadic refinements by child_bits extra bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChildRange {
    pub parent: u128,
    pub start: u128,
    pub child_bits: u32,
}

impl ChildRange {
    pub fn count(&self) -> u128 {
        1u128 << self.child_bits
    }

    /// Last child index s (the range is t..=s with t = start).
    pub fn last(&self) -> u128 {
        self.start + self.count() - 1
    }
}

impl Serialize for ChildRange {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = ser.serialize_struct("ChildRange", 3)?;
        st.serialize_field("parent", &u128_to_json(self.parent))?;
        st.serialize_field("start", &u128_to_json(self.start))?;
        st.serialize_field("child_bits", &self.child_bits)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for ChildRange {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            parent: String,
            start: String,
            child_bits: u32,
        }
        let raw = Raw::deserialize(de)?;
        Ok(ChildRange {
            parent: u128_from_json(&raw.parent).map_err(serde::de::Error::custom)?,
            start: u128_from_json(&raw.start).map_err(serde::de::Error::custom)?,
            child_bits: raw.child_bits,
        })
    }
}

/// One block's representation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockRep {
    /// Materialized cylinders plus the ranges that produced them (block 1
    /// has no ranges).
    Explicit { ranges: Vec<ChildRange>, sets: Vec<Cylinder> },
    /// Only the child ranges; cylinders are derived on demand.
    Ranged { ranges: Vec<ChildRange> },
}

impl BlockRep {
    fn ranges(&self) -> &[ChildRange] {
        match self {
            BlockRep::Explicit { ranges, .. } | BlockRep::Ranged { ranges } => ranges,
        }
    }
}

/// The clopen block system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CantorBlockSystem {
    /// N_0 = 0 < N_1 < ... < N_K.
    boundaries: Vec<u128>,
    /// blocks[k-1] describes block k (sets N_{k-1} .. N_k - 1).
    blocks: Vec<BlockRep>,
}

impl CantorBlockSystem {
    /// Assembles a system without validation; `validate_system` is the
    /// judge. Exposed so tests can inject faults.
    pub fn from_raw(boundaries: Vec<u128>, blocks: Vec<BlockRep>) -> Self {
        CantorBlockSystem { boundaries, blocks }
    }

    pub fn boundaries(&self) -> &[u128] {
        &self.boundaries
    }

    pub fn blocks(&self) -> &[BlockRep] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [BlockRep] {
        &mut self.blocks
    }

    pub fn depth(&self) -> usize {
        self.blocks.len()
    }

    pub fn last_boundary(&self) -> u128 {
        *self.boundaries.last().unwrap()
    }

    /// Which block (1-indexed) holds set index n.
    pub fn block_of(&self, n: u128) -> Result<usize> {
        if n >= self.last_boundary() {
            return Err(Error::IndexOutOfRange {
                index: n.to_u64().unwrap_or(u64::MAX),
                reason: "set index beyond the built depth".into(),
            });
        }
        Ok(self.boundaries.partition_point(|&b| b <= n))
    }

    /// The cylinder of set index n, deriving through the ranges if needed.
    pub fn cylinder(&self, n: u128) -> Result<Cylinder> {
        let k = self.block_of(n)?;
        match &self.blocks[k - 1] {
            BlockRep::Explicit { sets, .. } => {
                Ok(sets[(n - self.boundaries[k - 1]) as usize].clone())
            }
            BlockRep::Ranged { ranges } => {
                let idx = ranges.partition_point(|r| r.start <= n);
                if idx == 0 {
                    return Err(Error::Malformed(format!("no child range covers index {n}")));
                }
                let r = &ranges[idx - 1];
                if n > r.last() {
                    return Err(Error::Malformed(format!("no child range covers index {n}")));
                }
                let parent = self.cylinder(r.parent)?;
                Ok(parent.child(n - r.start, r.child_bits))
            }
        }
    }
}

/// Builds the system: block 1 is the full space; in block k+1 the parents
/// are processed in index order, parent i's children starting at the running
/// index t_i with the smallest power-of-two count >= t_i + 2 (so the last
/// child index s_i = t_i + count - 1 satisfies s_i >= 2 t_i).
pub fn build_cantor_system(depth: usize) -> Result<CantorBlockSystem> {
    if depth == 0 {
        return Err(Error::InvalidParameter("depth must be at least 1".into()));
    }
    let mut boundaries: Vec<u128> = vec![0, 1];
    let mut blocks = vec![BlockRep::Explicit { ranges: Vec::new(), sets: vec![Cylinder::root()] }];
    for k in 2..=depth {
        let parent_lo = boundaries[k - 2];
        let parent_hi = boundaries[k - 1];
        if parent_hi - parent_lo > RANGE_CAP {
            return Err(Error::SizeCap {
                context: format!(
                    "block {k} needs {} child ranges (cap {RANGE_CAP}); \
                     the system is not representable at this depth",
                    parent_hi - parent_lo
                ),
            });
        }
        let mut t = parent_hi;
        let mut ranges = Vec::with_capacity((parent_hi - parent_lo) as usize);
        for parent in parent_lo..parent_hi {
            let needed = t.checked_add(2).ok_or_else(|| Error::SizeCap {
                context: format!("block {k} indices overflow u128"),
            })?;
            let child_bits = needed.next_power_of_two().trailing_zeros();
            if child_bits >= 127 {
                return Err(Error::SizeCap {
                    context: format!("block {k} child counts overflow u128"),
                });
            }
            let range = ChildRange { parent, start: t, child_bits };
            t = range.start.checked_add(range.count()).ok_or_else(|| Error::SizeCap {
                context: format!("block {k} indices overflow u128"),
            })?;
            ranges.push(range);
        }
        boundaries.push(t);
        let size = t - parent_hi;
        if size <= EXPLICIT_CAP {
            let partial = CantorBlockSystem {
                boundaries: boundaries.clone(),
                blocks: {
                    let mut b = blocks.clone();
                    b.push(BlockRep::Ranged { ranges: ranges.clone() });
                    b
                },
            };
            let sets = (parent_hi..t)
                .map(|n| partial.cylinder(n))
                .collect::<Result<Vec<_>>>()?;
            blocks.push(BlockRep::Explicit { ranges, sets });
        } else {
            blocks.push(BlockRep::Ranged { ranges });
        }
    }
    Ok(CantorBlockSystem { boundaries, blocks })
}

/// Pass/fail of one Example property with its first counterwitness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub passed: bool,
    pub counterwitness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub partition: PropertyCheck,
    pub refinement: PropertyCheck,
    pub growth: PropertyCheck,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.partition.passed && self.refinement.passed && self.growth.passed
    }
}

fn check(name: &str, witness: Option<String>) -> PropertyCheck {
    PropertyCheck { name: name.into(), passed: witness.is_none(), counterwitness: witness }
}

/// Exact partition check for a list of cylinders: pairwise disjoint and
/// total measure 1. Prefix lengths must fit the u128 scaling.
fn partition_witness(sets: &[Cylinder]) -> Option<String> {
    let max_len = sets.iter().map(Cylinder::len).max().unwrap_or(0);
    if max_len > 120 {
        return Some("prefixes too long for the exact partition check".into());
    }
    // Map each cylinder to the dyadic interval of its prefix value.
    let mut spans: Vec<(u128, u128, &Cylinder)> = sets
        .iter()
        .map(|c| {
            let mut v: u128 = 0;
            for &b in c.bits() {
                v = v << 1 | b as u128;
            }
            let width = 1u128 << (max_len - c.len());
            (v << (max_len - c.len()), width, c)
        })
        .collect();
    spans.sort_by_key(|&(lo, _, _)| lo);
    let mut cursor: u128 = 0;
    for (lo, width, c) in &spans {
        if *lo < cursor {
            return Some(format!("cylinder {} overlaps its predecessor", c.to_bit_string()));
        }
        if *lo > cursor {
            return Some(format!("gap before cylinder {}", c.to_bit_string()));
        }
        cursor = lo + width;
    }
    if cursor != 1u128 << max_len {
        return Some("cylinders do not exhaust the space".into());
    }
    None
}

/// Exact check of the three Example properties. Explicit blocks are checked
/// by full prefix combinatorics; ranged blocks by the structural facts their
/// representation encodes (contiguous index ranges, each parent exactly
/// once, children the complete power-of-two refinement).
pub fn validate_system(sys: &CantorBlockSystem) -> ValidationReport {
    let mut partition = None;
    let mut refinement = None;
    let mut growth = None;

    for k in 1..=sys.depth() {
        let rep = &sys.blocks()[k - 1];
        let lo = sys.boundaries()[k - 1];
        let hi = sys.boundaries()[k];

        // Property 1: the block partitions the space.
        if partition.is_none() {
            partition = match rep {
                BlockRep::Explicit { sets, .. } => {
                    if sets.len() as u128 != hi - lo {
                        Some(format!("block {k}: {} sets for {} indices", sets.len(), hi - lo))
                    } else {
                        partition_witness(sets).map(|w| format!("block {k}: {w}"))
                    }
                }
                BlockRep::Ranged { ranges } => {
                    let mut w = None;
                    let mut cursor = lo;
                    let parent_lo = sys.boundaries()[k - 2];
                    for (i, r) in ranges.iter().enumerate() {
                        if r.parent != parent_lo + i as u128 {
                            w = Some(format!("block {k}: range {i} skips parent order"));
                            break;
                        }
                        if r.start != cursor {
                            w = Some(format!("block {k}: range {i} leaves index gap at {cursor}"));
                            break;
                        }
                        cursor = r.start + r.count();
                    }
                    if w.is_none() && (cursor != hi || ranges.len() as u128 != sys.boundaries()[k - 1] - parent_lo)
                    {
                        w = Some(format!("block {k}: ranges do not tile the block"));
                    }
                    w
                }
            };
        }

        // Property 2: refinement of the previous block.
        if refinement.is_none() && k >= 2 {
            refinement = match rep {
                BlockRep::Explicit { ranges, sets } => {
                    let mut w = None;
                    'outer: for r in ranges {
                        let parent = match sys.cylinder(r.parent) {
                            Ok(c) => c,
                            Err(e) => {
                                w = Some(format!("block {k}: parent {} unresolvable: {e}", r.parent));
                                break;
                            }
                        };
                        for n in r.start..=r.last() {
                            let child = match sets.get((n - lo) as usize) {
                                Some(c) => c,
                                None => {
                                    w = Some(format!("block {k}: set {n} missing"));
                                    break 'outer;
                                }
                            };
                            if !child.extends(&parent) {
                                w = Some(format!(
                                    "block {k}: set {n} ({}) does not extend parent {} ({})",
                                    child.to_bit_string(),
                                    r.parent,
                                    parent.to_bit_string()
                                ));
                                break 'outer;
                            }
                        }
                    }
                    w
                }
                BlockRep::Ranged { ranges } => {
                    // Derived children extend their parents by construction;
                    // check the parents are resolvable and properly indexed.
                    let parent_lo = sys.boundaries()[k - 2];
                    let parent_hi = sys.boundaries()[k - 1];
                    ranges
                        .iter()
                        .find(|r| {
                            r.parent < parent_lo || r.parent >= parent_hi || r.child_bits == 0
                        })
                        .map(|r| format!("block {k}: bad range for parent {}", r.parent))
                }
            };
        }

        // Property 3: s >= 2t for every child range.
        if growth.is_none() {
            growth = rep
                .ranges()
                .iter()
                .find(|r| r.last() < 2 * r.start)
                .map(|r| format!("block {k}: parent {} has (t, s) = ({}, {})", r.parent, r.start, r.last()));
        }
    }

    ValidationReport {
        partition: check("partition", partition),
        refinement: check("refinement", refinement),
        growth: check("s >= 2t", growth),
    }
}

/// A point of Cantor space at finite precision; bits beyond the stored
/// prefix follow the all-zeros convention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CantorPoint {
    bits: Vec<bool>,
}

impl CantorPoint {
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// The point's bit at position i under the all-zeros continuation.
    fn bit(&self, i: usize) -> bool {
        self.bits.get(i).copied().unwrap_or(false)
    }

    /// Whether the point lies in the cylinder.
    pub fn in_cylinder(&self, c: &Cylinder) -> bool {
        c.bits().iter().enumerate().all(|(i, &b)| self.bit(i) == b)
    }

    pub fn to_bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// The defeat of a density-zero index set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Defeat {
    /// Density-1/2 threshold of z (certified + scanned).
    pub n0: u64,
    /// First block wholly above n0 (1-indexed).
    pub start_block: usize,
    /// One chosen index per block from start_block..=depth; none lie in z.
    pub chain: Vec<u128>,
    /// The nested limit point.
    pub point: CantorPoint,
}

/// Upper bound on |z ∩ [0, n)| valid for u128-sized n; exact except for
/// tail unions, where parts may overlap (an overcount is sound here: it is
/// only used to prove an escape index exists).
fn hits_upper_bound(z: &IndexSet, n: u128) -> u128 {
    if let Ok(small) = u64::try_from(n) {
        return z.prefix_count(small) as u128;
    }
    match z {
        IndexSet::Ap(ap) => ap.closed_form_count(ap.depth()) as u128,
        IndexSet::Finite(v) => v.len() as u128,
        IndexSet::Squares { offset } => isqrt_u128(n - 1 - *offset as u128) + 1,
        IndexSet::Powers { base } => {
            let mut count: u128 = 0;
            let mut p: u128 = 1;
            while p < n {
                count += 1;
                if p > n / *base as u128 {
                    break;
                }
                p *= *base as u128;
            }
            count
        }
        IndexSet::Tails(parts) => parts.iter().map(|(set, _)| hits_upper_bound(set, n)).sum(),
    }
}

/// Picks, starting at the first block wholly above z's density-1/2 threshold,
/// one set per block whose index escapes z, each a child of the previous.
pub fn defeat(sys: &CantorBlockSystem, z: &IndexSet, budget: &Budget) -> Result<Defeat> {
    let n0 = z.density_threshold(&rat(1, 2), budget)?;
    let start_block = match (1..=sys.depth())
        .find(|&k| sys.boundaries()[k - 1] >= n0 as u128)
    {
        Some(k) => k,
        None => {
            return Err(Error::DepthInsufficient {
                depth: sys.depth(),
                reason: format!(
                    "no block starts at or above the density threshold n0 = {n0}; \
                     build a deeper system"
                ),
            })
        }
    };
    let mut meter = budget.start("escape-index probing");
    let mut chain = Vec::with_capacity(sys.depth() - start_block + 1);

    // Head of the chain: smallest index in the start block escaping z.
    let (lo, hi) = (sys.boundaries()[start_block - 1], sys.boundaries()[start_block]);
    let head = {
        let mut n = lo;
        loop {
            meter.tick()?;
            if n >= hi {
                return Err(Error::DepthInsufficient {
                    depth: sys.depth(),
                    reason: format!("every index of block {start_block} lies in z"),
                });
            }
            if !z.contains_u128(n) {
                break n;
            }
            n += 1;
        }
    };
    chain.push(head);

    // Recursive step: the smallest immediate successor escaping z. The
    // counting argument (successors s - t + 1 outnumber |z ∩ [0, s+1)|)
    // is checked for every parent on the way down.
    for k in start_block + 1..=sys.depth() {
        let parent = *chain.last().unwrap();
        let ranges = sys.blocks()[k - 1].ranges();
        let idx = ranges.partition_point(|r| r.parent <= parent);
        if idx == 0 || ranges[idx - 1].parent != parent {
            return Err(Error::Malformed(format!("block {k} has no range for parent {parent}")));
        }
        let r = &ranges[idx - 1];
        let (t, s) = (r.start, r.last());
        let successors = s - t + 1;
        let hits = hits_upper_bound(z, s + 1);
        if successors <= hits {
            return Err(Error::Malformed(format!(
                "successor-escape check failed at parent {parent}: \
                 {successors} successors vs {hits} possible hits"
            )));
        }
        let mut n = t;
        let pick = loop {
            meter.tick()?;
            if n > s {
                return Err(Error::Malformed(format!(
                    "no escape among successors of {parent} despite the count bound"
                )));
            }
            if !z.contains_u128(n) {
                break n;
            }
            n += 1;
        };
        chain.push(pick);
    }

    let point = CantorPoint { bits: sys.cylinder(*chain.last().unwrap())?.bits().to_vec() };
    Ok(Defeat { n0, start_block, chain, point })
}

/// |{ n in z, n < N_K : point in U_n }| exactly: blocks partition the space,
/// so the point lies in exactly one set per block, found by descending the
/// ranges.
pub fn coverage_count(sys: &CantorBlockSystem, point: &CantorPoint, z: &IndexSet) -> Result<u64> {
    let mut count = 0u64;
    let mut index: u128 = 0; // block 1's single set
    let mut consumed = 0usize; // point bits fixed so far
    for k in 1..=sys.depth() {
        if k >= 2 {
            let ranges = sys.blocks()[k - 1].ranges();
            let idx = ranges.partition_point(|r| r.parent <= index);
            if idx == 0 || ranges[idx - 1].parent != index {
                return Err(Error::Malformed(format!("block {k} has no range for parent {index}")));
            }
            let r = &ranges[idx - 1];
            let mut offset: u128 = 0;
            for i in 0..r.child_bits {
                offset = offset << 1 | point.bit(consumed + i as usize) as u128;
            }
            consumed += r.child_bits as usize;
            index = r.start + offset;
        }
        debug_assert!(point.in_cylinder(&sys.cylinder(index)?));
        if z.contains_u128(index) {
            count += 1;
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn budget() -> Budget {
        Budget::from_env()
    }

    #[test]
    fn depth_one_and_two_trace() {
        let s1 = build_cantor_system(1).unwrap();
        assert_eq!(s1.boundaries(), &[0, 1]);
        assert_eq!(s1.cylinder(0).unwrap(), Cylinder::root());

        let s2 = build_cantor_system(2).unwrap();
        assert_eq!(s2.boundaries(), &[0, 1, 5]);
        // Children of U_0: t = 1, count = next power of two >= 3 = 4,
        // the four 2-bit cylinders, s = 4 >= 2 * 1.
        let got: Vec<String> = (1..5).map(|n| s2.cylinder(n).unwrap().to_bit_string()).collect();
        assert_eq!(got, vec!["00", "01", "10", "11"]);
    }

    #[test]
    fn depth_three_boundaries() {
        let s = build_cantor_system(3).unwrap();
        // Parents 1..4 get 8, 16, 32, 64 children: N_3 = 5 + 120 = 125.
        assert_eq!(s.boundaries(), &[0, 1, 5, 125]);
        assert!(validate_system(&s).all_passed());
    }

    #[test]
    fn depth_four_is_ranged_and_valid() {
        let s = build_cantor_system(4).unwrap();
        assert_eq!(s.depth(), 4);
        assert!(s.last_boundary() > 1u128 << 100, "N_4 = {}", s.last_boundary());
        assert!(matches!(s.blocks()[3], BlockRep::Ranged { .. }));
        let report = validate_system(&s);
        assert!(report.all_passed(), "{report:?}");
        // Spot-check a deep cylinder: derivable, extends its parent
        // (the first range of block 4 hangs off parent 5).
        let n = s.boundaries()[3] + 5;
        let c = s.cylinder(n).unwrap();
        let parent = s.cylinder(5).unwrap();
        assert!(c.extends(&parent));
    }

    #[test]
    fn depth_five_hits_size_cap() {
        let err = build_cantor_system(5).unwrap_err();
        assert!(matches!(err, Error::SizeCap { .. }), "{err}");
    }

    #[test]
    fn growth_fault_detected() {
        let mut s = build_cantor_system(3).unwrap();
        if let BlockRep::Explicit { ranges, .. } = &mut s.blocks_mut()[2] {
            ranges[1].start = ranges[1].last() + 7; // now s < 2t
        }
        let report = validate_system(&s);
        assert!(!report.growth.passed);
        let w = report.growth.counterwitness.unwrap();
        assert!(w.contains("(t, s)"), "{w}");
    }

    #[test]
    fn partition_fault_detected() {
        let mut s = build_cantor_system(2).unwrap();
        if let BlockRep::Explicit { sets, .. } = &mut s.blocks_mut()[1] {
            sets.remove(2);
        }
        let report = validate_system(&s);
        assert!(!report.partition.passed, "{report:?}");
    }

    #[test]
    fn refinement_fault_detected() {
        let mut s = build_cantor_system(3).unwrap();
        if let BlockRep::Explicit { sets, .. } = &mut s.blocks_mut()[2] {
            sets[0] = Cylinder::from_bit_string("11111").unwrap(); // parent is "00"
        }
        let report = validate_system(&s);
        assert!(!report.refinement.passed, "{report:?}");
    }

    #[test]
    fn defeat_empty_set() {
        let s = build_cantor_system(4).unwrap();
        let d = defeat(&s, &IndexSet::empty(), &budget()).unwrap();
        assert_eq!(coverage_count(&s, &d.point, &IndexSet::empty()).unwrap(), 0);
        assert!(!d.chain.is_empty());
    }

    #[test]
    fn defeat_squares() {
        let s = build_cantor_system(4).unwrap();
        let z = IndexSet::Squares { offset: 0 };
        let d = defeat(&s, &z, &budget()).unwrap();
        for &n in &d.chain {
            assert!(!z.contains_u128(n), "chain index {n} is a square");
        }
        // The chain is nested.
        for w in d.chain.windows(2) {
            let parent = s.cylinder(w[0]).unwrap();
            let child = s.cylinder(w[1]).unwrap();
            assert!(child.extends(&parent));
        }
        let cover = coverage_count(&s, &d.point, &z).unwrap();
        assert!(
            (cover as usize) <= d.start_block - 1,
            "cover {cover} start_block {}",
            d.start_block
        );
    }

    #[test]
    fn defeat_extractor_output() {
        use crate::cover_family::CoverFamily;
        use crate::extractor::extract;
        use crate::rational::rat;
        let s = build_cantor_system(4).unwrap();
        let f = CoverFamily::dyadic_unit();
        let cert = extract(&f, &rat(1, 2), 10, 77, &budget()).unwrap();
        let d = defeat(&s, &cert.z, &budget()).unwrap();
        for &n in &d.chain {
            assert!(!cert.z.contains_u128(n));
        }
        // Coverage by z-indexed sets stops increasing past the start block:
        // the chain blocks contribute no hits at all.
        let cover = coverage_count(&s, &d.point, &cert.z).unwrap();
        assert!((cover as usize) <= d.start_block - 1);
    }

    #[test]
    fn coverage_full_set_counts_every_block() {
        let s = build_cantor_system(3).unwrap();
        let z = IndexSet::finite((0..125).collect());
        // Any point: take the all-zeros point.
        let p = CantorPoint { bits: vec![] };
        assert_eq!(coverage_count(&s, &p, &z).unwrap(), 3);
        assert_eq!(coverage_count(&s, &p, &IndexSet::empty()).unwrap(), 0);
    }

    #[test]
    fn coverage_chain_complement_at_one_block() {
        let s = build_cantor_system(3).unwrap();
        let p = CantorPoint { bits: vec![] };
        // The covering indices of p are 0, 1 (prefix "00") and 5 ("00000").
        // Exclude exactly one of them.
        let z = IndexSet::finite((0..125).filter(|&n| n != 1).collect());
        assert_eq!(coverage_count(&s, &p, &z).unwrap(), 2);
    }

    #[test]
    fn defeat_depth_insufficient() {
        let s = build_cantor_system(2).unwrap();
        // Threshold for a dense-start finite set exceeds N_1 = 1.
        let z = IndexSet::finite((0..64).collect());
        let err = defeat(&s, &z, &budget()).unwrap_err();
        assert!(matches!(err, Error::DepthInsufficient { .. }), "{err}");
    }

    #[test]
    fn cylinder_relations() {
        let a = Cylinder::from_bit_string("01").unwrap();
        let b = Cylinder::from_bit_string("011").unwrap();
        let c = Cylinder::from_bit_string("10").unwrap();
        assert!(b.extends(&a));
        assert!(!a.extends(&b));
        assert!(a.disjoint(&c));
        assert!(!a.disjoint(&b));
        assert!(Cylinder::from_bit_string("0x2").is_err());
    }

    #[test]
    fn system_serde_round_trip() {
        let s = build_cantor_system(3).unwrap();
        let blocks = s.blocks().to_vec();
        let text = serde_json::to_string(&blocks).unwrap();
        let back: Vec<BlockRep> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, blocks);
    }
}
