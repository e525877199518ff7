//! Finitely-presented subsets of the naturals with exact membership, prefix
//! counting, and certified density-zero thresholds.
//!
//! The presentations are deliberately structured (per-block arithmetic
//! progressions, finite edits, unions of tails, and a couple of builtin
//! sparse families) so that "the density tends to zero" becomes a computable
//! certificate: every variant can produce, for any positive delta, a
//! threshold t with count(n)/n <= delta for all n >= t.

use num::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::rational::{rat_u64, Rat};

/// How far past a certified threshold the exact verification scan reaches:
/// thresholds are re-checked on [t, DENSITY_CHECK_FACTOR * t].
pub const DENSITY_CHECK_FACTOR: u64 = 10;

/// Per-block arithmetic-progression selection over a block structure:
/// the realized Z = union over k of W^k_{xi_k}, where W^k_i is the i-th
/// progression of difference k inside block k.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApSelection {
    /// Boundaries 0 = N_0 < N_1 < ... < N_K with k | (N_k - N_{k-1}).
    #[serde(rename = "blocks")]
    boundaries: Vec<u64>,
    /// choices[k-1] = xi_k in {0, .., k-1}.
    choices: Vec<u64>,
}

impl ApSelection {
    pub fn new(boundaries: Vec<u64>, choices: Vec<u64>) -> Result<Self> {
        if boundaries.first() != Some(&0) {
            return Err(Error::InvalidParameter("block boundaries must start at 0".into()));
        }
        if boundaries.len() != choices.len() + 1 {
            return Err(Error::InvalidParameter(format!(
                "{} boundaries need {} choices, got {}",
                boundaries.len(),
                boundaries.len() - 1,
                choices.len()
            )));
        }
        for (k, w) in boundaries.windows(2).enumerate() {
            let k = (k + 1) as u64;
            let (a, b) = (w[0], w[1]);
            if b <= a {
                return Err(Error::InvalidParameter("block boundaries must strictly increase".into()));
            }
            if (b - a) % k != 0 {
                return Err(Error::InvalidParameter(format!(
                    "block {k} has length {} not divisible by {k}",
                    b - a
                )));
            }
            if choices[(k - 1) as usize] >= k {
                return Err(Error::InvalidParameter(format!(
                    "choice for block {k} must lie below {k}"
                )));
            }
        }
        Ok(ApSelection { boundaries, choices })
    }

    pub fn boundaries(&self) -> &[u64] {
        &self.boundaries
    }

    pub fn choices(&self) -> &[u64] {
        &self.choices
    }

    pub fn depth(&self) -> usize {
        self.choices.len()
    }

    pub fn last_boundary(&self) -> u64 {
        *self.boundaries.last().unwrap()
    }

    /// The members of W^k_i for block k (1-indexed), any residue i < k.
    pub fn progression(&self, k: usize, residue: u64) -> Vec<u64> {
        let start = self.boundaries[k - 1];
        let end = self.boundaries[k];
        (0..(end - start) / k as u64)
            .map(|j| start + residue + j * k as u64)
            .collect()
    }

    fn contains(&self, n: u64) -> bool {
        if n >= self.last_boundary() {
            return false;
        }
        // block index: first boundary strictly above n.
        let k = self.boundaries.partition_point(|&b| b <= n);
        let start = self.boundaries[k - 1];
        (n - start) % k as u64 == self.choices[k - 1]
    }

    fn prefix_count(&self, n: u64) -> u64 {
        let mut total = 0u64;
        for k in 1..self.boundaries.len() {
            let start = self.boundaries[k - 1];
            if n <= start {
                break;
            }
            let end = self.boundaries[k].min(n);
            let span = end - start;
            let xi = self.choices[k - 1];
            if span > xi {
                total += (span - xi - 1) / k as u64 + 1;
            }
        }
        total
    }

    /// Closed-form member count at a block boundary: sum of (N_k - N_{k-1})/k.
    /// Independent of the realized choices; cross-checked against
    /// `prefix_count` in the verification tests.
    pub fn closed_form_count(&self, upto_block: usize) -> u64 {
        (1..=upto_block)
            .map(|k| (self.boundaries[k] - self.boundaries[k - 1]) / k as u64)
            .sum()
    }

    fn enumerate_in(&self, lo: u64, hi: u64, out: &mut Vec<u64>) {
        for k in 1..self.boundaries.len() {
            let start = self.boundaries[k - 1];
            let end = self.boundaries[k];
            if end <= lo || start >= hi {
                continue;
            }
            let k64 = k as u64;
            let xi = self.choices[k - 1];
            let first = start + xi;
            let from = if lo > first { first + (lo - first).div_ceil(k64) * k64 } else { first };
            let mut m = from;
            while m < end.min(hi) {
                out.push(m);
                m += k64;
            }
        }
    }

    /// Certified threshold for the envelope: uses the per-segment linear
    /// bound count(n) <= c_{k-1} + (n - N_{k-1})/k + 1 inside block k and
    /// the constant count beyond the last boundary.
    fn envelope_threshold(&self, delta: &Rat) -> Result<u64> {
        let le = |count: &Rat, n: u64| -> bool { count <= &(delta * rat_u64(n)) };
        let mut counts = vec![0u64];
        for k in 1..self.boundaries.len() {
            let len = self.boundaries[k] - self.boundaries[k - 1];
            counts.push(counts[k - 1] + len / k as u64);
        }
        let total = *counts.last().unwrap();
        let last = self.last_boundary();
        // Segment k is certified when the linear upper bound stays below
        // delta at both ends (it is monotone in between).
        let seg_ok = |k: usize| -> bool {
            let s = self.boundaries[k - 1].max(1);
            let e = self.boundaries[k];
            for n in [s, e] {
                let bound = rat_u64(counts[k - 1]) + rat_u64(n - self.boundaries[k - 1].min(n)) / rat_u64(k as u64) + rat_u64(1);
                if !le(&bound, n) {
                    return false;
                }
            }
            true
        };
        let mut last_bad = 0usize;
        for k in 1..self.boundaries.len() {
            if !seg_ok(k) {
                last_bad = k;
            }
        }
        if last_bad == self.choices.len() {
            // Even the final segment is uncertified by the linear bound;
            // fall back to the constant tail: count == total beyond N_K.
            let tail = crate::rational::rat_ceil_u64(&(rat_u64(total) / delta))?;
            return Ok(tail.max(last).max(1));
        }
        Ok(self.boundaries[last_bad].max(1))
    }
}

/// Finitely-presented subset of the naturals.
///
/// Serialized as a tagged union: {"ap": ...}, {"finite": [...]},
/// {"tails": [[set, cutoff], ...]}, {"squares": {"offset": j}},
/// {"powers": {"base": b}}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexSet {
    Ap(ApSelection),
    Finite(Vec<u64>),
    Tails(Vec<(IndexSet, u64)>),
    Squares { offset: u64 },
    Powers { base: u64 },
}

fn isqrt_u64(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut x = (n as f64).sqrt() as u64;
    while x.checked_mul(x).map_or(true, |s| s > n) {
        x -= 1;
    }
    while (x + 1).checked_mul(x + 1).map_or(false, |s| s <= n) {
        x += 1;
    }
    x
}

pub(crate) fn isqrt_u128(n: u128) -> u128 {
    if n == 0 {
        return 0;
    }
    let mut x = (n as f64).sqrt() as u128 + 2;
    loop {
        let y = (x + n / x) / 2;
        if y >= x {
            break;
        }
        x = y;
    }
    while x * x > n {
        x -= 1;
    }
    x
}

/// Leaf of a flattened tail union; the closed-form union count below only
/// handles these structured leaves.
enum Leaf<'a> {
    Ap(&'a ApSelection),
    Fin(&'a [u64]),
}

impl Leaf<'_> {
    fn contains(&self, n: u64) -> bool {
        match self {
            Leaf::Ap(ap) => ap.contains(n),
            Leaf::Fin(v) => v.binary_search(&n).is_ok(),
        }
    }
}

/// Flattens nested tail unions into (leaf, effective cutoff) pairs; cutoffs
/// compose by max. Returns false on leaves without a closed count form.
fn flatten_tails<'a>(set: &'a IndexSet, cutoff: u64, out: &mut Vec<(Leaf<'a>, u64)>) -> bool {
    match set {
        IndexSet::Ap(ap) => {
            out.push((Leaf::Ap(ap), cutoff));
            true
        }
        IndexSet::Finite(v) => {
            out.push((Leaf::Fin(v), cutoff));
            true
        }
        IndexSet::Tails(parts) => parts
            .iter()
            .all(|(s, c)| flatten_tails(s, cutoff.max(*c), out)),
        IndexSet::Squares { .. } | IndexSet::Powers { .. } => false,
    }
}

fn egcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = egcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// Members of x ≡ r (mod m) in [0, x_hi).
fn residue_count_below(x_hi: u64, r: u64, m: u64) -> u64 {
    if x_hi <= r {
        0
    } else {
        (x_hi - 1 - r) / m + 1
    }
}

/// |∩ leaves ∩ [lo, hi)| for pure-Ap leaves, by a boundary sweep with one
/// CRT merge per segment.
fn ap_intersection_count(aps: &[&ApSelection], lo: u64, hi: u64) -> u64 {
    let hi = hi.min(aps.iter().map(|ap| ap.last_boundary()).min().unwrap());
    if lo >= hi {
        return 0;
    }
    let mut cuts: Vec<u64> = vec![lo, hi];
    for ap in aps {
        cuts.extend(ap.boundaries().iter().copied().filter(|&b| b > lo && b < hi));
    }
    cuts.sort_unstable();
    cuts.dedup();
    let mut total = 0u64;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        // CRT-merge each selection's congruence on this segment.
        let (mut r, mut m): (u128, u128) = (0, 1);
        let mut empty = false;
        for ap in aps {
            let k = ap.boundaries().partition_point(|&x| x <= a);
            let start = ap.boundaries()[k - 1];
            let k64 = k as u64;
            let rj = ((start + ap.choices()[k - 1]) % k64) as u128;
            let mj = k64 as u128;
            let (g, p, _) = egcd(m as i128, mj as i128);
            let g = g as u128;
            if (rj.max(r) - rj.min(r)) % g != 0 {
                empty = true;
                break;
            }
            let lcm = m / g * mj;
            let diff = ((rj as i128 - r as i128) / g as i128).rem_euclid((mj / g) as i128);
            let p = p.rem_euclid((mj / g) as i128);
            let t = (diff * p).rem_euclid((mj / g) as i128) as u128;
            r = (r + m * t) % lcm;
            m = lcm;
        }
        if empty || m > u64::MAX as u128 {
            continue;
        }
        total += residue_count_below(b, r as u64, m as u64)
            - residue_count_below(a, r as u64, m as u64);
    }
    total
}

/// Exact member count of a flattened tail union on [0, n) by
/// inclusion–exclusion over the leaves. Returns None when the leaf count
/// makes the subset sum unreasonable.
fn tails_closed_prefix_count(parts: &[(IndexSet, u64)], n: u64) -> Option<u64> {
    let mut leaves: Vec<(Leaf, u64)> = Vec::new();
    for (set, cutoff) in parts {
        if !flatten_tails(set, *cutoff, &mut leaves) {
            return None;
        }
    }
    if leaves.is_empty() || leaves.len() > 16 {
        return leaves.is_empty().then_some(0);
    }
    let mut total: i128 = 0;
    for mask in 1u32..(1 << leaves.len()) {
        let chosen: Vec<&(Leaf, u64)> = leaves
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, l)| l)
            .collect();
        let lo = chosen.iter().map(|(_, c)| *c).max().unwrap();
        let fins: Vec<&[u64]> = chosen
            .iter()
            .filter_map(|(l, _)| match l {
                Leaf::Fin(v) => Some(*v),
                Leaf::Ap(_) => None,
            })
            .collect();
        let count = if let Some(smallest) = fins.iter().min_by_key(|v| v.len()) {
            // A finite leaf pins the intersection to explicit candidates.
            smallest
                .iter()
                .filter(|&&x| x >= lo && x < n)
                .filter(|&&x| chosen.iter().all(|(l, _)| l.contains(x)))
                .count() as u64
        } else {
            let aps: Vec<&ApSelection> = chosen
                .iter()
                .map(|(l, _)| match l {
                    Leaf::Ap(ap) => *ap,
                    Leaf::Fin(_) => unreachable!(),
                })
                .collect();
            ap_intersection_count(&aps, lo, n)
        };
        if chosen.len() % 2 == 1 {
            total += count as i128;
        } else {
            total -= count as i128;
        }
    }
    Some(total as u64)
}

impl IndexSet {
    /// Builds the tail union of parts: the point set is the union over m of
    /// parts[m].set minus [0, cutoff_m). Cutoffs must strictly increase.
    pub fn tail_union(parts: Vec<(IndexSet, u64)>) -> Result<IndexSet> {
        if parts.is_empty() {
            return Err(Error::InvalidParameter("tail union needs at least one part".into()));
        }
        for w in parts.windows(2) {
            if w[1].1 <= w[0].1 {
                return Err(Error::InvalidParameter(format!(
                    "tail union cutoffs must strictly increase, got {} then {}",
                    w[0].1, w[1].1
                )));
            }
        }
        Ok(IndexSet::Tails(parts))
    }

    pub fn finite(mut elems: Vec<u64>) -> IndexSet {
        elems.sort_unstable();
        elems.dedup();
        IndexSet::Finite(elems)
    }

    pub fn empty() -> IndexSet {
        IndexSet::Finite(Vec::new())
    }

    /// Exact membership.
    pub fn contains(&self, n: u64) -> bool {
        match self {
            IndexSet::Ap(ap) => ap.contains(n),
            IndexSet::Finite(v) => v.binary_search(&n).is_ok(),
            IndexSet::Tails(parts) => parts
                .iter()
                .any(|(set, cutoff)| n >= *cutoff && set.contains(n)),
            IndexSet::Squares { offset } => {
                if n < *offset {
                    return false;
                }
                let d = n - offset;
                let r = isqrt_u64(d);
                r * r == d
            }
            IndexSet::Powers { base } => {
                let mut p: u64 = 1;
                loop {
                    if p == n {
                        return true;
                    }
                    if p > n / base {
                        return false;
                    }
                    p *= base;
                }
            }
        }
    }

    /// Membership for indices beyond u64 (the Cantor counterexample produces
    /// block indices near 2^127).
    pub fn contains_u128(&self, n: u128) -> bool {
        if let Ok(small) = u64::try_from(n) {
            return self.contains(small);
        }
        match self {
            IndexSet::Ap(_) | IndexSet::Finite(_) => false,
            IndexSet::Tails(parts) => parts
                .iter()
                .any(|(set, cutoff)| n >= *cutoff as u128 && set.contains_u128(n)),
            IndexSet::Squares { offset } => {
                let d = n - *offset as u128;
                let r = isqrt_u128(d);
                r * r == d
            }
            IndexSet::Powers { base } => {
                let mut p: u128 = 1;
                loop {
                    if p == n {
                        return true;
                    }
                    if p > n / *base as u128 {
                        return false;
                    }
                    p *= *base as u128;
                }
            }
        }
    }

    /// |Z ∩ [0, n)|, exactly.
    pub fn prefix_count(&self, n: u64) -> u64 {
        match self {
            IndexSet::Ap(ap) => ap.prefix_count(n),
            IndexSet::Finite(v) => v.partition_point(|&x| x < n) as u64,
            IndexSet::Tails(parts) => tails_closed_prefix_count(parts, n)
                .unwrap_or_else(|| self.enumerate_in(0, n).len() as u64),
            IndexSet::Squares { offset } => {
                if n <= *offset {
                    0
                } else {
                    isqrt_u64(n - 1 - offset) + 1
                }
            }
            IndexSet::Powers { base } => {
                let mut count = 0u64;
                let mut p: u64 = 1;
                while p < n {
                    count += 1;
                    if p > n / base {
                        break;
                    }
                    p *= base;
                }
                count
            }
        }
    }

    /// prefix_count(n)/n as an exact rational; n must be positive.
    pub fn density_at(&self, n: u64) -> Result<Rat> {
        if n == 0 {
            return Err(Error::InvalidParameter("density_at needs n >= 1".into()));
        }
        Ok(rat_u64(self.prefix_count(n)) / rat_u64(n))
    }

    /// Sorted, deduplicated members in [lo, hi).
    pub fn enumerate_in(&self, lo: u64, hi: u64) -> Vec<u64> {
        let mut out = Vec::new();
        self.enumerate_into(lo, hi, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn enumerate_into(&self, lo: u64, hi: u64, out: &mut Vec<u64>) {
        if lo >= hi {
            return;
        }
        match self {
            IndexSet::Ap(ap) => ap.enumerate_in(lo, hi, out),
            IndexSet::Finite(v) => {
                let a = v.partition_point(|&x| x < lo);
                let b = v.partition_point(|&x| x < hi);
                out.extend_from_slice(&v[a..b]);
            }
            IndexSet::Tails(parts) => {
                for (set, cutoff) in parts {
                    set.enumerate_into(lo.max(*cutoff), hi, out);
                }
            }
            IndexSet::Squares { offset } => {
                if hi <= *offset {
                    return;
                }
                let first = if lo <= *offset { 0 } else { isqrt_u64(lo - offset - 1) + 1 };
                let mut i = first;
                loop {
                    match i.checked_mul(i).and_then(|s| s.checked_add(*offset)) {
                        Some(m) if m < hi => {
                            if m >= lo {
                                out.push(m);
                            }
                            i += 1;
                        }
                        _ => break,
                    }
                }
            }
            IndexSet::Powers { base } => {
                let mut p: u64 = 1;
                while p < hi {
                    if p >= lo {
                        out.push(p);
                    }
                    if p > hi / base {
                        break;
                    }
                    p *= base;
                }
            }
        }
    }

    /// Constructive density-zero certificate: a threshold t such that
    /// count(n)/n <= delta for all n >= t, derived analytically per variant.
    pub fn envelope_threshold(&self, delta: &Rat) -> Result<u64> {
        use num::Signed;
        if !delta.is_positive() {
            return Err(Error::InvalidParameter("density envelope needs delta > 0".into()));
        }
        let t = match self {
            IndexSet::Ap(ap) => ap.envelope_threshold(delta)?,
            IndexSet::Finite(v) => {
                let len = rat_u64(v.len() as u64);
                crate::rational::rat_ceil_u64(&(len / delta))?.max(1)
            }
            IndexSet::Squares { .. } => {
                // count(n) <= isqrt(n) + 1 + (offset shift only delays members),
                // and isqrt(n) + 1 <= 2*sqrt(n), so n >= (2/delta)^2 suffices.
                let two_over = rat_u64(2) / delta;
                let sq = &two_over * &two_over;
                crate::rational::rat_ceil_u64(&sq)?.max(1)
            }
            IndexSet::Powers { base } => {
                let mut j: u32 = 0;
                loop {
                    let p = (*base as u128).checked_pow(j).ok_or_else(|| Error::SizeCap {
                        context: "power-family envelope overflow".into(),
                    })?;
                    let pu = u64::try_from(p).map_err(|_| Error::SizeCap {
                        context: "power-family envelope exceeds u64".into(),
                    })?;
                    // count(n) <= j + 2 for n in [base^j, base^(j+1)).
                    if rat_u64(j as u64 + 2) <= delta * rat_u64(pu) {
                        break pu.max(1);
                    }
                    j += 1;
                }
            }
            IndexSet::Tails(parts) => {
                let m = parts.len() as u64;
                let per_part = delta / rat_u64(m);
                let mut t = 1u64;
                for (set, cutoff) in parts {
                    t = t.max(set.envelope_threshold(&per_part)?).max(cutoff + 1);
                }
                t
            }
        };
        Ok(t)
    }

    /// Envelope threshold plus an exact verification scan over
    /// [t, DENSITY_CHECK_FACTOR * t]. The scan walks the members of the set,
    /// where the density can only rise, so it is exact on the whole range.
    pub fn density_threshold(&self, delta: &Rat, budget: &Budget) -> Result<u64> {
        let t = self.envelope_threshold(delta)?;
        let hi = t.saturating_mul(DENSITY_CHECK_FACTOR);
        verify_density_on(self, delta, t, hi, budget)?;
        Ok(t)
    }
}

/// Exact check that count(n)/n <= delta for every n in [lo, hi].
/// The density only increases at n = member + 1, so checking n = lo plus one
/// point per member is exhaustive.
pub fn verify_density_on(
    set: &IndexSet,
    delta: &Rat,
    lo: u64,
    hi: u64,
    budget: &Budget,
) -> Result<()> {
    let lo = lo.max(1);
    if hi < lo {
        return Ok(());
    }
    let mut meter = budget.start("exact density scan");
    // Fast integer comparison when delta fits machine words.
    let fast = delta
        .numer()
        .to_u64()
        .zip(delta.denom().to_u64());
    let le = |count: u64, n: u64| -> bool {
        match fast {
            Some((num, den)) => (count as u128) * (den as u128) <= (num as u128) * (n as u128),
            None => rat_u64(count) <= delta * rat_u64(n),
        }
    };
    let mut running = set.prefix_count(lo);
    if !le(running, lo) {
        return Err(Error::InvalidParameter(format!(
            "density exceeds bound at n = {lo}: count {running}"
        )));
    }
    for member in set.enumerate_in(lo, hi) {
        meter.tick()?;
        let n = member + 1;
        if n > hi {
            break;
        }
        running += 1;
        if !le(running, n) {
            return Err(Error::InvalidParameter(format!(
                "density exceeds bound at n = {n}: count {running}"
            )));
        }
    }
    Ok(())
}
