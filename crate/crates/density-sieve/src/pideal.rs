//! An explicit pseudo-union for the density-zero ideal.
//!
//! Given parts Z_1, .., Z_M (each with a certified density envelope), the
//! diagonal construction picks cutoffs t_1 < t_2 < ... and takes the m-fold
//! union on [t_m, t_{m+1}). The result almost contains every part (the
//! omissions of part m lie below t_m) and still has density zero: on
//! [t_m, t_{m+1}) it is squeezed under 1/(m+1).
//!
//! Cutoffs are verified, not trusted: each candidate t_m passes an exact
//! density scan of the final set on [t_m, 10 t_m], and failing candidates
//! are advanced and re-scanned.

use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::index_sets::{verify_density_on, IndexSet, DENSITY_CHECK_FACTOR};
use crate::rational::{rat_u64, Rat};

/// How many advance-and-rescan rounds a cutoff may take before giving up.
const MAX_RESCAN_ROUNDS: u32 = 8;

/// A pseudo-union: the tail-union set together with its verified cutoffs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoUnion {
    /// Tail union: n is a member iff n >= cutoffs[m] and n in parts[m] for
    /// some m.
    pub set: IndexSet,
    /// cutoffs[m-1] = t_m; for all n >= t_m the density of the result is at
    /// most 1/(m+1).
    pub cutoffs: Vec<u64>,
}

impl PseudoUnion {
    /// The density bound certified from cutoff t_m onward.
    pub fn level_bound(m: usize) -> Rat {
        rat_u64(1) / rat_u64(m as u64 + 1)
    }
}

fn build_result(parts: &[IndexSet], cutoffs: &[u64]) -> Result<IndexSet> {
    let tagged = parts
        .iter()
        .cloned()
        .zip(cutoffs.iter().copied())
        .collect();
    IndexSet::tail_union(tagged)
}

/// The pseudo-union of the given parts.
///
/// Candidate cutoffs come from the parts' envelopes with the per-part budget
/// delta = 1/((m+1) m); the exact verification scan on the assembled result
/// is what certifies them.
pub fn pseudo_union(parts: &[IndexSet], budget: &Budget) -> Result<PseudoUnion> {
    if parts.is_empty() {
        return Err(Error::InvalidParameter("pseudo_union needs at least one part".into()));
    }
    let mut cutoffs = Vec::with_capacity(parts.len());
    let mut prev = 0u64;
    for m in 1..=parts.len() as u64 {
        // Each of the first m parts held under 1/((m+1) m) makes their union,
        // and a fortiori the result, at most m * that = 1/(m+1).
        let per_part = rat_u64(1) / rat_u64((m + 1) * m);
        let mut t = prev + 1;
        for part in &parts[..m as usize] {
            t = t.max(part.envelope_threshold(&per_part)?);
        }
        cutoffs.push(t);
        prev = t;
    }
    // Exact verification of the assembled set, advancing any cutoff whose
    // scan fails (sound envelopes should never trigger this, but loose or
    // foreign envelopes must not produce an unverified certificate).
    let mut rounds = 0u32;
    'verify: loop {
        let result = build_result(parts, &cutoffs)?;
        for m in 1..=cutoffs.len() {
            let t = cutoffs[m - 1];
            let bound = PseudoUnion::level_bound(m);
            let hi = t.saturating_mul(DENSITY_CHECK_FACTOR);
            if let Err(err) = verify_density_on(&result, &bound, t, hi, budget) {
                rounds += 1;
                if rounds > MAX_RESCAN_ROUNDS {
                    return Err(Error::IterationCap {
                        cap: MAX_RESCAN_ROUNDS as u64,
                        context: format!("cutoff t_{m} failed repeated density scans: {err}"),
                    });
                }
                if matches!(err, Error::IterationCap { .. }) {
                    return Err(err);
                }
                // Advance the failing cutoff past the scanned range and keep
                // the cutoffs strictly increasing.
                let mut next = hi + 1;
                for c in cutoffs[m - 1..].iter_mut() {
                    if *c < next {
                        *c = next;
                    }
                    next = *c + 1;
                }
                continue 'verify;
            }
        }
        return Ok(PseudoUnion { set: result, cutoffs });
    }
}
