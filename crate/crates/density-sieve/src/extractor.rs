//! Block construction and randomized thinning.
//!
//! `build_blocks` makes "by continuity of measures there exists N_k"
//! effective: it searches for the smallest prefix of the family whose union
//! leaves residual at most eps/2^k, then pads the block length up to a
//! multiple of k (adding sets only shrinks the residual). `select_subsequence`
//! draws one arithmetic progression per block; the union of the chosen
//! progressions is the extracted density-zero index set.

use num::Signed;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::budget::Budget;
use crate::cover_family::{CoverFamily, SigmaFiniteFamily};
use crate::error::{Error, Result};
use crate::index_sets::{ApSelection, IndexSet};
use crate::measure_sets::IntervalUnion;
use crate::pideal::{pseudo_union, PseudoUnion};
use crate::rational::{rat_u64, Rat, Rq};
use crate::rng::{self, sub_seed, uniform_below};

/// Hard ceiling on boundary indices probed by the galloping search; past
/// this the family clearly is not approaching its residual target.
const MAX_PROBE_LEN: u64 = 1 << 62;

/// Block boundaries with their exactly-recorded residuals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStructure {
    boundaries: Vec<u64>,
    residuals: Vec<Rat>,
    epsilon: Rat,
}

impl BlockStructure {
    pub fn new(boundaries: Vec<u64>, residuals: Vec<Rat>, epsilon: Rat) -> Result<Self> {
        if !epsilon.is_positive() {
            return Err(Error::InvalidParameter("epsilon must be positive".into()));
        }
        if boundaries.first() != Some(&0) {
            return Err(Error::Malformed("block boundaries must start at 0".into()));
        }
        if boundaries.len() != residuals.len() + 1 {
            return Err(Error::Malformed(format!(
                "{} boundaries need {} residuals, got {}",
                boundaries.len(),
                boundaries.len() - 1,
                residuals.len()
            )));
        }
        let mut target = epsilon.clone();
        for (k, w) in boundaries.windows(2).enumerate() {
            let k = k + 1;
            target /= rat_u64(2);
            if w[1] <= w[0] {
                return Err(Error::Malformed("block boundaries must strictly increase".into()));
            }
            if (w[1] - w[0]) % k as u64 != 0 {
                return Err(Error::Malformed(format!(
                    "block {k} length {} is not divisible by {k}",
                    w[1] - w[0]
                )));
            }
            let r = &residuals[k - 1];
            if r.is_negative() || *r > target {
                return Err(Error::Malformed(format!(
                    "block {k} residual {r} exceeds target {target}"
                )));
            }
        }
        Ok(BlockStructure { boundaries, residuals, epsilon })
    }

    pub fn boundaries(&self) -> &[u64] {
        &self.boundaries
    }

    pub fn residuals(&self) -> &[Rat] {
        &self.residuals
    }

    pub fn epsilon(&self) -> &Rat {
        &self.epsilon
    }

    pub fn depth(&self) -> usize {
        self.residuals.len()
    }

    pub fn last_boundary(&self) -> u64 {
        *self.boundaries.last().unwrap()
    }
}

fn residual_of(family: &CoverFamily, a: u64, b: u64, budget: &Budget) -> Result<Rat> {
    let union = family.range_union(a, b, budget)?;
    Ok(family.window().length() - union.measure())
}

/// Smallest length L >= 1 with residual(start, start+L) <= target.
fn minimal_length(
    family: &CoverFamily,
    start: u64,
    target: &Rat,
    budget: &Budget,
) -> Result<u64> {
    if family.fast_range() {
        // Galloping: the residual is monotone nonincreasing in the length, so
        // doubling probes bracket the minimal length in O(log) range unions.
        let mut meter = budget.start(format!("residual search from index {start}"));
        let mut len = 1u64;
        loop {
            meter.tick()?;
            if residual_of(family, start, start + len, budget)? <= *target {
                break;
            }
            if len >= MAX_PROBE_LEN {
                return Err(Error::IterationCap {
                    cap: MAX_PROBE_LEN,
                    context: format!(
                        "family never reaches residual {target} from index {start}"
                    ),
                });
            }
            len = len.saturating_mul(2).min(MAX_PROBE_LEN);
        }
        let (mut lo, mut hi) = (len / 2 + 1, len);
        while lo < hi {
            meter.tick()?;
            let mid = lo + (hi - lo) / 2;
            if residual_of(family, start, start + mid, budget)? <= *target {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(lo)
    } else {
        // Incremental scan: extend the running union one set at a time.
        let mut meter = budget.start(format!("residual scan from index {start}"));
        let mut acc = IntervalUnion::empty(family.window().clone());
        let full = family.window().length();
        let mut n = start;
        loop {
            meter.tick()?;
            acc = acc.union(&family.get(n)?)?;
            n += 1;
            if &full - acc.measure() <= *target {
                return Ok(n - start);
            }
        }
    }
}

/// Builds depth-many blocks: for each k, the minimal boundary meeting the
/// residual target eps/2^k, padded up to the divisibility constraint.
pub fn build_blocks(
    family: &CoverFamily,
    epsilon: &Rat,
    depth: usize,
    budget: &Budget,
) -> Result<BlockStructure> {
    if !epsilon.is_positive() {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if depth == 0 {
        return Err(Error::InvalidParameter("depth must be at least 1".into()));
    }
    let mut boundaries = vec![0u64];
    let mut residuals = Vec::with_capacity(depth);
    let mut target = epsilon.clone();
    for k in 1..=depth as u64 {
        target /= rat_u64(2);
        let start = *boundaries.last().unwrap();
        let minimal = minimal_length(family, start, &target, budget)?;
        let padded = minimal.div_ceil(k) * k;
        let end = start + padded;
        let residual = residual_of(family, start, end, budget)?;
        debug_assert!(residual <= target);
        boundaries.push(end);
        residuals.push(residual);
    }
    BlockStructure::new(boundaries, residuals, epsilon.clone())
}

/// The union of block k's sets (1-indexed).
pub fn block_union(
    family: &CoverFamily,
    blocks: &BlockStructure,
    k: usize,
    budget: &Budget,
) -> Result<IntervalUnion> {
    if k == 0 || k > blocks.depth() {
        return Err(Error::IndexOutOfRange {
            index: k as u64,
            reason: format!("block index must lie in 1..={}", blocks.depth()),
        });
    }
    family.range_union(blocks.boundaries()[k - 1], blocks.boundaries()[k], budget)
}

/// Draws xi_k uniformly on {0, .., k-1} for each block and realizes the
/// selected per-block arithmetic progressions as an index set.
pub fn select_subsequence(blocks: &BlockStructure, seed: u64) -> Result<ApSelection> {
    let choices = (1..=blocks.depth() as u64)
        .map(|k| uniform_below(seed, rng::domain::BLOCK_CHOICE, k, k))
        .collect();
    ApSelection::new(blocks.boundaries().to_vec(), choices)
}

/// One extraction run: blocks, the realized selection, and the set X_eps on
/// which i.o. coverage is certified. X_eps is tracked exactly up to the
/// built depth; the residual bound measure(window \ x_eps) <= epsilon holds
/// because the per-block residuals are dominated by eps/2^k.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionCertificate {
    pub epsilon: Rat,
    pub blocks: BlockStructure,
    pub x_eps: IntervalUnion,
    pub z: IndexSet,
    pub seed: u64,
}

impl ExtractionCertificate {
    /// Re-checks every internal invariant that does not need the family.
    pub fn validate(&self) -> Result<()> {
        let rebuilt = BlockStructure::new(
            self.blocks.boundaries().to_vec(),
            self.blocks.residuals().to_vec(),
            self.epsilon.clone(),
        )?;
        if rebuilt != self.blocks {
            return Err(Error::Malformed("block structure failed revalidation".into()));
        }
        let window = self.x_eps.window();
        let gap = window.length() - self.x_eps.measure();
        if gap > self.epsilon {
            return Err(Error::Malformed(format!(
                "x_eps leaves measure {gap}, more than epsilon {}",
                self.epsilon
            )));
        }
        match &self.z {
            IndexSet::Ap(ap) if ap.boundaries() == self.blocks.boundaries() => {}
            _ => {
                return Err(Error::Malformed(
                    "certificate z must be a selection over the certificate blocks".into(),
                ))
            }
        }
        let reselected = select_subsequence(&self.blocks, self.seed)?;
        if IndexSet::Ap(reselected) != self.z {
            return Err(Error::Malformed("z does not match the recorded seed".into()));
        }
        Ok(())
    }
}

/// extract = build_blocks + select_subsequence + exact X_eps.
pub fn extract(
    family: &CoverFamily,
    epsilon: &Rat,
    depth: usize,
    seed: u64,
    budget: &Budget,
) -> Result<ExtractionCertificate> {
    let blocks = build_blocks(family, epsilon, depth, budget)?;
    let z = IndexSet::Ap(select_subsequence(&blocks, seed)?);
    let mut x_eps = IntervalUnion::full(family.window().clone());
    for k in 1..=blocks.depth() {
        x_eps = x_eps.intersect(&block_union(family, &blocks, k, budget)?)?;
    }
    Ok(ExtractionCertificate { epsilon: epsilon.clone(), blocks, x_eps, z, seed })
}

/// Result of gluing extractions over the epsilon sequence 1, 1/2, 1/3, ...
#[derive(Debug, Clone)]
pub struct AeExtraction {
    /// The pseudo-union almost containing every Z_{1/m}.
    pub z: PseudoUnion,
    /// The per-epsilon certificates, index m-1 holding epsilon = 1/m.
    pub certificates: Vec<ExtractionCertificate>,
}

/// Runs extract for eps = 1, 1/2, .., 1/m_max with independent sub-seeds
/// derived from (seed, m), then glues the index sets by a pseudo-union.
pub fn extract_ae(
    family: &CoverFamily,
    depth: usize,
    seed: u64,
    m_max: u64,
    budget: &Budget,
) -> Result<AeExtraction> {
    if m_max == 0 {
        return Err(Error::InvalidParameter("m_max must be at least 1".into()));
    }
    let mut certificates = Vec::with_capacity(m_max as usize);
    for m in 1..=m_max {
        let eps = rat_u64(1) / rat_u64(m);
        certificates.push(extract(family, &eps, depth, sub_seed(seed, m), budget)?);
    }
    let parts: Vec<IndexSet> = certificates.iter().map(|c| c.z.clone()).collect();
    let z = pseudo_union(&parts, budget)?;
    Ok(AeExtraction { z, certificates })
}

/// Sigma-finite gluing: one a.e. extraction per window (independent derived
/// seeds), then one more pseudo-union across the windows.
#[derive(Debug, Clone)]
pub struct SigmaFiniteExtraction {
    pub z: PseudoUnion,
    pub per_window: Vec<AeExtraction>,
}

pub fn extract_sigma_finite(
    sf: &SigmaFiniteFamily,
    depth: usize,
    seed: u64,
    m_max: u64,
    budget: &Budget,
) -> Result<SigmaFiniteExtraction> {
    let mut per_window = Vec::with_capacity(sf.pieces().len());
    for (i, piece) in sf.pieces().iter().enumerate() {
        let wseed = rng::draw(seed, rng::domain::WINDOW_SEED, i as u64);
        per_window.push(extract_ae(piece, depth, wseed, m_max, budget)?);
    }
    let parts: Vec<IndexSet> = per_window.iter().map(|w| w.z.set.clone()).collect();
    let z = pseudo_union(&parts, budget)?;
    Ok(SigmaFiniteExtraction { z, per_window })
}

impl Serialize for ExtractionCertificate {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = ser.serialize_struct("ExtractionCertificate", 6)?;
        st.serialize_field("epsilon", &Rq(self.epsilon.clone()))?;
        st.serialize_field("boundaries", self.blocks.boundaries())?;
        let residuals: Vec<Rq> =
            self.blocks.residuals().iter().map(|r| Rq(r.clone())).collect();
        st.serialize_field("residuals", &residuals)?;
        st.serialize_field("seed", &self.seed)?;
        st.serialize_field("z", &self.z)?;
        st.serialize_field("x_eps", &self.x_eps)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for ExtractionCertificate {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            epsilon: Rq,
            boundaries: Vec<u64>,
            residuals: Vec<Rq>,
            seed: u64,
            z: IndexSet,
            x_eps: IntervalUnion,
        }
        let raw = Raw::deserialize(de)?;
        let blocks = BlockStructure::new(
            raw.boundaries,
            raw.residuals.into_iter().map(|r| r.0).collect(),
            raw.epsilon.0.clone(),
        )
        .map_err(|e| D::Error::custom(e.to_string()))?;
        let cert = ExtractionCertificate {
            epsilon: raw.epsilon.0,
            blocks,
            x_eps: raw.x_eps,
            z: raw.z,
            seed: raw.seed,
        };
        cert.validate().map_err(|e| D::Error::custom(e.to_string()))?;
        Ok(cert)
    }
}
