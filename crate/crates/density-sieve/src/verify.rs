//! Exact and statistical checks that an extracted subsequence retains
//! coverage.
//!
//! The infinite "covers a.e. point infinitely often" claim is certified
//! through finite projections: `truncated_residual` measures exactly who is
//! still uncovered within a block range, `bc_bound_check` compares a seed
//! ensemble against the closed-form independence bound (j-1)/K, and
//! `monte_carlo_points` samples hit counts as a cheap statistical proxy.

use std::collections::BTreeMap;

use num::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::cover_family::{CoverFamily, FamilyKind, FamilySpec};
use crate::error::{Error, Result};
use crate::extractor::{build_blocks, select_subsequence, ExtractionCertificate};
use crate::index_sets::IndexSet;
use crate::measure_sets::{kfold_region, normalize, IntervalUnion};
use crate::rational::{rat_u64, rat_zero, Rat, Rq};
use crate::rng::{self, draw};

/// Union of the family sets chosen in block k (1-indexed): indices
/// N_{k-1} + xi_k + j*k for j below the block's progression length.
pub fn chosen_union(
    family: &CoverFamily,
    cert: &ExtractionCertificate,
    k: usize,
    budget: &Budget,
) -> Result<IntervalUnion> {
    let ap = match &cert.z {
        IndexSet::Ap(ap) => ap,
        _ => return Err(Error::Malformed("certificate z must be an AP selection".into())),
    };
    if k == 0 || k > ap.depth() {
        return Err(Error::IndexOutOfRange {
            index: k as u64,
            reason: format!("block index must lie in 1..={}", ap.depth()),
        });
    }
    let start = ap.boundaries()[k - 1];
    let end = ap.boundaries()[k];
    let mut meter = budget.start(format!("chosen union of block {k}"));
    // Accumulate raw intervals and normalize once; folding unions pairwise
    // would be quadratic in the progression length.
    let mut raw = Vec::new();
    let mut n = start + ap.choices()[k - 1];
    while n < end {
        meter.tick()?;
        raw.extend(family.get(n)?.intervals().iter().cloned());
        n += k as u64;
    }
    Ok(normalize(raw, family.window().clone()))
}

/// Exact measure of { x in X_eps : x lies in fewer than m of the chosen
/// unions over blocks j..=k_hi }.
pub fn truncated_residual(
    family: &CoverFamily,
    cert: &ExtractionCertificate,
    j: usize,
    k_hi: usize,
    m: usize,
    budget: &Budget,
) -> Result<Rat> {
    if j == 0 || j > k_hi || k_hi > cert.blocks.depth() {
        return Err(Error::IndexOutOfRange {
            index: k_hi as u64,
            reason: format!(
                "need 1 <= j <= K <= {} (got j={j}, K={k_hi})",
                cert.blocks.depth()
            ),
        });
    }
    // Pre-flight: the number of sets each block contributes is known in
    // closed form, so an over-budget request fails immediately instead of
    // grinding toward the cap.
    let bounds = cert.blocks.boundaries();
    let mut preflight = budget.start(format!("chosen unions of blocks {j}..={k_hi}"));
    for k in j..=k_hi {
        preflight.tick_n((bounds[k] - bounds[k - 1]) / k as u64)?;
    }
    let mut sets = Vec::with_capacity(k_hi - j + 1);
    for k in j..=k_hi {
        sets.push(chosen_union(family, cert, k, budget)?);
    }
    let region = kfold_region(&sets, m)?;
    Ok(cert.x_eps.difference(&region)?.measure())
}

/// Report of a Borel-Cantelli ensemble run, float-free: the statistical
/// slack is rounded to a fixed-denominator rational so reports serialize
/// deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcReport {
    pub family: FamilySpec,
    pub epsilon: Rq,
    pub depth: usize,
    pub j: usize,
    #[serde(rename = "K")]
    pub k_hi: usize,
    /// Closed-form bound: measure(X_eps) * (j-1)/K.
    pub bound: Rq,
    pub average: Rq,
    /// 3 * sqrt(sample variance / seed count), rounded up to 1e-9 steps.
    pub slack: Rq,
    pub verdict: bool,
    pub seeds: Vec<u64>,
    pub residuals: Vec<Rq>,
}

fn rat_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Rounds x up to the grid of multiples of 1e-9.
fn f64_to_rat_up(x: f64) -> Rat {
    const DEN: u64 = 1_000_000_000;
    let scaled = (x * DEN as f64).ceil().max(0.0) as u64;
    rat_u64(scaled) / rat_u64(DEN)
}

/// Runs the extraction for every seed over one shared block structure and
/// compares the seed-averaged exact residual of "never covered in blocks
/// j..=K within X_eps" against the independence bound
/// measure(X_eps) * prod_{k=j..K} (1 - 1/k) = measure(X_eps) * (j-1)/K.
pub fn bc_bound_check(
    family: &CoverFamily,
    epsilon: &Rat,
    depth: usize,
    j: usize,
    seeds: &[u64],
    budget: &Budget,
) -> Result<BcReport> {
    if seeds.len() < 30 {
        return Err(Error::InvalidParameter(format!(
            "bc_bound_check needs at least 30 seeds, got {}",
            seeds.len()
        )));
    }
    let blocks = build_blocks(family, epsilon, depth, budget)?;
    let mut x_eps = IntervalUnion::full(family.window().clone());
    for k in 1..=depth {
        let bu = family.range_union(blocks.boundaries()[k - 1], blocks.boundaries()[k], budget)?;
        x_eps = x_eps.intersect(&bu)?;
    }
    // Fixed summation order by seed index keeps the average reproducible.
    let mut residuals = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let z = IndexSet::Ap(select_subsequence(&blocks, seed)?);
        let cert = ExtractionCertificate {
            epsilon: epsilon.clone(),
            blocks: blocks.clone(),
            x_eps: x_eps.clone(),
            z,
            seed,
        };
        residuals.push(truncated_residual(family, &cert, j, depth, 1, budget)?);
    }
    let n = rat_u64(seeds.len() as u64);
    let average = residuals.iter().fold(rat_zero(), |a, b| a + b) / &n;
    let var = residuals
        .iter()
        .map(|r| {
            let d = r - &average;
            &d * &d
        })
        .fold(rat_zero(), |a, b| a + b)
        / &n;
    let slack = f64_to_rat_up(3.0 * (rat_f64(&var) / seeds.len() as f64).sqrt());
    let bound = x_eps.measure() * rat_u64(j as u64 - 1) / rat_u64(depth as u64);
    let verdict = average <= &bound + &slack;
    Ok(BcReport {
        family: family.spec(),
        epsilon: Rq(epsilon.clone()),
        depth,
        j,
        k_hi: depth,
        bound: Rq(bound),
        average: Rq(average),
        slack: Rq(slack),
        verdict,
        seeds: seeds.to_vec(),
        residuals: residuals.into_iter().map(Rq).collect(),
    })
}

/// Hit-count statistics of sampled points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McStats {
    pub points: u64,
    pub n_max: u64,
    /// hits -> number of sampled points with that many hits, sorted by hits.
    pub histogram: Vec<(u64, u64)>,
    pub min_hits: u64,
    /// Exact mean hit count over the sample.
    pub mean_hits: Rq,
}

fn dyadic_hits(x: &Rat, window_lo: &Rat, window_len: &Rat, z: &IndexSet, n_max: u64) -> u64 {
    // x's covering index at level L is 2^L - 1 + cell; walk the levels.
    let unit = (x - window_lo) / window_len;
    let mut hits = 0u64;
    let mut level = 0u32;
    loop {
        let base = (1u64 << level) - 1;
        if base >= n_max || level >= 63 {
            break;
        }
        let cell = (&unit * rat_u64(1u64 << level)).floor().to_integer();
        let cell = cell.to_u64().unwrap_or(u64::MAX);
        let n = base + cell;
        if n < n_max && z.contains(n) {
            hits += 1;
        }
        level += 1;
    }
    hits
}

/// Samples uniform points in the window and counts how many of the z-indexed
/// family sets below n_max contain each. Dyadic families use the one-index-
/// per-level closed form; other families walk the members of z (metered).
pub fn monte_carlo_points(
    family: &CoverFamily,
    z: &IndexSet,
    n_max: u64,
    points: u64,
    seed: u64,
    budget: &Budget,
) -> Result<McStats> {
    let window = family.window();
    let (lo, len) = (window.lo().clone(), window.length());
    let dyadic = matches!(family.kind(), FamilyKind::Dyadic);
    let members = if dyadic { Vec::new() } else { z.enumerate_in(0, n_max) };
    let mut meter = budget.start("monte carlo hit counting");
    let mut histogram: BTreeMap<u64, u64> = BTreeMap::new();
    let mut total_hits = 0u64;
    let mut min_hits = u64::MAX;
    for i in 0..points {
        let u = draw(seed, rng::domain::MC_POINT, i) >> 11;
        let x = &lo + &len * (rat_u64(u) / rat_u64(1u64 << 53));
        let hits = if dyadic {
            meter.tick_n(64)?;
            dyadic_hits(&x, &lo, &len, z, n_max)
        } else {
            let mut h = 0u64;
            for &n in &members {
                meter.tick()?;
                if family.get(n)?.contains_point(&x) {
                    h += 1;
                }
            }
            h
        };
        *histogram.entry(hits).or_insert(0) += 1;
        total_hits += hits;
        min_hits = min_hits.min(hits);
    }
    Ok(McStats {
        points,
        n_max,
        histogram: histogram.into_iter().collect(),
        min_hits: if points == 0 { 0 } else { min_hits },
        mean_hits: Rq(if points == 0 {
            rat_zero()
        } else {
            rat_u64(total_hits) / rat_u64(points)
        }),
    })
}

/// One named check inside a report document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub details: serde_json::Value,
}

/// Machine-readable report plus a plain-text rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn push(&mut self, name: impl Into<String>, passed: bool, details: serde_json::Value) {
        self.checks.push(Check { name: name.into(), passed, details });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Fixed-width text table: name, verdict, compact details.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let width = self
            .checks
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(5)
            .max(5);
        out.push_str(&format!("{:<width$}  {:<6}  details\n", "check", "result"));
        for c in &self.checks {
            let verdict = if c.passed { "pass" } else { "FAIL" };
            out.push_str(&format!("{:<width$}  {:<6}  {}\n", c.name, verdict, c.details));
        }
        if self.checks.is_empty() {
            out.push_str("(no checks)\n");
        }
        out
    }
}
