//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line (visible with --nocapture, and in the captured output of
//! any failing test).
//!
//! Criteria 4 and 5 are attempted faithfully at their stated parameters.
//! They exceed any exact-representation budget: the dyadic family's block
//! boundaries grow geometrically, so the chosen unions past roughly block 24
//! would need more interval components than the iteration cap allows. The
//! runs fail fast with diagnosable budget errors, and the tests report that
//! honestly instead of substituting smaller parameters.

use std::time::Instant;

use density_sieve::budget::Budget;
use density_sieve::counterexample::{
    build_cantor_system, coverage_count, defeat, validate_system, BlockRep, Cylinder,
};
use density_sieve::cover_family::{Continuation, CoverFamily};
use density_sieve::extractor::{
    build_blocks, extract, extract_sigma_finite, select_subsequence,
};
use density_sieve::index_sets::{verify_density_on, IndexSet, DENSITY_CHECK_FACTOR};
use density_sieve::measure_sets::{kfold_region, normalize, Interval, IntervalUnion, Window};
use density_sieve::pideal::{pseudo_union, PseudoUnion};
use density_sieve::rational::{rat, rat_to_f64, rat_zero, Rat};
use density_sieve::rng::draw;
use density_sieve::verify::{bc_bound_check, truncated_residual};
use density_sieve::cover_family::SigmaFiniteFamily;

fn budget() -> Budget {
    Budget::from_env()
}

fn verdict(criterion: u32, description: &str, passed: bool, detail: String) {
    use std::io::Write;
    let tag = if passed { "PASS" } else { "FAIL" };
    let line = format!("ACCEPTANCE {criterion:02} {tag}: {description} — {detail}");
    // Write straight to the stdout fd so the line is visible even when the
    // harness captures per-test output of passing tests.
    let _ = writeln!(std::io::stdout(), "{line}");
    assert!(passed, "criterion {criterion} failed: {detail}");
}

#[test]
fn criterion_01_block_construction_trace() {
    let t0 = Instant::now();
    let f = CoverFamily::dyadic_unit();
    let blocks = build_blocks(&f, &rat(1, 4), 3, &budget()).unwrap();
    let ok = blocks.boundaries() == [0, 1, 3, 9]
        && blocks.residuals().iter().all(|r| *r == rat_zero())
        && t0.elapsed().as_secs_f64() < 1.0;
    verdict(
        1,
        "dyadic blocks at epsilon 1/4 depth 3",
        ok,
        format!("boundaries {:?} in {:?}", blocks.boundaries(), t0.elapsed()),
    );
}

#[test]
fn criterion_02_invariants_on_random_runs() {
    const META_SEED: u64 = 0xACCE;
    let mut violations = Vec::new();
    for run in 0..50u64 {
        let pick = |slot: u64, m: u64| draw(META_SEED, slot, run) % m;
        let epsilon = [rat(1, 1), rat(1, 2), rat(1, 4)][pick(1, 3) as usize].clone();
        let seed = draw(META_SEED, 2, run);
        let (family, depth) = match pick(3, 3) {
            0 => (CoverFamily::dyadic_unit(), 2 + pick(4, 15) as usize),
            1 => {
                let q = 2 + pick(5, 10) as i64;
                let f = CoverFamily::rotation(Window::unit(), rat(1, q), rat(q + 1, 2 * q))
                    .unwrap();
                (f, 5 + pick(6, 26) as usize)
            }
            // Random families have no closed-form range unions, so their
            // block search scans set by set; modest depths keep the exact
            // arithmetic affordable.
            _ => (
                CoverFamily::shrinking_random(Window::unit(), draw(META_SEED, 7, run)),
                3 + pick(8, 4) as usize,
            ),
        };
        let blocks = match build_blocks(&family, &epsilon, depth, &budget()) {
            Ok(b) => b,
            Err(e) => {
                violations.push(format!("run {run}: build failed: {e}"));
                continue;
            }
        };
        let ap = select_subsequence(&blocks, seed).unwrap();
        for k in 1..=depth {
            let (lo, hi) = (blocks.boundaries()[k - 1], blocks.boundaries()[k]);
            if (hi - lo) % k as u64 != 0 {
                violations.push(format!("run {run}: block {k} length not divisible"));
            }
            let mut all: Vec<u64> =
                (0..k as u64).flat_map(|i| ap.progression(k, i)).collect();
            all.sort_unstable();
            if all != (lo..hi).collect::<Vec<_>>() {
                violations.push(format!("run {run}: block {k} progressions do not partition"));
            }
        }
    }
    verdict(
        2,
        "divisibility and partition invariants over 50 random runs",
        violations.is_empty(),
        if violations.is_empty() { "zero violations".into() } else { violations.join("; ") },
    );
}

#[test]
fn criterion_03_density_zero_at_depth_60() {
    let t0 = Instant::now();
    let f = CoverFamily::dyadic_unit();
    let cert = extract(&f, &rat(1, 4), 60, 7, &budget()).unwrap();
    let top = cert.blocks.last_boundary();
    let density = cert.z.density_at(top).unwrap();
    let ap = match &cert.z {
        IndexSet::Ap(ap) => ap,
        _ => unreachable!(),
    };
    let closed_matches = ap.closed_form_count(60) == cert.z.prefix_count(top);
    // Independent membership scan on a prefix confirms the counting formula
    // element by element.
    let mut count = 0u64;
    let mut scan_ok = true;
    for n in 0..50_000u64 {
        if cert.z.prefix_count(n) != count {
            scan_ok = false;
            break;
        }
        if cert.z.contains(n) {
            count += 1;
        }
    }
    let elapsed = t0.elapsed();
    let ok = density <= rat(6, 100) && closed_matches && scan_ok && elapsed.as_secs_f64() < 30.0;
    verdict(
        3,
        "extracted Z has exact density <= 0.06 at N_60",
        ok,
        format!(
            "N_60 = {top}, density ~{:.4}, closed-form match {closed_matches}, in {elapsed:?}",
            rat_to_f64(&density)
        ),
    );
}

#[test]
fn criterion_04_borel_cantelli_bound_k50() {
    // Stated parameters: epsilon 1/8, j = 2, K = 50, 100 seeds. The chosen
    // unions past block ~24 need more components than the iteration budget
    // allows, so this is expected to fail with a budget error; the criterion
    // is reported honestly rather than shrunk.
    let t0 = Instant::now();
    let f = CoverFamily::dyadic_unit();
    let seeds: Vec<u64> = (0..100).collect();
    match bc_bound_check(&f, &rat(1, 8), 50, 2, &seeds, &budget()) {
        Ok(report) => {
            let ok = report.verdict;
            verdict(
                4,
                "seed-averaged residual within (j-1)/K + slack at K=50",
                ok,
                format!(
                    "average {} vs bound {} + slack {} in {:?}",
                    report.average.0, report.bound.0, report.slack.0, t0.elapsed()
                ),
            );
        }
        Err(e) => verdict(
            4,
            "seed-averaged residual within (j-1)/K + slack at K=50",
            false,
            format!("not computable within budget: {e} (after {:?})", t0.elapsed()),
        ),
    }
}

#[test]
fn criterion_05_multiplicity_proxy_k20_to_k60() {
    // Exact measure of X_eps points covered fewer than 5 times by Z over
    // blocks 1..=K, at K = 20, 40, 60. K = 20 is computable; K = 40 and 60
    // exceed the exact-representation budget (see criterion 4), so this is
    // expected to fail honestly at the stated parameters.
    let t0 = Instant::now();
    let f = CoverFamily::dyadic_unit();
    let cert = extract(&f, &rat(1, 8), 60, 7, &budget()).unwrap();
    let mut values = Vec::new();
    let mut failure = None;
    for k_hi in [20usize, 40, 60] {
        match truncated_residual(&f, &cert, 1, k_hi, 5, &budget()) {
            Ok(r) => values.push((k_hi, r)),
            Err(e) => {
                failure = Some(format!("K={k_hi}: {e}"));
                break;
            }
        }
    }
    let detail_values: Vec<String> = values
        .iter()
        .map(|(k, r)| format!("K={k}: ~{:.4}", rat_to_f64(r)))
        .collect();
    match failure {
        None => {
            let monotone = values.windows(2).all(|w| w[1].1 <= w[0].1);
            let final_ok = values.last().map(|(_, r)| *r <= rat(1, 10)).unwrap_or(false);
            verdict(
                5,
                "fewer-than-5-times measure <= 0.1 and nonincreasing over K",
                monotone && final_ok,
                format!("{} in {:?}", detail_values.join(", "), t0.elapsed()),
            );
        }
        Some(err) => verdict(
            5,
            "fewer-than-5-times measure <= 0.1 and nonincreasing over K",
            false,
            format!(
                "computed {} but {err} (after {:?})",
                detail_values.join(", "),
                t0.elapsed()
            ),
        ),
    }
}

#[test]
fn criterion_06_pseudo_union() {
    let t0 = Instant::now();
    let mut parts = vec![IndexSet::Squares { offset: 0 }, IndexSet::Powers { base: 2 }];
    parts.extend((1..=5).map(|j| IndexSet::Squares { offset: j }));
    let pu: PseudoUnion = pseudo_union(&parts, &budget()).unwrap();

    let mut problems = Vec::new();
    // Every part minus the result is finite: omissions only below the cutoff
    // (exact scan on [0, 1e5)).
    for (m, (part, &t)) in parts.iter().zip(&pu.cutoffs).enumerate() {
        for n in part.enumerate_in(0, 100_000) {
            if !pu.set.contains(n) && n >= t {
                problems.push(format!("part {m} member {n} missing above cutoff {t}"));
            }
        }
    }
    // Re-verify the certified density levels by independent exact scan.
    for m in 1..=parts.len() {
        let t = pu.cutoffs[m - 1];
        let bound = PseudoUnion::level_bound(m);
        let hi = t.saturating_mul(DENSITY_CHECK_FACTOR);
        if let Err(e) = verify_density_on(&pu.set, &bound, t, hi, &budget()) {
            problems.push(format!("level {m} scan on [{t}, {hi}]: {e}"));
        }
    }
    let elapsed = t0.elapsed();
    let ok = problems.is_empty() && elapsed.as_secs_f64() < 60.0;
    verdict(
        6,
        "pseudo-union of squares, powers, and 5 shifted square families",
        ok,
        if problems.is_empty() {
            format!("cutoffs {:?} in {elapsed:?}", pu.cutoffs)
        } else {
            problems.join("; ")
        },
    );
}

#[test]
fn criterion_07_sigma_finite_gluing() {
    let t0 = Instant::now();
    let w2 = Window::new(rat(1, 1), rat(2, 1)).unwrap();
    let sf = SigmaFiniteFamily::new(vec![
        CoverFamily::dyadic_unit(),
        CoverFamily::dyadic(w2),
    ])
    .unwrap();
    let got = extract_sigma_finite(&sf, 40, 11, 2, &budget()).unwrap();

    let mut problems = Vec::new();
    // Per-window almost containment.
    for (i, w) in got.per_window.iter().enumerate() {
        let t_i = got.z.cutoffs[i];
        for n in w.z.set.enumerate_in(t_i, t_i + 50_000) {
            if !got.z.set.contains(n) {
                problems.push(format!("window {i}: member {n} missing above cutoff {t_i}"));
                break;
            }
        }
    }
    // Glued density certification: independent exact scan of every level
    // bound on [t_m, 10 t_m], as in criterion 6.
    for m in 1..=got.z.cutoffs.len() {
        let t = got.z.cutoffs[m - 1];
        let bound = PseudoUnion::level_bound(m);
        let hi = t.saturating_mul(DENSITY_CHECK_FACTOR);
        if let Err(e) = verify_density_on(&got.z.set, &bound, t, hi, &budget()) {
            problems.push(format!("glued level {m} scan on [{t}, {hi}]: {e}"));
        }
    }
    // Exact density at the deepest built boundary via the closed-form count,
    // as in criterion 3.
    let top = got
        .per_window
        .iter()
        .flat_map(|w| w.certificates.iter())
        .map(|c| c.blocks.last_boundary())
        .max()
        .unwrap();
    let density = got.z.set.density_at(top).unwrap();
    let last_bound = PseudoUnion::level_bound(got.z.cutoffs.len());
    if density > last_bound {
        problems.push(format!("glued density {density} at {top} above {last_bound}"));
    }
    let elapsed = t0.elapsed();
    let ok = problems.is_empty();
    verdict(
        7,
        "sigma-finite gluing over two disjoint unit windows",
        ok,
        if ok {
            format!(
                "cutoffs {:?}, density ~{:.5} at {top}, in {elapsed:?}",
                got.z.cutoffs,
                rat_to_f64(&density)
            )
        } else {
            problems.join("; ")
        },
    );
}

#[test]
fn criterion_08_counterexample() {
    let t0 = Instant::now();
    let sys = build_cantor_system(4).unwrap();
    let mut problems = Vec::new();

    let report = validate_system(&sys);
    if !report.all_passed() {
        problems.push(format!("validation failed: {report:?}"));
    }

    let z = IndexSet::Squares { offset: 0 };
    let d = defeat(&sys, &z, &budget()).unwrap();
    if d.chain.iter().any(|&n| z.contains_u128(n)) {
        problems.push("chain touches a square".into());
    }
    let cover = coverage_count(&sys, &d.point, &z).unwrap();
    let n0_block = sys
        .boundaries()
        .partition_point(|&b| b <= d.n0 as u128);
    if cover as usize > n0_block {
        problems.push(format!("coverage {cover} exceeds n0's block index {n0_block}"));
    }

    // Injected violations of each property are detected.
    let mut growth_fault = sys.clone();
    if let BlockRep::Explicit { ranges, .. } = &mut growth_fault.blocks_mut()[2] {
        ranges[1].start = ranges[1].last() + 7;
    }
    if validate_system(&growth_fault).growth.passed {
        problems.push("mutated (t, s) not detected".into());
    }
    let mut partition_fault = sys.clone();
    if let BlockRep::Explicit { sets, .. } = &mut partition_fault.blocks_mut()[1] {
        sets.remove(2);
    }
    if validate_system(&partition_fault).partition.passed {
        problems.push("missing cylinder not detected".into());
    }
    let mut refinement_fault = sys.clone();
    if let BlockRep::Explicit { sets, .. } = &mut refinement_fault.blocks_mut()[2] {
        sets[0] = Cylinder::from_bit_string("11111").unwrap();
    }
    if validate_system(&refinement_fault).refinement.passed {
        problems.push("foreign prefix not detected".into());
    }

    let elapsed = t0.elapsed();
    let ok = problems.is_empty() && elapsed.as_secs_f64() < 10.0;
    verdict(
        8,
        "depth-4 system valid, squares defeated, faults detected",
        ok,
        if problems.is_empty() {
            format!(
                "n0 = {}, chain {:?}, coverage {cover}, in {elapsed:?}",
                d.n0,
                d.chain.iter().map(|n| n.to_string()).collect::<Vec<_>>()
            )
        } else {
            problems.join("; ")
        },
    );
}

#[test]
fn criterion_09_oracle_equivalence() {
    const META_SEED: u64 = 0x09AC;
    let mut discrepancies = Vec::new();

    let rand_rat = |slot: u64, i: u64, den: i64| -> Rat {
        rat((draw(META_SEED, slot, i) % den as u64) as i64, den)
    };

    // kfold_region vs midpoint counting on random instances.
    for i in 0..100u64 {
        let set_count = 1 + (draw(META_SEED, 1, i) % 12) as usize;
        let sets: Vec<IntervalUnion> = (0..set_count as u64)
            .map(|s| {
                let pieces = 1 + draw(META_SEED, 2, i * 64 + s) % 3;
                let raw: Vec<Interval> = (0..pieces)
                    .map(|p| {
                        let lo = rand_rat(3, i * 4096 + s * 8 + p, 1000);
                        let len = rat(1 + (draw(META_SEED, 4, i * 4096 + s * 8 + p) % 300) as i64, 1000);
                        Interval::new(lo.clone(), lo + len)
                    })
                    .collect();
                normalize(raw, Window::unit())
            })
            .collect();
        let m = 1 + (draw(META_SEED, 5, i) % 4) as usize;
        let region = kfold_region(&sets, m).unwrap();

        let mut cuts: Vec<Rat> = vec![rat(0, 1), rat(1, 1)];
        for s in &sets {
            for iv in s.intervals() {
                cuts.push(iv.lo.clone());
                cuts.push(iv.hi.clone());
            }
        }
        cuts.sort();
        cuts.dedup();
        let mut brute = rat_zero();
        for w in cuts.windows(2) {
            let mid = (&w[0] + &w[1]) / rat(2, 1);
            let hits = sets.iter().filter(|s| s.contains_point(&mid)).count();
            let inside = region.contains_point(&mid);
            if (hits >= m) != inside {
                discrepancies.push(format!("instance {i}: midpoint {mid} misclassified"));
            }
            if hits >= m {
                brute += &w[1] - &w[0];
            }
        }
        if brute != region.measure() {
            discrepancies.push(format!("instance {i}: kfold measure mismatch"));
        }
    }

    // truncated_residual vs the same midpoint oracle on random families.
    for i in 0..20u64 {
        let sets: Vec<IntervalUnion> = (0..10u64)
            .map(|s| {
                let lo = rand_rat(6, i * 32 + s, 1000);
                let len = rat(1 + (draw(META_SEED, 7, i * 32 + s) % 400) as i64, 1000);
                normalize(vec![Interval::new(lo.clone(), lo + len)], Window::unit())
            })
            .collect();
        let family = CoverFamily::from_sets(Window::unit(), sets, Continuation::Repeat).unwrap();
        // Vacuously large epsilon: the oracle needs valid blocks, not a
        // covering family.
        let cert = extract(&family, &rat(16, 1), 3, draw(META_SEED, 8, i), &budget()).unwrap();
        let m = 1 + (draw(META_SEED, 9, i) % 3) as usize;
        let exact = truncated_residual(&family, &cert, 1, 3, m, &budget()).unwrap();

        let chosen: Vec<IntervalUnion> = (1..=3usize)
            .map(|k| density_sieve::verify::chosen_union(&family, &cert, k, &budget()).unwrap())
            .collect();
        let mut cuts: Vec<Rat> = vec![rat(0, 1), rat(1, 1)];
        for s in chosen.iter().chain(std::iter::once(&cert.x_eps)) {
            for iv in s.intervals() {
                cuts.push(iv.lo.clone());
                cuts.push(iv.hi.clone());
            }
        }
        cuts.sort();
        cuts.dedup();
        let mut brute = rat_zero();
        for w in cuts.windows(2) {
            let mid = (&w[0] + &w[1]) / rat(2, 1);
            let hits = chosen.iter().filter(|s| s.contains_point(&mid)).count();
            if cert.x_eps.contains_point(&mid) && hits < m {
                brute += &w[1] - &w[0];
            }
        }
        if brute != exact {
            discrepancies.push(format!("residual instance {i}: {exact} vs brute {brute}"));
        }
    }

    verdict(
        9,
        "kfold_region and truncated_residual match the midpoint oracle",
        discrepancies.is_empty(),
        if discrepancies.is_empty() {
            "zero discrepancies over 120 instances".into()
        } else {
            discrepancies.join("; ")
        },
    );
}

#[test]
fn criterion_10_cli_determinism() {
    use std::process::Command;
    let bin = env!("CARGO_BIN_EXE_density-sieve");

    let run_twice = |label: &str, args: &[&str], outputs: &[&str], prep: &dyn Fn(&std::path::Path)| -> Vec<String> {
        let mut problems = Vec::new();
        let mut captured: Option<(Vec<u8>, Vec<Vec<u8>>)> = None;
        for _ in 0..2 {
            let dir = tempfile::tempdir().unwrap();
            prep(dir.path());
            let out = Command::new(bin)
                .args(args)
                .current_dir(dir.path())
                .output()
                .unwrap();
            if !out.status.success() {
                problems.push(format!(
                    "{label}: exited {:?}: {}",
                    out.status.code(),
                    String::from_utf8_lossy(&out.stderr)
                ));
                return problems;
            }
            let files: Vec<Vec<u8>> = outputs
                .iter()
                .map(|f| std::fs::read(dir.path().join(f)).unwrap_or_default())
                .collect();
            match &captured {
                None => captured = Some((out.stdout.clone(), files)),
                Some((stdout, prev)) => {
                    if *stdout != out.stdout {
                        problems.push(format!("{label}: stdout differs between runs"));
                    }
                    if *prev != files {
                        problems.push(format!("{label}: output files differ between runs"));
                    }
                }
            }
        }
        problems
    };

    let noprep = |_: &std::path::Path| {};
    let with_cert = |dir: &std::path::Path| {
        let status = Command::new(bin)
            .args(["extract", "--family", "dyadic", "--epsilon", "1/4", "--depth", "6", "--seed", "9"])
            .current_dir(dir)
            .status()
            .unwrap();
        assert!(status.success());
    };
    let with_sets = |dir: &std::path::Path| {
        std::fs::write(dir.join("sq.json"), "{\"squares\":{\"offset\":0}}\n").unwrap();
        std::fs::write(dir.join("pw.json"), "{\"powers\":{\"base\":2}}\n").unwrap();
    };

    let mut problems = Vec::new();
    problems.extend(run_twice(
        "extract",
        &["extract", "--family", "dyadic", "--epsilon", "1/4", "--depth", "6", "--seed", "9"],
        &["certificate.json"],
        &noprep,
    ));
    problems.extend(run_twice(
        "verify",
        &["verify", "--cert", "certificate.json", "--seeds", "30", "--j", "2",
          "--residual", "--mc", "--points", "40"],
        &["report.json"],
        &with_cert,
    ));
    problems.extend(run_twice(
        "pseudo-union",
        &["pseudo-union", "sq.json", "pw.json"],
        &["pseudo_union.json"],
        &with_sets,
    ));
    problems.extend(run_twice(
        "counterexample",
        &["counterexample", "--depth", "4", "--z", "squares"],
        &["defeat.json"],
        &noprep,
    ));
    problems.extend(run_twice("demo", &["demo"], &[], &noprep));

    verdict(
        10,
        "every CLI subcommand is byte-identical across repeated runs",
        problems.is_empty(),
        if problems.is_empty() { "5 subcommands checked".into() } else { problems.join("; ") },
    );
}
