//! Command-line front end: reproducible extraction, verification,
//! pseudo-union, and counterexample runs emitting canonical JSON.
//!
//! Exit codes: 0 success, 2 usage or spec errors, 3 mathematical or budget
//! failures. Rationals on the command line are "p/q" strings; outputs
//! contain no floating point.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use density_sieve::budget::Budget;
use density_sieve::counterexample::{build_cantor_system, coverage_count, defeat, validate_system};
use density_sieve::cover_family::CoverFamily;
use density_sieve::error::{Error, Result};
use density_sieve::extractor::{extract, ExtractionCertificate};
use density_sieve::index_sets::IndexSet;
use density_sieve::measure_sets::Window;
use density_sieve::pideal::{pseudo_union, PseudoUnion};
use density_sieve::rational::{format_rat, parse_rat};
use density_sieve::verify::{bc_bound_check, monte_carlo_points, truncated_residual, Report};

#[derive(Parser)]
#[command(name = "density-sieve", version, about = "Thin measurable covers to density-zero subsequences, with exact certificates")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build blocks, draw a subsequence, and write the certificate.
    Extract(ExtractArgs),
    /// Check a certificate: Borel-Cantelli ensemble, exact residuals,
    /// Monte Carlo hit counts.
    Verify(VerifyArgs),
    /// Glue density-zero index sets into one pseudo-union.
    #[command(name = "pseudo-union")]
    PseudoUnion(PuArgs),
    /// Build the Cantor block system and defeat a density-zero set.
    Counterexample(CeArgs),
    /// Small end-to-end tour of the machinery.
    Demo,
}

#[derive(Args)]
struct FamilyArgs {
    /// Builtin family (dyadic, rotation, random) or a family-spec JSON path.
    #[arg(long, default_value = "dyadic")]
    family: String,
    /// Rotation step as "p/q" (rotation family only).
    #[arg(long)]
    step: Option<String>,
    /// Rotation arc length as "p/q" (rotation family only).
    #[arg(long)]
    length: Option<String>,
    /// Seed of the random family (random family only).
    #[arg(long)]
    family_seed: Option<u64>,
    /// Window as "lo,hi" with rational endpoints, default "0,1".
    #[arg(long)]
    window: Option<String>,
}

impl FamilyArgs {
    fn window(&self) -> Result<Window> {
        match &self.window {
            None => Ok(Window::unit()),
            Some(s) => {
                let (lo, hi) = s.split_once(',').ok_or_else(|| {
                    Error::InvalidParameter(format!("window must be \"lo,hi\", got {s:?}"))
                })?;
                Window::new(parse_rat(lo.trim())?, parse_rat(hi.trim())?)
            }
        }
    }

    fn resolve(&self) -> Result<CoverFamily> {
        let window = self.window()?;
        match self.family.as_str() {
            "dyadic" => Ok(CoverFamily::dyadic(window)),
            "rotation" => {
                let step = self.step.as_deref().ok_or_else(|| {
                    Error::InvalidParameter("rotation family needs --step".into())
                })?;
                let length = self.length.as_deref().ok_or_else(|| {
                    Error::InvalidParameter("rotation family needs --length".into())
                })?;
                CoverFamily::rotation(window, parse_rat(step)?, parse_rat(length)?)
            }
            "random" => {
                let seed = self.family_seed.ok_or_else(|| {
                    Error::InvalidParameter("random family needs --family-seed".into())
                })?;
                Ok(CoverFamily::shrinking_random(window, seed))
            }
            path => CoverFamily::from_file(Path::new(path)),
        }
    }
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Target residual bound as "p/q".
    #[arg(long)]
    epsilon: String,
    /// Number of blocks to build.
    #[arg(long)]
    depth: usize,
    /// Selection seed; defaults to 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "certificate.json")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Certificate file produced by `extract`.
    #[arg(long)]
    cert: PathBuf,
    #[command(flatten)]
    family: FamilyArgs,
    /// First block of the checked range.
    #[arg(long)]
    j: Option<usize>,
    /// Last block of the checked range (default: certificate depth).
    #[arg(long = "K")]
    k_hi: Option<usize>,
    /// Seed-ensemble size: runs the Borel-Cantelli bound check.
    #[arg(long)]
    seeds: Option<u64>,
    /// Compute the exact truncated residual of the certificate itself.
    #[arg(long)]
    residual: bool,
    /// Multiplicity for --residual (default 1).
    #[arg(long)]
    m: Option<usize>,
    /// Sample points: runs Monte Carlo hit counting.
    #[arg(long)]
    mc: bool,
    #[arg(long)]
    points: Option<u64>,
    #[arg(long)]
    n_max: Option<u64>,
    /// Sampling seed for --mc; defaults to 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
}

#[derive(Args)]
struct PuArgs {
    /// Index-set JSON files, one per part, in order.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value = "pseudo_union.json")]
    out: PathBuf,
}

#[derive(Args)]
struct CeArgs {
    /// Number of blocks to build (sizes grow super-exponentially).
    #[arg(long, default_value_t = 4)]
    depth: usize,
    /// Density-zero set to defeat: "empty", "squares[:offset]",
    /// "powers[:base]", or an index-set JSON path.
    #[arg(long, default_value = "squares")]
    z: String,
    #[arg(long, default_value = "defeat.json")]
    out: PathBuf,
}

/// Canonical JSON: keys sorted (serde_json value objects), pretty-printed,
/// trailing newline. Same inputs produce byte-identical files.
fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn parse_z_source(src: &str) -> Result<IndexSet> {
    let (head, arg) = match src.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (src, None),
    };
    let num = |a: Option<&str>, default: u64| -> Result<u64> {
        match a {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad numeric argument {s:?}"))),
        }
    };
    match head {
        "empty" => Ok(IndexSet::empty()),
        "squares" => Ok(IndexSet::Squares { offset: num(arg, 0)? }),
        "powers" => {
            let base = num(arg, 2)?;
            if base < 2 {
                return Err(Error::InvalidParameter("powers base must be at least 2".into()));
            }
            Ok(IndexSet::Powers { base })
        }
        _ => {
            let text = std::fs::read_to_string(src)?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

fn cmd_extract(args: &ExtractArgs) -> Result<ExitCode> {
    let family = args.family.resolve()?;
    let epsilon = parse_rat(&args.epsilon)?;
    let seed = args.seed.unwrap_or(0);
    if args.seed.is_none() {
        println!("no --seed given; using default seed 0");
    }
    let budget = Budget::from_env();
    let cert = extract(&family, &epsilon, args.depth, seed, &budget)?;

    let mut out = serde_json::to_value(&cert)?;
    out["config"] = json!({
        "command": "extract",
        "family": family.spec(),
        "epsilon": format_rat(&epsilon),
        "depth": args.depth,
        "seed": seed,
    });
    write_json(&args.out, &out)?;

    println!("boundaries: {:?}", cert.blocks.boundaries());
    let top = cert.blocks.last_boundary();
    println!(
        "realized density at N_{} = {}: {}",
        args.depth,
        top,
        format_rat(&cert.z.density_at(top)?)
    );
    println!("{:>3} {:>12} residual", "k", "N_k");
    for (k, r) in cert.blocks.residuals().iter().enumerate() {
        println!("{:>3} {:>12} {}", k + 1, cert.blocks.boundaries()[k + 1], format_rat(r));
    }
    println!("certificate written to {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: &VerifyArgs) -> Result<ExitCode> {
    let family = args.family.resolve()?;
    let text = std::fs::read_to_string(&args.cert)?;
    let cert: ExtractionCertificate = serde_json::from_str(&text)?;
    let budget = Budget::from_env();
    let depth = cert.blocks.depth();
    let k_hi = args.k_hi.unwrap_or(depth);
    let mut report = Report::default();

    if let Some(count) = args.seeds {
        let j = args.j.unwrap_or(2);
        let seeds: Vec<u64> = (0..count).collect();
        let bc = bc_bound_check(&family, &cert.epsilon, k_hi, j, &seeds, &budget)?;
        report.push("bc-bound", bc.verdict, serde_json::to_value(&bc)?);
    }
    if args.residual {
        let j = args.j.unwrap_or(1);
        let m = args.m.unwrap_or(1);
        let r = truncated_residual(&family, &cert, j, k_hi, m, &budget)?;
        report.push(
            "truncated-residual",
            true,
            json!({"j": j, "K": k_hi, "m": m, "measure": format_rat(&r)}),
        );
    }
    if args.mc {
        let n_max = args.n_max.unwrap_or(cert.blocks.last_boundary());
        let points = args.points.unwrap_or(1000);
        let stats = monte_carlo_points(&family, &cert.z, n_max, points, args.seed.unwrap_or(0), &budget)?;
        report.push("monte-carlo", true, serde_json::to_value(&stats)?);
    }

    let mut out = serde_json::to_value(&report)?;
    out["config"] = json!({
        "command": "verify",
        "family": family.spec(),
        "cert": args.cert.display().to_string(),
        "j": args.j,
        "K": k_hi,
        "seeds": args.seeds,
        "residual": args.residual,
        "m": args.m,
        "mc": args.mc,
        "points": args.points,
        "n_max": args.n_max,
        "seed": args.seed,
    });
    write_json(&args.out, &out)?;
    print!("{}", report.render_text());
    println!("report written to {}", args.out.display());
    Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn cmd_pseudo_union(args: &PuArgs) -> Result<ExitCode> {
    let mut parts = Vec::with_capacity(args.inputs.len());
    for path in &args.inputs {
        let text = std::fs::read_to_string(path)?;
        parts.push(serde_json::from_str::<IndexSet>(&text)?);
    }
    let budget = Budget::from_env();
    let pu: PseudoUnion = pseudo_union(&parts, &budget)?;

    let mut out = serde_json::to_value(&pu)?;
    out["config"] = json!({
        "command": "pseudo-union",
        "inputs": args.inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    write_json(&args.out, &out)?;

    println!("cutoffs: {:?}", pu.cutoffs);
    for (m, (part, &t)) in parts.iter().zip(&pu.cutoffs).enumerate() {
        let omitted: Vec<u64> = part
            .enumerate_in(0, t)
            .into_iter()
            .filter(|&n| !pu.set.contains(n))
            .collect();
        println!(
            "part {}: almost contained; {} member(s) omitted below cutoff {t}",
            m + 1,
            omitted.len()
        );
    }
    println!("pseudo-union written to {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_counterexample(args: &CeArgs) -> Result<ExitCode> {
    let z = parse_z_source(&args.z)?;
    let budget = Budget::from_env();
    let sys = build_cantor_system(args.depth)?;
    let validation = validate_system(&sys);
    if !validation.all_passed() {
        return Err(Error::Malformed(format!(
            "built system failed validation: {validation:?}"
        )));
    }
    let d = defeat(&sys, &z, &budget)?;
    let coverage = coverage_count(&sys, &d.point, &z)?;

    let out = json!({
        "config": {"command": "counterexample", "depth": args.depth, "z": args.z},
        "validation": validation,
        "n0": d.n0,
        "start_block": d.start_block,
        "chain": d.chain.iter().map(|n| n.to_string()).collect::<Vec<_>>(),
        "point": d.point.to_bit_string(),
        "coverage_count": coverage,
    });
    write_json(&args.out, &out)?;

    println!("validation: all three properties hold");
    println!("n0 (density-1/2 threshold): {}", d.n0);
    println!("chain starts at block {}", d.start_block);
    println!("chain: {:?}", d.chain.iter().map(|n| n.to_string()).collect::<Vec<_>>());
    println!("coverage count of the limit point: {coverage}");
    println!("defeat report written to {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_demo() -> Result<ExitCode> {
    let budget = Budget::from_env();
    let family = CoverFamily::dyadic_unit();
    let epsilon = parse_rat("1/4")?;

    println!("1. extracting from the dyadic family (epsilon 1/4, depth 12, seed 7)");
    let cert = extract(&family, &epsilon, 12, 7, &budget)?;
    println!("   boundaries: {:?}", cert.blocks.boundaries());
    let top = cert.blocks.last_boundary();
    println!("   density of Z at {top}: {}", format_rat(&cert.z.density_at(top)?));

    println!("2. exact residual of blocks 2..12 within X_eps");
    let r = truncated_residual(&family, &cert, 2, 12, 1, &budget)?;
    println!("   measure never covered: {}", format_rat(&r));

    println!("3. pseudo-union of squares and powers of two");
    let pu = pseudo_union(
        &[IndexSet::Squares { offset: 0 }, IndexSet::Powers { base: 2 }],
        &budget,
    )?;
    println!("   cutoffs: {:?}", pu.cutoffs);

    println!("4. Cantor counterexample, depth 4, defeating the squares");
    let sys = build_cantor_system(4)?;
    let d = defeat(&sys, &IndexSet::Squares { offset: 0 }, &budget)?;
    let coverage = coverage_count(&sys, &d.point, &IndexSet::Squares { offset: 0 })?;
    println!("   n0 = {}, chain length {}, coverage count {}", d.n0, d.chain.len(), coverage);

    println!("done");
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.cmd {
        Cmd::Extract(args) => cmd_extract(args),
        Cmd::Verify(args) => cmd_verify(args),
        Cmd::PseudoUnion(args) => cmd_pseudo_union(args),
        Cmd::Counterexample(args) => cmd_counterexample(args),
        Cmd::Demo => cmd_demo(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
