use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use zpcover::balanced::{aa_iterate, IterationConfig, PartitionMode};
use zpcover::bounds::{aam_lower_bound, bound_report, bound_report_log2, BoundReport};
use zpcover::certify::{
    export_partition_matroids, family_to_colorings, verify_certificate, verify_matroid_intersection_equals_cliques,
    ColoringCertificate, SubsetMode, EXHAUSTIVE_MAX_ELEMENTS,
};
use zpcover::constructions::{
    base_p_family_within, bit_lift, build_upperbound_family, concat_boost, find_scaling_set_with, scale_boost,
    scale_cover_boost, BaseKind, LiftCopies, PipelineOptions, DEFAULT_SCALING_ATTEMPTS,
};
use zpcover::family::io::{read_family, write_family};
use zpcover::prophet::gap_report;
use zpcover::{CoverSet, CoverageReport, CoveringFamily, MemoryBudget, PrimeModulus};

#[derive(Debug, Parser)]
#[command(name = "zpcover", version, about = "Covering families over Z_p")]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Memory budget in bytes for any single materialized family.
    #[arg(long, global = true, default_value_t = MemoryBudget::DEFAULT_BYTES)]
    budget: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a family, verify it, and write it with a JSON sidecar.
    Construct {
        #[command(subcommand)]
        kind: ConstructKind,
    },
    /// Check that a family is S-covering.
    Verify {
        family: PathBuf,
        /// `Zp`, `Zp*`, or a comma-separated list (default: the claimed set, else `Zp`).
        #[arg(long)]
        s: Option<String>,
    },
    /// Lift a Z_k-covering family to a [0,k-1]-covering family over Z_p.
    Lift {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        p: u32,
        /// Keep a single unmodified copy.
        #[arg(long)]
        minimal: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Find S with [0,k-1]·S = Z_p.
    ScaleSet {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = DEFAULT_SCALING_ATTEMPTS)]
        attempts: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grow the size or the covered set of an existing family.
    Boost {
        #[command(subcommand)]
        kind: BoostKind,
    },
    /// Turn a Z_p-covering family into colorings of r disjoint p-cliques.
    Certify {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export the partition matroids of a certificate and check that their
    /// common independent sets are exactly the clique subsets.
    Matroids {
        #[arg(long)]
        cert: PathBuf,
        /// Restrict to the first r cliques first.
        #[arg(long)]
        r: Option<usize>,
        /// Random subsets to test when exhaustive enumeration is too large.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Prophet and optimal-gambler values on the clique instance.
    Prophet {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        r: u64,
        /// Also run a Monte Carlo cross-check with this many samples.
        #[arg(long)]
        mc: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lower and upper bounds on the shortest Z_p-covering family of size N.
    Bounds {
        #[arg(long)]
        p: u32,
        #[arg(long, conflicts_with = "log2n", required_unless_present = "log2n")]
        n: Option<u64>,
        #[arg(long)]
        log2n: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
enum ConstructKind {
    /// Base-p digits repeated with scalings 1..p.
    BaseP {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Z_k base, bit lift, then a scaling set.
    Pipeline {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long, value_enum, default_value_t = BaseArg::BaseP)]
        base: BaseArg,
        #[arg(long)]
        minimal_lift: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Balanced-word iteration with zero padding.
    Aa {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        ell0: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long)]
        zmax: u32,
        #[arg(long, value_enum, default_value_t = ModeArg::Exhaustive)]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum BoostKind {
    /// All z-fold concatenations.
    Concat {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        z: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Append s times each vector: S becomes S ∪ sS.
    Scale {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        s: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// [0,k-1]-covering to Z_p-covering through a scaling set.
    Cover {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BaseArg {
    BaseP,
    Aa,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Exhaustive,
    Sampled,
}

pub enum Outcome {
    Verified,
    Failed,
}

impl Outcome {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Verified
        } else {
            Outcome::Failed
        }
    }
}

struct Ctx {
    seed: u64,
    budget: MemoryBudget,
    format: Format,
}

impl Ctx {
    /// Prints `text` or the JSON form of `value`, per `--format`.
    fn emit(&self, text: &str, value: &Value) -> Result<()> {
        match self.format {
            Format::Text => print!("{text}"),
            Format::Json => println!("{}", serde_json::to_string_pretty(value)?),
        }
        Ok(())
    }
}

pub fn run(cli: Cli) -> Result<Outcome> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let ctx = Ctx {
        seed: cli.seed,
        budget: MemoryBudget::new(cli.budget),
        format: cli.format,
    };
    match cli.command {
        Command::Construct { kind } => construct(&ctx, kind),
        Command::Verify { family, s } => verify(&ctx, &family, s.as_deref()),
        Command::Lift { family, p, minimal, out } => lift(&ctx, &family, p, minimal, &out),
        Command::ScaleSet { p, k, attempts, out } => scale_set(&ctx, p, k, attempts, out.as_deref()),
        Command::Boost { kind } => boost(&ctx, kind),
        Command::Certify { family, r, out } => certify(&ctx, &family, r, &out),
        Command::Matroids { cert, r, samples, out } => matroids(&ctx, &cert, r, samples, &out),
        Command::Prophet { p, r, mc, out } => prophet(&ctx, p, r, mc, out.as_deref()),
        Command::Bounds { p, n, log2n } => bounds(&ctx, p, n, log2n),
    }
}

fn prime(p: u32) -> Result<PrimeModulus> {
    Ok(PrimeModulus::new(p)?)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

fn load(path: &Path) -> Result<CoveringFamily> {
    read_family(path).with_context(|| format!("reading {}", path.display()))
}

fn report_text(report: &CoverageReport) -> String {
    format!("{report}\n")
}

/// Verifies against `s`, then writes the family and its sidecar.
fn finish_family(ctx: &Ctx, family: &CoveringFamily, s: &CoverSet, out: &Path, mut sidecar: Value) -> Result<Outcome> {
    let report = family.check_cover(s)?;
    let log2n = (family.len() as f64).log2();
    let lower = aam_lower_bound(family.modulus(), log2n);
    let consistent = lower <= family.ell() as f64;
    sidecar["verification"] = json!({
        "cover": s.to_spec(),
        "report": report,
        "aam_lower_bound": lower,
        "lower_bound_consistent": consistent,
    });
    let ok = report.is_covering && consistent;
    if ok {
        write_family(family, out)?;
        write_json(&sidecar_path(out), &sidecar)?;
    }
    let text = format!(
        "p={} l={} n={} s={}\n{}lower bound {:.3} <= l: {}\n{}",
        family.modulus(),
        family.ell(),
        family.len(),
        s.to_spec(),
        report_text(&report),
        lower,
        consistent,
        if ok {
            format!("wrote {}\n", out.display())
        } else {
            "nothing written\n".to_string()
        }
    );
    ctx.emit(&text, &sidecar)?;
    Ok(Outcome::from_bool(ok))
}

fn construct(ctx: &Ctx, kind: ConstructKind) -> Result<Outcome> {
    match kind {
        ConstructKind::BaseP { p, n, out } => {
            let p = prime(p)?;
            let family = base_p_family_within(p, n, &ctx.budget)?;
            let bounds = bound_report(p, n)?;
            let sidecar = json!({ "kind": "base-p", "p": p.get(), "N": n, "ell": family.ell(), "bounds": bounds });
            finish_family(ctx, &family, &CoverSet::full(p), &out, sidecar)
        }
        ConstructKind::Pipeline {
            p,
            n,
            k,
            base,
            minimal_lift,
            out,
        } => {
            let p = prime(p)?;
            let opts = PipelineOptions {
                base: match base {
                    BaseArg::BaseP => BaseKind::BaseP,
                    BaseArg::Aa => BaseKind::AlonAlweiss,
                },
                seed: ctx.seed,
                k,
                lift_copies: if minimal_lift { LiftCopies::Minimal } else { LiftCopies::Full },
                budget: ctx.budget,
            };
            let (family, stats) = build_upperbound_family(p, n, &opts)?;
            let sidecar = json!({ "kind": "pipeline", "stats": stats, "bounds": bound_report(p, n)? });
            finish_family(ctx, &family, &CoverSet::full(p), &out, sidecar)
        }
        ConstructKind::Aa {
            p,
            ell0,
            m,
            zmax,
            mode,
            out,
        } => {
            let p = prime(p)?;
            let cfg = IterationConfig {
                ell0,
                m,
                z_max: zmax,
                mode: match mode {
                    ModeArg::Exhaustive => PartitionMode::Exhaustive,
                    ModeArg::Sampled => PartitionMode::Sampled,
                },
                seed: ctx.seed,
            };
            let (family, trace) = aa_iterate(p, &cfg, &ctx.budget)?;
            let cover = family
                .claimed_cover()
                .cloned()
                .unwrap_or_else(|| CoverSet::full(p));
            let sidecar = json!({ "kind": "aa", "trace": trace });
            finish_family(ctx, &family, &cover, &out, sidecar)
        }
    }
}

fn verify(ctx: &Ctx, path: &Path, spec: Option<&str>) -> Result<Outcome> {
    let family = load(path)?;
    let p = family.modulus();
    let s = match spec {
        Some(spec) => CoverSet::parse_spec(p, spec)?,
        None => family.claimed_cover().cloned().unwrap_or_else(|| CoverSet::full(p)),
    };
    let report = family.check_cover(&s)?;
    let text = format!(
        "p={} l={} n={} s={}\n{}",
        p,
        family.ell(),
        family.len(),
        s.to_spec(),
        report_text(&report)
    );
    ctx.emit(&text, &json!({ "cover": s.to_spec(), "report": report }))?;
    Ok(Outcome::from_bool(report.is_covering))
}

fn lift(ctx: &Ctx, path: &Path, p: u32, minimal: bool, out: &Path) -> Result<Outcome> {
    let source = load(path)?;
    let p = prime(p)?;
    let copies = if minimal { LiftCopies::Minimal } else { LiftCopies::Full };
    let lifted = bit_lift(&source, p, copies)?;
    let k = source.modulus().get();
    let sidecar = json!({ "kind": "lift", "k": k, "p": p.get(), "minimal": minimal, "source": path });
    finish_family(ctx, &lifted, &CoverSet::range(p, 0, k), out, sidecar)
}

fn scale_set(ctx: &Ctx, p: u32, k: u32, attempts: u32, out: Option<&Path>) -> Result<Outcome> {
    let p = prime(p)?;
    let set = find_scaling_set_with(p, k, ctx.seed, attempts)?;
    let ok = set.covers_field();
    let value = json!({ "scaling_set": set, "covers_field": ok, "size_bound": set.size_bound() });
    if let (true, Some(out)) = (ok, out) {
        write_json(out, &value)?;
    }
    let text = format!(
        "S = {:?} (|S| = {}, bound {}, {})\ncovers Z_{}: {}\n",
        set.elements,
        set.elements.len(),
        set.size_bound(),
        if set.from_greedy { "greedy fallback" } else { "sampled" },
        p,
        ok
    );
    ctx.emit(&text, &value)?;
    Ok(Outcome::from_bool(ok))
}

fn boost(ctx: &Ctx, kind: BoostKind) -> Result<Outcome> {
    match kind {
        BoostKind::Concat { family, z, out } => {
            let f = load(&family)?;
            let g = concat_boost(&f, z, &ctx.budget)?;
            let cover = g.claimed_cover().cloned().unwrap_or_else(|| CoverSet::empty(g.modulus()));
            finish_family(ctx, &g, &cover, &out, json!({ "kind": "concat", "z": z, "source": family }))
        }
        BoostKind::Scale { family, s, out } => {
            let f = load(&family)?;
            let g = scale_boost(&f, s)?;
            let cover = g.claimed_cover().cloned().unwrap_or_else(|| CoverSet::empty(g.modulus()));
            finish_family(ctx, &g, &cover, &out, json!({ "kind": "scale", "s": s, "source": family }))
        }
        BoostKind::Cover { family, k, out } => {
            let f = load(&family)?;
            let set = find_scaling_set_with(f.modulus(), k, ctx.seed, DEFAULT_SCALING_ATTEMPTS)?;
            let g = scale_cover_boost(&f, &set)?;
            let sidecar = json!({ "kind": "scaling-set", "k": k, "scaling_set": set, "source": family });
            finish_family(ctx, &g, &CoverSet::full(g.modulus()), &out, sidecar)
        }
    }
}

fn certify(ctx: &Ctx, path: &Path, r: usize, out: &Path) -> Result<Outcome> {
    let family = load(path)?;
    let cert = family_to_colorings(&family, r)?;
    let check = verify_certificate(&cert);
    if check.valid {
        write_json(out, &cert)?;
    }
    let text = format!(
        "certificate: p={} r={} q={}\nvalid: {}{}\n",
        cert.p,
        cert.r,
        cert.q,
        check.valid,
        match &check.witness {
            Some(w) => format!(" ({w:?})"),
            None => String::new(),
        }
    );
    ctx.emit(&text, &json!({ "p": cert.p, "r": cert.r, "q": cert.q, "check": check }))?;
    Ok(Outcome::from_bool(check.valid))
}

fn matroids(ctx: &Ctx, path: &Path, r: Option<usize>, samples: usize, out: &Path) -> Result<Outcome> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cert: ColoringCertificate = serde_json::from_str(&text).context("parsing certificate JSON")?;
    if let Some(r) = r {
        cert = cert.restrict(r)?;
    }
    let export = export_partition_matroids(&cert)?;
    let mode = if export.elements <= EXHAUSTIVE_MAX_ELEMENTS {
        SubsetMode::Exhaustive
    } else {
        SubsetMode::Sampled { samples, seed: ctx.seed }
    };
    let check = verify_matroid_intersection_equals_cliques(&export, mode)?;
    if check.holds {
        write_json(out, &export)?;
    }
    let text = format!(
        "{} partition matroids over {} elements\nintersection = cliques: {} ({} subsets, {})\n",
        export.q,
        export.elements,
        check.holds,
        check.subsets_checked,
        if check.exhaustive { "exhaustive" } else { "sampled" }
    );
    ctx.emit(&text, &json!({ "q": export.q, "elements": export.elements, "check": check }))?;
    Ok(Outcome::from_bool(check.holds))
}

fn prophet(ctx: &Ctx, p: u32, r: u64, mc: Option<u64>, out: Option<&Path>) -> Result<Outcome> {
    let report = gap_report(p, r, mc.map(|samples| (samples, ctx.seed)))?;
    if let Some(out) = out {
        write_json(out, &report)?;
    }
    let bound = report
        .paper_bounds
        .ratio_lb
        .map_or_else(|| "-".to_string(), |b| format!("{b:.6}"));
    let mut text = format!(
        "{:>4} {:>10} {:>10} {:>10} {:>10} {:>10} {:>6}\n",
        "p", "r", "prophet", "gambler", "ratio", "bound", "result"
    );
    text.push_str(&format!(
        "{:>4} {:>10} {:>10.6} {:>10.6} {:>10.6} {:>10} {:>6}\n",
        report.p,
        report.r,
        report.prophet_exact,
        report.gambler_exact,
        report.ratio,
        bound,
        if report.passed { "pass" } else { "FAIL" }
    ));
    if let (Some(pm), Some(gm)) = (report.prophet_mc, report.gambler_mc) {
        text.push_str(&format!(
            "mc ({} samples, seed {}): prophet {:.6} ± {:.6}, gambler {:.6} ± {:.6}\n",
            pm.samples, pm.seed, pm.estimate, pm.half_width, gm.estimate, gm.half_width
        ));
    }
    ctx.emit(&text, &serde_json::to_value(&report)?)?;
    Ok(Outcome::from_bool(report.passed))
}

fn bounds(ctx: &Ctx, p: u32, n: Option<u64>, log2n: Option<f64>) -> Result<Outcome> {
    let p = prime(p)?;
    let report: BoundReport = match (n, log2n) {
        (Some(n), _) => bound_report(p, n)?,
        (None, Some(x)) => bound_report_log2(p, x)?,
        (None, None) => bail!("one of --n or --log2n is required"),
    };
    let pipeline = report
        .upper_pipeline
        .map_or_else(|| "n/a (needs log2 N >= 4)".to_string(), |u| format!("{u}"));
    let text = format!(
        "lower          {}\ntrivial upper  {}\npipeline upper {}\n",
        report.lower, report.upper_trivial, pipeline
    );
    ctx.emit(&text, &serde_json::to_value(&report)?)?;
    Ok(Outcome::from_bool(report.consistent))
}
