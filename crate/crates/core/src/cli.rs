//! The `envkit` command line.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 verification
//! failed. Errors go to stderr behind the prefix `envkit:error:`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::baire::{convergence_report, default_rho, envelope_sequence, hahn_insert, truncate, EnvelopeSequence};
use crate::catalog::CatalogFunction;
use crate::envelope::{ball_envelope, Bound, KernelChoice};
use crate::error::{Error, Result};
use crate::function::{Metric, MetricSpec};
use crate::grid::{AxisGrid, ProductGrid, Variable};
use crate::io;
use crate::report::{emit_csv, NodeGapTable, VerdictRecord};
use crate::verify::{
    check_separate, refinement_study, verify_envelope_joint_lsc, verify_envelope_joint_usc, Property, RadiusSchedule,
    Scope, Subject, DEFAULT_RADII,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_REFUTED: i32 = 2;

/// Largest grid the CLI will allocate.
pub const MAX_GRID_NODES: usize = 1 << 26;

#[derive(Debug, Parser)]
#[command(name = "envkit", version, about = "Semicontinuous envelopes of sampled functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a catalog function on a grid
    Catalog(CatalogArgs),
    /// Ball envelope in one variable
    Envelope(EnvelopeArgs),
    /// Monotone envelope sequence with insertions
    Sequence(SequenceArgs),
    /// Midpoint insertion between two functions
    Insert(InsertArgs),
    /// Clamp to [-level, level]
    Truncate(TruncateArgs),
    /// Semicontinuity certificate
    Verify(VerifyArgs),
    /// Convergence tables for a sequence directory
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct CatalogArgs {
    #[arg(long)]
    name: String,
    /// Value of `constant`
    #[arg(long, allow_negative_numbers = true, value_parser = finite)]
    c: Option<f64>,
    /// Inline spec `x=lin(a,b,n);y=lin(a,b,n)` or a grid/function file
    #[arg(long)]
    grid: String,
    /// Factor metrics, `<linf|l2>,<linf|l2>`
    #[arg(long, value_parser = parse_metric)]
    metric: Option<MetricSpec>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BoundArg {
    Sup,
    Inf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VarArg {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KernelArg {
    Auto,
    Naive,
    Separable,
}

#[derive(Debug, Args)]
struct EnvelopeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_parser = positive)]
    alpha: f64,
    #[arg(long, value_enum)]
    bound: BoundArg,
    #[arg(long, value_enum)]
    var: VarArg,
    #[arg(long, value_enum, default_value = "auto")]
    kernel: KernelArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SequenceArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=100_000))]
    n: u32,
    /// Radius scale; defaults to half the largest axis extent
    #[arg(long, value_parser = positive)]
    rho: Option<f64>,
    #[arg(long)]
    outdir: PathBuf,
}

#[derive(Debug, Args)]
struct InsertArgs {
    #[arg(long)]
    lower: PathBuf,
    #[arg(long)]
    upper: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TruncateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_parser = positive)]
    level: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    LscFirst,
    UscSecond,
    UscFirst,
    LscSecond,
    JointLscEnvelope,
    JointUscEnvelope,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Envelope radius for the joint modes
    #[arg(long, value_parser = positive)]
    alpha: Option<f64>,
    #[arg(long, value_parser = positive)]
    tol: f64,
    /// Largest radius is rho/2; defaults to half the largest probed extent
    #[arg(long, value_parser = positive)]
    rho: Option<f64>,
    /// Number of radii rho * 2^-k
    #[arg(long, default_value_t = DEFAULT_RADII as u64, value_parser = clap::value_parser!(u64).range(1..=60))]
    radii: u64,
    /// Also write a refinement table with this many doubling levels (catalog inputs only)
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=12))]
    levels: Option<u64>,
    /// Verdict JSON; the profile CSV goes next to it as `<stem>_profile.csv`
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_parser = positive)]
    tol: f64,
    /// Per-step CSV; the per-node CSV goes next to it as `<stem>.nodes.csv`
    #[arg(long)]
    out: PathBuf,
}

fn finite(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    let v = finite(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("`{s}` must be positive"))
    }
}

fn parse_metric(s: &str) -> std::result::Result<MetricSpec, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let one = |p: &str| Metric::from_str(p).map_err(|e| e.to_string());
    match parts.as_slice() {
        [x, y] => Ok(MetricSpec::new(one(x)?, one(y)?)),
        _ => Err(format!("expected `<linf|l2>,<linf|l2>`, got `{s}`")),
    }
}

/// Parses `x=lin(a,b,n);y=pts(c0,c1,...)`. Axes of a factor keep their order.
pub fn parse_grid_spec(spec: &str) -> Result<ProductGrid> {
    let bad = |reason: String| Error::invalid("grid", reason);
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut nodes: usize = 1;
    for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (factor, body) = part
            .split_once('=')
            .ok_or_else(|| bad(format!("`{part}` lacks `x=` or `y=`")))?;
        let (kind, args) = body
            .trim()
            .strip_suffix(')')
            .and_then(|b| b.split_once('('))
            .ok_or_else(|| bad(format!("`{body}` is not `lin(...)` or `pts(...)`")))?;
        let args: Vec<&str> = args.split(',').map(str::trim).collect();
        let num = |a: &str| -> Result<f64> {
            a.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("`{a}` is not a finite number")))
        };
        let len = match kind.trim() {
            "lin" if args.len() == 3 => args[2]
                .parse::<usize>()
                .map_err(|_| bad(format!("`{}` is not a node count", args[2])))?,
            "lin" => return Err(bad(format!("lin takes (start,end,n), got `{body}`"))),
            "pts" => args.len(),
            other => return Err(bad(format!("unknown axis kind `{other}`"))),
        };
        nodes = nodes
            .checked_mul(len)
            .filter(|&n| n <= MAX_GRID_NODES)
            .ok_or(Error::SizeOverflow)?;
        let axis = match kind.trim() {
            "lin" => AxisGrid::linspace(num(args[0])?, num(args[1])?, len)?,
            _ => AxisGrid::new(args.iter().map(|a| num(a)).collect::<Result<_>>()?)?,
        };
        match factor.trim() {
            "x" => x.push(axis),
            "y" => y.push(axis),
            other => return Err(bad(format!("unknown factor `{other}`"))),
        }
    }
    ProductGrid::new(x, y)
}

fn resolve_grid(spec: &str) -> Result<(ProductGrid, Option<MetricSpec>)> {
    if spec.contains('=') && !Path::new(spec).exists() {
        Ok((parse_grid_spec(spec)?, None))
    } else {
        io::load_grid(spec)
    }
}

fn catalog_function(name: &str, c: Option<f64>) -> Result<CatalogFunction> {
    match (name, c) {
        ("constant", Some(c)) => Ok(CatalogFunction::Constant(c)),
        ("constant", None) => Err(Error::invalid("c", "`constant` needs --c")),
        (_, Some(_)) => Err(Error::invalid(
            "c",
            format!("--c only applies to `constant`, not `{name}`"),
        )),
        (name, None) => name.parse(),
    }
}

/// `dir/stem<suffix>` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn verify(args: &VerifyArgs) -> Result<bool> {
    let f = io::load(&args.input)?;
    let subject = Subject::infer(&f);
    let scope = match args.mode {
        ModeArg::LscFirst | ModeArg::UscFirst => Scope::Separate(Variable::First),
        ModeArg::UscSecond | ModeArg::LscSecond => Scope::Separate(Variable::Second),
        ModeArg::JointLscEnvelope | ModeArg::JointUscEnvelope => Scope::Joint,
    };
    let rho = args.rho.unwrap_or_else(|| RadiusSchedule::default_rho(f.grid(), scope));
    let radii = RadiusSchedule::geometric(rho, args.radii as usize)?;
    let alpha = || {
        args.alpha
            .ok_or_else(|| Error::invalid("alpha", "joint modes need --alpha"))
    };
    let (profile, verdict) = match args.mode {
        ModeArg::LscFirst => check_separate(subject, Variable::First, Property::Lsc, &radii, args.tol)?,
        ModeArg::UscFirst => check_separate(subject, Variable::First, Property::Usc, &radii, args.tol)?,
        ModeArg::UscSecond => check_separate(subject, Variable::Second, Property::Usc, &radii, args.tol)?,
        ModeArg::LscSecond => check_separate(subject, Variable::Second, Property::Lsc, &radii, args.tol)?,
        ModeArg::JointLscEnvelope => verify_envelope_joint_lsc(subject, alpha()?, &radii, args.tol)?,
        ModeArg::JointUscEnvelope => verify_envelope_joint_usc(subject, alpha()?, &radii, args.tol)?,
    };
    if let Some(levels) = args.levels {
        let Subject::Analytic { function, grid, metric } = subject else {
            return Err(Error::invalid("levels", "refinement needs a catalog function file"));
        };
        let study = refinement_study(
            function,
            grid,
            metric,
            levels as usize,
            alpha().unwrap_or(radii.radii()[0]),
        )?;
        emit_csv(&study, sibling(&args.out, "_refinement.csv"))?;
    }
    emit_csv(&profile, sibling(&args.out, "_profile.csv"))?;
    let record = VerdictRecord::new(&profile, &verdict);
    record.save(&args.out)?;
    match &verdict.witness {
        Some(w) if !verdict.passed => println!(
            "refuted: deficiency {} at node {:?} radius {} (tol {})",
            w.deficiency, w.node, w.radius, verdict.tol
        ),
        _ => println!("passed: deficiency {} (tol {})", verdict.trend, verdict.tol),
    }
    Ok(verdict.passed)
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Catalog(a) => {
            let function = catalog_function(&a.name, a.c)?;
            let (grid, file_metric) = resolve_grid(&a.grid)?;
            let metric = a.metric.or(file_metric).unwrap_or_default();
            io::save(&function.sample(&grid, metric)?, &a.out)?;
        }
        Command::Envelope(a) => {
            let f = io::load(&a.input)?;
            let bound = match a.bound {
                BoundArg::Sup => Bound::Sup,
                BoundArg::Inf => Bound::Inf,
            };
            let var = match a.var {
                VarArg::First => Variable::First,
                VarArg::Second => Variable::Second,
            };
            let kernel = match a.kernel {
                KernelArg::Auto => KernelChoice::Auto,
                KernelArg::Naive => KernelChoice::Naive,
                KernelArg::Separable => KernelChoice::Separable,
            };
            ball_envelope(&f, var, bound, a.alpha, kernel)?.save(&a.out)?;
        }
        Command::Sequence(a) => {
            let f = io::load(&a.input)?;
            let rho = a.rho.unwrap_or_else(|| default_rho(f.grid()));
            let seq = envelope_sequence(&f, a.n as usize, rho)?;
            seq.check_invariants()?;
            seq.save_dir(&a.outdir)?;
        }
        Command::Insert(a) => {
            let lower = io::load(&a.lower)?;
            let upper = io::load(&a.upper)?;
            io::save(&hahn_insert(&lower, &upper)?, &a.out)?;
        }
        Command::Truncate(a) => {
            let f = io::load(&a.input)?;
            io::save(&truncate(&f, a.level)?, &a.out)?;
        }
        Command::Verify(a) => {
            if !verify(&a)? {
                return Ok(EXIT_REFUTED);
            }
        }
        Command::Report(a) => {
            let seq = EnvelopeSequence::load_dir(&a.manifest)?;
            let report = convergence_report(&seq, a.tol)?;
            emit_csv(&report, &a.out)?;
            emit_csv(&NodeGapTable(&report), sibling(&a.out, ".nodes.csv"))?;
        }
    }
    Ok(EXIT_OK)
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let msg = e.render().to_string();
            let first = msg.lines().next().unwrap_or_default();
            eprintln!("envkit:error: {}", first.trim_start_matches("error: "));
            return EXIT_INVALID;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("envkit:error: {e}");
            EXIT_INVALID
        }
    }
}
