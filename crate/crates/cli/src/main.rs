//! `sbrw`: filters, certified cascades, constant verification, critical
//! values and Monte Carlo checks from the command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod cache;
mod reference;

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rug::Integer;
use serde::Serialize;

use sbrw::asymptotics::{critical_values, BandConstants, CriticalQuery};
use sbrw::cascade::{cascade_f, enclosure_csv, TorusWindow};
use sbrw::filters::{builtin_filter, format_filter, load_filter, Family, FilterBank};
use sbrw::simulate::{mc_exceedance_with_samples, SimulationConfig};
use sbrw::verify::{verify_with, VerificationReport, VerifyConfig};
use sbrw::{Interval, Precision};

use cache::{CacheEntry, ConstantsCache};

const EXIT_FAILURE: u8 = 1;
const EXIT_UNVERIFIED: u8 = 2;
const EXIT_USAGE: u8 = 64;
const DIGITS: usize = 30;

#[derive(Parser, Debug)]
#[command(name = "sbrw", version, about = "Validated constants for wavelet sup-norm confidence bands")]
struct Cli {
    /// Working precision in bits (default: $SBR_PRECISION_BITS or 256).
    #[arg(long, global = true)]
    precision: Option<u32>,
    /// Maximum worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Record wall-clock times (outputs are then no longer byte-stable).
    #[arg(long, global = true)]
    timing: bool,
    /// Constants cache file.
    #[arg(long, global = true, default_value = "sbrw-constants.json")]
    cache: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print filter coefficients as `value radius` lines.
    Filters(FiltersArgs),
    /// Print a certified cascade enclosure as CSV.
    Cascade(CascadeArgs),
    /// Verify the unique-maximum condition and enclose the constants.
    Verify(VerifyArgs),
    /// Verify several families and print the constants as CSV.
    Table(TableArgs),
    /// Critical value of the sup-norm band.
    Critval(CritvalArgs),
    /// Monte Carlo exceedance check of the thresholds.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Serialize)]
struct FamilyArgs {
    /// daubechies, symlet, or custom:<path>.
    #[arg(long)]
    family: String,
    /// Vanishing moments (not needed for custom filters).
    #[arg(long = "N")]
    n: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
struct FiltersArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, default_value_t = 40)]
    digits: usize,
}

#[derive(Args, Debug, Serialize)]
struct CascadeArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Derivative order, 0 to 2.
    #[arg(long = "n", default_value_t = 0)]
    deriv: usize,
    #[arg(long)]
    j: u32,
    /// Cells `a:b` of level j (default: the whole torus).
    #[arg(long)]
    window: Option<String>,
    #[arg(long, default_value_t = 20)]
    digits: usize,
}

#[derive(Args, Debug, Serialize)]
struct VerifyOpts {
    /// Target width of both constant enclosures.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_level: u32,
    #[arg(long, default_value_t = 4096)]
    max_precision: u32,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    opts: VerifyOpts,
}

#[derive(Args, Debug, Serialize)]
struct TableArgs {
    /// Comma-separated families.
    #[arg(long, default_value = "daubechies,symlet")]
    families: String,
    /// Range `a..b` (inclusive) or comma-separated list.
    #[arg(long = "N", default_value = "6..20")]
    n: String,
    #[command(flatten)]
    opts: VerifyOpts,
}

#[derive(Args, Debug, Serialize)]
struct CritvalArgs {
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    j: f64,
    /// Noise scale.
    #[arg(long, conflicts_with = "sample_size")]
    sigma: Option<f64>,
    /// Sample size for the white-noise scale n^(-1/2).
    #[arg(long = "n")]
    sample_size: Option<f64>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long = "N")]
    n: Option<usize>,
    /// `value` or `lo,hi`.
    #[arg(long, requires = "upsilon", conflicts_with = "family")]
    sigma2bar: Option<String>,
    /// `value` or `lo,hi`.
    #[arg(long, requires = "sigma2bar")]
    upsilon: Option<String>,
    #[command(flatten)]
    opts: VerifyOpts,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long)]
    j: u32,
    #[arg(long, default_value_t = 5)]
    grid_depth: u32,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated tail levels.
    #[arg(long, default_value = "0.05,0.1,0.2")]
    gammas: String,
    /// Cascade level of the phi samples (default: deepest full level).
    #[arg(long)]
    cascade_level: Option<u32>,
    /// Also write the per-replication sups here.
    #[arg(long)]
    sups_csv: Option<PathBuf>,
    #[command(flatten)]
    opts: VerifyOpts,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Run(String),
}

impl From<sbrw::Error> for CliError {
    fn from(e: sbrw::Error) -> Self {
        match e {
            sbrw::Error::InvalidArgument(m) => CliError::Usage(m),
            other => CliError::Run(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Reproducibility header embedded in every output.
#[derive(Serialize)]
struct RunManifest {
    command: &'static str,
    flags: serde_json::Value,
    precision_bits: u32,
    seed: Option<u64>,
    wall_time_seconds: Option<f64>,
    version: &'static str,
}

struct Ctx {
    precision: Precision,
    out: Option<PathBuf>,
    timing: bool,
    cache: PathBuf,
    started: Instant,
}

impl Ctx {
    fn manifest(&self, command: &'static str, flags: &impl Serialize, seed: Option<u64>) -> RunManifest {
        RunManifest {
            command,
            flags: serde_json::to_value(flags).expect("flags serialize"),
            precision_bits: self.precision.bits(),
            seed,
            wall_time_seconds: self.timing.then(|| self.started.elapsed().as_secs_f64()),
            version: env!("CARGO_PKG_VERSION"),
        }
    }

    fn emit(&self, text: &str) -> CliResult<()> {
        match &self.out {
            Some(p) => fs::write(p, text).map_err(|e| CliError::Run(format!("{}: {e}", p.display()))),
            None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Run(e.to_string())),
        }
    }

    fn emit_json(&self, value: &impl Serialize) -> CliResult<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Run(e.to_string()))?;
        self.emit(&(text + "\n"))
    }
}

fn manifest_comment(m: &RunManifest) -> String {
    format!("# manifest: {}\n", serde_json::to_string(m).expect("manifest serializes"))
}

/// A family flag resolved to something that can build a filter.
#[derive(Clone, Debug)]
enum FamilySpec {
    Builtin(Family),
    Custom(PathBuf),
}

impl FamilySpec {
    fn parse(s: &str) -> CliResult<Self> {
        if let Some(path) = s.strip_prefix("custom:") {
            if path.is_empty() {
                return Err(CliError::Usage("custom family needs a path: custom:<path>".into()));
            }
            return Ok(FamilySpec::Custom(PathBuf::from(path)));
        }
        match Family::from_str(s) {
            Ok(Family::Custom) | Err(_) => Err(CliError::Usage(format!(
                "unknown family {s:?}; expected daubechies, symlet, or custom:<path>"
            ))),
            Ok(f) => Ok(FamilySpec::Builtin(f)),
        }
    }

    fn label(&self) -> String {
        match self {
            FamilySpec::Builtin(f) => f.to_string(),
            FamilySpec::Custom(p) => format!("custom:{}", p.display()),
        }
    }

    fn bank(&self, n: Option<usize>, prec: Precision) -> CliResult<FilterBank> {
        match self {
            FamilySpec::Builtin(f) => {
                let n = n.ok_or_else(|| CliError::Usage("--N is required for built-in families".into()))?;
                Ok(builtin_filter(f, n, prec)?)
            }
            FamilySpec::Custom(p) => {
                let bank = load_filter(p, prec)?;
                if let Some(n) = n {
                    if n != bank.n_moments {
                        return Err(CliError::Run(format!(
                            "{} has {} vanishing moments, not {n}",
                            p.display(),
                            bank.n_moments
                        )));
                    }
                }
                Ok(bank)
            }
        }
    }
}

fn resolve_precision(flag: Option<u32>) -> CliResult<Precision> {
    let bits = match flag {
        Some(b) => b,
        None => match std::env::var("SBR_PRECISION_BITS") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("SBR_PRECISION_BITS={v:?} is not an integer")))?,
            Err(_) => return Ok(Precision::default()),
        },
    };
    Precision::new(bits).map_err(|e| CliError::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}

fn run(cli: Cli) -> CliResult<u8> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| CliError::Run(e.to_string()))?;
    }
    let ctx = Ctx {
        precision: resolve_precision(cli.precision)?,
        out: cli.out,
        timing: cli.timing,
        cache: cli.cache,
        started: Instant::now(),
    };
    match &cli.command {
        Command::Filters(a) => cmd_filters(&ctx, a),
        Command::Cascade(a) => cmd_cascade(&ctx, a),
        Command::Verify(a) => cmd_verify(&ctx, a),
        Command::Table(a) => cmd_table(&ctx, a),
        Command::Critval(a) => cmd_critval(&ctx, a),
        Command::Simulate(a) => cmd_simulate(&ctx, a),
    }
}

fn cmd_filters(ctx: &Ctx, a: &FiltersArgs) -> CliResult<u8> {
    let spec = FamilySpec::parse(&a.family.family)?;
    let bank = spec.bank(a.family.n, ctx.precision)?;
    let mut text = manifest_comment(&ctx.manifest("filters", a, None));
    let _ = writeln!(text, "# family: {}\n# N: {}\n# length: {}", spec.label(), bank.n_moments, bank.u0.len());
    text.push_str(&format_filter(&bank, a.digits));
    ctx.emit(&text)?;
    Ok(0)
}

fn parse_window(s: &str, j: u32) -> CliResult<TorusWindow> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| CliError::Usage(format!("window must be `a:b`, got {s:?}")))?;
    let parse = |t: &str| {
        Integer::from_str(t.trim()).map_err(|_| CliError::Usage(format!("bad window endpoint {t:?}")))
    };
    TorusWindow::new(j, parse(a)?, parse(b)?).map_err(|e| CliError::Usage(e.to_string()))
}

fn cmd_cascade(ctx: &Ctx, a: &CascadeArgs) -> CliResult<u8> {
    if a.deriv > 2 {
        return Err(CliError::Usage("--n must be 0, 1 or 2".into()));
    }
    let spec = FamilySpec::parse(&a.family.family)?;
    let bank = spec.bank(a.family.n, ctx.precision)?;
    let window = match &a.window {
        Some(w) => parse_window(w, a.j)?,
        None => TorusWindow::full(a.j),
    };
    let enc = cascade_f(&bank, a.deriv, a.j, &window)?;
    let mut text = manifest_comment(&ctx.manifest("cascade", a, None));
    text.push_str(&enclosure_csv(&enc, &spec.label(), bank.n_moments, a.digits));
    ctx.emit(&text)?;
    Ok(0)
}

fn tol_key(tol: f64) -> String {
    format!("{tol:e}")
}

fn run_verify(ctx: &Ctx, spec: &FamilySpec, n: Option<usize>, opts: &VerifyOpts) -> CliResult<VerificationReport> {
    if !(opts.tol > 0.0) {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    // Fail on bad family flags before entering the loop.
    spec.bank(n, ctx.precision)?;
    let mut cfg = VerifyConfig::new(opts.tol, opts.max_level, ctx.precision);
    cfg.max_precision_bits = opts.max_precision;
    let report = verify_with(&cfg, |p| spec.bank(n, p).map_err(|e| match e {
        CliError::Usage(m) => sbrw::Error::InvalidArgument(m),
        CliError::Run(m) => sbrw::Error::InvalidFilter(m),
    }))?;
    Ok(report)
}

fn cache_entry(spec: &FamilySpec, opts: &VerifyOpts, precision: Precision, r: &VerificationReport) -> Option<CacheEntry> {
    let sb = r.sigma_bar_sq.as_ref()?;
    Some(CacheEntry {
        family: spec.label(),
        n: r.n,
        tol: tol_key(opts.tol),
        precision_bits: precision.bits(),
        verified: r.verified,
        sigma2_lo: sb.lo_decimal(DIGITS),
        sigma2_hi: sb.hi_decimal(DIGITS),
        upsilon_lo: r.upsilon.as_ref().map(|u| u.lo_decimal(DIGITS)),
        upsilon_hi: r.upsilon.as_ref().map(|u| u.hi_decimal(DIGITS)),
        j_final: r.j_final,
    })
}

fn store(ctx: &Ctx, entries: Vec<CacheEntry>) -> CliResult<()> {
    if entries.is_empty() {
        return Ok(());
    }
    let mut cache = ConstantsCache::load(&ctx.cache).map_err(CliError::Run)?;
    for e in entries {
        cache.insert(e);
    }
    cache.save(&ctx.cache).map_err(CliError::Run)
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    manifest: RunManifest,
    report: &'a VerificationReport,
}

fn cmd_verify(ctx: &Ctx, a: &VerifyArgs) -> CliResult<u8> {
    let spec = FamilySpec::parse(&a.family.family)?;
    let report = run_verify(ctx, &spec, a.family.n, &a.opts)?;
    store(ctx, cache_entry(&spec, &a.opts, ctx.precision, &report).into_iter().collect())?;
    ctx.emit_json(&VerifyOutput { manifest: ctx.manifest("verify", a, None), report: &report })?;
    Ok(if report.verified { 0 } else { EXIT_UNVERIFIED })
}

fn parse_n_list(s: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::Usage(format!("--N must be `a..b` or a comma list, got {s:?}"));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn cmd_table(ctx: &Ctx, a: &TableArgs) -> CliResult<u8> {
    let specs: Vec<FamilySpec> = a.families.split(',').map(|f| FamilySpec::parse(f.trim())).collect::<CliResult<_>>()?;
    let ns = parse_n_list(&a.n)?;
    let mut csv = manifest_comment(&ctx.manifest("table", a, None));
    csv.push_str("family,N,sigma2_lo,sigma2_hi,upsilon_lo,upsilon_hi,verified,j_final,seconds\n");
    let mut flags = Vec::new();
    let mut entries = Vec::new();
    for spec in &specs {
        for &n in &ns {
            let t = Instant::now();
            let r = run_verify(ctx, spec, Some(n), &a.opts)?;
            let secs = t.elapsed().as_secs_f64();
            let (s_lo, s_hi) = r
                .sigma_bar_sq
                .as_ref()
                .map(|s| (s.lo_decimal(DIGITS), s.hi_decimal(DIGITS)))
                .unwrap_or_default();
            let (u_lo, u_hi) =
                r.upsilon.as_ref().map(|u| (u.lo_decimal(DIGITS), u.hi_decimal(DIGITS))).unwrap_or_default();
            let seconds = if ctx.timing { format!("{secs:.3}") } else { String::new() };
            let label = spec.label();
            let _ = writeln!(csv, "{label},{n},{s_lo},{s_hi},{u_lo},{u_hi},{},{},{seconds}", r.verified, r.j_final);
            if let (Some((rs, ru)), Some(s), Some(u)) = (reference::lookup(&label, n), &r.sigma_bar_sq, &r.upsilon) {
                let ok_s = reference::agrees(s.lo_f64(), s.hi_f64(), rs);
                let ok_u = reference::agrees(u.lo_f64(), u.hi_f64(), ru);
                if !(ok_s && ok_u) {
                    let kind = if label == "symlet" { "convention flag" } else { "reference mismatch" };
                    flags.push(format!(
                        "# {kind}: {label} N={n} encloses ({:.6}, {:.6}), reference ({rs:.6}, {ru:.6})",
                        s.mid_f64(),
                        u.mid_f64()
                    ));
                }
            }
            entries.extend(cache_entry(spec, &a.opts, ctx.precision, &r));
        }
    }
    for f in &flags {
        eprintln!("{}", f.trim_start_matches("# "));
        csv.push_str(f);
        csv.push('\n');
    }
    store(ctx, entries)?;
    ctx.emit(&csv)?;
    Ok(0)
}

/// `value` or `lo,hi` as an interval.
fn parse_constant(s: &str, prec: Precision) -> CliResult<Interval> {
    let bad = |e: sbrw::Error| CliError::Usage(format!("bad constant {s:?}: {e}"));
    match s.split_once(',') {
        Some((lo, hi)) => {
            let lo = Interval::from_decimal(lo, prec).map_err(bad)?;
            let hi = Interval::from_decimal(hi, prec).map_err(bad)?;
            if lo.lo() > hi.hi() {
                return Err(CliError::Usage(format!("constant {s:?} has lo > hi")));
            }
            Ok(lo.hull(&hi))
        }
        None => Interval::from_decimal(s, prec).map_err(bad),
    }
}

/// Cached (or freshly verified) constants of a family, as decimal strings.
fn family_constants(ctx: &Ctx, spec: &FamilySpec, n: Option<usize>, opts: &VerifyOpts) -> CliResult<(String, String)> {
    let n_key = match spec {
        FamilySpec::Builtin(_) => n.ok_or_else(|| CliError::Usage("--N is required for built-in families".into()))?,
        FamilySpec::Custom(_) => spec.bank(n, ctx.precision)?.n_moments,
    };
    let cache = ConstantsCache::load(&ctx.cache).map_err(CliError::Run)?;
    let entry = match cache.lookup(&spec.label(), n_key, &tol_key(opts.tol), ctx.precision.bits()) {
        Some(e) => e.clone(),
        None => {
            let r = run_verify(ctx, spec, n, opts)?;
            let e = cache_entry(spec, opts, ctx.precision, &r)
                .ok_or_else(|| CliError::Run(format!("{} N={n_key}: no constants could be enclosed", spec.label())))?;
            store(ctx, vec![e.clone()])?;
            e
        }
    };
    match (entry.verified, &entry.upsilon_lo, &entry.upsilon_hi) {
        (true, Some(ul), Some(uh)) => Ok((format!("{},{}", entry.sigma2_lo, entry.sigma2_hi), format!("{ul},{uh}"))),
        _ => Err(CliError::Run(format!(
            "{} N={n_key} is not verified; its band constants are undefined",
            spec.label()
        ))),
    }
}

#[derive(Serialize)]
struct CritvalOutput {
    manifest: RunManifest,
    sigma2bar: String,
    upsilon: String,
    sigma: f64,
    a: f64,
    b: f64,
    c: f64,
    x: f64,
    u: f64,
}

fn cmd_critval(ctx: &Ctx, a: &CritvalArgs) -> CliResult<u8> {
    let sigma = match (a.sigma, a.sample_size) {
        (Some(s), None) => s,
        (None, Some(n)) => BandConstants::white_noise_sigma(n).map_err(|e| CliError::Usage(e.to_string()))?,
        (None, None) => 1.0,
        (Some(_), Some(_)) => return Err(CliError::Usage("give --sigma or --n, not both".into())),
    };
    let (s2, ups) = match (&a.family, &a.sigma2bar, &a.upsilon) {
        (Some(f), None, None) => family_constants(ctx, &FamilySpec::parse(f)?, a.n, &a.opts)?,
        (None, Some(s), Some(u)) => (s.clone(), u.clone()),
        _ => return Err(CliError::Usage("give --family/--N or --sigma2bar/--upsilon".into())),
    };
    let constants = BandConstants::new(parse_constant(&s2, ctx.precision)?, parse_constant(&ups, ctx.precision)?, sigma)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let q = CriticalQuery::new(a.j, a.gamma).map_err(|e| CliError::Usage(e.to_string()))?;
    let v = critical_values(&q, &constants)?;
    ctx.emit_json(&CritvalOutput {
        manifest: ctx.manifest("critval", a, None),
        sigma2bar: s2,
        upsilon: ups,
        sigma,
        a: v.a,
        b: v.b,
        c: v.c,
        x: v.x,
        u: v.u,
    })?;
    Ok(0)
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    manifest: RunManifest,
    report: &'a sbrw::simulate::SimulationReport,
}

fn cmd_simulate(ctx: &Ctx, a: &SimulateArgs) -> CliResult<u8> {
    let spec = FamilySpec::parse(&a.family.family)?;
    let bank = spec.bank(a.family.n, ctx.precision)?;
    let gammas: Vec<f64> = a
        .gammas
        .split(',')
        .map(|g| g.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad gamma {g:?}"))))
        .collect::<CliResult<_>>()?;
    if gammas.iter().any(|g| !(*g > 0.0 && *g < 1.0)) {
        return Err(CliError::Usage("gammas must lie in (0, 1)".into()));
    }
    if a.reps == 0 {
        return Err(CliError::Usage("--reps must be positive".into()));
    }
    let (s2, ups) = family_constants(ctx, &spec, a.family.n, &a.opts)?;
    let s2 = parse_constant(&s2, ctx.precision)?.mid_f64();
    let ups = parse_constant(&ups, ctx.precision)?.mid_f64();
    let mut cfg = SimulationConfig::new(&bank, a.j, a.grid_depth, a.reps, a.seed, gammas);
    if let Some(l) = a.cascade_level {
        cfg.cascade_level = l;
    }
    let (report, sups) = mc_exceedance_with_samples(&cfg, &bank, s2, ups)?;
    if let Some(path) = &a.sups_csv {
        write_sups(path, &sups)?;
    }
    ctx.emit_json(&SimulateOutput { manifest: ctx.manifest("simulate", a, Some(a.seed)), report: &report })?;
    Ok(0)
}

fn write_sups(path: &Path, sups: &[f64]) -> CliResult<()> {
    let mut text = String::from("rep,sup\n");
    for (i, s) in sups.iter().enumerate() {
        let _ = writeln!(text, "{i},{s:e}");
    }
    fs::write(path, text).map_err(|e| CliError::Run(format!("{}: {e}", path.display())))
}
