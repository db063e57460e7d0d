//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a verification check or a construction
//! invariant fails, 2 for usage errors and rejected inputs.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::calculus::{holder_modulus_seeded, HolderResult};
use crate::error::{Error, Result};
use crate::fourier::analyze;
use crate::grid::{fmt17, make_grid, sample, AnalyticFunction2D, GridFunction2D, Partial};
use crate::pathology::{
    build_fat_cantor, construct_thm51, construct_thm52, rescale_to_2pi, CounterexampleSeries, FatCantorSet,
    Quantity, SeriesKind,
};
use crate::verify::{apply_window, make_window, run_on_samples, run_pipeline_full, PipelineConfig, Reference, Tolerances};

#[derive(Debug, Parser)]
#[command(name = "mixed-deriv", version, about = "Spectral mixed-derivative reconstruction and fat-Cantor counterexamples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the reconstruction pipeline and write a JSON report.
    Verify(VerifyArgs),
    /// Build a counterexample series and export metadata, witnesses and samples.
    Pathology(PathologyArgs),
    /// Export coefficients, grid samples or a Hölder scan.
    Dump(DumpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FunctionName {
    /// sin x · sin y
    Sinsin,
    /// sin x
    Sin,
    /// (sin 2x cos y + cos x sin 3y) times a C² plateau window
    WindowedMix,
    /// Fat-Cantor series with jointly discontinuous f_x, rescaled to [0, 2π)²
    Thm51,
    /// Zigzag fat-Cantor series, rescaled to [0, 2π)²
    Thm52,
}

#[derive(Debug, Clone, clap::Args)]
struct SeriesOpts {
    /// Fat Cantor levels.
    #[arg(long, default_value = "6", value_parser = parse_count)]
    levels: usize,
    /// Number of series terms [default: 8 for thm51, 16 for thm52].
    #[arg(long, value_parser = parse_count)]
    terms: Option<usize>,
    /// Removal scale r: level n removes centred intervals of length r·4^-n.
    #[arg(long, default_value = "1")]
    removal: f64,
}

#[derive(Debug, clap::Args)]
struct VerifyArgs {
    /// Built-in function to sample.
    #[arg(long, value_enum, conflicts_with = "grid", required_unless_present = "grid")]
    function: Option<FunctionName>,
    /// Grid CSV (`x,y,value`) to analyse instead of a built-in function.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long, default_value = "64", value_parser = parse_count)]
    nx: usize,
    #[arg(long, default_value = "64", value_parser = parse_count)]
    ny: usize,
    #[arg(long, default_value = "8", value_parser = parse_count)]
    nmax: usize,
    /// Defaults to nmax.
    #[arg(long, value_parser = parse_count)]
    mmax: Option<usize>,
    #[arg(long, default_value = "1e-8")]
    tol_spectral: f64,
    #[arg(long, default_value = "1e-2")]
    tol_quad: f64,
    /// Window parameter for windowed-mix.
    #[arg(long, default_value = "3", value_parser = parse_count)]
    window: usize,
    #[command(flatten)]
    series: SeriesOpts,
    /// Record wall-clock stage timings (makes the report non-reproducible).
    #[arg(long)]
    timings: bool,
    /// Report path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Thm51,
    Thm52,
}

impl From<KindArg> for SeriesKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Thm51 => SeriesKind::Thm51,
            KindArg::Thm52 => SeriesKind::Thm52,
        }
    }
}

#[derive(Debug, clap::Args)]
struct PathologyArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[command(flatten)]
    series: SeriesOpts,
    /// Sample grid size for grid.csv.
    #[arg(long, default_value = "64", value_parser = parse_count)]
    nx: usize,
    #[arg(long, default_value = "64", value_parser = parse_count)]
    ny: usize,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DumpWhat {
    Coeffs,
    Grid,
    Holder,
}

#[derive(Debug, clap::Args)]
struct DumpArgs {
    #[arg(long, value_enum)]
    what: DumpWhat,
    #[arg(long, value_enum, default_value = "sinsin")]
    function: FunctionName,
    /// Grid points along x [default: 4096 for holder, 64 otherwise].
    #[arg(long, value_parser = parse_count)]
    nx: Option<usize>,
    #[arg(long, default_value = "64", value_parser = parse_count)]
    ny: usize,
    #[arg(long, default_value = "8", value_parser = parse_count)]
    nmax: usize,
    #[arg(long, value_parser = parse_count)]
    mmax: Option<usize>,
    /// Hölder constant c for `--what holder`.
    #[arg(long, default_value = "3.141592653589793")]
    c: f64,
    /// Row y-coordinate scanned by `--what holder`.
    #[arg(long, default_value = "0")]
    y: f64,
    /// Seed for the random pairs of large Hölder scans.
    #[arg(long, default_value = "24301")]
    seed: u64,
    #[arg(long, default_value = "3", value_parser = parse_count)]
    window: usize,
    #[command(flatten)]
    series: SeriesOpts,
    /// Output path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Nonnegative integer in decimal (`1000`), scientific (`1e3`) or power
/// (`10^3`) notation.
pub fn parse_count(s: &str) -> std::result::Result<usize, String> {
    let s = s.trim();
    if let Ok(v) = s.parse::<usize>() {
        return Ok(v);
    }
    let v = if let Some((b, e)) = s.split_once('^') {
        let b: f64 = b.parse().map_err(|_| format!("invalid base in `{s}`"))?;
        let e: i32 = e.parse().map_err(|_| format!("invalid exponent in `{s}`"))?;
        b.powi(e)
    } else {
        s.parse::<f64>().map_err(|_| format!("`{s}` is not a number"))?
    };
    if v.fract() != 0.0 || !(0.0..=u64::MAX as f64).contains(&v) || v > usize::MAX as f64 {
        return Err(format!("`{s}` is not a nonnegative integer"));
    }
    Ok(v as usize)
}

/// Options for the series entries of the catalog.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalogOptions {
    pub window: u32,
    pub levels: usize,
    pub terms: Option<usize>,
    pub removal: f64,
}

impl Default for CatalogOptions {
    fn default() -> Self {
        Self {
            window: 3,
            levels: 6,
            terms: None,
            removal: 1.0,
        }
    }
}

fn default_terms(kind: SeriesKind) -> usize {
    match kind {
        SeriesKind::Thm51 => 8,
        SeriesKind::Thm52 => 16,
    }
}

/// Builds the fat Cantor set and series named by `kind`.
pub fn build_series(kind: SeriesKind, levels: usize, terms: Option<usize>, removal: f64) -> Result<(FatCantorSet, CounterexampleSeries)> {
    let set = build_fat_cantor(levels, removal)?;
    let terms = terms.unwrap_or(default_terms(kind));
    let s = match kind {
        SeriesKind::Thm51 => construct_thm51(&set, terms)?,
        SeriesKind::Thm52 => construct_thm52(&set, terms)?,
    };
    Ok((set, s))
}

/// `sin(a x) cos(b y)`-type separable term with exact partials.
fn trig_product(p: fn(f64) -> [f64; 3], q: fn(f64) -> [f64; 3]) -> AnalyticFunction2D {
    AnalyticFunction2D::new(move |x, y| p(x)[0] * q(y)[0])
        .with(Partial::X, move |x, y| p(x)[1] * q(y)[0])
        .with(Partial::Y, move |x, y| p(x)[0] * q(y)[1])
        .with(Partial::XX, move |x, y| p(x)[2] * q(y)[0])
        .with(Partial::YY, move |x, y| p(x)[0] * q(y)[2])
        .with(Partial::XY, move |x, y| p(x)[1] * q(y)[1])
}

fn sum(f: AnalyticFunction2D, g: AnalyticFunction2D) -> AnalyticFunction2D {
    let add = |a: &crate::grid::Field, b: &crate::grid::Field| {
        let (a, b) = (a.clone(), b.clone());
        move |x: f64, y: f64| a(x, y) + b(x, y)
    };
    let mut out = AnalyticFunction2D::new(add(f.field(), g.field()));
    for p in [Partial::X, Partial::Y, Partial::XX, Partial::YY, Partial::XY] {
        if let (Some(a), Some(b)) = (f.partial(p), g.partial(p)) {
            out = out.with(p, add(a, b));
        }
    }
    out
}

/// The built-in function catalog.
pub fn builtin_function(name: FunctionName, opts: &CatalogOptions) -> Result<AnalyticFunction2D> {
    let sin1 = |x: f64| [x.sin(), x.cos(), -x.sin()];
    let one = |_: f64| [1.0, 0.0, 0.0];
    Ok(match name {
        FunctionName::Sinsin => trig_product(sin1, sin1),
        FunctionName::Sin => trig_product(sin1, one),
        FunctionName::WindowedMix => {
            let a = trig_product(
                |x| [(2.0 * x).sin(), 2.0 * (2.0 * x).cos(), -4.0 * (2.0 * x).sin()],
                |y| [y.cos(), -y.sin(), -y.cos()],
            );
            let b = trig_product(
                |x| [x.cos(), -x.sin(), -x.cos()],
                |y| [(3.0 * y).sin(), 3.0 * (3.0 * y).cos(), -9.0 * (3.0 * y).sin()],
            );
            apply_window(&sum(a, b), &make_window(opts.window)?)?
        }
        FunctionName::Thm51 | FunctionName::Thm52 => {
            let kind = if name == FunctionName::Thm51 { SeriesKind::Thm51 } else { SeriesKind::Thm52 };
            let (_, s) = build_series(kind, opts.levels, opts.terms, opts.removal)?;
            rescale_to_2pi(&s)
        }
    })
}

fn catalog_options(window: usize, s: &SeriesOpts) -> Result<CatalogOptions> {
    Ok(CatalogOptions {
        window: u32::try_from(window).map_err(|_| Error::InvalidArgument(format!("window {window} too large")))?,
        levels: s.levels,
        terms: s.terms,
        removal: s.removal,
    })
}

/// Writes `bytes` to `path` through a sibling temporary file and a rename, so
/// a failed run never leaves a partial file behind.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path.file_name().ok_or_else(|| Error::InvalidArgument(format!("`{}` is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let res = fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(bytes).and_then(|_| f.sync_all()))
        .and_then(|_| fs::rename(&tmp, path));
    if res.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(res?)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => Ok(std::io::stdout().write_all(bytes)?),
    }
}

enum Failure {
    /// Exit 1: a check or invariant failed; message names it.
    Check(String),
    /// Exit 2: the request itself was unusable.
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let res = match cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Pathology(a) => cmd_pathology(a),
        Command::Dump(a) => cmd_dump(a),
    };
    match res {
        Ok(()) => 0,
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    let cfg = PipelineConfig {
        nmax: a.nmax,
        mmax: a.mmax.unwrap_or(a.nmax),
        tolerances: Tolerances {
            spectral: a.tol_spectral,
            quad: a.tol_quad,
        },
        record_timings: a.timings,
    };
    for (flag, v) in [("--tol-spectral", a.tol_spectral), ("--tol-quad", a.tol_quad)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Failure::Usage(format!("{flag} must be a nonnegative number, got {v}")));
        }
    }
    let run = if let Some(path) = &a.grid {
        let file = fs::File::open(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let u = GridFunction2D::read_csv(file)?;
        let reference = Reference {
            d_x_note: Some("fd_fallback: grid input has no exact d_x".into()),
            ..Reference::default()
        };
        run_on_samples(u, &reference, &cfg)?
    } else {
        let name = a.function.expect("clap requires --function or --grid");
        let f = builtin_function(name, &catalog_options(a.window, &a.series)?)?;
        run_pipeline_full(&f, make_grid(a.nx, a.ny)?, &cfg)?
    };
    let bytes = crate::verify::serialize_report(&run.report).map_err(|e| Failure::Check(e.to_string()))?;
    emit(a.out.as_deref(), &bytes)?;
    match run.report.first_failure() {
        None => Ok(()),
        Some((name, c)) => Err(Failure::Check(format!(
            "check `{name}` failed: max {:e} exceeds tolerance {:e}",
            c.max, c.tol
        ))),
    }
}

/// Invariants checked before anything is written; the first violation is
/// returned by name.
fn pathology_invariants(set: &FatCantorSet, s: &CounterexampleSeries) -> std::result::Result<(), String> {
    set.check_conditions().map_err(|e| format!("cantor conditions: {e}"))?;
    s.check_invariants().map_err(|e| format!("series invariants: {e}"))?;
    let ends = set.endpoints();
    if s.kind() == SeriesKind::Thm51 {
        s.check_boxes(&ends).map_err(|e| format!("box condition: {e}"))?;
    }
    // f_x vanishes on every line through a Cantor endpoint
    let probes: Vec<f64> = (0..=64).map(|k| k as f64 / 64.0).chain(ends.iter().copied()).collect();
    for &p in &ends {
        for &q in &probes {
            let pts: &[(f64, f64)] = match s.kind() {
                SeriesKind::Thm51 => &[(p, q), (q, p)],
                SeriesKind::Thm52 => &[(q.clamp(0.0, 1.0) * 0.999 + 1e-4, p)],
            };
            for &(x, y) in pts {
                let v = s.eval(x, y, Quantity::Fx).map_err(|e| format!("endpoint f_x: {e}"))?;
                if v != 0.0 {
                    return Err(format!("endpoint f_x: f_x({x}, {y}) = {v}, expected 0"));
                }
            }
        }
    }
    Ok(())
}

fn witness_csv(s: &CounterexampleSeries) -> Result<Vec<u8>> {
    let target = match s.kind() {
        SeriesKind::Thm51 => s.bump().a(),
        SeriesKind::Thm52 => 1.0,
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "level", "eps", "x_lo", "x_hi", "y_lo", "y_hi", "u", "v", "fx", "target", "residual"])?;
    for t in s.terms() {
        let fx = s.eval(t.witness.0, t.witness.1, Quantity::Fx)?;
        w.write_record([
            t.n.to_string(),
            t.level.to_string(),
            fmt17(t.eps),
            fmt17(t.x_support.a),
            fmt17(t.x_support.b),
            fmt17(t.y_support.a),
            fmt17(t.y_support.b),
            fmt17(t.witness.0),
            fmt17(t.witness.1),
            fmt17(fx),
            fmt17(target),
            fmt17((fx.abs() - target).abs()),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn cmd_pathology(a: PathologyArgs) -> CmdResult {
    let kind = SeriesKind::from(a.kind);
    let set = build_fat_cantor(a.series.levels, a.series.removal)?;
    let terms = a.series.terms.unwrap_or(default_terms(kind));
    let built = match kind {
        SeriesKind::Thm51 => construct_thm51(&set, terms),
        SeriesKind::Thm52 => construct_thm52(&set, terms),
    };
    let s = match built {
        Ok(s) => s,
        Err(e @ Error::Unconstructible { .. }) => return Err(Failure::Check(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    pathology_invariants(&set, &s).map_err(Failure::Check)?;

    let mut meta = serde_json::to_vec_pretty(&serde_json::to_value(s.metadata()).map_err(Error::from)?).map_err(Error::from)?;
    meta.push(b'\n');
    let witnesses = witness_csv(&s)?;
    let samples = sample(&rescale_to_2pi(&s), make_grid(a.nx, a.ny)?)?;
    let mut grid_csv = Vec::new();
    samples.write_csv(&mut grid_csv)?;

    fs::create_dir_all(&a.out).map_err(Error::from)?;
    write_atomic(&a.out.join("metadata.json"), &meta)?;
    write_atomic(&a.out.join("witnesses.csv"), &witnesses)?;
    write_atomic(&a.out.join("grid.csv"), &grid_csv)?;
    Ok(())
}

#[derive(Serialize)]
struct HolderDump {
    function: String,
    samples: usize,
    y: f64,
    c: f64,
    bound: f64,
    seed: u64,
    #[serde(flatten)]
    result: HolderResult,
}

fn cmd_dump(a: DumpArgs) -> CmdResult {
    let f = builtin_function(a.function, &catalog_options(a.window, &a.series)?)?;
    let nx = a.nx.unwrap_or(if a.what == DumpWhat::Holder { 4096 } else { 64 });
    let bytes = match a.what {
        DumpWhat::Coeffs => {
            let u = sample(&f, make_grid(nx, a.ny)?)?;
            let c = analyze(&u, a.nmax, a.mmax.unwrap_or(a.nmax))?;
            let mut b = serde_json::to_vec_pretty(&c.to_json()).map_err(Error::from)?;
            b.push(b'\n');
            b
        }
        DumpWhat::Grid => {
            let u = sample(&f, make_grid(nx, a.ny)?)?;
            let mut b = Vec::new();
            u.write_csv(&mut b)?;
            b
        }
        DumpWhat::Holder => {
            if !(a.c >= 0.0) {
                return Err(Failure::Usage(format!("--c must be nonnegative, got {}", a.c)));
            }
            let g: Vec<f64> = (0..nx).map(|i| f.eval(std::f64::consts::TAU * i as f64 / nx as f64, a.y)).collect();
            let result = holder_modulus_seeded(&g, a.c, a.seed)?;
            let dump = HolderDump {
                function: format!("{:?}", a.function).to_lowercase(),
                samples: nx,
                y: a.y,
                c: a.c,
                bound: a.c.sqrt(),
                seed: a.seed,
                result,
            };
            let mut b = serde_json::to_vec_pretty(&serde_json::to_value(&dump).map_err(Error::from)?).map_err(Error::from)?;
            b.push(b'\n');
            b
        }
    };
    emit(a.out.as_deref(), &bytes)?;
    Ok(())
}
