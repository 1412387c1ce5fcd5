//! Command-line front end. Exit status: 0 success, 1 runtime failure,
//! 2 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::divergence::{DistanceKind, SharedLooks, TestConfig};
use crate::error::Error;
use crate::filter::{filter_image, FilterSpec};
use crate::geometry::{PhantomGeometry, Rect};
use crate::harness::{self, corrupt, make_phantom, FilterChoice, RunPlan, Situation};
use crate::io::{read_raster, write_raster, RasterFormat};
use crate::lee::{lee_filter, LeeSpec};
use crate::masks::{render_mask_table, Window};
use crate::metrics::{enl, MetricReport};
use crate::raster::{PixelSample, Raster};
use crate::rng::{SpeckleStream, SAMPLER_VERSION};

#[derive(Debug, Parser)]
#[command(name = "despeckle", version, about = "Speckle reduction with stochastic-distance tests")]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a noiseless phantom for one simulated situation.
    Phantom(PhantomArgs),
    /// Multiply an image by seeded Gamma speckle.
    Corrupt(CorruptArgs),
    /// Filter an image.
    Filter(FilterArgs),
    /// Compare a test image against a reference; one CSV row on stdout.
    Evaluate(EvaluateArgs),
    /// Run the Monte Carlo protocol and write a CSV of metrics.
    Montecarlo(MonteCarloArgs),
    /// Print the region id of every window cell.
    Masks(MasksArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Ascii,
    Raw,
    Pgm16,
}

impl From<FormatArg> for RasterFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Ascii => RasterFormat::Ascii,
            FormatArg::Raw => RasterFormat::RawF64,
            FormatArg::Pgm16 => RasterFormat::Pgm16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FilterName {
    Hellinger,
    Kl,
    Renyi,
    Lee,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SharedLooksArg {
    Central,
    Pooled,
}

impl From<SharedLooksArg> for SharedLooks {
    fn from(s: SharedLooksArg) -> Self {
        match s {
            SharedLooksArg::Central => SharedLooks::Central,
            SharedLooksArg::Pooled => SharedLooks::Pooled,
        }
    }
}

#[derive(Debug, Args)]
struct PhantomArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    situation: u8,
    /// Side of the standard layout (multiple of 32).
    #[arg(long, default_value_t = 128)]
    size: usize,
    /// Geometry file; overrides --size.
    #[arg(long)]
    geometry: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Output format (default: from the file extension).
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Debug, Args)]
struct CorruptArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Take the number of looks from a simulated situation.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4), conflicts_with = "looks")]
    situation: Option<u8>,
    #[arg(long)]
    looks: Option<f64>,
    #[arg(long, env = "DESPECKLE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Debug, Args)]
struct FilterArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = FilterName::Hellinger)]
    filter: FilterName,
    #[arg(long, default_value_t = 5)]
    window: usize,
    /// Significance for the eight tests as a whole.
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    /// Rényi order (renyi only).
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=2))]
    dof: u32,
    /// Looks estimate shared by the statistics.
    #[arg(long, value_enum, default_value_t = SharedLooksArg::Central)]
    shared_looks: SharedLooksArg,
    /// Nominal looks for the Lee filter.
    #[arg(long)]
    looks: Option<f64>,
    /// Homogeneous region `row,col,height,width` to estimate the Lee looks from.
    #[arg(long, conflicts_with = "looks")]
    homogeneous: Option<String>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Geometry for the ground-truth measures (default: the standard layout
    /// when the image size allows it).
    #[arg(long)]
    geometry: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Debug, Args)]
struct MonteCarloArgs {
    /// 64×64 phantom and 20 replicates.
    #[arg(long)]
    fast: bool,
    #[arg(long, env = "DESPECKLE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
    situations: Vec<u8>,
    #[arg(long)]
    replicates: Option<u32>,
    #[arg(long)]
    size: Option<usize>,
    #[arg(long, conflicts_with = "size")]
    geometry: Option<PathBuf>,
    /// Whole-series significance levels.
    #[arg(long, value_delimiter = ',', default_value = "0.01")]
    levels: Vec<f64>,
    /// Filters as name+window, e.g. `lee5,hellinger7,kl5,renyi7`.
    #[arg(long, value_delimiter = ',', default_value = "lee5,lee7,hellinger5,hellinger7")]
    filters: Vec<String>,
    /// Also emit rows for the unfiltered corrupted image.
    #[arg(long)]
    include_input: bool,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=2))]
    dof: u32,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long, value_enum, default_value_t = SharedLooksArg::Central)]
    shared_looks: SharedLooksArg,
}

#[derive(Debug, Args)]
struct MasksArgs {
    #[arg(long, default_value_t = 5)]
    window: usize,
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(msg) => Failure::Usage(msg),
            other => Failure::Runtime(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

fn format_for(path: &Path, flag: Option<FormatArg>) -> RasterFormat {
    flag.map(Into::into).unwrap_or_else(|| RasterFormat::from_path(path))
}

fn runtime(e: Error) -> Failure {
    Failure::Runtime(e)
}

fn load(path: &Path, flag: Option<FormatArg>) -> CliResult<Raster> {
    read_raster(path, format_for(path, flag)).map_err(runtime)
}

fn save(img: &Raster, path: &Path, flag: Option<FormatArg>) -> CliResult<()> {
    write_raster(img, path, format_for(path, flag)).map_err(runtime)
}

fn parse_filter_choice(s: &str) -> CliResult<FilterChoice> {
    if s == "none" {
        return Ok(FilterChoice::Identity);
    }
    let split = s.find(|c: char| c.is_ascii_digit()).unwrap_or(s.len());
    let (name, window) = s.split_at(split);
    let Ok(window) = window.parse::<usize>() else {
        return usage(format!("filter {s:?} needs a window size, e.g. hellinger5"));
    };
    if name == "lee" {
        LeeSpec::new(window, 1.0)?;
        return Ok(FilterChoice::Lee { window });
    }
    let kind = DistanceKind::from_str(name)?;
    Ok(FilterChoice::Stochastic { kind, window: Window::from_side(window)? })
}

fn parse_rect(s: &str) -> CliResult<Rect> {
    let nums: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Failure::Usage(format!("bad region {s:?}, expected row,col,height,width")))?;
    match nums[..] {
        [r, c, h, w] if h > 0 && w > 0 => Ok(Rect::new(r, c, h, w)),
        _ => usage(format!("bad region {s:?}, expected row,col,height,width")),
    }
}

fn cmd_phantom(a: &PhantomArgs) -> CliResult<()> {
    let geom = match &a.geometry {
        Some(p) => PhantomGeometry::read(p).map_err(runtime)?,
        None => PhantomGeometry::standard(a.size)?,
    };
    let sit = Situation::by_id(a.situation)?;
    save(&make_phantom(&geom, &sit), &a.out, a.format)
}

fn cmd_corrupt(a: &CorruptArgs) -> CliResult<()> {
    let looks = match (a.situation, a.looks) {
        (Some(s), None) => Situation::by_id(s)?.looks,
        (None, Some(l)) => l,
        _ => return usage("corrupt needs --situation or --looks"),
    };
    if !(looks.is_finite() && looks >= 1.0) {
        return usage(format!("looks must be >= 1, got {looks}"));
    }
    let img = load(&a.input, a.format)?;
    let out = corrupt(&img, looks, &mut SpeckleStream::new(a.seed, a.stream))?;
    save(&out, &a.out, a.format)
}

fn cmd_filter(a: &FilterArgs) -> CliResult<()> {
    if a.filter != FilterName::Renyi && a.beta.is_some() {
        return usage("--beta only applies to --filter renyi");
    }
    if a.filter != FilterName::Lee && (a.looks.is_some() || a.homogeneous.is_some()) {
        return usage("--looks and --homogeneous only apply to --filter lee");
    }
    let window = Window::from_side(a.window)?;
    let out = if a.filter == FilterName::Lee {
        let img_looks = match (&a.looks, &a.homogeneous) {
            (Some(l), _) => Some(*l),
            (None, Some(_)) => None,
            (None, None) => return usage("--filter lee needs --looks or --homogeneous"),
        };
        let rect = a.homogeneous.as_deref().map(parse_rect).transpose()?;
        let img = load(&a.input, a.format)?;
        let looks = match (img_looks, rect) {
            (Some(l), _) => l,
            (None, Some(rect)) => {
                if rect.row + rect.height > img.height() || rect.col + rect.width > img.width() {
                    return usage("homogeneous region leaves the image");
                }
                let values = rect.pixels().iter().map(|&(r, c)| img.get(r, c)).collect();
                // an ENL below one still means single-look speckle
                enl(&PixelSample::new(values)?).map_err(runtime)?.max(1.0)
            }
            (None, None) => unreachable!(),
        };
        lee_filter(&img, &LeeSpec::new(window.side(), looks)?)?
    } else {
        let kind = match a.filter {
            FilterName::Hellinger => DistanceKind::Hellinger,
            FilterName::Kl => DistanceKind::KullbackLeibler,
            _ => DistanceKind::Renyi,
        };
        let test = TestConfig {
            renyi_order: a.beta.unwrap_or(0.5),
            dof: a.dof,
            shared_looks: a.shared_looks.into(),
            ..TestConfig::new(kind, a.alpha)
        };
        let spec = FilterSpec::new(window, test)?;
        let img = load(&a.input, a.format)?;
        filter_image(&img, &spec)?
    };
    save(&out, &a.out, a.format)
}

fn cmd_evaluate(a: &EvaluateArgs, out: &mut dyn Write) -> CliResult<()> {
    let reference = load(&a.reference, a.format)?;
    let test = load(&a.test, a.format)?;
    if !reference.same_shape(&test) {
        return Err(Failure::Runtime(Error::InvalidArgument(
            "reference and test images differ in size".into(),
        )));
    }
    let geom = match &a.geometry {
        Some(p) => Some(PhantomGeometry::read(p).map_err(runtime)?),
        None if reference.width() == reference.height() => PhantomGeometry::standard(reference.width()).ok(),
        None => None,
    };
    let report = match &geom {
        Some(g) => MetricReport::with_ground_truth(&reference, &test, g),
        None => MetricReport::compare(&reference, &test),
    };
    let text = format!(
        "# despeckle evaluate ref={} test={}\n{}",
        a.reference.display(),
        a.test.display(),
        report.to_csv()
    );
    out.write_all(text.as_bytes()).map_err(|e| runtime(e.into()))
}

fn cmd_montecarlo(a: &MonteCarloArgs) -> CliResult<()> {
    let mut plan = if a.fast { RunPlan::fast(a.seed) } else { RunPlan::standard(a.seed) };
    if let Some(path) = &a.geometry {
        plan.geometry = PhantomGeometry::read(path).map_err(runtime)?;
    } else if let Some(size) = a.size {
        plan.geometry = PhantomGeometry::standard(size)?;
    }
    if let Some(r) = a.replicates {
        plan.replicates = r;
    }
    plan.situations = a.situations.clone();
    plan.levels = a.levels.clone();
    plan.filters = a.filters.iter().map(|s| parse_filter_choice(s)).collect::<CliResult<_>>()?;
    if a.include_input {
        plan.filters.insert(0, FilterChoice::Identity);
    }
    plan.dof = a.dof;
    plan.renyi_order = a.beta;
    plan.shared_looks = a.shared_looks.into();
    plan.validate()?;

    let rows = harness::run_protocol(&plan)?;
    let join = |v: Vec<String>| v.join(",");
    let filters = join(plan.filters.iter().map(|f| match f {
        FilterChoice::Identity => "none".to_string(),
        f => format!("{}{}", f.name(), f.window()),
    }).collect());
    let comment = format!(
        "despeckle montecarlo seed={} size={}x{} replicates={} situations={} levels={} filters={} dof={} beta={} shared_looks={} sampler=v{}",
        plan.seed,
        plan.geometry.height,
        plan.geometry.width,
        plan.replicates,
        join(plan.situations.iter().map(|s| s.to_string()).collect()),
        join(plan.levels.iter().map(|l| l.to_string()).collect()),
        filters,
        plan.dof,
        plan.renyi_order,
        format!("{:?}", plan.shared_looks).to_lowercase(),
        SAMPLER_VERSION,
    );
    let csv = harness::to_csv(&rows, &[comment]);
    std::fs::write(&a.out, csv).map_err(|e| runtime(e.into()))
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Phantom(a) => cmd_phantom(a),
        Command::Corrupt(a) => cmd_corrupt(a),
        Command::Filter(a) => cmd_filter(a),
        Command::Evaluate(a) => cmd_evaluate(a, out),
        Command::Montecarlo(a) => cmd_montecarlo(a),
        Command::Masks(a) => {
            let table = render_mask_table(Window::from_side(a.window)?);
            out.write_all(table.as_bytes()).map_err(|e| runtime(e.into()))
        }
    }
}

/// Runs the command line `argv` (program name first) and returns the exit
/// status. Data goes to `out`, diagnostics to `err`.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return code;
        }
    };
    // Buffered so the worker pool never touches the caller's writer.
    let mut buf = Vec::new();
    let result = match cli.threads {
        Some(0) => Err(Failure::Usage("--threads must be positive".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli, &mut buf)),
            Err(e) => Err(Failure::Runtime(Error::InvalidArgument(format!("cannot start {n} threads: {e}")))),
        },
        None => dispatch(&cli, &mut buf),
    };
    if let Err(e) = out.write_all(&buf) {
        let _ = writeln!(err, "error: {e}");
        return 1;
    }
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}\n\nFor more information, try '--help'.");
            2
        }
        Err(Failure::Runtime(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
