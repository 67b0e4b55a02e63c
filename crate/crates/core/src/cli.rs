//! Command-line surface: argument parsing, validation and output emission.
//!
//! Every configuration error is reported before any output file is opened.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::coloring::{distant_chromatic, Method};
use crate::experiments::{run_experiment, ColoringPolicy, ExperimentConfig, Suite, Thresholds};
use crate::geometry::{radius_for, sample_points, Density, Norm, PointCloud, RadiusSchedule};
use crate::graph::{build_graph, read_edgelist, write_edgelist, Graph};
use crate::theory::{c_ratio_indicator, xi_indicator, LimitRatio};
use crate::{Error, Result};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "RGG_THREADS";

#[derive(Debug, Parser)]
#[command(name = "rgg-distcolor", version, about = "Distance-l colorings of random geometric graphs")]
struct Cli {
    #[command(subcommand)]
    command: CommandArgs,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Debug, Subcommand)]
enum CommandArgs {
    /// Sample a point cloud and print its geometric graph as an edge list.
    Generate,
    /// Color the l-th power of a sampled (or given) graph.
    Color,
    /// Tabulate xi and the connectivity-regime ratio for an indicator window.
    Theory(TheoryArgs),
    /// Run a Monte-Carlo suite over a grid of n.
    Experiment,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct TheoryArgs {
    #[arg(long, default_value_t = 1e-3)]
    pub tmin: f64,
    #[arg(long, default_value_t = 1e3)]
    pub tmax: f64,
    #[arg(long, default_value_t = 25)]
    pub points: usize,
    /// Window volume; defaults to the volume of the unit ball of the chosen norm.
    #[arg(long)]
    pub volume: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Edgelist,
}

#[derive(Debug, Args)]
struct Shared {
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true, default_value_t = 2)]
    d: usize,
    /// 1, 2, inf, or any real p >= 1.
    #[arg(long, global = true, default_value = "2", value_parser = parse_from_str::<Norm>)]
    p: Norm,
    #[arg(long, global = true, default_value_t = 2)]
    l: usize,
    /// uniform-cube, gaussian or step-cube:lo,hi.
    #[arg(long, global = true, default_value = "uniform-cube", value_parser = parse_from_str::<Density>)]
    density: Density,
    /// sub:b, conn:t, super:a or sparse:eps.
    #[arg(long, global = true, default_value = "conn:1", value_parser = parse_from_str::<RadiusSchedule>)]
    regime: RadiusSchedule,
    /// Explicit connection radius, overriding the regime.
    #[arg(long, global = true)]
    radius: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 10)]
    trials: usize,
    /// Comma-separated list of n.
    #[arg(long, global = true, value_delimiter = ',')]
    grid: Vec<usize>,
    #[arg(long, global = true, default_value = "dsatur", value_parser = parse_from_str::<Method>)]
    method: Method,
    /// Node budget for exact search and clique bounds.
    #[arg(long, global = true, default_value_t = 2_000_000)]
    budget: u64,
    #[arg(long, global = true, value_parser = parse_from_str::<Suite>)]
    suite: Option<Suite>,
    /// Edge list to color instead of sampling.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

fn parse_from_str<T: FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: Error| match e {
        Error::Usage(m) | Error::Domain(m) | Error::Invariant(m) => m,
        Error::Io(e) => e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Generate,
    Color,
    Theory(TheoryArgs),
    Experiment(ExperimentConfig),
}

/// A validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub command: Command,
    pub n: Option<usize>,
    pub d: usize,
    pub norm: Norm,
    pub l: usize,
    pub density: Density,
    pub schedule: RadiusSchedule,
    pub radius: Option<f64>,
    pub seed: u64,
    pub method: Method,
    pub budget: u64,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

/// Parses and validates `argv` (including the program name). Help and version requests
/// come back as usage errors carrying the rendered text; [`run`] prints those instead.
pub fn parse_args<I, T>(argv: I) -> Result<CliConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| usage(e.to_string()))?;
    validate(cli)
}

fn validate(cli: Cli) -> Result<CliConfig> {
    let s = cli.shared;
    if s.d == 0 {
        return Err(usage("--d must be at least 1"));
    }
    if s.l == 0 {
        return Err(usage("--l must be at least 1"));
    }
    if s.n == Some(0) {
        return Err(usage("--n must be at least 1"));
    }
    if let Some(r) = s.radius {
        if !(r > 0.0 && r.is_finite()) {
            return Err(usage(format!("--radius must be positive and finite, got {r}")));
        }
    }
    let pick_format = |allowed: &[Format], default: Format, name: &str| match s.format {
        None => Ok(default),
        Some(f) if allowed.contains(&f) => Ok(f),
        Some(f) => Err(usage(format!("--format {f:?} is not available for {name}").to_lowercase())),
    };
    let needs_n = |name: &str| {
        let n = s.n.ok_or_else(|| usage(format!("{name} needs --n")))?;
        if s.radius.is_none() {
            radius_for(s.regime, n, s.d).map_err(|e| usage(format!("--n {n} with --regime {}: {e}", s.regime)))?;
        }
        Ok::<_, Error>(n)
    };

    let (command, format) = match cli.command {
        CommandArgs::Generate => {
            needs_n("generate")?;
            (Command::Generate, pick_format(&[Format::Edgelist], Format::Edgelist, "generate")?)
        }
        CommandArgs::Color => {
            if s.input.is_none() {
                needs_n("color")?;
            }
            (Command::Color, pick_format(&[Format::Csv, Format::Json], Format::Csv, "color")?)
        }
        CommandArgs::Theory(t) => {
            if !(t.tmin > 0.0 && t.tmax >= t.tmin && t.tmax.is_finite()) {
                return Err(usage(format!("--tmin/--tmax need 0 < tmin <= tmax, got {}, {}", t.tmin, t.tmax)));
            }
            if t.points == 0 || (t.points == 1 && t.tmin != t.tmax) {
                return Err(usage("--points must be at least 2 unless tmin = tmax"));
            }
            if let Some(v) = t.volume {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(usage(format!("--volume must be positive and finite, got {v}")));
                }
            }
            (Command::Theory(t), pick_format(&[Format::Csv, Format::Json], Format::Csv, "theory")?)
        }
        CommandArgs::Experiment => {
            if s.grid.is_empty() {
                return Err(usage("experiment needs a nonempty --grid"));
            }
            if s.trials == 0 {
                return Err(usage("--trials must be at least 1"));
            }
            if s.radius.is_some() {
                return Err(usage("--radius cannot be combined with experiment; use --regime"));
            }
            let policy = ColoringPolicy { method: s.method, budget: s.budget, ..ColoringPolicy::default() };
            let config = ExperimentConfig {
                suite: s.suite.unwrap_or_else(|| Suite::for_schedule(&s.regime)),
                grid: s.grid.clone(),
                trials: s.trials,
                base_seed: s.seed,
                d: s.d,
                norm: s.p,
                l: s.l,
                density: s.density,
                schedule: s.regime,
                policy,
                thresholds: Thresholds::default(),
            };
            config.validate().map_err(|e| match e {
                Error::Usage(m) => usage(format!("--grid/--regime: {m}")),
                other => other,
            })?;
            (Command::Experiment(config), pick_format(&[Format::Csv, Format::Json], Format::Csv, "experiment")?)
        }
    };

    Ok(CliConfig {
        command,
        n: s.n,
        d: s.d,
        norm: s.p,
        l: s.l,
        density: s.density,
        schedule: s.regime,
        radius: s.radius,
        seed: s.seed,
        method: s.method,
        budget: s.budget,
        input: s.input,
        out: s.out,
        format,
    })
}

fn sample_graph(cfg: &CliConfig) -> Result<Graph> {
    let n = cfg.n.ok_or_else(|| usage("missing --n"))?;
    let r = match cfg.radius {
        Some(r) => r,
        None => radius_for(cfg.schedule, n, cfg.d)?,
    };
    let points = sample_points(n, cfg.density, cfg.d, cfg.seed)?;
    Ok(build_graph(&PointCloud::new(points, r, cfg.norm)?))
}

/// Writes `body` to `path`, or to stdout when no path is given.
pub fn emit<F>(path: Option<&Path>, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            body(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            body(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect()
}

#[derive(Serialize)]
struct TheoryRow {
    t: f64,
    xi: f64,
    c_ratio: f64,
}

fn theory_rows(cfg: &CliConfig, t: &TheoryArgs) -> Result<Vec<TheoryRow>> {
    let volume = t.volume.unwrap_or_else(|| cfg.norm.unit_ball_volume(cfg.d));
    let f_max = cfg.density.f_max(cfg.d);
    log_grid(t.tmin, t.tmax, t.points)
        .into_iter()
        .map(|x| {
            Ok(TheoryRow {
                t: x,
                xi: xi_indicator(volume, LimitRatio::Finite(x), f_max)?,
                c_ratio: c_ratio_indicator(cfg.l, cfg.d, LimitRatio::Finite(x), volume, f_max)?,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct ColoringDoc<'a> {
    l: usize,
    method: String,
    lower: usize,
    upper: usize,
    exact: bool,
    colors: &'a [u32],
}

fn summary_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".summary.json");
    PathBuf::from(s)
}

/// Executes a validated configuration.
pub fn execute(cfg: &CliConfig) -> Result<()> {
    let out = cfg.out.as_deref();
    match &cfg.command {
        Command::Generate => {
            let g = sample_graph(cfg)?;
            emit(out, |w| Ok(write_edgelist(&g, w)?))
        }
        Command::Color => {
            let g = match &cfg.input {
                Some(p) => read_edgelist(BufReader::new(File::open(p)?))?,
                None => sample_graph(cfg)?,
            };
            let est = distant_chromatic(&g, cfg.l, cfg.method, cfg.budget)?;
            eprintln!(
                "chi_{} in [{}, {}]{}",
                cfg.l,
                est.lower,
                est.upper,
                if est.exact { " (exact)" } else { "" }
            );
            match cfg.format {
                Format::Json => {
                    let doc = ColoringDoc {
                        l: cfg.l,
                        method: est.coloring.method.to_string(),
                        lower: est.lower,
                        upper: est.upper,
                        exact: est.exact,
                        colors: &est.coloring.colors,
                    };
                    emit(out, |w| {
                        serde_json::to_writer_pretty(&mut *w, &doc).map_err(io::Error::from)?;
                        Ok(writeln!(w)?)
                    })
                }
                _ => emit(out, |w| Ok(est.coloring.write_to(w)?)),
            }
        }
        Command::Theory(t) => {
            let rows = theory_rows(cfg, t)?;
            match cfg.format {
                Format::Json => emit(out, |w| {
                    serde_json::to_writer_pretty(&mut *w, &rows).map_err(io::Error::from)?;
                    Ok(writeln!(w)?)
                }),
                _ => emit(out, |w| {
                    let mut csv = csv::Writer::from_writer(w);
                    for row in &rows {
                        csv.serialize(row).map_err(|e| Error::Io(io::Error::other(e)))?;
                    }
                    Ok(csv.flush()?)
                }),
            }
        }
        Command::Experiment(config) => {
            let report = run_experiment(config)?;
            for check in &report.summary.checks {
                eprintln!("{} {}: {}", if check.passed { "PASS" } else { "FAIL" }, check.name, check.detail);
            }
            match cfg.format {
                Format::Json => emit(out, |w| Ok(w.write_all(report.summary_json().as_bytes())?)),
                _ => {
                    emit(out, |w| report.write_csv(w))?;
                    match out {
                        Some(p) => emit(Some(&summary_path(p)), |w| Ok(w.write_all(report.summary_json().as_bytes())?)),
                        None => Ok(()),
                    }
                }
            }
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| usage(format!("{THREADS_ENV} must be a positive integer, got '{raw}'")))?;
    // A pool already installed by an embedding program is left alone.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

/// Parses `argv` and runs it. Help and version output go to stdout and succeed.
pub fn run<I, T>(argv: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(usage(e.to_string())),
    };
    let cfg = validate(cli)?;
    configure_threads()?;
    execute(&cfg)
}
