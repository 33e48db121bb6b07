//! Command-line flags, `--config` files and the validated [`RunConfig`].
//!
//! Values are taken from flags first, then from the config file, then from
//! the defaults (order 4, mu 300, window (-1, 0], tolerance 1e-10). A config
//! file holds one `key = value` per line, keys spelled like the long flags
//! without the dashes; `#` starts a comment.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cantor_spectra_core::CantorSpec;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

pub const DEFAULT_MU: f64 = 300.0;
pub const DEFAULT_WINDOW: (f64, f64) = (-1.0, 0.0);
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_RESOLUTION: usize = 1000;

#[derive(Debug, Parser)]
#[command(
    name = "cantor-spectra",
    version,
    about = "Bound states of a particle in an infinite well with a Cantor-like potential"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Print the potential as `start end value` lines.
    Potential(PotentialArgs),
    /// Eigenvalues in the window with their participation ratios.
    Spectrum(SpectrumArgs),
    /// Probability densities of selected eigenstates.
    States(StatesArgs),
    /// Integrated density of states on a uniform energy mesh.
    Staircase(StaircaseArgs),
    /// Eigenvalues grouped by gap threshold.
    Clusters(ClustersArgs),
    /// One spectrum summary per mu.
    Sweep(SweepArgs),
    /// Gnuplot script for a data file written by another subcommand.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Key = value file with defaults for any flag.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Construction order N.
    #[arg(long)]
    pub order: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    pub well_value: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub barrier_value: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub removal_fraction: Option<f64>,
    /// Read the potential from a `start end value` file instead.
    #[arg(long, value_name = "PATH")]
    pub potential: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    /// Lower (exclusive) end of the energy window.
    #[arg(long, allow_negative_numbers = true)]
    pub lo: Option<f64>,
    /// Upper (inclusive) end of the energy window.
    #[arg(long, allow_negative_numbers = true)]
    pub hi: Option<f64>,
    /// Absolute eigenvalue tolerance.
    #[arg(long, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    /// Interior grid nodes for the finite-difference engine and for sampled
    /// eigenfunctions.
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long, value_enum)]
    pub engine: Option<EngineChoice>,
    #[command(flatten)]
    pub window: WindowArgs,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write here instead of standard output.
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Args)]
pub struct PotentialArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub solve: SolveArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct StatesArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Energies to plot, each snapped to the nearest eigenvalue in the
    /// window. All eigenstates in the window when absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub eps: Option<Vec<f64>>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct StaircaseArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Number of energy steps; the mesh has one more point.
    #[arg(long)]
    pub resolution: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ClustersArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Gap above which a new cluster starts. Defaults to the geometric mean
    /// of the largest and smallest gaps, the smallest floored at the
    /// tolerance.
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    /// Keep only the lowest K eigenvalues of the window.
    #[arg(long, value_name = "K")]
    pub lowest: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Single mu; `--mu-list` takes precedence.
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub mu_list: Option<Vec<f64>>,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// CSV or potential file to plot.
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
    /// Detected from the file header when absent.
    #[arg(long, value_enum)]
    pub kind: Option<PlotKind>,
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineChoice {
    Fd,
    Tm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    JsonLines,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    Potential,
    Spectrum,
    States,
    Staircase,
    Clusters,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Potential,
    Spectrum,
    States,
    Staircase,
    Clusters,
    Sweep,
    Plot,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Potential => "potential",
            CommandKind::Spectrum => "spectrum",
            CommandKind::States => "states",
            CommandKind::Staircase => "staircase",
            CommandKind::Clusters => "clusters",
            CommandKind::Sweep => "sweep",
            CommandKind::Plot => "plot",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSource {
    Cantor(CantorSpec),
    File(PathBuf),
}

/// Fully resolved and validated settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub source: PotentialSource,
    /// One entry except for sweeps.
    pub mus: Vec<f64>,
    pub window: (f64, f64),
    pub tolerance: f64,
    pub grid: Option<usize>,
    pub engine: EngineChoice,
    pub resolution: usize,
    pub threshold: Option<f64>,
    pub lowest: Option<usize>,
    pub energies: Option<Vec<f64>>,
    pub data: Option<PathBuf>,
    pub plot_kind: Option<PlotKind>,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl RunConfig {
    pub fn mu(&self) -> f64 {
        self.mus[0]
    }
}

const KNOWN_KEYS: &[&str] = &[
    "order",
    "well-value",
    "barrier-value",
    "removal-fraction",
    "potential",
    "mu",
    "mu-list",
    "engine",
    "lo",
    "hi",
    "tol",
    "grid",
    "eps",
    "resolution",
    "threshold",
    "lowest",
    "data",
    "kind",
    "output",
    "format",
];

/// Entries of a `--config` file.
#[derive(Debug, Default)]
struct FileLayer {
    path: String,
    entries: BTreeMap<String, (usize, String)>,
}

impl FileLayer {
    fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let shown = path.display().to_string();
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config file {shown}: {e}")))?;
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| {
                CliError::config(format!("{shown} line {line}: expected `key = value`"))
            })?;
            let key = key.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::config(format!(
                    "{shown} line {line}: unknown key `{key}`"
                )));
            }
            if entries
                .insert(key.clone(), (line, value.trim().to_string()))
                .is_some()
            {
                return Err(CliError::config(format!(
                    "{shown} line {line}: duplicate key `{key}`"
                )));
            }
        }
        Ok(Self {
            path: shown,
            entries,
        })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.entries
            .get(key)
            .map(|(line, value)| {
                value.parse::<T>().map_err(|_| {
                    CliError::config(format!(
                        "{} line {line}: invalid value `{value}` for `{key}`",
                        self.path
                    ))
                })
            })
            .transpose()
    }

    fn get_list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.entries
            .get(key)
            .map(|(line, value)| {
                value
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| {
                        CliError::config(format!(
                            "{} line {line}: invalid list `{value}` for `{key}`",
                            self.path
                        ))
                    })
            })
            .transpose()
    }

    fn get_enum<T: ValueEnum>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.entries
            .get(key)
            .map(|(line, value)| {
                T::from_str(value, true).map_err(|_| {
                    CliError::config(format!(
                        "{} line {line}: invalid value `{value}` for `{key}`",
                        self.path
                    ))
                })
            })
            .transpose()
    }
}

fn pick<T: FromStr>(flag: Option<T>, file: &FileLayer, key: &str) -> Result<Option<T>, CliError> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get(key),
    }
}

fn pick_enum<T: ValueEnum>(
    flag: Option<T>,
    file: &FileLayer,
    key: &str,
) -> Result<Option<T>, CliError> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get_enum(key),
    }
}

fn pick_list(
    flag: Option<Vec<f64>>,
    file: &FileLayer,
    key: &str,
) -> Result<Option<Vec<f64>>, CliError> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get_list(key),
    }
}

/// Intermediate result of merging flags over a config file.
struct Draft {
    file: FileLayer,
    config: RunConfig,
}

impl Draft {
    fn new(command: CommandKind, config: Option<&Path>) -> Result<Self, CliError> {
        let file = FileLayer::load(config)?;
        let config = RunConfig {
            command,
            source: PotentialSource::Cantor(CantorSpec::default()),
            mus: vec![DEFAULT_MU],
            window: DEFAULT_WINDOW,
            tolerance: DEFAULT_TOLERANCE,
            grid: None,
            engine: EngineChoice::Fd,
            resolution: DEFAULT_RESOLUTION,
            threshold: None,
            lowest: None,
            energies: None,
            data: None,
            plot_kind: None,
            output: None,
            format: OutputFormat::Csv,
        };
        Ok(Self { file, config })
    }

    fn with_source(command: CommandKind, source: &SourceArgs) -> Result<Self, CliError> {
        let mut draft = Self::new(command, source.config.as_deref())?;
        let file = &draft.file;
        let mut spec = CantorSpec::default();
        if let Some(order) = pick(source.order, file, "order")? {
            spec.order = order;
        }
        if let Some(v) = pick(source.well_value, file, "well-value")? {
            spec.well_value = v;
        }
        if let Some(v) = pick(source.barrier_value, file, "barrier-value")? {
            spec.barrier_value = v;
        }
        if let Some(v) = pick(source.removal_fraction, file, "removal-fraction")? {
            spec.removal_fraction = v;
        }
        let potential: Option<PathBuf> = pick(source.potential.clone(), file, "potential")?;
        draft.config.source = match potential {
            Some(path) => PotentialSource::File(path),
            None => PotentialSource::Cantor(spec),
        };
        Ok(draft)
    }

    fn window(&mut self, w: &WindowArgs) -> Result<(), CliError> {
        let lo = pick(w.lo, &self.file, "lo")?.unwrap_or(DEFAULT_WINDOW.0);
        let hi = pick(w.hi, &self.file, "hi")?.unwrap_or(DEFAULT_WINDOW.1);
        self.config.window = (lo, hi);
        if let Some(tol) = pick(w.tol, &self.file, "tol")? {
            self.config.tolerance = tol;
        }
        self.config.grid = pick(w.grid, &self.file, "grid")?;
        Ok(())
    }

    fn solve(&mut self, s: &SolveArgs) -> Result<(), CliError> {
        if let Some(mu) = pick(s.mu, &self.file, "mu")? {
            self.config.mus = vec![mu];
        }
        if let Some(engine) = pick_enum(s.engine, &self.file, "engine")? {
            self.config.engine = engine;
        }
        self.window(&s.window)
    }

    fn output(
        &mut self,
        output: Option<PathBuf>,
        format: Option<OutputFormat>,
    ) -> Result<(), CliError> {
        self.config.output = pick(output, &self.file, "output")?;
        if let Some(format) = pick_enum(format, &self.file, "format")? {
            self.config.format = format;
        }
        Ok(())
    }

    fn finish(self) -> Result<RunConfig, CliError> {
        validate(&self.config).map_err(|message| CliError::Config {
            message,
            subcommand: Some(self.config.command.name()),
        })?;
        Ok(self.config)
    }
}

fn validate(c: &RunConfig) -> Result<(), String> {
    if let PotentialSource::Cantor(spec) = &c.source {
        spec.validate().map_err(|e| e.to_string())?;
    }
    if c.mus.is_empty() {
        return Err("mu list is empty".into());
    }
    if let Some(bad) = c.mus.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
        return Err(format!("mu must be positive and finite, got {bad}"));
    }
    let (lo, hi) = c.window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(format!(
            "energy window needs finite lo < hi, got ({lo}, {hi}]"
        ));
    }
    if !(c.tolerance.is_finite() && c.tolerance > 0.0) {
        return Err(format!("tolerance must be positive, got {}", c.tolerance));
    }
    if c.grid == Some(0) {
        return Err("grid needs at least one interior node".into());
    }
    if c.resolution == 0 {
        return Err("resolution must be positive".into());
    }
    if let Some(t) = c.threshold {
        if !(t.is_finite() && t > 0.0) {
            return Err(format!("threshold must be positive, got {t}"));
        }
    }
    if c.lowest == Some(0) {
        return Err("lowest must be positive".into());
    }
    if let Some(eps) = &c.energies {
        if eps.is_empty() || eps.iter().any(|e| !e.is_finite()) {
            return Err("eps needs finite energies".into());
        }
    }
    if c.command == CommandKind::Plot && c.data.is_none() {
        return Err("plot needs --data".into());
    }
    Ok(())
}

/// Parses and validates a full argument vector (program name first).
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&argv).map_err(|e| with_usage(e, &argv))?;
    resolve(cli.command)
}

/// Value errors from clap carry no usage line; turn them into config errors
/// that print one.
fn with_usage(e: clap::Error, argv: &[OsString]) -> CliError {
    let text = e.render().to_string();
    if e.exit_code() != 2 || text.contains("Usage:") {
        return e.into();
    }
    let subcommand = argv.iter().skip(1).find_map(|a| {
        SUBCOMMANDS
            .iter()
            .copied()
            .find(|name| a.to_str() == Some(name))
    });
    let message = text
        .lines()
        .next()
        .unwrap_or_default()
        .trim_start_matches("error: ")
        .to_string();
    CliError::Config {
        message,
        subcommand,
    }
}

const SUBCOMMANDS: &[&str] = &[
    "potential",
    "spectrum",
    "states",
    "staircase",
    "clusters",
    "sweep",
    "plot",
];

fn resolve(sub: Sub) -> Result<RunConfig, CliError> {
    match sub {
        Sub::Potential(a) => {
            let mut d = Draft::with_source(CommandKind::Potential, &a.source)?;
            d.output(a.output, None)?;
            d.finish()
        }
        Sub::Spectrum(a) => {
            let mut d = Draft::with_source(CommandKind::Spectrum, &a.source)?;
            d.solve(&a.solve)?;
            d.output(a.out.output, a.out.format)?;
            d.finish()
        }
        Sub::States(a) => {
            let mut d = Draft::with_source(CommandKind::States, &a.source)?;
            d.solve(&a.solve)?;
            d.config.energies = pick_list(a.eps, &d.file, "eps")?;
            d.output(a.out.output, a.out.format)?;
            d.finish()
        }
        Sub::Staircase(a) => {
            let mut d = Draft::with_source(CommandKind::Staircase, &a.source)?;
            d.solve(&a.solve)?;
            if let Some(r) = pick(a.resolution, &d.file, "resolution")? {
                d.config.resolution = r;
            }
            d.output(a.out.output, a.out.format)?;
            d.finish()
        }
        Sub::Clusters(a) => {
            let mut d = Draft::with_source(CommandKind::Clusters, &a.source)?;
            d.solve(&a.solve)?;
            d.config.threshold = pick(a.threshold, &d.file, "threshold")?;
            d.config.lowest = pick(a.lowest, &d.file, "lowest")?;
            d.output(a.out.output, a.out.format)?;
            d.finish()
        }
        Sub::Sweep(a) => {
            let mut d = Draft::with_source(CommandKind::Sweep, &a.source)?;
            d.window(&a.window)?;
            let list = pick_list(a.mu_list, &d.file, "mu-list")?;
            let single = pick(a.mu, &d.file, "mu")?;
            d.config.mus = match (list, single) {
                (Some(list), _) => list,
                (None, Some(mu)) => vec![mu],
                (None, None) => vec![DEFAULT_MU],
            };
            d.output(a.out.output, a.out.format)?;
            d.finish()
        }
        Sub::Plot(a) => {
            let mut d = Draft::new(CommandKind::Plot, a.config.as_deref())?;
            d.config.data = pick(a.data, &d.file, "data")?;
            d.config.plot_kind = pick_enum(a.kind, &d.file, "kind")?;
            d.output(a.output, None)?;
            d.finish()
        }
    }
}

/// Usage line of a subcommand, for config errors.
pub fn usage(subcommand: Option<&str>) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    match subcommand.and_then(|name| cmd.find_subcommand_mut(name)) {
        Some(sub) => sub.render_usage().to_string(),
        None => cmd.render_usage().to_string(),
    }
}
