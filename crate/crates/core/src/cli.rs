//! The `asep` command line.
//!
//! Every experiment subcommand builds an [`ExperimentSpec`] from defaults,
//! then an optional `--config` file, then flags, so flags win.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dynamics::EventTrace;
use crate::harness::{run_resumable, run_trial_traced, ExperimentKind, ExperimentSpec, Report, RunOptions};
use crate::Error;

/// Environment variable naming the parent of default output directories.
pub const OUT_DIR_ENV: &str = "ASEP_OUT_DIR";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SIMULATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "asep", version, about = "Monte Carlo experiments on multi-species ASEP")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Speed law of the leftmost second-class particle.
    Speed {
        #[command(flatten)]
        model: ModelFlags,
        #[command(flatten)]
        speed: SpeedFlags,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Pathwise audit of the colored/two-species coupling.
    CouplingAudit {
        #[command(flatten)]
        model: ModelFlags,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Colored versus single-species step ASEP probabilities.
    Identity {
        #[command(flatten)]
        model: ModelFlags,
        #[command(flatten)]
        identity: IdentityFlags,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Block occupation probability against its large-time limit.
    Block {
        #[command(flatten)]
        model: ModelFlags,
        #[command(flatten)]
        block: BlockFlags,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Fit the scale of the speed law of a lone second-class particle.
    FitAlpha {
        #[command(flatten)]
        model: ModelFlags,
        #[command(flatten)]
        fit: FitFlags,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Re-run one trial and write its event trace as CSV.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct ModelFlags {
    /// Key-value config file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Right-jump probability, in (1/2, 1].
    #[arg(long)]
    pub p: Option<f64>,
    /// Species parameter L.
    #[arg(long = "L")]
    pub l: Option<u32>,
    #[arg(long)]
    pub t: Option<f64>,
    /// Number of trials.
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Light-cone factor of the simulation window.
    #[arg(long)]
    pub safety: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunFlags {
    /// Output directory [default: $ASEP_OUT_DIR/<subcommand> or asep-out/<subcommand>].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads [default: available cores].
    #[arg(long)]
    pub workers: Option<usize>,
    /// Discard records left in the output directory instead of resuming.
    #[arg(long)]
    pub fresh: bool,
}

#[derive(Debug, Args)]
pub struct SpeedFlags {
    /// two-species or single-second-class.
    #[arg(long)]
    pub init: Option<String>,
    /// occupied or empty.
    #[arg(long)]
    pub origin: Option<String>,
    /// CDF table grid as lo,hi,steps.
    #[arg(long = "s-grid", allow_hyphen_values = true)]
    pub s_grid: Option<String>,
    #[arg(long = "ks-max")]
    pub ks_max: Option<f64>,
    #[arg(long = "median-tol")]
    pub median_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitFlags {
    /// occupied or empty.
    #[arg(long)]
    pub origin: Option<String>,
    /// CDF table grid as lo,hi,steps.
    #[arg(long = "s-grid", allow_hyphen_values = true)]
    pub s_grid: Option<String>,
    #[arg(long = "ks-max")]
    pub ks_max: Option<f64>,
    #[arg(long = "alpha-min")]
    pub alpha_min: Option<f64>,
    #[arg(long = "alpha-max")]
    pub alpha_max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct IdentityFlags {
    /// Sites that must be occupied, comma-separated.
    #[arg(long = "I", allow_hyphen_values = true)]
    pub sites: Option<String>,
    /// Colors, comma-separated.
    #[arg(long = "J")]
    pub colors: Option<String>,
    #[arg(long = "P", allow_hyphen_values = true)]
    pub shift: Option<i64>,
    #[arg(long = "z-max")]
    pub z_max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BlockFlags {
    /// Scaled position of the block.
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<f64>,
    /// Extra observation times, comma-separated.
    #[arg(long = "t-grid")]
    pub t_grid: Option<String>,
    /// Allowed final gap to the limit.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Experiment whose trial is replayed [default: the config's kind, else speed].
    #[arg(long)]
    pub experiment: Option<String>,
    /// Trial index.
    #[arg(long)]
    pub trial: u64,
    /// Trace destination; `-` is stdout.
    #[arg(long, default_value = "-")]
    pub trace: PathBuf,
    #[command(flatten)]
    pub model: ModelFlags,
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long)]
    pub origin: Option<String>,
    #[arg(long = "I", allow_hyphen_values = true)]
    pub sites: Option<String>,
    #[arg(long = "J")]
    pub colors: Option<String>,
    #[arg(long = "P", allow_hyphen_values = true)]
    pub shift: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<f64>,
    #[arg(long = "t-grid")]
    pub t_grid: Option<String>,
}

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Simulation(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Spec(m) => CliError::Usage(m),
            other => CliError::Simulation(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Simulation(_) => EXIT_SIMULATION,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Simulation(e) => write!(f, "simulation error: {e}"),
        }
    }
}

type Pairs = Vec<(&'static str, Option<String>)>;

fn s<T: ToString>(x: &Option<T>) -> Option<String> {
    x.as_ref().map(T::to_string)
}

impl ModelFlags {
    fn pairs(&self) -> Pairs {
        vec![
            ("p", s(&self.p)),
            ("L", s(&self.l)),
            ("t", s(&self.t)),
            ("n", s(&self.n)),
            ("seed", s(&self.seed)),
            ("safety", s(&self.safety)),
        ]
    }
}

/// Defaults, then the config file, then flags.
fn build_spec(kind: ExperimentKind, config: Option<&Path>, flags: Pairs) -> Result<ExperimentSpec, CliError> {
    let mut spec = ExperimentSpec::new(kind);
    if let Some(path) = config {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        for (k, v) in ExperimentSpec::parse_config(&text)? {
            spec.set(&k, &v)?;
        }
    }
    for (k, v) in flags {
        if let Some(v) = v {
            spec.set(k, &v)?;
        }
    }
    spec.validate()?;
    Ok(spec)
}

fn out_dir(run: &RunFlags, kind: ExperimentKind) -> PathBuf {
    run.out.clone().unwrap_or_else(|| {
        std::env::var_os(OUT_DIR_ENV)
            .map_or_else(|| PathBuf::from("asep-out"), PathBuf::from)
            .join(kind.name())
    })
}

fn run_spec(spec: &ExperimentSpec, run: &RunFlags) -> Result<Report, CliError> {
    let dir = out_dir(run, spec.kind);
    if run.fresh && dir.exists() {
        fs::remove_dir_all(&dir).map_err(|e| CliError::Simulation(Error::Io { path: dir.clone(), source: e }))?;
    }
    let mut opts = RunOptions::default();
    if let Some(w) = run.workers {
        if w == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        opts.workers = w;
    }
    let report = run_resumable(spec, &dir, opts).map_err(|e| match e {
        Error::Schema { .. } => CliError::Usage(format!("{e}; pass --fresh or another --out")),
        other => CliError::from(other),
    })?;
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{}: {}", spec.kind, report.summary.headline());
    let _ = writeln!(stdout, "{} -> {}", if report.passed() { "PASS" } else { "FAIL" }, dir.display());
    Ok(report)
}

fn replay(args: &ReplayArgs) -> Result<(), CliError> {
    let config_kind = match &args.model.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            ExperimentSpec::parse_config(&text)?
                .into_iter()
                .find(|(k, _)| k == "kind")
                .map(|(_, v)| v)
        }
        None => None,
    };
    let kind: ExperimentKind = args
        .experiment
        .as_deref()
        .or(config_kind.as_deref())
        .unwrap_or("speed")
        .parse()?;
    let mut flags = args.model.pairs();
    flags.extend([
        ("init", args.init.clone()),
        ("origin", args.origin.clone()),
        ("I", args.sites.clone()),
        ("J", args.colors.clone()),
        ("P", s(&args.shift)),
        ("s", s(&args.s)),
        ("t-grid", args.t_grid.clone()),
    ]);
    let spec = build_spec(kind, args.model.config.as_deref(), flags)?;
    if args.trial >= spec.n_trials {
        return Err(CliError::Usage(format!("trial {} is outside 0..{}", args.trial, spec.n_trials)));
    }

    let sink: Box<dyn Write> = if args.trace.as_os_str() == "-" {
        Box::new(std::io::stdout().lock())
    } else {
        let file = fs::File::create(&args.trace)
            .map_err(|e| CliError::Simulation(Error::Io { path: args.trace.clone(), source: e }))?;
        Box::new(std::io::BufWriter::new(file))
    };
    let mut trace = EventTrace::new(sink);
    let mut failure = None;
    let record = run_trial_traced(&spec, args.trial, &mut |ev| {
        if failure.is_none() {
            failure = trace.record(ev).err();
        }
    })?;
    let io_err = |e: std::io::Error| CliError::Simulation(Error::Io { path: args.trace.clone(), source: e });
    if let Some(e) = failure {
        return Err(io_err(e.into()));
    }
    trace.finish().map_err(io_err)?;
    let mut rec = record.clone();
    rec.wall_time_s = 0.0;
    eprintln!("{}", serde_json::to_string(&rec).unwrap_or_default());
    Ok(())
}

/// Runs a parsed command; `Ok(passed)` for experiments.
pub fn run(cli: &Cli) -> Result<bool, CliError> {
    let (kind, config, mut flags, run) = match &cli.command {
        Command::Replay(args) => return replay(args).map(|()| true),
        Command::Speed { model, speed, run } => {
            let mut f = model.pairs();
            f.extend([
                ("init", speed.init.clone()),
                ("origin", speed.origin.clone()),
                ("s-grid", speed.s_grid.clone()),
                ("ks-max", s(&speed.ks_max)),
                ("median-tol", s(&speed.median_tol)),
            ]);
            (ExperimentKind::Speed, &model.config, f, run)
        }
        Command::CouplingAudit { model, run } => (ExperimentKind::CouplingAudit, &model.config, model.pairs(), run),
        Command::Identity { model, identity, run } => {
            let mut f = model.pairs();
            f.extend([
                ("I", identity.sites.clone()),
                ("J", identity.colors.clone()),
                ("P", s(&identity.shift)),
                ("z-max", s(&identity.z_max)),
            ]);
            (ExperimentKind::Identity, &model.config, f, run)
        }
        Command::Block { model, block, run } => {
            let mut f = model.pairs();
            f.extend([
                ("s", s(&block.s)),
                ("t-grid", block.t_grid.clone()),
                ("tol", s(&block.tol)),
            ]);
            (ExperimentKind::Block, &model.config, f, run)
        }
        Command::FitAlpha { model, fit, run } => {
            let mut f = model.pairs();
            f.extend([
                ("origin", fit.origin.clone()),
                ("s-grid", fit.s_grid.clone()),
                ("ks-max", s(&fit.ks_max)),
                ("alpha-min", s(&fit.alpha_min)),
                ("alpha-max", s(&fit.alpha_max)),
            ]);
            (ExperimentKind::FitAlpha, &model.config, f, run)
        }
    };
    flags.retain(|(_, v)| v.is_some());
    let spec = build_spec(kind, config.as_deref(), flags)?;
    Ok(run_spec(&spec, run)?.passed())
}

/// Parses `argv` (program name first) and runs it, returning the exit code.
pub fn parse_and_run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    match run(&cli) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            eprintln!("asep: {e}");
            e.exit_code()
        }
    }
}
