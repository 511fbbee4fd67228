use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use causal_qt::bell::{chsh, sweep, Angles, BellConfig, SweepParam};
use causal_qt::collapse::DelayModel;
use causal_qt::engine::{distribution, sample_counts, Engine};
use causal_qt::io::{
    load_scenario_file, parse_grid, write_sweep_csv, BellFile, BellRecord, ModeSpec, ResultRecord, Timing, TOOL,
    VERSION,
};
use causal_qt::Error;

/// Exit codes: 0 ok, 2 invalid input, 3 enumeration budget exceeded,
/// 4 a local state was annihilated (zero-norm).
#[derive(Parser)]
#[command(name = "causal-qt", version, about = "Causal vs. standard collapse simulator and Bell/CHSH harness")]
struct Cli {
    /// Worker threads for Monte Carlo trials (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute (or sample) the joint outcome distribution of a scenario file.
    Run(RunArgs),
    /// Check a scenario file without running it.
    Validate { file: PathBuf },
    /// CHSH statistics for a two-wing singlet experiment.
    Bell(BellArgs),
    /// CHSH statistics across a grid of separations or collapse rates (CSV).
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    file: PathBuf,
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sample this many runs instead of enumerating.
    #[arg(long, conflicts_with = "exact")]
    trials: Option<u64>,
    /// Force exact enumeration.
    #[arg(long)]
    exact: bool,
    /// Also write the distribution or counts as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Causal,
    Standard,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Causal => Engine::Causal,
            EngineArg::Standard => Engine::Standard,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DelayArg {
    Deterministic,
    Exponential,
}

#[derive(Args, Clone)]
struct BellArgs {
    /// JSON config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Wing separation in light-seconds.
    #[arg(long = "L", alias = "separation")]
    separation: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// a,a',b,b' in radians.
    #[arg(long, value_delimiter = ',', num_args = 4, allow_hyphen_values = true)]
    angles: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    delay_model: Option<DelayArg>,
    /// Exponential collapse rate (1/s).
    #[arg(long)]
    rate: Option<f64>,
    /// Deterministic collapse delay (s).
    #[arg(long)]
    delta0: Option<f64>,
    #[arg(long)]
    arrival_time: Option<f64>,
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
    /// Number of trials; switches to sampled outcomes unless --exact is given.
    #[arg(long)]
    trials: Option<u64>,
    /// Exact distributions per sampled geometry.
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    bell: BellArgs,
    #[arg(long, value_enum)]
    param: Option<ParamArg>,
    /// start:stop:steps[:lin|log]
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ParamArg {
    #[value(name = "L")]
    L,
    Lambda,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        // only fails if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Budget { .. } => 3,
        Error::ZeroNormState(_) => 4,
        _ => 2,
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode, Error> {
    match cmd {
        Command::Run(args) => cmd_run(args),
        Command::Validate { file } => {
            let f = load_scenario_file(&file)?;
            let s = f.to_scenario()?;
            println!(
                "ok: {} sites, {} events, {} outcome tuples",
                s.dims().n_sites(),
                s.events().len(),
                s.tuple_count()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Bell(args) => cmd_bell(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::invalid("output", e.to_string()))?;
    let mut out = io::stdout().lock();
    stdout_result(writeln!(out, "{text}").and_then(|_| out.flush()))
}

// a closed downstream pipe is not an error worth reporting
fn stdout_result(r: io::Result<()>) -> Result<(), Error> {
    match r {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Error::invalid("stdout", e.to_string())),
        _ => Ok(()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::invalid(path.display().to_string(), e.to_string()))
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, Error> {
    let file = load_scenario_file(&args.file)?;
    let scenario = file.to_scenario()?;
    let engine = args.engine.map(Engine::from).unwrap_or(file.engine);
    let seed = args.seed.unwrap_or(file.seed);
    let mode = match (args.exact, args.trials) {
        (true, _) => ModeSpec::Exact,
        (false, Some(trials)) => ModeSpec::Sample { trials },
        (false, None) => file.mode,
    };
    let start = Instant::now();
    let record = match mode {
        ModeSpec::Exact => {
            let dist = distribution(&scenario, engine)?;
            ResultRecord::exact(engine, seed, scenario.events().len(), &dist, start.elapsed().as_secs_f64())
        }
        ModeSpec::Sample { trials } => {
            let counts = sample_counts(&scenario, engine, trials, seed)?;
            ResultRecord::sampled(engine, seed, scenario.events().len(), &counts, start.elapsed().as_secs_f64())
        }
    };
    if let Some(path) = &args.csv {
        record.write_csv(create(path)?)?;
    }
    print_json(&record)?;
    if let Some(first) = record.zero_norm.first() {
        eprintln!(
            "zero-norm local state: truncated mass {} over {} branch(es); first: {}",
            record.truncated_mass,
            record.zero_norm.len(),
            first.diagnostic
        );
        return Ok(ExitCode::from(4));
    }
    Ok(ExitCode::SUCCESS)
}

fn bell_config(args: &BellArgs) -> Result<(BellConfig, Option<BellFile>), Error> {
    let file = args.config.as_deref().map(BellFile::load).transpose()?;
    let mut c = file
        .as_ref()
        .map(|f| f.apply(BellConfig::default()))
        .unwrap_or_default();
    macro_rules! set {
        ($($f:ident),*) => { $( if let Some(v) = args.$f { c.$f = v; } )* };
    }
    set!(separation, eps, eta, arrival_time, seed);
    if let Some(e) = args.engine {
        c.engine = e.into();
    }
    if let Some(a) = &args.angles {
        c.angles = Angles {
            a: a[0],
            a_prime: a[1],
            b: a[2],
            b_prime: a[3],
        };
    }
    let delay = match args.delay_model {
        Some(DelayArg::Deterministic) => Some(DelayModel::Deterministic {
            delta0: args.delta0.unwrap_or(0.0),
        }),
        Some(DelayArg::Exponential) => Some(DelayModel::Exponential {
            rate: args
                .rate
                .ok_or_else(|| Error::invalid("--rate", "required with --delay-model exponential"))?,
        }),
        None => match (args.rate, args.delta0) {
            (Some(_), Some(_)) => return Err(Error::invalid("--rate", "conflicts with --delta0")),
            (Some(rate), None) => Some(DelayModel::Exponential { rate }),
            (None, Some(delta0)) => Some(DelayModel::Deterministic { delta0 }),
            (None, None) => None,
        },
    };
    if let Some(d) = delay {
        c.delay_a = d;
        c.delay_b = d;
    }
    if let Some(t) = args.trials {
        c.trials = t;
        c.exact = args.exact;
    } else if args.exact {
        c.exact = true;
    }
    c.validate().map_err(|e| Error::invalid("flags", e.to_string()))?;
    Ok((c, file))
}

fn cmd_bell(args: BellArgs) -> Result<ExitCode, Error> {
    let (config, _) = bell_config(&args)?;
    let start = Instant::now();
    let result = chsh(&config)?;
    let record = BellRecord {
        tool: TOOL.into(),
        version: VERSION.into(),
        config,
        result,
        timing: Timing {
            elapsed_seconds: start.elapsed().as_secs_f64(),
        },
    };
    if let Some(path) = &args.csv {
        record.write_csv(create(path)?)?;
    }
    print_json(&record)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode, Error> {
    let (config, file) = bell_config(&args.bell)?;
    let from_file = file.and_then(|f| f.sweep);
    let param = match (args.param, &from_file) {
        (Some(ParamArg::L), _) => SweepParam::L,
        (Some(ParamArg::Lambda), _) => SweepParam::Lambda,
        (None, Some(s)) => s.param,
        (None, None) => return Err(Error::invalid("--param", "required (L or lambda)")),
    };
    let grid = match (&args.grid, &from_file) {
        (Some(g), _) => parse_grid(g)?,
        (None, Some(s)) => parse_grid(&s.grid)?,
        (None, None) => return Err(Error::invalid("--grid", "required (start:stop:steps[:lin|log])")),
    };
    let rows = sweep(&config, param, &grid)?;
    if let Some(path) = &args.bell.csv {
        write_sweep_csv(&rows, create(path)?)?;
    }
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf)?;
    let mut out = io::stdout().lock();
    stdout_result(out.write_all(&buf).and_then(|_| out.flush()))?;
    Ok(ExitCode::SUCCESS)
}
