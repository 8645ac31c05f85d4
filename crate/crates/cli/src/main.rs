mod commands;
mod config;
mod tables;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use opforge::evolution::EvolutionError;
use opforge::llm::BackendError;

#[derive(Debug, Parser)]
#[command(name = "opforge", version, about = "Evolve and benchmark variation operators for multiobjective search")]
struct Cli {
    /// Log progress (-v) or debugging detail (-vv) to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a suite of problem instances.
    GenInstances {
        #[arg(long)]
        category: String,
        #[arg(long, default_value = "validation")]
        role: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evolve operators as described by a config file.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        /// Run directory; overrides `out_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score stored operator sources over a suite with several seeds.
    EvalOperator {
        /// May be given several times; each file becomes one table column.
        #[arg(long = "operator-file", required = true)]
        operator_files: Vec<PathBuf>,
        #[command(flatten)]
        common: TableArgs,
        /// Limit on each worker reply, in seconds.
        #[arg(long, default_value_t = 10.0)]
        call_timeout: f64,
        /// Worker command line; consumes the remaining arguments.
        #[arg(long, num_args = 1.., allow_hyphen_values = true)]
        worker: Option<Vec<String>>,
    },
    /// Run the reference solver over a suite with several seeds.
    Baseline {
        #[arg(long, default_value = "nsga2")]
        algorithm: String,
        #[command(flatten)]
        common: TableArgs,
    },
    /// Derive convergence tables from a run directory.
    Report {
        #[arg(long)]
        run: PathBuf,
        /// Defaults to `<run>/report`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    #[command(hide = true)]
    StubWorker {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        args: Vec<String>,
    },
}

#[derive(Debug, Args)]
struct TableArgs {
    /// Directory written by `gen-instances`.
    #[arg(long)]
    suite: PathBuf,
    /// Runs per instance; run j uses seed `seed + j`.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    population: usize,
    #[arg(long, default_value_t = 200)]
    generations: usize,
    /// Concurrent runs; defaults to the number of CPUs.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Config,
    Backend,
    RunAborted,
}

impl ErrorKind {
    fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::Config => 2,
            ErrorKind::Backend => 3,
            ErrorKind::RunAborted => 4,
        }
    }

    fn label(self) -> &'static str {
        match self {
            ErrorKind::Usage => "usage",
            ErrorKind::Config => "config",
            ErrorKind::Backend => "backend",
            ErrorKind::RunAborted => "run-aborted",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Usage, message)
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Config, message)
    }

    pub fn aborted(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::RunAborted, message)
    }
}

/// One line, whatever the message contains, so callers can parse it.
impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flat: Vec<&str> = self.message.split_whitespace().collect();
        write!(f, "error[{}]: {}", self.kind.label(), flat.join(" "))
    }
}

impl From<EvolutionError> for CliError {
    fn from(e: EvolutionError) -> Self {
        let kind = match &e {
            EvolutionError::Config(_) => ErrorKind::Config,
            EvolutionError::Backend(_) => ErrorKind::Backend,
            EvolutionError::InitializationAborted { .. } | EvolutionError::Sandbox(_) | EvolutionError::Persist(_) => {
                ErrorKind::RunAborted
            }
        };
        CliError::new(kind, e.to_string())
    }
}

impl From<BackendError> for CliError {
    fn from(e: BackendError) -> Self {
        let kind = match e {
            BackendError::Fixture(_) => ErrorKind::Config,
            _ => ErrorKind::Backend,
        };
        CliError::new(kind, e.to_string())
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    // Children spawned by the stub worker re-execute this binary.
    if args.get(1).is_some_and(|a| a == "--sleep-forever") {
        opforge::sandbox::stub::run_from_args(args.into_iter().skip(1));
        return ExitCode::SUCCESS;
    }
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            match e.kind() {
                K::DisplayHelp | K::DisplayVersion => {
                    let _ = e.print();
                    return ExitCode::SUCCESS;
                }
                K::DisplayHelpOnMissingArgumentOrSubcommand => {
                    return report(CliError::usage("a subcommand is required; see --help"));
                }
                _ => {}
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            return report(CliError::usage(first));
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    let result = match cli.command {
        Command::GenInstances {
            category,
            role,
            seed,
            out,
        } => commands::gen_instances(&category, &role, seed, &out),
        Command::Evolve { config, out } => commands::evolve(&config, out),
        Command::EvalOperator {
            operator_files,
            common,
            call_timeout,
            worker,
        } => commands::eval_operator(&operator_files, &common.into(), call_timeout, worker),
        Command::Baseline { algorithm, common } => commands::baseline(&algorithm, &common.into()),
        Command::Report { run, out } => commands::report(&run, out),
        Command::StubWorker { args } => {
            return ExitCode::from(opforge::sandbox::stub::run_from_args(args).clamp(0, 255) as u8);
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e),
    }
}

fn report(e: CliError) -> ExitCode {
    eprintln!("{e}");
    ExitCode::from(e.kind.exit_code())
}

impl From<TableArgs> for commands::TableOptions {
    fn from(a: TableArgs) -> Self {
        commands::TableOptions {
            suite: a.suite,
            seeds: a.seeds,
            seed: a.seed,
            population: a.population,
            generations: a.generations,
            jobs: a.jobs,
            out: a.out,
        }
    }
}
