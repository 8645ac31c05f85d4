use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use opforge::baseline::{nsga2_run, SolverConfig};
use opforge::evolution::{evolve as run_evolution, EvolutionError};
use opforge::llm::{ChatBackend, MockBackend, OpenAiCompatibleBackend};
use opforge::metrics::problem_score;
use opforge::problems::{make_suite, toy_suite, Category, ProblemInstance, SuiteRole, SuiteSpec};
use opforge::record::{write_report, RunRecorder};
use opforge::sandbox::{evaluate_operator, Budget, OperatorArtifact, Origin, WorkerSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{default_worker_command, BackendConfig, RunConfig};
use crate::tables::{RunResult, Table};
use crate::CliError;

pub struct TableOptions {
    pub suite: PathBuf,
    pub seeds: u64,
    pub seed: u64,
    pub population: usize,
    pub generations: usize,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
}

pub fn gen_instances(category: &str, role: &str, seed: u64, out: &Path) -> Result<(), CliError> {
    let category: Category = category.parse().map_err(|e| CliError::usage(format!("{e}")))?;
    let role: SuiteRole = role.parse().map_err(|e| CliError::usage(format!("{e}")))?;
    let suite = make_suite(category, role, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(|e| CliError::config(e.to_string()))?;
    suite
        .save_dir(out)
        .map_err(|e| CliError::aborted(format!("{}: {e}", out.display())))?;
    println!("wrote {} {category} {role} instances to {}", suite.len(), out.display());
    Ok(())
}

pub fn evolve(config_path: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let config = RunConfig::load(config_path)?;
    let out = out
        .or_else(|| config.out_dir.clone())
        .ok_or_else(|| CliError::usage("no run directory: pass --out or set out_dir in the config"))?;
    let suite = config.build_suite()?;
    let toys = toy_suite(config.evolution.category);
    let backend: Box<dyn ChatBackend> = match &config.backend {
        BackendConfig::Mock { dir } => Box::new(MockBackend::from_dir(dir)?.with_temperature(config.evolution.temperature)),
        BackendConfig::Http { http } => Box::new(OpenAiCompatibleBackend::from_env(http.clone())?),
    };
    let spec = config.evolution.worker_spec(config.worker.command.clone());
    let mut recorder = RunRecorder::create(&out, &config, &suite).map_err(|e| match e.kind() {
        std::io::ErrorKind::AlreadyExists => CliError::config(e.to_string()),
        _ => CliError::from(EvolutionError::Persist(e)),
    })?;
    log::info!(
        "evolving {} operators for {} generations on {} instances into {}",
        config.evolution.n_ev,
        config.evolution.g_ev,
        suite.len(),
        out.display()
    );
    let outcome = run_evolution(&config.evolution, &suite, &toys, &spec, backend.as_ref(), &mut recorder)?;
    println!(
        "best operator {} (score {}) in {}",
        outcome.best.artifact.id,
        outcome.best.score(),
        out.display()
    );
    Ok(())
}

pub fn report(run: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let out = out.unwrap_or_else(|| run.join("report"));
    let report = write_report(run, &out).map_err(|e| CliError::config(format!("{}: {e}", run.display())))?;
    println!(
        "best operator {}; wrote convergence.csv and {} instance tables to {}",
        report.best_id,
        report.instance_csvs.len(),
        out.display()
    );
    Ok(())
}

pub fn eval_operator(
    files: &[PathBuf],
    opts: &TableOptions,
    call_timeout: f64,
    worker: Option<Vec<String>>,
) -> Result<(), CliError> {
    if !(call_timeout.is_finite() && call_timeout > 0.0) {
        return Err(CliError::usage(format!("--call-timeout must be positive, got {call_timeout}")));
    }
    let suite = load_suite(opts)?;
    let budget = Budget {
        population_size: opts.population,
        generations: opts.generations,
    };
    if budget.population_size < 2 || budget.generations < 1 {
        return Err(CliError::usage("--population must be at least 2 and --generations at least 1"));
    }
    let mut spec = WorkerSpec::new(worker.unwrap_or_else(default_worker_command));
    spec.call_timeout = Duration::from_secs_f64(call_timeout);

    let mut operators = Vec::new();
    for path in files {
        let source = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        operators.push(OperatorArtifact {
            id: label,
            source,
            origin: Origin::Init,
            parent_ids: Vec::new(),
            created_generation: 0,
        });
    }
    let columns: Vec<String> = operators.iter().map(|o| o.id.clone()).collect();
    if columns.iter().collect::<BTreeSet<_>>().len() != columns.len() {
        return Err(CliError::usage("operator files must have distinct names"));
    }

    let jobs: Vec<(&OperatorArtifact, &ProblemInstance, u64)> = operators
        .iter()
        .flat_map(|op| suite.instances.iter().flat_map(move |i| seeds(opts).map(move |s| (op, i, s))))
        .collect();
    let results = in_pool(opts.jobs, || {
        jobs.par_iter()
            .map(|(op, instance, seed)| {
                let e = evaluate_operator(op, instance, &spec, budget, *seed);
                if let Some(f) = &e.failure {
                    log::warn!("{} on {} with seed {seed}: {}", op.id, instance.id, first_line(f));
                }
                RunResult {
                    column: op.id.clone(),
                    instance_id: e.instance_id,
                    seed: *seed,
                    metric: e.metric,
                    score: e.score,
                    failure: e.failure,
                }
            })
            .collect::<Vec<_>>()
    })?;
    emit(&columns, &results, opts, "eval")
}

pub fn baseline(algorithm: &str, opts: &TableOptions) -> Result<(), CliError> {
    if algorithm != "nsga2" {
        return Err(CliError::usage(format!("unknown algorithm `{algorithm}`; only nsga2 is available")));
    }
    let suite = load_suite(opts)?;
    let config = SolverConfig {
        population_size: opts.population,
        generations: opts.generations,
        ..SolverConfig::default()
    };
    config.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let category = suite.category;
    let jobs: Vec<(&ProblemInstance, u64)> = suite
        .instances
        .iter()
        .flat_map(|i| seeds(opts).map(move |s| (i, s)))
        .collect();
    let results = in_pool(opts.jobs, || {
        jobs.par_iter()
            .map(|(instance, seed)| {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let (metric, failure) = match nsga2_run(instance, &config, &mut rng) {
                    Ok(outcome) => (outcome.trace.last().copied(), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                RunResult {
                    column: algorithm.to_string(),
                    instance_id: instance.id.clone(),
                    seed: *seed,
                    metric,
                    score: metric.map_or(0.0, |m| problem_score(category, m)),
                    failure,
                }
            })
            .collect::<Vec<_>>()
    })?;
    emit(&[algorithm.to_string()], &results, opts, "baseline")
}

fn seeds(opts: &TableOptions) -> impl Iterator<Item = u64> + '_ {
    (0..opts.seeds).map(|j| opts.seed.wrapping_add(j))
}

fn load_suite(opts: &TableOptions) -> Result<SuiteSpec, CliError> {
    if opts.seeds == 0 {
        return Err(CliError::usage("--seeds must be at least 1"));
    }
    let suite = SuiteSpec::load_dir(&opts.suite).map_err(|e| CliError::config(format!("{}: {e}", opts.suite.display())))?;
    if suite.is_empty() {
        return Err(CliError::config(format!("{} has no instances", opts.suite.display())));
    }
    Ok(suite)
}

fn in_pool<T: Send>(jobs: Option<usize>, work: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(CliError::usage("--jobs must be positive"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::aborted(format!("cannot start thread pool: {e}")))?;
    Ok(pool.install(work))
}

fn first_line(s: &str) -> &str {
    s.lines().next().unwrap_or("")
}

/// Writes one `scores_<column>.csv` matrix (instances by seeds) per column,
/// `table.csv` and `table.txt`, then prints the text table.
fn emit(columns: &[String], results: &[RunResult], opts: &TableOptions, default_out: &str) -> Result<(), CliError> {
    let out = opts.out.clone().unwrap_or_else(|| PathBuf::from(default_out));
    let write = |name: String, text: &str| {
        fs::write(out.join(&name), text).map_err(|e| CliError::aborted(format!("{}: {e}", out.join(&name).display())))
    };
    fs::create_dir_all(&out).map_err(|e| CliError::aborted(format!("{}: {e}", out.display())))?;
    let seed_list: Vec<u64> = seeds(opts).collect();
    for column in columns {
        let mut csv = String::from("instance");
        for s in &seed_list {
            write!(csv, ",seed_{s}").unwrap();
        }
        csv.push('\n');
        let mut instances: Vec<&str> = Vec::new();
        for r in results.iter().filter(|r| r.column == *column) {
            if !instances.contains(&r.instance_id.as_str()) {
                instances.push(&r.instance_id);
            }
        }
        for instance in instances {
            csv.push_str(instance);
            for s in &seed_list {
                let r = results
                    .iter()
                    .find(|r| r.column == *column && r.instance_id == instance && r.seed == *s)
                    .expect("one result per instance and seed");
                write!(csv, ",{}", r.score).unwrap();
            }
            csv.push('\n');
        }
        write(format!("scores_{column}.csv"), &csv)?;
    }
    let runs: String = results
        .iter()
        .map(|r| serde_json::to_string(r).expect("results serialize") + "\n")
        .collect();
    write("runs.jsonl".into(), &runs)?;
    let table = Table::build(columns, results);
    write("table.csv".into(), &table.to_csv())?;
    let text = table.to_text();
    write("table.txt".into(), &text)?;
    print!("{text}");
    let failures = results.iter().filter(|r| r.failure.is_some()).count();
    if failures > 0 {
        eprintln!("{failures} of {} runs failed and scored zero", results.len());
    }
    Ok(())
}
