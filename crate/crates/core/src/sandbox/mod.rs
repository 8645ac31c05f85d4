//! Isolated execution of generated operators: pilot runs, the repair
//! dialogue and full scored evaluations.
//!
//! Operators run inside a worker process speaking the line-delimited JSON
//! protocol of [`protocol`]. The orchestrator owns the population: it
//! evaluates every offspring and applies nondominated-sorting survival.

mod evaluate;
mod pilot;
pub mod protocol;
mod session;
pub mod stub;

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{operators::rand_weight_repair, survive};
use crate::metrics::MetricContext;
use crate::problems::{random_genome, Genome, ProblemInstance};

pub use evaluate::{evaluate_operator, evaluate_operator_observed, Evaluation};
pub use pilot::{pilot_run, repair_loop, RepairEvent, RepairFailure, RepairOutcome, PILOT_GENERATIONS, PILOT_POPULATION};
pub use session::{SessionError, WorkerSession};

use protocol::{decode_genome, ProblemMeta, Reply, Request};

#[derive(Debug, Error)]
pub enum SandboxError {
    #[error("cannot start worker: {0}")]
    WorkerMissing(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Init,
    Crossover,
    Mutation,
    Repair,
    /// Copy of an existing operator standing in after repeated generation failures.
    Clone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorArtifact {
    pub id: String,
    pub source: String,
    pub origin: Origin,
    pub parent_ids: Vec<String>,
    pub created_generation: usize,
}

/// Hands out run-unique artifact ids.
#[derive(Debug, Default)]
pub struct ArtifactIds(AtomicU64);

impl ArtifactIds {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_id(&self) -> String {
        format!("op-{:04}", self.0.fetch_add(1, Ordering::Relaxed) + 1)
    }

    pub fn artifact(
        &self,
        source: String,
        origin: Origin,
        parent_ids: Vec<String>,
        created_generation: usize,
    ) -> OperatorArtifact {
        OperatorArtifact {
            id: self.next_id(),
            source,
            origin,
            parent_ids,
            created_generation,
        }
    }
}

/// How to launch workers and how long to wait for them.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerSpec {
    pub command: Vec<String>,
    /// Limit on each reply during full evaluation.
    pub call_timeout: Duration,
    /// Wall-clock budget of a whole pilot run.
    pub max_time: Duration,
    pub stderr_cap: usize,
}

impl WorkerSpec {
    pub fn new(command: Vec<String>) -> Self {
        WorkerSpec {
            command,
            call_timeout: Duration::from_secs(10),
            max_time: Duration::from_secs(2000),
            stderr_cap: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotOutcome {
    pub state: bool,
    pub error: String,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budget {
    pub population_size: usize,
    pub generations: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            population_size: 100,
            generations: 200,
        }
    }
}

pub(crate) enum DriveError {
    Timeout { generation: usize },
    Failed(String),
}

pub(crate) struct Driven {
    pub objectives: Vec<Vec<f64>>,
    pub trace: Vec<f64>,
}

/// Loads `source` into the session and runs the orchestrated evolution.
///
/// `timeout` yields the wait for the next reply, or `None` once the caller's
/// deadline has passed.
#[allow(clippy::too_many_arguments)]
pub(crate) fn drive(
    session: &mut WorkerSession,
    source: &str,
    instance: &ProblemInstance,
    budget: Budget,
    seed: u64,
    metric: Option<&MetricContext>,
    mut timeout: impl FnMut() -> Option<Duration>,
    observer: &mut dyn FnMut(usize, &[Genome]),
) -> Result<Driven, DriveError> {
    let mut exchange = |session: &mut WorkerSession, request: &Request, generation: usize| {
        let wait = timeout().ok_or(DriveError::Timeout { generation })?;
        session.request(request, wait).map_err(|e| match e {
            SessionError::Timeout(_) => DriveError::Timeout { generation },
            SessionError::Closed => DriveError::Failed(with_stderr("worker exited unexpectedly".into(), session)),
            SessionError::Protocol(m) => DriveError::Failed(with_stderr(format!("protocol violation: {m}"), session)),
        })
    };

    let load = Request::Load {
        operator_source: source.to_string(),
        problem_meta: ProblemMeta::from_instance(instance),
    };
    match exchange(session, &load, 0)? {
        Reply::Ready => {}
        Reply::Error { message, traceback, .. } => return Err(DriveError::Failed(error_text(&message, &traceback, session))),
        Reply::Offspring { .. } => {
            return Err(DriveError::Failed("protocol violation: expected ready, got offspring".into()));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = budget.population_size;
    let mut population: Vec<Genome> = (0..n)
        .map(|_| {
            let mut g = random_genome(instance, &mut rng);
            rand_weight_repair(instance, &mut g, &mut rng);
            g
        })
        .collect();
    let mut objectives = objectives_of(instance, &population);
    let mut trace = Vec::with_capacity(budget.generations + 1);
    let record = |objectives: &[Vec<f64>], trace: &mut Vec<f64>| {
        if let Some(m) = metric {
            trace.push(m.measure(objectives).expect("nonempty population"));
        }
    };
    record(&objectives, &mut trace);
    observer(0, &population);

    for generation in 1..=budget.generations {
        let step = Request::Step {
            seed: u64::from(rng.gen::<u32>()),
            parents: population.iter().map(Genome::to_wire).collect(),
            parent_objectives: objectives.clone(),
        };
        let genomes = match exchange(session, &step, generation)? {
            Reply::Offspring { genomes } => genomes,
            Reply::Error { message, traceback, .. } => {
                return Err(DriveError::Failed(error_text(&message, &traceback, session)));
            }
            Reply::Ready => return Err(DriveError::Failed("protocol violation: expected offspring, got ready".into())),
        };
        if genomes.len() != n {
            return Err(DriveError::Failed(format!(
                "invalid offspring: expected {n} offspring, got {}",
                genomes.len()
            )));
        }
        let offspring = genomes
            .iter()
            .enumerate()
            .map(|(i, v)| decode_genome(instance, v).map_err(|e| DriveError::Failed(format!("invalid offspring {i}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let offspring_obj = objectives_of(instance, &offspring);
        population.extend(offspring);
        objectives.extend(offspring_obj);
        let keep = survive(&objectives, n);
        population = keep.iter().map(|&i| population[i].clone()).collect();
        objectives = keep.iter().map(|&i| objectives[i].clone()).collect();
        record(&objectives, &mut trace);
        observer(generation, &population);
    }
    Ok(Driven { objectives, trace })
}

fn objectives_of(instance: &ProblemInstance, genomes: &[Genome]) -> Vec<Vec<f64>> {
    genomes
        .iter()
        .map(|g| {
            instance
                .evaluate(g)
                .expect("decoded genomes are valid")
                .to_minimization()
        })
        .collect()
}

fn error_text(message: &str, traceback: &str, session: &mut WorkerSession) -> String {
    let mut text = message.to_string();
    if !traceback.is_empty() {
        text.push('\n');
        text.push_str(traceback);
    }
    with_stderr(text, session)
}

fn with_stderr(mut text: String, session: &mut WorkerSession) -> String {
    let stderr = session.stderr_text();
    if !stderr.trim().is_empty() {
        text.push_str("\n--- worker stderr ---\n");
        text.push_str(&stderr);
    }
    text
}
