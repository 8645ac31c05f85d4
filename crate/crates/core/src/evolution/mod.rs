//! The outer loop that evolves operators: initialization, softmax parent
//! selection, crossover and mutation through the language model, scoring on
//! the validation suite and elitist replacement.

mod select;

use std::collections::BTreeMap;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{
    complete, extract_operator, render_crossover, render_initialization, render_mutation, ChatBackend,
    ChatTranscript, PromptContext, SelectedOperator,
};
use crate::metrics::ScoreReport;
use crate::problems::{Category, SuiteSpec};
use crate::sandbox::{
    evaluate_operator, repair_loop, ArtifactIds, Budget, Evaluation, OperatorArtifact, Origin, RepairEvent,
    SandboxError, WorkerSpec,
};

pub use select::{derive_seed, elitist_update, mutation_gate, sample_parents, selection_probabilities, PROBABILITY_FLOOR};

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("initialization slot {slot} produced no valid operator in {attempts} attempts; last failure: {last}")]
    InitializationAborted { slot: usize, attempts: usize, last: String },
    #[error("language model unavailable: {0}")]
    Backend(String),
    #[error(transparent)]
    Sandbox(#[from] SandboxError),
    #[error("cannot persist run: {0}")]
    Persist(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub category: Category,
    pub n_ev: usize,
    pub g_ev: usize,
    /// Largest number of parents per crossover; `None` means `max(2, n_ev / 2)`.
    pub n_max: Option<usize>,
    pub temperature: f64,
    /// Aggregate wall-clock budget of one pilot run, in seconds.
    pub max_time_secs: f64,
    /// Limit on each worker reply during full evaluation, in seconds.
    pub call_timeout_secs: f64,
    pub n_trial: usize,
    pub budget: Budget,
    pub seed: u64,
    /// Attempts per initialization slot, crossover or mutation before giving up.
    pub attempt_cap: usize,
    /// Concurrent evaluations; `None` means one per suite instance.
    pub pool_size: Option<usize>,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            category: Category::Cmop,
            n_ev: 10,
            g_ev: 10,
            n_max: None,
            temperature: 0.5,
            max_time_secs: 2000.0,
            call_timeout_secs: 10.0,
            n_trial: 2,
            budget: Budget::default(),
            seed: 0,
            attempt_cap: 10,
            pool_size: None,
        }
    }
}

impl EvolutionConfig {
    pub fn n_max(&self) -> usize {
        self.n_max.unwrap_or((self.n_ev / 2).max(2))
    }

    pub fn validate(&self) -> Result<(), EvolutionError> {
        let fail = |m: String| Err(EvolutionError::Config(m));
        if self.n_ev < 2 {
            return fail(format!("n_ev must be at least 2, got {}", self.n_ev));
        }
        if self.g_ev < 1 {
            return fail("g_ev must be at least 1".into());
        }
        let n_max = self.n_max();
        if n_max < 2 || n_max > self.n_ev {
            return fail(format!("n_max must lie in [2, n_ev = {}], got {n_max}", self.n_ev));
        }
        if self.n_trial < 1 {
            return fail("n_trial must be at least 1".into());
        }
        if self.attempt_cap < 1 {
            return fail("attempt_cap must be at least 1".into());
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return fail(format!("temperature must be a nonnegative number, got {}", self.temperature));
        }
        for (name, v) in [("max_time_secs", self.max_time_secs), ("call_timeout_secs", self.call_timeout_secs)] {
            if !(v.is_finite() && v > 0.0) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        if self.budget.population_size < 2 || self.budget.generations < 1 {
            return fail(format!(
                "inner budget needs a population of at least 2 and at least 1 generation, got {} x {}",
                self.budget.population_size, self.budget.generations
            ));
        }
        if self.pool_size == Some(0) {
            return fail("pool_size must be positive".into());
        }
        Ok(())
    }

    /// Applies the configured timeouts to a worker launch specification.
    pub fn worker_spec(&self, command: Vec<String>) -> WorkerSpec {
        let mut spec = WorkerSpec::new(command);
        spec.max_time = Duration::from_secs_f64(self.max_time_secs);
        spec.call_timeout = Duration::from_secs_f64(self.call_timeout_secs);
        spec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorCandidate {
    pub artifact: OperatorArtifact,
    pub report: ScoreReport,
    pub generation_admitted: usize,
}

impl OperatorCandidate {
    pub fn score(&self) -> f64 {
        self.report.aggregate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Init,
    Crossover,
    Mutation,
}

/// Everything worth logging during a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    AttemptFailed { stage: Stage, attempt: usize, reason: String },
    Pilot { artifact_id: String, state: bool, error: String, elapsed_secs: f64 },
    Repaired { from_id: String, to_id: String },
    RepairUnusable { from_id: String, reason: String },
    /// The stage hit its attempt cap and reused an existing operator.
    Fallback { stage: Stage, reused_id: String, artifact_id: String },
    MutationSkipped { artifact_id: String },
    Evaluated { artifact_id: String, aggregate: f64, failures: Vec<String> },
    Admitted { artifact_id: String, rank: Option<usize> },
}

impl From<RepairEvent> for Event {
    fn from(e: RepairEvent) -> Self {
        match e {
            RepairEvent::Pilot { artifact_id, state, error, elapsed_secs } => Event::Pilot {
                artifact_id,
                state,
                error,
                elapsed_secs,
            },
            RepairEvent::Repaired { from_id, to_id } => Event::Repaired { from_id, to_id },
            RepairEvent::RepairUnusable { from_id, reason } => Event::RepairUnusable { from_id, reason },
        }
    }
}

/// Receives the artifacts, scores and events of a run as they happen.
pub trait RunObserver {
    fn artifact(&mut self, generation: usize, artifact: &OperatorArtifact) -> std::io::Result<()>;
    fn scored(&mut self, candidate: &OperatorCandidate, evaluations: &[Evaluation]) -> std::io::Result<()>;
    fn event(&mut self, generation: usize, event: &Event) -> std::io::Result<()>;
    /// Called after initialization (generation 0) and after every generation.
    fn generation_done(&mut self, generation: usize, population: &[OperatorCandidate]) -> std::io::Result<()>;
}

/// Observer that discards everything.
pub struct NoopObserver;

impl RunObserver for NoopObserver {
    fn artifact(&mut self, _: usize, _: &OperatorArtifact) -> std::io::Result<()> {
        Ok(())
    }
    fn scored(&mut self, _: &OperatorCandidate, _: &[Evaluation]) -> std::io::Result<()> {
        Ok(())
    }
    fn event(&mut self, _: usize, _: &Event) -> std::io::Result<()> {
        Ok(())
    }
    fn generation_done(&mut self, _: usize, _: &[OperatorCandidate]) -> std::io::Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionOutcome {
    pub best: OperatorCandidate,
    /// Best score after initialization and after each generation.
    pub trace: Vec<f64>,
    pub population: Vec<OperatorCandidate>,
}

/// Scores an operator on every suite instance concurrently.
pub fn parallel_evaluate(
    op: &OperatorArtifact,
    suite: &SuiteSpec,
    spec: &WorkerSpec,
    budget: Budget,
    run_seed: u64,
    pool: &rayon::ThreadPool,
) -> (ScoreReport, Vec<Evaluation>) {
    let evaluations: Vec<Evaluation> = pool.install(|| {
        suite
            .instances
            .par_iter()
            .map(|instance| evaluate_operator(op, instance, spec, budget, derive_seed(run_seed, &op.id, &instance.id)))
            .collect()
    });
    let per_problem: BTreeMap<String, f64> = evaluations.iter().map(|e| (e.instance_id.clone(), e.score)).collect();
    let report = ScoreReport::new(per_problem).expect("suite is nonempty");
    (report, evaluations)
}

/// Shared state of one run.
pub struct Evolution<'a> {
    config: &'a EvolutionConfig,
    suite: &'a SuiteSpec,
    toys: &'a SuiteSpec,
    spec: &'a WorkerSpec,
    backend: &'a dyn ChatBackend,
    observer: &'a mut dyn RunObserver,
    ctx: PromptContext,
    ids: ArtifactIds,
    pool: rayon::ThreadPool,
}

enum Produced {
    Valid(OperatorArtifact),
    Failed { reason: String, backend: bool },
}

impl<'a> Evolution<'a> {
    pub fn new(
        config: &'a EvolutionConfig,
        suite: &'a SuiteSpec,
        toys: &'a SuiteSpec,
        spec: &'a WorkerSpec,
        backend: &'a dyn ChatBackend,
        observer: &'a mut dyn RunObserver,
    ) -> Result<Self, EvolutionError> {
        config.validate()?;
        if suite.is_empty() || toys.is_empty() {
            return Err(EvolutionError::Config("validation and toy suites must be nonempty".into()));
        }
        if suite.category != config.category || toys.category != config.category {
            return Err(EvolutionError::Config(format!(
                "suite category {} and toy category {} must match the run category {}",
                suite.category, toys.category, config.category
            )));
        }
        if (backend.temperature() - config.temperature).abs() > 1e-12 {
            log::warn!(
                "backend temperature {} differs from the configured {}",
                backend.temperature(),
                config.temperature
            );
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.pool_size.unwrap_or(suite.len()))
            .build()
            .map_err(|e| EvolutionError::Config(format!("cannot build evaluation pool: {e}")))?;
        Ok(Evolution {
            config,
            suite,
            toys,
            spec,
            backend,
            observer,
            ctx: PromptContext::for_category(config.category),
            ids: ArtifactIds::new(),
            pool,
        })
    }

    /// Runs initialization and `g_ev` generations of `n_ev` iterations each.
    pub fn run(&mut self) -> Result<EvolutionOutcome, EvolutionError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let mut population = self.initialize_population()?;
        let mut trace = vec![population[0].score()];
        self.observer.generation_done(0, &population)?;
        log::info!("generation 0: best {}", population[0].score());
        let n_ev = self.config.n_ev;
        for generation in 1..=self.config.g_ev {
            for _ in 0..n_ev {
                let scores: Vec<f64> = population.iter().map(OperatorCandidate::score).collect();
                let probs = selection_probabilities(&scores);
                let n_s = rng.gen_range(2..=self.config.n_max().min(population.len()));
                let parents: Vec<OperatorCandidate> = sample_parents(&probs, n_s, &mut rng)?
                    .into_iter()
                    .map(|i| population[i].clone())
                    .collect();
                let offspring = self.crossover_step(&parents, generation)?;
                let offspring = self.mutation_step(offspring, generation, &mut rng)?;
                let candidate = self.score(offspring, generation)?;
                let id = candidate.artifact.id.clone();
                let rank = elitist_update(&mut population, candidate, n_ev);
                self.observer.event(generation, &Event::Admitted { artifact_id: id, rank })?;
            }
            trace.push(population[0].score());
            self.observer.generation_done(generation, &population)?;
            log::info!("generation {generation}: best {}", population[0].score());
        }
        Ok(EvolutionOutcome {
            best: population[0].clone(),
            trace,
            population,
        })
    }

    /// Fills `n_ev` slots with validated, scored operators, sorted by score.
    pub fn initialize_population(&mut self) -> Result<Vec<OperatorCandidate>, EvolutionError> {
        let mut population = Vec::with_capacity(self.config.n_ev);
        for slot in 1..=self.config.n_ev {
            let mut last = String::new();
            let mut only_backend = true;
            let mut valid = None;
            for attempt in 1..=self.config.attempt_cap {
                let prompt = render_initialization(&self.ctx).map_err(|e| EvolutionError::Config(e.to_string()))?;
                match self.generate(prompt, Origin::Init, Vec::new(), 0)? {
                    Produced::Valid(op) => {
                        valid = Some(op);
                        break;
                    }
                    Produced::Failed { reason, backend } => {
                        only_backend &= backend;
                        self.observer.event(0, &Event::AttemptFailed { stage: Stage::Init, attempt, reason: reason.clone() })?;
                        last = reason;
                    }
                }
            }
            let Some(op) = valid else {
                return Err(if only_backend {
                    EvolutionError::Backend(last)
                } else {
                    EvolutionError::InitializationAborted {
                        slot,
                        attempts: self.config.attempt_cap,
                        last,
                    }
                });
            };
            let candidate = self.score(op, 0)?;
            population.push(candidate);
        }
        population.sort_by(|a, b| b.score().total_cmp(&a.score()));
        Ok(population)
    }

    /// Recombines the parents through the model, falling back to a copy of
    /// the best parent once the attempt cap is spent.
    pub fn crossover_step(&mut self, parents: &[OperatorCandidate], generation: usize) -> Result<OperatorArtifact, EvolutionError> {
        let ctx = PromptContext {
            selected_operators: parents
                .iter()
                .map(|p| SelectedOperator {
                    source: p.artifact.source.clone(),
                    score: p.score(),
                })
                .collect(),
            n_selected: parents.len(),
            ..self.ctx.clone()
        };
        let parent_ids: Vec<String> = parents.iter().map(|p| p.artifact.id.clone()).collect();
        for attempt in 1..=self.config.attempt_cap {
            let prompt = render_crossover(&ctx).map_err(|e| EvolutionError::Config(e.to_string()))?;
            match self.generate(prompt, Origin::Crossover, parent_ids.clone(), generation)? {
                Produced::Valid(op) => return Ok(op),
                Produced::Failed { reason, .. } => self.observer.event(
                    generation,
                    &Event::AttemptFailed {
                        stage: Stage::Crossover,
                        attempt,
                        reason,
                    },
                )?,
            }
        }
        let best = parents
            .iter()
            .fold(&parents[0], |best, p| if p.score() > best.score() { p } else { best });
        let clone = self
            .ids
            .artifact(best.artifact.source.clone(), Origin::Clone, vec![best.artifact.id.clone()], generation);
        log::warn!("crossover attempts exhausted; cloning {}", best.artifact.id);
        self.observer.artifact(generation, &clone)?;
        self.observer.event(
            generation,
            &Event::Fallback {
                stage: Stage::Crossover,
                reused_id: best.artifact.id.clone(),
                artifact_id: clone.id.clone(),
            },
        )?;
        Ok(clone)
    }

    /// With probability `1 / n_ev` asks the model to refine `input`; otherwise
    /// returns it unchanged without contacting the model.
    pub fn mutation_step<R: Rng + ?Sized>(
        &mut self,
        input: OperatorArtifact,
        generation: usize,
        rng: &mut R,
    ) -> Result<OperatorArtifact, EvolutionError> {
        if !mutation_gate(self.config.n_ev, rng) {
            self.observer.event(generation, &Event::MutationSkipped { artifact_id: input.id.clone() })?;
            return Ok(input);
        }
        let ctx = PromptContext {
            operator_source: input.source.clone(),
            ..self.ctx.clone()
        };
        for attempt in 1..=self.config.attempt_cap {
            let prompt = render_mutation(&ctx).map_err(|e| EvolutionError::Config(e.to_string()))?;
            match self.generate(prompt, Origin::Mutation, vec![input.id.clone()], generation)? {
                Produced::Valid(op) => return Ok(op),
                Produced::Failed { reason, .. } => self.observer.event(
                    generation,
                    &Event::AttemptFailed {
                        stage: Stage::Mutation,
                        attempt,
                        reason,
                    },
                )?,
            }
        }
        log::warn!("mutation attempts exhausted; keeping {}", input.id);
        self.observer.event(
            generation,
            &Event::Fallback {
                stage: Stage::Mutation,
                reused_id: input.id.clone(),
                artifact_id: input.id.clone(),
            },
        )?;
        Ok(input)
    }

    /// One attempt: query the model, extract the code, then pilot and repair.
    fn generate(
        &mut self,
        mut prompt: ChatTranscript,
        origin: Origin,
        parent_ids: Vec<String>,
        generation: usize,
    ) -> Result<Produced, EvolutionError> {
        let reply = match complete(&mut prompt, self.backend) {
            Ok(r) => r,
            Err(e) => {
                return Ok(Produced::Failed {
                    reason: format!("request failed: {e}"),
                    backend: true,
                })
            }
        };
        let source = match extract_operator(&reply) {
            Ok(s) => s,
            Err(e) => {
                return Ok(Produced::Failed {
                    reason: format!("reply unusable: {e}"),
                    backend: false,
                })
            }
        };
        let op = self.ids.artifact(source, origin, parent_ids, generation);
        self.observer.artifact(generation, &op)?;
        let outcome = repair_loop(
            op,
            self.toys,
            self.spec,
            self.backend,
            &self.ctx,
            self.config.n_trial,
            &self.ids,
            Some(prompt),
        )?;
        for created in &outcome.created {
            self.observer.artifact(generation, created)?;
        }
        for event in outcome.events {
            self.observer.event(generation, &event.into())?;
        }
        Ok(match outcome.result {
            Ok(op) => Produced::Valid(op),
            Err(failure) => Produced::Failed {
                reason: format!("pilot and repair failed: {failure:?}"),
                backend: false,
            },
        })
    }

    fn score(&mut self, op: OperatorArtifact, generation: usize) -> Result<OperatorCandidate, EvolutionError> {
        let (report, evaluations) = parallel_evaluate(&op, self.suite, self.spec, self.config.budget, self.config.seed, &self.pool);
        let candidate = OperatorCandidate {
            artifact: op,
            report,
            generation_admitted: generation,
        };
        self.observer.scored(&candidate, &evaluations)?;
        self.observer.event(
            generation,
            &Event::Evaluated {
                artifact_id: candidate.artifact.id.clone(),
                aggregate: candidate.score(),
                failures: evaluations
                    .iter()
                    .filter_map(|e| e.failure.as_ref().map(|f| format!("{}: {}", e.instance_id, f.lines().next().unwrap_or(""))))
                    .collect(),
            },
        )?;
        Ok(candidate)
    }
}

/// Runs a full evolution and returns the best operator with its trace.
pub fn evolve(
    config: &EvolutionConfig,
    suite: &SuiteSpec,
    toys: &SuiteSpec,
    spec: &WorkerSpec,
    backend: &dyn ChatBackend,
    observer: &mut dyn RunObserver,
) -> Result<EvolutionOutcome, EvolutionError> {
    Evolution::new(config, suite, toys, spec, backend, observer)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_derived_n_max() {
        let c = EvolutionConfig::default();
        assert_eq!((c.n_ev, c.g_ev, c.n_trial, c.attempt_cap), (10, 10, 2, 10));
        assert_eq!(c.n_max(), 5);
        assert_eq!(c.temperature, 0.5);
        assert_eq!(c.max_time_secs, 2000.0);
        assert_eq!(c.budget, Budget { population_size: 100, generations: 200 });
        assert!(c.validate().is_ok());
        let small = EvolutionConfig { n_ev: 3, ..c.clone() };
        assert_eq!(small.n_max(), 2);
    }

    #[test]
    fn invalid_configs() {
        let c = EvolutionConfig::default();
        for bad in [
            EvolutionConfig { g_ev: 0, ..c.clone() },
            EvolutionConfig { n_ev: 1, ..c.clone() },
            EvolutionConfig { n_max: Some(11), ..c.clone() },
            EvolutionConfig { n_max: Some(1), ..c.clone() },
            EvolutionConfig { n_trial: 0, ..c.clone() },
            EvolutionConfig { max_time_secs: 0.0, ..c.clone() },
            EvolutionConfig { pool_size: Some(0), ..c.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(EvolutionError::Config(_))), "{bad:?}");
        }
    }

    #[test]
    fn config_json_rejects_unknown_keys() {
        let c: EvolutionConfig = serde_json::from_str(r#"{"category": "mokp", "n_ev": 4}"#).unwrap();
        assert_eq!(c.category, Category::Mokp);
        assert_eq!(c.g_ev, 10);
        assert!(serde_json::from_str::<EvolutionConfig>(r#"{"n_evv": 4}"#).is_err());
    }
}
