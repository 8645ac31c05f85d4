use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{drive, Budget, DriveError, OperatorArtifact, WorkerSession, WorkerSpec};
use crate::metrics::{problem_score, FrontApproximation, MetricContext};
use crate::problems::{Genome, ProblemInstance};

/// Outcome of one operator on one instance. Failures score zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub instance_id: String,
    pub seed: u64,
    pub score: f64,
    /// Final category indicator value (IGD or normalized HV measure).
    pub metric: Option<f64>,
    /// Indicator after initialization and after every generation.
    pub trace: Vec<f64>,
    pub front: Option<FrontApproximation>,
    pub failure: Option<String>,
    pub elapsed_secs: f64,
}

/// Full-budget evaluation of a validated operator on one instance.
pub fn evaluate_operator(
    op: &OperatorArtifact,
    instance: &ProblemInstance,
    spec: &WorkerSpec,
    budget: Budget,
    seed: u64,
) -> Evaluation {
    evaluate_operator_observed(op, instance, spec, budget, seed, &mut |_, _| {})
}

/// As [`evaluate_operator`], reporting every surviving population.
pub fn evaluate_operator_observed(
    op: &OperatorArtifact,
    instance: &ProblemInstance,
    spec: &WorkerSpec,
    budget: Budget,
    seed: u64,
    observer: &mut dyn FnMut(usize, &[Genome]),
) -> Evaluation {
    let start = Instant::now();
    let metric = MetricContext::new(instance);
    let mut evaluation = Evaluation {
        instance_id: instance.id.clone(),
        seed,
        score: 0.0,
        metric: None,
        trace: Vec::new(),
        front: None,
        failure: None,
        elapsed_secs: 0.0,
    };
    let result = WorkerSession::spawn(spec)
        .map_err(|e| e.to_string())
        .and_then(|mut session| {
            let driven = drive(
                &mut session,
                &op.source,
                instance,
                budget,
                seed,
                Some(&metric),
                || Some(spec.call_timeout),
                observer,
            );
            match driven {
                Ok(d) => {
                    session.shutdown();
                    Ok(d)
                }
                Err(e) => {
                    session.kill();
                    Err(match e {
                        DriveError::Timeout { generation } => format!(
                            "no reply within {:?} at generation {generation}",
                            spec.call_timeout
                        ),
                        DriveError::Failed(text) => text,
                    })
                }
            }
        });
    match result {
        Ok(driven) => {
            let value = *driven.trace.last().expect("trace has the initial entry");
            evaluation.score = problem_score(instance.category, value);
            evaluation.metric = Some(value);
            evaluation.trace = driven.trace;
            evaluation.front = Some(FrontApproximation::from_points(instance.id.clone(), &driven.objectives));
        }
        Err(reason) => {
            log::info!("operator {} failed on {}: {}", op.id, instance.id, first_line(&reason));
            evaluation.failure = Some(reason);
        }
    }
    evaluation.elapsed_secs = start.elapsed().as_secs_f64();
    evaluation
}

fn first_line(s: &str) -> &str {
    s.lines().next().unwrap_or("")
}
