use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{drive, ArtifactIds, Budget, DriveError, OperatorArtifact, Origin, PilotOutcome, SandboxError, WorkerSession, WorkerSpec};
use crate::llm::{complete, extract_operator, render_repair, ChatBackend, ChatTranscript, PromptContext};
use crate::problems::SuiteSpec;

pub const PILOT_POPULATION: usize = 20;
pub const PILOT_GENERATIONS: usize = 5;
const PILOT_SEED: u64 = 20;

/// Runs the operator on every toy problem within the aggregate `max_time`.
///
/// Any load error, step error, protocol violation or malformed offspring
/// yields `state = false` with the error text. Exceeding the budget kills
/// the worker and yields `state = false` with an empty error.
pub fn pilot_run(op: &OperatorArtifact, toy_problems: &SuiteSpec, spec: &WorkerSpec) -> Result<PilotOutcome, SandboxError> {
    assert!(!toy_problems.is_empty(), "pilot run needs at least one toy problem");
    let start = Instant::now();
    let deadline = start + spec.max_time;
    let budget = Budget {
        population_size: PILOT_POPULATION,
        generations: PILOT_GENERATIONS,
    };
    let outcome = |state: bool, error: String| PilotOutcome {
        state,
        error,
        elapsed_secs: start.elapsed().as_secs_f64(),
    };
    for instance in &toy_problems.instances {
        let mut session = WorkerSession::spawn(spec)?;
        let result = drive(
            &mut session,
            &op.source,
            instance,
            budget,
            PILOT_SEED,
            None,
            || deadline.checked_duration_since(Instant::now()).filter(|d| !d.is_zero()),
            &mut |_, _| {},
        );
        match result {
            Ok(_) => session.shutdown(),
            Err(DriveError::Timeout { .. }) => {
                session.kill();
                return Ok(outcome(false, String::new()));
            }
            Err(DriveError::Failed(error)) => {
                session.kill();
                log::debug!("pilot of {} failed on {}: {error}", op.id, instance.id);
                return Ok(outcome(false, error));
            }
        }
    }
    Ok(outcome(true, String::new()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairFailure {
    /// The pilot failed without an error text, typically a timeout.
    Silent,
    /// Every trial was used without producing a passing operator.
    TrialsExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum RepairEvent {
    Pilot { artifact_id: String, state: bool, error: String, elapsed_secs: f64 },
    Repaired { from_id: String, to_id: String },
    RepairUnusable { from_id: String, reason: String },
}

#[derive(Debug, Clone)]
pub struct RepairOutcome {
    pub result: Result<OperatorArtifact, RepairFailure>,
    pub pilot_runs: usize,
    pub repair_calls: usize,
    pub events: Vec<RepairEvent>,
    /// Every artifact produced by the dialogue, in creation order.
    pub created: Vec<OperatorArtifact>,
    pub transcript: Option<ChatTranscript>,
}

/// Pilot run with error-driven repair, up to `n_trial` trials.
///
/// Each trial runs the pilot; a failure with an error text asks the backend
/// for a fix. When a repair reply cannot be used (backend failure or no
/// extractable code), the trial is still consumed and the next trial repairs
/// again using that diagnostic instead of piloting unchanged code. Repair
/// requests are appended to `origin` when the operator came from a dialogue.
#[allow(clippy::too_many_arguments)]
pub fn repair_loop(
    op: OperatorArtifact,
    toy_problems: &SuiteSpec,
    spec: &WorkerSpec,
    backend: &dyn ChatBackend,
    ctx: &PromptContext,
    n_trial: usize,
    ids: &ArtifactIds,
    origin: Option<ChatTranscript>,
) -> Result<RepairOutcome, SandboxError> {
    assert!(n_trial >= 1, "n_trial must be at least 1");
    let mut current = op;
    let mut transcript = origin;
    let mut out = RepairOutcome {
        result: Err(RepairFailure::TrialsExhausted),
        pilot_runs: 0,
        repair_calls: 0,
        events: Vec::new(),
        created: Vec::new(),
        transcript: None,
    };
    let mut pending: Option<String> = None;
    for _ in 0..n_trial {
        let error = match pending.take() {
            Some(diagnostic) => diagnostic,
            None => {
                let pilot = pilot_run(&current, toy_problems, spec)?;
                out.pilot_runs += 1;
                out.events.push(RepairEvent::Pilot {
                    artifact_id: current.id.clone(),
                    state: pilot.state,
                    error: pilot.error.clone(),
                    elapsed_secs: pilot.elapsed_secs,
                });
                if pilot.state {
                    out.result = Ok(current);
                    out.transcript = transcript;
                    return Ok(out);
                }
                if pilot.error.is_empty() {
                    out.result = Err(RepairFailure::Silent);
                    out.transcript = transcript;
                    return Ok(out);
                }
                pilot.error
            }
        };

        let request = PromptContext {
            error_text: error,
            ..ctx.clone()
        };
        let reply = render_repair(&request)
            .map_err(|e| e.to_string())
            .and_then(|prompt| {
                match transcript.as_mut() {
                    Some(t) => t.continue_with(&prompt).map_err(|e| e.to_string())?,
                    None => transcript = Some(prompt),
                }
                let dialogue = transcript.as_mut().expect("dialogue present");
                out.repair_calls += 1;
                complete(dialogue, backend).map_err(|e| format!("repair request failed: {e}"))
            })
            .and_then(|text| extract_operator(&text).map_err(|e| format!("repair reply unusable: {e}")));
        match reply {
            Ok(source) => {
                let repaired = ids.artifact(source, Origin::Repair, vec![current.id.clone()], current.created_generation);
                out.events.push(RepairEvent::Repaired {
                    from_id: current.id.clone(),
                    to_id: repaired.id.clone(),
                });
                out.created.push(repaired.clone());
                current = repaired;
            }
            Err(reason) => {
                out.events.push(RepairEvent::RepairUnusable {
                    from_id: current.id.clone(),
                    reason: reason.clone(),
                });
                pending = Some(reason);
            }
        }
    }
    out.transcript = transcript;
    Ok(out)
}

