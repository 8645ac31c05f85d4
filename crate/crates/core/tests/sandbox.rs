mod common;

use std::time::{Duration, Instant};

use common::*;
use opforge::llm::{PromptContext, PromptKind};
use opforge::problems::{toy_suite, Category, SuiteSpec};
use opforge::sandbox::{
    evaluate_operator, pilot_run, repair_loop, ArtifactIds, Budget, RepairEvent, RepairFailure, SandboxError,
    WorkerSpec,
};

fn kp_toys() -> SuiteSpec {
    toy_suite(Category::Mokp)
}

#[test]
fn valid_operator_passes_every_category() {
    for category in Category::ALL {
        let tag = unique_tag("valid");
        let outcome = pilot_run(&artifact("variation"), &toy_suite(category), &stub_spec(&tag)).unwrap();
        assert!(outcome.state, "{category}: {}", outcome.error);
        assert!(outcome.error.is_empty());
        assert_no_orphans(&tag);
    }
}

#[test]
fn step_exception_reports_traceback_with_line() {
    let tag = unique_tag("zerodiv");
    let outcome = pilot_run(&artifact("zero_division"), &kp_toys(), &stub_spec(&tag)).unwrap();
    assert!(!outcome.state);
    assert!(outcome.error.contains("ZeroDivision"), "{}", outcome.error);
    assert!(outcome.error.contains("line 3"), "{}", outcome.error);
    assert_no_orphans(&tag);
}

#[test]
fn load_failures_are_reported() {
    let tag = unique_tag("load");
    let spec = stub_spec(&tag);
    let syntax = pilot_run(&artifact("syntax_error"), &kp_toys(), &spec).unwrap();
    assert!(!syntax.state);
    assert!(syntax.error.contains("SyntaxError"));
    let missing = pilot_run(&artifact("missing_function"), &kp_toys(), &spec).unwrap();
    assert_eq!(missing.error, "next_generation not found");
    assert_no_orphans(&tag);
}

#[test]
fn malformed_offspring_fail_with_text() {
    let cases = [
        ("wrong_count", "ValidationError"),
        ("short", "expected 20 offspring, got 19"),
        ("garbage", "expected an array"),
        ("bad_json", "protocol violation"),
        ("overweight", "exceeds the capacity"),
    ];
    for (fixture, needle) in cases {
        let tag = unique_tag(fixture);
        let outcome = pilot_run(&artifact(fixture), &kp_toys(), &stub_spec(&tag)).unwrap();
        assert!(!outcome.state, "{fixture}");
        assert!(outcome.error.contains(needle), "{fixture}: {}", outcome.error);
        assert_no_orphans(&tag);
    }
}

#[test]
fn crash_attaches_stderr() {
    let tag = unique_tag("crash");
    let outcome = pilot_run(&artifact("crash_late"), &kp_toys(), &stub_spec(&tag)).unwrap();
    assert!(!outcome.state);
    assert!(outcome.error.contains("worker exited unexpectedly"), "{}", outcome.error);
    assert!(outcome.error.contains("Segmentation fault"), "{}", outcome.error);
}

#[test]
fn infinite_loop_times_out_silently() {
    let tag = unique_tag("hang");
    let spec = stub_spec_with(&tag, Duration::from_secs(2), Duration::from_secs(10));
    let outcome = pilot_run(&artifact("infinite_loop"), &kp_toys(), &spec).unwrap();
    assert!(!outcome.state);
    assert!(outcome.error.is_empty());
    assert!((2.0..=3.0).contains(&outcome.elapsed_secs), "{}", outcome.elapsed_secs);
    assert_no_orphans(&tag);
}

#[test]
fn timeout_kills_spawned_children() {
    let tag = unique_tag("child");
    let spec = stub_spec_with(&tag, Duration::from_secs(1), Duration::from_secs(10));
    let outcome = pilot_run(&artifact("infinite_loop_child"), &kp_toys(), &spec).unwrap();
    assert!(!outcome.state && outcome.error.is_empty());
    assert_no_orphans(&tag);
}

#[test]
fn missing_worker_is_a_configuration_error() {
    let spec = WorkerSpec::new(vec!["/nonexistent/opforge-worker".into()]);
    let err = pilot_run(&artifact("identity"), &kp_toys(), &spec).unwrap_err();
    assert!(matches!(err, SandboxError::WorkerMissing(_)));
}

#[test]
fn first_repair_fixes_the_operator() {
    let tag = unique_tag("repair-a");
    let backend = mock(&[(PromptKind::Repair, vec![wrap(&operator_source("variation"))])]);
    let ids = ArtifactIds::new();
    let broken = artifact("zero_division");
    let out = repair_loop(
        broken.clone(),
        &kp_toys(),
        &stub_spec(&tag),
        &backend,
        &PromptContext::for_category(Category::Mokp),
        2,
        &ids,
        None,
    )
    .unwrap();
    let fixed = out.result.expect("repaired operator");
    assert_eq!(out.repair_calls, 1);
    assert_eq!(backend.calls(PromptKind::Repair), 1);
    assert_eq!(out.pilot_runs, 2);
    assert_eq!(fixed.parent_ids, vec![broken.id.clone()]);
    assert_eq!(fixed.origin, opforge::sandbox::Origin::Repair);
    let transcript = out.transcript.unwrap();
    assert!(transcript.last_user().unwrap().contains("ZeroDivisionError"));
    assert_no_orphans(&tag);
}

#[test]
fn timeout_fails_without_repair_calls() {
    let tag = unique_tag("repair-b");
    let backend = mock(&[(PromptKind::Repair, vec![wrap(&operator_source("variation"))])]);
    let spec = stub_spec_with(&tag, Duration::from_secs(2), Duration::from_secs(10));
    let start = Instant::now();
    let out = repair_loop(
        artifact("infinite_loop"),
        &kp_toys(),
        &spec,
        &backend,
        &PromptContext::for_category(Category::Mokp),
        2,
        &ArtifactIds::new(),
        None,
    )
    .unwrap();
    assert!(start.elapsed() <= Duration::from_secs(3));
    assert_eq!(out.result.unwrap_err(), RepairFailure::Silent);
    assert_eq!(out.repair_calls, 0);
    assert_eq!(backend.total_calls(), 0);
    assert_no_orphans(&tag);
}

#[test]
fn permanently_broken_exhausts_trials() {
    let tag = unique_tag("repair-c");
    let broken = wrap(&operator_source("zero_division"));
    let backend = mock(&[(PromptKind::Repair, vec![broken.clone(), broken.clone(), broken])]);
    let out = repair_loop(
        artifact("zero_division"),
        &kp_toys(),
        &stub_spec(&tag),
        &backend,
        &PromptContext::for_category(Category::Mokp),
        2,
        &ArtifactIds::new(),
        None,
    )
    .unwrap();
    assert_eq!(out.result.unwrap_err(), RepairFailure::TrialsExhausted);
    assert_eq!(out.pilot_runs, 2);
    assert_eq!(out.repair_calls, 2);
    assert_eq!(out.created.len(), 2);
    assert_no_orphans(&tag);
}

#[test]
fn unusable_repair_reply_consumes_a_trial() {
    let tag = unique_tag("repair-d");
    let backend = mock(&[(
        PromptKind::Repair,
        vec!["Sorry, I cannot help with that.".into(), wrap(&operator_source("variation"))],
    )]);
    let out = repair_loop(
        artifact("zero_division"),
        &kp_toys(),
        &stub_spec(&tag),
        &backend,
        &PromptContext::for_category(Category::Mokp),
        3,
        &ArtifactIds::new(),
        None,
    )
    .unwrap();
    assert!(out.result.is_ok());
    assert_eq!(out.repair_calls, 2);
    assert_eq!(out.pilot_runs, 2);
    assert!(out
        .events
        .iter()
        .any(|e| matches!(e, RepairEvent::RepairUnusable { reason, .. } if reason.contains("repair reply unusable"))));
    let transcript = out.transcript.unwrap();
    assert!(transcript.last_user().unwrap().contains("repair reply unusable"));
}

#[test]
fn crash_mid_evaluation_scores_zero() {
    let tag = unique_tag("eval-crash");
    let instance = &kp_toys().instances[0];
    let budget = Budget { population_size: 20, generations: 10 };
    let e = evaluate_operator(&artifact("crash_late"), instance, &stub_spec(&tag), budget, 3);
    assert_eq!(e.score, 0.0);
    assert!(e.failure.as_deref().unwrap().contains("worker exited unexpectedly"));
    assert!(e.front.is_none());
    assert_no_orphans(&tag);
}

#[test]
fn per_call_timeout_scores_zero() {
    let tag = unique_tag("eval-hang");
    let instance = &kp_toys().instances[0];
    let spec = stub_spec_with(&tag, Duration::from_secs(100), Duration::from_millis(500));
    let budget = Budget { population_size: 20, generations: 5 };
    let e = evaluate_operator(&artifact("infinite_loop_child"), instance, &spec, budget, 3);
    assert_eq!(e.score, 0.0);
    assert!(e.failure.as_deref().unwrap().contains("at generation 1"), "{:?}", e.failure);
    assert_no_orphans(&tag);
}

#[test]
fn evaluation_is_deterministic_and_bounded() {
    let tag = unique_tag("eval-det");
    let spec = stub_spec(&tag);
    let budget = Budget { population_size: 20, generations: 10 };
    for category in Category::ALL {
        let instance = &toy_suite(category).instances[0];
        let a = evaluate_operator(&artifact("variation"), instance, &spec, budget, 11);
        let b = evaluate_operator(&artifact("variation"), instance, &spec, budget, 11);
        assert!(a.failure.is_none(), "{:?}", a.failure);
        assert_eq!(a.score, b.score);
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.front, b.front);
        assert_eq!(a.trace.len(), 11);
        assert!(a.score.is_finite() && a.score <= 1.0, "{category}: {}", a.score);
        if category != Category::Cmop {
            assert!(a.score > 0.0, "{category}: {}", a.score);
        }
    }
    assert_no_orphans(&tag);
}

#[test]
fn random_search_scores_inside_the_unit_interval() {
    let tag = unique_tag("eval-random");
    let instance = &kp_toys().instances[0];
    let budget = Budget { population_size: 20, generations: 5 };
    let e = evaluate_operator(&artifact("random_search"), instance, &stub_spec(&tag), budget, 5);
    assert!(e.score > 0.0 && e.score <= 1.0, "{}", e.score);
}
