#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use opforge::llm::{MockBackend, PromptKind};
use opforge::sandbox::{OperatorArtifact, Origin, WorkerSpec};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn operator_source(name: &str) -> String {
    let path = fixtures_dir().join("operators").join(format!("{name}.py"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn artifact(name: &str) -> OperatorArtifact {
    OperatorArtifact {
        id: format!("fixture-{name}"),
        source: operator_source(name),
        origin: Origin::Init,
        parent_ids: Vec::new(),
        created_generation: 0,
    }
}

/// A fresh tag per call so concurrent tests never see each other's workers.
pub fn unique_tag(label: &str) -> String {
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    format!("opforge-test-{}-{label}-{}", std::process::id(), COUNTER.fetch_add(1, Ordering::Relaxed))
}

pub fn stub_spec(tag: &str) -> WorkerSpec {
    WorkerSpec::new(vec![
        env!("CARGO_BIN_EXE_opforge-stub-worker").to_string(),
        "--tag".to_string(),
        tag.to_string(),
    ])
}

pub fn stub_spec_with(tag: &str, max_time: Duration, call_timeout: Duration) -> WorkerSpec {
    let mut spec = stub_spec(tag);
    spec.max_time = max_time;
    spec.call_timeout = call_timeout;
    spec
}

/// Live processes whose command line carries `tag`, zombies excluded.
pub fn processes_with_tag(tag: &str) -> Vec<u32> {
    let mut found = Vec::new();
    let Ok(entries) = std::fs::read_dir("/proc") else { return found };
    for entry in entries.flatten() {
        let Some(pid) = entry.file_name().to_str().and_then(|s| s.parse::<u32>().ok()) else { continue };
        let Ok(cmdline) = std::fs::read(entry.path().join("cmdline")) else { continue };
        if !cmdline.split(|b| *b == 0).any(|arg| arg == tag.as_bytes()) {
            continue;
        }
        let zombie = std::fs::read_to_string(entry.path().join("stat"))
            .ok()
            .and_then(|s| s.rsplit_once(')').map(|(_, rest)| rest.trim_start().starts_with('Z')))
            .unwrap_or(false);
        if !zombie {
            found.push(pid);
        }
    }
    found
}

/// Polls briefly, since killed processes take a moment to disappear.
pub fn assert_no_orphans(tag: &str) {
    for _ in 0..50 {
        if processes_with_tag(tag).is_empty() {
            return;
        }
        std::thread::sleep(Duration::from_millis(20));
    }
    panic!("processes left behind for {tag}: {:?}", processes_with_tag(tag));
}

pub fn wrap(source: &str) -> String {
    format!("Here is the operator.\n<next_generation>\n{source}\n</next_generation>\n")
}

pub fn mock(scripts: &[(PromptKind, Vec<String>)]) -> MockBackend {
    MockBackend::new(scripts.iter().cloned().collect::<HashMap<_, _>>())
}
