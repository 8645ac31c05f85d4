//! One worker process and its stdio channels.

use std::io::{BufRead, BufReader, Read, Write};
use std::os::unix::process::CommandExt;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use thiserror::Error;

use super::protocol::{Reply, Request};
use super::{SandboxError, WorkerSpec};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("no reply within {0:?}")]
    Timeout(Duration),
    #[error("worker exited unexpectedly")]
    Closed,
    #[error("protocol violation: {0}")]
    Protocol(String),
}

pub struct WorkerSession {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    stderr: Arc<Mutex<String>>,
    stderr_cap: usize,
    killed: bool,
}

impl WorkerSession {
    /// Starts the worker in its own process group.
    pub fn spawn(spec: &WorkerSpec) -> Result<Self, SandboxError> {
        let (program, args) = spec
            .command
            .split_first()
            .ok_or_else(|| SandboxError::WorkerMissing("empty worker command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .process_group(0)
            .spawn()
            .map_err(|e| SandboxError::WorkerMissing(format!("{program}: {e}")))?;

        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });

        let stderr = Arc::new(Mutex::new(String::new()));
        let sink = Arc::clone(&stderr);
        let cap = spec.stderr_cap;
        let mut pipe = child.stderr.take().expect("piped stderr");
        thread::spawn(move || {
            let mut buf = [0u8; 4096];
            while let Ok(n) = pipe.read(&mut buf) {
                if n == 0 {
                    break;
                }
                let mut text = sink.lock().expect("stderr lock");
                text.push_str(&String::from_utf8_lossy(&buf[..n]));
                keep_tail(&mut text, cap);
            }
        });

        Ok(WorkerSession {
            stdin: child.stdin.take(),
            child,
            lines,
            stderr,
            stderr_cap: spec.stderr_cap,
            killed: false,
        })
    }

    pub fn send(&mut self, request: &Request) -> Result<(), SessionError> {
        let stdin = self.stdin.as_mut().ok_or(SessionError::Closed)?;
        let mut line = serde_json::to_string(request).expect("requests serialize");
        line.push('\n');
        stdin
            .write_all(line.as_bytes())
            .and_then(|_| stdin.flush())
            .map_err(|_| SessionError::Closed)
    }

    pub fn receive(&mut self, timeout: Duration) -> Result<Reply, SessionError> {
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => serde_json::from_str(&line).map_err(|e| {
                let mut shown: String = line.chars().take(200).collect();
                if shown.len() < line.len() {
                    shown.push_str("...");
                }
                SessionError::Protocol(format!("unparseable reply `{shown}`: {e}"))
            }),
            Ok(Err(_)) | Err(RecvTimeoutError::Disconnected) => Err(SessionError::Closed),
            Err(RecvTimeoutError::Timeout) => Err(SessionError::Timeout(timeout)),
        }
    }

    pub fn request(&mut self, request: &Request, timeout: Duration) -> Result<Reply, SessionError> {
        self.send(request)?;
        self.receive(timeout)
    }

    /// Captured stderr (tail, capped). Waits briefly for the pipe to drain
    /// when the worker has already exited.
    pub fn stderr_text(&mut self) -> String {
        if matches!(self.child.try_wait(), Ok(Some(_))) {
            thread::sleep(Duration::from_millis(20));
        }
        let mut text = self.stderr.lock().expect("stderr lock").clone();
        keep_tail(&mut text, self.stderr_cap);
        text
    }

    pub fn pid(&self) -> u32 {
        self.child.id()
    }

    /// Asks the worker to exit, then kills its whole process group.
    pub fn shutdown(mut self) {
        let _ = self.send(&Request::Shutdown);
        self.stdin.take();
        for _ in 0..20 {
            if matches!(self.child.try_wait(), Ok(Some(_))) {
                break;
            }
            thread::sleep(Duration::from_millis(5));
        }
        self.kill();
    }

    /// Kills every process in the worker's group and reaps the worker.
    pub fn kill(&mut self) {
        if self.killed {
            return;
        }
        self.killed = true;
        self.stdin.take();
        let pgid = self.child.id() as libc::pid_t;
        // SAFETY: killpg only sends a signal; the group id is our child's pid,
        // which stays reserved until the wait below reaps it.
        unsafe {
            libc::killpg(pgid, libc::SIGKILL);
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for WorkerSession {
    fn drop(&mut self) {
        self.kill();
    }
}

fn keep_tail(text: &mut String, cap: usize) {
    let n = text.chars().count();
    if n > cap {
        let cut = text.char_indices().nth(n - cap).map(|(i, _)| i).unwrap_or(0);
        text.drain(..cut);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_keeps_last_chars() {
        let mut s = "abcdef".to_string();
        keep_tail(&mut s, 3);
        assert_eq!(s, "def");
        let mut u = "ééé".to_string();
        keep_tail(&mut u, 2);
        assert_eq!(u, "éé");
    }

    #[test]
    fn missing_binary_is_a_configuration_error() {
        let spec = WorkerSpec::new(vec!["/nonexistent/worker-binary".into()]);
        assert!(matches!(WorkerSession::spawn(&spec), Err(SandboxError::WorkerMissing(_))));
    }

    #[test]
    fn non_protocol_output_is_a_violation() {
        let spec = WorkerSpec::new(vec!["sh".into(), "-c".into(), "read line; echo hello".into()]);
        let mut s = WorkerSession::spawn(&spec).unwrap();
        let r = s.request(&Request::Shutdown, Duration::from_secs(5));
        assert!(matches!(r, Err(SessionError::Protocol(_))));
    }

    #[test]
    fn silent_worker_times_out_and_dies() {
        let spec = WorkerSpec::new(vec!["sleep".into(), "30".into()]);
        let mut s = WorkerSession::spawn(&spec).unwrap();
        let pid = s.pid();
        assert!(matches!(s.receive(Duration::from_millis(100)), Err(SessionError::Timeout(_))));
        s.kill();
        assert!(!std::path::Path::new(&format!("/proc/{pid}")).exists());
    }

    #[test]
    fn stderr_is_captured_and_capped() {
        let mut spec = WorkerSpec::new(vec!["sh".into(), "-c".into(), "printf 'x%.0s' $(seq 1 500) >&2; echo done >&2".into()]);
        spec.stderr_cap = 50;
        let mut s = WorkerSession::spawn(&spec).unwrap();
        assert!(matches!(s.receive(Duration::from_secs(5)), Err(SessionError::Closed)));
        let text = s.stderr_text();
        assert!(text.ends_with("done\n"), "{text:?}");
        assert!(text.chars().count() <= 50);
    }
}
