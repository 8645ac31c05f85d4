use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use opforge::llm::{complete, BackendError, ChatRole, ChatTranscript, HttpBackendConfig, OpenAiCompatibleBackend, PromptKind};

/// Serves one scripted `(status, body)` per connection and records requests.
fn serve(script: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<(String, String)>>>, JoinHandle<()>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    let handle = std::thread::spawn(move || {
        for (status, body) in script {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream);
            let mut headers = String::new();
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                headers.push_str(&line);
            }
            let mut request = vec![0; length];
            reader.read_exact(&mut request).unwrap();
            log.lock().unwrap().push((headers, String::from_utf8(request).unwrap()));
            let mut stream = reader.into_inner();
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
            stream.flush().unwrap();
        }
    });
    (url, seen, handle)
}

fn backend(url: &str) -> OpenAiCompatibleBackend {
    let config = HttpBackendConfig {
        endpoint: url.to_string(),
        model: "test-model".into(),
        timeout_secs: 5,
        ..HttpBackendConfig::default()
    };
    OpenAiCompatibleBackend::with_key(config, "secret".into()).with_retry_delay(Duration::from_millis(10))
}

fn transcript() -> ChatTranscript {
    let mut t = ChatTranscript::new(PromptKind::Initialization);
    t.push(ChatRole::System, "system text").unwrap();
    t.push(ChatRole::User, "user text").unwrap();
    t
}

fn ok_body(content: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
}

#[test]
fn sends_messages_and_reads_the_reply() {
    let (url, seen, handle) = serve(vec![(200, ok_body("<next_generation>x</next_generation>"))]);
    let mut t = transcript();
    let reply = complete(&mut t, &backend(&url)).unwrap();
    handle.join().unwrap();
    assert_eq!(reply, "<next_generation>x</next_generation>");
    assert_eq!(t.messages().len(), 3);
    assert_eq!(t.temperature, Some(0.5));
    let (headers, body) = seen.lock().unwrap()[0].clone();
    assert!(headers.to_ascii_lowercase().contains("authorization: bearer secret"));
    let body: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["temperature"], 0.5);
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"][1]["content"], "user text");
}

#[test]
fn retries_server_errors_then_succeeds() {
    let (url, seen, handle) = serve(vec![
        (503, "{}".into()),
        (429, "{}".into()),
        (200, ok_body("third time")),
    ]);
    let reply = complete(&mut transcript(), &backend(&url)).unwrap();
    handle.join().unwrap();
    assert_eq!(reply, "third time");
    assert_eq!(seen.lock().unwrap().len(), 3);
}

#[test]
fn gives_up_after_the_retry_budget() {
    let (url, seen, handle) = serve(vec![(500, "{}".into()), (502, "{}".into()), (500, "{}".into())]);
    let err = complete(&mut transcript(), &backend(&url)).unwrap_err();
    handle.join().unwrap();
    assert!(matches!(err, BackendError::Transport { attempts: 3, .. }), "{err}");
    assert_eq!(seen.lock().unwrap().len(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let (url, seen, handle) = serve(vec![(401, r#"{"error":"bad key"}"#.into())]);
    let err = complete(&mut transcript(), &backend(&url)).unwrap_err();
    handle.join().unwrap();
    assert!(matches!(err, BackendError::Http { status: 401, ref body } if body.contains("bad key")), "{err}");
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn malformed_json_is_reported() {
    let (url, _, handle) = serve(vec![(200, r#"{"choices": []}"#.into())]);
    let err = complete(&mut transcript(), &backend(&url)).unwrap_err();
    handle.join().unwrap();
    assert!(matches!(err, BackendError::MalformedResponse(_)));
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = complete(&mut transcript(), &backend(&format!("http://127.0.0.1:{port}/v1"))).unwrap_err();
    assert!(matches!(err, BackendError::Transport { attempts: 3, .. }), "{err}");
}

#[test]
fn missing_key_is_reported_by_name() {
    let config = HttpBackendConfig {
        api_key_env: "OPFORGE_TEST_KEY_THAT_IS_NEVER_SET".into(),
        ..HttpBackendConfig::default()
    };
    let err = OpenAiCompatibleBackend::from_env(config).err().unwrap();
    assert!(err.to_string().contains("OPFORGE_TEST_KEY_THAT_IS_NEVER_SET"));
}
