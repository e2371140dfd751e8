//! The HTTP client against a local stub server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

use serde_json::{json, Value};
use specloop_core::backend::{
    BackendError, CompletionBackend, CompletionRequest, HttpBackend, HttpSpec, Preset, RequestMapping,
};

#[derive(Debug, Clone)]
struct Recorded {
    headers: Vec<(String, String)>,
    body: Value,
}

struct Stub {
    url: String,
    seen: Arc<Mutex<Vec<Recorded>>>,
}

/// Serves `responses` in order, one per connection, as (status, extra headers, body).
fn stub(responses: Vec<(u16, Vec<(&'static str, &'static str)>, String)>) -> Stub {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/completions", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    let queue = Arc::new(Mutex::new(responses.into_iter()));
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut headers = Vec::new();
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            loop {
                line.clear();
                reader.read_line(&mut line).unwrap();
                let l = line.trim_end();
                if l.is_empty() {
                    break;
                }
                let (k, v) = l.split_once(':').unwrap();
                headers.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
            }
            let len: usize =
                headers.iter().find(|(k, _)| k == "content-length").map(|(_, v)| v.parse().unwrap()).unwrap_or(0);
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            log.lock().unwrap().push(Recorded { headers, body: serde_json::from_slice(&body).unwrap() });
            let Some((status, extra, text)) = queue.lock().unwrap().next() else { break };
            let mut reply = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n",
                text.len()
            );
            for (k, v) in extra {
                reply.push_str(&format!("{k}: {v}\r\n"));
            }
            reply.push_str("\r\n");
            reply.push_str(&text);
            stream.write_all(reply.as_bytes()).unwrap();
        }
    });
    Stub { url, seen }
}

fn backend(url: &str, key: Option<&str>) -> HttpBackend {
    let spec = HttpSpec {
        id: "stub".into(),
        preset: Some(Preset::OpenaiCompletions),
        endpoint: Some(url.to_string()),
        max_retries: Some(2),
        backoff_ms: Some(1),
        ..Default::default()
    };
    HttpBackend::from_spec(&spec).unwrap().with_credential(key.map(String::from))
}

fn ok(text: &str) -> (u16, Vec<(&'static str, &'static str)>, String) {
    (200, vec![], json!({"choices": [{"text": text}]}).to_string())
}

fn single(prompt: &str) -> CompletionRequest {
    CompletionRequest { runs: 1, ..CompletionRequest::new(prompt) }
}

#[test]
fn sends_mapped_body_and_auth_header() {
    let s = stub(vec![ok("x\nSo, the final LTL translation is: a FINISH trailing")]);
    let batch = backend(&s.url, Some("k1")).complete(&single("P")).unwrap();
    assert_eq!(batch.completions, vec!["x\nSo, the final LTL translation is: a "]);
    let seen = s.seen.lock().unwrap();
    assert_eq!(seen[0].body["prompt"], "P");
    assert_eq!(seen[0].body["stop"], json!(["FINISH"]));
    assert!(seen[0].headers.contains(&("authorization".into(), "Bearer k1".into())));
}

#[test]
fn runs_fan_out() {
    let s = stub(vec![ok("a"), ok("a"), ok("a")]);
    let batch = backend(&s.url, Some("k")).complete(&CompletionRequest::new("P")).unwrap();
    assert_eq!(batch.completions.len(), 3);
    assert_eq!(s.seen.lock().unwrap().len(), 3);
}

#[test]
fn rejected_credential_is_an_auth_error() {
    let s = stub(vec![(401, vec![], "{\"error\": \"bad key\"}".into())]);
    let err = backend(&s.url, Some("wrong")).complete(&single("P")).unwrap_err();
    assert_eq!(err, BackendError::Auth { status: 401 });
    assert_eq!(s.seen.lock().unwrap().len(), 1, "auth failures are not retried");
}

#[test]
fn rate_limit_carries_retry_after() {
    let s = stub(vec![(429, vec![("Retry-After", "7")], "{}".into())]);
    let err = backend(&s.url, Some("k")).complete(&single("P")).unwrap_err();
    assert_eq!(err, BackendError::RateLimited { retry_after: Some(std::time::Duration::from_secs(7)) });
}

#[test]
fn server_errors_are_retried() {
    let s = stub(vec![(503, vec![], "busy".into()), (500, vec![], "oops".into()), ok("fine")]);
    let batch = backend(&s.url, Some("k")).complete(&single("P")).unwrap();
    assert_eq!(batch.completions, vec!["fine"]);
    assert_eq!(s.seen.lock().unwrap().len(), 3);
}

#[test]
fn retries_are_bounded() {
    let s = stub(vec![(502, vec![], "a".into()), (502, vec![], "b".into()), (502, vec![], "c".into())]);
    let err = backend(&s.url, Some("k")).complete(&single("P")).unwrap_err();
    assert!(matches!(err, BackendError::Provider { status: 502, .. }), "{err}");
}

#[test]
fn one_failed_run_fails_the_batch() {
    let s = stub(vec![ok("a"), (400, vec![], "bad".into()), ok("a")]);
    let err = backend(&s.url, Some("k")).complete(&CompletionRequest::new("P")).unwrap_err();
    assert!(matches!(err, BackendError::Provider { status: 400, .. }), "{err}");
}

#[test]
fn unexpected_shape() {
    let s = stub(vec![(200, vec![], "{\"result\": 1}".into())]);
    let err = backend(&s.url, Some("k")).complete(&single("P")).unwrap_err();
    assert!(matches!(err, BackendError::BadResponse(_)), "{err}");
}

#[test]
fn unreachable_endpoint_is_a_network_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = backend(&format!("http://127.0.0.1:{port}/"), Some("k")).complete(&single("P")).unwrap_err();
    assert!(matches!(err, BackendError::Network(_)), "{err}");
}

#[test]
fn custom_mapping() {
    let s = stub(vec![(200, vec![], json!({"out": {"text": "t"}}).to_string())]);
    let spec = HttpSpec {
        id: "custom".into(),
        endpoint: Some(s.url.clone()),
        auth_header: Some("x-api-key".into()),
        auth_prefix: Some(String::new()),
        request: Some(RequestMapping {
            prompt: "input.text".into(),
            temperature: Some("config.temp".into()),
            ..Default::default()
        }),
        response_path: Some("out.text".into()),
        ..Default::default()
    };
    let b = HttpBackend::from_spec(&spec).unwrap().with_credential(Some("secret".into()));
    assert_eq!(b.complete(&single("P")).unwrap().completions, vec!["t"]);
    let seen = s.seen.lock().unwrap();
    assert_eq!(seen[0].body, json!({"input": {"text": "P"}, "config": {"temp": 0.2}}));
    assert!(seen[0].headers.contains(&("x-api-key".into(), "secret".into())));
}
