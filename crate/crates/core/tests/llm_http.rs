//! Chat-completion client against a scripted local HTTP server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

use objnav::grid::{Cell, Point};
use objnav::islands::FrontierIsland;
use objnav::language::{build_prompt, tally_votes, LlmClient, LlmConfig, OracleError, PromptKind, VoteOracle};
use serde_json::{json, Value};

struct Request {
    auth: Option<String>,
    body: Value,
}

/// Serves one scripted `(status, body)` per connection, then stops.
fn serve(script: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<Request>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for (status, body) in script {
            let Ok((stream, _)) = listener.accept() else { return };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            let mut auth = None;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                let (k, v) = line.split_once(':').unwrap_or((line, ""));
                match k.to_ascii_lowercase().as_str() {
                    "content-length" => len = v.trim().parse().unwrap(),
                    "authorization" => auth = Some(v.trim().to_string()),
                    _ => {}
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            log.lock().unwrap().push(Request {
                auth,
                body: serde_json::from_slice(&buf).unwrap_or(Value::Null),
            });
            let mut stream = stream;
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    (url, seen)
}

fn reply(text: &str) -> (u16, String) {
    (200, json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string())
}

fn client(url: &str, retries: u32) -> LlmClient {
    let cfg = LlmConfig {
        endpoint: url.to_string(),
        retries,
        timeout_s: 5.0,
        ..LlmConfig::default()
    };
    LlmClient::with_key(cfg, "test-key".into())
}

fn islands() -> Vec<FrontierIsland> {
    (0..2)
        .map(|id| FrontierIsland {
            id,
            cells: vec![Cell::new(id as i32 * 10, 0)],
            centroid: Point::new(id as f64, 0.0),
            names: vec![if id == 0 { "bed".into() } else { "sink".into() }],
        })
        .collect()
}

#[test]
fn sends_model_prompt_and_bearer_token() {
    let (url, seen) = serve(vec![reply("B")]);
    let prompt = build_prompt(PromptKind::Follow, "toilet", &islands()).unwrap();
    assert_eq!(client(&url, 0).answer(&prompt, &[0, 1]).unwrap(), Some(1));
    let reqs = seen.lock().unwrap();
    assert_eq!(reqs.len(), 1);
    assert_eq!(reqs[0].auth.as_deref(), Some("Bearer test-key"));
    assert_eq!(reqs[0].body["model"], "gpt-4.1");
    assert_eq!(reqs[0].body["temperature"], 0.0);
    let content = reqs[0].body["messages"][0]["content"].as_str().unwrap();
    assert!(content.contains("toilet") && content.contains("B) sink"), "{content}");
}

#[test]
fn unparseable_reply_is_asked_again_then_abstains() {
    let (url, seen) = serve(vec![reply("hmm, hard to say"), reply("A")]);
    let prompt = build_prompt(PromptKind::Avoid, "toilet", &islands()).unwrap();
    assert_eq!(client(&url, 0).answer(&prompt, &[0, 1]).unwrap(), Some(0));
    assert_eq!(seen.lock().unwrap().len(), 2);

    let (url, _) = serve(vec![reply("no idea"), reply("still no idea")]);
    assert_eq!(client(&url, 0).answer(&prompt, &[0, 1]).unwrap(), None);
}

#[test]
fn abstentions_are_counted_in_the_tally() {
    // k = 1: one follow and one avoid question per round, both unparseable twice.
    let script = (0..4).map(|_| reply("pass")).collect();
    let (url, _) = serve(script);
    let tally = tally_votes(&client(&url, 0), "toilet", &islands(), 1).unwrap();
    assert_eq!(tally.abstentions, 2);
    assert!(tally.h().values().all(|&h| h == 0));
}

#[test]
fn server_errors_are_retried() {
    let (url, seen) = serve(vec![(503, "{}".into()), (429, "{}".into()), reply("A")]);
    assert_eq!(client(&url, 2).complete("q").unwrap(), "A");
    assert_eq!(seen.lock().unwrap().len(), 3);

    let (url, _) = serve(vec![(500, "{}".into()), (500, "{}".into())]);
    assert!(matches!(client(&url, 1).complete("q"), Err(OracleError::Transport { attempts: 2, .. })));
}

#[test]
fn auth_failure_is_not_retried() {
    let (url, seen) = serve(vec![(401, r#"{"error":"bad key"}"#.into()), reply("A")]);
    assert!(matches!(client(&url, 3).complete("q"), Err(OracleError::Auth(401))));
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn malformed_response_is_an_error() {
    let (url, _) = serve(vec![(200, r#"{"choices": []}"#.into())]);
    assert!(matches!(client(&url, 0).complete("q"), Err(OracleError::Response(_))));
}

#[test]
fn transcript_records_each_exchange() {
    let dir = std::env::temp_dir().join(format!("objnav-transcript-{}", std::process::id()));
    let path = dir.join("ep.jsonl");
    let (url, _) = serve(vec![reply("A"), reply("B")]);
    let c = client(&url, 0).with_transcript(&path).unwrap();
    c.complete("one").unwrap();
    c.complete("two").unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1]["reply"], "B");
    assert_eq!(lines[0]["request"]["messages"][0]["content"], "one");
    assert!(!text.contains("test-key"), "credential leaked into the transcript");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    // Bind and drop to get a port with nothing listening.
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let url = format!("http://127.0.0.1:{port}/v1/chat/completions");
    assert!(matches!(client(&url, 0).complete("q"), Err(OracleError::Transport { .. })));
}
