#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde_json::{json, Value};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn revchain(args: &[&str]) -> Output {
    revchain_env(args, &[])
}

pub fn revchain_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_revchain"));
    cmd.args(args).stdin(Stdio::null());
    for var in [
        "REVERSE_CHAIN_API_KEY",
        "REVERSE_CHAIN_ENDPOINT",
        "REVERSE_CHAIN_MODEL",
    ] {
        cmd.env_remove(var);
    }
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Values the fake model "reads" from a request when the request states them.
const KNOWN: [(&str, &str); 6] = [
    ("person_name", "Jack"),
    ("start_time", "9:00 am"),
    ("end_time", "10:00 am"),
    ("userName", "Lucas"),
    ("departure_point", "London"),
    ("destination", "Los Angeles"),
];

fn request_text(prompt: &str) -> &str {
    prompt
        .lines()
        .find_map(|l| l.strip_prefix("Request: "))
        .unwrap_or("")
}

fn known(arg: &str, prompt: &str) -> Option<&'static str> {
    let req = request_text(prompt);
    KNOWN
        .iter()
        .find(|(k, v)| *k == arg && req.contains(v))
        .map(|(_, v)| *v)
}

fn first_candidate(lines: &[&str]) -> Option<String> {
    lines.iter().find_map(|l| {
        let rest = l.trim_start().strip_prefix("- ")?;
        let end = rest.find([':', ' ']).unwrap_or(rest.len());
        Some(rest[..end].to_string())
    })
}

/// A rule-based stand-in for a chat model.
///
/// Selection picks the first listed candidate, extraction returns a value
/// only when the request contains it, and completion combines the two. The
/// first extraction of `end_time` in a conversation gets a prose reply, so
/// every run exercises the re-ask path.
pub fn fake_model(messages: &[Value]) -> String {
    let user: Vec<&str> = messages
        .iter()
        .filter(|m| m["role"] == "user")
        .filter_map(|m| m["content"].as_str())
        .collect();
    let prompt = user.first().copied().unwrap_or("");
    let is_retry = user.len() > 1;
    let lines: Vec<&str> = prompt.lines().collect();

    if let Some(at) = lines.iter().position(|l| l.starts_with("Candidate APIs:")) {
        return match first_candidate(&lines[at + 1..]) {
            Some(name) => json!({ "api": name }).to_string(),
            None => r#"{"api": null}"#.into(),
        };
    }
    if let Some(line) = lines.iter().find(|l| l.starts_with("We want to call ")) {
        let arg = line
            .split("need its argument ")
            .nth(1)
            .and_then(|r| r.split(" (").next())
            .unwrap_or("");
        if arg == "end_time" && !is_retry {
            return "Sure! The meeting ends at 10:00 am.".into();
        }
        let outcome = match known(arg, prompt) {
            Some(v) => json!({ "kind": "value", "value": v }),
            None => json!({ "kind": "none" }),
        };
        return json!({ arg: outcome }).to_string();
    }
    if let Some(at) = lines.iter().position(|l| l.starts_with("Arguments to fill:")) {
        let mut out = serde_json::Map::new();
        let mut i = at + 1;
        while i < lines.len() && lines[i].starts_with("- ") {
            let name = lines[i][2..].split(" (").next().unwrap_or("").to_string();
            let mut j = i + 1;
            let mut candidates = Vec::new();
            while j < lines.len() && lines[j].starts_with("  ") {
                candidates.push(lines[j]);
                j += 1;
            }
            let choice = match (
                known(&name, prompt),
                first_candidate(&candidates[1.min(candidates.len())..]),
            ) {
                (Some(v), _) => json!({ "kind": "value", "value": v }),
                (None, Some(api)) => json!({ "kind": "api", "api": api }),
                (None, None) => json!({ "kind": "none" }),
            };
            out.insert(name, choice);
            i = j;
        }
        return Value::Object(out).to_string();
    }
    "I am not sure what you mean.".into()
}

/// Minimal HTTP/1.1 chat-completions endpoint on a local port.
pub struct FakeEndpoint {
    pub url: String,
    pub served: Arc<AtomicUsize>,
}

impl FakeEndpoint {
    pub fn start() -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let served = Arc::new(AtomicUsize::new(0));
        let counter = Arc::clone(&served);
        std::thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let counter = Arc::clone(&counter);
                std::thread::spawn(move || {
                    if serve(stream).is_ok() {
                        counter.fetch_add(1, Ordering::SeqCst);
                    }
                });
            }
        });
        FakeEndpoint { url, served }
    }

    pub fn served(&self) -> usize {
        self.served.load(Ordering::SeqCst)
    }
}

fn serve(stream: TcpStream) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Err(std::io::ErrorKind::UnexpectedEof.into());
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; length];
    reader.read_exact(&mut body)?;
    let request: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
    let messages = request["messages"].as_array().cloned().unwrap_or_default();
    let reply = json!({
        "choices": [{ "index": 0, "message": { "role": "assistant", "content": fake_model(&messages) } }]
    })
    .to_string();
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        reply.len(),
        reply
    )?;
    stream.flush()
}
