//! A minimal chat-completion endpoint for exercising the HTTP client
//! without a real model: one background thread accepts connections, reads
//! the POSTed prompt, and answers with whatever the test's `respond`
//! closure produces.
//!
//! Different test targets use different subsets of these helpers.
#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

/// Handle on a running mock endpoint.
pub struct MockEndpoint {
    /// Base URL in the shape the client expects (`http://host:port/v1`).
    pub base_url: String,
    /// Number of requests served so far.
    pub hits: Arc<AtomicUsize>,
}

impl MockEndpoint {
    pub fn request_count(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

/// Starts a mock endpoint on an ephemeral port. For every request the
/// user-message content is passed to `respond`, and the return value is
/// sent back as the assistant message. The serving thread runs until the
/// test process exits.
pub fn spawn<F>(respond: F) -> MockEndpoint
where
    F: Fn(&str) -> String + Send + Sync + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind mock endpoint");
    let addr = listener.local_addr().expect("mock endpoint address");
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = Arc::clone(&hits);
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { continue };
            counter.fetch_add(1, Ordering::SeqCst);
            let _ = handle(stream, &respond);
        }
    });
    MockEndpoint {
        base_url: format!("http://{addr}/v1"),
        hits,
    }
}

fn handle<F: Fn(&str) -> String>(mut stream: TcpStream, respond: &F) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut content_length = 0usize;
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Ok(());
        }
        let header = line.trim();
        if header.is_empty() {
            break;
        }
        let lower = header.to_ascii_lowercase();
        if let Some(value) = lower.strip_prefix("content-length:") {
            content_length = value.trim().parse().unwrap_or(0);
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;
    let request: serde_json::Value = serde_json::from_slice(&body).unwrap_or_default();
    let prompt = request["messages"][0]["content"].as_str().unwrap_or_default();
    let content = respond(prompt);
    let reply = serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": content}}]
    })
    .to_string();
    write!(
        stream,
        "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{reply}",
        reply.len()
    )?;
    stream.flush()
}

/// The sentence under refinement: the last `template representation:` line
/// of a refinement prompt (earlier occurrences belong to the worked
/// examples).
pub fn templated_line(prompt: &str) -> Option<&str> {
    const MARKER: &str = "template representation: ";
    let start = prompt.rfind(MARKER)? + MARKER.len();
    prompt[start..].lines().next().map(str::trim)
}
