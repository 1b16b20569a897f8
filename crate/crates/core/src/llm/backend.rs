//! Completion backends: an HTTP chat-completions client and offline mocks.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use serde_json::{json, Value};

use super::prompts::MATCH_INSTRUCTION;
use super::MockOracle;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CompletionRequest<'a> {
    pub prompt: &'a str,
    pub model: &'a str,
    pub temperature: f64,
    pub max_tokens: u32,
    pub fingerprint: &'a str,
}

pub trait Backend: Send + Sync {
    fn complete(&self, req: &CompletionRequest<'_>) -> Result<String>;

    /// Whether answers depend only on the prompt text.
    fn is_deterministic(&self) -> bool {
        false
    }
}

/// Offline backend whose answers are pure functions of the prompt.
#[derive(Debug, Clone, Copy)]
pub struct MockBackend {
    pub oracle: MockOracle,
}

pub const OVERLAP_THRESHOLD: usize = 2;
pub const SUMMARY_TOKENS: usize = 8;

const STOP_WORDS: &[&str] = &[
    // C
    "auto", "bool", "break", "case", "char", "const", "continue", "default", "define", "double", "else", "enum",
    "extern", "false", "float", "for", "goto", "inline", "int", "long", "null", "register", "restrict", "return",
    "short", "signed", "size", "sizeof", "static", "struct", "switch", "true", "typedef", "uint", "union",
    "unsigned", "void", "volatile", "while", "ptr", "len", "ret", "arg", "args", "data", "val", "tmp", "err",
    // prompt wording
    "address", "analyze", "and", "are", "assess", "based", "call", "callee", "caller", "chain", "concise", "consolidate",
    "context", "could", "declaration", "each", "end", "follows", "for", "function", "functionality", "given",
    "indirect", "invoke", "is", "listed", "local", "name", "not", "please", "pointer", "provides", "response",
    "semantic", "site", "statement", "subsequent", "summaries", "summary", "taken", "target", "text", "the",
    "these", "this", "those", "information", "above", "answer", "with", "yes", "assigned", "invoked", "passed",
    "traced", "depth", "limit", "reached", "cycle", "defined", "project", "parameter", "used", "about", "nothing",
    "specific",
];

/// Identifier-aware word split: `isc_logErrorCB` gives `isc`, `log`, `error`, `cb`.
pub fn split_words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split(|c: char| !c.is_ascii_alphanumeric()) {
        let mut cur = String::new();
        let mut prev_lower = false;
        for c in chunk.chars() {
            if c.is_ascii_uppercase() && prev_lower && !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            prev_lower = c.is_ascii_lowercase() || c.is_ascii_digit();
            cur.push(c.to_ascii_lowercase());
        }
        if !cur.is_empty() {
            out.push(cur);
        }
    }
    out
}

/// Content words of a text: case-folded identifier parts of at least three
/// letters, minus keywords and prompt wording.
pub fn content_tokens(text: &str) -> Vec<String> {
    split_words(text)
        .into_iter()
        .filter(|w| w.len() >= 3 && !w.chars().all(|c| c.is_ascii_digit()) && !STOP_WORDS.contains(&w.as_str()))
        .collect()
}

/// The most frequent content words, ties broken alphabetically.
pub fn top_tokens(text: &str, k: usize) -> Vec<String> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for t in content_tokens(text) {
        *counts.entry(t).or_default() += 1;
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.into_iter().take(k).map(|(t, _)| t).collect()
}

/// Split a match prompt into its caller and callee parts.
fn match_sections(prompt: &str) -> (&str, &str) {
    let body = prompt.strip_suffix(MATCH_INSTRUCTION).unwrap_or(prompt);
    let start = body.find("\n# 1.").map_or(0, |i| i + 1);
    let body = &body[start..];
    match body.find("\n# 2.") {
        Some(i) => (&body[..i], &body[i + 1..]),
        None => (body, ""),
    }
}

/// Caller and callee share at least `OVERLAP_THRESHOLD` content words.
pub fn token_overlap(prompt: &str) -> usize {
    let (caller, callee) = match_sections(prompt);
    let a: BTreeSet<String> = content_tokens(caller).into_iter().collect();
    let b: BTreeSet<String> = content_tokens(callee).into_iter().collect();
    a.intersection(&b).count()
}

impl MockBackend {
    fn summarize(prompt: &str) -> String {
        // Drop the template's first and last paragraphs, keep the context.
        let paragraphs: Vec<&str> = prompt.split("\n\n").collect();
        let body = if paragraphs.len() > 2 { paragraphs[1..paragraphs.len() - 1].join("\n\n") } else { prompt.to_string() };
        let words = top_tokens(&body, SUMMARY_TOKENS);
        if words.is_empty() {
            "about nothing specific".into()
        } else {
            format!("about {}", words.join(" "))
        }
    }
}

impl Backend for MockBackend {
    fn complete(&self, req: &CompletionRequest<'_>) -> Result<String> {
        if !req.prompt.ends_with(MATCH_INSTRUCTION) {
            return Ok(Self::summarize(req.prompt));
        }
        let yes = match self.oracle {
            MockOracle::AlwaysYes => true,
            MockOracle::AlwaysNo => false,
            MockOracle::TokenOverlap => token_overlap(req.prompt) >= OVERLAP_THRESHOLD,
        };
        Ok(if yes { "yes".into() } else { "no".into() })
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

/// Chat-completions client. The key comes from `SEA_LLM_API_KEY`.
pub struct RemoteBackend {
    url: String,
    api_key: Option<String>,
    agent: ureq::Agent,
    pub retries: u32,
    pub backoff: Duration,
}

impl RemoteBackend {
    pub fn new(base_url: &str) -> Self {
        let url = if base_url.ends_with("/chat/completions") {
            base_url.to_string()
        } else {
            format!("{}/chat/completions", base_url.trim_end_matches('/'))
        };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(300)))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteBackend {
            url,
            api_key: std::env::var(super::API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            agent,
            retries: 3,
            backoff: Duration::from_millis(500),
        }
    }

    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key;
        self
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn attempt(&self, body: &Value, fp: &str) -> std::result::Result<String, (bool, Error)> {
        let transport = |message: String| (true, Error::Transport { fingerprint: fp.to_string(), message });
        let protocol = |message: String| (false, Error::Protocol { fingerprint: fp.to_string(), message });
        let mut req = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(k) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = req.send_json(body).map_err(|e| transport(e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(transport(format!("HTTP {status}")));
        }
        if status >= 400 {
            return Err(protocol(format!("HTTP {status}")));
        }
        let v: Value = resp.body_mut().read_json().map_err(|e| protocol(format!("unreadable reply: {e}")))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| protocol("reply has no choices[0].message.content".into()))
    }
}

impl Backend for RemoteBackend {
    fn complete(&self, req: &CompletionRequest<'_>) -> Result<String> {
        let body = json!({
            "model": req.model,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        });
        let mut delay = self.backoff;
        let mut attempt = 0;
        loop {
            match self.attempt(&body, req.fingerprint) {
                Ok(text) => return Ok(text),
                Err((true, e)) if attempt < self.retries => {
                    log::warn!("completion attempt {} failed: {e}; retrying", attempt + 1);
                    std::thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
                Err((_, e)) => return Err(e),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::prompts::{render_match_prompt, MatchMode, SummaryBundle};
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    fn req(prompt: &str) -> CompletionRequest<'_> {
        CompletionRequest { prompt, model: "m", temperature: 0.5, max_tokens: 64, fingerprint: "fp" }
    }

    #[test]
    fn word_splitting() {
        assert_eq!(split_words("isc_logErrorCB"), ["isc", "log", "error", "cb"]);
        assert_eq!(split_words("HTTPServer x2"), ["httpserver", "x2"]);
        assert_eq!(content_tokens("static int towire_compare(void)"), ["towire", "compare"]);
    }

    #[test]
    fn token_overlap_oracle() {
        let bundle = |callee: &str| SummaryBundle {
            caller_local: Some("about isc log error message".into()),
            caller_global: None,
            callee_local: Some(callee.into()),
            callee_global: None,
        };
        let yes = render_match_prompt(&bundle("about isc log error callback"), MatchMode::Full, "", "").unwrap();
        let no = render_match_prompt(&bundle("about towire compare rdata"), MatchMode::Full, "", "").unwrap();
        // shared: isc, log, error
        assert_eq!(token_overlap(&yes), 3);
        assert_eq!(token_overlap(&no), 0);
        let m = MockBackend { oracle: MockOracle::TokenOverlap };
        assert_eq!(m.complete(&req(&yes)).unwrap(), "yes");
        assert_eq!(m.complete(&req(&no)).unwrap(), "no");
        assert_eq!(MockBackend { oracle: MockOracle::AlwaysNo }.complete(&req(&yes)).unwrap(), "no");
        assert_eq!(MockBackend { oracle: MockOracle::AlwaysYes }.complete(&req(&no)).unwrap(), "yes");
    }

    #[test]
    fn mock_summary_is_pure() {
        let p = "The local context for the indirect-call is listed as follows:\n\nvoid log_error(log_t *l) { l->log_error_cb(l); }\n\nAnalyze it.";
        let m = MockBackend { oracle: MockOracle::AlwaysYes };
        let a = m.complete(&req(p)).unwrap();
        assert_eq!(a, "about log error");
        assert_eq!(a, m.complete(&req(p)).unwrap());
    }

    /// A one-shot HTTP server answering each connection with the next canned reply.
    fn serve(replies: Vec<(u16, String)>) -> (String, Arc<AtomicUsize>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = hits.clone();
        std::thread::spawn(move || {
            for (status, body) in replies {
                let Ok((mut stream, _)) = listener.accept() else { return };
                counter.fetch_add(1, Ordering::SeqCst);
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                }
                let mut buf = vec![0; len];
                reader.read_exact(&mut buf).unwrap();
                let resp = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(resp.as_bytes()).unwrap();
            }
        });
        (format!("http://{addr}/v1"), hits)
    }

    fn ok_body(text: &str) -> String {
        json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string()
    }

    #[test]
    fn remote_reads_first_choice() {
        let (url, hits) = serve(vec![(200, ok_body("Yes."))]);
        let b = RemoteBackend::new(&url).with_api_key(None);
        assert!(b.url().ends_with("/v1/chat/completions"));
        assert_eq!(b.complete(&req("p")).unwrap(), "Yes.");
        assert_eq!(hits.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn remote_retries_server_errors() {
        let (url, hits) = serve(vec![(503, "{}".into()), (500, "{}".into()), (200, ok_body("no"))]);
        let mut b = RemoteBackend::new(&url).with_api_key(Some("k".into()));
        b.backoff = Duration::from_millis(1);
        assert_eq!(b.complete(&req("p")).unwrap(), "no");
        assert_eq!(hits.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn remote_gives_up_with_fingerprint() {
        let (url, _) = serve(vec![(503, "{}".into()); 2]);
        let mut b = RemoteBackend::new(&url).with_api_key(None);
        b.retries = 1;
        b.backoff = Duration::from_millis(1);
        match b.complete(&req("p")) {
            Err(Error::Transport { fingerprint, .. }) => assert_eq!(fingerprint, "fp"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn remote_malformed_reply_is_protocol_error() {
        let (url, hits) = serve(vec![(200, "{\"choices\": []}".into())]);
        let b = RemoteBackend::new(&url).with_api_key(None);
        assert!(matches!(b.complete(&req("p")), Err(Error::Protocol { .. })));
        assert_eq!(hits.load(Ordering::SeqCst), 1);
    }
}
