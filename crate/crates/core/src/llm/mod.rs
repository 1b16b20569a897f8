//! Prompt rendering, completion backends, verdict parsing and the response cache.

pub mod backend;
pub mod cache;
pub mod engine;
pub mod prompts;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use backend::{Backend, CompletionRequest, MockBackend, RemoteBackend};
pub use cache::{CacheRecord, CacheStats, ResponseCache};
pub use engine::{CallRecord, Engine};
pub use prompts::{
    render_consolidation_prompt, render_match_prompt, render_summary_prompt, MatchMode, PromptRole, SummaryBundle,
};

pub const ALLOWED_TEMPERATURES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const DEFAULT_TEMPERATURE: f64 = 0.5;
pub const SUMMARY_MAX_TOKENS: u32 = 512;
pub const VERDICT_MAX_TOKENS: u32 = 64;
pub const API_KEY_ENV: &str = "SEA_LLM_API_KEY";

/// Deterministic answer policies for offline runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MockOracle {
    AlwaysYes,
    AlwaysNo,
    TokenOverlap,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSpec {
    Remote { base_url: String },
    Mock { oracle: MockOracle },
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec::Mock { oracle: MockOracle::AlwaysYes }
    }
}

impl FromStr for BackendSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let oracle = match s {
            "mock:always-yes" => MockOracle::AlwaysYes,
            "mock:always-no" => MockOracle::AlwaysNo,
            "mock:token-overlap" => MockOracle::TokenOverlap,
            _ => {
                return match s.strip_prefix("remote:") {
                    Some(url) if !url.is_empty() => Ok(BackendSpec::Remote { base_url: url.to_string() }),
                    _ => Err(Error::Config(format!(
                        "unknown backend `{s}` (expected mock:always-yes, mock:always-no, mock:token-overlap or remote:<url>)"
                    ))),
                };
            }
        };
        Ok(BackendSpec::Mock { oracle })
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Remote { base_url } => write!(f, "remote:{base_url}"),
            BackendSpec::Mock { oracle } => {
                let name = match oracle {
                    MockOracle::AlwaysYes => "always-yes",
                    MockOracle::AlwaysNo => "always-no",
                    MockOracle::TokenOverlap => "token-overlap",
                };
                write!(f, "mock:{name}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub model_name: String,
    pub temperature: f64,
    pub summary_max_tokens: u32,
    pub verdict_max_tokens: u32,
    pub runs_per_query: u32,
    pub concurrency_limit: usize,
    pub backend: BackendSpec,
    /// Accept any temperature in [0, 1], not only the five standard settings.
    pub allow_any_temperature: bool,
    /// Remote retries after a transport failure or a 429/5xx reply.
    pub max_retries: u32,
    /// First retry delay; doubles on each attempt.
    pub retry_backoff_ms: u64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            model_name: "mock".into(),
            temperature: DEFAULT_TEMPERATURE,
            summary_max_tokens: SUMMARY_MAX_TOKENS,
            verdict_max_tokens: VERDICT_MAX_TOKENS,
            runs_per_query: 1,
            concurrency_limit: 4,
            backend: BackendSpec::default(),
            allow_any_temperature: false,
            max_retries: 3,
            retry_backoff_ms: 500,
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.temperature) {
            return Err(Error::Config(format!("temperature {} is outside [0, 1]", self.temperature)));
        }
        if !self.allow_any_temperature && !ALLOWED_TEMPERATURES.contains(&self.temperature) {
            return Err(Error::Config(format!(
                "temperature {} is not one of {ALLOWED_TEMPERATURES:?}; set allow_any_temperature to override",
                self.temperature
            )));
        }
        if self.summary_max_tokens == 0 || self.verdict_max_tokens == 0 {
            return Err(Error::Config("max_tokens must be positive".into()));
        }
        if self.runs_per_query == 0 {
            return Err(Error::Config("runs_per_query must be positive".into()));
        }
        if self.concurrency_limit == 0 {
            return Err(Error::Config("concurrency_limit must be positive".into()));
        }
        if self.model_name.trim().is_empty() {
            return Err(Error::Config("model_name is empty".into()));
        }
        Ok(())
    }
}

/// Hex SHA-256 of a prompt.
pub fn fingerprint(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Yes,
    No,
    Ambiguous,
}

impl Decision {
    /// Ambiguous answers keep the edge.
    pub fn keeps(self) -> bool {
        self != Decision::No
    }
}

/// Read a yes/no answer. A leading yes or no decides; otherwise the answer
/// counts only if every standalone yes/no word in it agrees.
pub fn parse_verdict(raw: &str) -> Decision {
    let words: Vec<String> = raw
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect();
    let kind = |w: &str| match w {
        "yes" => Some(Decision::Yes),
        "no" => Some(Decision::No),
        _ => None,
    };
    if let Some(d) = words.first().and_then(|w| kind(w)) {
        return d;
    }
    let yes = words.iter().any(|w| w == "yes");
    let no = words.iter().any(|w| w == "no");
    match (yes, no) {
        (true, false) => Decision::Yes,
        (false, true) => Decision::No,
        _ => Decision::Ambiguous,
    }
}

/// Majority over the decisive votes, ties to Yes; all-ambiguous stays ambiguous.
pub fn majority(votes: &[Decision]) -> Decision {
    let yes = votes.iter().filter(|v| **v == Decision::Yes).count();
    let no = votes.iter().filter(|v| **v == Decision::No).count();
    if yes == 0 && no == 0 {
        Decision::Ambiguous
    } else if yes >= no {
        Decision::Yes
    } else {
        Decision::No
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchVerdict {
    pub decision: Decision,
    /// Response of the first run.
    pub raw_response: String,
    pub prompt_fingerprint: String,
    /// Per-run decisions when a query was asked several times.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub votes: Vec<Decision>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts() {
        assert_eq!(parse_verdict("Yes, the caller clearly can."), Decision::Yes);
        assert_eq!(parse_verdict("no."), Decision::No);
        assert_eq!(parse_verdict("It depends on runtime state"), Decision::Ambiguous);
        assert_eq!(parse_verdict("The answer is `yes'."), Decision::Yes);
        assert_eq!(parse_verdict("Answer: NO"), Decision::No);
        assert_eq!(parse_verdict("not yes, maybe no"), Decision::Ambiguous);
        assert_eq!(parse_verdict("No, not yes"), Decision::No);
        assert_eq!(parse_verdict("yesterday nobody"), Decision::Ambiguous);
        assert_eq!(parse_verdict(""), Decision::Ambiguous);
    }

    #[test]
    fn votes() {
        use Decision::*;
        assert_eq!(majority(&[Yes]), Yes);
        assert_eq!(majority(&[Yes, No]), Yes);
        assert_eq!(majority(&[No, No, Yes]), No);
        assert_eq!(majority(&[Ambiguous, No]), No);
        assert_eq!(majority(&[Ambiguous, Ambiguous]), Ambiguous);
    }

    #[test]
    fn backend_specs() {
        for s in ["mock:always-yes", "mock:always-no", "mock:token-overlap", "remote:http://localhost:8080/v1"] {
            assert_eq!(s.parse::<BackendSpec>().unwrap().to_string(), s);
        }
        assert!("mock:sometimes".parse::<BackendSpec>().is_err());
        assert!("remote:".parse::<BackendSpec>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = LlmConfig::default();
        assert!(c.validate().is_ok());
        c.temperature = 0.3;
        assert!(c.validate().is_err());
        c.allow_any_temperature = true;
        assert!(c.validate().is_ok());
        c.temperature = 1.5;
        assert!(c.validate().is_err());
        let c = LlmConfig { runs_per_query: 0, ..LlmConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn parse_verdict_is_total() {
        use proptest::prelude::*;
        proptest!(|(s in ".*")| {
            let _ = parse_verdict(&s);
        });
    }
}
