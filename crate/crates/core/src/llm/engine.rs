use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::backend::{Backend, CompletionRequest, MockBackend, RemoteBackend};
use super::cache::{cache_key, CacheRecord, CacheStats, ResponseCache};
use super::prompts::{render_consolidation_prompt, render_match_prompt, render_summary_prompt, MatchMode, PromptRole, SummaryBundle};
use super::{fingerprint, majority, parse_verdict, BackendSpec, LlmConfig, MatchVerdict};
use crate::error::Result;

/// One completion request as seen by the engine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub role: PromptRole,
    pub prompt_sha: String,
    pub run: u32,
    pub cached: bool,
}

pub struct Engine {
    config: LlmConfig,
    backend: Box<dyn Backend>,
    cache: ResponseCache,
    log: Mutex<Vec<CallRecord>>,
}

impl Engine {
    pub fn new(config: LlmConfig, cache: ResponseCache) -> Result<Self> {
        config.validate()?;
        let backend: Box<dyn Backend> = match &config.backend {
            BackendSpec::Mock { oracle } => Box::new(MockBackend { oracle: *oracle }),
            BackendSpec::Remote { base_url } => {
                let mut remote = RemoteBackend::new(base_url);
                remote.retries = config.max_retries;
                remote.backoff = std::time::Duration::from_millis(config.retry_backoff_ms);
                Box::new(remote)
            }
        };
        Ok(Self::with_backend(config, backend, cache))
    }

    pub fn with_backend(config: LlmConfig, backend: Box<dyn Backend>, cache: ResponseCache) -> Self {
        Engine { config, backend, cache, log: Mutex::new(Vec::new()) }
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    /// Cache-first completion of one run of a prompt.
    pub fn complete(&self, prompt: &str, role: PromptRole, run: u32) -> Result<String> {
        let sha = fingerprint(prompt);
        let key = cache_key(&sha, &self.config.model_name, self.config.temperature, run);
        let record = |cached| CallRecord { role, prompt_sha: sha.clone(), run, cached };
        if let Some(hit) = self.cache.get(&key) {
            self.log.lock().expect("log lock").push(record(true));
            return Ok(hit);
        }
        self.log.lock().expect("log lock").push(record(false));
        let max_tokens = if role.is_summary() { self.config.summary_max_tokens } else { self.config.verdict_max_tokens };
        let response = self.backend.complete(&CompletionRequest {
            prompt,
            model: &self.config.model_name,
            temperature: self.config.temperature,
            max_tokens,
            fingerprint: &sha,
        })?;
        self.cache.insert(CacheRecord {
            key_hash: key,
            model: self.config.model_name.clone(),
            temperature: self.config.temperature,
            run,
            prompt_sha: sha.clone(),
            response,
        })
    }

    pub fn summarize(&self, context: &str, role: PromptRole, target: &str) -> Result<String> {
        let prompt = render_summary_prompt(context, role, target)?;
        self.complete(&prompt, role, 0)
    }

    /// Summaries of every address-taken site, consolidated when there are several.
    pub fn summarize_callee_global<S: AsRef<str>>(&self, name: &str, site_contexts: &[S]) -> Result<Option<String>> {
        let summaries = site_contexts
            .iter()
            .map(|c| self.summarize(c.as_ref(), PromptRole::CalleeSite, name))
            .collect::<Result<Vec<_>>>()?;
        match summaries.len() {
            0 => Ok(None),
            1 => Ok(summaries.into_iter().next()),
            _ => {
                let prompt = render_consolidation_prompt(&summaries)?;
                self.complete(&prompt, PromptRole::Consolidation, 0).map(Some)
            }
        }
    }

    /// Ask the match question `runs_per_query` times and vote.
    pub fn match_pair(&self, bundle: &SummaryBundle, mode: MatchMode, caller_stmt: &str, callee: &str) -> Result<MatchVerdict> {
        let prompt = render_match_prompt(bundle, mode, caller_stmt, callee)?;
        let mut responses = Vec::new();
        for run in 0..self.config.runs_per_query {
            responses.push(self.complete(&prompt, PromptRole::Match, run)?);
        }
        let votes: Vec<_> = responses.iter().map(|r| parse_verdict(r)).collect();
        Ok(MatchVerdict {
            decision: majority(&votes),
            raw_response: responses.swap_remove(0),
            prompt_fingerprint: fingerprint(&prompt),
            votes: if votes.len() > 1 { votes } else { Vec::new() },
        })
    }

    pub fn calls(&self) -> Vec<CallRecord> {
        self.log.lock().expect("log lock").clone()
    }

    pub fn count(&self, role: PromptRole) -> usize {
        self.log.lock().expect("log lock").iter().filter(|c| c.role == role).count()
    }

    /// Requests that reached the backend.
    pub fn backend_calls(&self) -> usize {
        self.log.lock().expect("log lock").iter().filter(|c| !c.cached).count()
    }

    pub fn cache_stats(&self) -> CacheStats {
        self.cache.stats()
    }
}
