//! End-to-end refinement: static candidates, scope filter, summaries,
//! caller/callee matching, and the report.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context::{self, DEFAULT_MAX_DEPTH};
use crate::db::{BuildConfig, ContextDatabase, IcallRecord};
use crate::error::{Error, Result};
use crate::llm::{Decision, Engine, LlmConfig, MatchMode, PromptRole, SummaryBundle};
use crate::resolve::{resolve_all, scope_filter, CandidateSet, Resolver, ResolverMode, ScopeMode, StaticResolution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    pub ablation_mode: MatchMode,
    pub scope_mode: ScopeMode,
    pub resolver_mode: ResolverMode,
    pub llm: LlmConfig,
    pub max_chain_depth: usize,
    pub include_summaries_in_report: bool,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            ablation_mode: MatchMode::Full,
            scope_mode: ScopeMode::Subtree,
            resolver_mode: ResolverMode::Cascade,
            llm: LlmConfig::default(),
            max_chain_depth: DEFAULT_MAX_DEPTH,
            include_summaries_in_report: false,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        self.llm.validate()?;
        if self.max_chain_depth == 0 {
            return Err(Error::Config("max_chain_depth must be positive".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: RefineConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }
}

/// Static resolutions for a project, as written by `sea resolve`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticReport {
    pub project: String,
    pub resolver_mode: ResolverMode,
    pub scope_mode: ScopeMode,
    pub icalls: BTreeMap<String, StaticEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticEntry {
    pub resolution: StaticResolution,
    /// Candidates left after the scope filter.
    pub scoped_candidates: BTreeSet<String>,
}

impl StaticReport {
    pub fn build(project: &str, db: &ContextDatabase, resolver_mode: ResolverMode, scope_mode: ScopeMode) -> Self {
        let icalls = resolve_all(db, resolver_mode)
            .into_iter()
            .map(|(id, resolution)| {
                let scoped = scoped_set(&resolution.set, db, scope_mode).candidates;
                (id, StaticEntry { resolution, scoped_candidates: scoped })
            })
            .collect();
        StaticReport { project: project.to_string(), resolver_mode, scope_mode, icalls }
    }
}

fn scoped_set(set: &CandidateSet, db: &ContextDatabase, mode: ScopeMode) -> CandidateSet {
    let file = db.icalls.get(&set.icall_id).map(|i| i.site.file().to_string()).unwrap_or_default();
    scope_filter(set, &file, mode, db)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionSource {
    KelpPassthrough,
    LlmVerdict,
    AmbiguousKeep,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDecision {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Decision>,
    pub decision_source: DecisionSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinedResult {
    pub icall_id: String,
    pub call_text: String,
    pub static_candidates: BTreeSet<String>,
    pub resolver: Resolver,
    pub confirmed: bool,
    pub scoped_candidates: BTreeSet<String>,
    pub kept: BTreeSet<String>,
    pub pruned: BTreeSet<String>,
    pub per_edge: BTreeMap<String, EdgeDecision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summaries: Option<BTreeMap<String, SummaryBundle>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeError {
    pub icall_id: String,
    pub callee: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportTotals {
    pub icalls: usize,
    pub static_edges: usize,
    pub scoped_edges: usize,
    pub kept_edges: usize,
    pub pruned_edges: usize,
    pub passthrough_icalls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub project: String,
    pub config: RefineConfig,
    pub results: Vec<RefinedResult>,
    pub totals: ReportTotals,
    pub diagnostics: Vec<String>,
    pub errors: Vec<EdgeError>,
}

impl Report {
    /// Some edges were kept only because the backend failed.
    pub fn is_partial(&self) -> bool {
        !self.errors.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        crate::canonical_json(self)
    }

    pub fn exit_code(&self) -> i32 {
        if self.is_partial() {
            2
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, Default)]
struct CalleeSummary {
    local: Option<String>,
    global: Option<String>,
    errors: Vec<String>,
}

/// Caller/callee matching for one database, with callee summaries shared
/// across icalls.
pub struct Refiner<'a> {
    db: &'a ContextDatabase,
    engine: &'a Engine,
    config: &'a RefineConfig,
    callees: Mutex<HashMap<String, Arc<OnceLock<CalleeSummary>>>>,
}

fn is_backend_failure(e: &Error) -> bool {
    matches!(e, Error::Transport { .. } | Error::Protocol { .. })
}

impl<'a> Refiner<'a> {
    pub fn new(db: &'a ContextDatabase, engine: &'a Engine, config: &'a RefineConfig) -> Self {
        Refiner { db, engine, config, callees: Mutex::new(HashMap::new()) }
    }

    fn mode(&self) -> MatchMode {
        self.config.ablation_mode
    }

    fn callee_summary(&self, key: &str) -> CalleeSummary {
        let cell = self.callees.lock().expect("memo lock").entry(key.to_string()).or_default().clone();
        cell.get_or_init(|| self.summarize_callee(key)).clone()
    }

    fn summarize_callee(&self, key: &str) -> CalleeSummary {
        let mut out = CalleeSummary::default();
        let name = self.db.function(key).map_or(key, |f| f.name.as_str());
        let mut note = |e: Error| out.errors.push(e.to_string());
        if self.mode().uses_local() {
            match context::callee_local_context(key, self.db)
                .and_then(|c| self.engine.summarize(&c.text, PromptRole::CalleeLocal, name))
            {
                Ok(s) => out.local = Some(s),
                Err(e) if is_backend_failure(&e) => note(e),
                Err(e) => log::debug!("{key}: no callee local summary: {e}"),
            }
        }
        if self.mode().uses_global() {
            let sites: Vec<String> = context::callee_site_contexts(key, self.db, self.config.max_chain_depth)
                .into_iter()
                .filter(|c| !c.is_empty())
                .map(|c| c.render())
                .collect();
            match self.engine.summarize_callee_global(name, &sites) {
                Ok(s) => out.global = s,
                Err(e) => note(e),
            }
        }
        out
    }

    fn caller_summaries(&self, icall: &IcallRecord, errors: &mut Vec<String>) -> (Option<String>, Option<String>) {
        let mut local = None;
        let mut global = None;
        if self.mode().uses_local() {
            if let Some(c) = context::caller_local_context(icall, self.db) {
                match self.engine.summarize(&c.text, PromptRole::CallerLocal, "") {
                    Ok(s) => local = Some(s),
                    Err(e) => errors.push(e.to_string()),
                }
            }
        }
        if self.mode().uses_global() {
            let c = context::caller_global_context(icall, self.db);
            if !c.is_empty() {
                match self.engine.summarize(&c.render(), PromptRole::CallerGlobal, "") {
                    Ok(s) => global = Some(s),
                    Err(e) => errors.push(e.to_string()),
                }
            }
        }
        (local, global)
    }

    /// Refine one icall's static candidates. Never adds edges.
    pub fn refine(&self, resolution: &StaticResolution) -> (RefinedResult, Vec<EdgeError>) {
        let set = &resolution.set;
        let id = set.icall_id.clone();
        let icall = self.db.icalls.get(&id);
        let scoped = scoped_set(set, self.db, self.config.scope_mode).candidates;
        let mut result = RefinedResult {
            icall_id: id.clone(),
            call_text: icall.map(|i| i.site.call_text.clone()).unwrap_or_default(),
            static_candidates: set.candidates.clone(),
            resolver: set.resolver,
            confirmed: set.confirmed,
            scoped_candidates: scoped.clone(),
            kept: BTreeSet::new(),
            pruned: BTreeSet::new(),
            per_edge: BTreeMap::new(),
            summaries: None,
        };
        let mut errors = Vec::new();
        if set.confirmed && set.resolver == Resolver::KelpLite {
            for c in &scoped {
                result.per_edge.insert(
                    c.clone(),
                    EdgeDecision { verdict: None, decision_source: DecisionSource::KelpPassthrough, error: None },
                );
            }
            result.kept = scoped;
            return (result, errors);
        }
        let Some(icall) = icall else {
            for c in &scoped {
                let message = "icall not in database".to_string();
                errors.push(EdgeError { icall_id: id.clone(), callee: c.clone(), message: message.clone() });
                result.per_edge.insert(
                    c.clone(),
                    EdgeDecision { verdict: None, decision_source: DecisionSource::AmbiguousKeep, error: Some(message) },
                );
            }
            result.kept = scoped;
            return (result, errors);
        };
        let mut caller_errors = Vec::new();
        let (caller_local, caller_global) =
            if scoped.is_empty() { (None, None) } else { self.caller_summaries(icall, &mut caller_errors) };
        let mut archive = BTreeMap::new();
        for c in &scoped {
            let callee = self.callee_summary(c);
            let bundle = SummaryBundle {
                caller_local: caller_local.clone(),
                caller_global: caller_global.clone(),
                callee_local: callee.local.clone(),
                callee_global: callee.global.clone(),
            };
            let name = self.db.function(c).map_or(c.as_str(), |f| f.name.as_str());
            let upstream: Vec<String> = caller_errors.iter().chain(&callee.errors).cloned().collect();
            let edge = match self.engine.match_pair(&bundle, self.mode(), &icall.site.call_text, name) {
                Ok(v) => EdgeDecision {
                    verdict: Some(v.decision),
                    decision_source: if v.decision == Decision::Ambiguous {
                        DecisionSource::AmbiguousKeep
                    } else {
                        DecisionSource::LlmVerdict
                    },
                    error: None,
                },
                Err(e) => {
                    let failed = is_backend_failure(&e) || !upstream.is_empty();
                    let message = upstream.first().cloned().unwrap_or_else(|| e.to_string());
                    if failed {
                        errors.push(EdgeError { icall_id: id.clone(), callee: c.clone(), message: message.clone() });
                    }
                    EdgeDecision { verdict: None, decision_source: DecisionSource::AmbiguousKeep, error: Some(message) }
                }
            };
            if edge.verdict.is_none_or(Decision::keeps) {
                result.kept.insert(c.clone());
            } else {
                result.pruned.insert(c.clone());
            }
            result.per_edge.insert(c.clone(), edge);
            archive.insert(c.clone(), bundle);
        }
        if self.config.include_summaries_in_report {
            result.summaries = Some(archive);
        }
        (result, errors)
    }
}

fn pool(limit: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(limit)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Refine every static resolution and assemble the report.
pub fn refine_all(
    project: &str,
    db: &ContextDatabase,
    resolutions: &BTreeMap<String, StaticResolution>,
    engine: &Engine,
    config: &RefineConfig,
) -> Result<Report> {
    config.validate()?;
    let refiner = Refiner::new(db, engine, config);
    let items: Vec<&StaticResolution> = resolutions.values().collect();
    let outcomes: Vec<(RefinedResult, Vec<EdgeError>)> =
        pool(config.llm.concurrency_limit)?.install(|| items.par_iter().map(|r| refiner.refine(r)).collect());
    let mut totals = ReportTotals::default();
    let mut results = Vec::new();
    let mut errors = Vec::new();
    let mut diagnostics: Vec<String> = db.warnings.clone();
    for r in resolutions.values() {
        diagnostics.extend(r.diagnostics.iter().cloned());
    }
    for (r, e) in outcomes {
        totals.icalls += 1;
        totals.static_edges += r.static_candidates.len();
        totals.scoped_edges += r.scoped_candidates.len();
        totals.kept_edges += r.kept.len();
        totals.pruned_edges += r.pruned.len();
        if r.confirmed && r.resolver == Resolver::KelpLite {
            totals.passthrough_icalls += 1;
        }
        results.push(r);
        errors.extend(e);
    }
    results.sort_by(|a, b| a.icall_id.cmp(&b.icall_id));
    Ok(Report { project: project.to_string(), config: config.clone(), results, totals, diagnostics, errors })
}

/// Build, resolve and refine a project directory.
pub fn analyze_project(root: &Path, config: &RefineConfig, engine: &Engine) -> Result<Report> {
    config.validate()?;
    let db = ContextDatabase::build(root, &BuildConfig::default())?;
    let resolutions = resolve_all(&db, config.resolver_mode);
    refine_all(&root.display().to_string(), &db, &resolutions, engine, config)
}
