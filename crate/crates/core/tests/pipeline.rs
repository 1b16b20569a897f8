mod common;

use std::path::Path;

use sea_core::error::{Error, Result};
use sea_core::llm::{Backend, CompletionRequest, Engine, MatchMode, MockOracle, ResponseCache};
use sea_core::pipeline::{analyze_project, refine_all, DecisionSource, RefineConfig};
use sea_core::resolve::resolve_all;

/// Set SEA_UPDATE_GOLDEN=1 to rewrite the expected report.
#[test]
fn miniproj_report_matches_golden() {
    let db = common::miniproj_db();
    let config = common::mock_config(MockOracle::TokenOverlap, MatchMode::Full);
    let (report, _) = common::refine_db("miniproj", &db, &config, ResponseCache::in_memory());
    let actual = report.to_json().unwrap();
    let golden = common::fixtures().join("miniproj.report.json");
    if std::env::var_os("SEA_UPDATE_GOLDEN").is_some() {
        std::fs::write(&golden, &actual).unwrap();
    }
    let expected = std::fs::read_to_string(&golden).expect("golden report missing; rerun with SEA_UPDATE_GOLDEN=1");
    assert_eq!(actual, expected);
}

#[test]
fn warm_cache_is_byte_identical_and_offline() {
    let dir = tempfile::tempdir().unwrap();
    let (cold, warm, calls) = common::warm_cache_roundtrip(dir.path());
    assert_eq!(cold, warm);
    assert_eq!(calls, 0);
}

#[test]
fn runs_are_deterministic_across_thread_counts() {
    let db = common::miniproj_db();
    let mut outputs = Vec::new();
    for threads in [1, 8] {
        let mut config = common::mock_config(MockOracle::TokenOverlap, MatchMode::Full);
        config.llm.concurrency_limit = threads;
        let (report, _) = common::refine_db("miniproj", &db, &config, ResponseCache::in_memory());
        outputs.push(serde_json::to_string(&report.results).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn empty_project_gives_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::mock_config(MockOracle::TokenOverlap, MatchMode::Full);
    let engine = Engine::new(config.llm.clone(), ResponseCache::in_memory()).unwrap();
    let report = analyze_project(dir.path(), &config, &engine).unwrap();
    assert!(report.results.is_empty());
    assert_eq!(report.totals.icalls, 0);
    assert_eq!(report.exit_code(), 0);
}

struct Down;

impl Backend for Down {
    fn complete(&self, req: &CompletionRequest<'_>) -> Result<String> {
        Err(Error::Transport { fingerprint: req.fingerprint.to_string(), message: "connection refused".into() })
    }
}

#[test]
fn backend_failure_keeps_edges_and_flags_report() {
    let db = common::miniproj_db();
    let config = RefineConfig::default();
    let engine = Engine::with_backend(config.llm.clone(), Box::new(Down), ResponseCache::in_memory());
    let report = refine_all("miniproj", &db, &resolve_all(&db, config.resolver_mode), &engine, &config).unwrap();
    assert_eq!(report.exit_code(), 2);
    assert!(!report.errors.is_empty());
    for r in &report.results {
        assert_eq!(r.kept, r.scoped_candidates);
        for e in r.per_edge.values() {
            match e.decision_source {
                DecisionSource::KelpPassthrough => assert!(r.confirmed),
                DecisionSource::AmbiguousKeep => assert!(e.error.as_deref().is_some_and(|m| m.contains("connection refused"))),
                DecisionSource::LlmVerdict => panic!("no verdict can come from a dead backend"),
            }
        }
    }
}

#[test]
fn mock_oracles_bracket_the_static_sets() {
    let bad = common::mock_algebra_violations();
    assert!(bad.is_empty(), "{}", bad.join("\n"));
}

#[test]
fn analyze_matches_explicit_steps() {
    let root = common::fixtures().join("miniproj");
    let config = common::mock_config(MockOracle::TokenOverlap, MatchMode::Full);
    let engine = Engine::new(config.llm.clone(), ResponseCache::in_memory()).unwrap();
    let a = analyze_project(Path::new(&root), &config, &engine).unwrap();
    let (b, _) = common::refine_db(&root.display().to_string(), &common::miniproj_db(), &config, ResponseCache::in_memory());
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
}
