//! Worked examples: simple pointer, struct-field confinement, and an
//! escaping field that falls back to first-layer matching.

mod common;

use std::collections::BTreeSet;

use sea_core::context;
use sea_core::evaluation::{categorize_icall, IcallCategory};
use sea_core::llm::{MatchMode, MockOracle, ResponseCache};
use sea_core::pipeline::DecisionSource;
use sea_core::resolve::{resolve_static, Resolver, ResolverMode};

fn set(names: &[&str]) -> BTreeSet<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn resolve(file: &str, id: &str) -> sea_core::resolve::StaticResolution {
    let db = common::example_db(file);
    let icall = db.icalls.get(id).unwrap_or_else(|| panic!("{id} not in {:?}", db.icalls.keys()));
    resolve_static(icall, &db, ResolverMode::Cascade)
}

#[test]
fn simple_pointer_is_confirmed() {
    let r = resolve("simple_pointer.c", "simple_pointer.c:7:12");
    assert_eq!(r.winner(), Resolver::KelpLite);
    assert!(r.set.confirmed);
    assert_eq!(r.set.candidates, set(&["scale_double"]));
    assert_eq!(r.trail.len(), 1);
    assert_eq!(categorize_icall(&r), IcallCategory::KelpExclusive);

    let other = resolve("simple_pointer.c", "simple_pointer.c:13:12");
    assert_eq!(other.set.candidates, set(&["scale_triple"]));
}

#[test]
fn simple_pointer_within_flta() {
    let db = common::example_db("simple_pointer.c");
    let icall = &db.icalls["simple_pointer.c:7:12"];
    let flta = resolve_static(icall, &db, ResolverMode::Flta);
    assert_eq!(flta.set.candidates, set(&["scale_double", "scale_triple"]));
}

#[test]
fn module_field_is_confined() {
    let r = resolve("module_ctx.c", "module_ctx.c:38:12");
    assert_eq!(r.winner(), Resolver::Mlta);
    assert!(!r.set.confirmed);
    assert_eq!(r.set.candidates, set(&["ngx_http_log_create_main_conf"]));
    assert_eq!(r.trail.iter().map(|s| s.resolver).collect::<Vec<_>>(), [Resolver::KelpLite, Resolver::Mlta]);
    assert!(r.trail[0].declined.is_some());
    assert_eq!(categorize_icall(&r), IcallCategory::MltaExclusive);

    let db = common::example_db("module_ctx.c");
    let flta = resolve_static(&db.icalls["module_ctx.c:38:12"], &db, ResolverMode::Flta);
    assert!(r.set.candidates.is_subset(&flta.set.candidates));
    assert!(flta.set.candidates.contains("ngx_http_log_create_loc_conf"));
}

#[test]
fn module_context_carries_struct_definition() {
    let db = common::example_db("module_ctx.c");
    let global = context::caller_global_context(&db.icalls["module_ctx.c:38:12"], &db);
    let text = global.render();
    assert!(text.contains("void *(*create_main_conf)(ngx_conf_t *cf);"), "{text}");
    assert!(text.contains("ngx_http_module_t"));

    let sites = context::callee_site_contexts("ngx_http_log_create_main_conf", &db, context::DEFAULT_MAX_DEPTH);
    assert_eq!(sites.len(), 1);
    assert!(sites[0].render().contains("ngx_http_log_module_ctx"));
}

#[test]
fn escaped_field_falls_back_to_flta() {
    let r = resolve("bind9_escape.c", "bind9_escape.c:36:5");
    assert_eq!(r.winner(), Resolver::Flta);
    assert_eq!(r.set.candidates, set(&["isc_log_error_callback", "towire_compare"]));
    assert_eq!(r.trail.len(), 3);
    assert!(r.trail[..2].iter().all(|s| s.declined.is_some()));
    assert_eq!(categorize_icall(&r), IcallCategory::FltaExclusive);
}

#[test]
fn refinement_prunes_the_unrelated_comparator() {
    let db = common::example_db("bind9_escape.c");
    let config = common::mock_config(MockOracle::TokenOverlap, MatchMode::Full);
    let (report, _) = common::refine_db("bind9", &db, &config, ResponseCache::in_memory());
    let r = report.results.iter().find(|r| r.icall_id == "bind9_escape.c:36:5").unwrap();
    assert_eq!(r.kept, set(&["isc_log_error_callback"]));
    assert_eq!(r.pruned, set(&["towire_compare"]));
    assert!(r.per_edge.values().all(|e| e.decision_source == DecisionSource::LlmVerdict));
    assert_eq!(report.exit_code(), 0);
}

#[test]
fn confirmed_sets_bypass_matching() {
    let db = common::example_db("simple_pointer.c");
    let config = common::mock_config(MockOracle::AlwaysNo, MatchMode::Full);
    let (report, engine) = common::refine_db("simple", &db, &config, ResponseCache::in_memory());
    for r in &report.results {
        assert_eq!(r.kept, r.static_candidates);
        assert!(r.per_edge.values().all(|e| e.decision_source == DecisionSource::KelpPassthrough));
    }
    assert_eq!(engine.backend_calls(), 0);
}
