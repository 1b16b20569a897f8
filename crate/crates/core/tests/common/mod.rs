#![allow(dead_code)]

pub mod gen;
pub mod type_table;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use sea_core::ContextDatabase;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// `// expect <key>: a b c` lines of a labeled fixture.
pub fn labels(src: &str) -> BTreeMap<String, Vec<String>> {
    src.lines()
        .filter_map(|l| l.trim().strip_prefix("// expect "))
        .filter_map(|l| l.split_once(':'))
        .map(|(k, v)| (k.trim().to_string(), v.split_whitespace().map(str::to_string).collect()))
        .collect()
}

pub fn corpus() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(fixtures().join("corpus"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "c"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect();
    out.sort();
    out
}

pub const MAP_KEYS: [&str; 8] =
    ["address_taken", "aliases", "structs", "globals", "functions", "declarations", "assignments", "calls"];

/// Observed keys of each labeled map.
pub fn observed(db: &ContextDatabase) -> BTreeMap<&'static str, BTreeSet<String>> {
    let keys = |m: Vec<&String>| m.into_iter().cloned().collect::<BTreeSet<_>>();
    BTreeMap::from([
        ("address_taken", db.address_taken.clone()),
        ("aliases", keys(db.type_alias_map.keys().collect())),
        ("structs", keys(db.struct_info_map.keys().collect())),
        ("globals", keys(db.global_var_map.keys().collect())),
        ("functions", keys(db.function_map.keys().collect())),
        ("declarations", keys(db.func_to_declarations.keys().collect())),
        ("assignments", keys(db.func_to_assignments.keys().collect())),
        ("calls", keys(db.func_to_call_exprs.keys().collect())),
    ])
}

/// Differences between a fixture's labels and its database, one line each.
pub fn discrepancies(name: &str, src: &str) -> Vec<String> {
    let db = ContextDatabase::from_sources(&[(name, src)]);
    let want = labels(src);
    let got = observed(&db);
    let mut out = Vec::new();
    for key in MAP_KEYS {
        let expected: BTreeSet<String> = want.get(key).cloned().unwrap_or_default().into_iter().collect();
        if expected != got[key] {
            out.push(format!("{name}: {key}: expected {expected:?}, got {:?}", got[key]));
        }
    }
    let icalls: usize = want.get("icalls").and_then(|v| v.first()).map_or(0, |n| n.parse().unwrap());
    if icalls != db.icalls.len() {
        out.push(format!("{name}: icalls: expected {icalls}, got {:?}", db.icalls.keys().collect::<Vec<_>>()));
    }
    out
}

/// Resolver-lattice and trail checks for every icall of a program.
pub fn lattice_violations(name: &str, src: &str) -> Vec<String> {
    use sea_core::resolve::{resolve_static, Resolver, ResolverMode};
    let db = ContextDatabase::from_sources(&[(name, src)]);
    let mut out = Vec::new();
    for (id, icall) in &db.icalls {
        let flta = resolve_static(icall, &db, ResolverMode::Flta);
        let mlta = resolve_static(icall, &db, ResolverMode::Mlta);
        let kelp = resolve_static(icall, &db, ResolverMode::KelpLite);
        let cascade = resolve_static(icall, &db, ResolverMode::Cascade);
        let f = &flta.set.candidates;
        if mlta.winner() == Resolver::Mlta && !mlta.set.candidates.is_subset(f) {
            out.push(format!("{id}: MLTA {:?} not within FLTA {f:?}", mlta.set.candidates));
        }
        if kelp.winner() == Resolver::KelpLite {
            if !kelp.set.candidates.is_subset(f) {
                out.push(format!("{id}: KelpLite {:?} not within FLTA {f:?}", kelp.set.candidates));
            }
            if mlta.winner() == Resolver::Mlta && !kelp.set.candidates.is_subset(&mlta.set.candidates) {
                out.push(format!("{id}: KelpLite {:?} not within MLTA {:?}", kelp.set.candidates, mlta.set.candidates));
            }
        }
        let winners: Vec<_> = cascade.trail.iter().filter(|s| s.declined.is_none()).collect();
        if winners.len() != 1 || cascade.trail.last().is_none_or(|s| s.declined.is_some()) {
            out.push(format!("{id}: trail {:?} does not end in exactly one winner", cascade.trail));
            continue;
        }
        let expected = match cascade.winner() {
            Resolver::KelpLite => &kelp.set,
            Resolver::Mlta => &mlta.set,
            Resolver::Flta => &flta.set,
        };
        if &cascade.set != expected || winners[0].resolver != cascade.winner() {
            out.push(format!("{id}: cascade result disagrees with its winner"));
        }
        if cascade.set.confirmed != (cascade.winner() == Resolver::KelpLite) {
            out.push(format!("{id}: only KelpLite results are confirmed"));
        }
    }
    out
}

pub fn example_source(name: &str) -> String {
    std::fs::read_to_string(fixtures().join("worked").join(name)).unwrap()
}

pub fn example_db(name: &str) -> ContextDatabase {
    ContextDatabase::from_sources(&[(name, example_source(name))])
}

pub fn mock_config(oracle: sea_core::llm::MockOracle, mode: sea_core::llm::MatchMode) -> sea_core::pipeline::RefineConfig {
    use sea_core::llm::{BackendSpec, LlmConfig};
    sea_core::pipeline::RefineConfig {
        ablation_mode: mode,
        llm: LlmConfig { backend: BackendSpec::Mock { oracle }, ..LlmConfig::default() },
        ..Default::default()
    }
}

/// Cascade resolution plus mock refinement over an in-memory database.
pub fn refine_db(
    project: &str,
    db: &ContextDatabase,
    config: &sea_core::pipeline::RefineConfig,
    cache: sea_core::llm::ResponseCache,
) -> (sea_core::pipeline::Report, sea_core::llm::Engine) {
    let engine = sea_core::llm::Engine::new(config.llm.clone(), cache).unwrap();
    let resolutions = sea_core::resolve::resolve_all(db, config.resolver_mode);
    let report = sea_core::pipeline::refine_all(project, db, &resolutions, &engine, config).unwrap();
    (report, engine)
}

pub fn miniproj_db() -> ContextDatabase {
    ContextDatabase::build(&fixtures().join("miniproj"), &Default::default()).unwrap()
}

pub fn miniproj_truth() -> sea_core::evaluation::GroundTruth {
    let text = std::fs::read_to_string(fixtures().join("miniproj/truth.json")).unwrap();
    sea_core::evaluation::GroundTruth::from_json(&text).unwrap().0
}

/// Metrics of FLTA-only keep-all and of the token-overlap refinement on the mini project.
pub fn miniproj_comparison() -> (sea_core::evaluation::MetricsReport, sea_core::evaluation::MetricsReport) {
    use sea_core::evaluation::{evaluate, predictions_from_refined, predictions_from_static};
    use sea_core::llm::{MatchMode, MockOracle};
    use sea_core::pipeline::StaticReport;
    use sea_core::resolve::{ResolverMode, ScopeMode};
    let db = miniproj_db();
    let truth = miniproj_truth();
    let flta = StaticReport::build("miniproj", &db, ResolverMode::Flta, ScopeMode::Subtree);
    let base = evaluate("FLTA", "miniproj", &predictions_from_static(&flta), &truth);
    let config = mock_config(MockOracle::TokenOverlap, MatchMode::Full);
    let (report, _) = refine_db("miniproj", &db, &config, sea_core::llm::ResponseCache::in_memory());
    let sea = evaluate("SEA", "miniproj", &predictions_from_refined(&report), &truth);
    (base, sea)
}

/// Always-yes must reproduce the scoped sets; always-no must keep only
/// confirmed passthrough sets.
pub fn mock_algebra_violations() -> Vec<String> {
    use sea_core::llm::{MatchMode, MockOracle, ResponseCache};
    let mut out = Vec::new();
    for (name, src) in corpus() {
        let db = ContextDatabase::from_sources(&[(name.as_str(), src.as_str())]);
        for oracle in [MockOracle::AlwaysYes, MockOracle::AlwaysNo] {
            let config = mock_config(oracle, MatchMode::Full);
            let (report, _) = refine_db(&name, &db, &config, ResponseCache::in_memory());
            for r in &report.results {
                let expected = match oracle {
                    MockOracle::AlwaysYes => r.scoped_candidates.clone(),
                    _ if r.confirmed => r.scoped_candidates.clone(),
                    _ => BTreeSet::new(),
                };
                if r.kept != expected {
                    out.push(format!("{name} {} under {oracle:?}: kept {:?}", r.icall_id, r.kept));
                }
            }
        }
    }
    out
}

/// Refines the mini project twice against one cache file; returns both
/// reports and the backend calls of the second run.
pub fn warm_cache_roundtrip(dir: &Path) -> (String, String, usize) {
    use sea_core::llm::{MatchMode, MockOracle, ResponseCache};
    let path = dir.join("cache.jsonl");
    let db = miniproj_db();
    let config = mock_config(MockOracle::TokenOverlap, MatchMode::Full);
    let (cold, _) = refine_db("miniproj", &db, &config, ResponseCache::open(&path).unwrap());
    let (warm, engine) = refine_db("miniproj", &db, &config, ResponseCache::open(&path).unwrap());
    (cold.to_json().unwrap(), warm.to_json().unwrap(), engine.backend_calls())
}
