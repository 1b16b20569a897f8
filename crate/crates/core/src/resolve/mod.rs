//! Static candidate resolution: first-layer type analysis (FLTA), struct
//! field confinement (MLTA), and an intraprocedural simple-pointer resolver
//! (KelpLite), tried most precise first with fallback.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::db::{ContextDatabase, IcallRecord, StoredValue, TypeExpr, VarScope};
use crate::frontend::syntax::file_dir;
use crate::frontend::PointerKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Resolver {
    #[serde(rename = "FLTA")]
    Flta,
    #[serde(rename = "MLTA")]
    Mlta,
    #[serde(rename = "KelpLite")]
    KelpLite,
}

impl fmt::Display for Resolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resolver::Flta => "FLTA",
            Resolver::Mlta => "MLTA",
            Resolver::KelpLite => "KelpLite",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub icall_id: String,
    pub candidates: BTreeSet<String>,
    pub resolver: Resolver,
    pub confirmed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrailStep {
    pub resolver: Resolver,
    /// `None` for the winner, the reason otherwise.
    pub declined: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticResolution {
    pub set: CandidateSet,
    pub trail: Vec<TrailStep>,
    pub diagnostics: Vec<String>,
}

impl StaticResolution {
    pub fn winner(&self) -> Resolver {
        self.set.resolver
    }
}

/// Which resolvers the cascade may use. FLTA is always the last resort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResolverMode {
    #[default]
    Cascade,
    Flta,
    Mlta,
    KelpLite,
}

impl ResolverMode {
    fn chain(self) -> &'static [Resolver] {
        match self {
            ResolverMode::Cascade => &[Resolver::KelpLite, Resolver::Mlta],
            ResolverMode::KelpLite => &[Resolver::KelpLite],
            ResolverMode::Mlta => &[Resolver::Mlta],
            ResolverMode::Flta => &[],
        }
    }
}

impl FromStr for ResolverMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cascade" => Ok(ResolverMode::Cascade),
            "flta" => Ok(ResolverMode::Flta),
            "mlta" => Ok(ResolverMode::Mlta),
            "kelp-lite" => Ok(ResolverMode::KelpLite),
            other => Err(format!("unknown resolver `{other}` (expected cascade, flta, mlta or kelp-lite)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScopeMode {
    /// Candidates defined in the caller file's directory or below.
    #[default]
    Subtree,
    Project,
}

impl FromStr for ScopeMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "subtree" | "directory-subtree" => Ok(ScopeMode::Subtree),
            "project" | "whole-project" => Ok(ScopeMode::Project),
            other => Err(format!("unknown scope `{other}` (expected subtree or project)")),
        }
    }
}

/// Function types decay to pointers in parameter and argument position.
fn decayed(t: &TypeExpr) -> TypeExpr {
    if t.is_function_like() && t.pointer_depth == 0 {
        t.address_of()
    } else {
        t.clone()
    }
}

/// Conservative per-parameter type compatibility.
pub fn types_match(arg: &TypeExpr, param: &TypeExpr) -> bool {
    if arg.is_unknown || param.is_unknown {
        return true;
    }
    let (a, p) = (decayed(arg), decayed(param));
    if a.is_pointer() && p.is_pointer() && (a.is_generic_pointer() || p.is_generic_pointer()) {
        return true;
    }
    a.resolved_base == p.resolved_base && a.pointer_depth == p.pointer_depth
}

/// Whether a function with these parameters can receive these arguments.
pub fn signature_accepts(arg_types: &[TypeExpr], params: &[TypeExpr], variadic: bool) -> bool {
    let arity_ok = arg_types.len() == params.len() || (variadic && arg_types.len() >= params.len());
    arity_ok && params.iter().zip(arg_types).all(|(p, a)| types_match(a, p))
}

/// All address-taken functions whose signature accepts the call's arguments.
pub fn flta_candidates(icall: &IcallRecord, db: &ContextDatabase) -> (CandidateSet, Vec<String>) {
    let mut diags = Vec::new();
    let candidates = if !icall.site.args_complete {
        diags.push(format!("{}: argument list not parsed; all address-taken functions kept", icall.site.id));
        db.candidate_functions().map(|f| f.key.clone()).collect()
    } else {
        db.candidate_functions()
            .filter(|f| {
                let params: Vec<TypeExpr> = f.parameters.iter().map(|p| p.type_expr.clone()).collect();
                signature_accepts(&icall.arg_types, &params, f.is_variadic)
            })
            .map(|f| f.key.clone())
            .collect()
    };
    let set = CandidateSet { icall_id: icall.site.id.clone(), candidates, resolver: Resolver::Flta, confirmed: false };
    (set, diags)
}

/// Field-confinement set for `(struct_name, field)`, or the reason it is not usable.
pub fn confinement(db: &ContextDatabase, struct_name: &str, field: &str) -> Result<BTreeSet<String>, String> {
    let has_field = db.struct_info_map.get(struct_name).is_some_and(|s| s.field(field).is_some());
    let mut set = BTreeSet::new();
    for store in &db.field_stores {
        let same_field = store.field.as_deref() == Some(field);
        match &store.struct_name {
            None if same_field && has_field => {
                return Err(format!("store into `{field}` through an unknown-typed object escapes {struct_name}.{field}"));
            }
            Some(s) if s == struct_name && (same_field || store.field.is_none()) => match &store.value {
                StoredValue::Function(k) => {
                    set.insert(k.clone());
                }
                StoredValue::Other(text) if same_field => {
                    return Err(format!("non-function value `{text}` stored into {struct_name}.{field}"));
                }
                _ => {}
            },
            _ => {}
        }
    }
    Ok(set)
}

pub fn mlta_candidates(icall: &IcallRecord, db: &ContextDatabase, flta: &CandidateSet) -> Result<CandidateSet, String> {
    if !matches!(icall.site.pointer_expr.kind, PointerKind::StructFieldAccess { .. }) {
        return Err("callee is not a struct field".into());
    }
    let (Some(s), Some(f)) = (&icall.pointer.struct_name, &icall.pointer.field) else {
        return Err("struct type of the field access is unknown".into());
    };
    let confined = confinement(db, s, f)?;
    if confined.is_empty() {
        return Err(format!("empty confinement set for {s}.{f}"));
    }
    let candidates: BTreeSet<String> = confined.intersection(&flta.candidates).cloned().collect();
    if candidates.is_empty() {
        return Err(format!("no confined function for {s}.{f} passes type matching"));
    }
    Ok(CandidateSet { icall_id: icall.site.id.clone(), candidates, resolver: Resolver::Mlta, confirmed: false })
}

/// Resolve a direct function name as seen from `file` to a defined function key.
fn function_key(db: &ContextDatabase, name: &str, file: &str) -> Option<String> {
    let qualified = format!("{name}@{file}");
    if db.function_map.contains_key(&qualified) {
        return Some(qualified);
    }
    db.function_map.get(name).map(|f| f.key.clone())
}

pub fn resolve_simple_icall(icall: &IcallRecord, db: &ContextDatabase, flta: &CandidateSet) -> Result<CandidateSet, String> {
    if !matches!(icall.site.pointer_expr.kind, PointerKind::PlainVariable { .. }) {
        return Err("callee is not a plain variable".into());
    }
    let var = icall.pointer.var.as_ref().ok_or("callee variable has no visible declaration")?;
    if var.scope != VarScope::Local {
        return Err(format!("`{}` is not a local variable", var.name));
    }
    let func = icall
        .enclosing_key
        .as_ref()
        .and_then(|k| db.function_map.get(k))
        .ok_or("enclosing function unknown")?;
    let local = var.span.as_ref().and_then(|s| func.local(s)).ok_or("local declaration not recorded")?;
    if local.address_taken {
        return Err(format!("address of `{}` is taken", var.name));
    }
    if local.other_writes {
        return Err(format!("`{}` is modified other than by assignment", var.name));
    }
    if local.defs.is_empty() {
        return Err(format!("`{}` is never assigned", var.name));
    }
    let mut candidates = BTreeSet::new();
    for def in &local.defs {
        let name = match def.strip_casts() {
            e @ crate::frontend::Expr::Ident { .. } | e @ crate::frontend::Expr::AddrOf { .. } => e.as_designator(),
            _ => None,
        }
        .ok_or_else(|| format!("`{}` is assigned a non-function value", var.name))?;
        let key = function_key(db, name, &func.file)
            .ok_or_else(|| format!("`{name}` assigned to `{}` is not a defined function", var.name))?;
        candidates.insert(key);
    }
    if !candidates.is_subset(&flta.candidates) {
        return Err("assigned functions do not all pass type matching".into());
    }
    Ok(CandidateSet { icall_id: icall.site.id.clone(), candidates, resolver: Resolver::KelpLite, confirmed: true })
}

/// Run the cascade for one icall.
pub fn resolve_static(icall: &IcallRecord, db: &ContextDatabase, mode: ResolverMode) -> StaticResolution {
    let (flta, mut diagnostics) = flta_candidates(icall, db);
    let mut trail = Vec::new();
    let enclosing_known = icall.enclosing_key.as_ref().is_some_and(|k| db.function_map.contains_key(k));
    if !enclosing_known {
        diagnostics.push(format!("{}: enclosing function unknown; FLTA only", icall.site.id));
    }
    for &r in mode.chain() {
        if !enclosing_known {
            trail.push(TrailStep { resolver: r, declined: Some("enclosing function unknown".into()) });
            continue;
        }
        let attempt = match r {
            Resolver::KelpLite => resolve_simple_icall(icall, db, &flta),
            Resolver::Mlta => mlta_candidates(icall, db, &flta),
            Resolver::Flta => unreachable!("FLTA is the fallback"),
        };
        match attempt {
            Ok(set) => {
                trail.push(TrailStep { resolver: r, declined: None });
                return StaticResolution { set, trail, diagnostics };
            }
            Err(reason) => trail.push(TrailStep { resolver: r, declined: Some(reason) }),
        }
    }
    trail.push(TrailStep { resolver: Resolver::Flta, declined: None });
    StaticResolution { set: flta, trail, diagnostics }
}

/// Keep candidates defined at or below the caller file's directory.
/// Confirmed sets are never filtered.
pub fn scope_filter(set: &CandidateSet, caller_file: &str, mode: ScopeMode, db: &ContextDatabase) -> CandidateSet {
    if mode == ScopeMode::Project || set.confirmed {
        return set.clone();
    }
    let dir = file_dir(caller_file);
    let candidates = set
        .candidates
        .iter()
        .filter(|k| db.function_map.get(*k).is_some_and(|f| in_subtree(&f.file, dir)))
        .cloned()
        .collect();
    CandidateSet { candidates, ..set.clone() }
}

pub fn in_subtree(file: &str, dir: &str) -> bool {
    dir.is_empty() || file.strip_prefix(dir).is_some_and(|rest| rest.starts_with('/'))
}

/// Static resolution of every icall, keyed by icall id.
pub fn resolve_all(db: &ContextDatabase, mode: ResolverMode) -> BTreeMap<String, StaticResolution> {
    db.icalls
        .par_iter()
        .map(|(id, icall)| (id.clone(), resolve_static(icall, db, mode)))
        .collect()
}
