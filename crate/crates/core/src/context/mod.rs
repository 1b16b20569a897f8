//! Context queries over the database: the local context (function text) and
//! global context (declarations, struct definitions, type aliases, site
//! texts, call chains) of callers and callees.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::db::{AddressTakenSite, ContextDatabase, IcallRecord, ParamUse, PointerFacts, SiteKind, VarScope};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_DEPTH: usize = 4;
pub const FRAGMENT_CAP: usize = 4000;
pub const TRUNCATION_MARKER: &str = "[truncated]";

/// Cut `text` to at most `cap` characters, marking the cut.
pub fn cap_text(text: &str, cap: usize) -> String {
    match text.char_indices().nth(cap) {
        None => text.to_string(),
        Some((byte, _)) => format!("{}\n{TRUNCATION_MARKER}", &text[..byte]),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalContext {
    pub owner: String,
    pub text: String,
    /// The function overlaps a parse error region.
    pub partial: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FragmentKind {
    VarDeclaration,
    StructDefinition,
    TypeAlias,
    AssignmentSite,
    InitializerSite,
    CallChain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fragment {
    pub kind: FragmentKind,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalContext {
    pub owner: String,
    pub fragments: Vec<Fragment>,
    /// Something about this context is known to be incomplete.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl GlobalContext {
    fn new(owner: impl Into<String>) -> Self {
        GlobalContext { owner: owner.into(), fragments: Vec::new(), flags: Vec::new() }
    }

    /// Add a fragment unless an identical one is present.
    pub fn push(&mut self, kind: FragmentKind, text: &str) {
        let text = cap_text(text.trim(), FRAGMENT_CAP);
        if text.is_empty() || self.fragments.iter().any(|f| f.kind == kind && f.text == text) {
            return;
        }
        self.fragments.push(Fragment { kind, text });
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }

    pub fn kinds(&self) -> BTreeSet<FragmentKind> {
        self.fragments.iter().map(|f| f.kind).collect()
    }

    /// Fragment texts separated by blank lines.
    pub fn render(&self) -> String {
        self.fragments.iter().map(|f| f.text.as_str()).collect::<Vec<_>>().join("\n\n")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainLink {
    pub call_stmt_text: String,
    pub target_declarator_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChainTerminal {
    AssignedInTarget { assignment_text: String, target: Box<PointerFacts> },
    DirectlyInvoked { call_text: String },
    EndsAtIcall { call_text: String },
    DepthLimit,
    Cycle,
    /// The value could not be followed further (callee outside the project,
    /// parameter not used).
    Untraced { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallChain {
    pub links: Vec<ChainLink>,
    pub terminal: ChainTerminal,
}

impl CallChain {
    pub fn render(&self) -> String {
        let mut s = String::from("call chain:");
        for (i, l) in self.links.iter().enumerate() {
            let _ = write!(s, "\n{}. {} -> {}", i + 1, l.call_stmt_text, l.target_declarator_text);
        }
        let end = match &self.terminal {
            ChainTerminal::AssignedInTarget { assignment_text, .. } => format!("assigned: {assignment_text}"),
            ChainTerminal::DirectlyInvoked { call_text } => format!("invoked: {call_text}"),
            ChainTerminal::EndsAtIcall { call_text } => format!("passed to indirect call: {call_text}"),
            ChainTerminal::DepthLimit => "depth limit reached".into(),
            ChainTerminal::Cycle => "cycle".into(),
            ChainTerminal::Untraced { reason } => format!("not traced: {reason}"),
        };
        let _ = write!(s, "\nend: {end}");
        s
    }
}

pub fn caller_local_context(icall: &IcallRecord, db: &ContextDatabase) -> Option<LocalContext> {
    let f = icall.enclosing_key.as_ref().and_then(|k| db.function_map.get(k))?;
    Some(LocalContext { owner: f.key.clone(), text: f.body_text.clone(), partial: f.partial })
}

pub fn callee_local_context(key: &str, db: &ContextDatabase) -> Result<LocalContext> {
    let f = db
        .function(key)
        .ok_or_else(|| Error::Contract(format!("no definition for candidate `{key}`")))?;
    Ok(LocalContext { owner: f.key.clone(), text: f.body_text.clone(), partial: f.partial })
}

/// Declarations, struct definitions and aliases tied to a pointer expression.
fn pointer_fragments(ctx: &mut GlobalContext, facts: &PointerFacts, db: &ContextDatabase, with_var: bool) {
    if let (true, Some(var)) = (with_var, &facts.var) {
        let text = match var.scope {
            VarScope::Global => db.global_var_map.get(&var.name).map_or(var.decl_text.as_str(), |g| g.decl_text.as_str()),
            VarScope::Local | VarScope::Param => var.decl_text.as_str(),
        };
        ctx.push(FragmentKind::VarDeclaration, text);
    }
    let alias_texts: Vec<&str> = facts
        .aliases
        .iter()
        .filter_map(|a| db.type_alias_map.get(a))
        .map(|a| a.definition_text.as_str())
        .collect();
    if let Some(s) = facts.struct_name.as_ref().and_then(|s| db.struct_info_map.get(s)) {
        // A `typedef struct {...} T;` alias already carries the definition.
        if !alias_texts.iter().any(|t| t.contains(&s.definition_text)) {
            ctx.push(FragmentKind::StructDefinition, &s.definition_text);
        }
    }
    for t in alias_texts {
        ctx.push(FragmentKind::TypeAlias, t);
    }
}

pub fn caller_global_context(icall: &IcallRecord, db: &ContextDatabase) -> GlobalContext {
    let mut ctx = GlobalContext::new(icall.site.id.clone());
    pointer_fragments(&mut ctx, &icall.pointer, db, true);
    ctx
}

/// Follow a function value passed as argument `arg_index` of `call_text`.
pub fn build_call_chain(
    call_text: &str,
    callee_keys: &[String],
    is_icall: bool,
    arg_index: usize,
    db: &ContextDatabase,
    max_depth: usize,
) -> CallChain {
    let mut links = Vec::new();
    let mut visited = BTreeSet::new();
    let mut call = call_text.to_string();
    let mut keys = callee_keys.to_vec();
    let mut icall = is_icall;
    let mut index = arg_index;
    let terminal = loop {
        if icall {
            break ChainTerminal::EndsAtIcall { call_text: call };
        }
        let Some(f) = keys.first().and_then(|k| db.function_map.get(k)) else {
            break ChainTerminal::Untraced { reason: format!("callee of `{call}` is not defined in the project") };
        };
        if !visited.insert((f.key.clone(), index)) {
            break ChainTerminal::Cycle;
        }
        if links.len() >= max_depth {
            break ChainTerminal::DepthLimit;
        }
        links.push(ChainLink { call_stmt_text: call.clone(), target_declarator_text: f.declarator_text.clone() });
        match f.param_uses.iter().find(|u| u.index() == index) {
            None => break ChainTerminal::Untraced { reason: format!("parameter {index} of `{}` is not used", f.name) },
            Some(ParamUse::Assigned { text, target, .. }) => {
                break ChainTerminal::AssignedInTarget { assignment_text: text.clone(), target: Box::new(target.clone()) }
            }
            Some(ParamUse::Invoked { call_text, .. }) => break ChainTerminal::DirectlyInvoked { call_text: call_text.clone() },
            Some(ParamUse::Passed { call_text, arg_index, callee_keys, is_icall, .. }) => {
                call = call_text.clone();
                keys = callee_keys.clone();
                icall = *is_icall;
                index = *arg_index;
            }
        }
    };
    CallChain { links, terminal }
}

/// Global context of one address-taken site of `key`.
pub fn site_context(key: &str, site: &AddressTakenSite, db: &ContextDatabase, max_depth: usize) -> GlobalContext {
    let mut ctx = GlobalContext::new(key);
    match &site.site_kind {
        SiteKind::Assignment { stmt_text, target, .. } => {
            pointer_fragments(&mut ctx, target, db, true);
            ctx.push(FragmentKind::AssignmentSite, stmt_text);
        }
        SiteKind::Initializer { decl_text, target, .. } => {
            pointer_fragments(&mut ctx, target, db, false);
            ctx.push(FragmentKind::InitializerSite, decl_text);
        }
        SiteKind::CallArgument { call_text, arg_index, callee_keys, is_icall, .. } => {
            let chain = build_call_chain(call_text, callee_keys, *is_icall, *arg_index, db, max_depth);
            ctx.push(FragmentKind::CallChain, &chain.render());
            match &chain.terminal {
                ChainTerminal::AssignedInTarget { target, .. } => pointer_fragments(&mut ctx, target, db, true),
                ChainTerminal::EndsAtIcall { .. } => ctx.flags.push("call chain ends at an indirect call".into()),
                ChainTerminal::Untraced { reason } => ctx.flags.push(reason.clone()),
                _ => {}
            }
        }
    }
    ctx
}

/// One global context per address-taken site, in database site order.
pub fn callee_site_contexts(key: &str, db: &ContextDatabase, max_depth: usize) -> Vec<GlobalContext> {
    db.sites_of(key).into_iter().map(|s| site_context(key, s, db, max_depth)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHAINS: &str = "struct tbl { int (*cmp)(int, int); };\nstatic struct tbl *table;\nint cmp(int a, int b) { return a - b; }\nvoid register_handler(int (*h)(int, int)) { table->cmp = h; }\nvoid apply(int (*cb)(int, int)) { cb(1, 2); }\nvoid wrap(int (*g)(int, int)) { wrap(g); }\nvoid hop(int (*h)(int, int)) { register_handler(h); }\nvoid main_(void) { register_handler(cmp); apply(cmp); wrap(cmp); hop(cmp); }\n";

    fn chain_of(db: &ContextDatabase, callee: &str) -> CallChain {
        let site = db.func_to_call_exprs["cmp"]
            .iter()
            .find(|s| matches!(&s.site_kind, SiteKind::CallArgument { call_text, .. } if call_text.starts_with(callee)))
            .unwrap();
        let SiteKind::CallArgument { call_text, callee_keys, is_icall, arg_index, .. } = &site.site_kind else {
            unreachable!()
        };
        build_call_chain(call_text, callee_keys, *is_icall, *arg_index, db, DEFAULT_MAX_DEPTH)
    }

    #[test]
    fn chain_terminals() {
        let db = ContextDatabase::from_sources(&[("a.c", CHAINS)]);
        let c = chain_of(&db, "register_handler");
        assert_eq!(c.links.len(), 1);
        assert!(matches!(&c.terminal, ChainTerminal::AssignedInTarget { assignment_text, .. } if assignment_text == "table->cmp = h;"));
        assert!(matches!(chain_of(&db, "apply").terminal, ChainTerminal::DirectlyInvoked { .. }));
        let w = chain_of(&db, "wrap");
        assert_eq!(w.terminal, ChainTerminal::Cycle);
        assert_eq!(w.links.len(), 1);
        assert_eq!(chain_of(&db, "hop").links.len(), 2);
    }

    #[test]
    fn depth_limit() {
        let db = ContextDatabase::from_sources(&[("a.c", CHAINS)]);
        let site = &db.func_to_call_exprs["cmp"].iter().find(|s| matches!(&s.site_kind, SiteKind::CallArgument { call_text, .. } if call_text.starts_with("hop"))).unwrap().site_kind;
        let SiteKind::CallArgument { call_text, callee_keys, is_icall, arg_index, .. } = site else { unreachable!() };
        let c = build_call_chain(call_text, callee_keys, *is_icall, *arg_index, &db, 1);
        assert_eq!(c.terminal, ChainTerminal::DepthLimit);
        assert_eq!(c.links.len(), 1);
    }

    #[test]
    fn assigned_chain_pulls_struct_definition() {
        let db = ContextDatabase::from_sources(&[("a.c", CHAINS)]);
        let ctxs = callee_site_contexts("cmp", &db, DEFAULT_MAX_DEPTH);
        assert_eq!(ctxs.len(), 4);
        let first = &ctxs[0];
        assert!(first.kinds().contains(&FragmentKind::CallChain));
        assert!(first.fragments.iter().any(|f| f.kind == FragmentKind::StructDefinition && f.text.starts_with("struct tbl")));
    }

    #[test]
    fn caller_global_context_rules() {
        let src = "typedef void (*sdp_free_func_t)(void*);\nvoid f(void *p) { sdp_free_func_t fr; fr(p); }\nvoid g(void *p) { undeclared(p); }";
        let db = ContextDatabase::from_sources(&[("a.c", src)]);
        let icall = db.icalls.values().next().unwrap();
        let ctx = caller_global_context(icall, &db);
        assert_eq!(ctx.kinds(), BTreeSet::from([FragmentKind::VarDeclaration, FragmentKind::TypeAlias]));
        assert!(ctx.fragments.iter().any(|f| f.text == "typedef void (*sdp_free_func_t)(void*);"));
    }

    #[test]
    fn callee_local_requires_definition() {
        let db = ContextDatabase::from_sources(&[("a.c", "void f(void);\nint g(void) { return 0; }")]);
        assert!(callee_local_context("f", &db).is_err());
        assert_eq!(callee_local_context("g", &db).unwrap().text, "int g(void) { return 0; }");
    }

    #[test]
    fn fragments_are_capped() {
        let long = "x".repeat(FRAGMENT_CAP + 10);
        let capped = cap_text(&long, FRAGMENT_CAP);
        assert!(capped.ends_with(TRUNCATION_MARKER));
        assert_eq!(cap_text("short", FRAGMENT_CAP), "short");
    }
}
