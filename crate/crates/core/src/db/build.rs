//! Two-pass database construction.
//!
//! Pass 1 gathers name tables (aliases, structs, globals, enumerators,
//! function definitions and declarations) and the raw address-taken names of
//! each file. Pass 2 records address-taken sites, per-function facts,
//! indirect calls and field stores. Both passes run per file in parallel;
//! partial results merge associatively and independently of order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::frontend::decl::{anonymous_tag, decode_declaration};
use crate::frontend::expr::lower_expr;
use crate::frontend::functions::{enumerate_functions, top_level_items, RawFunction};
use crate::frontend::icall::strip_derefs;
use crate::frontend::scope::{walk_function, Scopes};
use crate::frontend::{
    discover_sources, icall_at, parse_path, unique_id, Expr, NodeKind, ParseDiagnostics, ParsedFile, ScopeInfo,
    SourceSpan, SyntaxNode,
};

use super::address_taken::identify_address_taken;
use super::infer::{Env, Tables};
use super::types::{resolve_type, resolve_type_checked, ResolveIssue, TypeExpr};
use super::{
    AddressTakenSite, ContextDatabase, FieldInfo, FieldStore, FunctionInfo, GlobalVar, IcallRecord, LocalVar, Param,
    ParamUse, PointerFacts, SiteKind, StoredValue, StructInfo, TypeAlias,
};

pub const DEFAULT_EXTENSIONS: &[&str] = &["c", "h"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub extensions: Vec<String>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig { extensions: DEFAULT_EXTENSIONS.iter().map(|s| s.to_string()).collect() }
    }
}

pub(crate) fn build_project(root: &Path, config: &BuildConfig) -> Result<ContextDatabase> {
    let paths = discover_sources(root, &config.extensions)?;
    let parsed = paths.par_iter().map(|p| parse_path(root, p)).collect::<Result<Vec<_>>>()?;
    Ok(build_from_parsed(parsed))
}

pub(crate) fn build_from_parsed(mut files: Vec<ParsedFile>) -> ContextDatabase {
    files.sort_by(|a, b| a.path.cmp(&b.path));
    let mut warnings = Vec::new();
    if files.is_empty() {
        warnings.push("empty project: no source files found".to_string());
    }
    let mut usable = Vec::new();
    for f in &files {
        if f.diagnostics.parse_succeeded {
            usable.push(f);
        } else {
            warnings.push(format!("{}: no syntax tree produced; file skipped", f.path));
        }
    }
    let pass1 = usable.par_iter().map(|f| Pass1::collect(f)).reduce(Pass1::default, Pass1::merge);
    let names = pass1.finish(&mut warnings);
    let pass2 = usable
        .par_iter()
        .map(|f| Pass2::collect(f, &names))
        .reduce(Pass2::default, Pass2::merge);
    assemble(names, pass2, warnings)
}

fn keep_min<K: Ord, V>(into: &mut BTreeMap<K, V>, from: BTreeMap<K, V>, rank: impl Fn(&V) -> SourceRank) {
    for (k, v) in from {
        match into.get(&k) {
            Some(existing) if rank(existing) <= rank(&v) => {}
            _ => {
                into.insert(k, v);
            }
        }
    }
}

type SourceRank = (bool, bool, SourceSpan);

/// First-pass results for a set of files.
#[derive(Debug, Default)]
pub(crate) struct Pass1 {
    aliases: BTreeMap<String, (TypeAlias, bool)>,
    structs: BTreeMap<String, (StructInfo, Vec<bool>)>,
    globals: BTreeMap<String, (GlobalVar, bool)>,
    enumerators: BTreeSet<String>,
    declared: BTreeSet<String>,
    defined: BTreeMap<String, BTreeSet<(String, bool)>>,
    return_texts: BTreeMap<String, BTreeSet<String>>,
    raw_taken: BTreeMap<String, BTreeSet<String>>,
    diagnostics: BTreeMap<String, ParseDiagnostics>,
}

fn field_declarations(body: &SyntaxNode) -> Vec<&SyntaxNode> {
    let mut out = Vec::new();
    let mut stack: Vec<&SyntaxNode> = body.children.iter().rev().collect();
    while let Some(n) = stack.pop() {
        if n.is("field_declaration") {
            out.push(n);
        } else if n.grammar.starts_with("preproc_") {
            stack.extend(n.children.iter().rev());
        }
    }
    out
}

fn first_typedef_name<'a>(typedef: &SyntaxNode, source: &'a str) -> Option<&'a str> {
    typedef
        .children_by_field("declarator")
        .next()
        .and_then(crate::frontend::decl::declarator_name)
        .map(|n| n.text(source))
}

impl Pass1 {
    fn collect(file: &ParsedFile) -> Pass1 {
        let src = &file.source;
        let mut p = Pass1::default();
        let mut stack: Vec<(&SyntaxNode, Option<&SyntaxNode>)> = vec![(&file.root, None)];
        while let Some((node, parent)) = stack.pop() {
            match node.grammar.as_str() {
                "type_definition" => {
                    let anon = first_typedef_name(node, src);
                    for d in decode_declaration(node, src, anon) {
                        let alias = TypeAlias {
                            name: d.name.clone(),
                            src_type_text: d.type_text.clone(),
                            type_expr: TypeExpr::unknown(d.type_text),
                            definition_text: file.text(node).to_string(),
                            span: node.span.clone(),
                        };
                        keep_min(&mut p.aliases, BTreeMap::from([(d.name, (alias, d.unknown))]), |a| {
                            (false, false, a.0.span.clone())
                        });
                    }
                }
                "struct_specifier" | "union_specifier" => {
                    if let Some(body) = node.child_by_field("body") {
                        let name = match node.child_by_field("name") {
                            Some(n) => file.text(n).to_string(),
                            None => match parent.filter(|p| p.is("type_definition")).and_then(|t| first_typedef_name(t, src)) {
                                Some(t) => t.to_string(),
                                None => anonymous_tag(&node.span),
                            },
                        };
                        let mut fields = Vec::new();
                        let mut unknown = Vec::new();
                        for fd in field_declarations(body) {
                            for d in decode_declaration(fd, src, None) {
                                if fields.iter().any(|f: &FieldInfo| f.name == d.name) {
                                    continue;
                                }
                                unknown.push(d.unknown);
                                fields.push(FieldInfo {
                                    name: d.name,
                                    type_expr: TypeExpr::unknown(d.type_text.clone()),
                                    type_text: d.type_text,
                                });
                            }
                        }
                        let info = StructInfo {
                            name: name.clone(),
                            is_union: node.is("union_specifier"),
                            fields,
                            definition_text: file.text(node).to_string(),
                            span: node.span.clone(),
                        };
                        keep_min(&mut p.structs, BTreeMap::from([(name, (info, unknown))]), |s| {
                            (false, false, s.0.span.clone())
                        });
                    }
                }
                "enumerator" => {
                    if let Some(n) = node.child_by_field("name") {
                        p.enumerators.insert(file.text(n).to_string());
                    }
                }
                _ => {}
            }
            stack.extend(node.children.iter().rev().map(|c| (c, Some(node))));
        }

        for item in top_level_items(&file.root) {
            if item.kind != NodeKind::Declaration {
                continue;
            }
            for d in decode_declaration(item, src, None) {
                if d.function.is_some() {
                    p.declared.insert(d.name);
                    continue;
                }
                let var = GlobalVar {
                    name: d.name.clone(),
                    type_expr: TypeExpr::unknown(d.type_text.clone()),
                    type_text: d.type_text,
                    init_text: d.init.map(|i| file.text(i).to_string()),
                    decl_text: file.text(item).to_string(),
                    is_static: d.is_static,
                    is_extern: d.is_extern,
                    span: d.name_span,
                };
                keep_min(&mut p.globals, BTreeMap::from([(d.name, (var, d.unknown))]), global_rank);
            }
        }

        let (functions, notes) = enumerate_functions(file);
        for f in &functions {
            p.defined.entry(f.name.clone()).or_default().insert((file.path.clone(), f.is_static));
            p.return_texts.entry(f.name.clone()).or_default().insert(f.return_type_text.clone());
        }
        let mut diag = file.diagnostics.clone();
        diag.notes.extend(notes);
        p.diagnostics.insert(file.path.clone(), diag);
        p.raw_taken.insert(file.path.clone(), identify_address_taken(file, &|_| false));
        p
    }

    fn merge(mut self, other: Pass1) -> Pass1 {
        keep_min(&mut self.aliases, other.aliases, |a| (false, false, a.0.span.clone()));
        keep_min(&mut self.structs, other.structs, |s| (false, false, s.0.span.clone()));
        keep_min(&mut self.globals, other.globals, global_rank);
        self.enumerators.extend(other.enumerators);
        self.declared.extend(other.declared);
        for (k, v) in other.defined {
            self.defined.entry(k).or_default().extend(v);
        }
        for (k, v) in other.return_texts {
            self.return_texts.entry(k).or_default().extend(v);
        }
        self.raw_taken.extend(other.raw_taken);
        self.diagnostics.extend(other.diagnostics);
        self
    }

    fn finish(self, warnings: &mut Vec<String>) -> Names {
        let mut tables = Tables {
            aliases: self.aliases.iter().map(|(k, (a, _))| (k.clone(), a.clone())).collect(),
            enumerators: self.enumerators,
            defined: self.defined,
            ..Default::default()
        };
        tables.declared = self.declared.into_iter().filter(|n| !tables.defined.contains_key(n)).collect();
        let mut resolved_aliases = BTreeMap::new();
        for (name, (mut alias, unknown)) in self.aliases {
            alias.type_expr = if unknown {
                TypeExpr::unknown(alias.src_type_text.clone())
            } else {
                let (t, issue) = resolve_type_checked(&alias.src_type_text, &tables);
                if let Some(ResolveIssue::CyclicAlias(n)) = issue {
                    warnings.push(format!("cyclic type alias chain through `{n}` (typedef {name})"));
                }
                t
            };
            resolved_aliases.insert(name, alias);
        }
        tables.aliases = resolved_aliases;
        for (name, (mut info, unknown)) in self.structs {
            for (f, unk) in info.fields.iter_mut().zip(unknown) {
                f.type_expr = if unk { TypeExpr::unknown(f.type_text.clone()) } else { resolve_type(&f.type_text, &tables) };
            }
            tables.structs.insert(name, info);
        }
        for (name, (mut var, unknown)) in self.globals {
            var.type_expr = if unknown { TypeExpr::unknown(var.type_text.clone()) } else { resolve_type(&var.type_text, &tables) };
            tables.globals.insert(name, var);
        }
        for (name, texts) in self.return_texts {
            let t = match texts.len() {
                1 => resolve_type(texts.iter().next().expect("one element"), &tables),
                _ => TypeExpr::unknown(""),
            };
            tables.returns.insert(name, t);
        }
        let mut address_taken = BTreeSet::new();
        for (file, names) in &self.raw_taken {
            for n in names {
                if !tables.is_variable(n) {
                    address_taken.extend(tables.resolve_function(n, file));
                }
            }
        }
        let scope_info = ScopeInfo {
            functions: tables.defined.keys().chain(tables.declared.iter()).cloned().collect(),
            global_vars: tables.globals.iter().map(|(k, g)| (k.clone(), g.type_text.clone())).collect(),
        };
        Names { tables, scope_info, address_taken, diagnostics: self.diagnostics }
    }
}

fn global_rank(g: &(GlobalVar, bool)) -> SourceRank {
    (g.0.is_extern, g.0.init_text.is_none(), g.0.span.clone())
}

/// Everything the second pass reads.
pub(crate) struct Names {
    tables: Tables,
    scope_info: ScopeInfo,
    address_taken: BTreeSet<String>,
    diagnostics: BTreeMap<String, ParseDiagnostics>,
}

#[derive(Debug, Default)]
pub(crate) struct Pass2 {
    functions: BTreeMap<String, FunctionInfo>,
    call_sites: Vec<(String, AddressTakenSite)>,
    decl_sites: Vec<(String, AddressTakenSite)>,
    assign_sites: Vec<(String, AddressTakenSite)>,
    icalls: BTreeMap<String, IcallRecord>,
    field_stores: Vec<FieldStore>,
}

/// One scalar leaf of an initializer with the struct field it lands in.
struct InitLeaf<'a> {
    node: &'a SyntaxNode,
    struct_name: Option<String>,
    field: Option<String>,
}

const MAX_INIT_DEPTH: usize = 32;

struct FileCtx<'a> {
    file: &'a ParsedFile,
    names: &'a Names,
    out: Pass2,
}

impl<'a> FileCtx<'a> {
    fn tables(&self) -> &'a Tables {
        &self.names.tables
    }

    fn keys_of(&self, name: &str) -> Vec<String> {
        self.tables()
            .resolve_function(name, &self.file.path)
            .into_iter()
            .filter(|k| self.names.address_taken.contains(k))
            .collect()
    }

    fn stored_values(&self, env: &Env<'_>, e: &Expr) -> Vec<StoredValue> {
        match e.strip_casts() {
            Expr::Conditional { then, otherwise } => {
                let mut v = self.stored_values(env, then);
                v.extend(self.stored_values(env, otherwise));
                v
            }
            e if e.is_null_constant() => vec![StoredValue::Null],
            e => match e.as_designator() {
                Some(n) if env.function_refs(e).contains(&n) => {
                    let keys = self.tables().resolve_function(n, &self.file.path);
                    keys.into_iter().map(StoredValue::Function).collect()
                }
                _ => vec![StoredValue::Other(expr_text(e))],
            },
        }
    }

    fn init_leaves<'n>(&self, node: &'n SyntaxNode, ty: &TypeExpr, ctx: (Option<String>, Option<String>), depth: usize, out: &mut Vec<InitLeaf<'n>>) {
        let src = &self.file.source;
        if !node.is("initializer_list") || depth > MAX_INIT_DEPTH {
            out.push(InitLeaf { node, struct_name: ctx.0, field: ctx.1 });
            return;
        }
        let error_leaves = |n: &'n SyntaxNode, ctx: &(Option<String>, Option<String>), out: &mut Vec<InitLeaf<'n>>| {
            for id in n.descendants().filter(|d| d.is("identifier")) {
                out.push(InitLeaf { node: id, struct_name: ctx.0.clone(), field: None });
            }
        };
        let info = if ty.pointer_depth == 0 { ty.aggregate_name().and_then(|s| self.tables().structs.get(s)) } else { None };
        if let Some(info) = info {
            let here = Some(info.name.clone());
            let mut idx = 0usize;
            let mut error_seen = false;
            for child in &node.children {
                if child.kind == NodeKind::Error {
                    error_seen = true;
                    error_leaves(child, &(here.clone(), None), out);
                    continue;
                }
                if child.is("initializer_pair") {
                    let mut cur_ty = ty.clone();
                    let mut cur_struct = here.clone();
                    let mut field = None;
                    for d in child.children_by_field("designator") {
                        if d.is("field_designator") {
                            let fname = d.children.first().map(|c| c.text(src).to_string()).unwrap_or_default();
                            let holder = cur_ty.aggregate_name().and_then(|s| self.tables().structs.get(s));
                            if cur_struct.as_deref() == Some(info.name.as_str()) && field.is_none() {
                                if let Some(pos) = info.fields.iter().position(|f| f.name == fname) {
                                    idx = pos + 1;
                                }
                            }
                            cur_struct = holder.map(|h| h.name.clone());
                            cur_ty = holder
                                .and_then(|h| h.field(&fname))
                                .map(|f| f.type_expr.clone())
                                .unwrap_or_else(|| TypeExpr::unknown(""));
                            field = Some(fname);
                        } else {
                            cur_ty = cur_ty.deref();
                        }
                    }
                    if let Some(value) = child.child_by_field("value") {
                        self.init_leaves(value, &cur_ty, (cur_struct, field), depth + 1, out);
                    }
                    continue;
                }
                let (field, fty) = if error_seen {
                    (None, TypeExpr::unknown(""))
                } else {
                    match info.fields.get(idx) {
                        Some(f) => (Some(f.name.clone()), f.type_expr.clone()),
                        None => (None, TypeExpr::unknown("")),
                    }
                };
                idx += 1;
                self.init_leaves(child, &fty, (here.clone(), field), depth + 1, out);
            }
            return;
        }
        let elem = ty.deref();
        for child in &node.children {
            if child.kind == NodeKind::Error {
                error_leaves(child, &ctx, out);
            } else if child.is("initializer_pair") {
                if let Some(value) = child.child_by_field("value") {
                    self.init_leaves(value, &elem, ctx.clone(), depth + 1, out);
                }
            } else {
                self.init_leaves(child, &elem, ctx.clone(), depth + 1, out);
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn record_initializer(
        &mut self,
        env: &Env<'_>,
        entity: &str,
        var_type: &TypeExpr,
        decl_text: &str,
        init: &SyntaxNode,
        enclosing: Option<(&str, &str)>,
    ) {
        let mut leaves = Vec::new();
        self.init_leaves(init, var_type, (None, None), 0, &mut leaves);
        let base = env.pointer_facts(&Expr::Ident { name: entity.to_string() });
        for leaf in leaves {
            let e = lower_expr(leaf.node, &self.file.source);
            if let Some(s) = &leaf.struct_name {
                for value in self.stored_values(env, &e) {
                    if leaf.field.is_none() && matches!(value, StoredValue::Other(_)) {
                        continue;
                    }
                    self.out.field_stores.push(FieldStore {
                        struct_name: Some(s.clone()),
                        field: leaf.field.clone(),
                        value,
                        span: leaf.node.span.clone(),
                    });
                }
            }
            for name in env.function_refs(&e) {
                let target = PointerFacts { struct_name: leaf.struct_name.clone(), field: leaf.field.clone(), ..base.clone() };
                for key in self.keys_of(name) {
                    self.out.decl_sites.push((
                        key,
                        AddressTakenSite {
                            function_name: name.to_string(),
                            site_kind: SiteKind::Initializer {
                                declared_entity: entity.to_string(),
                                decl_text: decl_text.to_string(),
                                enclosing_struct_or_var: leaf.struct_name.clone().unwrap_or_else(|| entity.to_string()),
                                field: leaf.field.clone(),
                                enclosing_function: enclosing.map(|e| e.0.to_string()),
                                target: target.clone(),
                            },
                            span: leaf.node.span.clone(),
                        },
                    ));
                }
            }
        }
    }
}

fn expr_text(e: &Expr) -> String {
    match e {
        Expr::Other { text } => text.clone(),
        Expr::Ident { name } => name.clone(),
        other => serde_json::to_string(other).unwrap_or_default(),
    }
}

/// Mutable state while walking one function body.
struct FnWalk<'f> {
    raw: &'f RawFunction<'f>,
    key: String,
    locals: Vec<LocalVar>,
    param_uses: Vec<ParamUse>,
    stmt_texts: HashMap<usize, String>,
    seen_ids: &'f mut BTreeMap<String, usize>,
}

impl FnWalk<'_> {
    fn param_index(&self, name: &str, scopes: &Scopes) -> Option<usize> {
        match scopes.lookup(name) {
            Some(b) if b.is_param => self.raw.shape.params.iter().position(|p| p.name.as_deref() == Some(name)),
            _ => None,
        }
    }

    fn local_mut(&mut self, name: &str, scopes: &Scopes) -> Option<&mut LocalVar> {
        let b = scopes.lookup(name).filter(|b| !b.is_param)?;
        self.locals.iter_mut().find(|l| l.span == b.span)
    }
}

impl Pass2 {
    fn collect(file: &ParsedFile, names: &Names) -> Pass2 {
        let mut ctx = FileCtx { file, names, out: Pass2::default() };
        let src = &file.source;
        let tables = &names.tables;

        for item in top_level_items(&file.root) {
            if item.kind != NodeKind::Declaration {
                continue;
            }
            let env = Env { tables, scopes: None };
            for d in decode_declaration(item, src, None) {
                let Some(init) = d.init else { continue };
                if d.function.is_some() {
                    continue;
                }
                let t = tables.globals.get(&d.name).map(|g| g.type_expr.clone()).unwrap_or_else(|| {
                    if d.unknown { TypeExpr::unknown(d.type_text.clone()) } else { resolve_type(&d.type_text, tables) }
                });
                ctx.record_initializer(&env, &d.name, &t, file.text(item), init, None);
            }
        }

        let (functions, _) = enumerate_functions(file);
        let mut seen_ids = BTreeMap::new();
        for raw in &functions {
            let key = tables.key_for(&raw.name, &file.path);
            let mut walk = FnWalk {
                raw,
                key: key.clone(),
                locals: Vec::new(),
                param_uses: Vec::new(),
                stmt_texts: HashMap::new(),
                seen_ids: &mut seen_ids,
            };
            walk_function(raw.node, src, |node, scopes| visit(&mut ctx, &mut walk, node, scopes));
            let FnWalk { locals, param_uses, .. } = walk;
            let parameters = raw
                .shape
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    type_text: p.type_text.clone(),
                    type_expr: if p.unknown { TypeExpr::unknown(p.type_text.clone()) } else { resolve_type(&p.type_text, tables) },
                })
                .collect();
            let info = FunctionInfo {
                name: raw.name.clone(),
                key: key.clone(),
                file: file.path.clone(),
                span: raw.node.span.clone(),
                declarator_text: raw.declarator_text.clone(),
                return_type: resolve_type(&raw.return_type_text, tables),
                parameters,
                is_variadic: raw.shape.variadic,
                is_static: raw.is_static,
                local_vars: locals,
                body_text: file.text(raw.node).to_string(),
                partial: file.diagnostics.in_error_region(&raw.node.span),
                param_uses,
            };
            match ctx.out.functions.get(&key) {
                Some(existing) if existing.span <= info.span => {}
                _ => {
                    ctx.out.functions.insert(key, info);
                }
            }
        }
        ctx.out
    }

    fn merge(mut self, other: Pass2) -> Pass2 {
        for (k, v) in other.functions {
            match self.functions.get(&k) {
                Some(existing) if existing.span <= v.span => {}
                _ => {
                    self.functions.insert(k, v);
                }
            }
        }
        self.call_sites.extend(other.call_sites);
        self.decl_sites.extend(other.decl_sites);
        self.assign_sites.extend(other.assign_sites);
        self.icalls.extend(other.icalls);
        self.field_stores.extend(other.field_stores);
        self
    }
}

fn visit(ctx: &mut FileCtx<'_>, walk: &mut FnWalk<'_>, node: &SyntaxNode, scopes: &Scopes) {
    let file = ctx.file;
    let src = &file.source;
    let tables = ctx.tables();
    let env = Env { tables, scopes: Some(scopes) };
    let fname = walk.raw.name.as_str();
    match node.grammar.as_str() {
        "expression_statement" => {
            if let Some(first) = node.children.first() {
                walk.stmt_texts.insert(first.span.byte_start, file.text(node).to_string());
            }
        }
        "declaration" | "recovered_declaration" => {
            for d in decode_declaration(node, src, None) {
                if d.function.is_some() {
                    continue;
                }
                let t = if d.unknown { TypeExpr::unknown(d.type_text.clone()) } else { resolve_type(&d.type_text, tables) };
                let init_expr = d.init.map(|i| {
                    if i.is("initializer_list") {
                        Expr::Other { text: file.text(i).chars().take(120).collect() }
                    } else {
                        lower_expr(i, src)
                    }
                });
                if let Some(e) = &init_expr {
                    for p in e.value_names() {
                        if let Some(index) = walk.param_index(p, scopes) {
                            walk.param_uses.push(ParamUse::Assigned {
                                index,
                                text: file.text(node).to_string(),
                                target: env.pointer_facts(&Expr::Ident { name: d.name.clone() }),
                            });
                        }
                    }
                }
                walk.locals.push(LocalVar {
                    name: d.name.clone(),
                    type_expr: t.clone(),
                    decl_text: file.text(node).to_string(),
                    span: d.name_span.clone(),
                    address_taken: false,
                    defs: init_expr.into_iter().collect(),
                    other_writes: false,
                });
                if let Some(init) = d.init {
                    ctx.record_initializer(&env, &d.name, &t, file.text(node), init, Some((fname, &walk.key)));
                }
            }
        }
        "assignment_expression" => {
            let (Some(l), Some(r)) = (node.child_by_field("left"), node.child_by_field("right")) else { return };
            let lhs = lower_expr(l, src);
            let rhs = lower_expr(r, src);
            if node.op.as_deref() != Some("=") {
                if let Expr::Ident { name } = &lhs {
                    if let Some(local) = walk.local_mut(name, scopes) {
                        local.other_writes = true;
                    }
                }
                return;
            }
            if let Expr::Ident { name } = &lhs {
                if let Some(local) = walk.local_mut(name, scopes) {
                    local.defs.push(rhs.clone());
                }
            }
            let stmt_text = walk
                .stmt_texts
                .get(&node.span.byte_start)
                .cloned()
                .unwrap_or_else(|| file.text(node).to_string());
            let target = env.pointer_facts(&lhs);
            for p in rhs.value_names() {
                if let Some(index) = walk.param_index(p, scopes) {
                    walk.param_uses.push(ParamUse::Assigned { index, text: stmt_text.clone(), target: target.clone() });
                }
            }
            for name in env.function_refs(&rhs) {
                for key in ctx.keys_of(name) {
                    ctx.out.assign_sites.push((
                        key,
                        AddressTakenSite {
                            function_name: name.to_string(),
                            site_kind: SiteKind::Assignment {
                                lhs_expr_text: file.text(l).to_string(),
                                stmt_text: stmt_text.clone(),
                                enclosing_function: fname.to_string(),
                                target: target.clone(),
                            },
                            span: node.span.clone(),
                        },
                    ));
                }
            }
            if let Expr::Field { base, field, .. } = lhs.strip_casts() {
                let struct_name = env.infer(base).aggregate_name().map(str::to_string);
                for value in ctx.stored_values(&env, &rhs) {
                    ctx.out.field_stores.push(FieldStore {
                        struct_name: struct_name.clone(),
                        field: Some(field.clone()),
                        value,
                        span: node.span.clone(),
                    });
                }
            }
        }
        "update_expression" => {
            if let Some(Expr::Ident { name }) = node.child_by_field("argument").map(|a| lower_expr(a, src)) {
                if let Some(local) = walk.local_mut(&name, scopes) {
                    local.other_writes = true;
                }
            }
        }
        "pointer_expression" if node.op.as_deref() == Some("&") => {
            if let Some(Expr::Ident { name }) = node.child_by_field("argument").map(|a| lower_expr(a, src)) {
                if let Some(local) = walk.local_mut(&name, scopes) {
                    local.address_taken = true;
                }
            }
        }
        "call_expression" => {
            let Some(callee_node) = node.child_by_field("function") else { return };
            let callee = lower_expr(callee_node, src);
            let call_text = file.text(node).to_string();
            let args: Vec<&SyntaxNode> = node
                .child_by_field("arguments")
                .map(|l| l.children.iter().filter(|a| a.kind != NodeKind::Error).collect())
                .unwrap_or_default();
            let icall = icall_at(file, node, scopes, &ctx.names.scope_info, fname);
            if let Expr::Ident { name } = strip_derefs(&callee) {
                if let Some(index) = walk.param_index(name, scopes) {
                    walk.param_uses.push(ParamUse::Invoked { index, call_text: call_text.clone() });
                }
            }
            let direct_keys: Vec<String> = match (&icall, strip_derefs(&callee)) {
                (None, Expr::Ident { name }) if tables.defined.contains_key(name) => {
                    tables.resolve_function(name, &file.path)
                }
                _ => Vec::new(),
            };
            for (i, a) in args.iter().enumerate() {
                let e = lower_expr(a, src);
                for p in e.value_names() {
                    if let Some(index) = walk.param_index(p, scopes) {
                        walk.param_uses.push(ParamUse::Passed {
                            index,
                            call_text: call_text.clone(),
                            arg_index: i,
                            callee_keys: direct_keys.clone(),
                            is_icall: icall.is_some(),
                        });
                    }
                }
                for name in env.function_refs(&e) {
                    for key in ctx.keys_of(name) {
                        ctx.out.call_sites.push((
                            key,
                            AddressTakenSite {
                                function_name: name.to_string(),
                                site_kind: SiteKind::CallArgument {
                                    call_text: call_text.clone(),
                                    arg_index: i,
                                    enclosing_function: fname.to_string(),
                                    enclosing_key: Some(walk.key.clone()),
                                    callee_keys: direct_keys.clone(),
                                    is_icall: icall.is_some(),
                                },
                                span: node.span.clone(),
                            },
                        ));
                    }
                }
            }
            if let Some(mut site) = icall {
                site.id = unique_id(std::mem::take(&mut site.id), walk.seen_ids);
                let arg_types = site.args.iter().map(|a| env.infer(a)).collect();
                let pointer = env.pointer_facts(&site.callee);
                ctx.out.icalls.insert(
                    site.id.clone(),
                    IcallRecord { site, arg_types, pointer, enclosing_key: Some(walk.key.clone()) },
                );
            }
        }
        _ => {}
    }
}

fn site_map(mut sites: Vec<(String, AddressTakenSite)>) -> BTreeMap<String, Vec<AddressTakenSite>> {
    sites.sort_by(|a, b| {
        (&a.0, &a.1.span, &a.1.function_name).cmp(&(&b.0, &b.1.span, &b.1.function_name))
    });
    sites.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    let mut out: BTreeMap<String, Vec<AddressTakenSite>> = BTreeMap::new();
    for (k, s) in sites {
        out.entry(k).or_default().push(s);
    }
    out
}

fn assemble(names: Names, pass2: Pass2, warnings: Vec<String>) -> ContextDatabase {
    let Names { tables, address_taken, diagnostics, .. } = names;
    let mut field_stores = pass2.field_stores;
    field_stores.sort();
    field_stores.dedup();
    ContextDatabase {
        type_alias_map: tables.aliases,
        struct_info_map: tables.structs,
        global_var_map: tables.globals,
        function_map: pass2.functions,
        func_to_call_exprs: site_map(pass2.call_sites),
        func_to_declarations: site_map(pass2.decl_sites),
        func_to_assignments: site_map(pass2.assign_sites),
        address_taken,
        declared_functions: tables.declared,
        enumerators: tables.enumerators,
        icalls: pass2.icalls,
        field_stores,
        diagnostics,
        warnings,
    }
}
