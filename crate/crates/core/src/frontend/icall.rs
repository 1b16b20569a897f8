//! Indirect-call discovery.
//!
//! A call is indirect unless its callee is a bare identifier that does not
//! resolve to a variable (parameter, local, or global). Bare identifiers that
//! name no variable are direct calls whether or not a prototype is visible:
//! without preprocessing, library functions are routinely undeclared.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::decl::decode_declaration;
use super::expr::{lower_expr, Expr};
use super::functions::{enumerate_functions, top_level_items};
use super::scope::{walk_function, Scopes};
use super::syntax::{file_dir, NodeKind, ParsedFile, SourceSpan, SyntaxNode};

/// Names visible across translation units.
#[derive(Debug, Clone, Default)]
pub struct ScopeInfo {
    /// Functions defined or declared anywhere in the project.
    pub functions: BTreeSet<String>,
    /// Global variables (name → type spelling).
    pub global_vars: BTreeMap<String, String>,
}

impl ScopeInfo {
    /// Collect function and global variable names from a set of parsed files.
    pub fn from_files<'a>(files: impl IntoIterator<Item = &'a ParsedFile>) -> Self {
        let mut info = ScopeInfo::default();
        for file in files {
            for item in top_level_items(&file.root) {
                match item.kind {
                    NodeKind::FunctionDefinition => {
                        if let Some(name) = super::scope::definition_name(item, &file.source) {
                            info.functions.insert(name.to_string());
                        }
                    }
                    NodeKind::Declaration => {
                        for d in decode_declaration(item, &file.source, None) {
                            if d.function.is_some() {
                                info.functions.insert(d.name);
                            } else {
                                info.global_vars.entry(d.name).or_insert(d.type_text);
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
        info
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PointerKind {
    PlainVariable { name: String },
    StructFieldAccess { base_type_hint: Option<String>, field_name: String },
    ArrayElement,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointerExpr {
    #[serde(flatten)]
    pub kind: PointerKind,
    pub text: String,
}

/// One indirect call site.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IcallSite {
    /// `file:line:col` of the call expression.
    pub id: String,
    pub span: SourceSpan,
    pub call_text: String,
    pub pointer_expr: PointerExpr,
    pub callee: Expr,
    pub args: Vec<Expr>,
    pub arg_texts: Vec<String>,
    /// False when the argument list contains parse errors.
    pub args_complete: bool,
    pub enclosing_function: String,
    pub enclosing_file_dir: String,
}

impl IcallSite {
    pub fn file(&self) -> &str {
        &self.span.file
    }
}

/// Strip `*` applied to the callee: `(*fp)(x)` calls through `fp`.
pub(crate) fn strip_derefs(e: &Expr) -> &Expr {
    match e {
        Expr::Deref { inner } => strip_derefs(inner),
        e => e,
    }
}

fn is_variable(name: &str, scopes: &Scopes, info: &ScopeInfo) -> bool {
    scopes.contains(name) || info.global_vars.contains_key(name)
}

pub(crate) fn classify_pointer(
    callee: &Expr,
    text: &str,
    scopes: &Scopes,
    info: &ScopeInfo,
) -> PointerExpr {
    let kind = match strip_derefs(callee) {
        Expr::Ident { name } => PointerKind::PlainVariable { name: name.clone() },
        Expr::Field { base, field, .. } => {
            let base_type_hint = match strip_derefs(base) {
                Expr::Ident { name } => scopes
                    .lookup(name)
                    .map(|b| b.type_text.clone())
                    .or_else(|| info.global_vars.get(name).cloned()),
                _ => None,
            };
            PointerKind::StructFieldAccess { base_type_hint, field_name: field.clone() }
        }
        Expr::Index { .. } => PointerKind::ArrayElement,
        _ => PointerKind::Other,
    };
    PointerExpr { kind, text: text.to_string() }
}

/// Decide whether a call's callee makes it an indirect call.
pub fn is_indirect_callee(callee: &Expr, scopes: &Scopes, info: &ScopeInfo) -> bool {
    match strip_derefs(callee) {
        Expr::Ident { name } => is_variable(name, scopes, info),
        _ => true,
    }
}

/// Build the icall site for a call expression visited with `scopes` in
/// effect, or `None` for a direct call. The id is the bare position; see
/// [`unique_id`].
pub fn icall_at(
    file: &ParsedFile,
    node: &SyntaxNode,
    scopes: &Scopes,
    info: &ScopeInfo,
    enclosing_function: &str,
) -> Option<IcallSite> {
    if !node.is("call_expression") {
        return None;
    }
    let callee_node = node.child_by_field("function")?;
    let callee = lower_expr(callee_node, &file.source);
    if !is_indirect_callee(&callee, scopes, info) {
        return None;
    }
    let (args, arg_texts, args_complete) = match node.child_by_field("arguments") {
        Some(list) => {
            let parsed: Vec<&SyntaxNode> = list.children.iter().filter(|a| a.kind != NodeKind::Error).collect();
            (
                parsed.iter().map(|a| lower_expr(a, &file.source)).collect(),
                parsed.iter().map(|a| file.text(a).to_string()).collect(),
                !list.contains_error(),
            )
        }
        None => (Vec::new(), Vec::new(), false),
    };
    Some(IcallSite {
        id: node.span.position_id(),
        span: node.span.clone(),
        call_text: file.text(node).to_string(),
        pointer_expr: classify_pointer(&callee, file.text(callee_node), scopes, info),
        callee,
        args,
        arg_texts,
        args_complete,
        enclosing_function: enclosing_function.to_string(),
        enclosing_file_dir: file_dir(&file.path).to_string(),
    })
}

/// Make a position id unique within one file. Only `fp(a)(b)`-style chains
/// share a start position; later ones get a `+n` suffix.
pub fn unique_id(id: String, seen: &mut BTreeMap<String, usize>) -> String {
    let n = seen.entry(id.clone()).or_insert(0);
    *n += 1;
    if *n > 1 {
        format!("{id}+{}", *n - 1)
    } else {
        id
    }
}

/// Find every indirect call inside the function definitions of `file`.
pub fn find_icalls(file: &ParsedFile, info: &ScopeInfo) -> Vec<IcallSite> {
    let (functions, _) = enumerate_functions(file);
    let mut out: Vec<IcallSite> = Vec::new();
    let mut seen_ids: BTreeMap<String, usize> = BTreeMap::new();
    for func in functions {
        walk_function(func.node, &file.source, |node: &SyntaxNode, scopes| {
            if let Some(mut site) = icall_at(file, node, scopes, info, &func.name) {
                site.id = unique_id(std::mem::take(&mut site.id), &mut seen_ids);
                out.push(site);
            }
        });
    }
    out
}
