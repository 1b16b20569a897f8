//! Expression typing against the project-wide tables gathered in the first
//! build pass. Literals and arithmetic are left unknown on purpose: unknown
//! types match everything, so guessing wrong could only lose candidates.

use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::icall::strip_derefs;
use crate::frontend::scope::Scopes;
use crate::frontend::Expr;

use super::types::{resolve_type, AliasSource, TypeExpr};
use super::{GlobalVar, PointerFacts, StructInfo, TypeAlias, VarRef, VarScope};

/// Name tables known after the first pass.
#[derive(Debug, Default)]
pub(crate) struct Tables {
    pub aliases: BTreeMap<String, TypeAlias>,
    pub structs: BTreeMap<String, StructInfo>,
    pub globals: BTreeMap<String, GlobalVar>,
    pub enumerators: BTreeSet<String>,
    /// Definitions per function name: `(file, is_static)`.
    pub defined: BTreeMap<String, BTreeSet<(String, bool)>>,
    pub declared: BTreeSet<String>,
    /// Return type per bare function name.
    pub returns: BTreeMap<String, TypeExpr>,
}

impl AliasSource for Tables {
    fn alias_spelling(&self, name: &str) -> Option<&str> {
        self.aliases.get(name).map(|a| a.src_type_text.as_str())
    }
}

impl Tables {
    pub fn is_variable(&self, name: &str) -> bool {
        self.globals.contains_key(name) || self.enumerators.contains(name)
    }

    /// Database key for the definition of `name` in `file`.
    pub fn key_for(&self, name: &str, file: &str) -> String {
        match self.defined.get(name) {
            Some(defs) if defs.len() > 1 => format!("{name}@{file}"),
            _ => name.to_string(),
        }
    }

    /// Keys a reference to `name` from `file` may denote. A same-file
    /// definition wins; otherwise every external definition; a name that is
    /// only declared resolves to itself.
    pub fn resolve_function(&self, name: &str, file: &str) -> Vec<String> {
        match self.defined.get(name) {
            None => {
                if self.declared.contains(name) {
                    vec![name.to_string()]
                } else {
                    Vec::new()
                }
            }
            Some(defs) if defs.len() == 1 => vec![name.to_string()],
            Some(defs) => {
                if defs.iter().any(|(f, _)| f == file) {
                    return vec![format!("{name}@{file}")];
                }
                let external: Vec<String> =
                    defs.iter().filter(|(_, st)| !st).map(|(f, _)| format!("{name}@{f}")).collect();
                if external.is_empty() {
                    defs.iter().map(|(f, _)| format!("{name}@{f}")).collect()
                } else {
                    external
                }
            }
        }
    }

    pub fn is_function_name(&self, name: &str) -> bool {
        self.defined.contains_key(name) || self.declared.contains(name)
    }

    /// Aliases mentioned by a type spelling, following alias chains.
    pub fn alias_chain(&self, type_text: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut pending: Vec<String> = identifiers(type_text);
        pending.reverse();
        while let Some(name) = pending.pop() {
            if out.contains(&name) {
                continue;
            }
            if let Some(alias) = self.aliases.get(&name) {
                out.push(name);
                let mut next = identifiers(&alias.src_type_text);
                next.reverse();
                pending.extend(next);
            }
        }
        out
    }
}

fn identifiers(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .filter(|w| w.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_'))
        .map(str::to_string)
        .collect()
}

/// Typing environment at one program point.
pub(crate) struct Env<'a> {
    pub tables: &'a Tables,
    pub scopes: Option<&'a Scopes>,
}

impl<'a> Env<'a> {
    pub fn var(&self, name: &str) -> Option<(VarRef, TypeExpr)> {
        if let Some(b) = self.scopes.and_then(|s| s.lookup(name)) {
            let t = if b.unknown { TypeExpr::unknown(&b.type_text) } else { resolve_type(&b.type_text, self.tables) };
            let r = VarRef {
                name: name.to_string(),
                scope: if b.is_param { VarScope::Param } else { VarScope::Local },
                decl_text: b.decl_text.clone(),
                type_text: b.type_text.clone(),
                span: Some(b.span.clone()),
            };
            return Some((r, t));
        }
        self.tables.globals.get(name).map(|g| {
            (
                VarRef {
                    name: name.to_string(),
                    scope: VarScope::Global,
                    decl_text: g.decl_text.clone(),
                    type_text: g.type_text.clone(),
                    span: Some(g.span.clone()),
                },
                g.type_expr.clone(),
            )
        })
    }

    pub fn is_variable(&self, name: &str) -> bool {
        self.scopes.is_some_and(|s| s.contains(name)) || self.tables.is_variable(name)
    }

    /// Function names an expression's value may be, as seen from `file`.
    pub fn function_refs<'e>(&self, e: &'e Expr) -> Vec<&'e str> {
        e.value_names()
            .into_iter()
            .filter(|n| !self.is_variable(n) && self.tables.is_function_name(n))
            .collect()
    }

    pub fn infer(&self, e: &Expr) -> TypeExpr {
        match e {
            Expr::Ident { name } => {
                if let Some((_, t)) = self.var(name) {
                    t
                } else if self.tables.enumerators.contains(name) {
                    TypeExpr::known("int", 0, name.clone())
                } else if self.tables.is_function_name(name) {
                    TypeExpr::function_value(name.clone())
                } else {
                    TypeExpr::unknown(name.clone())
                }
            }
            Expr::Field { base, field, .. } => {
                let bt = self.infer(base);
                match bt.aggregate_name().and_then(|s| self.tables.structs.get(s)).and_then(|s| s.field(field)) {
                    Some(f) => f.type_expr.clone(),
                    None => TypeExpr::unknown(field.clone()),
                }
            }
            Expr::Deref { inner } | Expr::Index { base: inner } => self.infer(inner).deref(),
            Expr::AddrOf { inner } => self.infer(inner).address_of(),
            Expr::Call { callee } => match callee.as_designator() {
                Some(n) if !self.is_variable(n) => {
                    self.tables.returns.get(n).cloned().unwrap_or_else(|| TypeExpr::unknown(n))
                }
                _ => TypeExpr::unknown(""),
            },
            Expr::Cast { type_text, .. } => resolve_type(type_text, self.tables),
            Expr::Conditional { then, otherwise } => {
                let t = self.infer(then);
                if t.is_unknown {
                    self.infer(otherwise)
                } else {
                    t
                }
            }
            Expr::StringLit => TypeExpr::known("char", 1, "\"\""),
            Expr::Null => TypeExpr::known("void", 1, "NULL"),
            Expr::NumberLit | Expr::CharLit => TypeExpr::unknown(""),
            Expr::Other { text } => TypeExpr::unknown(text.clone()),
        }
    }

    /// Facts about a pointer expression (`fp`, `ctx->f`, `tbl[i]`).
    pub fn pointer_facts(&self, e: &Expr) -> PointerFacts {
        let e = strip_derefs(e.strip_casts());
        let mut facts = PointerFacts::default();
        let root = root_name(e);
        if let Some((var, _)) = root.and_then(|n| self.var(n)) {
            facts.aliases = self.tables.alias_chain(&var.type_text);
            facts.var = Some(var);
        }
        if let Expr::Field { base, field, .. } = e {
            let bt = self.infer(base);
            if let Some(s) = bt.aggregate_name().and_then(|s| self.tables.structs.get(s)) {
                if let Some(f) = s.field(field) {
                    for a in self.tables.alias_chain(&f.type_text) {
                        if !facts.aliases.contains(&a) {
                            facts.aliases.push(a);
                        }
                    }
                }
            }
            facts.struct_name = bt.aggregate_name().map(str::to_string);
            facts.field = Some(field.clone());
        }
        facts
    }
}

/// The variable an lvalue-ish expression is rooted at.
pub(crate) fn root_name(e: &Expr) -> Option<&str> {
    match e {
        Expr::Ident { name } => Some(name),
        Expr::Field { base, .. } | Expr::Index { base } => root_name(base),
        Expr::Deref { inner } | Expr::AddrOf { inner } | Expr::Cast { inner, .. } => root_name(inner),
        _ => None,
    }
}
