//! Normalized C types.
//!
//! A [`TypeExpr`] keeps only what type matching needs: the canonical base
//! type after alias resolution and the pointer depth. Arrays count as one
//! pointer level (they decay at call sites). Every function or
//! function-pointer type shares the base `fn`; a function designator has
//! depth 0 and a pointer to function depth 1.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub const FUNCTION_BASE: &str = "fn";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypeExpr {
    pub resolved_base: String,
    pub pointer_depth: u32,
    pub is_function_pointer: bool,
    pub is_unknown: bool,
    pub raw_text: String,
}

impl TypeExpr {
    pub fn unknown(raw_text: impl Into<String>) -> Self {
        TypeExpr {
            resolved_base: String::new(),
            pointer_depth: 0,
            is_function_pointer: false,
            is_unknown: true,
            raw_text: raw_text.into(),
        }
    }

    pub fn known(base: impl Into<String>, depth: u32, raw_text: impl Into<String>) -> Self {
        let resolved_base = base.into();
        TypeExpr {
            is_function_pointer: resolved_base == FUNCTION_BASE && depth >= 1,
            resolved_base,
            pointer_depth: depth,
            is_unknown: false,
            raw_text: raw_text.into(),
        }
    }

    /// The type a function name has when used as a value.
    pub fn function_value(raw_text: impl Into<String>) -> Self {
        TypeExpr::known(FUNCTION_BASE, 1, raw_text)
    }

    pub fn is_pointer(&self) -> bool {
        !self.is_unknown && self.pointer_depth >= 1
    }

    /// `void *` or `char *`: matches any pointer type.
    pub fn is_generic_pointer(&self) -> bool {
        !self.is_unknown && self.pointer_depth == 1 && (self.resolved_base == "void" || self.resolved_base == "char")
    }

    pub fn is_function_like(&self) -> bool {
        !self.is_unknown && self.resolved_base == FUNCTION_BASE
    }

    /// Struct or union tag name when the base is an aggregate.
    pub fn aggregate_name(&self) -> Option<&str> {
        if self.is_unknown {
            return None;
        }
        self.resolved_base
            .strip_prefix("struct ")
            .or_else(|| self.resolved_base.strip_prefix("union "))
    }

    /// Type of `*e` / `e[i]`.
    pub fn deref(&self) -> TypeExpr {
        if self.is_unknown {
            return self.clone();
        }
        if self.is_function_like() {
            // `*fp` on a function pointer is the function, which decays right back.
            return TypeExpr::function_value(self.raw_text.clone());
        }
        if self.pointer_depth == 0 {
            return TypeExpr::unknown(self.raw_text.clone());
        }
        TypeExpr::known(self.resolved_base.clone(), self.pointer_depth - 1, self.raw_text.clone())
    }

    /// Type of `&e`.
    pub fn address_of(&self) -> TypeExpr {
        if self.is_unknown {
            return self.clone();
        }
        TypeExpr::known(self.resolved_base.clone(), self.pointer_depth + 1, self.raw_text.clone())
    }
}

/// Where `resolve_type` looks up typedef names. Returns the aliased type's
/// spelling (`void (*)(void*)`, `struct foo *`, ...).
pub trait AliasSource {
    fn alias_spelling(&self, name: &str) -> Option<&str>;
}

impl AliasSource for BTreeMap<String, String> {
    fn alias_spelling(&self, name: &str) -> Option<&str> {
        self.get(name).map(String::as_str)
    }
}

/// No aliases at all.
pub struct NoAliases;

impl AliasSource for NoAliases {
    fn alias_spelling(&self, _: &str) -> Option<&str> {
        None
    }
}

const QUALIFIERS: &[&str] = &[
    "const", "volatile", "restrict", "__restrict", "__restrict__", "static", "extern", "register", "inline",
    "__inline", "__inline__", "_Thread_local", "__thread", "__extension__", "auto", "__const", "_Atomic",
    "_Noreturn", "__volatile__",
];
const PRIMITIVES: &[&str] = &[
    "void", "char", "short", "int", "long", "float", "double", "signed", "unsigned", "_Bool", "bool",
    "__signed__", "__int128", "_Complex",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Derivation {
    Pointer,
    Array,
    Function,
}

fn tokenize(text: &str) -> Vec<String> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            i = text[i + 2..].find("*/").map_or(bytes.len(), |p| i + 2 + p + 2);
        } else if c.is_ascii_alphanumeric() || c == b'_' {
            let s = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(text[s..i].to_string());
        } else {
            let len = text[i..].chars().next().map_or(1, char::len_utf8);
            out.push(text[i..i + len].to_string());
            i += len;
        }
    }
    out
}

/// Skip a balanced group starting at `toks[i]` (which must be `open`).
fn skip_group(toks: &[String], mut i: usize, open: &str, close: &str) -> Option<usize> {
    let mut depth = 0;
    while i < toks.len() {
        if toks[i] == open {
            depth += 1;
        } else if toks[i] == close {
            depth -= 1;
            if depth == 0 {
                return Some(i + 1);
            }
        }
        i += 1;
    }
    None
}

/// Drop `__attribute__((...))` groups.
fn strip_attributes(toks: Vec<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(toks.len());
    let mut i = 0;
    while i < toks.len() {
        if toks[i] == "__attribute__" || toks[i] == "__attribute" {
            match toks.get(i + 1) {
                Some(t) if t == "(" => {
                    i = skip_group(&toks, i + 1, "(", ")").unwrap_or(toks.len());
                    continue;
                }
                _ => {}
            }
        }
        out.push(toks[i].clone());
        i += 1;
    }
    out
}

/// Parse an abstract declarator, returning derivations ordered from the
/// (omitted) name outward.
fn parse_abstract(toks: &[String], mut i: usize) -> Option<(Vec<Derivation>, usize)> {
    let mut stars = 0;
    while i < toks.len() && (toks[i] == "*" || QUALIFIERS.contains(&toks[i].as_str())) {
        if toks[i] == "*" {
            stars += 1;
        }
        i += 1;
    }
    let mut inner = Vec::new();
    if i < toks.len() && toks[i] == "(" {
        let nested = matches!(toks.get(i + 1).map(String::as_str), Some("*") | Some("(") | Some("^"));
        if nested {
            let (d, next) = parse_abstract(toks, i + 1)?;
            if toks.get(next).map(String::as_str) != Some(")") {
                return None;
            }
            inner = d;
            i = next + 1;
        }
    }
    let mut suffixes = Vec::new();
    while i < toks.len() {
        match toks[i].as_str() {
            "[" => {
                suffixes.push(Derivation::Array);
                i = skip_group(toks, i, "[", "]")?;
            }
            "(" => {
                suffixes.push(Derivation::Function);
                i = skip_group(toks, i, "(", ")")?;
            }
            _ => break,
        }
    }
    let mut out = inner;
    out.extend(suffixes);
    out.extend(std::iter::repeat_n(Derivation::Pointer, stars));
    Some((out, i))
}

fn canonical_primitive(words: &[&str]) -> Option<String> {
    let has = |w: &str| words.contains(&w);
    let longs = words.iter().filter(|w| **w == "long").count();
    let unsigned = has("unsigned");
    let signed = has("signed") || has("__signed__");
    let base = if has("void") {
        "void".to_string()
    } else if has("_Bool") || has("bool") {
        "_Bool".to_string()
    } else if has("char") {
        if unsigned {
            "unsigned char".into()
        } else if signed {
            "signed char".into()
        } else {
            "char".into()
        }
    } else if has("float") {
        "float".into()
    } else if has("double") {
        if longs > 0 { "long double".into() } else { "double".into() }
    } else if has("short") {
        if unsigned { "unsigned short".into() } else { "short".into() }
    } else if has("__int128") {
        if unsigned { "unsigned __int128".into() } else { "__int128".into() }
    } else if longs >= 2 {
        if unsigned { "unsigned long long".into() } else { "long long".into() }
    } else if longs == 1 {
        if unsigned { "unsigned long".into() } else { "long".into() }
    } else if has("int") || unsigned || signed {
        if unsigned { "unsigned int".into() } else { "int".into() }
    } else {
        return None;
    };
    Some(base)
}

/// Why a spelling resolved to an unknown type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResolveIssue {
    Unparseable,
    CyclicAlias(String),
}

/// Resolve a type spelling, following typedef aliases to a fixpoint.
pub fn resolve_type(raw_type_text: &str, aliases: &dyn AliasSource) -> TypeExpr {
    resolve_type_checked(raw_type_text, aliases).0
}

/// Like [`resolve_type`], also reporting why a type came out unknown.
pub fn resolve_type_checked(raw_type_text: &str, aliases: &dyn AliasSource) -> (TypeExpr, Option<ResolveIssue>) {
    let mut visiting = BTreeSet::new();
    resolve_inner(raw_type_text, aliases, &mut visiting)
}

fn resolve_inner(
    raw: &str,
    aliases: &dyn AliasSource,
    visiting: &mut BTreeSet<String>,
) -> (TypeExpr, Option<ResolveIssue>) {
    let toks = strip_attributes(tokenize(raw));
    let split = toks
        .iter()
        .position(|t| t == "*" || t == "(" || t == "[")
        .unwrap_or(toks.len());
    let (spec, decl) = toks.split_at(split);

    let derivations = match parse_abstract(decl, 0) {
        Some((d, end)) if end == decl.len() => d,
        _ => return (TypeExpr::unknown(raw), Some(ResolveIssue::Unparseable)),
    };

    let words: Vec<&str> = spec
        .iter()
        .map(String::as_str)
        .filter(|w| !QUALIFIERS.contains(w))
        .collect();

    // Derivations that apply before the first function derivation decide the
    // depth of a function pointer; the return type is irrelevant.
    if let Some(fpos) = derivations.iter().position(|d| *d == Derivation::Function) {
        return (TypeExpr::known(FUNCTION_BASE, fpos as u32, raw), None);
    }
    let own_depth = derivations.len() as u32;

    let base: Option<TypeExpr> = match words.as_slice() {
        [] => None,
        [kw, name, ..] if *kw == "struct" || *kw == "union" => Some(TypeExpr::known(format!("{kw} {name}"), 0, raw)),
        [kw, ..] if *kw == "enum" => Some(TypeExpr::known("int", 0, raw)),
        _ => {
            let prims: Vec<&str> = words.iter().copied().filter(|w| PRIMITIVES.contains(w)).collect();
            if !prims.is_empty() {
                canonical_primitive(&prims).map(|b| TypeExpr::known(b, 0, raw))
            } else {
                let names: Vec<&str> = words.iter().copied().filter(|w| is_identifier(w)).collect();
                match names.as_slice() {
                    [name] => {
                        let name = name.to_string();
                        match aliases.alias_spelling(&name) {
                            Some(spelling) => {
                                if !visiting.insert(name.clone()) {
                                    return (TypeExpr::unknown(raw), Some(ResolveIssue::CyclicAlias(name)));
                                }
                                let spelling = spelling.to_string();
                                let (aliased, issue) = resolve_inner(&spelling, aliases, visiting);
                                visiting.remove(&name);
                                if aliased.is_unknown {
                                    return (TypeExpr::unknown(raw), issue);
                                }
                                Some(aliased)
                            }
                            // An unresolvable typedef name (system header, say) stays nominal.
                            None => Some(TypeExpr::known(name, 0, raw)),
                        }
                    }
                    _ => None,
                }
            }
        }
    };
    match base {
        Some(b) => (TypeExpr::known(b.resolved_base, b.pointer_depth + own_depth, raw), None),
        None => (TypeExpr::unknown(raw), Some(ResolveIssue::Unparseable)),
    }
}

fn is_identifier(w: &str) -> bool {
    w.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && w.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[cfg(test)]
mod tests {
    use super::*;

    fn aliases(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    fn shape(t: &TypeExpr) -> (&str, u32, bool, bool) {
        (t.resolved_base.as_str(), t.pointer_depth, t.is_function_pointer, t.is_unknown)
    }

    #[test]
    fn qualifiers_and_pointers() {
        let t = resolve_type("const char *", &NoAliases);
        assert_eq!(shape(&t), ("char", 1, false, false));
        assert_eq!(t.raw_text, "const char *");
        assert_eq!(shape(&resolve_type("volatile unsigned long int * const *", &NoAliases)), ("unsigned long", 2, false, false));
    }

    #[test]
    fn function_pointer_spellings() {
        assert_eq!(shape(&resolve_type("void (*)(int)", &NoAliases)), ("fn", 1, true, false));
        assert_eq!(shape(&resolve_type("void *(*)(ngx_conf_t *cf)", &NoAliases)), ("fn", 1, true, false));
        assert_eq!(shape(&resolve_type("int (int argc, ...)", &NoAliases)), ("fn", 0, false, false));
        assert_eq!(shape(&resolve_type("void (**)(void)", &NoAliases)), ("fn", 2, true, false));
        assert_eq!(shape(&resolve_type("void (*[4])(int)", &NoAliases)), ("fn", 2, true, false));
    }

    #[test]
    fn arrays_decay() {
        assert_eq!(shape(&resolve_type("char [10]", &NoAliases)), ("char", 1, false, false));
        assert_eq!(shape(&resolve_type("int (*)[3]", &NoAliases)), ("int", 2, false, false));
    }

    #[test]
    fn aggregates_and_enums() {
        assert_eq!(shape(&resolve_type("struct foo *", &NoAliases)), ("struct foo", 1, false, false));
        assert_eq!(shape(&resolve_type("const union u", &NoAliases)), ("union u", 0, false, false));
        assert_eq!(shape(&resolve_type("enum color", &NoAliases)), ("int", 0, false, false));
    }

    #[test]
    fn alias_chains() {
        let a = aliases(&[
            ("sdp_free_func_t", "void (*)(void*)"),
            ("u32", "unsigned int"),
            ("word", "u32"),
            ("foo_p", "struct foo *"),
            ("handler_t", "void (int)"),
        ]);
        assert_eq!(shape(&resolve_type("sdp_free_func_t", &a)), ("fn", 1, true, false));
        assert_eq!(shape(&resolve_type("const word *", &a)), ("unsigned int", 1, false, false));
        assert_eq!(shape(&resolve_type("foo_p *", &a)), ("struct foo", 2, false, false));
        assert_eq!(shape(&resolve_type("handler_t *", &a)), ("fn", 1, true, false));
        assert_eq!(shape(&resolve_type("size_t", &a)), ("size_t", 0, false, false));
    }

    #[test]
    fn cyclic_alias_is_unknown() {
        let a = aliases(&[("a_t", "b_t"), ("b_t", "a_t *")]);
        let (t, issue) = resolve_type_checked("a_t", &a);
        assert!(t.is_unknown);
        assert!(t.resolved_base.is_empty());
        assert!(matches!(issue, Some(ResolveIssue::CyclicAlias(_))));
    }

    #[test]
    fn unparseable_is_unknown() {
        assert!(resolve_type("", &NoAliases).is_unknown);
        assert!(resolve_type("int (*", &NoAliases).is_unknown);
    }

    #[test]
    fn deref_and_address_of() {
        let fp = resolve_type("void (*)(int)", &NoAliases);
        assert_eq!(fp.deref(), TypeExpr::function_value("void (*)(int)"));
        let p = resolve_type("struct s *", &NoAliases);
        assert_eq!(p.deref().pointer_depth, 0);
        assert_eq!(p.address_of().pointer_depth, 2);
        assert!(resolve_type("int", &NoAliases).deref().is_unknown);
    }

    #[test]
    fn attributes_are_ignored() {
        let t = resolve_type("__attribute__((unused)) int *", &NoAliases);
        assert_eq!(shape(&t), ("int", 1, false, false));
    }
}
