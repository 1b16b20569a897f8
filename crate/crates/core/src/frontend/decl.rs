//! Declaration and declarator decoding.
//!
//! Types are carried around as *spellings*: the declaration's specifiers
//! followed by the declarator with the declared name cut out, e.g.
//! `void (*fp)(int)` yields `void (*)(int)`. `db::types::resolve_type`
//! turns such spellings into structured types.

use super::syntax::{NodeKind, SourceSpan, SyntaxNode};

/// One parameter of a function declarator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamDecl {
    pub name: Option<String>,
    pub type_text: String,
    pub decl_text: String,
    pub unknown: bool,
}

/// Parameter shape of a function declarator.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FunctionShape {
    pub params: Vec<ParamDecl>,
    pub variadic: bool,
    /// Macro residue glued onto the declarator (`f(int a) FUNC_NOAPI(FAIL)`)
    /// or a parse error inside it. Parameter types are not trusted.
    pub tainted: bool,
    /// Old-style identifier list.
    pub knr: bool,
}

/// One name introduced by a declaration.
#[derive(Debug, Clone)]
pub struct DeclaredName<'a> {
    pub name: String,
    pub name_span: SourceSpan,
    pub type_text: String,
    pub init: Option<&'a SyntaxNode>,
    /// Present when the name is declared as a function (prototype or definition).
    pub function: Option<FunctionShape>,
    /// Type could not be determined because of a parse error.
    pub unknown: bool,
    pub is_static: bool,
    pub is_extern: bool,
}

const NAME_KINDS: &[&str] = &["identifier", "field_identifier", "type_identifier"];

/// The identifier node naming the entity a declarator declares.
pub fn declarator_name(declarator: &SyntaxNode) -> Option<&SyntaxNode> {
    let mut cur = declarator;
    loop {
        if NAME_KINDS.contains(&cur.grammar.as_str()) {
            return Some(cur);
        }
        cur = match cur.grammar.as_str() {
            "parenthesized_declarator" | "attributed_declarator" => cur
                .children
                .iter()
                .find(|c| !c.is("attribute_declaration") && !c.is("type_qualifier"))?,
            _ => cur.child_by_field("declarator")?,
        };
    }
}

/// Type spelling from the declaration specifiers, e.g. `const char`,
/// `struct foo`, `unsigned long`.
pub fn base_type_text(decl: &SyntaxNode, source: &str, anon_name: Option<&str>) -> String {
    let mut parts: Vec<String> = Vec::new();
    for child in &decl.children {
        match child.field.as_deref() {
            Some("type") => parts.push(specifier_text(child, source, anon_name)),
            None if child.is("type_qualifier") => parts.push(child.text(source).to_string()),
            _ => {}
        }
    }
    parts.join(" ")
}

/// Spelling of a type specifier node. Bodies of struct/union/enum specifiers
/// are dropped; anonymous ones get `anon_name` or a position-derived name.
pub fn specifier_text(spec: &SyntaxNode, source: &str, anon_name: Option<&str>) -> String {
    match spec.grammar.as_str() {
        "struct_specifier" | "union_specifier" | "enum_specifier" => {
            let keyword = match spec.grammar.as_str() {
                "struct_specifier" => "struct",
                "union_specifier" => "union",
                _ => "enum",
            };
            let name = match spec.child_by_field("name") {
                Some(n) => n.text(source).to_string(),
                None => anon_name
                    .map(str::to_string)
                    .unwrap_or_else(|| anonymous_tag(&spec.span)),
            };
            format!("{keyword} {name}")
        }
        _ => collapse_ws(spec.text(source)),
    }
}

/// Identifier-safe tag for an anonymous struct/union/enum, derived from its position.
pub fn anonymous_tag(span: &SourceSpan) -> String {
    let file: String = span
        .file
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    format!("__anon_{file}_{}_{}", span.start_line, span.start_col)
}

/// Declarator text with the declared name (and any initializer) removed.
pub fn abstract_declarator_text(declarator: &SyntaxNode, source: &str) -> String {
    let declarator = if declarator.is("init_declarator") {
        match declarator.child_by_field("declarator") {
            Some(d) => d,
            None => return String::new(),
        }
    } else {
        declarator
    };
    let text = declarator.text(source);
    let start = declarator.span.byte_start;
    match declarator_name(declarator) {
        Some(name) if name.span.byte_start >= start => {
            let a = name.span.byte_start - start;
            let b = (name.span.byte_end - start).min(text.len());
            format!("{}{}", &text[..a], &text[b..])
        }
        _ => text.to_string(),
    }
}

/// Full type spelling for one declarator.
pub fn type_text_for(base: &str, declarator: Option<&SyntaxNode>, source: &str) -> String {
    let suffix = declarator.map(|d| abstract_declarator_text(d, source)).unwrap_or_default();
    collapse_ws(&format!("{base} {suffix}"))
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// If the declarator declares a function (not a function pointer), return its
/// function declarator node.
pub fn function_declarator(declarator: &SyntaxNode) -> Option<&SyntaxNode> {
    let mut cur = declarator;
    loop {
        match cur.grammar.as_str() {
            "function_declarator" => {
                let inner = cur.child_by_field("declarator")?;
                if NAME_KINDS.contains(&inner.grammar.as_str()) {
                    return Some(cur);
                }
                if inner.is("parenthesized_declarator") || inner.is("attributed_declarator") {
                    let unwrapped = inner.children.first()?;
                    if NAME_KINDS.contains(&unwrapped.grammar.as_str()) {
                        return Some(cur);
                    }
                }
                cur = inner;
            }
            "pointer_declarator" | "init_declarator" | "attributed_declarator" => {
                cur = cur.child_by_field("declarator").or_else(|| cur.children.last())?;
            }
            _ => return None,
        }
    }
}

/// Decode the parameter list of a function declarator.
pub fn function_shape(func_decl: &SyntaxNode, source: &str) -> FunctionShape {
    let mut shape = FunctionShape::default();
    for extra in &func_decl.children {
        let expected = matches!(extra.field.as_deref(), Some("declarator") | Some("parameters"))
            || extra.is("attribute_specifier")
            || extra.is("gnu_asm_expression");
        if !expected {
            shape.tainted = true;
        }
    }
    if func_decl.contains_error() {
        shape.tainted = true;
    }
    let Some(list) = func_decl.child_by_field("parameters") else {
        shape.tainted = true;
        return shape;
    };
    for p in &list.children {
        match p.grammar.as_str() {
            "variadic_parameter" => shape.variadic = true,
            "identifier" => {
                shape.knr = true;
                shape.params.push(ParamDecl {
                    name: Some(p.text(source).to_string()),
                    type_text: String::new(),
                    decl_text: p.text(source).to_string(),
                    unknown: true,
                });
            }
            "parameter_declaration" => {
                let declarator = p.child_by_field("declarator");
                let base = base_type_text(p, source, None);
                let type_text = type_text_for(&base, declarator, source);
                if declarator.is_none() && type_text == "void" {
                    continue;
                }
                shape.params.push(ParamDecl {
                    name: declarator.and_then(declarator_name).map(|n| n.text(source).to_string()),
                    type_text,
                    decl_text: p.text(source).to_string(),
                    unknown: p.contains_error(),
                });
            }
            _ => shape.tainted = true,
        }
    }
    if shape.tainted || shape.knr {
        for p in shape.params.iter_mut() {
            p.unknown = true;
        }
    }
    shape
}

fn storage(decl: &SyntaxNode, source: &str, which: &str) -> bool {
    decl.children
        .iter()
        .any(|c| c.is("storage_class_specifier") && c.text(source) == which)
}

/// Names declared by a `declaration`, `recovered_declaration`,
/// `field_declaration`, `type_definition` or `parameter_declaration` node.
pub fn decode_declaration<'a>(decl: &'a SyntaxNode, source: &str, anon_name: Option<&str>) -> Vec<DeclaredName<'a>> {
    let is_static = storage(decl, source, "static");
    let is_extern = storage(decl, source, "extern");
    if decl.is("recovered_declaration") {
        let base = decl.child_by_field("type").map(|t| t.text(source).to_string()).unwrap_or_default();
        return decl
            .child_by_field("declarator")
            .map(|name| DeclaredName {
                name: name.text(source).to_string(),
                name_span: name.span.clone(),
                type_text: collapse_ws(&base),
                init: None,
                function: None,
                unknown: true,
                is_static,
                is_extern,
            })
            .into_iter()
            .collect();
    }
    let base = base_type_text(decl, source, anon_name);
    let type_broken = decl
        .child_by_field("type")
        .is_none_or(|t| t.contains_error() || t.kind == NodeKind::Error);
    let mut out = Vec::new();
    for d in decl.children_by_field("declarator") {
        let (inner, init) = if d.is("init_declarator") {
            (d.child_by_field("declarator"), d.child_by_field("value"))
        } else {
            (Some(d), None)
        };
        let Some(inner) = inner else { continue };
        let Some(name) = declarator_name(inner) else { continue };
        let function = function_declarator(inner).map(|f| function_shape(f, source));
        out.push(DeclaredName {
            name: name.text(source).to_string(),
            name_span: name.span.clone(),
            type_text: type_text_for(&base, Some(inner), source),
            init,
            function,
            unknown: type_broken || inner.contains_error(),
            is_static,
            is_extern,
        });
    }
    out
}
