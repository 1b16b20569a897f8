//! Address-taken identification.
//!
//! An identifier counts when it is used as a value: not in callee position,
//! not in a declarator, not inside `sizeof`/attributes/preprocessor lines,
//! and not resolving to a variable at its use site.

use std::collections::{BTreeSet, HashSet};

use crate::frontend::functions::top_level_items;
use crate::frontend::scope::walk_function;
use crate::frontend::{NodeKind, ParsedFile, SyntaxNode};

const SKIPPED_SUBTREES: &[&str] = &[
    "sizeof_expression",
    "alignof_expression",
    "offsetof_expression",
    "attribute_specifier",
    "attribute_declaration",
    "attribute",
    "ms_declspec_modifier",
    "gnu_asm_expression",
    "preproc_def",
    "preproc_function_def",
    "preproc_call",
    "preproc_include",
    "preproc_defined",
    "macro_type_specifier",
    "type_descriptor",
];

/// Fields that leave declarator mode again.
const VALUE_FIELDS: &[&str] = &["value", "size", "parameters"];

fn callee_identifier(callee: &SyntaxNode) -> Option<&SyntaxNode> {
    let mut cur = callee;
    loop {
        match cur.grammar.as_str() {
            "identifier" => return Some(cur),
            "parenthesized_expression" if cur.children.len() == 1 => cur = &cur.children[0],
            "pointer_expression" if cur.op.as_deref() == Some("*") => cur = cur.child_by_field("argument")?,
            _ => return None,
        }
    }
}

/// Byte offsets of identifier nodes that are never value uses.
pub fn excluded_identifiers(root: &SyntaxNode) -> HashSet<usize> {
    let mut out = HashSet::new();
    let mut stack: Vec<(&SyntaxNode, bool)> = vec![(root, false)];
    while let Some((node, decl_mode)) = stack.pop() {
        if SKIPPED_SUBTREES.contains(&node.grammar.as_str()) {
            out.extend(node.descendants().filter(|n| n.is("identifier")).map(|n| n.span.byte_start));
            continue;
        }
        if node.is("identifier") && decl_mode {
            out.insert(node.span.byte_start);
            continue;
        }
        if node.is("call_expression") {
            if let Some(id) = node.child_by_field("function").and_then(callee_identifier) {
                out.insert(id.span.byte_start);
            }
        }
        for child in &node.children {
            let field = child.field.as_deref();
            let skip_child = match node.grammar.as_str() {
                "preproc_if" | "preproc_elif" => field == Some("condition"),
                "preproc_ifdef" | "preproc_elifdef" => field == Some("name"),
                "enumerator" => field == Some("name"),
                "parameter_list" => child.is("identifier"),
                _ => false,
            };
            if skip_child {
                out.extend(child.descendants().filter(|n| n.is("identifier")).map(|n| n.span.byte_start));
                continue;
            }
            let child_mode = match field {
                Some("declarator") => true,
                Some(f) if VALUE_FIELDS.contains(&f) => false,
                _ => decl_mode,
            };
            stack.push((child, child_mode));
        }
    }
    out
}

/// Raw address-taken names of one file. `is_variable` answers whether a
/// name denotes a global variable or enumerator; locals and parameters are
/// resolved through the lexical scopes of each function.
pub fn identify_address_taken(file: &ParsedFile, is_variable: &dyn Fn(&str) -> bool) -> BTreeSet<String> {
    let excluded = excluded_identifiers(&file.root);
    let mut out = BTreeSet::new();
    for item in top_level_items(&file.root) {
        if item.kind == NodeKind::FunctionDefinition {
            walk_function(item, &file.source, |node, scopes| {
                if node.is("identifier") && !excluded.contains(&node.span.byte_start) {
                    let name = file.text(node);
                    if !scopes.contains(name) && !is_variable(name) {
                        out.insert(name.to_string());
                    }
                }
            });
        } else {
            for node in item.descendants().filter(|n| n.is("identifier")) {
                let name = file.text(node);
                if !excluded.contains(&node.span.byte_start) && !is_variable(name) {
                    out.insert(name.to_string());
                }
            }
        }
    }
    out
}
