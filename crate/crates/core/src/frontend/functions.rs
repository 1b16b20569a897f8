use super::decl::{base_type_text, declarator_name, FunctionShape};
use super::scope::definition_shape;
use super::syntax::{NodeKind, ParsedFile, SourceSpan, SyntaxNode};

/// A function definition as found in the tree, before any typing.
#[derive(Debug, Clone)]
pub struct RawFunction<'a> {
    pub name: String,
    pub node: &'a SyntaxNode,
    pub declarator_text: String,
    pub return_type_text: String,
    pub body_span: Option<SourceSpan>,
    pub shape: FunctionShape,
    pub is_static: bool,
}

/// Nodes that may hold top-level entities: the translation unit itself and
/// preprocessor conditional arms.
pub fn top_level_items(root: &SyntaxNode) -> Vec<&SyntaxNode> {
    let mut out = Vec::new();
    let mut stack: Vec<&SyntaxNode> = root.children.iter().rev().collect();
    while let Some(n) = stack.pop() {
        match n.grammar.as_str() {
            "preproc_if" | "preproc_ifdef" | "preproc_else" | "preproc_elif" | "preproc_elifdef"
            | "linkage_specification" | "declaration_list" => {
                stack.extend(n.children.iter().rev());
            }
            _ => out.push(n),
        }
    }
    out
}

/// Function definitions of a file in source order. Definitions buried inside
/// error regions are skipped; their names (when recognizable) are returned as
/// diagnostic notes.
pub fn enumerate_functions(file: &ParsedFile) -> (Vec<RawFunction<'_>>, Vec<String>) {
    let mut functions = Vec::new();
    let mut skipped = Vec::new();
    for item in top_level_items(&file.root) {
        if item.kind == NodeKind::Error {
            for nested in item.descendants().filter(|n| n.kind == NodeKind::FunctionDefinition) {
                let name = definition_shape(nested, &file.source)
                    .and_then(|(fd, _)| declarator_name(fd).map(|n| file.text(n).to_string()))
                    .unwrap_or_else(|| "<unnamed>".into());
                skipped.push(format!("function `{name}` inside error region at {} skipped", nested.span.position_id()));
            }
            continue;
        }
        if item.kind != NodeKind::FunctionDefinition {
            continue;
        }
        let Some((fd, shape)) = definition_shape(item, &file.source) else {
            skipped.push(format!("unrecognized function declarator at {}", item.span.position_id()));
            continue;
        };
        let Some(name) = declarator_name(fd) else { continue };
        let declarator = item.child_by_field("declarator").expect("definition_shape found one");
        let decl_text = file.text(declarator);
        // Return type: the declarator with the function declarator cut out.
        let cut_a = fd.span.byte_start.saturating_sub(declarator.span.byte_start);
        let cut_b = fd.span.byte_end.saturating_sub(declarator.span.byte_start).min(decl_text.len());
        let residue = format!("{}{}", &decl_text[..cut_a], &decl_text[cut_b..]);
        let base = base_type_text(item, &file.source, None);
        let return_type_text = format!("{base} {residue}").split_whitespace().collect::<Vec<_>>().join(" ");
        if shape.tainted {
            skipped.push(format!(
                "function `{}` has a macro-tainted declarator; parameter types unknown",
                file.text(name)
            ));
        }
        functions.push(RawFunction {
            name: file.text(name).to_string(),
            node: item,
            declarator_text: file.text(fd).to_string(),
            return_type_text,
            body_span: item.child_by_field("body").map(|b| b.span.clone()),
            is_static: item
                .children
                .iter()
                .any(|c| c.is("storage_class_specifier") && file.text(c) == "static"),
            shape,
        });
    }
    (functions, skipped)
}
