//! Lexical scopes inside a function definition: parameters, then block-local
//! declarations in source order.

use super::decl::{decode_declaration, declarator_name, function_declarator, function_shape, FunctionShape};
use super::syntax::{SourceSpan, SyntaxNode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalBinding {
    pub name: String,
    pub type_text: String,
    pub decl_text: String,
    pub is_param: bool,
    pub unknown: bool,
    pub span: SourceSpan,
}

#[derive(Debug, Default)]
pub struct Scopes {
    frames: Vec<Vec<LocalBinding>>,
}

impl Scopes {
    pub fn lookup(&self, name: &str) -> Option<&LocalBinding> {
        self.frames
            .iter()
            .rev()
            .find_map(|frame| frame.iter().rev().find(|b| b.name == name))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.lookup(name).is_some()
    }

    fn push(&mut self) {
        self.frames.push(Vec::new());
    }

    fn pop(&mut self) {
        self.frames.pop();
    }

    fn bind(&mut self, b: LocalBinding) {
        if self.frames.is_empty() {
            self.push();
        }
        self.frames.last_mut().expect("frame pushed").push(b);
    }
}

/// The function declarator of a definition plus its decoded parameters.
/// Old-style (K&R) parameter declarations sitting between the declarator and
/// the body are not used for typing: such parameters stay unknown.
pub fn definition_shape<'a>(def: &'a SyntaxNode, source: &str) -> Option<(&'a SyntaxNode, FunctionShape)> {
    let declarator = def.child_by_field("declarator")?;
    let fd = function_declarator(declarator)?;
    Some((fd, function_shape(fd, source)))
}

pub fn definition_name<'a>(def: &'a SyntaxNode, source: &'a str) -> Option<&'a str> {
    let declarator = def.child_by_field("declarator")?;
    let fd = function_declarator(declarator)?;
    declarator_name(fd).map(|n| n.text(source))
}

fn is_scope_node(node: &SyntaxNode) -> bool {
    matches!(
        node.grammar.as_str(),
        "compound_statement" | "for_statement"
    )
}

enum Work<'a> {
    Visit(&'a SyntaxNode),
    PopScope,
}

/// Walk the body of a function definition in pre-order, handing every node
/// to `visit` together with the scopes in effect at that node. Names
/// introduced by a declaration are in scope from the declaration node on.
pub fn walk_function<'a, F>(def: &'a SyntaxNode, source: &str, mut visit: F)
where
    F: FnMut(&'a SyntaxNode, &Scopes),
{
    let mut scopes = Scopes::default();
    scopes.push();
    if let Some((_, shape)) = definition_shape(def, source) {
        for p in shape.params {
            if let Some(name) = p.name {
                scopes.bind(LocalBinding {
                    name,
                    type_text: p.type_text,
                    decl_text: p.decl_text,
                    is_param: true,
                    unknown: p.unknown,
                    span: def.span.clone(),
                });
            }
        }
    }
    let Some(body) = def.child_by_field("body") else { return };
    let mut stack = vec![Work::Visit(body)];
    while let Some(work) = stack.pop() {
        let node = match work {
            Work::PopScope => {
                scopes.pop();
                continue;
            }
            Work::Visit(n) => n,
        };
        if is_scope_node(node) {
            scopes.push();
            stack.push(Work::PopScope);
        }
        if node.is("declaration") || node.is("recovered_declaration") {
            for d in decode_declaration(node, source, None) {
                if d.function.is_some() {
                    continue;
                }
                scopes.bind(LocalBinding {
                    name: d.name,
                    type_text: d.type_text,
                    decl_text: node.text(source).to_string(),
                    is_param: false,
                    unknown: d.unknown,
                    span: d.name_span,
                });
            }
        }
        visit(node, &scopes);
        stack.extend(node.children.iter().rev().map(Work::Visit));
    }
}
