//! A small expression model: just enough structure to infer the type of a
//! function-pointer expression and to see which names flow into a value.

use serde::{Deserialize, Serialize};

use super::syntax::SyntaxNode;

const MAX_DEPTH: usize = 64;
const OTHER_TEXT_CAP: usize = 120;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expr {
    Ident { name: String },
    Field { base: Box<Expr>, field: String, arrow: bool },
    Deref { inner: Box<Expr> },
    AddrOf { inner: Box<Expr> },
    Index { base: Box<Expr> },
    Call { callee: Box<Expr> },
    Cast { type_text: String, inner: Box<Expr> },
    Conditional { then: Box<Expr>, otherwise: Box<Expr> },
    StringLit,
    NumberLit,
    CharLit,
    Null,
    Other { text: String },
}

impl Expr {
    /// Strip casts, parentheses (already gone) and `&`/`*` applied directly to a
    /// name: the function designator `f`, `&f`, `*f` and `(fn_t)f` all denote `f`.
    pub fn as_designator(&self) -> Option<&str> {
        match self {
            Expr::Ident { name } => Some(name),
            Expr::AddrOf { inner } | Expr::Deref { inner } | Expr::Cast { inner, .. } => inner.as_designator(),
            _ => None,
        }
    }

    pub fn strip_casts(&self) -> &Expr {
        match self {
            Expr::Cast { inner, .. } => inner.strip_casts(),
            e => e,
        }
    }

    /// Identifiers whose *value* this expression may evaluate to.
    pub fn value_names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_value_names(&mut out);
        out
    }

    fn collect_value_names<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Ident { name } => out.push(name),
            Expr::AddrOf { inner } | Expr::Deref { inner } | Expr::Cast { inner, .. } => {
                inner.collect_value_names(out)
            }
            Expr::Conditional { then, otherwise } => {
                then.collect_value_names(out);
                otherwise.collect_value_names(out);
            }
            _ => {}
        }
    }

    pub fn is_null_constant(&self) -> bool {
        match self.strip_casts() {
            Expr::Null => true,
            Expr::NumberLit => true,
            Expr::Ident { name } => name == "NULL",
            _ => false,
        }
    }
}

/// Lower an expression node. Anything outside the modelled subset becomes
/// `Other` carrying (a capped slice of) its text.
pub fn lower_expr(node: &SyntaxNode, source: &str) -> Expr {
    lower(node, source, 0)
}

fn other(node: &SyntaxNode, source: &str) -> Expr {
    let text = node.text(source);
    let mut end = text.len().min(OTHER_TEXT_CAP);
    while !text.is_char_boundary(end) {
        end -= 1;
    }
    Expr::Other { text: text[..end].to_string() }
}

fn boxed(node: Option<&SyntaxNode>, source: &str, depth: usize) -> Box<Expr> {
    Box::new(match node {
        Some(n) => lower(n, source, depth + 1),
        None => Expr::Other { text: String::new() },
    })
}

fn lower(node: &SyntaxNode, source: &str, depth: usize) -> Expr {
    if depth > MAX_DEPTH {
        return other(node, source);
    }
    match node.grammar.as_str() {
        "identifier" => Expr::Ident { name: node.text(source).to_string() },
        "null" => Expr::Null,
        "number_literal" | "true" | "false" | "sizeof_expression" | "alignof_expression" | "offsetof_expression" => {
            Expr::NumberLit
        }
        "string_literal" | "concatenated_string" => Expr::StringLit,
        "char_literal" => Expr::CharLit,
        "parenthesized_expression" => match node.children.first() {
            Some(inner) if node.children.len() == 1 => lower(inner, source, depth + 1),
            _ => other(node, source),
        },
        "comma_expression" => match node.child_by_field("right") {
            Some(r) => lower(r, source, depth + 1),
            None => other(node, source),
        },
        "field_expression" => Expr::Field {
            base: boxed(node.child_by_field("argument"), source, depth),
            field: node.child_by_field("field").map(|f| f.text(source).to_string()).unwrap_or_default(),
            arrow: node.op.as_deref() == Some("->"),
        },
        "pointer_expression" => {
            let inner = boxed(node.child_by_field("argument"), source, depth);
            if node.op.as_deref() == Some("&") {
                Expr::AddrOf { inner }
            } else {
                Expr::Deref { inner }
            }
        }
        "subscript_expression" => Expr::Index { base: boxed(node.child_by_field("argument"), source, depth) },
        "call_expression" => Expr::Call { callee: boxed(node.child_by_field("function"), source, depth) },
        "cast_expression" => Expr::Cast {
            type_text: node
                .child_by_field("type")
                .map(|t| t.text(source).split_whitespace().collect::<Vec<_>>().join(" "))
                .unwrap_or_default(),
            inner: boxed(node.child_by_field("value"), source, depth),
        },
        "conditional_expression" => Expr::Conditional {
            then: boxed(node.child_by_field("consequence"), source, depth),
            otherwise: boxed(node.child_by_field("alternative"), source, depth),
        },
        _ => other(node, source),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_file;

    fn lower_first_expr(src: &str) -> Expr {
        let f = parse_file("t.c", &format!("void g(void) {{ {src}; }}"));
        let stmt = f.root.descendants().find(|n| n.is("expression_statement")).unwrap();
        lower_expr(&stmt.children[0], &f.source)
    }

    #[test]
    fn field_chain() {
        let e = lower_first_expr("a->b.c");
        assert_eq!(
            e,
            Expr::Field {
                base: Box::new(Expr::Field {
                    base: Box::new(Expr::Ident { name: "a".into() }),
                    field: "b".into(),
                    arrow: true
                }),
                field: "c".into(),
                arrow: false
            }
        );
    }

    #[test]
    fn designators() {
        assert_eq!(lower_first_expr("&f").as_designator(), Some("f"));
        assert_eq!(lower_first_expr("(cb_t)f").as_designator(), Some("f"));
        assert_eq!(lower_first_expr("(f)").as_designator(), Some("f"));
        assert_eq!(lower_first_expr("t[1]").as_designator(), None);
    }

    #[test]
    fn conditional_value_names() {
        assert_eq!(lower_first_expr("c ? f : g").value_names(), vec!["f", "g"]);
    }

    #[test]
    fn null_constants() {
        assert!(lower_first_expr("NULL").is_null_constant());
        assert!(lower_first_expr("(void *)0").is_null_constant());
        assert!(!lower_first_expr("p").is_null_constant());
    }
}
