//! Owned, error-tolerant syntax trees built on top of tree-sitter's C grammar.
//!
//! Files are parsed without preprocessing. Regions the grammar cannot make
//! sense of (macro-decorated declarations, `#if` arms inside initializers,
//! macro calls glued onto declarators) become `Error` nodes and are reported
//! in [`ParseDiagnostics`]; parsing itself never fails.

use serde::{Deserialize, Serialize};

/// Location of a syntax element inside one project file.
///
/// Lines and columns are 1-based; columns count bytes. `byte_start..byte_end`
/// is the half-open byte range in the file.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourceSpan {
    pub file: String,
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
    pub byte_start: usize,
    pub byte_end: usize,
}

impl SourceSpan {
    pub fn contains(&self, other: &SourceSpan) -> bool {
        self.byte_start <= other.byte_start && other.byte_end <= self.byte_end
    }

    pub fn overlaps(&self, other: &SourceSpan) -> bool {
        self.byte_start < other.byte_end && other.byte_start < self.byte_end
    }

    /// Canonical `file:line:col` position string of the span start.
    pub fn position_id(&self) -> String {
        format!("{}:{}:{}", self.file, self.start_line, self.start_col)
    }
}

/// Coarse node classification used by the analyses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    FunctionDefinition,
    Typedef,
    StructDefinition,
    Declaration,
    AssignmentExpression,
    CallExpression,
    Identifier,
    Error,
    Other,
}

impl NodeKind {
    fn classify(grammar: &str, has_body: bool) -> Self {
        match grammar {
            "function_definition" => NodeKind::FunctionDefinition,
            "type_definition" => NodeKind::Typedef,
            "struct_specifier" | "union_specifier" if has_body => NodeKind::StructDefinition,
            "declaration" | "recovered_declaration" => NodeKind::Declaration,
            "assignment_expression" => NodeKind::AssignmentExpression,
            "call_expression" => NodeKind::CallExpression,
            "identifier" => NodeKind::Identifier,
            "ERROR" => NodeKind::Error,
            _ => NodeKind::Other,
        }
    }
}

/// One node of an owned syntax tree. Only named grammar nodes are kept;
/// comments are dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxNode {
    pub kind: NodeKind,
    /// tree-sitter grammar kind (`field_expression`, `pointer_declarator`, ...),
    /// or `recovered_declaration` for declarations rebuilt from error regions.
    pub grammar: String,
    /// Field name under which this node hangs off its parent, if any.
    pub field: Option<String>,
    /// Operator token for nodes that carry one (`->`, `=`, `&`, ...).
    pub op: Option<String>,
    pub span: SourceSpan,
    pub children: Vec<SyntaxNode>,
}

impl SyntaxNode {
    pub fn is(&self, grammar: &str) -> bool {
        self.grammar == grammar
    }

    pub fn child_by_field(&self, field: &str) -> Option<&SyntaxNode> {
        self.children.iter().find(|c| c.field.as_deref() == Some(field))
    }

    pub fn children_by_field<'a>(&'a self, field: &'a str) -> impl Iterator<Item = &'a SyntaxNode> + 'a {
        self.children.iter().filter(move |c| c.field.as_deref() == Some(field))
    }

    /// Exact source slice covered by this node.
    pub fn text<'s>(&self, source: &'s str) -> &'s str {
        source.get(self.span.byte_start..self.span.byte_end).unwrap_or("")
    }

    /// Pre-order traversal of this node and all descendants.
    pub fn descendants(&self) -> Descendants<'_> {
        Descendants { stack: vec![self] }
    }

    pub fn contains_error(&self) -> bool {
        self.descendants().any(|n| n.kind == NodeKind::Error)
    }
}

pub struct Descendants<'a> {
    stack: Vec<&'a SyntaxNode>,
}

impl<'a> Iterator for Descendants<'a> {
    type Item = &'a SyntaxNode;

    fn next(&mut self) -> Option<Self::Item> {
        let node = self.stack.pop()?;
        self.stack.extend(node.children.iter().rev());
        Some(node)
    }
}

/// Parse-quality report for one file.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ParseDiagnostics {
    pub file: String,
    pub error_regions: Vec<SourceSpan>,
    pub parse_succeeded: bool,
    /// Free-form notes (skipped functions, macro-tainted declarators, ...).
    #[serde(default)]
    pub notes: Vec<String>,
}

impl ParseDiagnostics {
    pub fn is_clean(&self) -> bool {
        self.error_regions.is_empty()
    }

    pub fn in_error_region(&self, span: &SourceSpan) -> bool {
        self.error_regions.iter().any(|e| e.overlaps(span))
    }
}

/// A parsed file: its source text, syntax tree and diagnostics.
#[derive(Debug, Clone)]
pub struct ParsedFile {
    pub path: String,
    pub source: String,
    pub root: SyntaxNode,
    pub diagnostics: ParseDiagnostics,
}

impl ParsedFile {
    pub fn text(&self, node: &SyntaxNode) -> &str {
        node.text(&self.source)
    }

    /// Directory part of the file path (`""` for files at the project root).
    pub fn dir(&self) -> &str {
        file_dir(&self.path)
    }
}

pub fn file_dir(path: &str) -> &str {
    match path.rfind('/') {
        Some(i) => &path[..i],
        None => "",
    }
}

/// Parse raw, un-preprocessed C source. Always produces a tree.
pub fn parse_file(path: &str, source_text: &str) -> ParsedFile {
    let path = path.replace('\\', "/");
    let mut parser = tree_sitter::Parser::new();
    parser
        .set_language(&tree_sitter_c::LANGUAGE.into())
        .expect("tree-sitter-c grammar is ABI compatible");
    let tree = parser.parse(source_text, None);

    let mut diagnostics = ParseDiagnostics {
        file: path.clone(),
        ..Default::default()
    };
    let root = match tree {
        Some(tree) => {
            diagnostics.parse_succeeded = true;
            let mut root = convert(tree.root_node(), &path, &mut diagnostics);
            recover_declarations(&mut root, source_text);
            root
        }
        None => {
            // Only reachable on cancellation; keep the contract of returning a root.
            let span = whole_file_span(&path, source_text);
            diagnostics.error_regions.push(span.clone());
            diagnostics.notes.push("parser produced no tree".into());
            SyntaxNode {
                kind: NodeKind::Error,
                grammar: "ERROR".into(),
                field: None,
                op: None,
                span,
                children: Vec::new(),
            }
        }
    };
    diagnostics.error_regions.sort();
    diagnostics.error_regions.dedup();
    ParsedFile {
        path,
        source: source_text.to_string(),
        root,
        diagnostics,
    }
}

fn whole_file_span(path: &str, source: &str) -> SourceSpan {
    let lines = source.split('\n').count() as u32;
    let last_len = source.rsplit('\n').next().map_or(0, str::len) as u32;
    SourceSpan {
        file: path.to_string(),
        start_line: 1,
        start_col: 1,
        end_line: lines.max(1),
        end_col: last_len + 1,
        byte_start: 0,
        byte_end: source.len(),
    }
}

fn span_of(node: &tree_sitter::Node<'_>, file: &str) -> SourceSpan {
    let s = node.start_position();
    let e = node.end_position();
    SourceSpan {
        file: file.to_string(),
        start_line: s.row as u32 + 1,
        start_col: s.column as u32 + 1,
        end_line: e.row as u32 + 1,
        end_col: e.column as u32 + 1,
        byte_start: node.start_byte(),
        byte_end: node.end_byte(),
    }
}

/// Iterative conversion so that pathological nesting cannot exhaust the stack.
fn convert<'t>(root: tree_sitter::Node<'t>, file: &str, diags: &mut ParseDiagnostics) -> SyntaxNode {
    struct Frame<'t> {
        node: SyntaxNode,
        pending: Vec<(tree_sitter::Node<'t>, Option<String>)>,
    }

    fn open<'t>(n: tree_sitter::Node<'t>, field: Option<String>, file: &str, diags: &mut ParseDiagnostics) -> Frame<'t> {
        let grammar = n.kind().to_string();
        let has_body = n.child_by_field_name("body").is_some();
        let span = span_of(&n, file);
        if n.is_error() {
            diags.error_regions.push(span.clone());
        }
        let mut op = None;
        let mut pending = Vec::new();
        let mut cursor = n.walk();
        for (i, child) in n.children(&mut cursor).enumerate() {
            let child_field = n.field_name_for_child(i as u32).map(str::to_string);
            if child.is_missing() {
                diags.error_regions.push(span_of(&child, file));
                continue;
            }
            if !child.is_named() {
                if child_field.as_deref() == Some("operator") {
                    op = Some(child.kind().to_string());
                }
                continue;
            }
            if child.kind() == "comment" {
                continue;
            }
            pending.push((child, child_field));
        }
        pending.reverse();
        Frame {
            node: SyntaxNode {
                kind: NodeKind::classify(&grammar, has_body),
                grammar,
                field,
                op,
                span,
                children: Vec::new(),
            },
            pending,
        }
    }

    let mut stack = vec![open(root, None, file, diags)];
    loop {
        let top = stack.last_mut().expect("stack never empty inside loop");
        if let Some((child, field)) = top.pending.pop() {
            let frame = open(child, field, file, diags);
            stack.push(frame);
            continue;
        }
        let done = stack.pop().expect("checked above").node;
        match stack.last_mut() {
            Some(parent) => parent.node.children.push(done),
            None => return done,
        }
    }
}

const TYPE_KEYWORDS: &[&str] = &[
    "void", "char", "short", "int", "long", "float", "double", "signed", "unsigned", "_Bool", "bool",
];
const QUALIFIERS: &[&str] = &[
    "const", "volatile", "restrict", "__restrict", "__restrict__", "static", "extern", "register",
    "inline", "__inline", "__inline__", "_Thread_local", "__thread", "__extension__", "auto",
];

#[derive(Debug, Clone, PartialEq)]
struct Tok {
    text: String,
    start: usize,
    end: usize,
}

fn tokenize(text: &str, base: usize) -> Vec<Tok> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            i = text[i + 2..].find("*/").map_or(bytes.len(), |p| i + 2 + p + 2);
        } else if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            i = text[i..].find('\n').map_or(bytes.len(), |p| i + p);
        } else if c.is_ascii_alphanumeric() || c == b'_' {
            let s = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Tok { text: text[s..i].to_string(), start: base + s, end: base + i });
        } else {
            let len = text[i..].chars().next().map_or(1, char::len_utf8);
            out.push(Tok { text: text[i..i + len].to_string(), start: base + i, end: base + i + len });
            i += len;
        }
    }
    out
}

fn is_ident(t: &Tok) -> bool {
    t.text.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
}

/// Shape of a declaration whose trailing macro decoration broke the grammar,
/// e.g. `dns_rdataset_t *rdataset DNS__FLARG;`.
struct RecoveredShape {
    type_range: (usize, usize),
    name_range: (usize, usize),
    tail_range: (usize, usize),
}

fn match_macro_decorated_declaration(text: &str, base: usize) -> Option<RecoveredShape> {
    let mut toks = tokenize(text, base);
    if toks.last().is_some_and(|t| t.text == ";") {
        toks.pop();
    }
    let mut i = 0;
    while i < toks.len() && QUALIFIERS.contains(&toks[i].text.as_str()) {
        i += 1;
    }
    let type_start = toks.get(i)?.start;
    match toks.get(i)?.text.as_str() {
        "struct" | "union" | "enum" => {
            if !toks.get(i + 1).is_some_and(is_ident) {
                return None;
            }
            i += 2;
        }
        t if TYPE_KEYWORDS.contains(&t) => {
            while i < toks.len() && TYPE_KEYWORDS.contains(&toks[i].text.as_str()) {
                i += 1;
            }
        }
        _ if is_ident(&toks[i]) => i += 1,
        _ => return None,
    }
    let mut type_end = toks[i - 1].end;
    while i < toks.len() && (toks[i].text == "*" || QUALIFIERS.contains(&toks[i].text.as_str())) {
        type_end = toks[i].end;
        i += 1;
    }
    let name = toks.get(i)?;
    if !is_ident(name) || TYPE_KEYWORDS.contains(&name.text.as_str()) || QUALIFIERS.contains(&name.text.as_str()) {
        return None;
    }
    let name_range = (name.start, name.end);
    i += 1;
    let tail = &toks[i..];
    if tail.is_empty() || !is_ident(&tail[0]) {
        return None;
    }
    // Macro tail: identifiers, optionally with a balanced argument list.
    let mut depth = 0i32;
    for t in tail {
        match t.text.as_str() {
            "(" => depth += 1,
            ")" => {
                depth -= 1;
                if depth < 0 {
                    return None;
                }
            }
            "=" | "{" | "}" | ";" if depth == 0 => return None,
            _ if depth == 0 && !is_ident(t) && t.text != "," => return None,
            _ => {}
        }
    }
    if depth != 0 {
        return None;
    }
    Some(RecoveredShape {
        type_range: (type_start, type_end),
        name_range,
        tail_range: (tail[0].start, tail.last()?.end),
    })
}

fn sub_span(parent: &SourceSpan, source: &str, range: (usize, usize)) -> SourceSpan {
    let (line, col) = line_col(source, range.0);
    let (eline, ecol) = line_col(source, range.1);
    SourceSpan {
        file: parent.file.clone(),
        start_line: line,
        start_col: col,
        end_line: eline,
        end_col: ecol,
        byte_start: range.0,
        byte_end: range.1,
    }
}

fn line_col(source: &str, byte: usize) -> (u32, u32) {
    let before = &source.as_bytes()[..byte.min(source.len())];
    let line = before.iter().filter(|&&b| b == b'\n').count() as u32 + 1;
    let col = before.iter().rev().take_while(|&&b| b != b'\n').count() as u32 + 1;
    (line, col)
}

fn leaf(kind: NodeKind, grammar: &str, field: Option<&str>, span: SourceSpan) -> SyntaxNode {
    SyntaxNode {
        kind,
        grammar: grammar.into(),
        field: field.map(str::to_string),
        op: None,
        span,
        children: Vec::new(),
    }
}

/// Replace statement-level error nodes that are really macro-decorated
/// declarations with a `recovered_declaration` node. The declared variable is
/// kept; the trailing macro tokens stay an error region inside it.
fn recover_declarations(node: &mut SyntaxNode, source: &str) {
    let is_container = matches!(
        node.grammar.as_str(),
        "translation_unit" | "compound_statement" | "preproc_if" | "preproc_ifdef" | "preproc_else" | "preproc_elif"
    );
    if is_container {
        for child in node.children.iter_mut() {
            let candidate = child.kind == NodeKind::Error
                || (child.is("expression_statement") && child.contains_error());
            if !candidate {
                continue;
            }
            let text = child.text(source);
            if let Some(shape) = match_macro_decorated_declaration(text, child.span.byte_start) {
                let span = child.span.clone();
                let type_node = leaf(NodeKind::Other, "type_identifier", Some("type"), sub_span(&span, source, shape.type_range));
                let name_node = leaf(NodeKind::Identifier, "identifier", Some("declarator"), sub_span(&span, source, shape.name_range));
                let tail = leaf(NodeKind::Error, "ERROR", None, sub_span(&span, source, shape.tail_range));
                *child = SyntaxNode {
                    kind: NodeKind::Declaration,
                    grammar: "recovered_declaration".into(),
                    field: child.field.clone(),
                    op: None,
                    span,
                    children: vec![type_node, name_node, tail],
                };
            }
        }
    }
    for child in node.children.iter_mut() {
        recover_declarations(child, source);
    }
}
