//! C front end: error-tolerant parsing, declarator decoding, lexical scopes
//! and indirect-call discovery.

pub mod decl;
pub mod expr;
pub mod functions;
pub mod icall;
pub mod scope;
pub mod syntax;

use std::path::Path;

pub use expr::Expr;
pub use functions::{enumerate_functions, RawFunction};
pub use icall::{find_icalls, icall_at, unique_id, IcallSite, PointerExpr, PointerKind, ScopeInfo};
pub use syntax::{parse_file, NodeKind, ParseDiagnostics, ParsedFile, SourceSpan, SyntaxNode};

use crate::error::{Error, Result};

/// Read and parse one file. `rel_path` is the project-relative name recorded
/// in spans and ids. Invalid UTF-8 is replaced rather than rejected.
pub fn parse_path(root: &Path, rel_path: &str) -> Result<ParsedFile> {
    let full = root.join(rel_path);
    let bytes = std::fs::read(&full).map_err(|source| Error::Io { path: full.display().to_string(), source })?;
    let text = String::from_utf8_lossy(&bytes);
    Ok(parse_file(rel_path, &text))
}

/// Project-relative paths (forward slashes, sorted) of all files under `root`
/// whose extension is in `extensions`.
pub fn discover_sources(root: &Path, extensions: &[String]) -> Result<Vec<String>> {
    if !root.is_dir() {
        return Err(Error::Io {
            path: root.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "project root is not a directory"),
        });
    }
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(root).follow_links(false) {
        let entry = entry.map_err(|e| Error::Io {
            path: e.path().map(|p| p.display().to_string()).unwrap_or_default(),
            source: e.into_io_error().unwrap_or_else(|| std::io::Error::other("walk error")),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let ext = entry.path().extension().and_then(|e| e.to_str()).unwrap_or("");
        if !extensions.iter().any(|x| x == ext) {
            continue;
        }
        let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
        let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        out.push(rel);
    }
    out.sort();
    Ok(out)
}
