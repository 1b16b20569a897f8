//! The context database: address-taken functions plus the seven maps
//! (type aliases, structs, globals, functions, and the three kinds of
//! address-taken sites), together with the per-function facts the
//! resolvers and context queries need.
//!
//! The database is built once, in two passes, and is read-only afterwards.

mod address_taken;
mod build;
mod infer;
pub mod types;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::frontend::{Expr, IcallSite, ParseDiagnostics, SourceSpan};

pub use address_taken::{excluded_identifiers, identify_address_taken};
pub use build::{BuildConfig, DEFAULT_EXTENSIONS};
pub use types::{resolve_type, AliasSource, TypeExpr};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeAlias {
    pub name: String,
    /// The aliased type's spelling.
    pub src_type_text: String,
    pub type_expr: TypeExpr,
    pub definition_text: String,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldInfo {
    pub name: String,
    pub type_text: String,
    pub type_expr: TypeExpr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructInfo {
    /// Tag name (without the `struct`/`union` keyword).
    pub name: String,
    pub is_union: bool,
    pub fields: Vec<FieldInfo>,
    pub definition_text: String,
    pub span: SourceSpan,
}

impl StructInfo {
    pub fn field(&self, name: &str) -> Option<&FieldInfo> {
        self.fields.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalVar {
    pub name: String,
    pub type_text: String,
    pub type_expr: TypeExpr,
    pub init_text: Option<String>,
    pub decl_text: String,
    pub is_static: bool,
    pub is_extern: bool,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: Option<String>,
    pub type_text: String,
    pub type_expr: TypeExpr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalVar {
    pub name: String,
    pub type_expr: TypeExpr,
    pub decl_text: String,
    pub span: SourceSpan,
    /// `&name` appears somewhere in the function.
    pub address_taken: bool,
    /// Right-hand sides of the initializer and of every plain `=` assignment
    /// to this variable, in source order.
    pub defs: Vec<Expr>,
    /// Modified other than by plain assignment (`+=`, `++`, ...).
    pub other_writes: bool,
}

/// How a function parameter is used inside its function; drives call chains.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "use", rename_all = "snake_case")]
pub enum ParamUse {
    /// Stored somewhere: `table->cmp = h`, `void (*p)(void) = h`.
    Assigned { index: usize, text: String, target: PointerFacts },
    /// Called through: `h(x)`.
    Invoked { index: usize, call_text: String },
    /// Forwarded as an argument of another call.
    Passed {
        index: usize,
        call_text: String,
        arg_index: usize,
        /// Keys of the directly called function; empty for indirect or unknown calls.
        callee_keys: Vec<String>,
        is_icall: bool,
    },
}

impl ParamUse {
    pub fn index(&self) -> usize {
        match self {
            ParamUse::Assigned { index, .. } | ParamUse::Invoked { index, .. } | ParamUse::Passed { index, .. } => {
                *index
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionInfo {
    pub name: String,
    /// Database key: the bare name, or `name@file` when several definitions share the name.
    pub key: String,
    pub file: String,
    pub span: SourceSpan,
    pub declarator_text: String,
    pub return_type: TypeExpr,
    pub parameters: Vec<Param>,
    pub is_variadic: bool,
    pub is_static: bool,
    pub local_vars: Vec<LocalVar>,
    /// The full definition text.
    pub body_text: String,
    /// The definition overlaps a parse error region.
    pub partial: bool,
    pub param_uses: Vec<ParamUse>,
}

impl FunctionInfo {
    pub fn local(&self, span: &SourceSpan) -> Option<&LocalVar> {
        self.local_vars.iter().find(|l| &l.span == span)
    }

    pub fn dir(&self) -> &str {
        crate::frontend::syntax::file_dir(&self.file)
    }
}

/// Where a variable referenced by a pointer expression was declared.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarScope {
    Global,
    Local,
    Param,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarRef {
    pub name: String,
    pub scope: VarScope,
    pub decl_text: String,
    pub type_text: String,
    /// Declaration position (locals), definition position (params).
    pub span: Option<SourceSpan>,
}

/// What is known about a function-pointer expression or store target.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PointerFacts {
    /// The variable at the root of the expression (`fp`, `ctx` in `ctx->f`).
    pub var: Option<VarRef>,
    /// Struct/union tag of the innermost field access.
    pub struct_name: Option<String>,
    pub field: Option<String>,
    /// Type aliases appearing in the relevant declarations, outermost first.
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SiteKind {
    Assignment { lhs_expr_text: String, stmt_text: String, enclosing_function: String, target: PointerFacts },
    Initializer {
        declared_entity: String,
        decl_text: String,
        /// Struct tag for aggregate initializers, the variable name otherwise.
        enclosing_struct_or_var: String,
        field: Option<String>,
        enclosing_function: Option<String>,
        target: PointerFacts,
    },
    CallArgument {
        call_text: String,
        arg_index: usize,
        enclosing_function: String,
        enclosing_key: Option<String>,
        /// Keys of the directly called function; empty when it is unknown or indirect.
        callee_keys: Vec<String>,
        is_icall: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddressTakenSite {
    pub function_name: String,
    pub site_kind: SiteKind,
    pub span: SourceSpan,
}

/// Value written into a struct field.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum StoredValue {
    Function(String),
    Null,
    Other(String),
}

/// One store into a struct field, from an assignment or an initializer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FieldStore {
    /// `None` when the stored-to object has an unknown type.
    pub struct_name: Option<String>,
    /// `None` when the field cannot be told (positional entry after a parse error).
    pub field: Option<String>,
    pub value: StoredValue,
    pub span: SourceSpan,
}

/// An indirect call with the typing facts the resolvers need.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IcallRecord {
    pub site: IcallSite,
    pub arg_types: Vec<TypeExpr>,
    pub pointer: PointerFacts,
    /// Key of the enclosing function in `function_map`.
    pub enclosing_key: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextDatabase {
    pub type_alias_map: BTreeMap<String, TypeAlias>,
    pub struct_info_map: BTreeMap<String, StructInfo>,
    pub global_var_map: BTreeMap<String, GlobalVar>,
    pub function_map: BTreeMap<String, FunctionInfo>,
    pub func_to_call_exprs: BTreeMap<String, Vec<AddressTakenSite>>,
    pub func_to_declarations: BTreeMap<String, Vec<AddressTakenSite>>,
    pub func_to_assignments: BTreeMap<String, Vec<AddressTakenSite>>,
    /// Function keys (defined functions) and bare names (declared-only ones).
    pub address_taken: BTreeSet<String>,
    /// Names of functions that are only declared (prototypes).
    pub declared_functions: BTreeSet<String>,
    pub enumerators: BTreeSet<String>,
    pub icalls: BTreeMap<String, IcallRecord>,
    pub field_stores: Vec<FieldStore>,
    pub diagnostics: BTreeMap<String, ParseDiagnostics>,
    pub warnings: Vec<String>,
}

impl AliasSource for ContextDatabase {
    fn alias_spelling(&self, name: &str) -> Option<&str> {
        self.type_alias_map.get(name).map(|a| a.src_type_text.as_str())
    }
}

impl ContextDatabase {
    /// Build from a project directory.
    pub fn build(root: &std::path::Path, config: &BuildConfig) -> Result<Self> {
        build::build_project(root, config)
    }

    /// Build from in-memory `(path, text)` pairs.
    pub fn from_sources<P: AsRef<str>, S: AsRef<str>>(files: &[(P, S)]) -> Self {
        let parsed = files
            .iter()
            .map(|(p, s)| crate::frontend::parse_file(p.as_ref(), s.as_ref()))
            .collect();
        build::build_from_parsed(parsed)
    }

    pub fn resolve_type(&self, raw: &str) -> TypeExpr {
        resolve_type(raw, self)
    }

    /// Canonical serialization: sorted keys, two-space indentation.
    pub fn to_json(&self) -> Result<String> {
        crate::canonical_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Address-taken defined functions: the candidate universe.
    pub fn candidate_functions(&self) -> impl Iterator<Item = &FunctionInfo> {
        self.address_taken.iter().filter_map(|k| self.function_map.get(k))
    }

    /// Look a function up by key, or by bare name when that is unambiguous.
    pub fn function(&self, name_or_key: &str) -> Option<&FunctionInfo> {
        self.function_map.get(name_or_key).or_else(|| {
            let mut it = self.function_map.values().filter(|f| f.name == name_or_key);
            match (it.next(), it.next()) {
                (Some(f), None) => Some(f),
                _ => None,
            }
        })
    }

    /// All recorded sites for a function key, in the order
    /// initializers, assignments, call arguments (each sorted by position).
    pub fn sites_of(&self, key: &str) -> Vec<&AddressTakenSite> {
        let mut out = Vec::new();
        for map in [&self.func_to_declarations, &self.func_to_assignments, &self.func_to_call_exprs] {
            if let Some(v) = map.get(key) {
                out.extend(v.iter());
            }
        }
        out
    }

    pub fn struct_by_type(&self, t: &TypeExpr) -> Option<&StructInfo> {
        t.aggregate_name().and_then(|n| self.struct_info_map.get(n))
    }
}
