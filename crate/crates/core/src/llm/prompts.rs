use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::context::{cap_text, FRAGMENT_CAP};
use crate::error::{Error, Result};

pub const SUMMARY_INSTRUCTION: &str =
    "Analyze the functionality of the indirect call and response with a concise summary.";
pub const CALLEE_SUMMARY_INSTRUCTION: &str =
    "Analyze the functionality of the target function and response with a concise summary.";
pub const CONSOLIDATION_INSTRUCTION: &str = "Please consolidate those summaries.";
pub const MATCH_INSTRUCTION: &str =
    "Assess if the caller could invoke callee based on the semantic information given above. Answer with `yes' or `no'.";
pub const MATCH_HEADER: &str = "The subsequent text provides the summary of the caller and callee:";
pub const CALLER_SECTION: &str = "# 1.summary of caller";
pub const CALLEE_SECTION: &str = "# 2.summary of callee";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptRole {
    CallerLocal,
    CallerGlobal,
    CalleeLocal,
    CalleeSite,
    Consolidation,
    Match,
}

impl PromptRole {
    pub fn is_summary(self) -> bool {
        !matches!(self, PromptRole::Match)
    }
}

/// Which summaries the match prompt may use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchMode {
    #[default]
    Full,
    WoLocal,
    WoGlobal,
    WoAll,
}

impl MatchMode {
    pub fn uses_local(self) -> bool {
        matches!(self, MatchMode::Full | MatchMode::WoGlobal)
    }

    pub fn uses_global(self) -> bool {
        matches!(self, MatchMode::Full | MatchMode::WoLocal)
    }
}

impl FromStr for MatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(MatchMode::Full),
            "wo-local" => Ok(MatchMode::WoLocal),
            "wo-global" => Ok(MatchMode::WoGlobal),
            "wo-all" => Ok(MatchMode::WoAll),
            _ => Err(Error::Config(format!("unknown ablation mode `{s}` (full, wo-local, wo-global, wo-all)"))),
        }
    }
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchMode::Full => "full",
            MatchMode::WoLocal => "wo-local",
            MatchMode::WoGlobal => "wo-global",
            MatchMode::WoAll => "wo-all",
        })
    }
}

/// The four summaries of one caller/callee pair. A missing field means the
/// step was skipped.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryBundle {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caller_local: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caller_global: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub callee_local: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub callee_global: Option<String>,
}

/// Summary prompt for one piece of context. `target` names the callee for
/// the callee roles and is ignored otherwise. Local contexts are capped.
pub fn render_summary_prompt(context: &str, role: PromptRole, target: &str) -> Result<String> {
    if context.trim().is_empty() {
        return Err(Error::Contract(format!("empty context for {role:?} summary")));
    }
    let prompt = match role {
        PromptRole::CallerLocal => format!(
            "The local context for the indirect-call is listed as follows:\n\n{}\n\n{SUMMARY_INSTRUCTION}",
            cap_text(context, FRAGMENT_CAP)
        ),
        PromptRole::CallerGlobal => format!(
            "The declaration/struct/typedef context for the function pointer is listed as follows:\n\n{context}\n\n{SUMMARY_INSTRUCTION}"
        ),
        PromptRole::CalleeLocal => format!(
            "The target function {target} is listed as follows:\n\n{}\n\n{CALLEE_SUMMARY_INSTRUCTION}",
            cap_text(context, FRAGMENT_CAP)
        ),
        PromptRole::CalleeSite => format!(
            "The address-taken site for the target function {target} is listed as follows:\n\n{context}\n\n{CALLEE_SUMMARY_INSTRUCTION}"
        ),
        PromptRole::Consolidation | PromptRole::Match => {
            return Err(Error::Contract(format!("{role:?} is not a summary role")));
        }
    };
    Ok(prompt)
}

pub fn render_consolidation_prompt<S: AsRef<str>>(summaries: &[S]) -> Result<String> {
    if summaries.len() < 2 {
        return Err(Error::Contract("consolidation needs at least two summaries".into()));
    }
    let body = summaries.iter().map(|s| s.as_ref().trim()).collect::<Vec<_>>().join(",\n\n");
    Ok(format!(
        "The summaries of each address-taken site for the target function are:\n\n{body}\n\n{CONSOLIDATION_INSTRUCTION}"
    ))
}

/// Match prompt. `WoAll` shows the caller statement and callee name instead
/// of summaries; the other modes drop the fields they exclude.
pub fn render_match_prompt(bundle: &SummaryBundle, mode: MatchMode, caller_stmt: &str, callee_name: &str) -> Result<String> {
    if mode == MatchMode::WoAll {
        return Ok(format!(
            "The subsequent text provides the caller and callee:\n\n# 1.caller statement\n\n{}\n\n# 2.callee name\n\n{}\n\n{MATCH_INSTRUCTION}",
            caller_stmt.trim(),
            callee_name.trim()
        ));
    }
    let local = |f: &'_ Option<String>| f.as_deref().filter(|_| mode.uses_local()).map(str::to_string);
    let global = |f: &'_ Option<String>| f.as_deref().filter(|_| mode.uses_global()).map(str::to_string);
    let caller = [("1.1", local(&bundle.caller_local)), ("1.2", global(&bundle.caller_global))];
    let callee = [("2.1", local(&bundle.callee_local)), ("2.2", global(&bundle.callee_global))];
    if caller.iter().chain(&callee).all(|(_, v)| v.is_none()) {
        return Err(Error::Contract(format!("no summaries available for {mode} matching")));
    }
    let mut out = format!("{MATCH_HEADER}\n\n{CALLER_SECTION}\n\n");
    for (n, v) in caller.iter().filter_map(|(n, v)| v.as_ref().map(|v| (n, v))) {
        out.push_str(&format!("## {n}.{}\n\n", v.trim()));
    }
    out.push_str(CALLEE_SECTION);
    out.push_str("\n\n");
    for (n, v) in callee.iter().filter_map(|(n, v)| v.as_ref().map(|v| (n, v))) {
        out.push_str(&format!("## {n}.{}\n\n", v.trim()));
    }
    out.push_str(MATCH_INSTRUCTION);
    Ok(out)
}
