pub mod context;
pub mod db;
pub mod error;
pub mod evaluation;
pub mod frontend;
pub mod llm;
pub mod pipeline;
pub mod resolve;
pub mod scalar;

pub use db::ContextDatabase;
pub use error::{Error, Result};
pub use scalar::{Exact, Scalar};

pub type MetricsF64 = evaluation::Metrics<f64>;
pub type MetricsF32 = evaluation::Metrics<f32>;
pub type MetricsExact = evaluation::Metrics<Exact>;

/// Serialize with sorted object keys and a trailing newline, so that equal
/// values always produce identical bytes.
pub fn canonical_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}
