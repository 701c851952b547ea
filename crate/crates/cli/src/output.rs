//! Deterministic output writing: CSV with a fixed 10-significant-digit
//! float format and '\n' line endings, or JSON arrays of the same
//! records. Identical runs produce identical bytes.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, clap::Args)]
pub struct OutArgs {
    /// Output file; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

/// Fixed 10-significant-digit scientific format; NaN cells print as the
/// literal "NaN".
pub fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{:.9e}", x)
    }
}

pub fn render_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = String::new();
    s.push_str(&header.join(","));
    s.push('\n');
    for row in rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn render_json<T: serde::Serialize>(rows: &[T]) -> Result<String, String> {
    let mut s = serde_json::to_string_pretty(rows).map_err(|e| e.to_string())?;
    s.push('\n');
    Ok(s)
}

/// Writes to the path, or stdout when none is given.
pub fn emit(path: Option<&Path>, content: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, content),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())
        }
    }
}
