//! Experiment harness around `pedl-core`: file formats, experiment configs,
//! scenario fixtures, report emission, and the balls-and-bins warm-up.
//!
//! Everything here is deliberately deterministic: a fixed config (including
//! its seed) produces byte-identical JSON and CSV artifacts, which is what
//! the reproducibility checks in the acceptance suite assert.

pub mod ballsbins;
pub mod config;
pub mod experiment;
pub mod io;

/// Success-probability floor shared with the core crate: 1/17.
pub use pedl_core::moments::SUCCESS_FLOOR;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// Config validation collects every violation before reporting.
    #[error("invalid configuration:\n{}", format_items(.0))]
    Config(Vec<String>),
    #[error(transparent)]
    Core(#[from] pedl_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Format(String),
}

fn format_items(items: &[String]) -> String {
    items
        .iter()
        .map(|i| format!("  - {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub type Result<T> = std::result::Result<T, HarnessError>;
