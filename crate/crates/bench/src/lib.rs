//! Seeded, parallel Monte Carlo comparison of ARH(1) estimators.

use std::path::PathBuf;

use arh_core::ArhError;

pub mod catalog;
pub mod config;
pub mod meta;
pub mod runner;
pub mod svg;
pub mod table;

pub use config::{BenchConfig, MethodKind, MethodSpec};
pub use runner::{replication_seed, run, RunOptions, RunOutput};
pub use table::{ResultRow, ResultTable};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] ArhError),

    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("worker pool: {0}")]
    Pool(String),
}

/// Configurations shipped with the tool, by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("scenario2-desk", include_str!("../configs/scenario2-desk.toml")),
    ("scenario13-desk", include_str!("../configs/scenario13-desk.toml")),
    ("scenario9-desk", include_str!("../configs/scenario9-desk.toml")),
    ("smoke", include_str!("../configs/smoke.toml")),
];

pub fn bundled(name: &str) -> Option<BenchConfig> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| BenchConfig::from_toml(text).expect("bundled config parses"))
}
