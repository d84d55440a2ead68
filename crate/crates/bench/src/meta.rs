//! Run metadata written next to the result table.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::config::BenchConfig;
use crate::runner::{RunOptions, RunOutput, RNG_NAME, SEED_RULE};
use crate::BenchError;

#[derive(Debug, Serialize)]
pub struct RunMetadata<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub rng: &'static str,
    pub seed_rule: &'static str,
    pub seed_base: u64,
    /// Replication seeds by sample size.
    pub seeds: BTreeMap<String, &'a [u64]>,
    pub workers: usize,
    pub timing: bool,
    pub diagnostics: &'a [String],
    pub config: &'a BenchConfig,
}

impl<'a> RunMetadata<'a> {
    pub fn new(cfg: &'a BenchConfig, opts: &RunOptions, out: &'a RunOutput) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            rng: RNG_NAME,
            seed_rule: SEED_RULE,
            seed_base: cfg.seed_base,
            seeds: out.seeds.iter().map(|(n, s)| (n.to_string(), s.as_slice())).collect(),
            workers: opts.workers,
            timing: opts.timing,
            diagnostics: &out.diagnostics,
            config: cfg,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), BenchError> {
        let text = serde_json::to_string_pretty(self).expect("metadata serializes");
        std::fs::write(path, text + "\n").map_err(|e| BenchError::Io(path.to_path_buf(), e))
    }
}

/// Write `results.csv`, `records.csv`, `fcount.svg` and `metadata.json`
/// into `dir`.
pub fn write_outputs(dir: &Path, cfg: &BenchConfig, opts: &RunOptions, out: &RunOutput) -> Result<(), BenchError> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::Io(dir.to_path_buf(), e))?;
    out.table.save(&dir.join("results.csv"))?;
    let rec_path = dir.join("records.csv");
    let f = std::fs::File::create(&rec_path).map_err(|e| BenchError::Io(rec_path.clone(), e))?;
    crate::table::write_records(&out.records, std::io::BufWriter::new(f))?;
    crate::svg::save(&out.table, &cfg.threshold, &cfg.name, &dir.join("fcount.svg"))?;
    RunMetadata::new(cfg, opts, out).save(&dir.join("metadata.json"))
}
