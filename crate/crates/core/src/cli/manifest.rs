use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Provenance record written next to the CSVs of one command.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub basis_hash: Option<String>,
    pub cached: bool,
    pub seed: u64,
    pub budgets: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, f64>,
    pub timings: Vec<StageTiming>,
    pub outputs: Vec<String>,
    pub checks: Vec<CheckOutcome>,
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config_hash: String, seed: u64) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash,
            basis_hash: None,
            cached: false,
            seed,
            budgets: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            timings: Vec::new(),
            outputs: Vec::new(),
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Runs `f` and records its wall-clock time under `stage`.
    pub fn stage<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f(self);
        self.timings.push(StageTiming {
            stage: stage.into(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    /// Records `value ≤ tolerance`; NaN values fail.
    pub fn check(&mut self, name: &str, value: f64, tolerance: f64) {
        self.tolerances.insert(name.into(), tolerance);
        self.checks.push(CheckOutcome {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        });
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}
