use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::anchors;
use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// An empirical value or a flagged discrepancy; never counts as a failure.
    Recorded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub anchor: String,
    pub values: BTreeMap<String, Value>,
    pub bound: Option<String>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    pub fn new(name: &str, anchor: &str) -> Self {
        debug_assert!(anchors::lookup(anchor).is_some(), "unregistered anchor {anchor}");
        Self {
            name: name.into(),
            anchor: anchor.into(),
            values: BTreeMap::new(),
            bound: None,
            status: Status::Recorded,
            note: None,
        }
    }

    pub fn value(mut self, key: &str, v: impl Serialize) -> Self {
        self.values
            .insert(key.into(), serde_json::to_value(v).unwrap_or(Value::Null));
        self
    }

    pub fn bound(mut self, b: impl Into<String>) -> Self {
        self.bound = Some(b.into());
        self
    }

    pub fn note(mut self, n: impl Into<String>) -> Self {
        self.note = Some(n.into());
        self
    }

    pub fn check(mut self, ok: bool) -> Self {
        self.status = if ok { Status::Pass } else { Status::Fail };
        self
    }

    pub fn recorded(mut self) -> Self {
        self.status = Status::Recorded;
        self
    }

    /// A check that could not run; counts as a failure.
    pub fn error(name: &str, anchor: &str, err: impl std::fmt::Display) -> Self {
        Self::new(name, anchor).note(format!("error: {err}")).check(false)
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub tool: String,
    pub version: String,
    pub os: String,
    pub arch: String,
    pub threads: usize,
}

impl Environment {
    pub fn current() -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            threads: rayon::current_num_threads(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub recorded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    /// Seconds since the Unix epoch; the only field that varies between
    /// identical runs.
    pub timestamp: u64,
    pub environment: Environment,
    pub config: RunConfig,
    pub summary: Summary,
    pub records: Vec<CheckRecord>,
}

/// Exit codes saturate here so they stay below the shell's signal range.
pub const MAX_EXIT: usize = 100;

impl Report {
    pub fn new(command: &str, config: &RunConfig, records: Vec<CheckRecord>) -> Self {
        let mut summary = Summary::default();
        for r in &records {
            match r.status {
                Status::Pass => summary.passed += 1,
                Status::Fail => summary.failed += 1,
                Status::Recorded => summary.recorded += 1,
            }
        }
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            command: command.into(),
            timestamp,
            environment: Environment::current(),
            config: config.clone(),
            summary,
            records,
        }
    }

    pub fn failures(&self) -> Vec<&CheckRecord> {
        self.records
            .iter()
            .filter(|r| r.status == Status::Fail)
            .collect()
    }

    pub fn exit_code(&self) -> i32 {
        self.summary.failed.min(MAX_EXIT) as i32
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `<stem>.json` and `<stem>.csv` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let json = dir.join(format!("{stem}.json"));
        std::fs::write(&json, self.to_json()? + "\n")
            .with_context(|| format!("writing {}", json.display()))?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let mut w = csv::Writer::from_path(&csv_path)
            .with_context(|| format!("writing {}", csv_path.display()))?;
        w.write_record(["name", "anchor", "status", "bound", "values", "note"])?;
        for r in &self.records {
            let values = r
                .values
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(";");
            let status = serde_json::to_value(r.status)?;
            w.write_record([
                r.name.as_str(),
                r.anchor.as_str(),
                status.as_str().unwrap_or_default(),
                r.bound.as_deref().unwrap_or(""),
                values.as_str(),
                r.note.as_deref().unwrap_or(""),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_and_exit_code() {
        let recs = vec![
            CheckRecord::new("a", "oseen.residual").check(true),
            CheckRecord::new("b", "oseen.residual").check(false),
            CheckRecord::new("c", "oseen.residual").recorded(),
        ];
        let r = Report::new("verify", &RunConfig::default(), recs);
        assert_eq!(
            r.summary,
            Summary {
                passed: 1,
                failed: 1,
                recorded: 1
            }
        );
        assert_eq!(r.exit_code(), 1);
        let many = (0..150)
            .map(|_| CheckRecord::new("x", "oseen.residual").check(false))
            .collect();
        assert_eq!(Report::new("verify", &RunConfig::default(), many).exit_code(), 100);
    }
}
