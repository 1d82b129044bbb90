//! Result tables and their CSV form.
//!
//! Layout: `# ` metadata lines (library version, timestamp, config echo), then
//! the header row, then one row per record. UTF-8, LF line endings, numbers in
//! shortest round-trip decimal form.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::config::ExperimentConfig;
use crate::error::Result;

pub const TIMESTAMP_PREFIX: &str = "# timestamp: ";

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub header: String,
    pub rows: Vec<String>,
    pub metadata: Vec<String>,
}

impl ResultTable {
    pub fn new(header: &str, cfg: &ExperimentConfig) -> Self {
        let mut metadata = vec![format!("rwf-harness {}", env!("CARGO_PKG_VERSION"))];
        metadata.extend(cfg.echo());
        ResultTable { header: header.to_string(), rows: Vec::new(), metadata }
    }

    pub fn push(&mut self, fields: &[String]) {
        self.rows.push(fields.join(","));
    }

    pub fn to_csv(&self, timestamp: u64) -> String {
        let mut out = String::new();
        out.push_str(&format!("{TIMESTAMP_PREFIX}{timestamp}\n"));
        for m in &self.metadata {
            out.push_str(&format!("# {m}\n"));
        }
        out.push_str(&self.header);
        out.push('\n');
        for r in &self.rows {
            out.push_str(r);
            out.push('\n');
        }
        out
    }

    /// Writes the whole file in one call, stamped with the current Unix time.
    pub fn write(&self, path: &Path) -> Result<()> {
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        fs::write(path, self.to_csv(now))?;
        Ok(())
    }
}

/// CSV text without its timestamp line, for reproducibility comparisons.
pub fn strip_timestamp(csv: &str) -> String {
    csv.lines().filter(|l| !l.starts_with(TIMESTAMP_PREFIX)).map(|l| format!("{l}\n")).collect()
}
