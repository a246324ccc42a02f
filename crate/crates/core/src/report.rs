//! Report files. Every artifact carries the tool version, the config hash and
//! the master seed: TSV files in a leading `#` line, JSON files in a `run` object.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DramnError, Result};
use crate::metrics::MetricsReport;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMeta {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl RunMeta {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        RunMeta {
            tool: "dramn".into(),
            version: TOOL_VERSION.into(),
            config_hash: config_hash.into(),
            seed,
        }
    }

    pub fn header_line(&self) -> String {
        format!("# {} {} config-sha256={} seed={}", self.tool, self.version, self.config_hash, self.seed)
    }

    /// Parses a line written by [`RunMeta::header_line`].
    pub fn parse_header(line: &str) -> Option<Self> {
        let mut it = line.strip_prefix("# ")?.split(' ');
        let tool = it.next()?.to_string();
        let version = it.next()?.to_string();
        let config_hash = it.next()?.strip_prefix("config-sha256=")?.to_string();
        let seed = it.next()?.strip_prefix("seed=")?.parse().ok()?;
        Some(RunMeta {
            tool,
            version,
            config_hash,
            seed,
        })
    }
}

/// Writes through a temporary sibling and renames, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| DramnError::io(dir, e))?;
    }
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, bytes).map_err(|e| DramnError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| DramnError::io(path, e))
}

pub fn write_tsv(path: &Path, meta: &RunMeta, body: &str) -> Result<()> {
    let mut text = meta.header_line();
    text.push('\n');
    text.push_str(body);
    write_atomic(path, text.as_bytes())
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    run: &'a RunMeta,
    kind: &'a str,
    body: &'a T,
}

pub fn write_json<T: Serialize>(path: &Path, meta: &RunMeta, kind: &str, body: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&Envelope { run: meta, kind, body }).map_err(|e| DramnError::format(path, e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// The `body` of a JSON report, with its run metadata.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(RunMeta, T)> {
    #[derive(Deserialize)]
    struct Owned<T> {
        run: RunMeta,
        body: T,
    }
    let text = std::fs::read_to_string(path).map_err(|e| DramnError::io(path, e))?;
    let o: Owned<T> = serde_json::from_str(&text).map_err(|e| DramnError::format(path, e.to_string()))?;
    Ok((o.run, o.body))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |a| format!("{a:.6}"))
}

pub const METRICS_COLUMNS: &str = "accuracy\tprecision\trecall\tf1\tspecificity\tauroc\ttp\tfp\tfn\ttn\tn\tundefined";

pub fn metrics_cells(m: &MetricsReport) -> String {
    format!(
        "{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        m.accuracy,
        m.precision,
        m.recall,
        m.f1,
        m.specificity,
        opt(m.auroc),
        m.confusion.tp,
        m.confusion.fp,
        m.confusion.fn_,
        m.confusion.tn,
        m.n_samples,
        if m.undefined.is_empty() { "-".to_string() } else { m.undefined.join(",") }
    )
}

/// One row per labelled metrics report, after `key_columns` leading cells.
pub fn metrics_table(key_header: &str, rows: &[(String, MetricsReport)]) -> String {
    let mut out = format!("{key_header}\t{METRICS_COLUMNS}\n");
    for (k, m) in rows {
        let _ = writeln!(out, "{k}\t{}", metrics_cells(m));
    }
    out
}
