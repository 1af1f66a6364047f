//! On-disk formats.
//!
//! Sample batch CSV:
//!
//! ```text
//! # label=product-n256-p256-q256-beta1-seed7
//! # beta=1
//! # ...one `# key=value` line per metadata entry, keys sorted...
//! replicate,value
//! 0,-1.8431270116325873
//! 1,NaN
//! ```
//!
//! Values use Rust's shortest round-trip float formatting; a failed
//! replicate is written as `NaN` and read back as missing.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::stats::{Sample, SampleBatch};
use crate::{Error, Result};

pub const BATCH_COLUMNS: &str = "replicate,value";

fn check_meta(key: &str, value: &str) -> Result<()> {
    if key.is_empty() || key.contains(['=', '\n', '\r']) || key.trim() != key {
        return Err(Error::InvalidParameter(format!("unusable metadata key {key:?}")));
    }
    if value.contains(['\n', '\r']) {
        return Err(Error::InvalidParameter(format!(
            "metadata value for `{key}` contains a line break"
        )));
    }
    Ok(())
}

pub fn batch_to_csv(batch: &SampleBatch) -> Result<String> {
    let mut out = String::new();
    check_meta("label", batch.label())?;
    writeln!(out, "# label={}", batch.label()).unwrap();
    for (k, v) in batch.params() {
        if k == "label" {
            return Err(Error::InvalidParameter("`label` is reserved".into()));
        }
        check_meta(k, v)?;
        writeln!(out, "# {k}={v}").unwrap();
    }
    out.push_str(BATCH_COLUMNS);
    out.push('\n');
    for s in batch.samples() {
        match s.value {
            Some(v) => writeln!(out, "{},{}", s.replicate, v).unwrap(),
            None => writeln!(out, "{},NaN", s.replicate).unwrap(),
        }
    }
    Ok(out)
}

pub fn batch_from_csv(text: &str, path: &Path) -> Result<SampleBatch> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut label = None;
    let mut params = BTreeMap::new();
    let mut samples = Vec::new();
    let mut header_seen = false;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if !header_seen {
            if let Some(meta) = line.strip_prefix("# ") {
                let (k, v) = meta
                    .split_once('=')
                    .ok_or_else(|| err(lineno, "metadata line lacks `=`".into()))?;
                if k == "label" {
                    label = Some(v.to_string());
                } else if params.insert(k.to_string(), v.to_string()).is_some() {
                    return Err(err(lineno, format!("duplicate metadata key `{k}`")));
                }
            } else if line == BATCH_COLUMNS {
                header_seen = true;
            } else {
                return Err(err(lineno, format!("expected `# key=value` or `{BATCH_COLUMNS}`")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let (r, v) = line
            .split_once(',')
            .ok_or_else(|| err(lineno, "expected `replicate,value`".into()))?;
        let replicate: u64 = r
            .parse()
            .map_err(|_| err(lineno, format!("bad replicate index {r:?}")))?;
        let value: f64 = v.parse().map_err(|_| err(lineno, format!("bad value {v:?}")))?;
        samples.push(Sample {
            replicate,
            value: (!value.is_nan()).then_some(value),
        });
    }
    if !header_seen {
        return Err(err(text.lines().count().max(1), "missing column header".into()));
    }
    let label = label.ok_or_else(|| err(1, "missing `# label=` line".into()))?;
    Ok(SampleBatch::new(label, params, samples))
}

pub fn write_batch(path: &Path, batch: &SampleBatch) -> Result<String> {
    let text = batch_to_csv(batch)?;
    std::fs::write(path, &text)?;
    Ok(sha256_hex(text.as_bytes()))
}

pub fn read_batch(path: &Path) -> Result<SampleBatch> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })?;
    batch_from_csv(&text, path)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
