//! Delimited sample files for recorded or dumped photoelectron differences.
//!
//! ```text
//! # twinbeam-samples v1; source=twin-beam; basis=match; key=1
//! index,n_sample
//! 0,203.81
//! ```
//!
//! The `index,n_sample` column line is optional on read. Values are written
//! with the shortest representation that round-trips exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::channel::SourceKind;
use crate::error::{Error, Result};

pub const FORMAT_TAG: &str = "twinbeam-samples";
pub const VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleHeader {
    pub source: SourceKind,
    pub basis_match: bool,
    pub key: u8,
}

impl SampleHeader {
    pub fn render(&self) -> String {
        format!(
            "# {FORMAT_TAG} {VERSION}; source={}; basis={}; key={}",
            self.source.label(),
            if self.basis_match {
                "match"
            } else {
                "mismatch"
            },
            self.key
        )
    }

    pub fn parse(line: &str) -> Result<Self> {
        let bad = |msg: String| Error::Parse {
            row: 1,
            message: msg,
        };
        let body = line
            .strip_prefix('#')
            .ok_or_else(|| bad("header must start with `#`".into()))?;
        let mut parts = body.split(';').map(str::trim);
        let tag = parts.next().unwrap_or_default();
        let mut words = tag.split_whitespace();
        if words.next() != Some(FORMAT_TAG) {
            return Err(bad(format!("expected `{FORMAT_TAG}` header, got `{tag}`")));
        }
        match words.next() {
            Some(VERSION) => {}
            other => return Err(bad(format!("unsupported version {other:?}"))),
        }
        let (mut source, mut basis, mut key) = (None, None, None);
        for part in parts {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("malformed header field `{part}`")))?;
            match k.trim() {
                "source" => {
                    source = Some(
                        v.trim()
                            .parse::<SourceKind>()
                            .map_err(|e| bad(e.to_string()))?,
                    )
                }
                "basis" => {
                    basis = Some(match v.trim() {
                        "match" => true,
                        "mismatch" => false,
                        other => return Err(bad(format!("unknown basis `{other}`"))),
                    })
                }
                "key" => {
                    key = Some(match v.trim() {
                        "0" => 0,
                        "1" => 1,
                        other => return Err(bad(format!("key must be 0 or 1, got `{other}`"))),
                    })
                }
                other => return Err(bad(format!("unknown header field `{other}`"))),
            }
        }
        Ok(Self {
            source: source.ok_or_else(|| bad("missing `source`".into()))?,
            basis_match: basis.ok_or_else(|| bad("missing `basis`".into()))?,
            key: key.ok_or_else(|| bad("missing `key`".into()))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleFile {
    pub header: SampleHeader,
    pub rows: Vec<(usize, f64)>,
}

impl SampleFile {
    pub fn render(&self) -> String {
        let mut out = String::with_capacity(16 * self.rows.len() + 64);
        out.push_str(&self.header.render());
        out.push_str("\nindex,n_sample\n");
        for (i, n) in &self.rows {
            writeln!(out, "{i},{n}").expect("write to string");
        }
        out
    }

    /// Parses a sample file; errors carry the 1-based line number.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let header = match lines.next() {
            Some((_, l)) => SampleHeader::parse(l)?,
            None => {
                return Err(Error::Parse {
                    row: 1,
                    message: "empty file".into(),
                })
            }
        };
        let mut rows: Vec<(usize, f64)> = Vec::new();
        for (i, line) in lines {
            let row = i + 1;
            let line = line.trim();
            if line.is_empty() || (rows.is_empty() && line == "index,n_sample") {
                continue;
            }
            let bad = |message: String| Error::Parse { row, message };
            let (idx, val) = line
                .split_once(',')
                .ok_or_else(|| bad(format!("expected `index,n_sample`, got `{line}`")))?;
            let idx: usize = idx
                .trim()
                .parse()
                .map_err(|e| bad(format!("bad index `{}`: {e}", idx.trim())))?;
            let val: f64 = val
                .trim()
                .parse()
                .map_err(|e| bad(format!("bad n_sample `{}`: {e}", val.trim())))?;
            if !val.is_finite() {
                return Err(bad(format!("n_sample must be finite, got {val}")));
            }
            if let Some(&(prev, _)) = rows.last() {
                if idx <= prev {
                    return Err(bad(format!(
                        "indices must be strictly increasing ({idx} after {prev})"
                    )));
                }
            }
            rows.push((idx, val));
        }
        Ok(Self { header, rows })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn samples(&self) -> Vec<f64> {
        self.rows.iter().map(|&(_, n)| n).collect()
    }
}
