//! Machine-readable reports (JSON) and their plain-text summaries.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::{FitResult, Histogram, SweepTable, Table1Row};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::protocol::BerEstimate;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Generator {
    pub seed: u64,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputFile {
    pub name: String,
    pub source: String,
    pub basis: String,
    pub key: u8,
    pub rows: usize,
}

/// Closed-form efficiency and BER for the model named by `mean_diff`/`sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Analytic {
    pub mean_diff: f64,
    pub sigma: f64,
    pub postselection_efficiency: f64,
    pub ber: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<Generator>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<InputFile>>,
    pub threshold: f64,
    pub empirical: BerEstimate,
    pub analytic: Analytic,
    pub fit: FitResult<f64>,
    pub histogram: Histogram<f64>,
}

impl Report {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let e = &self.empirical;
        let a = &self.analytic;
        let f = &self.fit;
        writeln!(s, "twinbeam {} report", self.command).unwrap();
        if let Some(g) = &self.generator {
            writeln!(
                s,
                "seed {}  source {}  pulses {}  attack {}",
                g.seed, g.config.source.kind, g.config.session_length, g.config.attack.kind
            )
            .unwrap();
        }
        if let Some(inputs) = &self.inputs {
            for i in inputs {
                writeln!(
                    s,
                    "input {}  source={} basis={} key={}  rows {}",
                    i.name, i.source, i.basis, i.key, i.rows
                )
                .unwrap();
            }
        }
        writeln!(s, "threshold N0          {:.3}", self.threshold).unwrap();
        writeln!(s, "sifted / conclusive   {} / {}", e.sifted, e.conclusive).unwrap();
        writeln!(
            s,
            "ber (empirical)       {:.5}  95% [{:.5}, {:.5}]",
            e.ber, e.wilson_interval.0, e.wilson_interval.1
        )
        .unwrap();
        writeln!(
            s,
            "postselection rate    {:.5}  95% [{:.5}, {:.5}]",
            e.postselection_rate,
            e.postselection_wilson_interval.0,
            e.postselection_wilson_interval.1
        )
        .unwrap();
        writeln!(
            s,
            "ber (analytic)        {:.5}  at <n> = {:.3}, delta = {:.3}",
            a.ber, a.mean_diff, a.sigma
        )
        .unwrap();
        writeln!(s, "efficiency (analytic) {:.5}", a.postselection_efficiency).unwrap();
        writeln!(
            s,
            "fit                   <n> = {:.3}  delta = {:.3}  scale = {:.5}  residual = {:.3e}",
            f.mean_hat, f.sigma_hat, f.scale_coefficient, f.residual
        )
        .unwrap();
        writeln!(
            s,
            "histogram             {} bins of width {:.3} over [{:.3}, {:.3}]",
            self.histogram.bins(),
            self.histogram.bin_width,
            self.histogram.bin_edges[0],
            self.histogram.bin_edges[self.histogram.bins()]
        )
        .unwrap();
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub config: RunConfig,
    pub sigma: f64,
    pub table: SweepTable<f64>,
}

impl SweepReport {
    pub fn summary(&self) -> String {
        let mut s = format!("twinbeam sweep at delta = {:.3}\n", self.sigma);
        s.push_str("      N0          N   efficiency        ber  pareto\n");
        for r in &self.table.rows {
            writeln!(
                s,
                "{:>8.3} {:>10.3} {:>12.6} {:>10.6}  {}",
                r.threshold,
                r.mean_diff,
                r.postselection_efficiency,
                r.ber,
                if r.pareto { "*" } else { "" }
            )
            .unwrap();
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Report {
    pub seed: u64,
    pub config: RunConfig,
    pub samples_per_condition: usize,
    pub rows: Vec<Table1Row<f64>>,
}

impl Table1Report {
    pub fn summary(&self) -> String {
        let mut s = format!(
            "twinbeam table1 ({} samples per condition, seed {})\n",
            self.samples_per_condition, self.seed
        );
        s.push_str("source     basis     key      mean     sigma  (expected mean, sigma)\n");
        for r in &self.rows {
            writeln!(
                s,
                "{:<10} {:<9} {:>3} {:>9.2} {:>9.2}  ({:.1}, {:.1})",
                r.source.label(),
                if r.basis_match { "correct" } else { "wrong" },
                r.key,
                r.mean,
                r.sigma,
                r.expected_mean,
                r.expected_sigma
            )
            .unwrap();
        }
        s
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("report serializes");
    out.push('\n');
    out
}

/// Writes `<stem>.json` and `<stem>.txt` into `dir`, creating it if needed.
pub fn write_pair(dir: &Path, stem: &str, json: &str, text: &str) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let json_path = dir.join(format!("{stem}.json"));
    let txt_path = dir.join(format!("{stem}.txt"));
    for (path, body) in [(&json_path, json), (&txt_path, text)] {
        std::fs::write(path, body).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok((json_path, txt_path))
}
