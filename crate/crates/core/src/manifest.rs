//! On-disk formats for split assignments and sweep results.
//!
//! An assignment is stored as two files:
//!
//! - `assignment.csv` with header `sample_index,client_id,bin_label`, one row
//!   per sample in dataset order; `bin_label` is empty for quantity splits;
//! - a JSON sidecar ([`SplitSidecar`]) holding the configuration, seed,
//!   Dirichlet proportions and effective bin edges.
//!
//! Sweep reports are written as a `mean±std` grid (values scaled by 100) and
//! as the full JSON [`HeterogeneityReport`].

use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::split::{BinEdges, SplitAssignment, SplitConfig, SplitMethod};
use crate::stats::HeterogeneityReport;

pub const ASSIGNMENT_HEADER: &str = "sample_index,client_id,bin_label";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssignmentRow {
    pub sample_index: usize,
    pub client_id: usize,
    pub bin_label: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSidecar {
    pub config: SplitConfig,
    pub seed: u64,
    pub n_samples: usize,
    pub proportions: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_edges: Option<Vec<f64>>,
    pub cardinalities: Vec<usize>,
}

impl SplitSidecar {
    pub fn from_assignment(a: &SplitAssignment) -> Self {
        SplitSidecar {
            config: a.config.clone(),
            seed: a.seed,
            n_samples: a.len(),
            proportions: a.proportions.clone(),
            bin_edges: a.bin_edges.as_ref().map(|e| e.edges().to_vec()),
            cardinalities: a.cardinalities(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("sidecar serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let sidecar: SplitSidecar = serde_json::from_str(text)?;
        sidecar.config.validate()?;
        Ok(sidecar)
    }

    /// Rebuilds the assignment, cross-checking the rows against the sidecar.
    pub fn to_assignment(&self, rows: &[AssignmentRow]) -> Result<SplitAssignment> {
        let bad = |msg: String| Error::MalformedManifest(msg);
        if rows.len() != self.n_samples {
            return Err(bad(format!(
                "{} rows but sidecar records {} samples",
                rows.len(),
                self.n_samples
            )));
        }
        let k = self.config.k;
        let label = self.config.method == SplitMethod::Label;
        let bin_edges = self.bin_edges.clone().map(BinEdges::new).transpose()?;
        let n_bins = bin_edges.as_ref().map_or(0, BinEdges::effective_bins);
        if label != bin_edges.is_some() {
            return Err(bad(
                "bin edges must be present exactly for label splits".into()
            ));
        }
        let expected_vectors = if label { n_bins } else { 1 };
        if self.proportions.len() != expected_vectors
            || self.proportions.iter().any(|p| p.len() != k)
        {
            return Err(bad(
                "proportion vectors do not match the configuration".into()
            ));
        }

        let mut client_of = Vec::with_capacity(rows.len());
        let mut labels = Vec::with_capacity(rows.len());
        for r in rows {
            if r.client_id >= k {
                return Err(Error::ClientOutOfRange {
                    index: r.sample_index,
                    client: r.client_id,
                    k,
                });
            }
            match (label, r.bin_label) {
                (true, Some(b)) if b < n_bins => labels.push(b),
                (false, None) => {}
                _ => {
                    return Err(bad(format!(
                        "sample {}: bin label inconsistent with the split method",
                        r.sample_index
                    )))
                }
            }
            client_of.push(r.client_id);
        }
        let assignment = SplitAssignment {
            client_of,
            proportions: self.proportions.clone(),
            bin_labels: label.then_some(labels),
            bin_edges,
            config: self.config.clone(),
            seed: self.seed,
        };
        if assignment.cardinalities() != self.cardinalities {
            return Err(bad("cardinalities disagree with the rows".into()));
        }
        Ok(assignment)
    }
}

pub fn write_assignment_csv<W: Write>(a: &SplitAssignment, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{ASSIGNMENT_HEADER}")?;
    for (i, &c) in a.client_of.iter().enumerate() {
        match &a.bin_labels {
            Some(labels) => writeln!(out, "{i},{c},{}", labels[i])?,
            None => writeln!(out, "{i},{c},")?,
        }
    }
    out.flush()
}

/// Parses `assignment.csv`. Sample indices must run `0, 1, 2, ...`.
pub fn read_assignment_csv<R: Read>(input: R) -> Result<Vec<AssignmentRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = rdr
        .headers()
        .map_err(|e| Error::MalformedManifest(e.to_string()))?
        .clone();
    if header.iter().collect::<Vec<_>>().join(",") != ASSIGNMENT_HEADER {
        return Err(Error::MalformedManifest(format!(
            "expected header `{ASSIGNMENT_HEADER}`"
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::MalformedRecord {
            row: i + 1,
            message: e.to_string(),
        })?;
        let num = |col: usize| -> Result<usize> {
            rec[col].parse().map_err(|_| Error::UnparsableValue {
                row: i + 1,
                column: header[col].to_string(),
                value: rec[col].to_string(),
            })
        };
        let sample_index = num(0)?;
        if sample_index != i {
            return Err(Error::MalformedManifest(format!(
                "row {} has sample_index {sample_index}",
                i + 1
            )));
        }
        let bin_label = if rec[2].is_empty() {
            None
        } else {
            Some(num(2)?)
        };
        rows.push(AssignmentRow {
            sample_index,
            client_id: num(1)?,
            bin_label,
        });
    }
    Ok(rows)
}

/// `|D_k|` per client as CSV (`client_id,n_samples`).
pub fn cardinalities_csv(cardinalities: &[usize]) -> String {
    let mut s = String::from("client_id,n_samples\n");
    for (k, n) in cardinalities.iter().enumerate() {
        let _ = writeln!(s, "{k},{n}");
    }
    s
}

fn scaled_cell(mean: Option<f64>, std: Option<f64>) -> String {
    match (mean, std) {
        (Some(m), Some(s)) => format!("{:.1}±{:.1}", m * 100.0, s * 100.0),
        _ => "n/a".to_string(),
    }
}

/// The report as a grid: one row per `K`, one column per `alpha`, cells
/// `mean±std` scaled by 100 (`n/a` when every run failed).
pub fn sweep_grid_csv(report: &HeterogeneityReport) -> String {
    let mut s = String::from("dataset,method,k");
    for a in &report.alpha_values {
        let _ = write!(s, ",alpha={a:?}");
    }
    s.push('\n');
    for &k in &report.k_values {
        let _ = write!(s, "{},{},{k}", report.dataset, report.method);
        for &a in &report.alpha_values {
            let cell = report.cell(k, a);
            let _ = write!(
                s,
                ",{}",
                scaled_cell(cell.and_then(|c| c.mean_h), cell.and_then(|c| c.std_h))
            );
        }
        s.push('\n');
    }
    s
}

/// Human-readable version of [`sweep_grid_csv`].
pub fn sweep_grid_table(report: &HeterogeneityReport) -> String {
    let header: Vec<String> = report
        .alpha_values
        .iter()
        .map(|a| format!("α={a:?}"))
        .collect();
    let mut s = format!(
        "{} split of {} (h x 100, {} runs)\n{:<6}",
        report.method, report.dataset, report.runs, "K"
    );
    for h in &header {
        let _ = write!(s, "{h:>14}");
    }
    s.push('\n');
    for &k in &report.k_values {
        let _ = write!(s, "{k:<6}");
        for &a in &report.alpha_values {
            let cell = report.cell(k, a);
            let _ = write!(
                s,
                "{:>14}",
                scaled_cell(cell.and_then(|c| c.mean_h), cell.and_then(|c| c.std_h))
            );
        }
        s.push('\n');
    }
    s
}
