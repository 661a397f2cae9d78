//! Repeated-split heterogeneity grids over `(K, alpha)` cells.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{heterogeneity_from_tables, TimeTable, DEFAULT_THRESHOLD};
use crate::data::SurvivalDataset;
use crate::dirichlet::{derive_seed, RandomSource};
use crate::error::{Error, Result};
use crate::split::{
    compute_bin_edges, label_skewed_split_with_edges, quantity_skewed_split, Allocation, BinEdges,
    BinStrategy, SplitAssignment, SplitConfig, SplitMethod,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub method: SplitMethod,
    pub k_values: Vec<usize>,
    pub alpha_values: Vec<f64>,
    pub runs: usize,
    /// Label method only; default 10.
    pub bins: Option<usize>,
    /// Label method only; default quantile.
    pub bin_strategy: Option<BinStrategy>,
    pub master_seed: u64,
    pub threshold: f64,
    #[serde(default)]
    pub allocation: Allocation,
}

impl SweepSpec {
    pub fn new(method: SplitMethod, k_values: Vec<usize>, alpha_values: Vec<f64>) -> Self {
        SweepSpec {
            method,
            k_values,
            alpha_values,
            runs: 100,
            bins: None,
            bin_strategy: None,
            master_seed: 0,
            threshold: DEFAULT_THRESHOLD,
            allocation: Allocation::default(),
        }
    }

    pub fn config(&self, k: usize, alpha: f64) -> SplitConfig {
        SplitConfig::for_method(self.method, k, alpha, self.bins, self.bin_strategy)
            .with_allocation(self.allocation)
    }

    /// Seed of run `run` in cell `(k, alpha)`. Depends only on the master seed
    /// and the cell's own coordinates, so growing the grid leaves existing
    /// cells untouched.
    pub fn run_seed(&self, k: usize, alpha: f64, run: usize) -> u64 {
        let cell = derive_seed(derive_seed(self.master_seed, k as u64), alpha.to_bits());
        derive_seed(cell, run as u64)
    }
}

/// Results for one `(K, alpha)` cell. `h` values are unscaled, in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub k: usize,
    pub alpha: f64,
    /// `None` when every run failed.
    pub mean_h: Option<f64>,
    /// Population standard deviation (zero for a single run).
    pub std_h: Option<f64>,
    pub per_run_h: Vec<f64>,
    pub runs: usize,
    pub failed_runs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneityReport {
    pub dataset: String,
    pub n_samples: usize,
    pub method: SplitMethod,
    pub bins: Option<usize>,
    pub bin_strategy: Option<BinStrategy>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bin_edges: Option<Vec<f64>>,
    pub allocation: Allocation,
    pub runs: usize,
    pub master_seed: u64,
    pub threshold: f64,
    pub k_values: Vec<usize>,
    pub alpha_values: Vec<f64>,
    /// Row-major over `k_values` then `alpha_values`.
    pub cells: Vec<SweepCell>,
}

impl HeterogeneityReport {
    pub fn cell(&self, k: usize, alpha: f64) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.k == k && c.alpha == alpha)
    }
}

fn mean_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt()))
}

/// Per-client time tables straight from an assignment, walking the dataset
/// in time order so every table comes out sorted.
fn client_tables(
    order: &[usize],
    obs: &[(f64, bool)],
    assignment: &SplitAssignment,
) -> Vec<TimeTable> {
    let mut per_client: Vec<Vec<(f64, bool)>> = vec![Vec::new(); assignment.k()];
    for &i in order {
        per_client[assignment.client_of[i]].push(obs[i]);
    }
    per_client.into_iter().map(TimeTable::from_sorted).collect()
}

/// Runs `spec.runs` seeded splits per `(K, alpha)` cell and records the
/// heterogeneity score of each.
///
/// Runs execute on the current rayon pool; results do not depend on the
/// number of threads. A run whose split fails is counted in `failed_runs`
/// and excluded from the statistics.
pub fn heterogeneity_sweep(
    dataset: &SurvivalDataset,
    spec: &SweepSpec,
) -> Result<HeterogeneityReport> {
    if spec.runs == 0 {
        return Err(Error::NoRuns);
    }
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for &k in &spec.k_values {
        spec.config(k, spec.alpha_values.first().copied().unwrap_or(1.0))
            .validate()?;
    }
    for &alpha in &spec.alpha_values {
        spec.config(2, alpha).validate()?;
    }

    let obs: Vec<(f64, bool)> = dataset.times().zip(dataset.events()).collect();
    let mut order: Vec<usize> = (0..obs.len()).collect();
    order.sort_by(|&a, &b| obs[a].0.total_cmp(&obs[b].0));

    let (bins, bin_strategy) = match spec.method {
        SplitMethod::Quantity => (None, None),
        SplitMethod::Label => (
            Some(spec.bins.unwrap_or(crate::split::DEFAULT_BINS)),
            Some(spec.bin_strategy.unwrap_or_default()),
        ),
    };
    // Edges depend only on the dataset, so every run shares them.
    let edges: Option<std::result::Result<BinEdges, String>> = match (bins, bin_strategy) {
        (Some(b), Some(s)) => Some(compute_bin_edges(dataset, b, s).map_err(|e| e.to_string())),
        _ => None,
    };

    let cells: Vec<(usize, f64)> = spec
        .k_values
        .iter()
        .flat_map(|&k| spec.alpha_values.iter().map(move |&a| (k, a)))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..spec.runs).map(move |r| (c, r)))
        .collect();

    let outcomes: Vec<std::result::Result<f64, String>> = jobs
        .par_iter()
        .map(|&(c, run)| {
            let (k, alpha) = cells[c];
            let config = spec.config(k, alpha);
            let mut source = RandomSource::new(spec.run_seed(k, alpha, run));
            let assignment = match &edges {
                None => quantity_skewed_split(dataset, &config, &mut source),
                Some(Ok(e)) => {
                    label_skewed_split_with_edges(dataset, &config, e.clone(), &mut source)
                }
                Some(Err(msg)) => return Err(msg.clone()),
            }
            .map_err(|e| e.to_string())?;
            let tables = client_tables(&order, &obs, &assignment);
            heterogeneity_from_tables(&tables, spec.threshold).map_err(|e| e.to_string())
        })
        .collect();

    let cells = cells
        .iter()
        .zip(outcomes.chunks(spec.runs))
        .map(|(&(k, alpha), results)| {
            let per_run_h: Vec<f64> = results
                .iter()
                .filter_map(|r| r.as_ref().ok().copied())
                .collect();
            let first_error = results.iter().find_map(|r| r.as_ref().err().cloned());
            let (mean_h, std_h) = mean_std(&per_run_h);
            SweepCell {
                k,
                alpha,
                mean_h,
                std_h,
                failed_runs: spec.runs - per_run_h.len(),
                per_run_h,
                runs: spec.runs,
                first_error,
            }
        })
        .collect();

    Ok(HeterogeneityReport {
        dataset: dataset.name().to_string(),
        n_samples: dataset.len(),
        method: spec.method,
        bins,
        bin_strategy,
        bin_edges: edges.and_then(|e| e.ok()).map(|e| e.edges().to_vec()),
        allocation: spec.allocation,
        runs: spec.runs,
        master_seed: spec.master_seed,
        threshold: spec.threshold,
        k_values: spec.k_values.clone(),
        alpha_values: spec.alpha_values.clone(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::split::{materialize, split};
    use crate::stats::heterogeneity_score;

    fn synthetic(n: usize) -> SurvivalDataset {
        let mut src = RandomSource::new(99);
        let times: Vec<f64> = (0..n).map(|_| -src.uniform_open().ln()).collect();
        let events: Vec<bool> = (0..n).map(|_| src.uniform() < 0.7).collect();
        SurvivalDataset::from_times("syn", &times, &events).unwrap()
    }

    #[test]
    fn sweep_matches_materialized_path() {
        let ds = synthetic(400);
        for (method, allocation) in [
            (SplitMethod::Quantity, Allocation::Quota),
            (SplitMethod::Label, Allocation::Quota),
            (SplitMethod::Label, Allocation::Sample),
        ] {
            let mut spec = SweepSpec::new(method, vec![3, 5], vec![0.5, 10.0]);
            spec.allocation = allocation;
            spec.runs = 4;
            spec.master_seed = 17;
            let report = heterogeneity_sweep(&ds, &spec).unwrap();
            for cell in &report.cells {
                for (run, &h) in cell.per_run_h.iter().enumerate() {
                    let seed = spec.run_seed(cell.k, cell.alpha, run);
                    let a = split(&ds, &spec.config(cell.k, cell.alpha), seed).unwrap();
                    let shards = materialize(&ds, &a).unwrap();
                    assert_eq!(heterogeneity_score(&shards, 0.05).unwrap(), h);
                }
            }
        }
    }

    #[test]
    fn single_run_has_zero_std() {
        let mut spec = SweepSpec::new(SplitMethod::Quantity, vec![2], vec![1.0]);
        spec.runs = 1;
        let report = heterogeneity_sweep(&synthetic(100), &spec).unwrap();
        assert_eq!(report.cells[0].std_h, Some(0.0));
    }

    #[test]
    fn degenerate_label_runs_are_reported() {
        let ds = SurvivalDataset::from_times("flat", &[2.0; 10], &[true; 10]).unwrap();
        let mut spec = SweepSpec::new(SplitMethod::Label, vec![2], vec![1.0]);
        spec.runs = 3;
        let report = heterogeneity_sweep(&ds, &spec).unwrap();
        let cell = &report.cells[0];
        assert_eq!(cell.failed_runs, 3);
        assert_eq!(cell.mean_h, None);
        assert!(cell.first_error.as_deref().unwrap().contains("equal"));
    }

    #[test]
    fn spec_validation() {
        let ds = synthetic(10);
        let mut spec = SweepSpec::new(SplitMethod::Quantity, vec![1], vec![1.0]);
        assert!(heterogeneity_sweep(&ds, &spec).is_err());
        spec.k_values = vec![2];
        spec.runs = 0;
        assert!(matches!(
            heterogeneity_sweep(&ds, &spec),
            Err(Error::NoRuns)
        ));
        spec.runs = 1;
        spec.alpha_values = vec![-1.0];
        assert!(heterogeneity_sweep(&ds, &spec).is_err());
    }
}
