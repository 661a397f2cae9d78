//! Kaplan-Meier estimation, the two-sample log-rank test and the pairwise
//! heterogeneity score of a federation.

mod km;
mod logrank;
mod sweep;

pub use km::{evaluate_km, kaplan_meier, KmCurve, KmPoint};
pub use logrank::{chi_square_sf_1dof, heterogeneity_score, log_rank_test, LogRankResult};
pub use sweep::{heterogeneity_sweep, HeterogeneityReport, SweepCell, SweepSpec};

pub(crate) use logrank::heterogeneity_from_tables;

/// Significance level used by the heterogeneity score.
pub const DEFAULT_THRESHOLD: f64 = 0.05;

/// Observations grouped by distinct time, ascending.
///
/// `events[j]` and `removed[j]` count the events and all records (events plus
/// censorings) at `times[j]`; the at-risk count at `times[j]` is `n` minus the
/// records removed at earlier times.
#[derive(Debug, Clone, Default)]
pub(crate) struct TimeTable {
    pub times: Vec<f64>,
    pub events: Vec<u32>,
    pub removed: Vec<u32>,
    pub n: usize,
}

impl TimeTable {
    /// Builds a table from observations already sorted by time.
    pub fn from_sorted(obs: impl IntoIterator<Item = (f64, bool)>) -> Self {
        let mut table = TimeTable::default();
        for (t, event) in obs {
            table.n += 1;
            if table.times.last() != Some(&t) {
                table.times.push(t);
                table.events.push(0);
                table.removed.push(0);
            }
            let j = table.times.len() - 1;
            table.removed[j] += 1;
            table.events[j] += u32::from(event);
        }
        table
    }

    pub fn from_unsorted(obs: impl IntoIterator<Item = (f64, bool)>) -> Self {
        let mut obs: Vec<(f64, bool)> = obs.into_iter().collect();
        obs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self::from_sorted(obs)
    }

    pub fn from_dataset(dataset: &crate::data::SurvivalDataset) -> Self {
        Self::from_unsorted(dataset.times().zip(dataset.events()))
    }

    pub fn total_events(&self) -> u64 {
        self.events.iter().map(|&d| u64::from(d)).sum()
    }
}
