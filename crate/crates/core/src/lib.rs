//! Simulated federations of right-censored survival data.
//!
//! A centralized survival dataset is split into `K` client shards with
//! Dirichlet-driven quantity skew (unequal shard sizes) or label skew
//! (unequal time distributions), and the heterogeneity of the result is
//! measured with per-client Kaplan-Meier curves and pairwise log-rank tests.
//!
//! ```
//! use fedsurv::{split, materialize, heterogeneity_score, SplitConfig, SurvivalDataset};
//!
//! let times: Vec<f64> = (1..=200).map(f64::from).collect();
//! let events = vec![true; 200];
//! let data = SurvivalDataset::from_times("demo", &times, &events).unwrap();
//!
//! let config = SplitConfig::label(4, 0.5, 10, Default::default());
//! let assignment = split(&data, &config, 7).unwrap();
//! let shards = materialize(&data, &assignment).unwrap();
//! assert_eq!(shards.iter().map(|s| s.len()).sum::<usize>(), 200);
//!
//! let h = heterogeneity_score(&shards, 0.05).unwrap();
//! assert!((0.0..=1.0).contains(&h));
//! ```

pub mod data;
pub mod dirichlet;
pub mod error;
pub mod manifest;
pub mod split;
pub mod stats;

pub use data::{load_csv, ColumnMapping, DatasetSummary, SurvivalDataset, SurvivalRecord};
pub use dirichlet::{derive_seed, sample_dirichlet, sample_gamma, DirichletParams, RandomSource};
pub use error::{Error, Result};
pub use manifest::{AssignmentRow, SplitSidecar};
pub use split::{
    compute_bin_edges, label_skewed_split, materialize, quantity_skewed_split, split, Allocation,
    BinEdges, BinStrategy, SplitAssignment, SplitConfig, SplitMethod,
};
pub use stats::{
    chi_square_sf_1dof, evaluate_km, heterogeneity_score, heterogeneity_sweep, kaplan_meier,
    log_rank_test, HeterogeneityReport, KmCurve, KmPoint, LogRankResult, SweepCell, SweepSpec,
};
