//! Command-line flags and their JSON mirror.
//!
//! Every subcommand's flag set deserializes from a JSON object whose keys are
//! the long flag names (`{"clients-list": [5, 10], "seed": 7}`). Values given
//! on the command line win over values from `--config`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use fedsurv::{Allocation, BinStrategy, ColumnMapping, SplitMethod};

#[derive(Debug, Parser)]
#[command(
    name = "fedsurv",
    version,
    about = "Split survival datasets into simulated federated clients and measure their heterogeneity"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print sample count, censoring rate and feature count of a dataset.
    Summary(SummaryArgs),
    /// Split a dataset into client shards.
    Split(SplitArgs),
    /// Kaplan-Meier curves per client shard.
    Km(KmArgs),
    /// Heterogeneity score grid over client counts and concentrations.
    Heterogeneity(HeterogeneityArgs),
}

/// Fills unset values from a lower-priority source.
pub trait Merge {
    fn merge(self, fallback: Self) -> Self;
}

macro_rules! merge_impl {
    ($ty:ty { $($field:ident),* } $(nested { $($nested:ident),* })? $(flags { $($flag:ident),* })?) => {
        impl Merge for $ty {
            fn merge(self, fallback: Self) -> Self {
                Self {
                    $($field: self.$field.or(fallback.$field),)*
                    $($($nested: self.$nested.merge(fallback.$nested),)*)?
                    $($($flag: self.$flag || fallback.$flag,)*)?
                    config: self.config,
                }
            }
        }
    };
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct MappingArgs {
    /// Column holding the observed time.
    #[arg(long, value_name = "NAME")]
    pub time_col: Option<String>,
    /// Column holding the event indicator.
    #[arg(long, value_name = "NAME")]
    pub event_col: Option<String>,
    /// Feature columns to keep (default: every other column).
    #[arg(long, value_delimiter = ',', value_name = "NAMES")]
    pub features: Option<Vec<String>>,
    /// Event-column values that mean "event observed" (default: 1,true,True).
    #[arg(long, value_delimiter = ',', value_name = "VALUES")]
    pub event_values: Option<Vec<String>>,
}

impl MappingArgs {
    fn merge(self, fallback: Self) -> Self {
        MappingArgs {
            time_col: self.time_col.or(fallback.time_col),
            event_col: self.event_col.or(fallback.event_col),
            features: self.features.or(fallback.features),
            event_values: self.event_values.or(fallback.event_values),
        }
    }

    pub fn mapping(&self) -> anyhow::Result<ColumnMapping> {
        let mut mapping = ColumnMapping::new(
            self.time_col
                .as_deref()
                .unwrap_or(fedsurv::data::TIME_COLUMN),
            self.event_col
                .as_deref()
                .unwrap_or(fedsurv::data::EVENT_COLUMN),
        );
        if let Some(features) = &self.features {
            mapping = mapping.with_features(features.iter().cloned());
        }
        if let Some(values) = &self.event_values {
            mapping = mapping.with_event_true_values(values.iter().cloned());
        }
        mapping.validate()?;
        Ok(mapping)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SummaryArgs {
    /// Dataset CSV.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub mapping: MappingArgs,
    /// Print the summary as JSON instead of a table.
    #[arg(long)]
    #[serde(default)]
    pub json: bool,
    /// JSON file with default values for any of these flags.
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

merge_impl!(SummaryArgs { input } nested { mapping } flags { json });

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SplitArgs {
    /// Dataset CSV.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub mapping: MappingArgs,
    /// `quantity` or `label`.
    #[arg(long)]
    pub method: Option<SplitMethod>,
    /// Number of clients K.
    #[arg(long, value_name = "K")]
    pub clients: Option<usize>,
    /// Dirichlet concentration.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of time bins for the label method (default 10).
    #[arg(long, value_name = "B")]
    pub bins: Option<usize>,
    /// `quantile` (default) or `uniform`.
    #[arg(long)]
    pub bin_strategy: Option<BinStrategy>,
    /// `quota` (default) or `sample`.
    #[arg(long)]
    pub allocation: Option<Allocation>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    /// JSON file with default values for any of these flags.
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

merge_impl!(SplitArgs {
    input, method, clients, alpha, bins, bin_strategy, allocation, seed, output_dir
} nested { mapping });

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct KmArgs {
    /// Dataset CSV, treated as a single client.
    #[arg(long, value_name = "PATH", conflicts_with = "split_dir")]
    pub input: Option<PathBuf>,
    /// Output directory of `split`; every client_###.csv in it is read.
    #[arg(long, value_name = "DIR")]
    pub split_dir: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub mapping: MappingArgs,
    #[arg(long, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    /// JSON file with default values for any of these flags.
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

merge_impl!(KmArgs { input, split_dir, output_dir } nested { mapping });

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct HeterogeneityArgs {
    /// Dataset CSV.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub mapping: MappingArgs,
    /// `quantity` or `label`.
    #[arg(long)]
    pub method: Option<SplitMethod>,
    /// Client counts, one grid row each.
    #[arg(long, value_delimiter = ',', value_name = "K,...")]
    pub clients_list: Option<Vec<usize>>,
    /// Concentrations, one grid column each.
    #[arg(long, value_delimiter = ',', value_name = "ALPHA,...")]
    pub alpha_list: Option<Vec<f64>>,
    /// Splits per cell (default 100).
    #[arg(long)]
    pub runs: Option<usize>,
    /// Number of time bins for the label method (default 10).
    #[arg(long, value_name = "B")]
    pub bins: Option<usize>,
    /// `quantile` (default) or `uniform`.
    #[arg(long)]
    pub bin_strategy: Option<BinStrategy>,
    /// `quota` (default) or `sample`.
    #[arg(long)]
    pub allocation: Option<Allocation>,
    /// Log-rank significance level (default 0.05).
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; falls back to FEDSURV_JOBS, then to one per core.
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    /// Directory for the grid CSV, report JSON and manifest. Without it the
    /// grid is only printed.
    #[arg(long, value_name = "DIR")]
    pub output: Option<PathBuf>,
    /// JSON file with default values for any of these flags.
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

merge_impl!(HeterogeneityArgs {
    input, method, clients_list, alpha_list, runs, bins, bin_strategy, allocation,
    threshold, seed, jobs, output
} nested { mapping });

/// Parses a `--config` document, rejecting keys that name no flag.
pub fn parse_config<T>(text: &str) -> anyhow::Result<T>
where
    T: DeserializeOwned + Serialize + Default,
{
    let value: serde_json::Value = serde_json::from_str(text)?;
    let Some(object) = value.as_object() else {
        bail!("config must be a JSON object");
    };
    let known = serde_json::to_value(T::default())?;
    let known: BTreeSet<&String> = known
        .as_object()
        .map(|o| o.keys().collect())
        .unwrap_or_default();
    if let Some(unknown) = object.keys().find(|k| !known.contains(k)) {
        bail!("unknown config key `{unknown}`");
    }
    Ok(serde_json::from_value(value)?)
}

/// Merges flags over the `--config` file, if one was given.
pub fn resolve<T>(flags: T, config: Option<&Path>) -> anyhow::Result<T>
where
    T: DeserializeOwned + Serialize + Default + Merge,
{
    let Some(path) = config else {
        return Ok(flags);
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let file: T = parse_config(&text).with_context(|| format!("config {}", path.display()))?;
    Ok(flags.merge(file))
}

pub fn required<T>(value: Option<T>, flag: &str) -> anyhow::Result<T> {
    value.with_context(|| format!("missing required flag --{flag}"))
}
