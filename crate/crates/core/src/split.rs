//! Dirichlet-based assignment of samples to simulated federated clients.
//!
//! Two methods are provided:
//!
//! - **quantity-skewed**: one proportion vector `p ~ Dir(alpha * 1_K)` is
//!   drawn and every sample joins client `k` with probability `p[k]`, which
//!   skews client cardinalities but not their time distributions;
//! - **label-skewed**: the timeline is cut into bins `(tau_{b-1}, tau_b]`, one
//!   proportion vector is drawn per bin, and a sample in bin `b` joins client
//!   `k` with probability `p_b[k]`, which skews the time distribution seen by
//!   each client.
//!
//! Two allocation rules turn proportions into memberships:
//!
//! - [`Allocation::Quota`] (default) shuffles each group (the whole dataset,
//!   or one bin) and cuts it at the cumulative proportions, so client `k`
//!   receives `round_down(n * P_k) - round_down(n * P_{k-1})` samples of every
//!   group;
//! - [`Allocation::Sample`] makes an independent inverse-CDF draw per sample,
//!   consumed in dataset order, so realized counts fluctuate around `n * p[k]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::SurvivalDataset;
use crate::dirichlet::{sample_dirichlet, DirichletParams, RandomSource};
use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMethod {
    Quantity,
    Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinStrategy {
    Uniform,
    #[default]
    Quantile,
}

macro_rules! str_enum {
    ($ty:ident { $($variant:ident => $text:literal),+ }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($ty::$variant => $text),+ })
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($ty::$variant),)+
                    other => Err(Error::InvalidConfig(format!(
                        concat!("unknown ", stringify!($ty), " `{}`"),
                        other
                    ))),
                }
            }
        }
    };
}

/// How Dirichlet proportions become sample memberships.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Allocation {
    /// Shuffle each group and cut it at the cumulative proportions.
    #[default]
    Quota,
    /// Independent categorical draw per sample.
    Sample,
}

str_enum!(SplitMethod { Quantity => "quantity", Label => "label" });
str_enum!(BinStrategy { Uniform => "uniform", Quantile => "quantile" });
str_enum!(Allocation { Quota => "quota", Sample => "sample" });

/// Parameters of one split. `bins` and `bin_strategy` are present exactly
/// when `method` is [`SplitMethod::Label`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub method: SplitMethod,
    pub k: usize,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_strategy: Option<BinStrategy>,
    #[serde(default)]
    pub allocation: Allocation,
}

impl SplitConfig {
    pub fn quantity(k: usize, alpha: f64) -> Self {
        SplitConfig {
            method: SplitMethod::Quantity,
            k,
            alpha,
            bins: None,
            bin_strategy: None,
            allocation: Allocation::default(),
        }
    }

    pub fn label(k: usize, alpha: f64, bins: usize, strategy: BinStrategy) -> Self {
        SplitConfig {
            method: SplitMethod::Label,
            k,
            alpha,
            bins: Some(bins),
            bin_strategy: Some(strategy),
            allocation: Allocation::default(),
        }
    }

    pub fn with_allocation(mut self, allocation: Allocation) -> Self {
        self.allocation = allocation;
        self
    }

    /// Config for `method`, filling the label-only fields from `bins` and
    /// `strategy` (defaulting to 10 quantile bins).
    pub fn for_method(
        method: SplitMethod,
        k: usize,
        alpha: f64,
        bins: Option<usize>,
        strategy: Option<BinStrategy>,
    ) -> Self {
        match method {
            SplitMethod::Quantity => Self::quantity(k, alpha),
            SplitMethod::Label => Self::label(
                k,
                alpha,
                bins.unwrap_or(DEFAULT_BINS),
                strategy.unwrap_or_default(),
            ),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 clients, got {}",
                self.k
            )));
        }
        DirichletParams::new(self.alpha, self.k)?;
        match (self.method, self.bins, self.bin_strategy) {
            (SplitMethod::Quantity, None, None) => Ok(()),
            (SplitMethod::Quantity, _, _) => Err(Error::InvalidConfig(
                "bins and bin strategy only apply to the label method".into(),
            )),
            (SplitMethod::Label, Some(b), Some(_)) if b < 2 => Err(Error::TooFewBins(b)),
            (SplitMethod::Label, Some(_), Some(_)) => Ok(()),
            (SplitMethod::Label, _, _) => Err(Error::InvalidConfig(
                "label method needs bins and a bin strategy".into(),
            )),
        }
    }

    fn dirichlet(&self) -> Result<DirichletParams> {
        DirichletParams::new(self.alpha, self.k)
    }
}

/// Strictly increasing time cut points `tau_0 < ... < tau_B'`.
///
/// Bin `b` (0-based) is the half-open interval `(tau_b, tau_{b+1}]`.
/// `tau_0` lies strictly below the smallest observed time and `tau_B'` equals
/// the largest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinEdges {
    edges: Vec<f64>,
}

impl BinEdges {
    /// Wraps explicit edges; they must be finite and strictly increasing.
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::TooFewBins(edges.len().saturating_sub(1)));
        }
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "bin edges must be finite and strictly increasing".into(),
            ));
        }
        Ok(BinEdges { edges })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn effective_bins(&self) -> usize {
        self.edges.len() - 1
    }

    /// Index of the bin containing `t`, or `None` outside `(tau_0, tau_B']`.
    pub fn label_of(&self, t: f64) -> Option<usize> {
        let upper = &self.edges[1..];
        let b = upper.partition_point(|&e| e < t);
        (b < upper.len() && t > self.edges[0]).then_some(b)
    }
}

/// Linear-interpolation empirical quantile of sorted data (the "type 7"
/// definition: position `q * (n - 1)` between order statistics).
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    match sorted.get(lo + 1) {
        Some(&next) if frac > 0.0 => sorted[lo] + frac * (next - sorted[lo]),
        _ => sorted[lo],
    }
}

/// Cuts the observed timeline (events and censorings alike) into at most
/// `bins` intervals. Coinciding cut points are merged, so the effective bin
/// count can be lower than requested.
pub fn compute_bin_edges(
    dataset: &SurvivalDataset,
    bins: usize,
    strategy: BinStrategy,
) -> Result<BinEdges> {
    if bins < 2 {
        return Err(Error::TooFewBins(bins));
    }
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut times: Vec<f64> = dataset.times().collect();
    times.sort_by(f64::total_cmp);
    let (min, max) = (times[0], times[times.len() - 1]);
    if min == max {
        return Err(Error::DegenerateTimeline);
    }

    let interior = (1..bins).map(|j| match strategy {
        BinStrategy::Uniform => min + (max - min) * j as f64 / bins as f64,
        BinStrategy::Quantile => quantile_sorted(&times, j as f64 / bins as f64),
    });
    let mut edges = vec![min.next_down()];
    for e in interior {
        if e > edges[edges.len() - 1] && e < max {
            edges.push(e);
        }
    }
    edges.push(max);
    Ok(BinEdges { edges })
}

/// Result of a split: the client of every sample plus what produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    /// `client_of[i]` is the 0-based client of sample `i`.
    pub client_of: Vec<usize>,
    /// The Dirichlet draws: a single vector for the quantity method, one per
    /// effective bin for the label method.
    pub proportions: Vec<Vec<f64>>,
    /// Per-sample bin labels (label method only).
    pub bin_labels: Option<Vec<usize>>,
    pub bin_edges: Option<BinEdges>,
    pub config: SplitConfig,
    pub seed: u64,
}

impl SplitAssignment {
    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn len(&self) -> usize {
        self.client_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.client_of.is_empty()
    }

    /// `|D_k|` for every client.
    pub fn cardinalities(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k()];
        for &c in &self.client_of {
            counts[c] += 1;
        }
        counts
    }

    /// Sample indices of every client, in dataset order.
    pub fn client_indices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k()];
        for (i, &c) in self.client_of.iter().enumerate() {
            out[c].push(i);
        }
        out
    }
}

/// Inverse-CDF sampler over a fixed proportion vector.
struct Categorical {
    cumulative: Vec<f64>,
    // Last client with positive mass; absorbs `u` beyond the rounded total.
    fallback: usize,
}

impl Categorical {
    fn new(p: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = p
            .iter()
            .map(|&x| {
                acc += x;
                acc
            })
            .collect();
        let fallback = p.iter().rposition(|&x| x > 0.0).unwrap_or(p.len() - 1);
        Categorical {
            cumulative,
            fallback,
        }
    }

    fn draw(&self, source: &mut RandomSource) -> usize {
        let u = source.uniform();
        let k = self.cumulative.partition_point(|&c| c <= u);
        if k < self.cumulative.len() {
            k
        } else {
            self.fallback
        }
    }
}

/// Shuffles `group` in place and hands out consecutive runs of it, sized by
/// the cumulative proportions `p`, to clients `0..K`.
fn allocate_quota(
    group: &mut [usize],
    p: &[f64],
    source: &mut RandomSource,
    client_of: &mut [usize],
) {
    for i in (1..group.len()).rev() {
        let j = (source.uniform() * (i + 1) as f64) as usize;
        group.swap(i, j.min(i));
    }
    let n = group.len();
    let mut start = 0;
    let mut acc = 0.0;
    for (k, &pk) in p.iter().enumerate() {
        acc += pk;
        let end = if k + 1 == p.len() {
            n
        } else {
            ((acc * n as f64) as usize).clamp(start, n)
        };
        for &i in &group[start..end] {
            client_of[i] = k;
        }
        start = end;
    }
}

/// Assigns every sample a client given its group (`groups[i]` indexes
/// `proportions`). Groups are processed in index order, members in dataset
/// order.
fn allocate(
    rule: Allocation,
    proportions: &[Vec<f64>],
    groups: &[usize],
    source: &mut RandomSource,
) -> Vec<usize> {
    match rule {
        Allocation::Sample => {
            let samplers: Vec<Categorical> =
                proportions.iter().map(|p| Categorical::new(p)).collect();
            groups.iter().map(|&g| samplers[g].draw(source)).collect()
        }
        Allocation::Quota => {
            let mut members = vec![Vec::new(); proportions.len()];
            for (i, &g) in groups.iter().enumerate() {
                members[g].push(i);
            }
            let mut client_of = vec![0; groups.len()];
            for (group, p) in members.iter_mut().zip(proportions) {
                allocate_quota(group, p, source, &mut client_of);
            }
            client_of
        }
    }
}

/// Quantity-skewed split: one Dirichlet vector for the whole dataset.
pub fn quantity_skewed_split(
    dataset: &SurvivalDataset,
    config: &SplitConfig,
    source: &mut RandomSource,
) -> Result<SplitAssignment> {
    config.validate()?;
    if config.method != SplitMethod::Quantity {
        return Err(Error::InvalidConfig("expected the quantity method".into()));
    }
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let seed = source.seed();
    let p = sample_dirichlet(&config.dirichlet()?, source)?;
    let client_of = allocate(
        config.allocation,
        std::slice::from_ref(&p),
        &vec![0; dataset.len()],
        source,
    );
    Ok(SplitAssignment {
        client_of,
        proportions: vec![p],
        bin_labels: None,
        bin_edges: None,
        config: config.clone(),
        seed,
    })
}

/// Label-skewed split: bins the timeline, draws one Dirichlet vector per
/// effective bin, then allocates each bin's samples with its own vector.
pub fn label_skewed_split(
    dataset: &SurvivalDataset,
    config: &SplitConfig,
    source: &mut RandomSource,
) -> Result<SplitAssignment> {
    config.validate()?;
    let (Some(bins), Some(strategy)) = (config.bins, config.bin_strategy) else {
        return Err(Error::InvalidConfig("expected the label method".into()));
    };
    let edges = compute_bin_edges(dataset, bins, strategy)?;
    label_skewed_split_with_edges(dataset, config, edges, source)
}

/// Label-skewed split over precomputed bin edges, which must cover every
/// observed time.
pub fn label_skewed_split_with_edges(
    dataset: &SurvivalDataset,
    config: &SplitConfig,
    edges: BinEdges,
    source: &mut RandomSource,
) -> Result<SplitAssignment> {
    let labels = dataset
        .times()
        .map(|t| {
            edges.label_of(t).ok_or_else(|| {
                Error::InvalidConfig(format!("time {t} falls outside the bin edges"))
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let seed = source.seed();
    let params = config.dirichlet()?;
    let proportions = (0..edges.effective_bins())
        .map(|_| sample_dirichlet(&params, source))
        .collect::<Result<Vec<_>>>()?;
    let client_of = allocate(config.allocation, &proportions, &labels, source);
    Ok(SplitAssignment {
        client_of,
        proportions,
        bin_labels: Some(labels),
        bin_edges: Some(edges),
        config: config.clone(),
        seed,
    })
}

/// Runs the method named in `config` with a fresh source seeded by `seed`.
pub fn split(
    dataset: &SurvivalDataset,
    config: &SplitConfig,
    seed: u64,
) -> Result<SplitAssignment> {
    let mut source = RandomSource::new(seed);
    match config.method {
        SplitMethod::Quantity => quantity_skewed_split(dataset, config, &mut source),
        SplitMethod::Label => label_skewed_split(dataset, config, &mut source),
    }
}

/// Materializes the `K` client datasets. Shards may be empty; records keep
/// their original relative order.
pub fn materialize(
    dataset: &SurvivalDataset,
    assignment: &SplitAssignment,
) -> Result<Vec<SurvivalDataset>> {
    if assignment.len() != dataset.len() {
        return Err(Error::LengthMismatch {
            assignment: assignment.len(),
            dataset: dataset.len(),
        });
    }
    let k = assignment.k();
    if let Some((index, &client)) = assignment
        .client_of
        .iter()
        .enumerate()
        .find(|(_, &c)| c >= k)
    {
        return Err(Error::ClientOutOfRange { index, client, k });
    }
    assignment
        .client_indices()
        .iter()
        .enumerate()
        .map(|(c, idx)| {
            dataset
                .subset(idx)
                .map(|d| d.with_name(format!("{}_client_{c:03}", dataset.name())))
        })
        .collect()
}
