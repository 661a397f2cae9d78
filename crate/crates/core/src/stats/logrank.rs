use serde::{Deserialize, Serialize};

use super::TimeTable;
use crate::data::SurvivalDataset;
use crate::error::{Error, Result};

/// Outcome of a two-sample log-rank test.
///
/// When `defined` is false (an empty group, no events at all, or zero
/// variance) `statistic` is 0 and `p_value` is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRankResult {
    pub statistic: f64,
    pub p_value: f64,
    pub observed: (u64, u64),
    pub expected: (f64, f64),
    pub variance: f64,
    pub defined: bool,
}

/// Upper tail of the chi-square distribution with one degree of freedom,
/// `erfc(sqrt(x / 2))`.
pub fn chi_square_sf_1dof(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::NegativeInput(x));
    }
    Ok(statrs::function::erf::erfc((x / 2.0).sqrt()).clamp(0.0, 1.0))
}

/// Log-rank test of equal survival in `a` and `b`.
///
/// Uses the hypergeometric variance form `(O_a - E_a)^2 / V`. The result is
/// identical (bit for bit) when the arguments are swapped.
pub fn log_rank_test(a: &SurvivalDataset, b: &SurvivalDataset) -> LogRankResult {
    log_rank_tables(&TimeTable::from_dataset(a), &TimeTable::from_dataset(b))
}

pub(crate) fn log_rank_tables(a: &TimeTable, b: &TimeTable) -> LogRankResult {
    let mut at_risk_a = a.n as f64;
    let mut at_risk_b = b.n as f64;
    let (mut i, mut j) = (0, 0);
    // sum of (d_a * n_b - d_b * n_a) / n, i.e. O_a - E_a, antisymmetric in (a, b)
    let mut diff = 0.0;
    let mut variance = 0.0;
    let (mut expected_a, mut expected_b) = (0.0, 0.0);

    while i < a.times.len() || j < b.times.len() {
        let ta = a.times.get(i).copied().unwrap_or(f64::INFINITY);
        let tb = b.times.get(j).copied().unwrap_or(f64::INFINITY);
        let t = ta.min(tb);
        let (mut d_a, mut rem_a, mut d_b, mut rem_b) = (0.0, 0.0, 0.0, 0.0);
        if ta == t {
            d_a = f64::from(a.events[i]);
            rem_a = f64::from(a.removed[i]);
            i += 1;
        }
        if tb == t {
            d_b = f64::from(b.events[j]);
            rem_b = f64::from(b.removed[j]);
            j += 1;
        }
        let d = d_a + d_b;
        if d > 0.0 {
            let n = at_risk_a + at_risk_b;
            diff += (d_a * at_risk_b - d_b * at_risk_a) / n;
            expected_a += d * at_risk_a / n;
            expected_b += d * at_risk_b / n;
            if n > 1.0 {
                variance += d * (at_risk_a * at_risk_b) * (n - d) / (n * n * (n - 1.0));
            }
        }
        at_risk_a -= rem_a;
        at_risk_b -= rem_b;
    }

    let observed = (a.total_events(), b.total_events());
    let defined = a.n > 0 && b.n > 0 && observed.0 + observed.1 > 0 && variance > 0.0;
    let (statistic, p_value) = if defined {
        let stat = diff * diff / variance;
        (stat, chi_square_sf_1dof(stat).unwrap_or(1.0))
    } else {
        (0.0, 1.0)
    };
    LogRankResult {
        statistic,
        p_value,
        observed,
        expected: (expected_a, expected_b),
        variance,
        defined,
    }
}

/// Fraction of the `K(K-1)/2` client pairs whose log-rank p-value is at most
/// `threshold`. Undefined tests count as not significant but stay in the
/// denominator.
pub fn heterogeneity_score(shards: &[SurvivalDataset], threshold: f64) -> Result<f64> {
    let tables: Vec<TimeTable> = shards.iter().map(TimeTable::from_dataset).collect();
    heterogeneity_from_tables(&tables, threshold)
}

pub(crate) fn heterogeneity_from_tables(tables: &[TimeTable], threshold: f64) -> Result<f64> {
    let k = tables.len();
    if k < 2 {
        return Err(Error::TooFewClients(k));
    }
    let mut significant = 0usize;
    for x in 0..k {
        for y in x + 1..k {
            let r = log_rank_tables(&tables[x], &tables[y]);
            if r.defined && r.p_value <= threshold {
                significant += 1;
            }
        }
    }
    Ok(significant as f64 / (k * (k - 1) / 2) as f64)
}
