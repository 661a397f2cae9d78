#![allow(dead_code)]

use std::path::PathBuf;

use fedsurv::{load_csv, ColumnMapping, RandomSource, SurvivalDataset};

/// Exponential event times (rate `rate`) with independent exponential
/// censoring tuned so that `censored` is the expected censored fraction.
pub fn exponential_dataset(n: usize, rate: f64, censored: f64, seed: u64) -> SurvivalDataset {
    let mut src = RandomSource::new(seed);
    // P(C < T) = c / (rate + c)
    let censor_rate = rate * censored / (1.0 - censored);
    let mut times = Vec::with_capacity(n);
    let mut events = Vec::with_capacity(n);
    for _ in 0..n {
        let t = -src.uniform_open().ln() / rate;
        let c = if censored > 0.0 {
            -src.uniform_open().ln() / censor_rate
        } else {
            f64::INFINITY
        };
        times.push(t.min(c));
        events.push(t <= c);
    }
    SurvivalDataset::from_times("synthetic", &times, &events).unwrap()
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// Loads one of the exported benchmark datasets, if present.
pub fn benchmark(stem: &str) -> Option<SurvivalDataset> {
    let path = data_dir().join(format!("{stem}.csv"));
    if !path.exists() {
        return None;
    }
    let event = if stem == "gbsg2" { "cens" } else { "event" };
    Some(load_csv(&path, &ColumnMapping::new("time", event)).expect("benchmark csv loads"))
}

/// Survival fraction `#{t_i >= t} / n`.
pub fn empirical_survival(times: &[f64], t: f64) -> f64 {
    times.iter().filter(|&&x| x >= t).count() as f64 / times.len() as f64
}

/// Naive product-limit estimate at each distinct event time, straight from
/// the definition with O(n^2) counting.
pub fn reference_km(times: &[f64], events: &[bool]) -> Vec<(f64, f64)> {
    let mut event_times: Vec<f64> = times
        .iter()
        .zip(events)
        .filter(|(_, &e)| e)
        .map(|(&t, _)| t)
        .collect();
    event_times.sort_by(f64::total_cmp);
    event_times.dedup();
    let mut s = 1.0;
    event_times
        .into_iter()
        .map(|tj| {
            let r = times.iter().filter(|&&t| t >= tj).count() as f64;
            let d = times
                .iter()
                .zip(events)
                .filter(|(&t, &e)| e && t == tj)
                .count() as f64;
            s *= 1.0 - d / r;
            (tj, s)
        })
        .collect()
}
