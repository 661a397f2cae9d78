use serde::{Deserialize, Serialize};

use super::TimeTable;
use crate::data::SurvivalDataset;
use crate::error::{Error, Result};

/// One step of a Kaplan-Meier curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmPoint {
    pub time: f64,
    /// Events at `time` (at least one).
    pub events: u32,
    /// Records with observed time `>= time`.
    pub at_risk: u32,
    /// Running product up to and including this step.
    pub survival: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmCurve {
    pub points: Vec<KmPoint>,
    pub n_total: usize,
}

impl KmCurve {
    /// `S(t)`: product over event times strictly before `t`. Equal to 1 up to
    /// and including the first event time, constant after the last.
    pub fn evaluate(&self, t: f64) -> f64 {
        let before = self.points.partition_point(|p| p.time < t);
        match before {
            0 => 1.0,
            j => self.points[j - 1].survival,
        }
    }
}

/// Product-limit estimate over the distinct event times.
///
/// Records censored at an event time count as at risk at that time.
pub fn kaplan_meier(dataset: &SurvivalDataset) -> Result<KmCurve> {
    km_from_table(&TimeTable::from_dataset(dataset))
}

pub(crate) fn km_from_table(table: &TimeTable) -> Result<KmCurve> {
    if table.total_events() == 0 {
        return Err(Error::NoEvents);
    }
    let mut at_risk = table.n as u32;
    let mut survival = 1.0;
    let mut points = Vec::new();
    for j in 0..table.times.len() {
        let d = table.events[j];
        if d > 0 {
            survival *= 1.0 - f64::from(d) / f64::from(at_risk);
            points.push(KmPoint {
                time: table.times[j],
                events: d,
                at_risk,
                survival,
            });
        }
        at_risk -= table.removed[j];
    }
    Ok(KmCurve {
        points,
        n_total: table.n,
    })
}

pub fn evaluate_km(curve: &KmCurve, t: f64) -> f64 {
    curve.evaluate(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(times: &[f64], events: &[bool]) -> SurvivalDataset {
        SurvivalDataset::from_times("km", times, events).unwrap()
    }

    #[test]
    fn three_events() {
        let c = kaplan_meier(&ds(&[1.0, 2.0, 3.0], &[true; 3])).unwrap();
        let s: Vec<f64> = c.points.iter().map(|p| p.survival).collect();
        assert!((s[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((s[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s[2], 0.0);
        assert_eq!(c.evaluate(1.0), 1.0);
        assert_eq!(c.evaluate(0.0), 1.0);
        assert_eq!(c.evaluate(3.0 + 1e-9), 0.0);
        assert_eq!(c.evaluate(1.5), s[0]);
    }

    #[test]
    fn censored_tie_counts_at_risk() {
        let c = kaplan_meier(&ds(&[1.0, 2.0, 2.0, 4.0], &[true, false, true, true])).unwrap();
        let at_two = c.points.iter().find(|p| p.time == 2.0).unwrap();
        assert_eq!((at_two.at_risk, at_two.events), (3, 1));
    }

    // Frozen from statsmodels SurvfuncRight on the same data.
    #[test]
    fn matches_reference_fixture() {
        let c = kaplan_meier(&ds(
            &[1.0, 2.0, 2.0, 4.0, 5.0, 5.0, 7.0, 8.0, 8.0, 9.0],
            &[
                true, false, true, true, true, false, false, true, true, false,
            ],
        ))
        .unwrap();
        let expected = [
            (1.0, 10, 1, 0.9),
            (2.0, 9, 1, 0.7999999999999999),
            (4.0, 7, 1, 0.6857142857142857),
            (5.0, 6, 1, 0.5714285714285715),
            (8.0, 3, 2, 0.1904761904761905),
        ];
        assert_eq!(c.points.len(), expected.len());
        for (p, (t, r, d, s)) in c.points.iter().zip(expected) {
            assert_eq!((p.time, p.at_risk, p.events), (t, r, d));
            assert!((p.survival - s).abs() < 1e-12);
        }
    }

    #[test]
    fn no_events() {
        assert!(matches!(
            kaplan_meier(&ds(&[1.0, 2.0], &[false, false])),
            Err(Error::NoEvents)
        ));
        assert!(matches!(kaplan_meier(&ds(&[], &[])), Err(Error::NoEvents)));
    }
}
