#![no_main]

use libfuzzer_sys::fuzz_target;

use fedsurv::{ColumnMapping, SurvivalDataset};

fuzz_target!(|data: &[u8]| {
    let mapping = ColumnMapping::new("time", "event");
    let Ok(ds) = SurvivalDataset::read_csv(data, &mapping, "fuzz") else {
        return;
    };
    assert!(!ds.is_empty());
    assert!(ds.times().all(|t| t.is_finite() && t >= 0.0));
    let summary = ds.summarize().unwrap();
    assert!((0.0..=1.0).contains(&summary.censored_fraction));

    // anything accepted must survive a write/read round trip
    if ds.check_writable().is_ok() {
        let mut out = Vec::new();
        ds.write_csv_to(&mut out).unwrap();
        let back = SurvivalDataset::read_csv(out.as_slice(), &mapping, "fuzz").unwrap();
        assert_eq!(back, ds);
    }
});
