#![no_main]

use libfuzzer_sys::fuzz_target;

use fedsurv::manifest::{read_assignment_csv, write_assignment_csv};
use fedsurv::SplitSidecar;

// Input layout: sidecar JSON, a NUL byte, then the assignment CSV.
fuzz_target!(|data: &[u8]| {
    let (json, csv) = match data.iter().position(|&b| b == 0) {
        Some(i) => (&data[..i], &data[i + 1..]),
        None => (data, &[][..]),
    };
    let Ok(text) = std::str::from_utf8(json) else {
        return;
    };
    let Ok(sidecar) = SplitSidecar::from_json(text) else {
        return;
    };
    let Ok(rows) = read_assignment_csv(csv) else {
        return;
    };
    if let Ok(assignment) = sidecar.to_assignment(&rows) {
        let mut again = Vec::new();
        write_assignment_csv(&assignment, &mut again).unwrap();
        assert_eq!(read_assignment_csv(again.as_slice()).unwrap(), rows);
        assert!(assignment.client_of.iter().all(|&c| c < assignment.k()));
    }
});
