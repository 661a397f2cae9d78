#![no_main]

use libfuzzer_sys::fuzz_target;

use fedsurv::manifest::read_assignment_csv;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_assignment_csv(data) {
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.sample_index, i);
        }
    }
});
