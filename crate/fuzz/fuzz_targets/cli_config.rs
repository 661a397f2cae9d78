#![no_main]

use libfuzzer_sys::fuzz_target;

use fedsurv_cli::args::{parse_config, HeterogeneityArgs, KmArgs, SplitArgs, SummaryArgs};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = parse_config::<SummaryArgs>(text);
    let _ = parse_config::<SplitArgs>(text);
    let _ = parse_config::<KmArgs>(text);
    let _ = parse_config::<HeterogeneityArgs>(text);
});
