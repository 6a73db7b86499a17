#![no_main]

use libfuzzer_sys::fuzz_target;
use stable_lab::report::ExperimentReport;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(report) = ExperimentReport::from_json(text) {
        let json = report.to_json().unwrap();
        ExperimentReport::from_json(&json).expect("validated report must reload");
    }
});
