#![no_main]

use libfuzzer_sys::fuzz_target;
use stable_lab::da::{find_blocking_pairs, run_dpda, run_hpda, OrderPolicy};
use stable_lab::market::PreferenceProfile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(profile) = PreferenceProfile::from_json(text) else { return };
    // keep runs cheap
    if profile.market().num_doctors() * profile.market().num_hospitals() > 4096 {
        return;
    }
    let again = PreferenceProfile::from_json(&profile.to_json().unwrap()).unwrap();
    assert_eq!(again, profile);
    for trace in [run_dpda(&profile, OrderPolicy::Queue), run_hpda(&profile, OrderPolicy::Stack)] {
        assert!(trace.matching.is_consistent());
        assert!(find_blocking_pairs(&profile, &trace.matching).is_empty());
    }
});
