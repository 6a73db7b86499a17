#![no_main]

use libfuzzer_sys::fuzz_target;
use stable_lab::da::OrderPolicy;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(policy) = text.parse::<OrderPolicy>() {
        assert_eq!(policy.to_string().parse::<OrderPolicy>().unwrap(), policy);
    }
});
