#![no_main]

use libfuzzer_sys::fuzz_target;
use stable_lab::report::{read_csv, write_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = read_csv(data) {
        let mut out = Vec::new();
        write_csv(&records, &mut out).unwrap();
        // compare bytes: NaN fields defeat PartialEq
        let mut again = Vec::new();
        write_csv(&read_csv(out.as_slice()).unwrap(), &mut again).unwrap();
        assert_eq!(again, out);
    }
});
