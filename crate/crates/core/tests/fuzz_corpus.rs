//! Replays the checked-in fuzz corpus through the same round-trip checks the
//! fuzz targets make, so the seeds stay meaningful on a stable toolchain.

use std::fs;
use std::path::PathBuf;

use stable_lab::da::{find_blocking_pairs, run_dpda, run_hpda, OrderPolicy};
use stable_lab::market::PreferenceProfile;
use stable_lab::report::{read_csv, write_csv, ExperimentReport};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            (path.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn profile_seeds() {
    let mut accepted = 0;
    for (name, bytes) in seeds("profile_json") {
        let Ok(profile) = PreferenceProfile::from_json(std::str::from_utf8(&bytes).unwrap()) else {
            continue;
        };
        accepted += 1;
        assert_eq!(PreferenceProfile::from_json(&profile.to_json().unwrap()).unwrap(), profile, "{name}");
        for trace in [run_dpda(&profile, OrderPolicy::Queue), run_hpda(&profile, OrderPolicy::Stack)] {
            assert!(find_blocking_pairs(&profile, &trace.matching).is_empty(), "{name}");
        }
    }
    assert!(accepted >= 3);
}

#[test]
fn report_seeds() {
    for (name, bytes) in seeds("report_json") {
        let report = ExperimentReport::from_json(std::str::from_utf8(&bytes).unwrap())
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        ExperimentReport::from_json(&report.to_json().unwrap()).unwrap();
    }
}

#[test]
fn csv_seeds() {
    for (name, bytes) in seeds("records_csv") {
        let records = read_csv(bytes.as_slice()).unwrap_or_else(|e| panic!("{name}: {e}"));
        let mut out = Vec::new();
        write_csv(&records, &mut out).unwrap();
        assert_eq!(out, bytes, "{name}");
    }
}

#[test]
fn order_policy_seeds() {
    let mut accepted = 0;
    for (name, bytes) in seeds("order_policy") {
        if let Ok(policy) = std::str::from_utf8(&bytes).unwrap().parse::<OrderPolicy>() {
            accepted += 1;
            assert_eq!(policy.to_string().parse::<OrderPolicy>().unwrap(), policy, "{name}");
        }
    }
    assert_eq!(accepted, 4);
}
