//! Small hand-checkable instances.

use crate::market::{Market, PreferenceProfile};

/// Two doctors, two hospitals, opposed preferences:
///
/// ```text
/// d0: h0 > h1    h0: d1 > d0
/// d1: h1 > h0    h1: d0 > d1
/// ```
///
/// Stable matchings: {d0-h0, d1-h1} (doctor-optimal) and {d0-h1, d1-h0}
/// (hospital-optimal).
pub fn e1() -> PreferenceProfile {
    PreferenceProfile::new(
        Market::balanced(2).expect("valid market"),
        vec![vec![0, 1], vec![1, 0]],
        vec![vec![1, 0], vec![0, 1]],
    )
    .expect("valid profile")
}

/// One doctor preferring h0 to h1; the unique stable matching leaves h1 alone.
pub fn one_by_two() -> PreferenceProfile {
    PreferenceProfile::new(
        Market::new(1, 2).expect("valid market"),
        vec![vec![0, 1]],
        vec![vec![0], vec![0]],
    )
    .expect("valid profile")
}
