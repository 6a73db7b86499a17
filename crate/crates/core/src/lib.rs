//! Simulation laboratory for random two-sided matching markets.
//!
//! * [`market`]: markets, preference profiles, matchings, ranks, uniform
//!   profile generation and single-hospital list truncation.
//! * [`da`]: doctor- and hospital-proposing deferred acceptance with full
//!   proposal traces, plus blocking-pair scans.
//! * [`lazy`]: deferred acceptance with lazily revealed uniform preferences,
//!   its rejecting-hospital variant and the coupled filtered run.
//! * [`truncation`]: a hospital's best stable rank from list truncation.
//! * [`oracle`]: brute-force stable-set enumeration for small markets.
//! * [`experiments`] and [`report`]: seeded Monte Carlo harness and its
//!   CSV/JSON reports.
//! * [`verification`]: the oracle-backed self-check behind `stable-lab verify`.
//!
//! ```
//! use stable_lab::da::{run_dpda, OrderPolicy};
//! use stable_lab::market::{generate_uniform_profile, Market};
//!
//! let profile = generate_uniform_profile(Market::balanced(50).unwrap(), 7);
//! let trace = run_dpda(&profile, OrderPolicy::Queue);
//! assert!(stable_lab::da::is_stable(&profile, &trace.matching));
//! ```

pub mod da;
pub mod error;
pub mod experiments;
pub mod fixtures;
pub mod lazy;
pub mod market;
pub mod oracle;
pub mod report;
pub mod thresholds;
pub mod truncation;
pub mod verification;

pub use error::{Error, Result};
