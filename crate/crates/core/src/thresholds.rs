//! Sizes, trial counts and tolerances of the statistical checks.
//!
//! The acceptance suite and the `verify` command read their thresholds from
//! here and nowhere else.

/// Balanced market size for the proposal-count and rank checks.
pub const BALANCED_N: usize = 1000;
pub const BALANCED_TRIALS: u64 = 200;
/// Allowed relative deviation of the mean lazy proposal count from `n H_n`.
pub const LAZY_TOTAL_REL_TOL: f64 = 0.05;
/// Standard errors of slack on one-sided rank bounds.
pub const SE_SLACK: f64 = 3.0;

/// Rejector runs: `n` doctors, `n + 1` hospitals.
pub const REJECTOR_N: usize = 1000;
pub const REJECTOR_TRIALS: u64 = 2000;
/// Allowed relative deviation of the mean of proposals to the rejecting
/// hospital from `H_n`.
pub const REJECTOR_MEAN_REL_TOL: f64 = 0.05;
/// Lower bound on the empirical probability of at most `3 ln n` proposals.
pub const TAIL_PROBABILITY_FLOOR: f64 = 0.5;

pub const UNBALANCED_N: usize = 500;
pub const UNBALANCED_TRIALS: u64 = 200;

/// Random instances per market shape in the oracle comparisons.
pub const ORACLE_INSTANCES: u64 = 1000;
/// Largest doctor count in the oracle comparisons.
pub const ORACLE_MAX_N: usize = 7;

pub const COUPLING_N: usize = 10;
pub const COUPLING_RUNS: u64 = 10_000;

/// Samples per process in total-variation checks.
pub const TV_SAMPLES: u64 = 100_000;
pub const TV_MAX: f64 = 0.02;

pub const ORDER_PROFILES: u64 = 200;
pub const ORDER_MAX_N: usize = 30;

/// Market used by the competition-effect comparison.
pub const COMPETITION_N: usize = 500;
pub const COMPETITION_TRIALS: u64 = 500;
