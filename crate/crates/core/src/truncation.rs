//! A hospital's best stable rank, found by truncating its list.
//!
//! A hospital has a stable partner among its top `k` doctors exactly when it
//! is still matched by doctor-proposing deferred acceptance after cutting its
//! list down to those `k` doctors. The smallest such `k` is therefore the
//! rank it gets in the hospital-optimal stable matching.

use serde::{Deserialize, Serialize};

use crate::da::{run_dpda, OrderPolicy};
use crate::error::{Error, Result};
use crate::market::{truncate_hospital_list, AgentId, PreferenceProfile, Rank, StableRank};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchStrategy {
    Linear,
    #[default]
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Probe {
    pub keep: usize,
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationResult {
    pub hospital: usize,
    pub optimal_rank: StableRank,
    /// In the order they were run.
    pub probes: Vec<Probe>,
}

/// Whether `hospital` is matched by doctor-proposing deferred acceptance once
/// its list is cut to the top `keep` doctors.
pub fn matched_under_truncation(profile: &PreferenceProfile, hospital: usize, keep: usize) -> Result<bool> {
    let truncated = truncate_hospital_list(profile, hospital, keep)?;
    Ok(run_dpda(&truncated, OrderPolicy::Queue)
        .matching
        .is_matched(AgentId::hospital(hospital)))
}

/// Smallest keep-length at which `hospital` stays matched, or
/// [`StableRank::Unmatchable`] if it is unmatched even with its full list.
pub fn hospital_optimal_rank_via_truncation(
    profile: &PreferenceProfile,
    hospital: usize,
    strategy: SearchStrategy,
) -> Result<TruncationResult> {
    let len = profile
        .hospital_lists()
        .get(hospital)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "hospital {hospital} out of range 0..{}",
                profile.market().num_hospitals()
            ))
        })?
        .len();

    let mut probes = Vec::new();
    let mut probe = |keep: usize| -> Result<bool> {
        let matched = matched_under_truncation(profile, hospital, keep)?;
        probes.push(Probe { keep, matched });
        Ok(matched)
    };

    let found = match strategy {
        SearchStrategy::Linear => {
            let mut found = None;
            for keep in 1..=len {
                if probe(keep)? {
                    found = Some(keep);
                    break;
                }
            }
            found
        }
        SearchStrategy::Binary => {
            if len == 0 || !probe(len)? {
                None
            } else {
                // matched(hi) holds; matched(lo) is known false or lo == 0
                let (mut lo, mut hi) = (0, len);
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if probe(mid)? {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                Some(hi)
            }
        }
    };

    let optimal_rank = match found {
        Some(keep) => StableRank::Rank(Rank::new(keep)?),
        None => StableRank::Unmatchable,
    };
    Ok(TruncationResult {
        hospital,
        optimal_rank,
        probes,
    })
}

impl TruncationResult {
    /// True when the probes are consistent with matched-ness being
    /// nondecreasing in the keep-length and with the reported optimum.
    pub fn is_consistent(&self) -> bool {
        let mut sorted = self.probes.clone();
        sorted.sort_by_key(|p| p.keep);
        let monotone = sorted.windows(2).all(|w| !w[0].matched || w[1].matched);
        let agrees = sorted.iter().all(|p| match self.optimal_rank {
            StableRank::Rank(r) => p.matched == (p.keep >= r.get()),
            StableRank::Unmatchable => !p.matched,
        });
        monotone && agrees
    }
}
