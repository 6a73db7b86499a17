//! Oracle-backed self-check over many small random markets.
//!
//! The doctor-proposing solver is passed in so that deliberately broken
//! solvers can be shown to fail.

use std::fmt;

use crate::da::{find_blocking_pairs, run_dpda, run_hpda, OrderPolicy};
use crate::error::{Error, Result};
use crate::experiments::{derive_seed, trial_seed, StreamSalt};
use crate::lazy::run_dpda_prime;
use crate::market::{generate_uniform_profile, rank_of, AgentId, Market, Matching, PreferenceProfile, StableRank};
use crate::oracle::{
    best_stable_rank, enumerate_stable_matchings, matching_distribution_distance, verify_rural_hospital,
    worst_stable_rank, ENUMERATION_LIMIT,
};
use crate::thresholds::{TV_MAX, TV_SAMPLES};
use crate::truncation::{hospital_optimal_rank_via_truncation, SearchStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyConfig {
    /// Largest side size checked.
    pub max_n: usize,
    /// Random instances per market shape.
    pub trials: u64,
    pub master_seed: u64,
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_n == 0 {
            return Err(Error::InvalidArgument("max-n must be at least 1".into()));
        }
        if self.max_n > ENUMERATION_LIMIT {
            return Err(Error::SizeGuard {
                num_doctors: self.max_n,
                num_hospitals: self.max_n,
                limit: ENUMERATION_LIMIT,
            });
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        Ok(())
    }
}

/// First failed check, with the seed that regenerates the instance
/// (`generate_uniform_profile(market, seed)`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyFailure {
    pub check: &'static str,
    pub market: Market,
    pub seed: u64,
    pub detail: String,
}

impl fmt::Display for VerifyFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} failed on a {}x{} market: {} (reproduce with: gen --doctors {} --hospitals {} --seed {})",
            self.check,
            self.market.num_doctors(),
            self.market.num_hospitals(),
            self.detail,
            self.market.num_doctors(),
            self.market.num_hospitals(),
            self.seed
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifySummary {
    pub instances: u64,
    pub stable_matchings: u64,
    pub distribution_checks: Vec<(usize, f64)>,
}

/// Market shapes covered for `max_n`: balanced `n x n` for `n <= max_n` and
/// `n x (n + 1)` while `n + 1 <= max_n`.
pub fn shapes(max_n: usize) -> Vec<Market> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        out.push(Market::balanced(n).expect("n >= 1"));
        if n < max_n {
            out.push(Market::unbalanced(n).expect("n >= 1"));
        }
    }
    out
}

fn check_instance<S>(profile: &PreferenceProfile, solver: &S) -> std::result::Result<usize, (&'static str, String)>
where
    S: Fn(&PreferenceProfile) -> Matching,
{
    let market = profile.market();
    let doctor_side = solver(profile);
    let blocking = find_blocking_pairs(profile, &doctor_side);
    if let Some(b) = blocking.first() {
        return Err((
            "stability",
            format!(
                "doctor-proposing matching is blocked by (d{}, h{}); {} blocking pairs in total",
                b.doctor,
                b.hospital,
                blocking.len()
            ),
        ));
    }
    let hospital_side = run_hpda(profile, OrderPolicy::Queue).matching;
    if let Some(b) = find_blocking_pairs(profile, &hospital_side).first() {
        return Err((
            "stability",
            format!("hospital-proposing matching is blocked by (d{}, h{})", b.doctor, b.hospital),
        ));
    }

    let set = enumerate_stable_matchings(profile).map_err(|e| ("enumeration", e.to_string()))?;
    if !set.contains(&doctor_side) || !set.contains(&hospital_side) {
        return Err(("lattice-endpoints", "a deferred-acceptance outcome is missing from the stable set".into()));
    }
    if !verify_rural_hospital(&set).map_err(|e| ("rural-hospital", e.to_string()))? {
        return Err(("rural-hospital", "stable matchings leave different agents unmatched".into()));
    }
    if market.num_hospitals() == market.num_doctors() + 1 {
        for m in &set.matchings {
            if m.unmatched_agents().len() != 1 {
                return Err(("rural-hospital", "expected exactly one unmatched hospital".into()));
            }
        }
    }

    let rank = |agent, matching: &Matching| rank_of(profile, agent, matching).map_err(|e| ("rank", e.to_string()));
    for d in 0..market.num_doctors() {
        let agent = AgentId::doctor(d);
        let best = best_stable_rank(&set, profile, agent).map_err(|e| ("rank", e.to_string()))?;
        let got = rank(agent, &doctor_side)?;
        let optimal = match best {
            StableRank::Rank(r) => r == got,
            StableRank::Unmatchable => !doctor_side.is_matched(agent),
        };
        if !optimal {
            return Err(("doctor-optimality", format!("d{d} gets rank {got}, best stable is {best}")));
        }
    }
    for h in 0..market.num_hospitals() {
        let agent = AgentId::hospital(h);
        let best = best_stable_rank(&set, profile, agent).map_err(|e| ("rank", e.to_string()))?;
        let got = rank(agent, &hospital_side)?;
        let matches_best = match best {
            StableRank::Rank(r) => r == got,
            StableRank::Unmatchable => !hospital_side.is_matched(agent),
        };
        if !matches_best {
            return Err(("hospital-optimality", format!("h{h} gets rank {got}, best stable is {best}")));
        }
        let worst = worst_stable_rank(&set, profile, agent).map_err(|e| ("rank", e.to_string()))?;
        if rank(agent, &doctor_side)? != worst {
            return Err(("hospital-pessimality", format!("h{h} is not at its worst stable rank {worst}")));
        }
        let binary = hospital_optimal_rank_via_truncation(profile, h, SearchStrategy::Binary)
            .map_err(|e| ("truncation", e.to_string()))?;
        let linear = hospital_optimal_rank_via_truncation(profile, h, SearchStrategy::Linear)
            .map_err(|e| ("truncation", e.to_string()))?;
        if binary.optimal_rank != best || linear.optimal_rank != best {
            return Err((
                "truncation",
                format!(
                    "h{h}: binary search gives {}, linear scan {}, oracle {best}",
                    binary.optimal_rank, linear.optimal_rank
                ),
            ));
        }
        if !binary.is_consistent() || !linear.is_consistent() {
            return Err(("truncation", format!("h{h}: probes are not monotone")));
        }
    }
    Ok(set.len())
}

/// Runs every check on `config.trials` random instances of each shape in
/// [`shapes`], then compares the lazy process with `solver` on uniform
/// profiles for `n = 2, 3` (when within `max_n`).
///
/// The outer `Result` fails on an invalid configuration; the inner one on
/// the first failed check.
pub fn run_suite<S>(config: &VerifyConfig, solver: S) -> Result<std::result::Result<VerifySummary, VerifyFailure>>
where
    S: Fn(&PreferenceProfile) -> Matching,
{
    config.validate()?;
    let mut summary = VerifySummary::default();
    let mut instance = 0u64;
    for market in shapes(config.max_n) {
        for _ in 0..config.trials {
            let seed = trial_seed(config.master_seed, instance);
            instance += 1;
            let profile = generate_uniform_profile(market, seed);
            match check_instance(&profile, &solver) {
                Ok(count) => {
                    summary.instances += 1;
                    summary.stable_matchings += count as u64;
                }
                Err((check, detail)) => {
                    return Ok(Err(VerifyFailure {
                        check,
                        market,
                        seed,
                        detail,
                    }))
                }
            }
        }
    }

    for n in (2..=3).filter(|&n| n <= config.max_n) {
        let market = Market::balanced(n)?;
        let base = trial_seed(config.master_seed, instance);
        let distance = matching_distribution_distance(
            |i| run_dpda_prime(market, derive_seed(trial_seed(base, i), StreamSalt::Lazy)).matching,
            |i| solver(&generate_uniform_profile(market, derive_seed(trial_seed(base, i), StreamSalt::Profile))),
            TV_SAMPLES,
        );
        summary.distribution_checks.push((n, distance));
        if distance > TV_MAX {
            return Ok(Err(VerifyFailure {
                check: "distribution",
                market,
                seed: base,
                detail: format!("total-variation distance {distance:.4} exceeds {TV_MAX}"),
            }));
        }
    }
    Ok(Ok(summary))
}

/// The library's doctor-proposing solver.
pub fn reference_solver(profile: &PreferenceProfile) -> Matching {
    run_dpda(profile, OrderPolicy::Queue).matching
}
