//! Monte Carlo experiments over random markets.
//!
//! Trials are independent: trial `i` of an experiment with master seed `s`
//! uses the seed `trial_seed(s, i)` and derives every random stream it needs
//! from it (see [`StreamSalt`]). Trials run in parallel on the current rayon
//! pool and are collected in trial order, so a report depends only on its
//! configuration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::da::{run_dpda, run_hpda, OrderPolicy};
use crate::error::{Error, Result};
use crate::lazy::{coupled_run, run_dpda_prime, run_dpda_prime_rejector};
use crate::market::{generate_uniform_profile, rank_of, side_ranks, AgentId, Market, Side};
use crate::report::ExperimentReport;

/// `H_n = 1 + 1/2 + ... + 1/n`, summed smallest term first.
pub fn harmonic_number(n: usize) -> f64 {
    (1..=n).rev().map(|i| 1.0 / i as f64).sum()
}

/// SplitMix64 output function applied to `x`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` under `master_seed`: `splitmix64(master_seed ^ trial)`.
/// Distinct trials of one experiment always get distinct seeds.
pub fn trial_seed(master_seed: u64, trial: u64) -> u64 {
    splitmix64(master_seed ^ trial)
}

/// Per-purpose seeds derived from a trial seed as `splitmix64(seed ^ salt)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamSalt {
    /// Uniform preference profile.
    Profile = 0x7072_6f66,
    /// Lazy proposal process.
    Lazy = 0x6c61_7a79,
}

pub fn derive_seed(seed: u64, salt: StreamSalt) -> u64 {
    splitmix64(seed ^ salt as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Balanced,
    Unbalanced,
    RejectorTail,
    CouplingCheck,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Balanced => "balanced",
            ExperimentKind::Unbalanced => "unbalanced",
            ExperimentKind::RejectorTail => "rejector-tail",
            ExperimentKind::CouplingCheck => "coupling-check",
        }
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub market: Market,
    pub trials: u64,
    pub master_seed: u64,
    pub kind: ExperimentKind,
    /// The rejecting hospital; required for, and only for, rejector runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_hospital: Option<usize>,
}

impl ExperimentConfig {
    pub fn balanced(n: usize, trials: u64, master_seed: u64) -> Result<Self> {
        Self::new(Market::balanced(n)?, trials, master_seed, ExperimentKind::Balanced, None)
    }

    pub fn unbalanced(n: usize, trials: u64, master_seed: u64) -> Result<Self> {
        Self::new(Market::unbalanced(n)?, trials, master_seed, ExperimentKind::Unbalanced, None)
    }

    /// Rejector runs with hospital 0 as the rejecting hospital.
    pub fn rejector_tail(n: usize, trials: u64, master_seed: u64) -> Result<Self> {
        Self::new(
            Market::unbalanced(n)?,
            trials,
            master_seed,
            ExperimentKind::RejectorTail,
            Some(0),
        )
    }

    pub fn coupling_check(n: usize, trials: u64, master_seed: u64) -> Result<Self> {
        Self::new(Market::balanced(n)?, trials, master_seed, ExperimentKind::CouplingCheck, None)
    }

    pub fn new(
        market: Market,
        trials: u64,
        master_seed: u64,
        kind: ExperimentKind,
        target_hospital: Option<usize>,
    ) -> Result<Self> {
        let config = ExperimentConfig {
            market,
            trials,
            master_seed,
            kind,
            target_hospital,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.market.num_doctors(), self.market.num_hospitals());
        if n == 0 || m == 0 {
            return Err(Error::InvalidMarket("empty side".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("an experiment needs at least one trial".into()));
        }
        let wants_target = self.kind == ExperimentKind::RejectorTail;
        if wants_target != self.target_hospital.is_some() {
            return Err(Error::InvalidArgument(format!(
                "{} experiments {} a target hospital",
                self.kind,
                if wants_target { "require" } else { "do not take" }
            )));
        }
        if let Some(t) = self.target_hospital {
            if t >= m {
                return Err(Error::InvalidArgument(format!("target hospital {t} out of range 0..{m}")));
            }
        }
        let shape_ok = match self.kind {
            ExperimentKind::Balanced | ExperimentKind::CouplingCheck => m == n,
            ExperimentKind::Unbalanced | ExperimentKind::RejectorTail => m == n + 1,
        };
        if !shape_ok {
            return Err(Error::InvalidMarket(format!(
                "{} experiments cannot run on a {n}x{m} market",
                self.kind
            )));
        }
        Ok(())
    }
}

/// One row of an experiment. Fields that do not apply to the kind are empty.
///
/// | kind | total_proposals | mean_doctor_rank / mean_hospital_rank | hstar_* | ybar |
/// |---|---|---|---|---|
/// | balanced | lazy-process proposals | doctor-proposing DA | - | - |
/// | unbalanced | hospital-proposing DA proposals | hospital-proposing DA | h0 under HPDA / DPDA | - |
/// | rejector-tail | lazy rejector proposals | - | - | proposals to the rejecting hospital |
/// | coupling-check | lazy-process proposals | revealed profile (doctor mean times n is the filtered count) | - | - |
///
/// Hospital means are over matched hospitals; ranks of unmatched agents are
/// list length plus one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub kind: ExperimentKind,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub total_proposals: Option<u64>,
    pub mean_doctor_rank: Option<f64>,
    pub mean_hospital_rank: Option<f64>,
    pub hstar_rank_hpda: Option<usize>,
    pub hstar_rank_dpda: Option<usize>,
    pub ybar: Option<u64>,
}

impl TrialRecord {
    fn blank(config: &ExperimentConfig, trial: u64, seed: u64) -> Self {
        TrialRecord {
            trial,
            kind: config.kind,
            n: config.market.num_doctors(),
            m: config.market.num_hospitals(),
            seed,
            total_proposals: None,
            mean_doctor_rank: None,
            mean_hospital_rank: None,
            hstar_rank_hpda: None,
            hstar_rank_dpda: None,
            ybar: None,
        }
    }

    /// Filtered proposal count of a coupling-check row.
    pub fn filtered_total(&self) -> Option<u64> {
        match self.kind {
            ExperimentKind::CouplingCheck => self.mean_doctor_rank.map(|r| (r * self.n as f64).round() as u64),
            _ => None,
        }
    }
}

fn mean(values: impl Iterator<Item = usize>) -> Option<f64> {
    let (sum, count) = values.fold((0usize, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum as f64 / count as f64)
}

fn mean_doctor_rank(profile: &crate::market::PreferenceProfile, matching: &crate::market::Matching) -> Result<f64> {
    Ok(mean(side_ranks(profile, Side::Doctor, matching)?.into_iter().map(|r| r.get())).unwrap_or(0.0))
}

fn mean_matched_hospital_rank(
    profile: &crate::market::PreferenceProfile,
    matching: &crate::market::Matching,
) -> Result<Option<f64>> {
    let ranks = side_ranks(profile, Side::Hospital, matching)?;
    Ok(mean(
        ranks
            .into_iter()
            .enumerate()
            .filter(|(h, _)| matching.is_matched(AgentId::hospital(*h)))
            .map(|(_, r)| r.get()),
    ))
}

/// Runs one trial.
pub fn run_trial(config: &ExperimentConfig, trial: u64) -> Result<TrialRecord> {
    let seed = trial_seed(config.master_seed, trial);
    let mut record = TrialRecord::blank(config, trial, seed);
    let market = config.market;
    match config.kind {
        ExperimentKind::Balanced => {
            let profile = generate_uniform_profile(market, derive_seed(seed, StreamSalt::Profile));
            let trace = run_dpda(&profile, OrderPolicy::Queue);
            record.mean_doctor_rank = Some(mean_doctor_rank(&profile, &trace.matching)?);
            record.mean_hospital_rank = mean_matched_hospital_rank(&profile, &trace.matching)?;
            let lazy = run_dpda_prime(market, derive_seed(seed, StreamSalt::Lazy));
            record.total_proposals = Some(lazy.total_proposals);
        }
        ExperimentKind::Unbalanced => {
            let profile = generate_uniform_profile(market, derive_seed(seed, StreamSalt::Profile));
            let hpda = run_hpda(&profile, OrderPolicy::Queue);
            let dpda = run_dpda(&profile, OrderPolicy::Queue);
            let hstar = AgentId::hospital(0);
            record.hstar_rank_hpda = Some(rank_of(&profile, hstar, &hpda.matching)?.get());
            record.hstar_rank_dpda = Some(rank_of(&profile, hstar, &dpda.matching)?.get());
            record.mean_doctor_rank = Some(mean_doctor_rank(&profile, &hpda.matching)?);
            record.mean_hospital_rank = mean_matched_hospital_rank(&profile, &hpda.matching)?;
            record.total_proposals = Some(hpda.total_proposals as u64);
        }
        ExperimentKind::RejectorTail => {
            let target = config
                .target_hospital
                .ok_or_else(|| Error::InvalidArgument("rejector runs need a target".into()))?;
            let lazy = run_dpda_prime_rejector(market, target, derive_seed(seed, StreamSalt::Lazy))?;
            record.total_proposals = Some(lazy.total_proposals);
            record.ybar = lazy.proposals_to_target;
        }
        ExperimentKind::CouplingCheck => {
            let run = coupled_run(market, derive_seed(seed, StreamSalt::Lazy));
            record.total_proposals = Some(run.lazy_total);
            record.mean_doctor_rank = Some(mean_doctor_rank(&run.revealed_profile, &run.matching)?);
            record.mean_hospital_rank = mean_matched_hospital_rank(&run.revealed_profile, &run.matching)?;
        }
    }
    Ok(record)
}

/// Runs every trial of `config` on the current rayon pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let records = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(config, trial))
        .collect::<Result<Vec<_>>>()?;
    ExperimentReport::from_records(config.clone(), records)
}

fn run_kind(config: &ExperimentConfig, kind: ExperimentKind) -> Result<ExperimentReport> {
    if config.kind != kind {
        return Err(Error::InvalidArgument(format!(
            "expected a {kind} configuration, got {}",
            config.kind
        )));
    }
    run_experiment(config)
}

/// Balanced markets: doctor-proposing DA ranks plus one lazy run per trial.
pub fn run_balanced_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::Balanced)
}

/// One extra hospital: both extreme stable matchings per trial, tracking h0.
pub fn run_unbalanced_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::Unbalanced)
}

/// Lazy runs in which the target hospital rejects everything.
pub fn run_rejector_tail_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::RejectorTail)
}

pub fn run_coupling_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::CouplingCheck)
}
