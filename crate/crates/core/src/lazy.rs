//! Doctor-proposing deferred acceptance with preferences revealed lazily.
//!
//! No preference lists exist up front. Each proposal goes to a hospital drawn
//! uniformly from all of them; a hospital ignores a doctor who already
//! proposed to it, and otherwise accepts a newcomer with probability
//! `1/(1+k)` where `k` is the number of distinct doctors it has already seen.
//! On uniformly random profiles this produces the same matching distribution
//! as ordinary doctor-proposing deferred acceptance, while the proposal count
//! (repeats included) is a coupon-collector variable that is easy to analyse.
//!
//! Proposals are grouped into phases: a phase ends with the first proposal
//! ever made to a hospital (excluding the designated rejecting hospital, if
//! any).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::market::{Market, Matching, PreferenceProfile};

/// Proposal counts from one lazy run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LazyTrace {
    pub market: Market,
    /// Every proposal, repeats and proposals to the rejecting hospital included.
    pub total_proposals: u64,
    /// Proposals received by the rejecting hospital, when one is designated.
    pub proposals_to_target: Option<u64>,
    /// Length of each completed phase.
    pub phase_lengths: Vec<u64>,
    /// Proposals to the rejecting hospital inside each phase; all zero when
    /// no hospital rejects.
    pub target_hits_per_phase: Vec<u64>,
    /// Proposals after the last completed phase. Only non-zero when there are
    /// fewer hospitals than doctors and some doctors exhaust every hospital.
    pub trailing_proposals: u64,
    /// Distinct hospitals each doctor proposed to, i.e. the rank of its final
    /// partner in the preferences the run revealed.
    pub distinct_proposals: Vec<usize>,
    pub matching: Matching,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Event {
    /// Proposal to the rejecting hospital.
    Target,
    /// Doctor already proposed to this hospital; ignored.
    Repeat,
    /// First proposal of this doctor to this hospital, which had seen
    /// `seen_before` other doctors.
    Fresh { seen_before: usize, accepted: bool },
}

fn simulate<F>(market: Market, target: Option<usize>, rng: &mut ChaCha8Rng, mut observe: F) -> LazyTrace
where
    F: FnMut(usize, usize, Event),
{
    let (n, m) = (market.num_doctors(), market.num_hospitals());
    let mut proposed = vec![false; n * m];
    let mut distinct = vec![0usize; n];
    let mut seen = vec![0usize; m];
    let mut doctor_match: Vec<Option<usize>> = vec![None; n];
    let mut hospital_match: Vec<Option<usize>> = vec![None; m];

    let mut total = 0u64;
    let mut to_target = 0u64;
    let mut phase_len = 0u64;
    let mut phase_hits = 0u64;
    let mut phase_lengths = Vec::new();
    let mut target_hits = Vec::new();

    // The doctor on top keeps proposing until it holds a hospital.
    let mut pool: Vec<usize> = (0..n).rev().collect();
    while let Some(&d) = pool.last() {
        if distinct[d] == m {
            assert!(
                target.is_none(),
                "doctor {d} ran out of hospitals with a rejecting hospital present"
            );
            pool.pop();
            continue;
        }
        let h = rng.gen_range(0..m);
        total += 1;
        phase_len += 1;

        let cell = d * m + h;
        let event = if Some(h) == target {
            to_target += 1;
            phase_hits += 1;
            if !proposed[cell] {
                proposed[cell] = true;
                distinct[d] += 1;
            }
            Event::Target
        } else if proposed[cell] {
            Event::Repeat
        } else {
            proposed[cell] = true;
            distinct[d] += 1;
            let k = seen[h];
            seen[h] += 1;
            let accepted = k == 0 || rng.gen_range(0..=k) == 0;
            if accepted {
                pool.pop();
                doctor_match[d] = Some(h);
                if let Some(incumbent) = hospital_match[h].replace(d) {
                    doctor_match[incumbent] = None;
                    pool.push(incumbent);
                }
            }
            if k == 0 {
                phase_lengths.push(phase_len);
                target_hits.push(phase_hits);
                phase_len = 0;
                phase_hits = 0;
            }
            Event::Fresh {
                seen_before: k,
                accepted,
            }
        };
        observe(d, h, event);
    }

    LazyTrace {
        market,
        total_proposals: total,
        proposals_to_target: target.map(|_| to_target),
        phase_lengths,
        target_hits_per_phase: target_hits,
        trailing_proposals: phase_len,
        distinct_proposals: distinct,
        matching: Matching::from_raw(doctor_match, hospital_match),
    }
}

/// One lazy doctor-proposing run, driven by a ChaCha8 stream seeded with `seed`.
pub fn run_dpda_prime(market: Market, seed: u64) -> LazyTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate(market, None, &mut rng, |_, _, _| {})
}

/// Lazy run in a market with one more hospital than doctors, where `target`
/// rejects every proposal. Ends once every doctor holds one of the other
/// hospitals.
pub fn run_dpda_prime_rejector(market: Market, target: usize, seed: u64) -> Result<LazyTrace> {
    if market.num_hospitals() != market.num_doctors() + 1 {
        return Err(Error::InvalidMarket(format!(
            "rejecting-hospital runs need one more hospital than doctors, got {}x{}",
            market.num_doctors(),
            market.num_hospitals()
        )));
    }
    if target >= market.num_hospitals() {
        return Err(Error::InvalidArgument(format!(
            "target hospital {target} out of range 0..{}",
            market.num_hospitals()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(simulate(market, Some(target), &mut rng, |_, _, _| {}))
}

/// A lazy run together with the same run with repeat proposals filtered out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoupledRun {
    /// Equal to `run_dpda_prime(market, seed).total_proposals`.
    pub lazy_total: u64,
    /// Proposals that were not repeats.
    pub filtered_total: u64,
    pub matching: Matching,
    /// A complete profile consistent with every decision the run made: doctor
    /// lists start with the hospitals in the order they were first proposed
    /// to, hospital lists order the doctors they saw by the accept/reject
    /// outcomes. Unrevealed positions are filled uniformly at random, so the
    /// profile is itself uniformly distributed.
    pub revealed_profile: PreferenceProfile,
}

/// Runs the lazy process and tracks the filtered process on the same sample
/// path. Doctor-proposing deferred acceptance on `revealed_profile` makes
/// exactly the filtered proposals.
///
/// Lazy decisions use the stream seeded with `seed`; the extra draws that
/// place doctors inside hospital lists use stream 1 of the same seed.
pub fn coupled_run(market: Market, seed: u64) -> CoupledRun {
    let (n, m) = (market.num_doctors(), market.num_hospitals());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut aux = ChaCha8Rng::seed_from_u64(seed);
    aux.set_stream(1);

    let mut doctor_order: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut hospital_order: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut filtered = 0u64;
    let trace = simulate(market, None, &mut rng, |d, h, event| {
        if let Event::Fresh {
            seen_before,
            accepted,
        } = event
        {
            filtered += 1;
            doctor_order[d].push(h);
            let order = &mut hospital_order[h];
            debug_assert_eq!(order.len(), seen_before);
            if accepted {
                order.insert(0, d);
            } else {
                // somewhere below the current favourite
                let slot = aux.gen_range(1..=order.len());
                order.insert(slot, d);
            }
        }
    });

    let mut unseen = Vec::new();
    for (d, order) in doctor_order.iter_mut().enumerate() {
        let mut listed = vec![false; m];
        order.iter().for_each(|&h| listed[h] = true);
        unseen.clear();
        unseen.extend((0..m).filter(|&h| !listed[h]));
        unseen.shuffle(&mut aux);
        order.extend_from_slice(&unseen);
        debug_assert_eq!(order.len(), m, "doctor {d}");
    }
    for order in hospital_order.iter_mut() {
        let mut listed = vec![false; n];
        order.iter().for_each(|&d| listed[d] = true);
        unseen.clear();
        unseen.extend((0..n).filter(|&d| !listed[d]));
        unseen.shuffle(&mut aux);
        for &d in &unseen {
            let slot = aux.gen_range(0..=order.len());
            order.insert(slot, d);
        }
    }
    let revealed_profile = PreferenceProfile::new(market, doctor_order, hospital_order)
        .expect("revealed lists are permutations");

    CoupledRun {
        lazy_total: trace.total_proposals,
        filtered_total: filtered,
        matching: trace.matching,
        revealed_profile,
    }
}
