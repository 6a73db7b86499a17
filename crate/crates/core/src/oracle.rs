//! Brute-force ground truth for small markets.
//!
//! Nothing here calls into the deferred-acceptance code; stability is decided
//! by direct blocking-pair scans so the oracle can be used to check it.

use std::collections::{BTreeSet, HashMap};
use std::hash::Hash;

use crate::da::find_blocking_pairs;
use crate::error::{Error, Result};
use crate::market::{rank_of, AgentId, Matching, PreferenceProfile, StableRank};

/// Largest side size the enumerators accept.
pub const ENUMERATION_LIMIT: usize = 9;

/// Every stable matching of one profile, sorted and without duplicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StableSet {
    pub matchings: Vec<Matching>,
}

impl StableSet {
    /// Unmatched agents of the first member.
    pub fn unmatched_signature(&self) -> Option<BTreeSet<AgentId>> {
        self.matchings
            .first()
            .map(|m| m.unmatched_agents().into_iter().collect())
    }

    pub fn contains(&self, matching: &Matching) -> bool {
        self.matchings.binary_search(matching).is_ok()
    }

    pub fn len(&self) -> usize {
        self.matchings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matchings.is_empty()
    }
}

fn guard(profile: &PreferenceProfile, limit: usize) -> Result<()> {
    let market = profile.market();
    if market.num_doctors() > limit || market.num_hospitals() > limit {
        return Err(Error::SizeGuard {
            num_doctors: market.num_doctors(),
            num_hospitals: market.num_hospitals(),
            limit,
        });
    }
    Ok(())
}

/// Nobody is matched to a partner they find unacceptable.
pub fn is_individually_rational(profile: &PreferenceProfile, matching: &Matching) -> bool {
    matching.pairs().into_iter().all(|(d, h)| {
        profile.doctor_lists()[d].contains(&h) && profile.hospital_lists()[h].contains(&d)
    })
}

fn is_stable_and_rational(profile: &PreferenceProfile, matching: &Matching) -> bool {
    is_individually_rational(profile, matching) && find_blocking_pairs(profile, matching).is_empty()
}

struct Search<'a> {
    profile: &'a PreferenceProfile,
    /// `doctor_pos[d][h]`, `usize::MAX` when unacceptable.
    doctor_pos: Vec<Vec<usize>>,
    hospital_pos: Vec<Vec<usize>>,
    /// With complete lists only matchings that saturate the short side can be
    /// stable, so at most this many doctors may stay unmatched.
    max_unmatched: usize,
    assignment: Vec<Option<usize>>,
    used: Vec<bool>,
    found: Vec<Matching>,
}

fn positions(lists: &[Vec<usize>], partners: usize) -> Vec<Vec<usize>> {
    lists
        .iter()
        .map(|list| {
            let mut pos = vec![usize::MAX; partners];
            list.iter().enumerate().for_each(|(i, &p)| pos[p] = i);
            pos
        })
        .collect()
}

impl Search<'_> {
    /// A pair that is already decided to block, whatever the later doctors get.
    fn creates_block(&self, d: usize, option: Option<usize>) -> bool {
        let d_rank = |h: Option<usize>| h.map_or(usize::MAX, |h| self.doctor_pos[d][h]);
        let mine = d_rank(option);
        for (earlier, &theirs) in self.assignment[..d].iter().enumerate() {
            if let Some(h) = theirs {
                let h_pos = &self.hospital_pos[h];
                if self.doctor_pos[d][h] < mine && h_pos[d] < h_pos[earlier] {
                    return true;
                }
            }
            if let Some(h) = option {
                let earlier_pos = &self.doctor_pos[earlier];
                let earlier_mine = theirs.map_or(usize::MAX, |x| earlier_pos[x]);
                let h_pos = &self.hospital_pos[h];
                if earlier_pos[h] < earlier_mine && h_pos[earlier] < h_pos[d] {
                    return true;
                }
            }
        }
        false
    }

    fn recurse(&mut self, d: usize, unmatched: usize) {
        let n = self.assignment.len();
        if d == n {
            let matching = Matching::from_doctor_assignment(self.profile.market(), &self.assignment)
                .expect("assignment is injective");
            if is_stable_and_rational(self.profile, &matching) {
                self.found.push(matching);
            }
            return;
        }
        let m = self.used.len();
        for h in 0..m {
            if self.used[h]
                || self.doctor_pos[d][h] == usize::MAX
                || self.hospital_pos[h][d] == usize::MAX
                || self.creates_block(d, Some(h))
            {
                continue;
            }
            self.used[h] = true;
            self.assignment[d] = Some(h);
            self.recurse(d + 1, unmatched);
            self.assignment[d] = None;
            self.used[h] = false;
        }
        if unmatched < self.max_unmatched && !self.creates_block(d, None) {
            self.recurse(d + 1, unmatched + 1);
        }
    }
}

/// All stable matchings of `profile`, by backtracking over doctor assignments
/// with early rejection of partial assignments that already contain a
/// blocking pair. Refuses markets with more than [`ENUMERATION_LIMIT`] agents
/// on a side.
pub fn enumerate_stable_matchings(profile: &PreferenceProfile) -> Result<StableSet> {
    guard(profile, ENUMERATION_LIMIT)?;
    let market = profile.market();
    let (n, m) = (market.num_doctors(), market.num_hospitals());
    let max_unmatched = if profile.is_complete() { n.saturating_sub(m) } else { n };
    let mut search = Search {
        profile,
        doctor_pos: positions(profile.doctor_lists(), m),
        hospital_pos: positions(profile.hospital_lists(), n),
        max_unmatched,
        assignment: vec![None; n],
        used: vec![false; m],
        found: Vec::new(),
    };
    search.recurse(0, 0);
    let mut matchings = search.found;
    matchings.sort();
    matchings.dedup();
    Ok(StableSet { matchings })
}

/// Largest side size [`enumerate_stable_matchings_exhaustive`] accepts.
pub const EXHAUSTIVE_LIMIT: usize = 5;

/// All stable matchings found by filtering every injective partial matching,
/// saturated or not, with no pruning. Used to cross-check the pruned
/// enumerator on tiny markets.
pub fn enumerate_stable_matchings_exhaustive(profile: &PreferenceProfile) -> Result<StableSet> {
    guard(profile, EXHAUSTIVE_LIMIT)?;
    let market = profile.market();
    let (n, m) = (market.num_doctors(), market.num_hospitals());
    let mut found = Vec::new();
    let mut assignment = vec![None; n];
    let mut used = vec![false; m];

    fn walk(
        d: usize,
        profile: &PreferenceProfile,
        assignment: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        found: &mut Vec<Matching>,
    ) {
        if d == assignment.len() {
            let matching = Matching::from_doctor_assignment(profile.market(), assignment)
                .expect("assignment is injective");
            if is_stable_and_rational(profile, &matching) {
                found.push(matching);
            }
            return;
        }
        walk(d + 1, profile, assignment, used, found);
        for h in 0..used.len() {
            if !used[h] {
                used[h] = true;
                assignment[d] = Some(h);
                walk(d + 1, profile, assignment, used, found);
                assignment[d] = None;
                used[h] = false;
            }
        }
    }

    walk(0, profile, &mut assignment, &mut used, &mut found);
    found.sort();
    Ok(StableSet { matchings: found })
}

/// True iff every member leaves the same agents unmatched.
pub fn verify_rural_hospital(stable_set: &StableSet) -> Result<bool> {
    let signature = stable_set.unmatched_signature().ok_or(Error::EmptyStableSet)?;
    Ok(stable_set.matchings[1..]
        .iter()
        .all(|m| m.unmatched_agents().into_iter().collect::<BTreeSet<_>>() == signature))
}

/// Best rank `agent` attains over the members in which it is matched.
pub fn best_stable_rank(
    stable_set: &StableSet,
    profile: &PreferenceProfile,
    agent: AgentId,
) -> Result<StableRank> {
    if stable_set.is_empty() {
        return Err(Error::EmptyStableSet);
    }
    let mut best = None;
    for matching in stable_set.matchings.iter().filter(|m| m.is_matched(agent)) {
        let rank = rank_of(profile, agent, matching)?;
        best = Some(best.map_or(rank, |b: crate::market::Rank| b.min(rank)));
    }
    Ok(best.map_or(StableRank::Unmatchable, StableRank::Rank))
}

/// Worst rank `agent` gets over the stable set, counting unmatched as list
/// length plus one.
pub fn worst_stable_rank(
    stable_set: &StableSet,
    profile: &PreferenceProfile,
    agent: AgentId,
) -> Result<crate::market::Rank> {
    stable_set
        .matchings
        .iter()
        .map(|m| rank_of(profile, agent, m))
        .try_fold(None, |worst, r| {
            r.map(|r| Some(worst.map_or(r, |w: crate::market::Rank| w.max(r))))
        })?
        .ok_or(Error::EmptyStableSet)
}

/// Total-variation distance between the empirical distributions of two
/// samplers. Each sampler is called with the sample index `0..num_samples`.
pub fn matching_distribution_distance<K, A, B>(mut sampler_a: A, mut sampler_b: B, num_samples: u64) -> f64
where
    K: Hash + Eq,
    A: FnMut(u64) -> K,
    B: FnMut(u64) -> K,
{
    if num_samples == 0 {
        return 0.0;
    }
    let mut counts: HashMap<K, (u64, u64)> = HashMap::new();
    for i in 0..num_samples {
        counts.entry(sampler_a(i)).or_default().0 += 1;
        counts.entry(sampler_b(i)).or_default().1 += 1;
    }
    total_variation(counts.into_values(), num_samples)
}

/// Same as [`matching_distribution_distance`] on precomputed samples.
pub fn empirical_distance<K: Hash + Eq>(a: impl IntoIterator<Item = K>, b: impl IntoIterator<Item = K>) -> f64 {
    let mut counts: HashMap<K, (u64, u64)> = HashMap::new();
    let mut na = 0u64;
    let mut nb = 0u64;
    for k in a {
        counts.entry(k).or_default().0 += 1;
        na += 1;
    }
    for k in b {
        counts.entry(k).or_default().1 += 1;
        nb += 1;
    }
    if na == 0 || nb == 0 {
        return if na == nb { 0.0 } else { 1.0 };
    }
    0.5 * counts
        .into_values()
        .map(|(ca, cb)| (ca as f64 / na as f64 - cb as f64 / nb as f64).abs())
        .sum::<f64>()
}

fn total_variation(cells: impl Iterator<Item = (u64, u64)>, samples: u64) -> f64 {
    let diff: u64 = cells.map(|(a, b)| a.abs_diff(b)).sum();
    diff as f64 / (2 * samples) as f64
}
