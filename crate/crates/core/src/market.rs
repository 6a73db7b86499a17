//! Markets, preference profiles, matchings and ranks.
//!
//! Agents are addressed by 0-based indices on each side. Preference lists are
//! ordered most-preferred first; a list may be shorter than the other side
//! only after truncation, in which case the missing partners are unacceptable.
//! Ranks are 1-based: a matched agent's rank is the position of its partner
//! on its list, an unmatched agent's rank is one past the end of its list.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Doctor,
    Hospital,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Doctor => Side::Hospital,
            Side::Hospital => Side::Doctor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentId {
    pub side: Side,
    pub index: usize,
}

impl AgentId {
    pub fn doctor(index: usize) -> Self {
        AgentId {
            side: Side::Doctor,
            index,
        }
    }

    pub fn hospital(index: usize) -> Self {
        AgentId {
            side: Side::Hospital,
            index,
        }
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.side {
            Side::Doctor => write!(f, "d{}", self.index),
            Side::Hospital => write!(f, "h{}", self.index),
        }
    }
}

/// Side sizes of a one-to-one market.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Market {
    num_doctors: usize,
    num_hospitals: usize,
}

impl Market {
    pub fn new(num_doctors: usize, num_hospitals: usize) -> Result<Self> {
        if num_doctors == 0 || num_hospitals == 0 {
            return Err(Error::InvalidMarket(format!(
                "both sides need at least one agent, got {num_doctors} doctors and {num_hospitals} hospitals"
            )));
        }
        Ok(Market {
            num_doctors,
            num_hospitals,
        })
    }

    /// `n` doctors and `n` hospitals.
    pub fn balanced(n: usize) -> Result<Self> {
        Market::new(n, n)
    }

    /// `n` doctors and `n + 1` hospitals.
    pub fn unbalanced(n: usize) -> Result<Self> {
        Market::new(n, n + 1)
    }

    pub fn num_doctors(&self) -> usize {
        self.num_doctors
    }

    pub fn num_hospitals(&self) -> usize {
        self.num_hospitals
    }

    pub fn size(&self, side: Side) -> usize {
        match side {
            Side::Doctor => self.num_doctors,
            Side::Hospital => self.num_hospitals,
        }
    }

    pub fn is_balanced(&self) -> bool {
        self.num_doctors == self.num_hospitals
    }

    /// The market with the roles of the two sides exchanged.
    pub fn swapped(&self) -> Market {
        Market {
            num_doctors: self.num_hospitals,
            num_hospitals: self.num_doctors,
        }
    }

    pub fn contains(&self, agent: AgentId) -> bool {
        agent.index < self.size(agent.side)
    }
}

/// Strict preference lists for every agent on both sides.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ProfileFile", into = "ProfileFile")]
pub struct PreferenceProfile {
    market: Market,
    doctor_lists: Vec<Vec<usize>>,
    hospital_lists: Vec<Vec<usize>>,
}

/// On-disk shape of a profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    num_doctors: usize,
    num_hospitals: usize,
    doctor_lists: Vec<Vec<usize>>,
    hospital_lists: Vec<Vec<usize>>,
}

impl TryFrom<ProfileFile> for PreferenceProfile {
    type Error = Error;

    fn try_from(file: ProfileFile) -> Result<Self> {
        let market = Market::new(file.num_doctors, file.num_hospitals)?;
        PreferenceProfile::new(market, file.doctor_lists, file.hospital_lists)
    }
}

impl From<PreferenceProfile> for ProfileFile {
    fn from(profile: PreferenceProfile) -> Self {
        ProfileFile {
            num_doctors: profile.market.num_doctors,
            num_hospitals: profile.market.num_hospitals,
            doctor_lists: profile.doctor_lists,
            hospital_lists: profile.hospital_lists,
        }
    }
}

fn validate_lists(lists: &[Vec<usize>], owners: usize, partners: usize, what: &str) -> Result<()> {
    if lists.len() != owners {
        return Err(Error::InvalidProfile(format!(
            "expected {owners} {what} lists, got {}",
            lists.len()
        )));
    }
    let mut seen = vec![usize::MAX; partners];
    for (owner, list) in lists.iter().enumerate() {
        if list.len() > partners {
            return Err(Error::InvalidProfile(format!(
                "{what} {owner} lists {} partners but only {partners} exist",
                list.len()
            )));
        }
        for &partner in list {
            if partner >= partners {
                return Err(Error::InvalidProfile(format!(
                    "{what} {owner} lists partner {partner}, out of range 0..{partners}"
                )));
            }
            if seen[partner] == owner {
                return Err(Error::InvalidProfile(format!(
                    "{what} {owner} lists partner {partner} twice"
                )));
            }
            seen[partner] = owner;
        }
    }
    Ok(())
}

impl PreferenceProfile {
    /// Builds a profile, checking that every list is a duplicate-free
    /// sequence of in-range indices.
    pub fn new(
        market: Market,
        doctor_lists: Vec<Vec<usize>>,
        hospital_lists: Vec<Vec<usize>>,
    ) -> Result<Self> {
        validate_lists(
            &doctor_lists,
            market.num_doctors,
            market.num_hospitals,
            "doctor",
        )?;
        validate_lists(
            &hospital_lists,
            market.num_hospitals,
            market.num_doctors,
            "hospital",
        )?;
        Ok(PreferenceProfile {
            market,
            doctor_lists,
            hospital_lists,
        })
    }

    pub fn market(&self) -> Market {
        self.market
    }

    pub fn doctor_lists(&self) -> &[Vec<usize>] {
        &self.doctor_lists
    }

    pub fn hospital_lists(&self) -> &[Vec<usize>] {
        &self.hospital_lists
    }

    pub fn lists(&self, side: Side) -> &[Vec<usize>] {
        match side {
            Side::Doctor => &self.doctor_lists,
            Side::Hospital => &self.hospital_lists,
        }
    }

    /// Preference list of `agent`, most preferred first.
    ///
    /// Panics if `agent` is outside the market.
    pub fn list(&self, agent: AgentId) -> &[usize] {
        &self.lists(agent.side)[agent.index]
    }

    /// True when every list ranks the whole other side.
    pub fn is_complete(&self) -> bool {
        self.doctor_lists
            .iter()
            .all(|l| l.len() == self.market.num_hospitals)
            && self
                .hospital_lists
                .iter()
                .all(|l| l.len() == self.market.num_doctors)
    }

    /// The same preferences with doctors and hospitals exchanged, so that a
    /// doctor-proposing run on the result is a hospital-proposing run on `self`.
    pub fn swapped(&self) -> PreferenceProfile {
        PreferenceProfile {
            market: self.market.swapped(),
            doctor_lists: self.hospital_lists.clone(),
            hospital_lists: self.doctor_lists.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Draws a profile in which every list is an independent uniform permutation
/// of the other side.
///
/// All lists come from one ChaCha8 stream seeded with `seed`: doctor lists
/// first in index order, then hospital lists.
pub fn generate_uniform_profile(market: Market, seed: u64) -> PreferenceProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_uniform_profile_with(market, &mut rng)
}

pub(crate) fn generate_uniform_profile_with<R: rand::Rng>(
    market: Market,
    rng: &mut R,
) -> PreferenceProfile {
    let mut shuffled = |owners: usize, partners: usize| -> Vec<Vec<usize>> {
        (0..owners)
            .map(|_| {
                let mut list: Vec<usize> = (0..partners).collect();
                list.shuffle(rng);
                list
            })
            .collect()
    };
    let doctor_lists = shuffled(market.num_doctors, market.num_hospitals);
    let hospital_lists = shuffled(market.num_hospitals, market.num_doctors);
    PreferenceProfile {
        market,
        doctor_lists,
        hospital_lists,
    }
}

/// Returns a copy of `profile` in which `hospital` keeps only its top `keep`
/// doctors; everyone below becomes unacceptable to it.
pub fn truncate_hospital_list(
    profile: &PreferenceProfile,
    hospital: usize,
    keep: usize,
) -> Result<PreferenceProfile> {
    let list = profile.hospital_lists.get(hospital).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "hospital {hospital} out of range 0..{}",
            profile.market.num_hospitals
        ))
    })?;
    if keep > list.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot keep {keep} entries of hospital {hospital}'s list of length {}",
            list.len()
        )));
    }
    let mut truncated = profile.clone();
    truncated.hospital_lists[hospital].truncate(keep);
    Ok(truncated)
}

/// A one-to-one matching, stored from both sides.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matching {
    doctor_match: Vec<Option<usize>>,
    hospital_match: Vec<Option<usize>>,
}

impl Matching {
    pub fn empty(market: Market) -> Self {
        Matching {
            doctor_match: vec![None; market.num_doctors],
            hospital_match: vec![None; market.num_hospitals],
        }
    }

    /// Builds a matching from `(doctor, hospital)` pairs.
    pub fn from_pairs<I>(market: Market, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut matching = Matching::empty(market);
        for (d, h) in pairs {
            if d >= market.num_doctors || h >= market.num_hospitals {
                return Err(Error::Inconsistent(format!(
                    "pair (d{d}, h{h}) out of range for a {}x{} market",
                    market.num_doctors, market.num_hospitals
                )));
            }
            if matching.doctor_match[d].is_some() || matching.hospital_match[h].is_some() {
                return Err(Error::Inconsistent(format!(
                    "pair (d{d}, h{h}) reuses an already matched agent"
                )));
            }
            matching.doctor_match[d] = Some(h);
            matching.hospital_match[h] = Some(d);
        }
        Ok(matching)
    }

    /// Builds a matching from the doctor-side assignment alone.
    pub fn from_doctor_assignment(market: Market, doctor_match: &[Option<usize>]) -> Result<Self> {
        if doctor_match.len() != market.num_doctors {
            return Err(Error::Inconsistent(format!(
                "assignment covers {} doctors, market has {}",
                doctor_match.len(),
                market.num_doctors
            )));
        }
        Matching::from_pairs(
            market,
            doctor_match
                .iter()
                .enumerate()
                .filter_map(|(d, h)| h.map(|h| (d, h))),
        )
    }

    pub fn market(&self) -> Market {
        Market {
            num_doctors: self.doctor_match.len(),
            num_hospitals: self.hospital_match.len(),
        }
    }

    pub fn doctor_match(&self) -> &[Option<usize>] {
        &self.doctor_match
    }

    pub fn hospital_match(&self) -> &[Option<usize>] {
        &self.hospital_match
    }

    pub fn partner(&self, agent: AgentId) -> Option<usize> {
        match agent.side {
            Side::Doctor => self.doctor_match.get(agent.index).copied().flatten(),
            Side::Hospital => self.hospital_match.get(agent.index).copied().flatten(),
        }
    }

    pub fn is_matched(&self, agent: AgentId) -> bool {
        self.partner(agent).is_some()
    }

    /// Matched pairs `(doctor, hospital)` in doctor order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.doctor_match
            .iter()
            .enumerate()
            .filter_map(|(d, h)| h.map(|h| (d, h)))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.doctor_match.iter().filter(|h| h.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every agent without a partner, doctors first.
    pub fn unmatched_agents(&self) -> Vec<AgentId> {
        let doctors = self
            .doctor_match
            .iter()
            .enumerate()
            .filter(|(_, h)| h.is_none())
            .map(|(d, _)| AgentId::doctor(d));
        let hospitals = self
            .hospital_match
            .iter()
            .enumerate()
            .filter(|(_, d)| d.is_none())
            .map(|(h, _)| AgentId::hospital(h));
        doctors.chain(hospitals).collect()
    }

    /// The same matching with the two sides' roles exchanged.
    pub fn swapped(&self) -> Matching {
        Matching {
            doctor_match: self.hospital_match.clone(),
            hospital_match: self.doctor_match.clone(),
        }
    }

    /// Checks that both views describe the same set of pairs.
    pub fn is_consistent(&self) -> bool {
        let forward = self.doctor_match.iter().enumerate().all(|(d, h)| match h {
            Some(h) => self.hospital_match.get(*h).copied().flatten() == Some(d),
            None => true,
        });
        let backward = self.hospital_match.iter().enumerate().all(|(h, d)| match d {
            Some(d) => self.doctor_match.get(*d).copied().flatten() == Some(h),
            None => true,
        });
        forward && backward
    }

    pub(crate) fn from_raw(doctor_match: Vec<Option<usize>>, hospital_match: Vec<Option<usize>>) -> Self {
        let matching = Matching {
            doctor_match,
            hospital_match,
        };
        debug_assert!(matching.is_consistent());
        matching
    }
}

/// 1-based position on a preference list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Rank(usize);

impl Rank {
    pub fn new(value: usize) -> Result<Self> {
        if value == 0 {
            return Err(Error::InvalidArgument("ranks start at 1".into()));
        }
        Ok(Rank(value))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for Rank {
    type Error = Error;

    fn try_from(value: usize) -> Result<Self> {
        Rank::new(value)
    }
}

impl From<Rank> for usize {
    fn from(rank: Rank) -> usize {
        rank.0
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Best rank an agent can attain over a family of matchings, or the fact
/// that it is unmatched in all of them. Serializes as the rank number or the
/// string `"unmatchable"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "StableRankRepr", try_from = "StableRankRepr")]
pub enum StableRank {
    Rank(Rank),
    Unmatchable,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum StableRankRepr {
    Rank(usize),
    Word(String),
}

impl From<StableRank> for StableRankRepr {
    fn from(rank: StableRank) -> Self {
        match rank {
            StableRank::Rank(r) => StableRankRepr::Rank(r.get()),
            StableRank::Unmatchable => StableRankRepr::Word("unmatchable".into()),
        }
    }
}

impl TryFrom<StableRankRepr> for StableRank {
    type Error = Error;

    fn try_from(repr: StableRankRepr) -> Result<Self> {
        match repr {
            StableRankRepr::Rank(r) => Rank::new(r).map(StableRank::Rank),
            StableRankRepr::Word(w) if w == "unmatchable" => Ok(StableRank::Unmatchable),
            StableRankRepr::Word(w) => Err(Error::InvalidArgument(format!("not a rank: {w:?}"))),
        }
    }
}

impl StableRank {
    pub fn rank(self) -> Option<Rank> {
        match self {
            StableRank::Rank(r) => Some(r),
            StableRank::Unmatchable => None,
        }
    }
}

impl fmt::Display for StableRank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StableRank::Rank(r) => r.fmt(f),
            StableRank::Unmatchable => f.write_str("unmatchable"),
        }
    }
}

/// Rank `agent` assigns to its partner in `matching`: one plus the number of
/// partners it strictly prefers. Unmatched agents get their list length plus one.
pub fn rank_of(profile: &PreferenceProfile, agent: AgentId, matching: &Matching) -> Result<Rank> {
    if !profile.market.contains(agent) {
        return Err(Error::InvalidArgument(format!(
            "{agent} is not part of a {}x{} market",
            profile.market.num_doctors, profile.market.num_hospitals
        )));
    }
    if matching.market() != profile.market {
        return Err(Error::Inconsistent(
            "matching and profile describe different markets".into(),
        ));
    }
    let list = &profile.lists(agent.side)[agent.index];
    match matching.partner(agent) {
        None => Ok(Rank(list.len() + 1)),
        Some(partner) => list
            .iter()
            .position(|&p| p == partner)
            .map(|pos| Rank(pos + 1))
            .ok_or_else(|| {
                Error::Inconsistent(format!(
                    "{agent} is matched to {} which is not on its list",
                    AgentId {
                        side: agent.side.other(),
                        index: partner
                    }
                ))
            }),
    }
}

/// Ranks of every agent on `side`, in index order.
pub fn side_ranks(profile: &PreferenceProfile, side: Side, matching: &Matching) -> Result<Vec<Rank>> {
    (0..profile.market.size(side))
        .map(|index| rank_of(profile, AgentId { side, index }, matching))
        .collect()
}
