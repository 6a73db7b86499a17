//! Deferred acceptance and stability checks.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{AgentId, Matching, PreferenceProfile, Side};

/// Which unmatched proposer moves next. The output matching does not depend
/// on it; it exists so that independence can be tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OrderPolicy {
    /// First in, first out. A rejected proposer goes to the back.
    #[default]
    Queue,
    /// Last in, first out. A rejected proposer keeps proposing.
    Stack,
    /// Uniformly random unmatched proposer at every step.
    SeededRandom(u64),
}

impl std::str::FromStr for OrderPolicy {
    type Err = Error;

    /// `queue`, `stack` or `random:SEED`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "queue" => Ok(OrderPolicy::Queue),
            "stack" => Ok(OrderPolicy::Stack),
            _ => s
                .strip_prefix("random:")
                .and_then(|seed| seed.parse().ok())
                .map(OrderPolicy::SeededRandom)
                .ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "unknown order {s:?}, expected queue, stack or random:SEED"
                    ))
                }),
        }
    }
}

impl std::fmt::Display for OrderPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OrderPolicy::Queue => f.write_str("queue"),
            OrderPolicy::Stack => f.write_str("stack"),
            OrderPolicy::SeededRandom(seed) => write!(f, "random:{seed}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub proposer: AgentId,
    pub receiver: AgentId,
    pub accepted: bool,
}

/// Record of one deferred-acceptance run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DaTrace {
    pub proposing_side: Side,
    pub matching: Matching,
    pub proposals: Vec<Proposal>,
    /// Indexed by proposer on `proposing_side`.
    pub proposals_per_proposer: Vec<usize>,
    pub total_proposals: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockingPair {
    pub doctor: usize,
    pub hospital: usize,
}

const UNACCEPTABLE: u32 = u32::MAX;

/// `table[owner * partners + partner]` is the 0-based position of `partner`
/// on `owner`'s list, or `UNACCEPTABLE`.
pub(crate) fn position_table(lists: &[Vec<usize>], partners: usize) -> Vec<u32> {
    let mut table = vec![UNACCEPTABLE; lists.len() * partners];
    for (owner, list) in lists.iter().enumerate() {
        let row = &mut table[owner * partners..(owner + 1) * partners];
        for (pos, &partner) in list.iter().enumerate() {
            row[partner] = pos as u32;
        }
    }
    table
}

enum Pool {
    Queue(VecDeque<usize>),
    Stack(Vec<usize>),
    Random(Vec<usize>, ChaCha8Rng),
}

impl Pool {
    fn new(policy: OrderPolicy, proposers: usize) -> Pool {
        match policy {
            OrderPolicy::Queue => Pool::Queue((0..proposers).collect()),
            // reversed so that proposer 0 moves first
            OrderPolicy::Stack => Pool::Stack((0..proposers).rev().collect()),
            OrderPolicy::SeededRandom(seed) => {
                Pool::Random((0..proposers).collect(), ChaCha8Rng::seed_from_u64(seed))
            }
        }
    }

    fn take(&mut self) -> Option<usize> {
        match self {
            Pool::Queue(q) => q.pop_front(),
            Pool::Stack(s) => s.pop(),
            Pool::Random(v, rng) => {
                if v.is_empty() {
                    None
                } else {
                    let i = rng.gen_range(0..v.len());
                    Some(v.swap_remove(i))
                }
            }
        }
    }

    fn put(&mut self, proposer: usize) {
        match self {
            Pool::Queue(q) => q.push_back(proposer),
            Pool::Stack(s) => s.push(proposer),
            Pool::Random(v, _) => v.push(proposer),
        }
    }
}

/// Proposer-side deferred acceptance on raw lists. Returns the proposer-side
/// assignment, the receiver-side assignment, the proposal log as
/// `(proposer, receiver, accepted)` and per-proposer counts.
fn deferred_acceptance(
    proposer_lists: &[Vec<usize>],
    receiver_lists: &[Vec<usize>],
    policy: OrderPolicy,
) -> (Vec<Option<usize>>, Vec<Option<usize>>, Vec<(usize, usize, bool)>, Vec<usize>) {
    let proposers = proposer_lists.len();
    let receivers = receiver_lists.len();
    let receiver_rank = position_table(receiver_lists, proposers);

    let mut next = vec![0usize; proposers];
    let mut proposer_match = vec![None; proposers];
    let mut receiver_match: Vec<Option<usize>> = vec![None; receivers];
    let mut log = Vec::new();
    let mut pool = Pool::new(policy, proposers);

    while let Some(p) = pool.take() {
        let list = &proposer_lists[p];
        // exhausted proposers leave the pool for good
        let Some(&r) = list.get(next[p]) else {
            continue;
        };
        next[p] += 1;
        let row = &receiver_rank[r * proposers..(r + 1) * proposers];
        let accepted = row[p] != UNACCEPTABLE
            && match receiver_match[r] {
                None => true,
                Some(incumbent) => row[p] < row[incumbent],
            };
        log.push((p, r, accepted));
        if accepted {
            if let Some(incumbent) = receiver_match[r].replace(p) {
                proposer_match[incumbent] = None;
                pool.put(incumbent);
            }
            proposer_match[p] = Some(r);
        } else {
            pool.put(p);
        }
    }
    (proposer_match, receiver_match, log, next)
}

fn run(profile: &PreferenceProfile, side: Side, policy: OrderPolicy) -> DaTrace {
    let (proposer_lists, receiver_lists) = match side {
        Side::Doctor => (profile.doctor_lists(), profile.hospital_lists()),
        Side::Hospital => (profile.hospital_lists(), profile.doctor_lists()),
    };
    let (proposer_match, receiver_match, log, counts) =
        deferred_acceptance(proposer_lists, receiver_lists, policy);
    let matching = match side {
        Side::Doctor => Matching::from_raw(proposer_match, receiver_match),
        Side::Hospital => Matching::from_raw(receiver_match, proposer_match),
    };
    let proposals: Vec<Proposal> = log
        .into_iter()
        .map(|(p, r, accepted)| Proposal {
            proposer: AgentId { side, index: p },
            receiver: AgentId {
                side: side.other(),
                index: r,
            },
            accepted,
        })
        .collect();
    DaTrace {
        proposing_side: side,
        matching,
        total_proposals: proposals.len(),
        proposals,
        proposals_per_proposer: counts,
    }
}

/// Doctor-proposing deferred acceptance. Produces the doctor-optimal stable
/// matching whatever the `policy`.
pub fn run_dpda(profile: &PreferenceProfile, policy: OrderPolicy) -> DaTrace {
    run(profile, Side::Doctor, policy)
}

/// Hospital-proposing deferred acceptance; the hospital-optimal stable matching.
pub fn run_hpda(profile: &PreferenceProfile, policy: OrderPolicy) -> DaTrace {
    run(profile, Side::Hospital, policy)
}

/// Every pair that blocks `matching` under `profile`, in (doctor, hospital)
/// order. A partner that is missing from an agent's list counts as worse than
/// every acceptable one.
pub fn find_blocking_pairs(profile: &PreferenceProfile, matching: &Matching) -> Vec<BlockingPair> {
    let market = profile.market();
    let (n, m) = (market.num_doctors(), market.num_hospitals());
    let doctor_pos = position_table(profile.doctor_lists(), m);
    let hospital_pos = position_table(profile.hospital_lists(), n);
    let current = |table: &[u32], width: usize, owner: usize, partner: Option<usize>| match partner {
        Some(p) => table[owner * width + p],
        None => UNACCEPTABLE,
    };

    let mut blocking = Vec::new();
    for d in 0..n {
        let mine = current(&doctor_pos, m, d, matching.doctor_match()[d]);
        for h in 0..m {
            if matching.doctor_match()[d] == Some(h) {
                continue;
            }
            let d_likes = doctor_pos[d * m + h];
            if d_likes == UNACCEPTABLE || d_likes >= mine {
                continue;
            }
            let h_likes = hospital_pos[h * n + d];
            let theirs = current(&hospital_pos, n, h, matching.hospital_match()[h]);
            if h_likes != UNACCEPTABLE && h_likes < theirs {
                blocking.push(BlockingPair {
                    doctor: d,
                    hospital: h,
                });
            }
        }
    }
    blocking
}

pub fn is_stable(profile: &PreferenceProfile, matching: &Matching) -> bool {
    find_blocking_pairs(profile, matching).is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{e1, one_by_two};
    use crate::market::{generate_uniform_profile, rank_of, Market};
    use proptest::prelude::*;

    #[test]
    fn dpda_on_reference_instance() {
        let p = e1();
        let trace = run_dpda(&p, OrderPolicy::Queue);
        let mu_d = Matching::from_pairs(p.market(), [(0, 0), (1, 1)]).unwrap();
        assert_eq!(trace.matching, mu_d);
        assert_eq!(trace.total_proposals, 2);
        assert_eq!(trace.proposals_per_proposer, vec![1, 1]);
        for d in 0..2 {
            assert_eq!(rank_of(&p, AgentId::doctor(d), &trace.matching).unwrap().get(), 1);
        }
        assert_eq!(run_dpda(&p, OrderPolicy::Stack).matching, mu_d);
    }

    #[test]
    fn hpda_on_reference_instance() {
        let p = e1();
        let trace = run_hpda(&p, OrderPolicy::Queue);
        let mu_h = Matching::from_pairs(p.market(), [(0, 1), (1, 0)]).unwrap();
        assert_eq!(trace.matching, mu_h);
        assert_eq!(trace.proposing_side, Side::Hospital);
        for h in 0..2 {
            assert_eq!(rank_of(&p, AgentId::hospital(h), &trace.matching).unwrap().get(), 1);
        }
        assert_ne!(trace.matching, run_dpda(&p, OrderPolicy::Queue).matching);
        assert!(is_stable(&p, &trace.matching));
    }

    #[test]
    fn single_pair_markets() {
        let p = generate_uniform_profile(Market::balanced(1).unwrap(), 3);
        let mu = Matching::from_pairs(p.market(), [(0, 0)]).unwrap();
        assert_eq!(run_hpda(&p, OrderPolicy::Queue).matching, mu);
        assert_eq!(run_dpda(&p, OrderPolicy::Queue).matching, mu);

        let q = one_by_two();
        let trace = run_dpda(&q, OrderPolicy::Queue);
        assert_eq!(trace.matching, Matching::from_pairs(q.market(), [(0, 0)]).unwrap());
        assert_eq!(trace.total_proposals, 1);
        assert!(!trace.matching.is_matched(AgentId::hospital(1)));
    }

    #[test]
    fn blocking_pairs_examples() {
        let p = e1();
        let mu_d = Matching::from_pairs(p.market(), [(0, 0), (1, 1)]).unwrap();
        let mu_h = Matching::from_pairs(p.market(), [(0, 1), (1, 0)]).unwrap();
        assert!(find_blocking_pairs(&p, &mu_d).is_empty());
        assert!(find_blocking_pairs(&p, &mu_h).is_empty());
        let blocking = find_blocking_pairs(&p, &Matching::empty(p.market()));
        assert!(blocking.contains(&BlockingPair { doctor: 0, hospital: 0 }));
        assert_eq!(blocking.len(), 4);
    }

    #[test]
    fn truncated_hospital_rejects_unlisted_doctor() {
        let p = crate::market::truncate_hospital_list(&e1(), 0, 0).unwrap();
        let trace = run_dpda(&p, OrderPolicy::Queue);
        assert!(!trace.matching.is_matched(AgentId::hospital(0)));
        assert!(trace
            .proposals
            .iter()
            .filter(|pr| pr.receiver == AgentId::hospital(0))
            .all(|pr| !pr.accepted));
        assert!(is_stable(&p, &trace.matching));
    }

    #[test]
    fn order_policy_parsing() {
        assert_eq!("queue".parse::<OrderPolicy>().unwrap(), OrderPolicy::Queue);
        assert_eq!("stack".parse::<OrderPolicy>().unwrap(), OrderPolicy::Stack);
        assert_eq!("random:42".parse::<OrderPolicy>().unwrap(), OrderPolicy::SeededRandom(42));
        for bad in ["", "Queue", "random", "random:", "random:-1", "random:x", "lifo"] {
            assert!(bad.parse::<OrderPolicy>().is_err(), "{bad}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn order_policy_display_round_trip(seed in any::<u64>()) {
            for policy in [OrderPolicy::Queue, OrderPolicy::Stack, OrderPolicy::SeededRandom(seed)] {
                prop_assert_eq!(policy.to_string().parse::<OrderPolicy>().unwrap(), policy);
            }
        }

        #[test]
        fn trace_accounting(seed in any::<u64>(), n in 1usize..40, extra in 0usize..2) {
            let p = generate_uniform_profile(Market::new(n, n + extra).unwrap(), seed);
            let t = run_dpda(&p, OrderPolicy::SeededRandom(seed));
            prop_assert_eq!(t.total_proposals, t.proposals.len());
            prop_assert_eq!(t.total_proposals, t.proposals_per_proposer.iter().sum::<usize>());
            for d in 0..n {
                if t.matching.is_matched(AgentId::doctor(d)) {
                    prop_assert_eq!(t.proposals_per_proposer[d], rank_of(&p, AgentId::doctor(d), &t.matching).unwrap().get());
                }
            }
        }

        #[test]
        fn order_policies_agree(seed in any::<u64>(), n in 1usize..=30, extra in 0usize..2) {
            let p = generate_uniform_profile(Market::new(n, n + extra).unwrap(), seed);
            let q = run_dpda(&p, OrderPolicy::Queue);
            let s = run_dpda(&p, OrderPolicy::Stack);
            let r = run_dpda(&p, OrderPolicy::SeededRandom(seed ^ 0x5eed));
            prop_assert_eq!(&q.matching, &s.matching);
            prop_assert_eq!(&q.matching, &r.matching);
            // the set of proposals is order independent too
            prop_assert_eq!(q.total_proposals, s.total_proposals);
            prop_assert_eq!(q.total_proposals, r.total_proposals);
        }
    }
}
