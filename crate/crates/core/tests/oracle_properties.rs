//! Classical stable-matching facts checked against brute-force enumeration.

use proptest::prelude::*;

use stable_lab::da::{find_blocking_pairs, run_dpda, run_hpda, OrderPolicy};
use stable_lab::experiments::trial_seed;
use stable_lab::market::{generate_uniform_profile, rank_of, AgentId, Market, StableRank};
use stable_lab::oracle::{best_stable_rank, enumerate_stable_matchings, verify_rural_hospital, worst_stable_rank};
use stable_lab::truncation::{hospital_optimal_rank_via_truncation, matched_under_truncation, SearchStrategy};

const SEED: u64 = 77;

#[test]
fn deferred_acceptance_is_stable_on_random_markets() {
    for i in 0..1000u64 {
        let n = 1 + (i as usize % 50);
        let m = n + (i as usize / 50) % 2;
        let p = generate_uniform_profile(Market::new(n, m).unwrap(), trial_seed(SEED, i));
        assert!(find_blocking_pairs(&p, &run_dpda(&p, OrderPolicy::Queue).matching).is_empty(), "{i}");
        assert!(find_blocking_pairs(&p, &run_hpda(&p, OrderPolicy::Queue).matching).is_empty(), "{i}");
    }
}

fn small_markets() -> impl Iterator<Item = (Market, u64)> {
    (0..1000u64).map(|i| {
        let n = 1 + (i as usize % 7);
        let m = n + (i as usize / 7) % 2;
        (Market::new(n, m).unwrap(), trial_seed(SEED ^ 0xabc, i))
    })
}

#[test]
fn side_optimality_and_rural_hospitals() {
    for (market, seed) in small_markets() {
        let p = generate_uniform_profile(market, seed);
        let set = enumerate_stable_matchings(&p).unwrap();
        let dpda = run_dpda(&p, OrderPolicy::Queue).matching;
        let hpda = run_hpda(&p, OrderPolicy::Queue).matching;
        assert!(set.contains(&dpda) && set.contains(&hpda));
        assert!(verify_rural_hospital(&set).unwrap());
        assert_eq!(
            set.unmatched_signature().unwrap(),
            dpda.unmatched_agents().into_iter().collect()
        );
        if market.num_hospitals() == market.num_doctors() + 1 {
            assert!(set.matchings.iter().all(|m| m.unmatched_agents().len() == 1));
        }
        for mu in &set.matchings {
            for d in 0..market.num_doctors() {
                let a = AgentId::doctor(d);
                assert!(rank_of(&p, a, &dpda).unwrap() <= rank_of(&p, a, mu).unwrap());
                assert!(rank_of(&p, a, &hpda).unwrap() >= rank_of(&p, a, mu).unwrap());
            }
            for h in 0..market.num_hospitals() {
                let a = AgentId::hospital(h);
                assert!(rank_of(&p, a, &hpda).unwrap() <= rank_of(&p, a, mu).unwrap());
            }
        }
        for h in 0..market.num_hospitals() {
            let a = AgentId::hospital(h);
            assert_eq!(worst_stable_rank(&set, &p, a).unwrap(), rank_of(&p, a, &dpda).unwrap());
        }
    }
}

#[test]
fn truncation_agrees_with_oracle_and_hospital_proposing_da() {
    for (market, seed) in small_markets() {
        let p = generate_uniform_profile(market, seed);
        let set = enumerate_stable_matchings(&p).unwrap();
        let hpda = run_hpda(&p, OrderPolicy::Queue).matching;
        for h in 0..market.num_hospitals() {
            let agent = AgentId::hospital(h);
            let linear = hospital_optimal_rank_via_truncation(&p, h, SearchStrategy::Linear).unwrap();
            let binary = hospital_optimal_rank_via_truncation(&p, h, SearchStrategy::Binary).unwrap();
            assert_eq!(linear.optimal_rank, binary.optimal_rank);
            assert_eq!(linear.optimal_rank, best_stable_rank(&set, &p, agent).unwrap());
            assert!(linear.is_consistent() && binary.is_consistent());
            match linear.optimal_rank {
                StableRank::Rank(r) => assert_eq!(r, rank_of(&p, agent, &hpda).unwrap()),
                StableRank::Unmatchable => assert!(!hpda.is_matched(agent)),
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matched_under_truncation_is_monotone(seed in any::<u64>(), n in 1usize..12, extra in 0usize..2, h in 0usize..13) {
        let market = Market::new(n, n + extra).unwrap();
        let h = h % market.num_hospitals();
        let p = generate_uniform_profile(market, seed);
        let probes: Vec<bool> = (0..=n).map(|k| matched_under_truncation(&p, h, k).unwrap()).collect();
        prop_assert!(!probes[0]);
        prop_assert!(probes.windows(2).all(|w| !w[0] || w[1]));
    }

    #[test]
    fn order_policies_agree_on_truncated_profiles(seed in any::<u64>(), n in 1usize..20, keep in 0usize..20) {
        let p = generate_uniform_profile(Market::balanced(n).unwrap(), seed);
        let t = stable_lab::market::truncate_hospital_list(&p, 0, keep.min(n)).unwrap();
        let q = run_dpda(&t, OrderPolicy::Queue).matching;
        prop_assert_eq!(&q, &run_dpda(&t, OrderPolicy::Stack).matching);
        prop_assert_eq!(&q, &run_dpda(&t, OrderPolicy::SeededRandom(seed)).matching);
        prop_assert!(find_blocking_pairs(&t, &q).is_empty());
    }
}
