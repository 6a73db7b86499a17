use stable_lab::experiments::{
    run_balanced_experiment, run_experiment, run_unbalanced_experiment, ExperimentConfig, ExperimentKind,
};
use stable_lab::market::Market;
use stable_lab::report::{summarize, ExperimentReport};
use stable_lab::thresholds::{COMPETITION_N, COMPETITION_TRIALS, SE_SLACK};

#[test]
fn small_balanced_summary_matches_lazy_mean() {
    let report = run_balanced_experiment(&ExperimentConfig::balanced(3, 100_000, 4).unwrap()).unwrap();
    let rows = summarize(&report).unwrap();
    let total = rows.iter().find(|r| r.metric == "total_proposals").unwrap();
    assert!((total.mean - 5.5).abs() <= 0.05, "{}", total.mean);
    assert_eq!(total.baseline.as_ref().unwrap().value, 5.5);
}

#[test]
fn identical_configs_give_identical_reports() {
    for kind in [
        ExperimentKind::Balanced,
        ExperimentKind::Unbalanced,
        ExperimentKind::RejectorTail,
        ExperimentKind::CouplingCheck,
    ] {
        let market = match kind {
            ExperimentKind::Balanced | ExperimentKind::CouplingCheck => Market::balanced(12).unwrap(),
            _ => Market::unbalanced(12).unwrap(),
        };
        let target = (kind == ExperimentKind::RejectorTail).then_some(3);
        let config = ExperimentConfig::new(market, 30, 99, kind, target).unwrap();
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let other = ExperimentConfig::new(market, 30, 100, kind, target).unwrap();
        assert_ne!(run_experiment(&other).unwrap().records, a.records);
        // self-consistency on load
        ExperimentReport::from_json(&a.to_json().unwrap()).unwrap();
    }
}

#[test]
fn short_side_does_no_worse_than_balanced_proposers() {
    let balanced = run_balanced_experiment(&ExperimentConfig::balanced(COMPETITION_N, COMPETITION_TRIALS, 1).unwrap()).unwrap();
    let unbalanced =
        run_unbalanced_experiment(&ExperimentConfig::unbalanced(COMPETITION_N, COMPETITION_TRIALS, 2).unwrap()).unwrap();
    let b = balanced.aggregate("mean_doctor_rank").unwrap();
    // doctors in the hospital-optimal matching: the short side's worst case
    let u = unbalanced.aggregate("mean_doctor_rank").unwrap();
    let pooled = (b.se.powi(2) + u.se.powi(2)).sqrt();
    assert!(u.mean <= b.mean + SE_SLACK * pooled, "unbalanced {} vs balanced {}", u.mean, b.mean);
    // informal yardstick for the short side
    assert!(u.mean <= 3.0 * (COMPETITION_N as f64).ln());
    // and the long side suffers
    let h = unbalanced.aggregate("hstar_rank_hpda").unwrap();
    assert!(h.mean >= COMPETITION_N as f64 / (6.0 * (COMPETITION_N as f64).ln()));
}
