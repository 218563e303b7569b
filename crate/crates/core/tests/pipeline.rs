use irsa_core::harness::{run_point_multi, tally_frame};
use irsa_core::{
    aggregate, generate_frame, plr_estimate, sic_decode, DegreeDistribution, ScenarioConfig,
    SimOptions,
};

fn scenario(k: usize) -> ScenarioConfig {
    let dist = DegreeDistribution::parse("0.5465x^2 + 0.1623x^3 + 0.2912x^8").unwrap();
    ScenarioConfig::new(dist, 200, 0.8, 0.1, k)
        .with_seed(42)
        .with_frames(200)
}

#[test]
fn manual_pipeline_matches_harness_tallies() {
    let cfg = scenario(3);
    let mut outcomes = Vec::new();
    for f in 0..cfg.n_frames as u64 {
        let frame = generate_frame(&cfg, f).unwrap();
        let sets: Vec<_> = (0..3)
            .map(|j| sic_decode(&frame, j, cfg.max_sic_iters))
            .collect();
        let outcome = aggregate(sets);
        let tally = tally_frame(&cfg, f);
        assert_eq!(tally.users as usize, outcome.n_users);
        assert_eq!(tally.decoded_by_k[2] as usize, outcome.union_count);
        outcomes.push(outcome);
    }
    let est = plr_estimate(&outcomes).unwrap();
    let rec = &run_point_multi(&cfg, &[3], &SimOptions::default()).unwrap()[0];
    assert_eq!(est.plr, rec.plr);
    assert_eq!(est.ci_low, rec.plr_ci_low);
}

#[test]
fn union_never_loses_a_satellite_decode() {
    let cfg = scenario(4);
    for f in 0..50 {
        let frame = generate_frame(&cfg, f).unwrap();
        let sets: Vec<_> = (0..4).map(|j| sic_decode(&frame, j, 100)).collect();
        let best = sets.iter().map(|s| s.len()).max().unwrap();
        let total: usize = sets.iter().map(|s| s.len()).sum();
        let outcome = aggregate(sets);
        assert!(outcome.union_count >= best);
        assert!(outcome.union_count <= total.min(outcome.n_users));
    }
}

#[test]
fn more_satellites_never_hurt() {
    let cfg = scenario(4);
    let recs = run_point_multi(&cfg, &[1, 2, 3, 4], &SimOptions::default()).unwrap();
    for w in recs.windows(2) {
        assert!(w[1].users_decoded >= w[0].users_decoded);
        assert_eq!(w[1].users_total, w[0].users_total);
    }
}
