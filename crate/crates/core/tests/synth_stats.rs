use matchlift::mapcore::PartialMapBlock;
use matchlift::synth::{empirical_stats, generate, ModelParams};

fn within(rate: f64, p: f64, draws: u64, sigmas: f64) -> bool {
    let sd = (p * (1.0 - p) / draws as f64).sqrt();
    (rate - p).abs() <= sigmas * sd.max(1e-12)
}

#[test]
fn membership_and_observation_rates() {
    let params = ModelParams {
        m: 16,
        n: 100,
        p_set: 0.35,
        p_obs: 0.45,
        p_true: 0.7,
        seed: 5,
    };
    let stats = empirical_stats(&params, 1).unwrap();
    assert_eq!(stats.membership.total, 16 * 100);
    assert!(within(stats.membership.rate(), 0.35, stats.membership.total, 4.0), "{:?}", stats.membership);
    assert_eq!(stats.observation.total, 100 * 99 / 2);
    assert!(within(stats.observation.rate(), 0.45, stats.observation.total, 4.0), "{:?}", stats.observation);
    assert!(within(stats.corruption.rate(), 0.3, stats.corruption.total, 4.0), "{:?}", stats.corruption);
}

#[test]
fn corrupted_maps_are_uniform_on_the_universe() {
    let params = ModelParams {
        m: 4,
        n: 2,
        p_set: 1.0,
        p_obs: 1.0,
        p_true: 0.0,
        seed: 77,
    };
    let stats = empirical_stats(&params, 10_000).unwrap();
    let p = 0.25;
    // pooled mean over all 16 entries
    let hits: u64 = stats.corrupted_entries.iter().map(|f| f.hits).sum();
    let total: u64 = stats.corrupted_entries.iter().map(|f| f.total).sum();
    let pooled = hits as f64 / total as f64;
    // each row of a random permutation sums to one, so the pooled rate is exact
    assert!((pooled - p).abs() < 1e-12);
    for f in &stats.corrupted_entries {
        assert_eq!(f.total, 10_000);
        assert!(within(f.rate(), p, f.total, 4.0), "{f:?}");
    }
    assert!(stats.max_entry_deviation(4) <= 4.0 * (p * (1.0 - p) / 10_000.0f64).sqrt());
}

#[test]
fn clean_maps_follow_the_truth() {
    let inst = generate(&ModelParams {
        m: 5,
        n: 8,
        p_set: 0.6,
        p_obs: 0.5,
        p_true: 0.6,
        seed: 3,
    })
    .unwrap();
    for &(i, j) in inst.graph.edges() {
        let same = inst.x_in.block(i, j) == inst.x_gt.block(i, j);
        assert!(same || inst.corrupted.contains(&(i, j)));
    }
    for i in 0..8 {
        for j in i + 1..8 {
            if !inst.graph.contains(i, j) {
                assert_eq!(inst.x_in.block(i, j), PartialMapBlock::zeros(inst.x_in.sizes()[i], inst.x_in.sizes()[j]));
            }
        }
    }
}

#[test]
fn generation_is_reproducible_and_validated() {
    let p = ModelParams {
        m: 4,
        n: 6,
        p_set: 0.5,
        p_obs: 0.5,
        p_true: 0.5,
        seed: 42,
    };
    assert_eq!(generate(&p).unwrap().x_in, generate(&p).unwrap().x_in);
    assert!(generate(&ModelParams { p_set: 1.5, ..p }).is_err());
    assert!(generate(&ModelParams { m: 0, ..p }).is_err());
    assert!(generate(&ModelParams { n: 0, ..p }).is_err());
}
