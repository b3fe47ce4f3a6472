//! Samples a noisy map collection and prints a few generator statistics.

use matchlift::synth::{empirical_stats, generate, ModelParams};

fn main() -> matchlift::Result<()> {
    let params = ModelParams {
        m: 10,
        n: 20,
        p_set: 0.6,
        p_obs: 0.5,
        p_true: 0.7,
        seed: 1,
    };
    let inst = generate(&params)?;
    println!("objects: {:?}", inst.x_in.sizes());
    println!("observed pairs: {}", inst.graph.edge_count());
    println!("corrupted pairs: {}", inst.corrupted.len());
    println!("true correspondences: {}", inst.x_gt.correspondences().len());

    let stats = empirical_stats(&params, 20)?;
    println!(
        "membership rate {:.3}, observation rate {:.3}, corruption rate {:.3}",
        stats.membership.rate(),
        stats.observation.rate(),
        stats.corruption.rate()
    );
    Ok(())
}
