//! Estimates the universe size from the spectrum of the trimmed input.

use matchlift::spectral::estimate_m;
use matchlift::synth::{generate, ModelParams};

fn main() -> matchlift::Result<()> {
    for p_true in [1.0, 0.8, 0.6] {
        let inst = generate(&ModelParams {
            m: 8,
            n: 30,
            p_set: 0.8,
            p_obs: 0.6,
            p_true,
            seed: 3,
        })?;
        let est = estimate_m(&inst.x_in, &inst.graph, 3)?;
        let top: Vec<String> = est.spectrum.iter().take(10).map(|w| format!("{w:.2}")).collect();
        println!(
            "p_true {p_true}: m_hat {} (true 8), d_min {}, trimmed edges {}, top eigenvalues [{}]",
            est.m_hat,
            est.trim.d_min,
            est.trim.zeroed_edges.len(),
            top.join(", ")
        );
    }
    Ok(())
}
