//! Rounds a relaxed solution to consistent maps and scores it.

use matchlift::admm::{admm_solve, default_lambda, AdmmOptions};
use matchlift::mapcore::factorize_consistent;
use matchlift::rounding::{evaluate, round};
use matchlift::synth::{generate, ModelParams};

fn main() -> matchlift::Result<()> {
    let inst = generate(&ModelParams {
        m: 5,
        n: 10,
        p_set: 0.8,
        p_obs: 0.8,
        p_true: 0.8,
        seed: 5,
    })?;
    let before = evaluate(&inst.x_in, &inst.x_gt)?;
    println!("input maps:   precision {:.3} recall {:.3}", before.precision, before.recall);

    let report = admm_solve(&inst.x_in, &inst.graph, 5, default_lambda(&inst.graph), &AdmmOptions::default())?;
    let rounded = round(&report.x_hat, 5)?;
    let after = evaluate(&rounded, &inst.x_gt)?;
    println!(
        "rounded maps: precision {:.3} recall {:.3} exact {}",
        after.precision, after.recall, after.exact
    );
    println!("universe used: {}", factorize_consistent(&rounded)?.universe().m);
    Ok(())
}
