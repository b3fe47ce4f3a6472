//! Runs the ADMM solver on a noisy instance and prints its convergence.

use matchlift::admm::{admm_solve, default_lambda, kkt_report, AdmmOptions};
use matchlift::synth::{generate, ModelParams};

fn main() -> matchlift::Result<()> {
    let inst = generate(&ModelParams {
        m: 6,
        n: 12,
        p_set: 0.8,
        p_obs: 0.8,
        p_true: 0.7,
        seed: 4,
    })?;
    let lambda = default_lambda(&inst.graph);
    let report = admm_solve(&inst.x_in, &inst.graph, 6, lambda, &AdmmOptions::default())?;
    for rec in report.trace.iter().step_by(10) {
        println!(
            "iter {:4}  feas {:.2e}  neg {:.2e}  change {:.2e}",
            rec.iteration, rec.feasibility, rec.negativity, rec.change
        );
    }
    println!("{}", serde_json::to_string_pretty(&report.summary()).unwrap());
    let kkt = kkt_report(&report, &inst.x_in, &inst.graph, lambda)?;
    println!("worst KKT violation {:.2e}", kkt.worst_violation);
    Ok(())
}
