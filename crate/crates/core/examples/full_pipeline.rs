//! Runs the whole pipeline from a config and lists the written artifacts.

use matchlift::pipeline::{run_pipeline, InstanceSource, PipelineConfig, SolverSettings};
use matchlift::synth::ModelParams;

fn main() {
    let dir = std::env::temp_dir().join("matchlift-full-pipeline");
    let config = PipelineConfig {
        source: InstanceSource::Generate(ModelParams {
            m: 6,
            n: 24,
            p_set: 0.7,
            p_obs: 0.9,
            p_true: 0.8,
            seed: 6,
        }),
        settings: SolverSettings::default(),
        seed: 6,
        output_dir: Some(dir.clone()),
    };
    match run_pipeline(&config) {
        Ok(out) => {
            println!("m = {}, iterations = {}", out.solved.m, out.solved.report.iterations);
            if let Some(m) = out.metrics {
                println!("precision {:.3} recall {:.3} exact {}", m.precision, m.recall, m.exact);
            }
            for path in &out.artifacts {
                println!("wrote {}", path.display());
            }
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
