//! Small success-rate sweep over the number of objects and the noise level.
//! Writes the CSV to stdout and an SVG heat map to the temp directory.

use matchlift::bench::{heatmap_svg, run_sweep, to_csv, Axis, FixedParams, Param, SweepSpec};

fn main() -> matchlift::Result<()> {
    let spec = SweepSpec {
        axis1: Axis {
            param: Param::N,
            values: vec![6.0, 12.0],
        },
        axis2: Axis {
            param: Param::PFalse,
            values: vec![0.0, 0.2, 0.4],
        },
        fixed: FixedParams {
            m: 4,
            n: 6,
            p_set: 0.8,
            p_obs: 1.0,
            p_true: 1.0,
        },
        trials: 4,
        base_seed: 7,
        estimate_m: false,
        lambda: None,
        trial_timeout: Some(30.0),
        admm: Default::default(),
    };
    let result = run_sweep(&spec)?;
    print!("{}", to_csv(&result, false));
    let path = std::env::temp_dir().join("matchlift-phase.svg");
    matchlift::io::write_file(&path, &heatmap_svg(&result))?;
    println!("heat map: {}", path.display());
    Ok(())
}
