//! Monte Carlo sweeps over a two-parameter grid of the random model.
//!
//! Every cell of the grid runs `trials` independent instances through
//! [`solve_and_round`] and counts exact recoveries. The seed of a trial
//! depends only on the base seed, the two axis values and the trial index,
//! so a sub-grid reproduces the matching cells of a larger run bit for bit
//! (timings aside), independent of thread count.
//!
//! Sweep files are TOML (or JSON by extension):
//!
//! ```toml
//! trials = 10
//! base_seed = 1
//! axis1 = { param = "n", values = [20, 40, 80] }
//! axis2 = { param = "p_false", values = [0.1, 0.3, 0.5] }
//! fixed = { m = 16, n = 40, p_set = 0.6, p_obs = 0.6, p_true = 1.0 }
//! estimate_m = false     # true: estimate m per trial
//! # lambda = 0.1         # default: sqrt(|E|) / (2n) per instance
//! # trial_timeout = 60.0 # seconds per ADMM run
//! [admm]
//! max_iter = 500
//! ```

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::AdmmOptions;
use crate::error::{Error, Result};
use crate::io;
use crate::pipeline::{parse_config_text, solve_and_round, LambdaPolicy, SolverSettings, UniversePolicy};
use crate::rounding::evaluate;
use crate::seed;
use crate::synth::{generate, ModelParams};

/// Environment variable capping the worker threads of a sweep.
pub const THREADS_ENV: &str = "MATCHLIFT_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    M,
    N,
    PSet,
    PObs,
    PTrue,
    /// Sets `p_true = 1 - value`.
    PFalse,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::M => "m",
            Param::N => "n",
            Param::PSet => "p_set",
            Param::PObs => "p_obs",
            Param::PTrue => "p_true",
            Param::PFalse => "p_false",
        }
    }

    /// Model field this parameter writes to.
    fn target(self) -> Param {
        match self {
            Param::PFalse => Param::PTrue,
            p => p,
        }
    }

    fn is_count(self) -> bool {
        matches!(self, Param::M | Param::N)
    }

    fn apply(self, value: f64, params: &mut ModelParams) {
        match self {
            Param::M => params.m = value as usize,
            Param::N => params.n = value as usize,
            Param::PSet => params.p_set = value,
            Param::PObs => params.p_obs = value,
            Param::PTrue => params.p_true = value,
            Param::PFalse => params.p_true = 1.0 - value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: Param,
    pub values: Vec<f64>,
}

/// Model parameters held fixed across the grid (seed excluded).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedParams {
    pub m: usize,
    pub n: usize,
    pub p_set: f64,
    pub p_obs: f64,
    pub p_true: f64,
}

fn default_trials() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis1: Axis,
    pub axis2: Axis,
    pub fixed: FixedParams,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Estimate `m` per trial instead of using the true value.
    #[serde(default)]
    pub estimate_m: bool,
    pub lambda: Option<f64>,
    /// Per-trial ADMM wall-clock budget in seconds.
    pub trial_timeout: Option<f64>,
    #[serde(default)]
    pub admm: AdmmOptions,
}

impl SweepSpec {
    pub fn from_file(path: &Path) -> Result<Self> {
        parse_config_text(path, &io::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.axis1.param.target() == self.axis2.param.target() {
            return bad(format!(
                "axes {} and {} set the same parameter",
                self.axis1.param.name(),
                self.axis2.param.name()
            ));
        }
        for axis in [&self.axis1, &self.axis2] {
            if axis.values.is_empty() {
                return bad(format!("axis {} has no values", axis.param.name()));
            }
            for &v in &axis.values {
                let ok = if axis.param.is_count() {
                    v.fract() == 0.0 && v >= 1.0
                } else {
                    (0.0..=1.0).contains(&v)
                };
                if !ok {
                    return bad(format!("value {v} invalid for axis {}", axis.param.name()));
                }
            }
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return bad(format!("lambda = {l} must be finite and >= 0"));
            }
        }
        if let Some(t) = self.trial_timeout {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("trial_timeout = {t} must be positive"));
            }
        }
        for &v1 in &self.axis1.values {
            for &v2 in &self.axis2.values {
                self.cell_params(v1, v2, 0).validate()?;
            }
        }
        Ok(())
    }

    fn cell_params(&self, v1: f64, v2: f64, seed: u64) -> ModelParams {
        let f = self.fixed;
        let mut p = ModelParams {
            m: f.m,
            n: f.n,
            p_set: f.p_set,
            p_obs: f.p_obs,
            p_true: f.p_true,
            seed,
        };
        self.axis1.param.apply(v1, &mut p);
        self.axis2.param.apply(v2, &mut p);
        p
    }

    /// Seed of trial `t` in the cell at axis values `(v1, v2)`.
    pub fn trial_seed(&self, v1: f64, v2: f64, t: usize) -> u64 {
        let cell = seed::derive(self.base_seed, v1.to_bits(), v2.to_bits());
        seed::derive(cell, seed::TAG_SWEEP, t as u64)
    }

    fn settings(&self, m: usize) -> SolverSettings {
        let mut admm = self.admm;
        if let Some(t) = self.trial_timeout {
            admm.time_limit = Some(std::time::Duration::from_secs_f64(t));
        }
        SolverSettings {
            universe: if self.estimate_m {
                UniversePolicy::Estimate
            } else {
                UniversePolicy::Given(m)
            },
            lambda: self.lambda.map_or(LambdaPolicy::Default, LambdaPolicy::Fixed),
            r: None,
            admm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "detail")]
pub enum Outcome {
    Exact,
    Inexact,
    Timeout,
    /// Any other error, with its message.
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub outcome: Outcome,
    pub precision: f64,
    pub recall: f64,
    pub iterations: usize,
    pub seconds: f64,
}

/// Runs one generated instance through the solver and scores it.
pub fn run_trial(params: &ModelParams, settings: &SolverSettings) -> TrialRecord {
    let start = Instant::now();
    let failed = |outcome, iterations| TrialRecord {
        seed: params.seed,
        outcome,
        precision: 0.0,
        recall: 0.0,
        iterations,
        seconds: start.elapsed().as_secs_f64(),
    };
    let inst = match generate(params) {
        Ok(i) => i,
        Err(e) => return failed(Outcome::Failed(e.to_string()), 0),
    };
    let solved = match solve_and_round(&inst.x_in, &inst.graph, settings, params.seed) {
        Ok(s) => s,
        Err(e) => {
            return match e.source {
                Error::Timeout { iterations } => failed(Outcome::Timeout, iterations),
                other => failed(Outcome::Failed(format!("{}: {other}", e.stage)), 0),
            }
        }
    };
    match evaluate(&solved.rounded, &inst.x_gt) {
        Ok(m) => TrialRecord {
            seed: params.seed,
            outcome: if m.exact { Outcome::Exact } else { Outcome::Inexact },
            precision: m.precision,
            recall: m.recall,
            iterations: solved.report.iterations,
            seconds: start.elapsed().as_secs_f64(),
        },
        Err(e) => failed(Outcome::Failed(e.to_string()), solved.report.iterations),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub value1: f64,
    pub value2: f64,
    pub successes: usize,
    pub trials: usize,
    pub timeouts: usize,
    pub failures: usize,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_iterations: f64,
    pub mean_seconds: f64,
    pub records: Vec<TrialRecord>,
}

impl CellResult {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis1: Param,
    pub axis2: Param,
    /// Row-major over `axis1 x axis2`.
    pub cells: Vec<CellResult>,
    pub rows: usize,
    pub cols: usize,
}

impl SweepResult {
    pub fn cell(&self, i: usize, j: usize) -> &CellResult {
        &self.cells[i * self.cols + j]
    }
}

fn thread_count() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let (rows, cols) = (spec.axis1.values.len(), spec.axis2.values.len());
    let jobs: Vec<(usize, usize)> = (0..rows * cols)
        .flat_map(|cell| (0..spec.trials).map(move |t| (cell, t)))
        .collect();
    let run = |&(cell, t): &(usize, usize)| {
        let (v1, v2) = (spec.axis1.values[cell / cols], spec.axis2.values[cell % cols]);
        let params = spec.cell_params(v1, v2, spec.trial_seed(v1, v2, t));
        let rec = run_trial(&params, &spec.settings(params.m));
        log::debug!(
            "stage=sweep {}={v1} {}={v2} trial={t} outcome={:?}",
            spec.axis1.param.name(),
            spec.axis2.param.name(),
            rec.outcome
        );
        rec
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count() {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
    let records: Vec<TrialRecord> = pool.install(|| jobs.par_iter().map(run).collect());

    let mut cells = Vec::with_capacity(rows * cols);
    for (cell, chunk) in records.chunks(spec.trials).enumerate() {
        let count = |f: fn(&Outcome) -> bool| chunk.iter().filter(|r| f(&r.outcome)).count();
        let mean = |f: fn(&TrialRecord) -> f64| chunk.iter().map(f).sum::<f64>() / chunk.len() as f64;
        cells.push(CellResult {
            value1: spec.axis1.values[cell / cols],
            value2: spec.axis2.values[cell % cols],
            successes: count(|o| *o == Outcome::Exact),
            trials: chunk.len(),
            timeouts: count(|o| *o == Outcome::Timeout),
            failures: count(|o| matches!(o, Outcome::Failed(_))),
            mean_precision: mean(|r| r.precision),
            mean_recall: mean(|r| r.recall),
            mean_iterations: mean(|r| r.iterations as f64),
            mean_seconds: mean(|r| r.seconds),
            records: chunk.to_vec(),
        });
    }
    Ok(SweepResult {
        axis1: spec.axis1.param,
        axis2: spec.axis2.param,
        cells,
        rows,
        cols,
    })
}

/// One row per cell. With `timings = false` the `seconds` column is left
/// out, making the output a pure function of the spec.
pub fn to_csv(result: &SweepResult, timings: bool) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "{},{},successes,trials,timeouts,failures,precision,recall,iters",
        result.axis1.name(),
        result.axis2.name()
    );
    out.push_str(if timings { ",seconds\n" } else { "\n" });
    for c in &result.cells {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            c.value1,
            c.value2,
            c.successes,
            c.trials,
            c.timeouts,
            c.failures,
            c.mean_precision,
            c.mean_recall,
            c.mean_iterations
        );
        if timings {
            let _ = write!(out, ",{}", c.mean_seconds);
        }
        out.push('\n');
    }
    out
}

/// Success-rate color: blue `#0000ff` at 1, red `#ff0000` at 0, linear in
/// between.
pub fn rate_color(rate: f64) -> String {
    let rate = rate.clamp(0.0, 1.0);
    let channel = |x: f64| (255.0 * x).round() as u8;
    format!("#{:02x}00{:02x}", channel(1.0 - rate), channel(rate))
}

/// SVG heat map: `axis1` runs down the rows, `axis2` across the columns.
pub fn heatmap_svg(result: &SweepResult) -> String {
    const CELL: usize = 40;
    const LEFT: usize = 70;
    const TOP: usize = 20;
    const BOTTOM: usize = 50;
    let width = LEFT + CELL * result.cols + 20;
    let height = TOP + CELL * result.rows + BOTTOM;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    for i in 0..result.rows {
        for j in 0..result.cols {
            let c = result.cell(i, j);
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{}"><title>{}={} {}={}: {}/{}</title></rect>"#,
                LEFT + j * CELL,
                TOP + i * CELL,
                rate_color(c.success_rate()),
                result.axis1.name(),
                c.value1,
                result.axis2.name(),
                c.value2,
                c.successes,
                c.trials
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            LEFT - 5,
            TOP + i * CELL + CELL / 2 + 4,
            result.cell(i, 0).value1
        );
    }
    for j in 0..result.cols {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + j * CELL + CELL / 2,
            TOP + result.rows * CELL + 15,
            result.cell(0, j).value2
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + result.cols * CELL / 2,
        height - 10,
        result.axis2.name()
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
        TOP + result.rows * CELL / 2,
        TOP + result.rows * CELL / 2,
        result.axis1.name()
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SweepSpec {
        SweepSpec {
            axis1: Axis {
                param: Param::N,
                values: vec![4.0],
            },
            axis2: Axis {
                param: Param::PFalse,
                values: vec![0.0],
            },
            fixed: FixedParams {
                m: 3,
                n: 4,
                p_set: 1.0,
                p_obs: 1.0,
                p_true: 1.0,
            },
            trials: 2,
            base_seed: 5,
            estimate_m: false,
            lambda: None,
            trial_timeout: None,
            admm: AdmmOptions::default(),
        }
    }

    #[test]
    fn colors_at_the_ends() {
        assert_eq!(rate_color(1.0), "#0000ff");
        assert_eq!(rate_color(0.0), "#ff0000");
        assert_eq!(rate_color(0.5), "#800080");
    }

    #[test]
    fn validation() {
        assert!(spec().validate().is_ok());
        let mut s = spec();
        s.axis2.param = Param::PTrue;
        s.axis1.param = Param::PFalse;
        s.axis1.values = vec![0.5];
        assert!(s.validate().is_err(), "p_true and p_false are the same parameter");
        let mut s = spec();
        s.axis1.values = vec![2.5];
        assert!(s.validate().is_err());
        let mut s = spec();
        s.axis2.values.clear();
        assert!(s.validate().is_err());
        let mut s = spec();
        s.trials = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn trial_seeds_depend_on_cell_not_position() {
        let s = spec();
        let mut t = spec();
        t.axis2.values = vec![0.3, 0.0];
        assert_eq!(s.trial_seed(4.0, 0.0, 1), t.trial_seed(4.0, 0.0, 1));
        assert_ne!(s.trial_seed(4.0, 0.0, 1), s.trial_seed(4.0, 0.0, 0));
        assert_ne!(s.trial_seed(4.0, 0.0, 1), s.trial_seed(4.0, 0.3, 1));
    }

    #[test]
    fn noiseless_cell_succeeds() {
        let r = run_sweep(&spec()).unwrap();
        assert_eq!(r.cells.len(), 1);
        assert_eq!(r.cells[0].successes, 2);
        let csv = to_csv(&r, false);
        assert!(csv.starts_with("n,p_false,successes,trials"));
        assert!(heatmap_svg(&r).contains(r##"fill="#0000ff""##));
    }
}
