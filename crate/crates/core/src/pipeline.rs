//! End-to-end runs: load or generate, estimate `m`, solve, round, evaluate.
//!
//! A configuration file (TOML, or JSON when the extension is `.json`)
//! looks like
//!
//! ```toml
//! seed = 7
//! output_dir = "run"
//! lambda = 0.05          # optional, default sqrt(|E|) / (2n)
//! r = 8                  # optional, default: the universe size used
//! m = 8                  # optional; omit (or set estimate_m = true) to estimate
//!
//! [generate]             # or: instance = "maps.txt", truth = "truth.txt"
//! m = 8
//! n = 30
//! p_set = 0.8
//! p_obs = 0.6
//! p_false = 0.4          # or p_true
//!
//! [admm]
//! mu = 1.0
//! max_iter = 500
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::admm::{admm_solve, default_lambda, AdmmOptions, SolveReport};
use crate::error::{Error, Result};
use crate::io::{self, InstanceFile};
use crate::mapcore::{BlockMapMatrix, MapGraph, SymmetryPolicy};
use crate::rounding::{evaluate, round, Metrics};
use crate::seed;
use crate::spectral::{estimate_m, SpectralEstimate};
use crate::synth::{generate, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Load,
    Generate,
    Estimate,
    Solve,
    Round,
    Evaluate,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Config => "config",
            Stage::Load => "load",
            Stage::Generate => "generate",
            Stage::Estimate => "estimate",
            Stage::Solve => "solve",
            Stage::Round => "round",
            Stage::Evaluate => "evaluate",
            Stage::Write => "write",
        };
        f.write_str(name)
    }
}

/// An error tagged with the stage that raised it.
#[derive(Debug, thiserror::Error)]
#[error("{stage} stage failed: {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

impl StageError {
    pub fn exit_code(&self) -> i32 {
        self.source.exit_code()
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UniversePolicy {
    Given(usize),
    Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaPolicy {
    /// `sqrt(|E|) / (2n)`
    Default,
    Fixed(f64),
}

impl LambdaPolicy {
    pub fn resolve(&self, graph: &MapGraph) -> f64 {
        match *self {
            LambdaPolicy::Default => default_lambda(graph),
            LambdaPolicy::Fixed(l) => l,
        }
    }
}

/// Everything needed to go from observed maps to rounded maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub universe: UniversePolicy,
    pub lambda: LambdaPolicy,
    /// Rounding rank; `None` uses the universe size.
    pub r: Option<usize>,
    pub admm: AdmmOptions,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            universe: UniversePolicy::Estimate,
            lambda: LambdaPolicy::Default,
            r: None,
            admm: AdmmOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub estimate: Option<SpectralEstimate>,
    pub m: usize,
    pub r: usize,
    pub report: SolveReport,
    pub rounded: BlockMapMatrix,
}

/// Estimation (if requested), ADMM and rounding. The trimming step draws
/// from `derive(seed, TAG_TRIM, 0)`.
pub fn solve_and_round(
    x_in: &BlockMapMatrix,
    graph: &MapGraph,
    settings: &SolverSettings,
    seed: u64,
) -> std::result::Result<Solved, StageError> {
    let estimate = match settings.universe {
        UniversePolicy::Given(_) => None,
        UniversePolicy::Estimate => {
            Some(estimate_m(x_in, graph, seed::derive(seed, seed::TAG_TRIM, 0)).at(Stage::Estimate)?)
        }
    };
    let m = match (settings.universe, &estimate) {
        (UniversePolicy::Given(m), _) => m,
        (_, Some(e)) => e.m_hat,
        _ => unreachable!(),
    };
    let lambda = settings.lambda.resolve(graph);
    log::info!("stage=solve m={m} lambda={lambda:.6} order={}", x_in.order());
    let report = admm_solve(x_in, graph, m, lambda, &settings.admm).at(Stage::Solve)?;
    log::info!(
        "stage=solve iterations={} converged={} seconds={:.3}",
        report.iterations,
        report.converged,
        report.elapsed.as_secs_f64()
    );
    let r = settings.r.unwrap_or_else(|| m.min(x_in.order()));
    let rounded = round(&report.x_hat, r).at(Stage::Round)?;
    Ok(Solved {
        estimate,
        m,
        r,
        report,
        rounded,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    File {
        path: PathBuf,
        truth: Option<PathBuf>,
        symmetrize: SymmetryPolicy,
    },
    Generate(ModelParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub source: InstanceSource,
    pub settings: SolverSettings,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
}

/// Generator parameters as written in a configuration file.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSection {
    pub m: usize,
    pub n: usize,
    pub p_set: f64,
    pub p_obs: f64,
    pub p_true: Option<f64>,
    pub p_false: Option<f64>,
}

/// On-disk shape of a pipeline configuration.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineFile {
    #[serde(default)]
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub instance: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    #[serde(default)]
    pub symmetrize: SymmetryPolicy,
    pub generate: Option<GenerateSection>,
    pub m: Option<usize>,
    pub estimate_m: Option<bool>,
    pub lambda: Option<f64>,
    pub r: Option<usize>,
    #[serde(default)]
    pub admm: AdmmOptions,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParams(msg.into())
}

impl GenerateSection {
    pub fn to_params(self, seed: u64) -> Result<ModelParams> {
        let p_true = match (self.p_true, self.p_false) {
            (Some(_), Some(_)) => return Err(invalid("give either p_true or p_false, not both")),
            (Some(t), None) => t,
            (None, Some(f)) => 1.0 - f,
            (None, None) => return Err(invalid("one of p_true or p_false is required")),
        };
        let params = ModelParams {
            m: self.m,
            n: self.n,
            p_set: self.p_set,
            p_obs: self.p_obs,
            p_true,
            seed,
        };
        params.validate()?;
        Ok(params)
    }
}

/// Parses TOML, or JSON when `path` ends in `.json`.
pub fn parse_config_text<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    let context = path.display().to_string();
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(text).map_err(|e| Error::Config {
            context,
            message: e.to_string(),
        })
    } else {
        toml::from_str(text).map_err(|e| Error::Config {
            context,
            message: e.to_string(),
        })
    }
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let raw: PipelineFile = parse_config_text(path, &io::read_to_string(path)?)?;
        let mut config = Self::from_raw(raw)?;
        // relative paths in the file are relative to the file
        if let Some(base) = path.parent() {
            let fix = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            };
            if let InstanceSource::File { path, truth, .. } = &mut config.source {
                fix(path);
                if let Some(t) = truth {
                    fix(t);
                }
            }
            if let Some(d) = &mut config.output_dir {
                fix(d);
            }
        }
        Ok(config)
    }

    pub fn from_raw(raw: PipelineFile) -> Result<Self> {
        let source = match (raw.instance, raw.generate) {
            (Some(_), Some(_)) => return Err(invalid("give either an instance file or a generate section")),
            (None, None) => return Err(invalid("an instance file or a generate section is required")),
            (Some(path), None) => InstanceSource::File {
                path,
                truth: raw.truth,
                symmetrize: raw.symmetrize,
            },
            (None, Some(g)) => {
                if raw.truth.is_some() {
                    return Err(invalid("a truth file only applies to a loaded instance"));
                }
                InstanceSource::Generate(g.to_params(raw.seed)?)
            }
        };
        let universe = match (raw.m, raw.estimate_m) {
            (Some(_), Some(true)) => return Err(invalid("m is both given and set to be estimated")),
            (Some(0), _) => return Err(invalid("m must be at least 1")),
            (Some(m), _) => UniversePolicy::Given(m),
            (None, Some(false)) => return Err(invalid("m is neither given nor estimated")),
            (None, _) => UniversePolicy::Estimate,
        };
        let lambda = match raw.lambda {
            None => LambdaPolicy::Default,
            Some(l) if l >= 0.0 && l.is_finite() => LambdaPolicy::Fixed(l),
            Some(l) => return Err(invalid(format!("lambda = {l} must be finite and >= 0"))),
        };
        if raw.r == Some(0) {
            return Err(invalid("r must be at least 1"));
        }
        Ok(Self {
            source,
            settings: SolverSettings {
                universe,
                lambda,
                r: raw.r,
                admm: raw.admm,
            },
            seed: raw.seed,
            output_dir: raw.output_dir,
        })
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub instance: InstanceFile,
    pub truth: Option<BlockMapMatrix>,
    pub solved: Solved,
    pub metrics: Option<Metrics>,
    /// Files written, in order.
    pub artifacts: Vec<PathBuf>,
}

struct Writer<'a> {
    dir: Option<&'a Path>,
    written: Vec<PathBuf>,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, contents: impl FnOnce() -> String) -> std::result::Result<(), StageError> {
        if let Some(dir) = self.dir {
            let path = dir.join(name);
            io::write_file(&path, &contents()).at(Stage::Write)?;
            self.written.push(path);
        }
        Ok(())
    }
}

/// Runs every stage, writing artifacts as soon as each stage finishes.
///
/// Artifacts in `output_dir`: `instance.txt` and `truth.txt` (generated
/// instances only), `spectrum.csv` and `estimate.json` (when `m` is
/// estimated), `x_hat.txt`, `trace.csv`, `solve.json`, `rounded.txt`, and
/// `metrics.json` (when a truth is available).
pub fn run_pipeline(config: &PipelineConfig) -> std::result::Result<PipelineOutput, StageError> {
    let mut out = Writer {
        dir: config.output_dir.as_deref(),
        written: Vec::new(),
    };
    let (instance, truth) = match &config.source {
        InstanceSource::File { path, truth, symmetrize } => {
            let inst = io::read_instance(path, *symmetrize).at(Stage::Load)?;
            let truth = match truth {
                Some(t) => Some(io::read_instance(t, SymmetryPolicy::Reject).at(Stage::Load)?.maps),
                None => None,
            };
            (inst, truth)
        }
        InstanceSource::Generate(params) => {
            let generated = generate(params).at(Stage::Generate)?;
            let inst = InstanceFile::from_instance(&generated);
            let truth = InstanceFile::truth_of(&generated);
            out.put("instance.txt", || io::write_instance(&inst))?;
            out.put("truth.txt", || io::write_instance(&truth))?;
            (inst, Some(truth.maps))
        }
    };
    log::info!(
        "stage=load objects={} points={} edges={}",
        instance.maps.n(),
        instance.maps.order(),
        instance.graph.edge_count()
    );

    let solved = solve_and_round(&instance.maps, &instance.graph, &config.settings, config.seed)?;
    if let Some(est) = &solved.estimate {
        log::info!("stage=estimate m_hat={}", est.m_hat);
        out.put("spectrum.csv", || io::spectrum_csv(&est.spectrum))?;
        out.put("estimate.json", || {
            io::to_json(&serde_json::json!({ "m_hat": est.m_hat, "trim": est.trim }))
        })?;
    }
    out.put("x_hat.txt", || io::write_relaxed(&solved.report.x_hat))?;
    out.put("trace.csv", || io::trace_csv(&solved.report.trace))?;
    out.put("solve.json", || io::to_json(&solved.report.summary()))?;
    out.put("rounded.txt", || {
        io::write_instance(&InstanceFile::from_maps(&solved.rounded, Some(solved.m)).expect("rounded maps are binary"))
    })?;

    let metrics = match &truth {
        Some(t) => {
            let m = evaluate(&solved.rounded, t).at(Stage::Evaluate)?;
            log::info!(
                "stage=evaluate precision={:.4} recall={:.4} exact={}",
                m.precision,
                m.recall,
                m.exact
            );
            out.put("metrics.json", || io::to_json(&m))?;
            Some(m)
        }
        None => None,
    };
    Ok(PipelineOutput {
        instance,
        truth,
        solved,
        metrics,
        artifacts: out.written,
    })
}
