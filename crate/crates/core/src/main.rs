use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use matchlift::admm::AdmmOptions;
use matchlift::bench::{heatmap_svg, run_sweep, to_csv, SweepSpec};
use matchlift::io::{self, InstanceFile};
use matchlift::mapcore::SymmetryPolicy;
use matchlift::pipeline::{
    run_pipeline, solve_and_round, LambdaPolicy, PipelineConfig, SolverSettings, StageError, UniversePolicy,
};
use matchlift::rounding::{evaluate, round};
use matchlift::spectral::estimate_m;
use matchlift::synth::{generate, ModelParams};
use matchlift::{seed, Error};

#[derive(Parser)]
#[command(name = "matchlift", version, about = "Joint matching of partially similar objects")]
struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    log_level: log::LevelFilter,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Symmetrize {
    Reject,
    TransposeOr,
}

impl From<Symmetrize> for SymmetryPolicy {
    fn from(s: Symmetrize) -> Self {
        match s {
            Symmetrize::Reject => SymmetryPolicy::Reject,
            Symmetrize::TransposeOr => SymmetryPolicy::TransposeOr,
        }
    }
}

#[derive(Args)]
struct InstanceArg {
    /// Instance file.
    instance: PathBuf,
    /// How to combine maps given in both orientations.
    #[arg(long, value_enum, default_value = "reject")]
    symmetrize: Symmetrize,
}

impl InstanceArg {
    fn load(&self) -> Result<InstanceFile, Error> {
        io::read_instance(&self.instance, self.symmetrize.into())
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Universe size; estimated from the spectrum when omitted.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Feasibility and change tolerance.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
}

impl SolverArgs {
    fn settings(&self, r: Option<usize>) -> SolverSettings {
        SolverSettings {
            universe: self.m.map_or(UniversePolicy::Estimate, UniversePolicy::Given),
            lambda: self.lambda.map_or(LambdaPolicy::Default, LambdaPolicy::Fixed),
            r,
            admm: AdmmOptions {
                mu: self.mu,
                max_iter: self.max_iter,
                tol_feas: self.tol,
                tol_change: self.tol,
                time_limit: self.time_limit.map(std::time::Duration::from_secs_f64),
            },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample an instance; writes <out>.txt, <out>.truth.txt and <out>.json.
    Gen {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p_set: f64,
        #[arg(long)]
        p_obs: f64,
        /// Probability of a correct map (exclusive with --p-false).
        #[arg(long, conflicts_with = "p_false", required_unless_present = "p_false")]
        p_true: Option<f64>,
        #[arg(long)]
        p_false: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the universe size; prints m and optionally writes the spectrum.
    EstimateM {
        #[command(flatten)]
        input: InstanceArg,
        #[arg(long)]
        spectrum: Option<PathBuf>,
    },
    /// Solve the relaxation and round; writes x_hat.txt, trace.csv, solve.json, rounded.txt.
    Solve {
        #[command(flatten)]
        input: InstanceArg,
        #[command(flatten)]
        solver: SolverArgs,
        /// Rounding rank (default: m).
        #[arg(long)]
        r: Option<usize>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Round a relaxed matrix file and optionally score it.
    Round {
        relaxed: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        out: PathBuf,
        /// Ground-truth instance file; prints metrics as JSON.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Run every stage from a TOML or JSON configuration.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the output directory of the configuration.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Monte Carlo sweep from a TOML or JSON spec; writes CSV and SVG.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        heatmap: Option<PathBuf>,
    },
}

fn init_logging(level: log::LevelFilter) {
    env_logger::Builder::new()
        .filter_level(level)
        .format(|buf, record| {
            writeln!(
                buf,
                "level={} target={} {}",
                record.level().as_str().to_lowercase(),
                record.target(),
                record.args()
            )
        })
        .init();
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    io::write_file(path, text)
}

fn run(cli: Cli) -> Result<(), StageError> {
    use matchlift::pipeline::Stage;
    let at = |stage: Stage| move |source: Error| StageError { stage, source };
    match cli.command {
        Command::Gen {
            m,
            n,
            p_set,
            p_obs,
            p_true,
            p_false,
            out,
        } => {
            let params = ModelParams {
                m,
                n,
                p_set,
                p_obs,
                p_true: p_true.unwrap_or(1.0 - p_false.unwrap_or(0.0)),
                seed: cli.seed,
            };
            let inst = generate(&params).map_err(at(Stage::Generate))?;
            let with_ext = |ext: &str| PathBuf::from(format!("{}{ext}", out.display()));
            (|| {
                write(&with_ext(".txt"), &io::write_instance(&InstanceFile::from_instance(&inst)))?;
                write(&with_ext(".truth.txt"), &io::write_instance(&InstanceFile::truth_of(&inst)))?;
                write(&with_ext(".json"), &io::to_json(&params))
            })()
            .map_err(at(Stage::Write))
        }
        Command::EstimateM { input, spectrum } => {
            let inst = input.load().map_err(at(Stage::Load))?;
            let est = estimate_m(&inst.maps, &inst.graph, seed::derive(cli.seed, seed::TAG_TRIM, 0))
                .map_err(at(Stage::Estimate))?;
            if let Some(path) = spectrum {
                write(&path, &io::spectrum_csv(&est.spectrum)).map_err(at(Stage::Write))?;
            }
            println!("{}", est.m_hat);
            Ok(())
        }
        Command::Solve {
            input,
            solver,
            r,
            out_dir,
        } => {
            let inst = input.load().map_err(at(Stage::Load))?;
            let solved = solve_and_round(&inst.maps, &inst.graph, &solver.settings(r), cli.seed)?;
            (|| {
                if let Some(est) = &solved.estimate {
                    write(&out_dir.join("spectrum.csv"), &io::spectrum_csv(&est.spectrum))?;
                }
                write(&out_dir.join("x_hat.txt"), &io::write_relaxed(&solved.report.x_hat))?;
                write(&out_dir.join("trace.csv"), &io::trace_csv(&solved.report.trace))?;
                write(&out_dir.join("solve.json"), &io::to_json(&solved.report.summary()))?;
                let rounded = InstanceFile::from_maps(&solved.rounded, Some(solved.m))?;
                write(&out_dir.join("rounded.txt"), &io::write_instance(&rounded))
            })()
            .map_err(at(Stage::Write))?;
            println!("{}", io::to_json(&solved.report.summary()).trim_end());
            Ok(())
        }
        Command::Round { relaxed, r, out, truth } => {
            let x = io::read_relaxed(&relaxed).map_err(at(Stage::Load))?;
            let rounded = round(&x, r).map_err(at(Stage::Round))?;
            let file = InstanceFile::from_maps(&rounded, None).map_err(at(Stage::Round))?;
            write(&out, &io::write_instance(&file)).map_err(at(Stage::Write))?;
            if let Some(t) = truth {
                let t = io::read_instance(&t, SymmetryPolicy::Reject).map_err(at(Stage::Load))?;
                let m = evaluate(&rounded, &t.maps).map_err(at(Stage::Evaluate))?;
                println!("{}", io::to_json(&m).trim_end());
            }
            Ok(())
        }
        Command::Pipeline { config, out_dir } => {
            let mut config = PipelineConfig::from_file(&config).map_err(at(Stage::Config))?;
            if out_dir.is_some() {
                config.output_dir = out_dir;
            }
            let out = run_pipeline(&config)?;
            match out.metrics {
                Some(m) => println!("{}", io::to_json(&m).trim_end()),
                None => println!("{{\"m\": {}}}", out.solved.m),
            }
            Ok(())
        }
        Command::Sweep { config, csv, heatmap } => {
            let spec = SweepSpec::from_file(&config).map_err(at(Stage::Config))?;
            let result = run_sweep(&spec).map_err(at(Stage::Solve))?;
            write(&csv, &to_csv(&result, true)).map_err(at(Stage::Write))?;
            if let Some(h) = heatmap {
                write(&h, &heatmap_svg(&result)).map_err(at(Stage::Write))?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.log_level);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
