use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use dmp_core::basis::{DEFAULT_OVERLAP, DEFAULT_TRUNC_KAPPA};
use dmp_core::bench::{self, BasisSpec, SweepReport, SweepSettings, TargetKind};
use dmp_core::io;
use dmp_core::learn::{learn_dmp, update_segment};
use dmp_core::{
    align_demos, regress_weights, rollout, BasisFamily, BasisSet, DemoSet, DmpError, Formulation, Gains, Goal,
    PhaseConfig, RolloutOptions, Trajectory,
};

#[derive(Parser)]
#[command(name = "dmp", version, about = "Learn, generalize and benchmark dynamic movement primitives")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a model from a trajectory CSV.
    Learn {
        input: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Integrate a model towards a new goal.
    Rollout(RolloutArgs),
    /// Relearn the weights affected by a modified time segment.
    Update {
        model: PathBuf,
        /// Full modified demonstration.
        trajectory: PathBuf,
        #[arg(long)]
        t0: f64,
        #[arg(long)]
        t1: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the relearned indices, one per line.
        #[arg(long)]
        indices: Option<PathBuf>,
    },
    /// Learn one model from every trajectory CSV in a directory.
    Regress {
        dir: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// Common horizon of the aligned demonstrations.
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a benchmark sweep and write a report CSV.
    Bench(BenchArgs),
    /// Write synthetic datasets.
    Gen {
        #[command(subcommand)]
        dataset: GenCommand,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// gaussian, truncated_gaussian, mollifier or wendland_<k>.
    #[arg(long, default_value = "mollifier")]
    basis: String,
    /// Basis functions are indexed 0..=N.
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// Elastic gain.
    #[arg(long, default_value_t = 150.0)]
    k: f64,
    /// Damping gain; defaults to 2 sqrt(K).
    #[arg(long)]
    d: Option<f64>,
    #[arg(long, default_value_t = 4.0)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_OVERLAP)]
    overlap: f64,
    /// Truncation multiplier of the truncated Gaussian.
    #[arg(long, default_value_t = DEFAULT_TRUNC_KAPPA)]
    kappa: f64,
    /// Add a bias term per basis function.
    #[arg(long)]
    biased: bool,
}

impl ModelArgs {
    fn gains(&self, dims: usize) -> Result<Gains, DmpError> {
        match self.d {
            Some(d) => Gains::new(vec![self.k; dims], vec![d; dims]),
            None => Gains::uniform(self.k, dims),
        }
    }

    fn basis(&self, phase: &PhaseConfig) -> Result<BasisSet, DmpError> {
        let family = BasisFamily::from_tag(&self.basis, self.kappa)?;
        BasisSet::new(family, self.n, phase, self.overlap, self.biased)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormulationArg {
    Original,
    Classical,
    Extended,
}

#[derive(Args)]
struct RolloutArgs {
    model: PathBuf,
    /// Start position, comma separated; defaults to the learned start.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    x0: Option<Vec<f64>>,
    /// Static goal, comma separated; defaults to the learned goal.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, conflicts_with = "goal_path")]
    goal: Option<Vec<f64>>,
    /// Moving goal as a CSV with header `t,g1,...,gd`.
    #[arg(long)]
    goal_path: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "extended")]
    formulation: FormulationArg,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// Defaults to twice the learned horizon.
    #[arg(long)]
    duration: Option<f64>,
    /// Defaults to the learned horizon over 1000.
    #[arg(long)]
    dt: Option<f64>,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Error,
    Condition,
    Sparsity,
    Timing,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(value_enum)]
    sweep: SweepKind,
    /// Comma separated labels; `_biased` suffix adds bias terms. Defaults to
    /// every family, the truncated Gaussian with and without biases.
    #[arg(long, value_delimiter = ',')]
    families: Option<Vec<String>>,
    /// Comma separated values of N.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Target of the error sweep: hat-eta, plane-curve or spiral-curve.
    #[arg(long, default_value = "hat-eta")]
    target: String,
    #[arg(long, default_value_t = 1001)]
    samples: usize,
    /// Right-hand sides per timing cell.
    #[arg(long, default_value_t = 30)]
    rhs: usize,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 4.0)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_OVERLAP)]
    overlap: f64,
    #[arg(long, default_value_t = 150.0)]
    k: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Limit-cycle demonstrations, one CSV per demo.
    LimitCycle {
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Variance of additive Gaussian noise on the positions.
        #[arg(long)]
        noise: Option<f64>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// An analytic target curve.
    Target {
        /// hat-eta, plane-curve or spiral-curve.
        kind: String,
        #[arg(long, default_value_t = 1001)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two planar curves differing only in a middle window.
    SplinePair {
        #[arg(long, default_value_t = 1001)]
        samples: usize,
        /// Output directory, receives `large.csv` and `small.csv`.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("dmp: InvalidArguments: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dmp: {}: {e}", e.kind());
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}

fn run(command: Command) -> Result<(), DmpError> {
    match command {
        Command::Learn { input, model, out } => {
            let demo = io::load_trajectory(&input)?.shifted_to_zero();
            let phase = PhaseConfig::new(model.alpha, 1.0, demo.duration())?;
            let basis = model.basis(&phase)?;
            let learned = learn_dmp(&demo, &model.gains(demo.dims())?, &phase, &basis)?;
            io::save_model(&out, &learned)
        }
        Command::Rollout(args) => run_rollout(args),
        Command::Update {
            model,
            trajectory,
            t0,
            t1,
            out,
            indices,
        } => {
            let old = io::load_model(&model)?;
            let demo = io::load_trajectory(&trajectory)?.shifted_to_zero();
            let (updated, set) = update_segment(&old, &demo, t0, t1)?;
            io::save_model(&out, &updated)?;
            let listing: String = set.iter().map(|i| format!("{i}\n")).collect();
            if let Some(path) = indices {
                write_file(&path, listing.as_bytes())?;
            }
            print!("{listing}");
            Ok(())
        }
        Command::Regress {
            dir,
            model,
            horizon,
            out,
        } => {
            let demos = load_dir(&dir)?;
            let set = DemoSet::new(demos)?;
            let phase = PhaseConfig::new(model.alpha, 1.0, horizon)?;
            let aligned = align_demos(&set, horizon)?;
            let basis = model.basis(&phase)?;
            let learned = regress_weights(&aligned, &model.gains(set.dims())?, &phase, &basis)?;
            io::save_model(&out, &learned)
        }
        Command::Bench(args) => run_bench(args),
        Command::Gen { dataset } => run_gen(dataset),
    }
}

fn run_rollout(args: RolloutArgs) -> Result<(), DmpError> {
    let model = io::load_model(&args.model)?;
    let x0 = args.x0.map_or_else(|| model.learned_x0().clone(), DVector::from_vec);
    let goal = match (&args.goal_path, args.goal) {
        (Some(path), _) => io::load_goal_path(path)?,
        (None, Some(g)) => Goal::Static(DVector::from_vec(g)),
        (None, None) => Goal::Static(model.learned_g().clone()),
    };
    let mut opts = RolloutOptions::for_model(&model);
    opts.tau = args.tau;
    if let Some(duration) = args.duration {
        opts.duration = duration;
    } else {
        opts.duration *= args.tau;
    }
    if let Some(dt) = args.dt {
        opts.dt = dt;
    }
    let formulation = match args.formulation {
        FormulationArg::Original => Formulation::Original,
        FormulationArg::Classical => Formulation::Classical,
        FormulationArg::Extended => Formulation::Extended(None),
    };
    let traj = rollout(&model, &x0, &goal, &opts, &formulation)?;
    match args.out {
        Some(path) => io::save_trajectory(&path, &traj),
        None => {
            let stdout = std::io::stdout();
            io::write_trajectory(stdout.lock(), &traj)
        }
    }
}

fn parse_spec(label: &str) -> Result<BasisSpec, DmpError> {
    let (tag, biased) = match label.strip_suffix("_biased") {
        Some(tag) => (tag, true),
        None => (label, false),
    };
    Ok(BasisSpec::new(BasisFamily::from_tag(tag, DEFAULT_TRUNC_KAPPA)?, biased))
}

fn default_specs() -> Vec<BasisSpec> {
    let mut specs: Vec<BasisSpec> = BasisFamily::all().into_iter().map(|f| BasisSpec::new(f, false)).collect();
    specs.insert(2, BasisSpec::new(BasisFamily::truncated_gaussian(), true));
    specs
}

fn run_bench(args: BenchArgs) -> Result<(), DmpError> {
    let specs = match &args.families {
        Some(labels) => labels.iter().map(|l| parse_spec(l)).collect::<Result<Vec<_>, _>>()?,
        None => default_specs(),
    };
    let settings = SweepSettings {
        alpha: args.alpha,
        overlap: args.overlap,
        elastic: args.k,
        seed: args.seed,
    };
    let report: SweepReport = match args.sweep {
        SweepKind::Error => {
            let n = args.n.unwrap_or_else(|| (1..=10).map(|k| 10 * k).collect());
            let target = bench::gen_target(TargetKind::from_tag(&args.target)?, args.samples)?;
            bench::run_error_sweep(&specs, &n, &target, &settings)?
        }
        SweepKind::Condition => {
            let n = args.n.unwrap_or_else(|| vec![20, 40, 80, 160]);
            bench::run_condition_sweep(&specs, &n, args.horizon, &settings)?
        }
        SweepKind::Sparsity => {
            let n = args.n.unwrap_or_else(|| vec![128]);
            let mut merged: Option<SweepReport> = None;
            for spec in &specs {
                for &n in &n {
                    let part = bench::run_sparsity(*spec, n, args.horizon, &settings)?;
                    match merged.as_mut() {
                        Some(m) => m.rows.extend(part.rows),
                        None => merged = Some(part),
                    }
                }
            }
            merged.ok_or_else(|| DmpError::InvalidParameter {
                name: "families",
                reason: "no sweep cells".into(),
            })?
        }
        SweepKind::Timing => {
            let n = args.n.unwrap_or_else(|| vec![256, 512, 1024]);
            bench::run_timing_sweep(&specs, &n, args.rhs, args.horizon, &settings)?
        }
    };
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    write_file(&args.out, &csv)?;
    if let Some(path) = args.json {
        write_file(&path, report.to_json()?.as_bytes())?;
    }
    Ok(())
}

fn run_gen(dataset: GenCommand) -> Result<(), DmpError> {
    match dataset {
        GenCommand::LimitCycle {
            count,
            seed,
            noise,
            out,
        } => {
            let mut set = bench::gen_limit_cycle_dataset(count, seed)?;
            if let Some(variance) = noise {
                set = bench::add_noise(&set, variance, seed)?;
            }
            create_dir(&out)?;
            let width = count.saturating_sub(1).to_string().len().max(3);
            for (j, demo) in set.demos().iter().enumerate() {
                io::save_trajectory(&out.join(format!("demo_{j:0width$}.csv")), demo)?;
            }
            Ok(())
        }
        GenCommand::Target { kind, samples, out } => {
            let target = bench::gen_target(TargetKind::from_tag(&kind)?, samples)?;
            io::save_trajectory(&out, &target.positions_only())
        }
        GenCommand::SplinePair { samples, out } => {
            let pair = bench::gen_spline_pair(samples)?;
            create_dir(&out)?;
            io::save_trajectory(&out.join("large.csv"), &pair.large.positions_only())?;
            io::save_trajectory(&out.join("small.csv"), &pair.small.positions_only())
        }
    }
}

fn load_dir(dir: &Path) -> Result<Vec<Trajectory>, DmpError> {
    let entries = fs::read_dir(dir).map_err(|e| DmpError::Io(format!("{}: {e}", dir.display())))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| DmpError::Io(e.to_string()))?.path();
        if path.extension().is_some_and(|ext| ext == "csv") {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(DmpError::Io(format!("{}: no .csv files", dir.display())));
    }
    paths.iter().map(|p| io::load_trajectory(p)).collect()
}

fn create_dir(path: &Path) -> Result<(), DmpError> {
    fs::create_dir_all(path).map_err(|e| DmpError::Io(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), DmpError> {
    fs::File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(|e| DmpError::Io(format!("{}: {e}", path.display())))
}
