use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bqap::harness::{emit_front_csv, emit_summary, run_experiment, ExperimentConfig, ExperimentSettings};
use bqap::{
    build_cqm, hypervolume_2d, reference_point, synth_instance, BiQapInstance, Budget, Error,
    MatrixOrder, MethodKind, ReferenceFront, WeightVector,
};

#[derive(Parser)]
#[command(name = "bqap", version, about = "Bi-objective QAP scalarisation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BudgetMode {
    Wallclock,
    Iterations,
}

#[derive(Subcommand)]
enum Command {
    /// Run repeated scalarisation experiments and write summary and front CSVs.
    Run {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "distance,flow1,flow2")]
        matrix_order: String,
        /// Comma-separated list of uniform, adaptive-averages, adaptive-dichotomic.
        #[arg(long, default_value = "uniform,adaptive-averages,adaptive-dichotomic")]
        method: String,
        #[arg(long, default_value_t = 10)]
        num_weights: usize,
        /// Seconds per scalarisation in wall-clock mode.
        #[arg(long, default_value_t = 5.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 20)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "sa")]
        backend: String,
        #[arg(long, value_enum, default_value = "wallclock")]
        budget_mode: BudgetMode,
        /// Proposed moves per scalarisation in iteration mode.
        #[arg(long, default_value_t = 200_000)]
        iterations: u64,
        #[arg(long)]
        reference_front: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Generate a synthetic instance with correlated flow matrices.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        correlation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hypervolume of a front against the maxima of a reference front.
    Hv {
        #[arg(long)]
        front: PathBuf,
        #[arg(long)]
        reference_front: PathBuf,
    },
    /// Print the scalarised constrained quadratic model of an instance.
    Cqm {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "distance,flow1,flow2")]
        matrix_order: String,
        #[arg(long, default_value_t = 0.5)]
        lambda1: f64,
    },
}

fn parse_methods(list: &str) -> bqap::Result<Vec<MethodKind>> {
    list.split(',').map(str::parse).collect()
}

fn execute(cmd: Command) -> bqap::Result<()> {
    match cmd {
        Command::Run {
            instance,
            matrix_order,
            method,
            num_weights,
            time_limit,
            runs,
            seed,
            backend,
            budget_mode,
            iterations,
            reference_front,
            out,
            workers,
        } => {
            let budget = match budget_mode {
                BudgetMode::Wallclock => Budget::wall_clock_secs(time_limit)?,
                BudgetMode::Iterations => Budget::iterations(iterations)?,
            };
            let cfg = ExperimentConfig {
                instance_path: instance,
                matrix_order: matrix_order.parse()?,
                reference_front_path: reference_front,
                output_dir: out,
                settings: ExperimentSettings {
                    methods: parse_methods(&method)?,
                    num_weights,
                    budget,
                    runs,
                    base_seed: seed,
                    backend,
                    workers,
                },
            };
            let report = run_experiment(&cfg)?;
            emit_summary(&report, &cfg.output_dir)?;
            emit_front_csv(&report, &cfg.output_dir)?;
            print!("{}", bqap::harness::summary_csv(&report));
            Ok(())
        }
        Command::Synth {
            n,
            correlation,
            seed,
            out,
        } => {
            let inst = synth_instance(n, correlation, seed)?;
            std::fs::write(&out, inst.render(MatrixOrder::default())).map_err(|e| Error::Io {
                context: out.display().to_string(),
                source: e,
            })
        }
        Command::Hv {
            front,
            reference_front,
        } => {
            let front = ReferenceFront::load(&front)?;
            let reference = ReferenceFront::load(&reference_front)?;
            let r = reference_point(reference.points())?;
            println!("{}", hypervolume_2d(front.points(), r));
            Ok(())
        }
        Command::Cqm {
            instance,
            matrix_order,
            lambda1,
        } => {
            let inst = BiQapInstance::load(&instance, matrix_order.parse()?)?;
            let model = build_cqm(&inst, WeightVector::from_lambda1(lambda1)?);
            print!("{}", model.dump());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
