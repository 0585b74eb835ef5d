//! `attribkit` command-line interface.
//!
//! Exit codes: 0 on success, 1 for invalid flags or inputs, 2 when a run
//! fails (including failed axiom checks).

mod commands;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use failure::Failure;

#[derive(Parser, Debug)]
#[command(
    name = "attribkit",
    version,
    about = "Attribution for time-series classifiers"
)]
struct Cli {
    /// Seed for every random choice made by the command.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true, env = "ATTRIBKIT_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset as train.csv and eval.csv.
    Gen(GenArgs),
    /// Train a classifier on a dataset.
    Train(TrainArgs),
    /// Explain records with one attribution method.
    Attribute(AttributeArgs),
    /// Estimate a compensation offset from reference records.
    Delta(DeltaArgs),
    /// Rank-correlate methods against ground-truth Shapley values.
    Compare(CompareArgs),
    /// Run the axiom checks on freshly initialized models.
    Axioms(AxiomsArgs),
    /// Count model evaluations needed by each method.
    Cost(CostArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 6)]
    channels: usize,
    #[arg(long, default_value_t = 64)]
    length: usize,
    #[arg(long, default_value_t = 2)]
    classes: usize,
    #[arg(long, default_value_t = 200)]
    train_per_class: usize,
    #[arg(long, default_value_t = 200)]
    eval_per_class: usize,
    /// DC level added to every channel.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    offset: f64,
    #[arg(long, default_value_t = 0.3)]
    noise: f64,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    /// Channels that carry the class signal.
    #[arg(long, value_delimiter = ',', default_value = "1,4")]
    discriminative: Vec<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Arch {
    Temporal,
    Spatiotemporal,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ActivationArg {
    Tanh,
    Relu,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = Arch::Temporal)]
    arch: Arch,
    #[arg(long, value_enum, default_value_t = ActivationArg::Tanh)]
    activation: ActivationArg,
    #[arg(long, default_value_t = 4)]
    filters: usize,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MethodArg {
    Ig,
    Ss,
    Exact,
    Cig,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum BaselineArg {
    Zero,
    /// Entry-wise mean of the background records.
    Mean,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum GranularityArg {
    Channel,
    Timepoint,
}

#[derive(Args, Debug)]
struct AttributeArgs {
    #[arg(long)]
    model: PathBuf,
    /// Dataset CSV holding the records to explain.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Riemann steps for ig and cig.
    #[arg(long, default_value_t = 256)]
    steps: usize,
    /// Samples per feature for ss.
    #[arg(long, default_value_t = 500)]
    samples: usize,
    #[arg(long, value_enum, default_value_t = BaselineArg::Zero)]
    baseline: BaselineArg,
    /// Dataset CSV the background set is drawn from (ss, exact, mean baseline).
    #[arg(long)]
    background: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    background_size: usize,
    /// Compensation file(s) for cig; one per explained class.
    #[arg(long)]
    delta: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = GranularityArg::Channel)]
    granularity: GranularityArg,
    /// Class to explain; defaults to each record's label.
    #[arg(long)]
    class_index: Option<usize>,
    /// Only explain these record ids.
    #[arg(long, value_delimiter = ',')]
    records: Vec<String>,
    /// Attribution CSV; metadata goes to the same path with a .json extension.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DeltaArgs {
    #[arg(long)]
    model: PathBuf,
    /// Dataset CSV the reference records are drawn from.
    #[arg(long)]
    references: PathBuf,
    /// Number of reference records.
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    class_index: usize,
    #[arg(long, default_value_t = 256)]
    steps: usize,
    #[arg(long, default_value_t = 500)]
    samples: usize,
    /// Dataset CSV for the Shapley background; defaults to the references file.
    #[arg(long)]
    background: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    background_size: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum TruthArg {
    Exact,
    Ss,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    model: PathBuf,
    /// Records to explain.
    #[arg(long)]
    eval: PathBuf,
    /// Training records: source of the background set and compensation references.
    #[arg(long)]
    train: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "cig,ss,ig")]
    methods: Vec<MethodArg>,
    #[arg(long, value_enum, default_value_t = TruthArg::Exact)]
    truth: TruthArg,
    /// Samples per feature when the truth is sampled.
    #[arg(long, default_value_t = 20_000)]
    truth_samples: usize,
    #[arg(long, default_value_t = 256)]
    steps: usize,
    #[arg(long, default_value_t = 500)]
    samples: usize,
    /// Samples per feature on each compensation reference.
    #[arg(long, default_value_t = 500)]
    delta_samples: usize,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 64)]
    background_size: usize,
    /// Explain at most this many records per class (seeded choice).
    #[arg(long)]
    per_class: Option<usize>,
    /// Dataset column of the table; defaults to the eval file name.
    #[arg(long)]
    dataset_tag: Option<String>,
    #[arg(long)]
    out: PathBuf,
    /// Optional per-record correlations.
    #[arg(long)]
    per_record: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SuiteArg {
    All,
    Completeness,
    Dummy,
    Linearity,
    Symmetry,
    Invariance,
}

#[derive(Args, Debug)]
struct AxiomsArgs {
    #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
    suite: Vec<SuiteArg>,
    #[arg(long, value_enum, default_value_t = Arch::Temporal)]
    arch: Arch,
    #[arg(long, default_value_t = 4)]
    channels: usize,
    #[arg(long, default_value_t = 16)]
    length: usize,
    #[arg(long, default_value_t = 20)]
    instances: usize,
    #[arg(long, default_value_t = 256)]
    steps: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Optional JSON report with every check.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CostArgs {
    /// IG Riemann steps.
    #[arg(long, default_value_t = 100)]
    m: u64,
    #[arg(long, default_value_t = 400)]
    records: u64,
    #[arg(long, default_value_t = 61)]
    sensors: u64,
    /// Forward evaluations per sensor for SS.
    #[arg(long, default_value_t = 500)]
    evals: u64,
    /// Compensation reference records.
    #[arg(long, default_value_t = 10)]
    k: u64,
    #[arg(long, default_value_t = 1.0)]
    backprop_ratio: f64,
    /// JSON report path; printed to standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), Failure> {
    let seed = cli.seed;
    match cli.command {
        Command::Gen(args) => commands::gen(&args, seed),
        Command::Train(args) => commands::train(&args, seed),
        Command::Attribute(args) => commands::attribute(&args, seed),
        Command::Delta(args) => commands::delta(&args, seed),
        Command::Compare(args) => commands::compare(&args, seed),
        Command::Axioms(args) => commands::axioms(&args, seed),
        Command::Cost(args) => commands::cost(&args),
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
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}
