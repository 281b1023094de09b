use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use lnn_core::data::{self, DataError, Dataset, TabularSchema, DATA_DIR_ENV};
use lnn_core::gradcheck::{run_gradcheck, GradcheckConfig};
use lnn_core::lehmer::{lehmer_complex, lehmer_real, SuddencyComplex};
use lnn_core::nn::checkpoint;
use lnn_core::train::metrics::{append_records, crossval_records, Record};
use lnn_core::train::{cross_validate, train_mnist, LauTrainer, Optimizer, TrainConfig, TrainError};
use lnn_core::LauKind;

/// Lehmer activation unit experiments.
#[derive(Debug, Parser)]
#[command(name = "lnn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a weighted Lehmer transform.
    Transform(TransformArgs),
    /// Compare analytic gradients with finite differences.
    Gradcheck(GradcheckArgs),
    /// Stratified k-fold cross-validation on a tabular dataset.
    Crossval(CrossvalArgs),
    /// Cross-validate every tabular dataset with both LAU variants.
    Table1(Table1Args),
    /// Train the convolutional LAU model on MNIST.
    TrainMnist(MnistArgs),
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("suddency").required(true).args(["s", "a"]))]
struct TransformArgs {
    /// Positive inputs, comma separated.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    x: Vec<f64>,
    /// Positive weights, comma separated (default all ones).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    w: Option<Vec<f64>>,
    /// Real suddency moment.
    #[arg(long, allow_negative_numbers = true)]
    s: Option<f64>,
    /// Real part of a complex suddency moment.
    #[arg(long, allow_negative_numbers = true, requires = "b")]
    a: Option<f64>,
    /// Imaginary part of a complex suddency moment.
    #[arg(long, allow_negative_numbers = true, requires = "a")]
    b: Option<f64>,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Randomized cases per kernel.
    #[arg(long, default_value_t = 1000)]
    cases: usize,
    /// Cases per layer check (default: cases / 50, at least 2).
    #[arg(long)]
    layer_cases: Option<usize>,
    /// Offset added to one analytic derivative, to exercise the failure path.
    #[arg(long, hide = true, default_value_t = 0.0)]
    inject_fault: f64,
}

#[derive(Debug, Args)]
struct TrainFlags {
    /// LAU variant.
    #[arg(long, default_value = "real")]
    lau: LauKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// adam or sgd-momentum.
    #[arg(long)]
    optimizer: Option<Optimizer>,
    /// LAU width.
    #[arg(long)]
    units: Option<usize>,
    /// Clamp suddency parameters to [-bound, bound].
    #[arg(long)]
    suddency_bound: Option<f64>,
    /// Dataset root directory.
    #[arg(long, env = DATA_DIR_ENV, default_value = "data")]
    data_dir: PathBuf,
    /// Metrics file (JSON lines, appended).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl TrainFlags {
    fn config(&self, base: TrainConfig) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs.unwrap_or(base.epochs),
            batch_size: self.batch_size.unwrap_or(base.batch_size),
            learning_rate: self.lr.unwrap_or(base.learning_rate),
            optimizer: self.optimizer.unwrap_or(base.optimizer),
            lau_units: self.units.unwrap_or(base.lau_units),
            suddency_bound: self.suddency_bound.or(base.suddency_bound),
            seed: self.seed,
            ..base
        }
    }
}

#[derive(Debug, Args)]
struct CrossvalArgs {
    /// iris, wine or wdbc, or a file path together with --schema.
    #[arg(long)]
    dataset: String,
    /// Built-in schema used to parse a dataset given as a path.
    #[arg(long)]
    schema: Option<String>,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[command(flatten)]
    train: TrainFlags,
}

#[derive(Debug, Args)]
struct Table1Args {
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[command(flatten)]
    train: TrainFlags,
}

#[derive(Debug, Args)]
struct MnistArgs {
    /// Use only the first N training images.
    #[arg(long)]
    train_limit: Option<usize>,
    /// Use only the first N test images.
    #[arg(long)]
    test_limit: Option<usize>,
    /// Where to write the trained model.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[command(flatten)]
    train: TrainFlags,
}

#[derive(Debug)]
enum CliError {
    /// Bad input or configuration; exit code 2.
    Usage(String),
    /// A check or run that failed; exit code 1.
    Failed(String),
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Divergence { .. } => CliError::Failed(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Usage(format!("{}: {e}", path.display()))
}

type CliResult = Result<(), CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Transform(args) => transform(args),
        Command::Gradcheck(args) => gradcheck(args),
        Command::Crossval(args) => crossval(args),
        Command::Table1(args) => table1(args),
        Command::TrainMnist(args) => mnist(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn transform(args: TransformArgs) -> CliResult {
    let w = args.w.unwrap_or_else(|| vec![1.0; args.x.len()]);
    let domain = |e: lnn_core::LehmerError| CliError::Usage(e.to_string());
    if let Some(s) = args.s {
        println!("{}", lehmer_real(&args.x, &w, s).map_err(domain)?);
    } else {
        let (a, b) = (args.a.unwrap_or(0.0), args.b.unwrap_or(0.0));
        let r = lehmer_complex(&args.x, &w, SuddencyComplex::new(a, b)).map_err(domain)?;
        if r.near_singular {
            eprintln!("warning: near-singular denominator (relative magnitude {:e})", r.denom_ratio);
        }
        let sign = if r.value.im.is_sign_negative() { '-' } else { '+' };
        println!("{}{}{}i", r.value.re, sign, r.value.im.abs());
    }
    Ok(())
}

fn gradcheck(args: GradcheckArgs) -> CliResult {
    let mut config = GradcheckConfig::new(args.seed, args.cases);
    if let Some(n) = args.layer_cases {
        config.layer_cases = n;
    }
    config.fault = args.inject_fault;
    let start = Instant::now();
    let report = run_gradcheck(&config).map_err(|e| CliError::Usage(e.to_string()))?;
    print!("{}", report.render());
    println!("{} cases in {:.1}s", report.total_cases(), start.elapsed().as_secs_f64());
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Failed("gradient check failed".into()))
    }
}

fn load_tabular(name: &str, schema: Option<&str>, root: &Path) -> Result<Dataset, CliError> {
    match schema {
        // the column layout applies to any file; the row count only to the original
        Some(schema) => {
            let schema = TabularSchema { expected_rows: None, ..TabularSchema::named(schema)? };
            Ok(data::load_tabular_csv(name, &schema)?)
        }
        None => Ok(data::load_named(name, root)?),
    }
}

fn run_crossval(ds: &Dataset, config: &TrainConfig, out: Option<&Path>) -> Result<String, CliError> {
    let metrics = cross_validate(ds, config, &mut LauTrainer)?;
    if let Some(path) = out {
        append_records(path, &crossval_records(&metrics)).map_err(io_error(path))?;
    }
    Ok(metrics.summary())
}

fn crossval(args: CrossvalArgs) -> CliResult {
    let ds = load_tabular(&args.dataset, args.schema.as_deref(), &args.train.data_dir)?;
    let config = TrainConfig { folds: args.folds, ..args.train.config(TrainConfig::tabular(args.train.lau)) };
    let summary = run_crossval(&ds, &config, args.train.out.as_deref())?;
    println!("{} {} LAU: {summary}", ds.name, config.lau_kind);
    Ok(())
}

fn table1(args: Table1Args) -> CliResult {
    println!("{:<8} {:<18} {:<18}", "dataset", "real LAU", "complex LAU");
    for name in ["iris", "wine", "wdbc"] {
        let ds = data::load_named(name, &args.train.data_dir)?;
        let mut cells = Vec::new();
        for kind in [LauKind::Real, LauKind::Complex] {
            let config = TrainConfig { folds: args.folds, ..args.train.config(TrainConfig::tabular(kind)) };
            cells.push(run_crossval(&ds, &config, args.train.out.as_deref())?);
        }
        println!("{:<8} {:<18} {:<18}", name, cells[0], cells[1]);
    }
    Ok(())
}

fn mnist(args: MnistArgs) -> CliResult {
    let config = args.train.config(TrainConfig::mnist(args.train.lau));
    config.validate()?;
    let (train, test) = data::load_mnist(&args.train.data_dir)?;
    let head = |ds: Dataset, n: Option<usize>| match n {
        Some(n) if n < ds.len() => ds.subset(&(0..n).collect::<Vec<_>>()),
        _ => ds,
    };
    let train = head(train, args.train_limit);
    let test = head(test, args.test_limit);
    eprintln!("training {} LAU on {} images, testing on {}", config.lau_kind, train.len(), test.len());
    let start = Instant::now();
    let mut epochs = Vec::new();
    let outcome = train_mnist(&train, &test, &config, |epoch, loss| {
        eprintln!("epoch {epoch}: mean loss {loss:.6}");
        epochs.push(Record::Epoch { epoch, loss });
    })?;
    let wall_time = start.elapsed().as_secs_f64();
    println!("mnist {} LAU test accuracy: {:.2}%", config.lau_kind, 100.0 * outcome.test_accuracy);

    let ckpt = args.checkpoint.unwrap_or_else(|| PathBuf::from(format!("mnist-{}.ckpt", config.lau_kind)));
    let file = File::create(&ckpt).map_err(io_error(&ckpt))?;
    checkpoint::save(&outcome.net, BufWriter::new(file)).map_err(|e| CliError::Usage(format!("{}: {e}", ckpt.display())))?;
    eprintln!("checkpoint written to {}", ckpt.display());

    if let Some(path) = &args.train.out {
        let mut records = vec![Record::Run { kind: "mnist".into(), dataset: "mnist".into(), config: config.clone() }];
        records.extend(epochs);
        records.push(Record::Test {
            dataset: "mnist".into(),
            train_size: train.len(),
            test_size: test.len(),
            accuracy: outcome.test_accuracy,
            wall_time,
        });
        append_records(path, &records).map_err(io_error(path))?;
    }
    Ok(())
}
