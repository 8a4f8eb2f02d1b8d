use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ses_core::bench::{generate_synthetic, run_protocol, ProtocolConfig, SyntheticSpec};
use ses_core::data::write_csv;
use ses_core::modelsel::{cv_ses, CvConfig, Task};
use ses_core::ses::{content_digest, enumerate_queues};
use ses_core::{
    dispatch_test, load_dataset, ses_run, DatasetF64, Schema, SesConfigF64, TargetColumn,
    TargetF64, TestCacheF64, TestChoice, TestSpecF64,
};

use ses_cli::report::{self, BenchReport, CvReport, RunReport, SCHEMA_VERSION};

/// Marks an error as caused by the user's options (exit status 2).
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Parser)]
#[command(
    name = "ses",
    version,
    about = "Statistically equivalent signature feature selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run SES on a data file and write a run report.
    Select(SelectArgs),
    /// Cross-validate the threshold and conditioning-size grid.
    Cv(CvArgs),
    /// List the signatures of a run report, one per line.
    Signatures(SignaturesArgs),
    /// Repeated split protocol measuring how equivalent the signatures are.
    Bench(BenchArgs),
    /// Write the synthetic benchmark data set as CSV.
    Synth(SynthArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Comma or tab separated table with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Name of the outcome column.
    #[arg(long)]
    target: String,
    /// JSON object mapping column names to "continuous" or "categorical".
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    input: DataArgs,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 3)]
    max_k: usize,
    /// fisher, spearman, g2, linreg, logistic or auto.
    #[arg(long, default_value = "auto")]
    test: String,
    #[arg(long, env = "SES_WORKERS", default_value_t = 1)]
    workers: usize,
    /// Test cache file, read if present and rewritten after the run.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Write every consulted test to this file.
    #[arg(long)]
    audit: Option<PathBuf>,
    /// Disable equivalence detection (plain MMPC).
    #[arg(long)]
    mmpc: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    /// Regression
    R,
    /// Classification
    C,
}

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    input: DataArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.05, 0.1])]
    alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [3usize, 5])]
    max_ks: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    kfolds: usize,
    /// Inferred from the target when omitted.
    #[arg(long, value_enum)]
    task: Option<TaskArg>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "auto")]
    test: String,
    #[arg(long, env = "SES_WORKERS", default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SignaturesArgs {
    /// Run report written by `select`.
    #[arg(long)]
    report: PathBuf,
    #[arg(long, default_value_t = 1_000_000)]
    limit: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 50)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON synthetic spec; the built-in default when omitted.
    #[arg(long, conflicts_with = "data")]
    spec: Option<PathBuf>,
    /// Run the protocol on this table instead of synthetic data.
    #[arg(long, requires = "target")]
    data: Option<PathBuf>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.05, 0.1])]
    alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [3usize, 5])]
    max_ks: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    kfolds: usize,
    #[arg(long, default_value_t = 1000)]
    signature_limit: usize,
    #[arg(long, default_value = "auto")]
    test: String,
    #[arg(long, env = "SES_WORKERS", default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Overrides the seed in the spec.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "y")]
    target_name: String,
    #[arg(long)]
    out: PathBuf,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| {
        format!("cannot open {}", path.display())
    })?))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).with_context(|| format!("cannot parse {}", path.display()))
}

fn load(input: &DataArgs) -> Result<(DatasetF64, TargetF64)> {
    let schema = match &input.schema {
        Some(p) => Some(
            Schema::from_reader(open(p)?).with_context(|| format!("bad schema {}", p.display()))?,
        ),
        None => None,
    };
    let target = TargetColumn::Name(input.target.clone());
    load_dataset(open(&input.data)?, &target, schema.as_ref())
        .with_context(|| format!("cannot load {}", input.data.display()))
}

fn test_spec(name: &str) -> Result<Option<TestSpecF64>> {
    let choice: TestChoice = name
        .parse()
        .map_err(|e: ses_core::Error| config_error(e.to_string()))?;
    Ok(choice.to_spec())
}

fn check_workers(workers: usize) -> Result<()> {
    if workers == 0 {
        return Err(config_error("--workers must be at least 1"));
    }
    Ok(())
}

fn cmd_select(args: SelectArgs) -> Result<()> {
    check_workers(args.workers)?;
    let mut cfg = SesConfigF64::new(args.alpha, args.max_k).with_workers(args.workers);
    cfg.test = test_spec(&args.test)?;
    cfg.audit = args.audit.is_some();
    if args.mmpc {
        cfg = cfg.mmpc();
    }
    cfg.validate()?;
    let (ds, target) = load(&args.input)?;
    let spec = dispatch_test(&target, &ds, cfg.test.clone())?;
    let digest = content_digest(&ds, &target, spec.name());

    let cache = match &args.cache {
        Some(p) if p.exists() => {
            let loaded = TestCacheF64::read_from(open(p)?, &digest)
                .with_context(|| format!("cannot read cache {}", p.display()))?;
            if loaded.is_none() {
                eprintln!(
                    "note: cache {} belongs to other data; starting empty",
                    p.display()
                );
            }
            loaded
        }
        _ => None,
    };
    let out = ses_run(&ds, &target, &cfg, cache)?;

    if let Some(p) = &args.cache {
        let file = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
        let mut w = BufWriter::new(file);
        out.cache.write_to(&digest, spec.name(), &mut w)?;
        w.flush()?;
    }
    if let (Some(p), Some(log)) = (&args.audit, &out.audit) {
        let file = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "purpose\tx\tcond\tstatistic\tp_value\tcache")?;
        for entry in log {
            writeln!(w, "{entry}")?;
        }
        w.flush()?;
    }
    let report = RunReport::new(
        &out,
        &ds,
        &args.input.data.display().to_string(),
        &args.input.target,
        args.workers,
    );
    if let Some(p) = &args.out {
        write_json(p, &report)?;
    }
    print!("{}", report::run_summary(&report));
    Ok(())
}

fn cmd_cv(args: CvArgs) -> Result<()> {
    check_workers(args.workers)?;
    let test = test_spec(&args.test)?;
    let (ds, target) = load(&args.input)?;
    let task = match args.task {
        Some(TaskArg::R) => Task::Regression,
        Some(TaskArg::C) => Task::Classification,
        None => Task::for_target(&target)?,
    };
    let cfg = CvConfig {
        kfolds: args.kfolds,
        folds: None,
        alphas: args.alphas,
        max_ks: args.max_ks,
        task,
        seed: args.seed,
        workers: args.workers,
    };
    let test_name = dispatch_test(&target, &ds, test.clone())?
        .name()
        .to_string();
    let result = cv_ses(&ds, &target, &cfg, test)?;
    let report = CvReport {
        schema_version: SCHEMA_VERSION,
        data: args.input.data.display().to_string(),
        target: args.input.target.clone(),
        test: test_name,
        result,
    };
    if let Some(p) = &args.out {
        write_json(p, &report)?;
    }
    print!("{}", report::cv_summary(&report));
    Ok(())
}

fn cmd_signatures(args: SignaturesArgs) -> Result<()> {
    if args.limit == 0 {
        return Err(config_error("--limit must be at least 1"));
    }
    let report: RunReport = read_json(&args.report)?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(anyhow!(
            "report schema version {} is not supported",
            report.schema_version
        ));
    }
    let sigs = enumerate_queues(&report.queues, args.limit);
    let stdout = std::io::stdout();
    let mut w = BufWriter::new(stdout.lock());
    for sig in &sigs.signatures {
        let names: Vec<&str> = sig.iter().map(|&v| report.name(v)).collect();
        writeln!(w, "{}", names.join(" "))?;
    }
    w.flush()?;
    if sigs.truncated {
        eprintln!(
            "note: listed {} of {} signatures (limit {})",
            sigs.signatures.len(),
            sigs.total,
            args.limit
        );
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    check_workers(args.workers)?;
    let test = test_spec(&args.test)?;
    let (spec, data, (ds, target)) = match &args.data {
        Some(path) => {
            let input = DataArgs {
                data: path.clone(),
                target: args.target.clone().expect("clap enforces --target"),
                schema: None,
            };
            (None, Some(path.display().to_string()), load(&input)?)
        }
        None => {
            let spec: SyntheticSpec = match &args.spec {
                Some(p) => read_json(p)?,
                None => SyntheticSpec::default(),
            };
            let generated = generate_synthetic(&spec)?;
            (Some(spec), None, generated)
        }
    };
    let cfg = ProtocolConfig {
        reps: args.reps,
        seed: args.seed,
        alphas: args.alphas,
        max_ks: args.max_ks,
        kfolds: args.kfolds,
        signature_limit: args.signature_limit,
        workers: args.workers,
    };
    let protocol = run_protocol(&ds, &target, &cfg, test)?;
    let report = BenchReport {
        schema_version: SCHEMA_VERSION,
        spec,
        data,
        protocol,
    };
    if let Some(p) = &args.out {
        write_json(p, &report)?;
    }
    print!("{}", report::bench_summary(&report));
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let mut spec: SyntheticSpec = match &args.spec {
        Some(p) => read_json(p)?,
        None => SyntheticSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let (ds, target) = generate_synthetic::<f64>(&spec)?;
    if ds.index_of(&args.target_name).is_some() {
        return Err(config_error(format!(
            "target name '{}' clashes with a predictor",
            args.target_name
        )));
    }
    let file =
        File::create(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    let mut w = BufWriter::new(file);
    write_csv(&ds, &target, &args.target_name, &mut w)?;
    w.flush()?;
    Ok(())
}

fn exit_status(err: &anyhow::Error) -> u8 {
    let config = err.chain().any(|e| {
        e.downcast_ref::<ConfigError>().is_some()
            || e.downcast_ref::<ses_core::Error>()
                .is_some_and(|e| e.is_config())
    });
    if config {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Select(a) => cmd_select(a),
        Command::Cv(a) => cmd_cv(a),
        Command::Signatures(a) => cmd_signatures(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let msg: Vec<String> = err.chain().map(|e| e.to_string()).collect();
            eprintln!("error: {}", msg.join(": "));
            ExitCode::from(exit_status(&err))
        }
    }
}
