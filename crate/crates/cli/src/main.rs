//! `bench`: fit and apply single models, generate synthetic data, run
//! nested-CV benchmarks and rebuild reports from raw results.
//!
//! Exit codes: 0 success, 1 runtime failure (including any failed
//! dataset/model pair in `bench`), 2 usage error.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use smoothreg::data::{load_csv, read_feature_csv, subsample, write_csv, MedianImputer};
use smoothreg::harness::{build_report, read_results, run_bench, tune, BenchConfig, RandomSearch, SearchSpace};
use smoothreg::model::{fit_model, ModelDocument, ModelKind, ParamValue, TrialParams};
use smoothreg::synth::{gen, SynthKind, SynthSpec};

#[derive(Parser)]
#[command(name = "bench", version, about = "Smooth-basis regression models and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model on a CSV file and write it as JSON.
    Fit(FitArgs),
    /// Predict with a saved model.
    Predict(PredictArgs),
    /// Generate a synthetic dataset as CSV.
    Gen(GenArgs),
    /// Run a benchmark described by a TOML config.
    Bench(BenchArgs),
    /// Rebuild the report from a results file.
    Report(ReportArgs),
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: smoothreg::Error| e.to_string())
}

fn parse_synth(s: &str) -> Result<SynthKind, String> {
    s.parse().map_err(|e: smoothreg::Error| e.to_string())
}

fn parse_param(s: &str) -> Result<(String, ParamValue), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got '{s}'"))?;
    Ok((k.trim().to_string(), ParamValue::parse(v.trim())))
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, value_parser = parse_model)]
    model: ModelKind,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    target: String,
    /// Hyperparameter as key=value; repeatable.
    #[arg(long = "param", value_parser = parse_param, conflicts_with = "tune")]
    params: Vec<(String, ParamValue)>,
    /// Choose hyperparameters by inner-CV random search.
    #[arg(long)]
    tune: bool,
    /// Trial budget for --tune (default: the model's standard budget).
    #[arg(long, requires = "tune")]
    budget: Option<usize>,
    /// Seed for stochastic models and the search.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    max_samples: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Model file written by `fit`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_parser = parse_synth)]
    kind: SynthKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Noise standard deviation (default depends on the kind).
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, default_value = "y")]
    target: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's results path.
    #[arg(long)]
    results: Option<PathBuf>,
    /// Overrides the config's report directory.
    #[arg(long)]
    report_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    results: PathBuf,
    /// Comma-separated subset of models, in column order.
    #[arg(long, value_delimiter = ',', value_parser = parse_model)]
    models: Vec<ModelKind>,
    #[arg(long)]
    out_dir: PathBuf,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let mut ds = load_csv(&args.data, &args.target).with_context(|| format!("loading {}", args.data.display()))?;
    if let Some(max) = args.max_samples {
        ds = subsample(&ds, max, args.seed)?;
    }
    let params: TrialParams = if args.tune {
        let space = SearchSpace::for_model(args.model);
        let budget = args.budget.unwrap_or(space.trial_budget);
        let outcome = tune(&ds, args.model, &space, budget, args.seed, args.seed, &mut RandomSearch::new(args.seed))?;
        eprintln!("best inner-CV R² {:.4} after {budget} trials", outcome.best_score);
        outcome.best
    } else {
        args.params.into_iter().collect()
    };
    let imputer = if ds.has_missing() { Some(MedianImputer::fit(ds.features())?) } else { None };
    let train = match &imputer {
        Some(imp) => ds.with_features(imp.apply(ds.features())?)?,
        None => ds.clone(),
    };
    let model = fit_model(args.model, &train, &params, args.seed)?;
    let mut doc = ModelDocument::new(model, ds.feature_names().to_vec(), args.target, params);
    if let Some(imp) = imputer {
        doc = doc.with_imputer(imp);
    }
    doc.save(&args.out)?;
    eprintln!("wrote {} model to {}", args.model, args.out.display());
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let doc = ModelDocument::load(&args.model).with_context(|| format!("loading {}", args.model.display()))?;
    let file = File::open(&args.data).with_context(|| format!("opening {}", args.data.display()))?;
    let x = read_feature_csv(BufReader::new(file), &doc.feature_names)?;
    let preds = doc.predict(&x)?;
    let sink: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["prediction"])?;
    for p in preds {
        // Shortest round-trip formatting keeps values bit-exact.
        w.write_record([p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let mut spec = SynthSpec::new(args.kind, args.n, args.seed);
    spec.noise_std = args.noise;
    let ds = gen(&spec)?;
    write_csv(&ds, &args.target, create(&args.out)?)?;
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let mut cfg = BenchConfig::load(&args.config).with_context(|| format!("reading config {}", args.config.display()))?;
    if args.results.is_some() {
        cfg.output.results = args.results;
    }
    if args.report_dir.is_some() {
        cfg.output.report_dir = args.report_dir;
    }
    let outcome = run_bench(&cfg, &mut |line| eprintln!("{line}"))?;
    outcome.write(&cfg.output)?;
    let failed = outcome.failed_pairs();
    if !failed.is_empty() {
        bail!("{} dataset/model pair(s) failed", failed.len());
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let file = File::open(&args.results).with_context(|| format!("opening {}", args.results.display()))?;
    let records = read_results(BufReader::new(file))?;
    let filter = (!args.models.is_empty()).then_some(args.models.as_slice());
    let report = build_report(&records, filter)?;
    report.write_to_dir(&args.out_dir)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
