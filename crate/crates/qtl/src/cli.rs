//! Command-line interface.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use qtl_core::data::{gen_feature_blobs, gen_spirals, BlobsConfig, Dataset, SpiralsConfig};
use qtl_core::Model;

use crate::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use crate::config::{ModelChoice, Overrides, RunConfig};
use crate::error::{Error, Result};
use crate::experiments;
use crate::features::{load_feature_file, save_feature_file};
use crate::output::{self, EvalReport};
use crate::presets::Experiment;

#[derive(Debug, Parser)]
#[command(
    name = "qtl",
    version,
    about = "Hybrid classical-quantum transfer learning experiments"
)]
pub struct Cli {
    /// Seed for data generation, initialisation and batch order.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Named hyper-parameter set: spirals, ants-bees, dogs-cats, planes-cars, qc, qq.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model; writes metrics.csv and model.ckpt.json.
    Train(TrainArgs),
    /// Accuracy of a checkpoint on a feature file or a preset's data; writes eval.json.
    Eval(EvalArgs),
    /// Predicted class on a square lattice for a 2-input model; writes decision_region.csv.
    DecisionRegion(RegionArgs),
    /// Transfer vs from-scratch QQ training; writes transfer.csv, scratch.csv, summary.json.
    QqCompare(QqArgs),
    /// Synthetic Gaussian feature blobs as feature files.
    GenFeatures(FeatureArgs),
    /// Two-spirals train/test split as feature files.
    GenSpirals(SpiralArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub experiment: Option<Experiment>,
    /// Spirals model: the dressed circuit or the classical baseline.
    #[arg(long, value_enum)]
    pub model: Option<ModelChoice>,
    #[arg(long)]
    pub qubits: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub head_depth: Option<usize>,
    /// Pre-trained layers kept (QQ source, QC extractor).
    #[arg(long)]
    pub keep: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub decay_factor: Option<f64>,
    #[arg(long)]
    pub decay_every: Option<usize>,
    #[arg(long)]
    pub eval_every: Option<usize>,
    #[arg(long)]
    pub keep_best: Option<bool>,
    #[arg(long)]
    pub train_features: Option<PathBuf>,
    #[arg(long)]
    pub test_features: Option<PathBuf>,
    /// Pre-trained circuit for the QC extractor.
    #[arg(long)]
    pub checkpoint_in: Option<PathBuf>,
}

impl TrainArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            experiment: self.experiment,
            model: self.model,
            n_qubits: self.qubits,
            depth: self.depth,
            head_depth: self.head_depth,
            keep: self.keep,
            iterations: self.iterations,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.lr,
            decay_factor: self.decay_factor,
            decay_every: self.decay_every,
            eval_every: self.eval_every,
            keep_best: self.keep_best,
            train_features: self.train_features.clone(),
            test_features: self.test_features.clone(),
            checkpoint_in: self.checkpoint_in.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Split {
    Train,
    #[default]
    Test,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Feature file to evaluate on; otherwise the preset's data is regenerated.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Split::Test)]
    pub split: Split,
    #[arg(long, value_enum)]
    pub experiment: Option<Experiment>,
    #[arg(long)]
    pub qubits: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub keep: Option<usize>,
    /// Pre-trained circuit for the QC extractor.
    #[arg(long)]
    pub checkpoint_in: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = -1.2, allow_hyphen_values = true)]
    pub min: f64,
    #[arg(long, default_value_t = 1.2, allow_hyphen_values = true)]
    pub max: f64,
    #[arg(long, default_value_t = 101)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct QqArgs {
    /// Number of consecutive seeds starting at --seed.
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,
    #[arg(long)]
    pub qubits: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub keep: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub eval_every: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FeatureArgs {
    #[arg(long, default_value_t = crate::presets::CQ_WIDTH)]
    pub width: usize,
    #[arg(long, default_value_t = crate::presets::CQ_TRAIN)]
    pub n_train: usize,
    #[arg(long, default_value_t = crate::presets::CQ_TEST)]
    pub n_test: usize,
    /// Distance between class means (default √width).
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
}

#[derive(Debug, Args)]
pub struct SpiralArgs {
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    #[arg(long)]
    pub turns: Option<f64>,
    #[arg(long)]
    pub noise: Option<f64>,
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    output::ensure_dir(&cli.out)?;
    match &cli.command {
        Command::Train(args) => cmd_train(cli, args),
        Command::Eval(args) => cmd_eval(cli, args),
        Command::DecisionRegion(args) => cmd_decision_region(cli, args),
        Command::QqCompare(args) => cmd_qq_compare(cli, args),
        Command::GenFeatures(args) => cmd_gen_features(cli, args),
        Command::GenSpirals(args) => cmd_gen_spirals(cli, args),
    }
}

fn shown(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

fn input_checkpoint(path: &Path) -> Result<Checkpoint> {
    if !path.is_file() {
        return Err(Error::Usage(format!(
            "checkpoint {} does not exist",
            path.display()
        )));
    }
    Ok(load_checkpoint(path)?)
}

fn cmd_train(cli: &Cli, args: &TrainArgs) -> Result<()> {
    let config = RunConfig::resolve(
        cli.preset.as_deref(),
        args.overrides(),
        cli.seed,
        cli.out.clone(),
    )?;
    let outcome = experiments::run_train(&config)?;
    let ckpt = Checkpoint::from_model(&outcome.model, config.seed, outcome.optimizer.as_ref());
    output::write_file(
        &cli.out,
        "metrics.csv",
        &output::metrics_csv(&outcome.trace),
    )?;
    save_checkpoint(&ckpt, &cli.out.join("model.ckpt.json"))?;
    for (name, contents) in &outcome.extra_files {
        output::write_file(&cli.out, name, contents)?;
    }
    let trace = &outcome.trace;
    println!(
        "{:?} experiment (preset {}), seed {}, {} iterations",
        config.experiment,
        config.preset,
        config.seed,
        trace.records.len() - 1
    );
    println!("final test accuracy: {:.4}", trace.final_accuracy);
    println!(
        "best test accuracy: {:.4} (iteration {})",
        trace.best_accuracy, trace.best_iteration
    );
    println!(
        "checkpoint holds the {} parameters: {}",
        if trace.best_params.is_some() {
            "best"
        } else {
            "final"
        },
        shown(&cli.out, "model.ckpt.json")
    );
    Ok(())
}

fn eval_dataset(cli: &Cli, args: &EvalArgs) -> Result<(Dataset, String)> {
    if let Some(path) = &args.features {
        return Ok((load_feature_file(path)?, path.display().to_string()));
    }
    if cli.preset.is_none() && args.experiment.is_none() {
        return Err(Error::Usage(
            "eval needs --features, --preset or --experiment".into(),
        ));
    }
    let overrides = Overrides {
        experiment: args.experiment,
        n_qubits: args.qubits,
        depth: args.depth,
        keep: args.keep,
        checkpoint_in: args.checkpoint_in.clone(),
        ..Overrides::default()
    };
    let config = RunConfig::resolve(cli.preset.as_deref(), overrides, cli.seed, cli.out.clone())?;
    let (train, test) = experiments::model_data(&config)?;
    let split = match args.split {
        Split::Train => "train",
        Split::Test => "test",
    };
    let name = format!("{}:{split}:seed={}", config.preset, config.seed);
    Ok((
        if args.split == Split::Train {
            train
        } else {
            test
        },
        name,
    ))
}

fn cmd_eval(cli: &Cli, args: &EvalArgs) -> Result<()> {
    let ckpt = input_checkpoint(&args.checkpoint)?;
    let model = ckpt.to_model()?;
    let (data, name) = eval_dataset(cli, args)?;
    if data.width() != model.input_width() {
        return Err(Error::Usage(format!(
            "dataset {name} has {} features per row but the {} model takes {}",
            data.width(),
            ckpt.model_kind.name(),
            model.input_width()
        )));
    }
    let mut correct = 0;
    for (x, label) in data.rows() {
        if model.predict(x)? == label {
            correct += 1;
        }
    }
    let accuracy = correct as f64 / data.len() as f64;
    let report = EvalReport {
        format_version: output::REPORT_FORMAT_VERSION,
        checkpoint: args.checkpoint.display().to_string(),
        model_kind: ckpt.model_kind.name().to_owned(),
        dataset: name,
        n_samples: data.len(),
        correct,
        accuracy,
    };
    output::write_file(&cli.out, "eval.json", &output::to_json(&report))?;
    println!("accuracy: {accuracy:.4} ({correct}/{})", data.len());
    Ok(())
}

fn cmd_decision_region(cli: &Cli, args: &RegionArgs) -> Result<()> {
    if !(args.min.is_finite() && args.max.is_finite()) || args.min > args.max || args.steps == 0 {
        return Err(Error::Usage(
            "grid needs finite min <= max and steps >= 1".into(),
        ));
    }
    let model = input_checkpoint(&args.checkpoint)?.to_model()?;
    let csv = output::decision_region_csv(&model, args.min, args.max, args.steps)?;
    output::write_file(&cli.out, "decision_region.csv", &csv)?;
    println!(
        "wrote {} ({} points)",
        shown(&cli.out, "decision_region.csv"),
        args.steps * args.steps
    );
    Ok(())
}

fn cmd_qq_compare(cli: &Cli, args: &QqArgs) -> Result<()> {
    if args.seeds == 0 {
        return Err(Error::Usage("--seeds must be >= 1".into()));
    }
    let overrides = Overrides {
        experiment: Some(Experiment::Qq),
        n_qubits: args.qubits,
        depth: args.depth,
        keep: args.keep,
        iterations: args.iterations,
        batch_size: args.batch_size,
        learning_rate: args.lr,
        eval_every: args.eval_every,
        ..Overrides::default()
    };
    let base = RunConfig::resolve(cli.preset.as_deref(), overrides, cli.seed, cli.out.clone())?;
    let mut runs = Vec::with_capacity(args.seeds);
    for offset in 0..args.seeds as u64 {
        let seed = base
            .seed
            .checked_add(offset)
            .ok_or_else(|| Error::Usage("seed range overflows".into()))?;
        let config = RunConfig {
            seed,
            ..base.clone()
        };
        runs.push((seed, experiments::qq_report(&config)?));
    }
    let iterations = runs[0].1.transfer.records.len() - 1;
    for (i, (seed, report)) in runs.iter().enumerate() {
        let transfer = output::metrics_csv(&report.transfer);
        let scratch = output::metrics_csv(&report.scratch);
        if i == 0 {
            output::write_file(&cli.out, "transfer.csv", &transfer)?;
            output::write_file(&cli.out, "scratch.csv", &scratch)?;
        }
        if args.seeds > 1 {
            output::write_file(&cli.out, &format!("transfer-seed{seed}.csv"), &transfer)?;
            output::write_file(&cli.out, &format!("scratch-seed{seed}.csv"), &scratch)?;
        }
    }
    let summary = output::qq_summary(iterations, &runs);
    output::write_file(&cli.out, "summary.json", &output::to_json(&summary))?;
    for run in &summary.runs {
        println!(
            "seed {}: loss at {:?} transfer {:?} scratch {:?}",
            run.seed, summary.checkpoints, run.transfer_loss, run.scratch_loss
        );
    }
    if let Some(m) = &summary.median {
        println!(
            "median loss at iteration {}: transfer {:.4}, scratch {:.4}",
            m.iteration, m.transfer_loss, m.scratch_loss
        );
    }
    Ok(())
}

fn cmd_gen_features(cli: &Cli, args: &FeatureArgs) -> Result<()> {
    let config = BlobsConfig {
        width: args.width,
        n_train: args.n_train,
        n_test: args.n_test,
        separation: args.separation.unwrap_or((args.width as f64).sqrt()),
        sigma: args.sigma,
        seed: cli.seed,
    };
    let (train, test) = gen_feature_blobs(&config)?;
    save_feature_file(&train, &cli.out.join("features-train.csv"))?;
    save_feature_file(&test, &cli.out.join("features-test.csv"))?;
    println!(
        "wrote {} and {}",
        shown(&cli.out, "features-train.csv"),
        shown(&cli.out, "features-test.csv")
    );
    Ok(())
}

fn cmd_gen_spirals(cli: &Cli, args: &SpiralArgs) -> Result<()> {
    let d = SpiralsConfig::default();
    let config = SpiralsConfig {
        n_train: args.n_train.unwrap_or(d.n_train),
        n_test: args.n_test.unwrap_or(d.n_test),
        turns: args.turns.unwrap_or(d.turns),
        noise_sigma: args.noise.unwrap_or(d.noise_sigma),
        seed: cli.seed,
    };
    let (train, test) = gen_spirals(&config)?;
    save_feature_file(&train, &cli.out.join("spirals-train.csv"))?;
    save_feature_file(&test, &cli.out.join("spirals-test.csv"))?;
    println!(
        "wrote {} and {}",
        shown(&cli.out, "spirals-train.csv"),
        shown(&cli.out, "spirals-test.csv")
    );
    Ok(())
}
