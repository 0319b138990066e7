//! Experiment wiring: datasets, models and training for each experiment kind.

use core::f64::consts::PI;

use qtl_core::data::{
    gen_feature_blobs, gen_linear_feature_task, gen_related_tasks, gen_spirals, random_teacher,
    BlobsConfig, Dataset, RelatedTasksConfig, SpiralsConfig,
};
use qtl_core::train::{train, TrainConfig, TrainTrace};
use qtl_core::transfer::{
    quantum_features, run_cq, run_qc, run_qq, truncate_quantum, CqPlan, QcPlan, QqPlan, QqReport,
};
use qtl_core::{Adam, BareCircuit, BareClassifier, ClassicalBaseline, DressedCircuit, Model};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::checkpoint::{load_checkpoint, Checkpoint, SavedModel};
use crate::config::{ModelChoice, RunConfig};
use crate::error::{Error, Result};
use crate::features::{load_feature_file, to_csv};
use crate::presets::{self, Experiment};

/// Sample counts of the synthetic QC task.
pub const QC_TRAIN: usize = 400;
pub const QC_TEST: usize = 200;

/// ChaCha stream reserved for model initialisation, apart from the
/// low-numbered streams that key the per-epoch shuffles.
const INIT_STREAM: u64 = u64::MAX;
const EXTRACTOR_STREAM: u64 = u64::MAX - 1;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn spirals_data(seed: u64) -> Result<(Dataset, Dataset)> {
    Ok(gen_spirals(&SpiralsConfig {
        seed,
        ..SpiralsConfig::default()
    })?)
}

/// Stand-in for 512-wide image features: unit-variance blobs whose means
/// differ by 1 in every coordinate.
pub fn cq_blobs(seed: u64) -> BlobsConfig {
    BlobsConfig {
        width: presets::CQ_WIDTH,
        n_train: presets::CQ_TRAIN,
        n_test: presets::CQ_TEST,
        separation: (presets::CQ_WIDTH as f64).sqrt(),
        sigma: 1.0,
        seed,
    }
}

pub fn spirals_model(
    choice: ModelChoice,
    n_qubits: usize,
    depth: usize,
    seed: u64,
) -> Result<SavedModel> {
    let mut rng = stream_rng(seed, INIT_STREAM);
    Ok(match choice {
        ModelChoice::Dressed => {
            SavedModel::Dressed(DressedCircuit::random(2, n_qubits, depth, 2, &mut rng)?)
        }
        ModelChoice::Baseline => {
            SavedModel::Baseline(ClassicalBaseline::spirals_baseline(&mut rng)?)
        }
    })
}

pub fn qq_plan(config: &RunConfig, iterations: usize) -> QqPlan {
    let mut pretrain = TrainConfig::new(
        presets::QQ_PRETRAIN_ITERATIONS,
        presets::QQ_PRETRAIN_BATCH,
        presets::QQ_PRETRAIN_LR,
        config.seed,
    );
    pretrain.eval_every = 0;
    let mut train = config.train_config(0);
    train.iterations = iterations;
    QqPlan {
        n_qubits: config.n_qubits,
        source_depth: presets::QQ_SOURCE_DEPTH,
        keep: config.keep.unwrap_or(presets::QQ_KEEP),
        total_depth: config.depth,
        pretrain,
        train,
    }
}

pub fn qq_tasks(n_qubits: usize, seed: u64) -> Result<((Dataset, Dataset), (Dataset, Dataset))> {
    let tasks = gen_related_tasks(&RelatedTasksConfig::new(n_qubits, seed))?;
    Ok((tasks.task_a, tasks.task_b))
}

/// Runs both QQ arms for one seed.
pub fn qq_report(config: &RunConfig) -> Result<QqReport> {
    let (a, b) = qq_tasks(config.n_qubits, config.seed)?;
    let plan = qq_plan(config, config.iterations(b.0.len()));
    Ok(run_qq((&a.0, &a.1), (&b.0, &b.1), &plan)?)
}

/// The frozen QC extractor: a loaded circuit truncated to `keep` layers, or
/// a random one drawn from the run seed.
pub fn qc_extractor(config: &RunConfig) -> Result<BareCircuit> {
    let full = match &config.checkpoint_in {
        Some(path) => match load_checkpoint(path)?.to_model()? {
            SavedModel::BareQq(m) => m.circuit,
            SavedModel::Dressed(m) => m.bare,
            SavedModel::Baseline(_) => {
                return Err(Error::Usage(
                    "a QC extractor must come from a quantum checkpoint".into(),
                ))
            }
        },
        None => random_teacher(
            config.n_qubits,
            config.depth,
            PI,
            &mut stream_rng(config.seed, EXTRACTOR_STREAM),
        )?,
    };
    let keep = config.keep.unwrap_or(full.depth());
    truncate_quantum(&full, keep).map_err(|e| Error::Usage(e.to_string()))
}

fn feature_pair(config: &RunConfig) -> Result<Option<(Dataset, Dataset)>> {
    match (&config.train_features, &config.test_features) {
        (Some(tr), Some(te)) => Ok(Some((load_feature_file(tr)?, load_feature_file(te)?))),
        _ => Ok(None),
    }
}

/// The raw (train, test) data an experiment trains on.
pub fn experiment_data(config: &RunConfig) -> Result<(Dataset, Dataset)> {
    if let Some(pair) = feature_pair(config)? {
        return Ok(pair);
    }
    match config.experiment {
        Experiment::Spirals => spirals_data(config.seed),
        Experiment::Cq => Ok(gen_feature_blobs(&cq_blobs(config.seed))?),
        Experiment::Qc => {
            let extractor = qc_extractor(config)?;
            let (train, test, _, _) =
                gen_linear_feature_task(&extractor, QC_TRAIN, QC_TEST, config.seed)?;
            Ok((train, test))
        }
        Experiment::Qq => Ok(qq_tasks(config.n_qubits, config.seed)?.1),
    }
}

/// The data a saved model of this experiment consumes: for QC, the
/// extractor's read-outs rather than the raw qubit inputs.
pub fn model_data(config: &RunConfig) -> Result<(Dataset, Dataset)> {
    let (train, test) = experiment_data(config)?;
    if config.experiment == Experiment::Qc {
        let extractor = qc_extractor(config)?;
        return Ok((
            quantum_features(&extractor, &train)?,
            quantum_features(&extractor, &test)?,
        ));
    }
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// The checkpointed model: best-evaluation parameters when the run keeps
    /// the best, otherwise the final ones.
    pub model: SavedModel,
    pub trace: TrainTrace,
    /// Optimiser state matching `model` (absent when `model` is a best copy).
    pub optimizer: Option<Adam>,
    /// Extra artefacts as (file name, contents).
    pub extra_files: Vec<(String, String)>,
}

fn check_width(config: &RunConfig, data: &Dataset, expected: usize) -> Result<()> {
    if data.width() != expected {
        return Err(Error::Usage(format!(
            "{:?} experiment expects feature width {expected}, file has {}",
            config.experiment,
            data.width()
        )));
    }
    Ok(())
}

fn finish(
    mut model: SavedModel,
    trace: TrainTrace,
    extra_files: Vec<(String, String)>,
) -> Result<TrainOutcome> {
    let optimizer = match &trace.best_params {
        Some(best) => {
            model.set_params(best)?;
            None
        }
        None => Some(trace.optimizer.clone()),
    };
    Ok(TrainOutcome {
        model,
        trace,
        optimizer,
        extra_files,
    })
}

pub fn run_train(config: &RunConfig) -> Result<TrainOutcome> {
    match config.experiment {
        Experiment::Spirals => {
            let (train_set, test_set) = experiment_data(config)?;
            let mut model =
                spirals_model(config.model, config.n_qubits, config.depth, config.seed)?;
            let trace = train(
                &mut model,
                &train_set,
                Some(&test_set),
                &config.train_config(train_set.len()),
            )?;
            finish(model, trace, Vec::new())
        }
        Experiment::Cq => {
            let (train_set, test_set) = experiment_data(config)?;
            let width = train_set.width();
            if test_set.width() != width {
                return Err(Error::Usage(format!(
                    "train features are {width} wide, test features {}",
                    test_set.width()
                )));
            }
            let plan = CqPlan {
                feature_width: width,
                n_qubits: config.n_qubits,
                depth: config.depth,
                n_classes: train_set.n_classes().max(test_set.n_classes()),
                train: config.train_config(train_set.len()),
            };
            let report = run_cq(&train_set, &test_set, &plan)?;
            finish(SavedModel::Dressed(report.model), report.trace, Vec::new())
        }
        Experiment::Qc => {
            let extractor = qc_extractor(config)?;
            let (train_set, test_set) = experiment_data(config)?;
            check_width(config, &train_set, extractor.n_qubits())?;
            check_width(config, &test_set, extractor.n_qubits())?;
            let plan = QcPlan {
                head_depths: vec![config.head_depth],
                train: config.train_config(train_set.len()),
            };
            let mut report = run_qc(&extractor, &train_set, &test_set, &plan)?;
            let row = report.rows.remove(0);
            let frozen = BareClassifier::new(extractor.clone(), vec![true; extractor.depth()])?;
            let extractor_ckpt =
                Checkpoint::from_model(&SavedModel::BareQq(frozen), config.seed, None);
            let extra = vec![
                ("extractor.ckpt.json".to_owned(), extractor_ckpt.to_json()),
                (
                    "train-features.csv".to_owned(),
                    to_csv(&quantum_features(&extractor, &train_set)?),
                ),
                (
                    "test-features.csv".to_owned(),
                    to_csv(&quantum_features(&extractor, &test_set)?),
                ),
            ];
            finish(SavedModel::Baseline(row.head), row.trace, extra)
        }
        Experiment::Qq => {
            let report = qq_report(config)?;
            let source = BareClassifier::trainable(report.source.clone());
            let source_ckpt =
                Checkpoint::from_model(&SavedModel::BareQq(source), config.seed, None);
            finish(
                SavedModel::BareQq(report.transfer_model),
                report.transfer,
                vec![("source.ckpt.json".to_owned(), source_ckpt.to_json())],
            )
        }
    }
}
