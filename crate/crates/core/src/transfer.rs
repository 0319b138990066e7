//! Transfer learning across the classical/quantum boundary.
//!
//! Every scheme follows the same recipe: take a network pre-trained on a
//! generic task, cut off its final layers, freeze what is left, attach a
//! trainable block and train only that block on the new task.
//!
//! * CQ: the frozen extractor is classical and external; its outputs arrive
//!   as feature vectors and a dressed quantum circuit is trained on them.
//! * QC: a truncated, frozen quantum circuit produces Z read-outs that feed a
//!   trainable classical head.
//! * QQ: a truncated, frozen quantum circuit is extended with fresh
//!   variational layers, compared against an equal-depth circuit trained
//!   from scratch.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::BareCircuit;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{BareClassifier, ClassicalBaseline, DressedCircuit, Model};
use crate::nn::{Activation, DenseLayer};
use crate::train::{train, TrainConfig, TrainTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    ClassicalToQuantum,
    QuantumToClassical,
    QuantumToQuantum,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::ClassicalToQuantum => "CQ",
            Scheme::QuantumToClassical => "QC",
            Scheme::QuantumToQuantum => "QQ",
        })
    }
}

/// Keeps the first `keep` variational layers of `circuit`.
pub fn truncate_quantum(circuit: &BareCircuit, keep: usize) -> Result<BareCircuit> {
    if keep > circuit.depth() {
        return Err(Error::Range(format!(
            "cannot keep {keep} layers of a depth-{} circuit",
            circuit.depth()
        )));
    }
    BareCircuit::new(
        circuit.n_qubits(),
        keep,
        circuit.weights()[..keep * circuit.n_qubits()].to_vec(),
    )
}

/// `frozen`'s layers (all frozen) followed by `trainable_depth` fresh layers.
pub fn compose_qq<R: Rng + ?Sized>(
    frozen: &BareCircuit,
    trainable_depth: usize,
    rng: &mut R,
) -> Result<BareClassifier> {
    let base = BareClassifier::new(frozen.clone(), vec![true; frozen.depth()])?;
    base.with_fresh_rows(trainable_depth, rng)
}

/// Same as [`compose_qq`], rejecting a frozen block of the wrong width.
pub fn compose_qq_checked<R: Rng + ?Sized>(
    frozen: &BareCircuit,
    n_qubits: usize,
    trainable_depth: usize,
    rng: &mut R,
) -> Result<BareClassifier> {
    if frozen.n_qubits() != n_qubits {
        return Err(Error::Arity {
            expected: n_qubits,
            got: frozen.n_qubits(),
        });
    }
    compose_qq(frozen, trainable_depth, rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CqPlan {
    /// Width the dressed circuit's pre-layer expects.
    pub feature_width: usize,
    pub n_qubits: usize,
    pub depth: usize,
    pub n_classes: usize,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CqReport {
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub best_test_accuracy: f64,
    pub trace: TrainTrace,
    pub model: DressedCircuit,
}

fn check_width(data: &Dataset, width: usize, what: &str) -> Result<()> {
    if data.width() != width {
        return Err(Error::Dataset(format!(
            "{what} has feature width {}, pre-layer expects {width}",
            data.width()
        )));
    }
    Ok(())
}

/// Trains a dressed circuit head on pre-extracted classical features.
pub fn run_cq(train_set: &Dataset, test_set: &Dataset, plan: &CqPlan) -> Result<CqReport> {
    check_width(train_set, plan.feature_width, "training set")?;
    check_width(test_set, plan.feature_width, "test set")?;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.train.seed);
    let mut model = DressedCircuit::random(
        plan.feature_width,
        plan.n_qubits,
        plan.depth,
        plan.n_classes,
        &mut rng,
    )?;
    let trace = train(&mut model, train_set, Some(test_set), &plan.train)?;
    Ok(CqReport {
        train_accuracy: model.accuracy(train_set)?,
        test_accuracy: trace.final_accuracy,
        best_test_accuracy: trace.best_accuracy,
        trace,
        model,
    })
}

/// Classical head of `depth` layers on `width` features: `depth − 1` tanh
/// layers of width `width`, then a linear layer to `n_classes`.
pub fn classical_head<R: Rng + ?Sized>(
    width: usize,
    depth: usize,
    n_classes: usize,
    rng: &mut R,
) -> Result<ClassicalBaseline> {
    if depth == 0 {
        return Err(Error::Config("head depth must be >= 1".into()));
    }
    let mut layers = Vec::with_capacity(depth);
    for _ in 1..depth {
        layers.push(DenseLayer::random(width, width, Activation::Tanh, rng)?);
    }
    layers.push(DenseLayer::random(
        width,
        n_classes,
        Activation::Identity,
        rng,
    )?);
    ClassicalBaseline::new(layers)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QcPlan {
    pub head_depths: Vec<usize>,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QcRow {
    pub head_depth: usize,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub trace: TrainTrace,
    pub head: ClassicalBaseline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QcReport {
    pub extractor: BareCircuit,
    pub rows: Vec<QcRow>,
}

/// Measured Z read-outs of `extractor` for every row of `data`.
pub fn quantum_features(extractor: &BareCircuit, data: &Dataset) -> Result<Dataset> {
    data.map_rows(|x| extractor.run(x))
}

/// Trains one classical head per entry of `plan.head_depths` on the
/// features of a frozen quantum extractor.
pub fn run_qc(
    extractor: &BareCircuit,
    train_set: &Dataset,
    test_set: &Dataset,
    plan: &QcPlan,
) -> Result<QcReport> {
    let train_features = quantum_features(extractor, train_set)?;
    let test_features = quantum_features(extractor, test_set)?;
    let width = extractor.n_qubits();
    let mut rows = Vec::with_capacity(plan.head_depths.len());
    for &depth in &plan.head_depths {
        let mut rng = ChaCha8Rng::seed_from_u64(plan.train.seed);
        let mut head = classical_head(width, depth, train_set.n_classes(), &mut rng)?;
        let trace = train(
            &mut head,
            &train_features,
            Some(&test_features),
            &plan.train,
        )?;
        rows.push(QcRow {
            head_depth: depth,
            train_accuracy: head.accuracy(&train_features)?,
            test_accuracy: trace.final_accuracy,
            trace,
            head,
        });
    }
    Ok(QcReport {
        extractor: extractor.clone(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QqPlan {
    pub n_qubits: usize,
    /// Depth of the circuit pre-trained on task A.
    pub source_depth: usize,
    /// Layers of the pre-trained circuit kept (and frozen) for task B.
    pub keep: usize,
    /// Depth of both task-B circuits.
    pub total_depth: usize,
    pub pretrain: TrainConfig,
    pub train: TrainConfig,
}

impl QqPlan {
    pub fn validate(&self) -> Result<()> {
        if self.keep > self.source_depth {
            return Err(Error::Range(format!(
                "keep {} exceeds source depth {}",
                self.keep, self.source_depth
            )));
        }
        if self.keep > self.total_depth {
            return Err(Error::Range(format!(
                "keep {} exceeds total depth {}",
                self.keep, self.total_depth
            )));
        }
        Ok(())
    }

    pub fn total_params(&self) -> usize {
        self.total_depth * self.n_qubits
    }

    pub fn frozen_params(&self) -> usize {
        self.keep * self.n_qubits
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QqReport {
    pub source: BareCircuit,
    pub source_accuracy: f64,
    pub transfer: TrainTrace,
    pub scratch: TrainTrace,
    pub transfer_model: BareClassifier,
    pub scratch_model: BareClassifier,
}

impl QqReport {
    pub fn transfer_trainable(&self) -> usize {
        self.transfer_model.n_trainable()
    }

    pub fn scratch_trainable(&self) -> usize {
        self.scratch_model.n_trainable()
    }

    /// First iteration after which the scratch arm's loss is at or below
    /// the transfer arm's for the rest of the run.
    pub fn crossover_iteration(&self) -> Option<usize> {
        let t = &self.transfer.records;
        let s = &self.scratch.records;
        let n = t.len().min(s.len());
        let mut crossover = None;
        for i in (0..n).rev() {
            if s[i].train_loss <= t[i].train_loss {
                crossover = Some(t[i].iteration);
            } else {
                break;
            }
        }
        crossover
    }
}

// Independent ChaCha streams keyed by the run seed, one per random role.
const STREAM_SOURCE: u64 = 1;
const STREAM_FRESH: u64 = 2;

fn role_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Pre-trains on task A, then trains a truncated-and-extended circuit and a
/// from-scratch circuit of equal depth on task B with the same batch stream.
pub fn run_qq(
    task_a: (&Dataset, &Dataset),
    task_b: (&Dataset, &Dataset),
    plan: &QqPlan,
) -> Result<QqReport> {
    plan.validate()?;
    let mut source_rng = role_rng(plan.pretrain.seed, STREAM_SOURCE);
    let mut source = BareClassifier::random(plan.n_qubits, plan.source_depth, &mut source_rng)?;
    train(&mut source, task_a.0, Some(task_a.1), &plan.pretrain)?;
    let source_accuracy = source.accuracy(task_a.1)?;

    let kept = truncate_quantum(&source.circuit, plan.keep)?;
    let fresh_depth = plan.total_depth - plan.keep;

    // Both arms draw their fresh layers from the same stream, so the
    // scratch arm's first rows coincide with the transfer arm's new rows.
    let mut fresh_rng = role_rng(plan.train.seed, STREAM_FRESH);
    let mut transfer_model = compose_qq(&kept, fresh_depth, &mut fresh_rng)?;
    let mut scratch_rng = role_rng(plan.train.seed, STREAM_FRESH);
    let mut scratch_model =
        BareClassifier::random(plan.n_qubits, plan.total_depth, &mut scratch_rng)?;

    let transfer = train(&mut transfer_model, task_b.0, Some(task_b.1), &plan.train)?;
    let scratch = train(&mut scratch_model, task_b.0, Some(task_b.1), &plan.train)?;

    Ok(QqReport {
        source: source.circuit,
        source_accuracy,
        transfer,
        scratch,
        transfer_model,
        scratch_model,
    })
}
