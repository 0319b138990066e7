//! Named hyper-parameter sets for the reference experiments.

use qtl_core::nn::StepDecay;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Experiment {
    /// Dressed circuit on the two-spirals benchmark.
    Spirals,
    /// Dressed circuit head on pre-extracted classical features.
    Cq,
    /// Classical head on a frozen quantum feature extractor.
    Qc,
    /// Truncated pre-trained circuit extended with fresh layers.
    Qq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    Iterations(usize),
    Epochs(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub experiment: Experiment,
    pub n_qubits: usize,
    /// Quantum depth (extractor depth for QC, total depth for QQ).
    pub depth: usize,
    pub budget: Budget,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub decay: Option<StepDecay>,
    /// Evaluation period in iterations; `None` evaluates once per epoch.
    pub eval_every: Option<usize>,
    pub keep_best: bool,
}

pub const PRESETS: [Preset; 6] = [
    Preset {
        name: "spirals",
        experiment: Experiment::Spirals,
        n_qubits: 4,
        depth: 5,
        budget: Budget::Iterations(1000),
        batch_size: 10,
        learning_rate: 0.02,
        decay: None,
        eval_every: Some(100),
        keep_best: false,
    },
    Preset {
        name: "ants-bees",
        experiment: Experiment::Cq,
        n_qubits: 4,
        depth: 6,
        budget: Budget::Epochs(30),
        batch_size: 4,
        learning_rate: 0.0004,
        decay: Some(StepDecay {
            factor: 0.1,
            every_epochs: 10,
        }),
        eval_every: None,
        keep_best: true,
    },
    Preset {
        name: "dogs-cats",
        experiment: Experiment::Cq,
        n_qubits: 4,
        depth: 5,
        budget: Budget::Epochs(3),
        batch_size: 8,
        learning_rate: 0.001,
        decay: None,
        eval_every: None,
        keep_best: true,
    },
    Preset {
        name: "planes-cars",
        experiment: Experiment::Cq,
        n_qubits: 4,
        depth: 4,
        budget: Budget::Epochs(3),
        batch_size: 8,
        learning_rate: 0.0007,
        decay: None,
        eval_every: None,
        keep_best: true,
    },
    Preset {
        name: "qc",
        experiment: Experiment::Qc,
        n_qubits: 4,
        depth: 3,
        budget: Budget::Iterations(1000),
        batch_size: 7,
        learning_rate: 0.01,
        decay: None,
        eval_every: Some(100),
        keep_best: false,
    },
    Preset {
        name: "qq",
        experiment: Experiment::Qq,
        n_qubits: 4,
        depth: 4,
        budget: Budget::Iterations(500),
        batch_size: 8,
        learning_rate: 0.01,
        decay: None,
        eval_every: Some(25),
        keep_best: false,
    },
];

/// Pre-training schedule and truncation used by the QQ experiment.
pub const QQ_SOURCE_DEPTH: usize = 2;
pub const QQ_KEEP: usize = 2;
pub const QQ_PRETRAIN_ITERATIONS: usize = 600;
pub const QQ_PRETRAIN_BATCH: usize = 8;
pub const QQ_PRETRAIN_LR: f64 = 0.05;

/// Synthetic stand-in for 512-wide image features.
pub const CQ_WIDTH: usize = 512;
pub const CQ_TRAIN: usize = 245;
pub const CQ_TEST: usize = 153;

pub fn preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

pub fn default_preset(experiment: Experiment) -> &'static Preset {
    PRESETS
        .iter()
        .find(|p| p.experiment == experiment)
        .expect("every experiment has a preset")
}

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.name).collect()
}
