//! Run configuration: a preset plus command-line overrides, validated before
//! anything is trained.

use std::path::PathBuf;

use qtl_core::nn::StepDecay;
use qtl_core::simulator::MAX_QUBITS;
use qtl_core::train::TrainConfig;

use crate::presets::{self, Budget, Experiment, Preset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum ModelChoice {
    #[default]
    Dressed,
    Baseline,
}

/// Values given explicitly on the command line; `None` keeps the preset's.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub experiment: Option<Experiment>,
    pub model: Option<ModelChoice>,
    pub n_qubits: Option<usize>,
    pub depth: Option<usize>,
    pub head_depth: Option<usize>,
    pub keep: Option<usize>,
    pub iterations: Option<usize>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub decay_factor: Option<f64>,
    pub decay_every: Option<usize>,
    pub eval_every: Option<usize>,
    pub keep_best: Option<bool>,
    pub train_features: Option<PathBuf>,
    pub test_features: Option<PathBuf>,
    pub checkpoint_in: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: &'static str,
    pub experiment: Experiment,
    pub model: ModelChoice,
    pub n_qubits: usize,
    pub depth: usize,
    /// Classical head depth (QC).
    pub head_depth: usize,
    /// Pre-trained layers kept: QQ source layers, or QC extractor layers.
    pub keep: Option<usize>,
    pub budget: Budget,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub decay: Option<StepDecay>,
    pub eval_every: Option<usize>,
    pub keep_best: bool,
    pub seed: u64,
    pub train_features: Option<PathBuf>,
    pub test_features: Option<PathBuf>,
    pub checkpoint_in: Option<PathBuf>,
    pub out_dir: PathBuf,
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("invalid configuration: {0}")]
pub struct ConfigError(pub String);

impl RunConfig {
    pub fn resolve(
        preset_name: Option<&str>,
        overrides: Overrides,
        seed: u64,
        out_dir: PathBuf,
    ) -> Result<Self, ConfigError> {
        let preset: &'static Preset = match (preset_name, overrides.experiment) {
            (Some(name), _) => presets::preset(name).ok_or_else(|| {
                ConfigError(format!(
                    "unknown preset {name:?} (known: {})",
                    presets::names().join(", ")
                ))
            })?,
            (None, Some(e)) => presets::default_preset(e),
            (None, None) => presets::default_preset(Experiment::Spirals),
        };
        if let Some(e) = overrides.experiment {
            if e != preset.experiment {
                return Err(ConfigError(format!(
                    "preset {} runs the {:?} experiment, not {e:?}",
                    preset.name, preset.experiment
                )));
            }
        }
        let budget = match (overrides.iterations, overrides.epochs) {
            (Some(_), Some(_)) => {
                return Err(ConfigError(
                    "give --iterations or --epochs, not both".into(),
                ))
            }
            (Some(i), None) => Budget::Iterations(i),
            (None, Some(e)) => Budget::Epochs(e),
            (None, None) => preset.budget,
        };
        let decay = match (overrides.decay_factor, overrides.decay_every) {
            (None, None) => preset.decay,
            (factor, every) => Some(StepDecay {
                factor: factor.or(preset.decay.map(|d| d.factor)).unwrap_or(0.1),
                every_epochs: every.or(preset.decay.map(|d| d.every_epochs)).unwrap_or(10),
            }),
        };
        let config = Self {
            preset: preset.name,
            experiment: preset.experiment,
            model: overrides.model.unwrap_or_default(),
            n_qubits: overrides.n_qubits.unwrap_or(preset.n_qubits),
            depth: overrides.depth.unwrap_or(preset.depth),
            head_depth: overrides.head_depth.unwrap_or(1),
            keep: overrides.keep,
            budget,
            batch_size: overrides.batch_size.unwrap_or(preset.batch_size),
            learning_rate: overrides.learning_rate.unwrap_or(preset.learning_rate),
            decay,
            eval_every: overrides.eval_every.or(preset.eval_every),
            keep_best: overrides.keep_best.unwrap_or(preset.keep_best),
            seed,
            train_features: overrides.train_features,
            test_features: overrides.test_features,
            checkpoint_in: overrides.checkpoint_in,
            out_dir,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: String| Err(ConfigError(m));
        if self.n_qubits == 0 || self.n_qubits > MAX_QUBITS {
            return err(format!("n_qubits must be in 1..={MAX_QUBITS}"));
        }
        if self.depth == 0 {
            return err("quantum depth must be >= 1".into());
        }
        if self.head_depth == 0 {
            return err("head depth must be >= 1".into());
        }
        if self.batch_size == 0 {
            return err("batch size must be >= 1".into());
        }
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return err("learning rate must be positive".into());
        }
        if let Some(d) = self.decay {
            if d.factor <= 0.0 || !d.factor.is_finite() || d.every_epochs == 0 {
                return err("decay factor must be positive and its period >= 1".into());
            }
        }
        if self.eval_every == Some(0) {
            return err("evaluation period must be >= 1".into());
        }
        if self.experiment == Experiment::Qq {
            let keep = self.keep.unwrap_or(presets::QQ_KEEP);
            if keep > presets::QQ_SOURCE_DEPTH || keep > self.depth {
                return err(format!(
                    "keep {keep} exceeds source depth {} or total depth {}",
                    presets::QQ_SOURCE_DEPTH,
                    self.depth
                ));
            }
        }
        if self.train_features.is_some() != self.test_features.is_some() {
            return err("--train-features and --test-features go together".into());
        }
        if matches!(self.experiment, Experiment::Spirals | Experiment::Qq)
            && self.train_features.is_some()
        {
            return err(format!(
                "the {:?} experiment generates its own data",
                self.experiment
            ));
        }
        for path in [
            &self.train_features,
            &self.test_features,
            &self.checkpoint_in,
        ]
        .into_iter()
        .flatten()
        {
            if !path.is_file() {
                return err(format!("input file {} does not exist", path.display()));
            }
        }
        Ok(())
    }

    pub fn iterations(&self, n_train: usize) -> usize {
        match self.budget {
            Budget::Iterations(i) => i,
            Budget::Epochs(e) => e * n_train.div_ceil(self.batch_size),
        }
    }

    pub fn train_config(&self, n_train: usize) -> TrainConfig {
        let mut cfg = TrainConfig::new(
            self.iterations(n_train),
            self.batch_size,
            self.learning_rate,
            self.seed,
        );
        cfg.decay = self.decay;
        cfg.eval_every = self
            .eval_every
            .unwrap_or_else(|| n_train.div_ceil(self.batch_size));
        cfg.keep_best = self.keep_best;
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(preset: Option<&str>, o: Overrides) -> Result<RunConfig, ConfigError> {
        RunConfig::resolve(preset, o, 0, PathBuf::from("."))
    }

    #[test]
    fn preset_and_overrides() {
        let c = resolve(Some("dogs-cats"), Overrides::default()).unwrap();
        assert_eq!(c.experiment, Experiment::Cq);
        assert_eq!(c.iterations(245), 3 * 31);
        assert_eq!(c.train_config(245).eval_every, 31);
        let o = Overrides {
            iterations: Some(0),
            learning_rate: Some(0.5),
            ..Overrides::default()
        };
        let c = resolve(Some("spirals"), o).unwrap();
        assert_eq!((c.iterations(2000), c.learning_rate), (0, 0.5));
    }

    #[test]
    fn rejects_bad_values() {
        let bad = |o: Overrides| resolve(Some("spirals"), o).is_err();
        assert!(bad(Overrides {
            batch_size: Some(0),
            ..Overrides::default()
        }));
        assert!(bad(Overrides {
            learning_rate: Some(0.0),
            ..Overrides::default()
        }));
        assert!(bad(Overrides {
            depth: Some(0),
            ..Overrides::default()
        }));
        assert!(bad(Overrides {
            iterations: Some(3),
            epochs: Some(1),
            ..Overrides::default()
        }));
        assert!(bad(Overrides {
            experiment: Some(Experiment::Qq),
            ..Overrides::default()
        }));
        assert!(bad(Overrides {
            checkpoint_in: Some(PathBuf::from("/nonexistent/ckpt.json")),
            ..Overrides::default()
        }));
        assert!(resolve(Some("nope"), Overrides::default()).is_err());
        assert!(resolve(
            Some("qq"),
            Overrides {
                keep: Some(3),
                ..Overrides::default()
            }
        )
        .is_err());
    }
}
