//! Mini-batch Adam training with a deterministic shuffle stream.

use alloc::vec::Vec;

use crate::data::{batches, epoch_seed, Dataset};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::nn::{Adam, AdamConfig, ParamSet, StepDecay};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Number of optimiser steps; each consumes one mini-batch.
    pub iterations: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub decay: Option<StepDecay>,
    pub seed: u64,
    /// Evaluate every this many iterations (0: only at start and end).
    pub eval_every: usize,
    /// Keep a copy of the parameters with the best evaluation accuracy.
    pub keep_best: bool,
}

impl TrainConfig {
    pub fn new(iterations: usize, batch_size: usize, learning_rate: f64, seed: u64) -> Self {
        Self {
            iterations,
            batch_size,
            learning_rate,
            decay: None,
            seed,
            eval_every: 0,
            keep_best: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.learning_rate < 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::Config(
                "learning_rate must be finite and >= 0".into(),
            ));
        }
        if let Some(d) = self.decay {
            if d.factor <= 0.0 || !d.factor.is_finite() {
                return Err(Error::Config("decay factor must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn iterations_per_epoch(&self, n_samples: usize) -> usize {
        n_samples.div_ceil(self.batch_size.max(1))
    }
}

/// One row of the training trace. Iteration 0 is the untrained model; its
/// loss is the mean over the whole training set, later rows carry the loss
/// of the mini-batch consumed at that step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub epoch: usize,
    pub train_loss: Option<f64>,
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    pub records: Vec<TraceRecord>,
    pub final_accuracy: f64,
    pub best_accuracy: f64,
    pub best_iteration: usize,
    pub best_params: Option<ParamSet>,
    /// Optimiser state after the last step.
    pub optimizer: Adam,
}

impl TrainTrace {
    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.train_loss).collect()
    }

    pub fn loss_at(&self, iteration: usize) -> Option<f64> {
        self.records
            .get(iteration)
            .filter(|r| r.iteration == iteration)
            .and_then(|r| r.train_loss)
    }
}

/// Trains `model` in place on `train`, evaluating accuracy on `eval`
/// (or `train` when `eval` is `None`).
pub fn train<M: Model>(
    model: &mut M,
    train: &Dataset,
    eval: Option<&Dataset>,
    config: &TrainConfig,
) -> Result<TrainTrace> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Dataset("training set is empty".into()));
    }
    if train.width() != model.input_width() {
        return Err(Error::Arity {
            expected: model.input_width(),
            got: train.width(),
        });
    }
    let eval_set = eval.unwrap_or(train);

    let mut params = model.params();
    let mut adam = Adam::new(AdamConfig::new(config.learning_rate), &params);
    let mut records = Vec::with_capacity(config.iterations + 1);

    let initial = model.accuracy(eval_set)?;
    records.push(TraceRecord {
        iteration: 0,
        epoch: 0,
        train_loss: Some(model.mean_loss(train)?),
        test_accuracy: Some(initial),
    });
    let mut best_accuracy = initial;
    let mut best_iteration = 0;
    let mut best_params = config.keep_best.then(|| params.clone());
    let mut final_accuracy = initial;

    let mut epoch = 0usize;
    let mut schedule = batches(train, config.batch_size, epoch_seed(config.seed, 0)).into_iter();
    for iteration in 1..=config.iterations {
        let batch = match schedule.next() {
            Some(b) => b,
            None => {
                epoch += 1;
                schedule = batches(
                    train,
                    config.batch_size,
                    epoch_seed(config.seed, epoch as u64),
                )
                .into_iter();
                schedule.next().expect("non-empty dataset yields a batch")
            }
        };
        adam.config.learning_rate = match config.decay {
            Some(d) => d.rate_at(config.learning_rate, epoch),
            None => config.learning_rate,
        };
        let (loss, grads) = model.loss_and_grads(train, &batch)?;
        adam.step(&mut params, &grads)?;
        model.set_params(&params)?;

        let due = iteration == config.iterations
            || (config.eval_every > 0 && iteration % config.eval_every == 0);
        let test_accuracy = if due {
            let acc = model.accuracy(eval_set)?;
            final_accuracy = acc;
            if acc > best_accuracy {
                best_accuracy = acc;
                best_iteration = iteration;
                if config.keep_best {
                    best_params = Some(params.clone());
                }
            }
            Some(acc)
        } else {
            None
        };
        records.push(TraceRecord {
            iteration,
            epoch,
            train_loss: Some(loss),
            test_accuracy,
        });
    }

    Ok(TrainTrace {
        records,
        final_accuracy,
        best_accuracy,
        best_iteration,
        best_params,
        optimizer: adam,
    })
}
