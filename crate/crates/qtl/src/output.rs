//! Text artefacts: metrics CSVs, decision-region grids and JSON reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use qtl_core::train::TrainTrace;
use qtl_core::transfer::QqReport;
use qtl_core::Model;
use serde::Serialize;

use crate::error::{Error, Result};

pub const REPORT_FORMAT_VERSION: u32 = 1;

pub const METRICS_HEADER: &str = "iteration,epoch,train_loss,test_accuracy";

/// One row per iteration; empty cells where nothing was measured.
pub fn metrics_csv(trace: &TrainTrace) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in &trace.records {
        write!(out, "{},{},", r.iteration, r.epoch).unwrap();
        if let Some(l) = r.train_loss {
            write!(out, "{l}").unwrap();
        }
        out.push(',');
        if let Some(a) = r.test_accuracy {
            write!(out, "{a}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// `steps` evenly spaced values from `min` to `max` inclusive.
pub fn lattice(min: f64, max: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..steps)
            .map(|i| {
                if i + 1 == steps {
                    max
                } else {
                    min + (max - min) * i as f64 / (steps - 1) as f64
                }
            })
            .collect(),
    }
}

/// Predicted class on a `steps × steps` lattice over `[min, max]²`, one row
/// per point with `y` in the outer loop.
pub fn decision_region_csv<M: Model>(
    model: &M,
    min: f64,
    max: f64,
    steps: usize,
) -> Result<String> {
    if model.input_width() != 2 {
        return Err(Error::Usage(format!(
            "decision regions need a model with 2 inputs, this one takes {}",
            model.input_width()
        )));
    }
    let axis = lattice(min, max, steps);
    let mut out = String::from("x,y,predicted_class\n");
    for &y in &axis {
        for &x in &axis {
            let class = model.predict(&[x, y])?;
            writeln!(out, "{x},{y},{class}").unwrap();
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub checkpoint: String,
    pub model_kind: String,
    pub dataset: String,
    pub n_samples: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QqRun {
    pub seed: u64,
    pub source_accuracy: f64,
    pub transfer_trainable: usize,
    pub scratch_trainable: usize,
    /// Training loss at each checkpointed iteration.
    pub transfer_loss: Vec<f64>,
    pub scratch_loss: Vec<f64>,
    pub transfer_final_accuracy: f64,
    pub scratch_final_accuracy: f64,
    pub crossover_iteration: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedianComparison {
    pub iteration: usize,
    pub transfer_loss: f64,
    pub scratch_loss: f64,
    pub transfer_lower: bool,
    pub seeds_transfer_lower: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QqSummary {
    pub format_version: u32,
    pub iterations: usize,
    pub checkpoints: Vec<usize>,
    pub runs: Vec<QqRun>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median: Option<MedianComparison>,
}

/// Iterations 0, 25 %, 50 %, 75 % and 100 % of the budget.
pub fn checkpoint_iterations(iterations: usize) -> Vec<usize> {
    let mut its: Vec<usize> = (0..=4).map(|q| iterations * q / 4).collect();
    its.dedup();
    its
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn loss_at(trace: &TrainTrace, iteration: usize) -> f64 {
    trace.loss_at(iteration).unwrap_or(f64::NAN)
}

pub fn qq_summary(iterations: usize, runs: &[(u64, QqReport)]) -> QqSummary {
    let checkpoints = checkpoint_iterations(iterations);
    let rows: Vec<QqRun> = runs
        .iter()
        .map(|(seed, r)| QqRun {
            seed: *seed,
            source_accuracy: r.source_accuracy,
            transfer_trainable: r.transfer_trainable(),
            scratch_trainable: r.scratch_trainable(),
            transfer_loss: checkpoints
                .iter()
                .map(|&i| loss_at(&r.transfer, i))
                .collect(),
            scratch_loss: checkpoints
                .iter()
                .map(|&i| loss_at(&r.scratch, i))
                .collect(),
            transfer_final_accuracy: r.transfer.final_accuracy,
            scratch_final_accuracy: r.scratch.final_accuracy,
            crossover_iteration: r.crossover_iteration(),
        })
        .collect();
    let median = (runs.len() > 1).then(|| {
        let iteration = iterations / 4;
        let t: Vec<f64> = runs
            .iter()
            .map(|(_, r)| loss_at(&r.transfer, iteration))
            .collect();
        let s: Vec<f64> = runs
            .iter()
            .map(|(_, r)| loss_at(&r.scratch, iteration))
            .collect();
        let (mt, ms) = (median(&t), median(&s));
        MedianComparison {
            iteration,
            transfer_loss: mt,
            scratch_loss: ms,
            transfer_lower: mt < ms,
            seeds_transfer_lower: t.iter().zip(&s).filter(|(a, b)| a < b).count(),
        }
    });
    QqSummary {
        format_version: REPORT_FORMAT_VERSION,
        iterations,
        checkpoints,
        runs: rows,
        median,
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serialises");
    text.push('\n');
    text
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| Error::Io { path, source })
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_owned(),
        source,
    })
}
