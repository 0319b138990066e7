//! File formats, checkpoints, presets and the command-line driver for the
//! hybrid transfer-learning experiments in `qtl-core`.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod features;
pub mod output;
pub mod presets;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, SavedModel};
pub use error::{Error, Result};
pub use features::{load_feature_file, save_feature_file};
