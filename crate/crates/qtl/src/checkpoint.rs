//! Versioned JSON checkpoints with parameters stored as nested arrays.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use qtl_core::data::Dataset;
use qtl_core::nn::{AdamConfig, ParamSet};
use qtl_core::{
    Activation, Adam, BareCircuit, BareClassifier, ClassicalBaseline, DenseLayer, DressedCircuit,
    Model,
};
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("checkpoint is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("checkpoint format_version {found} is not supported (expected {FORMAT_VERSION})")]
    Version { found: u64 },
    #[error("checkpoint shape error: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Dressed,
    Baseline,
    BareQq,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Dressed => "dressed",
            Self::Baseline => "baseline",
            Self::BareQq => "bare_qq",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_qubits: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_classes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer_sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activations: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout_qubit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tensor {
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Mask {
    Whole(bool),
    Rows(Vec<bool>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub step_count: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub m: BTreeMap<String, Vec<f64>>,
    pub v: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub model_kind: ModelKind,
    pub architecture: Architecture,
    pub parameters: BTreeMap<String, Tensor>,
    pub frozen_masks: BTreeMap<String, Mask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer_state: Option<OptimizerState>,
    pub rng_seed: u64,
}

/// Any model a checkpoint can hold.
#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    Dressed(DressedCircuit),
    Baseline(ClassicalBaseline),
    BareQq(BareClassifier),
}

impl SavedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            Self::Dressed(_) => ModelKind::Dressed,
            Self::Baseline(_) => ModelKind::Baseline,
            Self::BareQq(_) => ModelKind::BareQq,
        }
    }

    fn inner(&self) -> &dyn Model {
        match self {
            Self::Dressed(m) => m,
            Self::Baseline(m) => m,
            Self::BareQq(m) => m,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn Model {
        match self {
            Self::Dressed(m) => m,
            Self::Baseline(m) => m,
            Self::BareQq(m) => m,
        }
    }
}

impl Model for SavedModel {
    fn input_width(&self) -> usize {
        self.inner().input_width()
    }

    fn n_classes(&self) -> usize {
        self.inner().n_classes()
    }

    fn forward(&self, x: &[f64]) -> qtl_core::Result<Vec<f64>> {
        self.inner().forward(x)
    }

    fn params(&self) -> ParamSet {
        self.inner().params()
    }

    fn set_params(&mut self, params: &ParamSet) -> qtl_core::Result<()> {
        self.inner_mut().set_params(params)
    }

    fn sample_loss_and_grads(&self, x: &[f64], label: usize) -> qtl_core::Result<(f64, ParamSet)> {
        self.inner().sample_loss_and_grads(x, label)
    }

    fn accuracy(&self, data: &Dataset) -> qtl_core::Result<f64> {
        self.inner().accuracy(data)
    }
}

fn matrix(values: &[f64], cols: usize) -> Tensor {
    Tensor::Matrix(values.chunks(cols.max(1)).map(<[f64]>::to_vec).collect())
}

fn put_layer(params: &mut BTreeMap<String, Tensor>, prefix: &str, layer: &DenseLayer) {
    params.insert(
        format!("{prefix}.weight"),
        matrix(&layer.weights, layer.n_in()),
    );
    params.insert(format!("{prefix}.bias"), Tensor::Vector(layer.bias.clone()));
}

fn quantum_tensor(circuit: &BareCircuit) -> Tensor {
    matrix(circuit.weights(), circuit.n_qubits())
}

impl Checkpoint {
    pub fn from_model(model: &SavedModel, rng_seed: u64, optimizer: Option<&Adam>) -> Self {
        let mut architecture = Architecture::default();
        let mut parameters = BTreeMap::new();
        let mut frozen_masks = BTreeMap::new();
        match model {
            SavedModel::Dressed(m) => {
                architecture.input_width = Some(m.pre.n_in());
                architecture.n_qubits = Some(m.bare.n_qubits());
                architecture.depth = Some(m.bare.depth());
                architecture.n_classes = Some(m.post.n_out());
                architecture.activations = Some(vec![
                    m.pre.activation.name().to_owned(),
                    m.post.activation.name().to_owned(),
                ]);
                put_layer(&mut parameters, "pre", &m.pre);
                put_layer(&mut parameters, "post", &m.post);
                parameters.insert("quantum".into(), quantum_tensor(&m.bare));
                frozen_masks.insert("pre".into(), Mask::Whole(m.pre.frozen));
                frozen_masks.insert("quantum".into(), Mask::Whole(m.quantum_frozen));
                frozen_masks.insert("post".into(), Mask::Whole(m.post.frozen));
            }
            SavedModel::Baseline(m) => {
                let mut sizes = vec![m.layers[0].n_in()];
                sizes.extend(m.layers.iter().map(DenseLayer::n_out));
                architecture.layer_sizes = Some(sizes);
                architecture.activations = Some(
                    m.layers
                        .iter()
                        .map(|l| l.activation.name().to_owned())
                        .collect(),
                );
                for (i, layer) in m.layers.iter().enumerate() {
                    put_layer(&mut parameters, &format!("layers.{i}"), layer);
                    frozen_masks.insert(format!("layers.{i}"), Mask::Whole(layer.frozen));
                }
            }
            SavedModel::BareQq(m) => {
                architecture.n_qubits = Some(m.circuit.n_qubits());
                architecture.depth = Some(m.circuit.depth());
                architecture.readout_qubit = Some(0);
                parameters.insert("quantum".into(), quantum_tensor(&m.circuit));
                frozen_masks.insert("quantum".into(), Mask::Rows(m.frozen_rows.clone()));
            }
        }
        let optimizer_state = optimizer.map(|adam| {
            let named = |set: &ParamSet| {
                set.groups
                    .iter()
                    .map(|g| (g.name.clone(), g.values.clone()))
                    .collect()
            };
            OptimizerState {
                step_count: adam.step_count,
                learning_rate: adam.config.learning_rate,
                beta1: adam.config.beta1,
                beta2: adam.config.beta2,
                epsilon: adam.config.epsilon,
                m: named(&adam.m),
                v: named(&adam.v),
            }
        });
        Self {
            format_version: FORMAT_VERSION,
            model_kind: model.kind(),
            architecture,
            parameters,
            frozen_masks,
            optimizer_state,
            rng_seed,
        }
    }

    fn tensor(&self, name: &str) -> Result<&Tensor, CheckpointError> {
        self.parameters
            .get(name)
            .ok_or_else(|| CheckpointError::Shape(format!("missing parameter {name:?}")))
    }

    fn flat(&self, name: &str, rows: usize, cols: usize) -> Result<Vec<f64>, CheckpointError> {
        let bad = || CheckpointError::Shape(format!("parameter {name:?} is not {rows}×{cols}"));
        match self.tensor(name)? {
            Tensor::Matrix(m) if m.len() == rows && m.iter().all(|r| r.len() == cols) => {
                Ok(m.concat())
            }
            Tensor::Vector(v) if v.is_empty() && rows == 0 => Ok(Vec::new()),
            _ => Err(bad()),
        }
    }

    fn vector(&self, name: &str, len: usize) -> Result<Vec<f64>, CheckpointError> {
        match self.tensor(name)? {
            Tensor::Vector(v) if v.len() == len => Ok(v.clone()),
            _ => Err(CheckpointError::Shape(format!(
                "parameter {name:?} is not a vector of length {len}"
            ))),
        }
    }

    fn whole_mask(&self, name: &str) -> Result<bool, CheckpointError> {
        match self.frozen_masks.get(name) {
            Some(Mask::Whole(b)) => Ok(*b),
            None => Ok(false),
            Some(Mask::Rows(_)) => Err(CheckpointError::Shape(format!(
                "frozen mask {name:?} must be a boolean"
            ))),
        }
    }

    fn layer(
        &self,
        prefix: &str,
        n_in: usize,
        n_out: usize,
        activation: Activation,
    ) -> Result<DenseLayer, CheckpointError> {
        let weights = self.flat(&format!("{prefix}.weight"), n_out, n_in)?;
        let bias = self.vector(&format!("{prefix}.bias"), n_out)?;
        let layer = DenseLayer::new(n_in, n_out, weights, bias, activation).map_err(shape)?;
        Ok(layer.frozen(self.whole_mask(prefix)?))
    }

    fn activation(&self, i: usize, default: Activation) -> Result<Activation, CheckpointError> {
        match self
            .architecture
            .activations
            .as_ref()
            .and_then(|a| a.get(i))
        {
            None => Ok(default),
            Some(name) => Activation::from_name(name)
                .ok_or_else(|| CheckpointError::Shape(format!("unknown activation {name:?}"))),
        }
    }

    fn field(value: Option<usize>, name: &str) -> Result<usize, CheckpointError> {
        value.ok_or_else(|| CheckpointError::Shape(format!("architecture lacks {name}")))
    }

    pub fn to_model(&self) -> Result<SavedModel, CheckpointError> {
        let arch = &self.architecture;
        let model = match self.model_kind {
            ModelKind::Dressed => {
                let n_in = Self::field(arch.input_width, "input_width")?;
                let n = Self::field(arch.n_qubits, "n_qubits")?;
                let depth = Self::field(arch.depth, "depth")?;
                let n_out = Self::field(arch.n_classes, "n_classes")?;
                let pre = self.layer("pre", n_in, n, self.activation(0, Activation::Tanh)?)?;
                let post =
                    self.layer("post", n, n_out, self.activation(1, Activation::Identity)?)?;
                let bare =
                    BareCircuit::new(n, depth, self.flat("quantum", depth, n)?).map_err(shape)?;
                let mut m = DressedCircuit::new(pre, bare, post).map_err(shape)?;
                m.quantum_frozen = self.whole_mask("quantum")?;
                SavedModel::Dressed(m)
            }
            ModelKind::Baseline => {
                let sizes = arch.layer_sizes.as_ref().ok_or_else(|| {
                    CheckpointError::Shape("architecture lacks layer_sizes".into())
                })?;
                if sizes.len() < 2 {
                    return Err(CheckpointError::Shape(
                        "need at least two layer sizes".into(),
                    ));
                }
                let last = sizes.len() - 2;
                let layers = sizes
                    .windows(2)
                    .enumerate()
                    .map(|(i, w)| {
                        let default = if i == last {
                            Activation::Identity
                        } else {
                            Activation::Tanh
                        };
                        self.layer(
                            &format!("layers.{i}"),
                            w[0],
                            w[1],
                            self.activation(i, default)?,
                        )
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                SavedModel::Baseline(ClassicalBaseline::new(layers).map_err(shape)?)
            }
            ModelKind::BareQq => {
                let n = Self::field(arch.n_qubits, "n_qubits")?;
                let depth = Self::field(arch.depth, "depth")?;
                if arch.readout_qubit.unwrap_or(0) != 0 {
                    return Err(CheckpointError::Shape("read-out qubit must be 0".into()));
                }
                let circuit =
                    BareCircuit::new(n, depth, self.flat("quantum", depth, n)?).map_err(shape)?;
                let rows = match self.frozen_masks.get("quantum") {
                    None => vec![false; depth],
                    Some(Mask::Rows(r)) if r.len() == depth => r.clone(),
                    Some(Mask::Whole(b)) => vec![*b; depth],
                    Some(Mask::Rows(r)) => {
                        return Err(CheckpointError::Shape(format!(
                            "{} frozen rows for depth {depth}",
                            r.len()
                        )))
                    }
                };
                SavedModel::BareQq(BareClassifier::new(circuit, rows).map_err(shape)?)
            }
        };
        Ok(model)
    }

    /// Rebuilds the saved optimiser for `model`, if one was stored.
    pub fn optimizer(&self, model: &SavedModel) -> Result<Option<Adam>, CheckpointError> {
        let Some(state) = &self.optimizer_state else {
            return Ok(None);
        };
        let params = model.params();
        let mut config = AdamConfig::new(state.learning_rate);
        config.beta1 = state.beta1;
        config.beta2 = state.beta2;
        config.epsilon = state.epsilon;
        let mut adam = Adam::new(config, &params);
        adam.step_count = state.step_count;
        for (slot, source) in [(&mut adam.m, &state.m), (&mut adam.v, &state.v)] {
            for group in &mut slot.groups {
                match source.get(&group.name) {
                    Some(v) if v.len() == group.values.len() => group.values.clone_from(v),
                    _ => {
                        return Err(CheckpointError::Shape(format!(
                            "optimiser state for {:?} does not match the model",
                            group.name
                        )))
                    }
                }
            }
        }
        Ok(Some(adam))
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("checkpoint serialises");
        text.push('\n');
        text
    }

    /// Checks `format_version` before the rest of the schema so a version
    /// bump is reported as such.
    pub fn from_json(text: &str) -> Result<Self, CheckpointError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        match value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
        {
            Some(v) if v == u64::from(FORMAT_VERSION) => {}
            Some(found) => return Err(CheckpointError::Version { found }),
            None => {
                return Err(CheckpointError::Shape(
                    "missing or non-integer format_version".into(),
                ))
            }
        }
        let checkpoint: Self = serde_json::from_value(value)?;
        checkpoint.to_model()?;
        Ok(checkpoint)
    }
}

fn shape(e: qtl_core::Error) -> CheckpointError {
    CheckpointError::Shape(e.to_string())
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: &Path) -> Result<(), CheckpointError> {
    fs::write(path, checkpoint.to_json()).map_err(|source| CheckpointError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let text = fs::read_to_string(path).map_err(|source| CheckpointError::Io {
        path: path.to_owned(),
        source,
    })?;
    Checkpoint::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn models() -> Vec<SavedModel> {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut dressed = DressedCircuit::random(3, 2, 2, 2, &mut rng).unwrap();
        dressed.pre.frozen = true;
        let bare = BareClassifier::new(
            BareCircuit::random(2, 3, &mut rng).unwrap(),
            vec![true, false, false],
        )
        .unwrap();
        vec![
            SavedModel::Dressed(dressed),
            SavedModel::Baseline(ClassicalBaseline::spirals_baseline(&mut rng).unwrap()),
            SavedModel::BareQq(bare),
        ]
    }

    #[test]
    fn json_round_trip_preserves_models() {
        for model in models() {
            let ckpt = Checkpoint::from_model(&model, 11, None);
            let back = Checkpoint::from_json(&ckpt.to_json()).unwrap();
            assert_eq!(back, ckpt);
            assert_eq!(back.to_model().unwrap(), model);
        }
    }

    #[test]
    fn optimizer_state_round_trip() {
        let model = models().remove(0);
        let mut adam = Adam::new(AdamConfig::new(0.01), &model.params());
        adam.step_count = 3;
        adam.m.groups[0].values[0] = 0.125;
        let ckpt = Checkpoint::from_model(&model, 0, Some(&adam));
        let back = Checkpoint::from_json(&ckpt.to_json()).unwrap();
        assert_eq!(back.optimizer(&model).unwrap(), Some(adam));
    }

    #[test]
    fn distinct_load_errors() {
        let json = Checkpoint::from_model(&models()[1], 0, None).to_json();
        let truncated = &json[..json.len() / 2];
        assert!(matches!(
            Checkpoint::from_json(truncated),
            Err(CheckpointError::Parse(_))
        ));
        let bumped = json.replacen("\"format_version\": 1", "\"format_version\": 2", 1);
        assert!(matches!(
            Checkpoint::from_json(&bumped),
            Err(CheckpointError::Version { found: 2 })
        ));
        let mut ckpt: Checkpoint = serde_json::from_str(&json).unwrap();
        ckpt.parameters
            .insert("layers.0.bias".into(), Tensor::Vector(vec![0.0; 3]));
        assert!(matches!(
            Checkpoint::from_json(&ckpt.to_json()),
            Err(CheckpointError::Shape(_))
        ));
    }

    #[test]
    fn layout_uses_named_nested_arrays() {
        let ckpt = Checkpoint::from_model(&models()[0], 5, None);
        let value: serde_json::Value = serde_json::from_str(&ckpt.to_json()).unwrap();
        assert_eq!(value["model_kind"], "dressed");
        assert_eq!(
            value["parameters"]["pre.weight"].as_array().unwrap().len(),
            2
        );
        assert_eq!(
            value["parameters"]["quantum"][0].as_array().unwrap().len(),
            2
        );
        assert_eq!(value["frozen_masks"]["pre"], true);
        assert_eq!(value["rng_seed"], 5);
    }
}
