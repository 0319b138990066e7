//! Trainable classifiers: the dressed quantum circuit, the all-classical
//! baseline, and a bare circuit classifier with per-row freezing used for
//! quantum-to-quantum transfer.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::circuit::{init_quantum_weights, BareCircuit};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::gradients::{bare_jacobians, input_jacobian, shift_grad_weight};
use crate::math;
use crate::nn::{argmax, cross_entropy_loss, Activation, DenseLayer, ParamSet};

pub trait Model {
    fn input_width(&self) -> usize;

    fn n_classes(&self) -> usize;

    /// Class scores fed to log-softmax cross-entropy.
    fn forward(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Trainable parameters only; frozen blocks are absent.
    fn params(&self) -> ParamSet;

    fn set_params(&mut self, params: &ParamSet) -> Result<()>;

    /// Loss of one sample and the gradient for every trainable parameter.
    fn sample_loss_and_grads(&self, x: &[f64], label: usize) -> Result<(f64, ParamSet)>;

    fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    /// Mean loss and mean gradients over the rows `indices` of `data`.
    fn loss_and_grads(&self, data: &Dataset, indices: &[usize]) -> Result<(f64, ParamSet)> {
        if indices.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if data.width() != self.input_width() {
            return Err(Error::Arity {
                expected: self.input_width(),
                got: data.width(),
            });
        }
        let mut total = 0.0;
        let mut grads = self.params().zeros_like();
        for &i in indices {
            let (loss, g) = self.sample_loss_and_grads(data.row(i), data.label(i))?;
            total += loss;
            grads.add_scaled(&g, 1.0);
        }
        let scale = 1.0 / indices.len() as f64;
        for group in &mut grads.groups {
            for v in &mut group.values {
                *v *= scale;
            }
        }
        Ok((total * scale, grads))
    }

    fn mean_loss(&self, data: &Dataset) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut total = 0.0;
        for (x, label) in data.rows() {
            total += cross_entropy_loss(&self.forward(x)?, label)?.0;
        }
        Ok(total / data.len() as f64)
    }

    /// Fraction of rows whose predicted class equals the label.
    fn accuracy(&self, data: &Dataset) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut correct = 0usize;
        for (x, label) in data.rows() {
            if self.predict(x)? == label {
                correct += 1;
            }
        }
        Ok(correct as f64 / data.len() as f64)
    }
}

fn take_group<'a>(params: &'a ParamSet, name: &str, len: usize) -> Result<&'a [f64]> {
    let values = params
        .get(name)
        .ok_or_else(|| Error::Shape(format!("missing parameter group {name}")))?;
    if values.len() != len {
        return Err(Error::Shape(format!(
            "group {name}: expected {len} values, got {}",
            values.len()
        )));
    }
    Ok(values)
}

fn check_group_count(params: &ParamSet, expected: usize) -> Result<()> {
    if params.groups.len() != expected {
        return Err(Error::Shape(format!(
            "expected {expected} parameter groups, got {}",
            params.groups.len()
        )));
    }
    Ok(())
}

fn push_layer(set: &mut ParamSet, prefix: &str, layer: &DenseLayer) {
    if !layer.frozen {
        set.push(format!("{prefix}.weight"), layer.weights.clone());
        set.push(format!("{prefix}.bias"), layer.bias.clone());
    }
}

fn load_layer(params: &ParamSet, prefix: &str, layer: &mut DenseLayer) -> Result<usize> {
    if layer.frozen {
        return Ok(0);
    }
    let w = take_group(params, &format!("{prefix}.weight"), layer.weights.len())?;
    let b = take_group(params, &format!("{prefix}.bias"), layer.bias.len())?;
    layer.weights.copy_from_slice(w);
    layer.bias.copy_from_slice(b);
    Ok(2)
}

/// `post ∘ Q ∘ pre`: a tanh pre-layer squeezes inputs into qubit angles,
/// the bare circuit runs, and a linear post-layer maps Z read-outs to
/// class scores.
#[derive(Debug, Clone, PartialEq)]
pub struct DressedCircuit {
    pub pre: DenseLayer,
    pub bare: BareCircuit,
    pub post: DenseLayer,
    pub quantum_frozen: bool,
}

impl DressedCircuit {
    pub fn new(pre: DenseLayer, bare: BareCircuit, post: DenseLayer) -> Result<Self> {
        if pre.n_out() != bare.n_qubits() || post.n_in() != bare.n_qubits() {
            return Err(Error::Shape(format!(
                "dressed circuit {}->{} | {} qubits | {}->{}",
                pre.n_in(),
                pre.n_out(),
                bare.n_qubits(),
                post.n_in(),
                post.n_out()
            )));
        }
        Ok(Self {
            pre,
            bare,
            post,
            quantum_frozen: false,
        })
    }

    /// `L_{n_q→n_out} ∘ Q ∘ L_{n_in→n_q}` with the standard initialisation.
    pub fn random<R: Rng + ?Sized>(
        n_in: usize,
        n_qubits: usize,
        depth: usize,
        n_out: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let pre = DenseLayer::random(n_in, n_qubits, Activation::Tanh, rng)?;
        let bare = BareCircuit::random(n_qubits, depth, rng)?;
        let post = DenseLayer::random(n_qubits, n_out, Activation::Identity, rng)?;
        Self::new(pre, bare, post)
    }
}

impl Model for DressedCircuit {
    fn input_width(&self) -> usize {
        self.pre.n_in()
    }

    fn n_classes(&self) -> usize {
        self.post.n_out()
    }

    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let h = self.pre.forward(x)?;
        let q = self.bare.run(&h)?;
        self.post.forward(&q)
    }

    fn params(&self) -> ParamSet {
        let mut set = ParamSet::default();
        push_layer(&mut set, "pre", &self.pre);
        if !self.quantum_frozen {
            set.push("quantum", self.bare.weights().to_vec());
        }
        push_layer(&mut set, "post", &self.post);
        set
    }

    fn set_params(&mut self, params: &ParamSet) -> Result<()> {
        let mut used = load_layer(params, "pre", &mut self.pre)?;
        if !self.quantum_frozen {
            let w = take_group(params, "quantum", self.bare.weights().len())?;
            self.bare.weights_mut().copy_from_slice(w);
            used += 1;
        }
        used += load_layer(params, "post", &mut self.post)?;
        check_group_count(params, used)
    }

    fn sample_loss_and_grads(&self, x: &[f64], label: usize) -> Result<(f64, ParamSet)> {
        let h = self.pre.forward(x)?;
        let q = self.bare.run(&h)?;
        let logits = self.post.forward(&q)?;
        let (loss, d_logits) = cross_entropy_loss(&logits, label)?;
        let post_grads = self.post.backward(&q, &d_logits)?;

        let jac = if !self.quantum_frozen {
            Some(bare_jacobians(&self.bare, &h)?)
        } else if !self.pre.frozen {
            Some(input_jacobian(&self.bare, &h)?)
        } else {
            None
        };

        let mut set = ParamSet::default();
        if !self.pre.frozen {
            let jac = jac.as_ref().expect("input jacobian computed");
            let dh = jac.input_vjp(&post_grads.d_input);
            let pre_grads = self.pre.backward(x, &dh)?;
            set.push("pre.weight", pre_grads.d_weights);
            set.push("pre.bias", pre_grads.d_bias);
        }
        if !self.quantum_frozen {
            let jac = jac.as_ref().expect("weight jacobian computed");
            set.push("quantum", jac.weight_vjp(&post_grads.d_input));
        }
        if !self.post.frozen {
            set.push("post.weight", post_grads.d_weights);
            set.push("post.bias", post_grads.d_bias);
        }
        Ok((loss, set))
    }
}

/// A stack of dense layers applied in order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalBaseline {
    pub layers: Vec<DenseLayer>,
}

impl ClassicalBaseline {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("baseline needs at least one layer".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].n_out() != pair[1].n_in() {
                return Err(Error::Shape(format!(
                    "layer {i} outputs {} but layer {} takes {}",
                    pair[0].n_out(),
                    i + 1,
                    pair[1].n_in()
                )));
            }
        }
        Ok(Self { layers })
    }

    /// Layers of widths `sizes[0] → sizes[1] → …`; hidden layers use tanh and
    /// the last is linear.
    pub fn random<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::Shape("baseline needs at least two widths".into()));
        }
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i == last {
                    Activation::Identity
                } else {
                    Activation::Tanh
                };
                DenseLayer::random(w[0], w[1], act, rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    /// The classical counterpart of the spirals model, `L4→2 ∘ L4→4 ∘ L2→4`.
    pub fn spirals_baseline<R: Rng + ?Sized>(rng: &mut R) -> Result<Self> {
        Self::random(&[2, 4, 4, 2], rng)
    }
}

impl Model for ClassicalBaseline {
    fn input_width(&self) -> usize {
        self.layers[0].n_in()
    }

    fn n_classes(&self) -> usize {
        self.layers[self.layers.len() - 1].n_out()
    }

    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut h = x.to_vec();
        for layer in &self.layers {
            h = layer.forward(&h)?;
        }
        Ok(h)
    }

    fn params(&self) -> ParamSet {
        let mut set = ParamSet::default();
        for (i, layer) in self.layers.iter().enumerate() {
            push_layer(&mut set, &format!("layers.{i}"), layer);
        }
        set
    }

    fn set_params(&mut self, params: &ParamSet) -> Result<()> {
        let mut used = 0;
        for (i, layer) in self.layers.iter_mut().enumerate() {
            used += load_layer(params, &format!("layers.{i}"), layer)?;
        }
        check_group_count(params, used)
    }

    fn sample_loss_and_grads(&self, x: &[f64], label: usize) -> Result<(f64, ParamSet)> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        for layer in &self.layers {
            let next = layer.forward(&h)?;
            inputs.push(h);
            h = next;
        }
        let (loss, mut upstream) = cross_entropy_loss(&h, label)?;
        let mut per_layer = Vec::with_capacity(self.layers.len());
        for (layer, input) in self.layers.iter().zip(&inputs).rev() {
            let g = layer.backward(input, &upstream)?;
            upstream = g.d_input;
            per_layer.push((g.d_weights, g.d_bias));
        }
        per_layer.reverse();
        let mut set = ParamSet::default();
        for (i, (layer, (dw, db))) in self.layers.iter().zip(per_layer).enumerate() {
            if !layer.frozen {
                set.push(format!("layers.{i}.weight"), dw);
                set.push(format!("layers.{i}.bias"), db);
            }
        }
        Ok((loss, set))
    }
}

/// Probability floor applied before taking logs of read-out probabilities.
pub const PROB_FLOOR: f64 = 1e-12;

/// A bare circuit used directly as a binary classifier.
///
/// Inputs are embedded as qubit angles; the probability of class 1 is the
/// probability of finding the read-out qubit (qubit 0) in `|1⟩`,
/// `p₁ = (1 − ⟨Z₀⟩)/2`. Class scores are `[ln p₀, ln p₁]`, so softmax of the
/// scores returns the read-out distribution itself. Rows flagged in
/// `frozen_rows` are never trained.
#[derive(Debug, Clone, PartialEq)]
pub struct BareClassifier {
    pub circuit: BareCircuit,
    pub frozen_rows: Vec<bool>,
}

impl BareClassifier {
    pub fn new(circuit: BareCircuit, frozen_rows: Vec<bool>) -> Result<Self> {
        if frozen_rows.len() != circuit.depth() {
            return Err(Error::Shape(format!(
                "{} frozen flags for depth {}",
                frozen_rows.len(),
                circuit.depth()
            )));
        }
        Ok(Self {
            circuit,
            frozen_rows,
        })
    }

    pub fn trainable(circuit: BareCircuit) -> Self {
        let depth = circuit.depth();
        Self {
            circuit,
            frozen_rows: vec![false; depth],
        }
    }

    pub fn random<R: Rng + ?Sized>(n_qubits: usize, depth: usize, rng: &mut R) -> Result<Self> {
        Ok(Self::trainable(BareCircuit::random(n_qubits, depth, rng)?))
    }

    pub fn trainable_rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.frozen_rows
            .iter()
            .enumerate()
            .filter(|(_, f)| !**f)
            .map(|(l, _)| l)
    }

    pub fn n_trainable(&self) -> usize {
        self.trainable_rows().count() * self.circuit.n_qubits()
    }

    fn probabilities(z: f64) -> [f64; 2] {
        [
            ((1.0 + z) / 2.0).max(PROB_FLOOR),
            ((1.0 - z) / 2.0).max(PROB_FLOOR),
        ]
    }

    /// Appends freshly initialised trainable rows.
    pub fn with_fresh_rows<R: Rng + ?Sized>(mut self, rows: usize, rng: &mut R) -> Result<Self> {
        let n = self.circuit.n_qubits();
        let mut w = self.circuit.weights().to_vec();
        w.extend(init_quantum_weights(rows * n, rng));
        self.circuit = BareCircuit::new(n, self.circuit.depth() + rows, w)?;
        self.frozen_rows.extend(core::iter::repeat_n(false, rows));
        Ok(self)
    }
}

impl Model for BareClassifier {
    fn input_width(&self) -> usize {
        self.circuit.n_qubits()
    }

    fn n_classes(&self) -> usize {
        2
    }

    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.circuit.run(x)?[0];
        let [p0, p1] = Self::probabilities(z);
        Ok(vec![math::ln(p0), math::ln(p1)])
    }

    fn params(&self) -> ParamSet {
        let mut set = ParamSet::default();
        if self.n_trainable() > 0 {
            let values = self
                .trainable_rows()
                .flat_map(|l| self.circuit.row(l).iter().copied())
                .collect();
            set.push("quantum", values);
        }
        set
    }

    fn set_params(&mut self, params: &ParamSet) -> Result<()> {
        let n = self.circuit.n_qubits();
        let count = self.n_trainable();
        if count == 0 {
            return check_group_count(params, 0);
        }
        let values = take_group(params, "quantum", count)?.to_vec();
        let rows: Vec<usize> = self.trainable_rows().collect();
        for (chunk, l) in values.chunks_exact(n).zip(rows) {
            for (k, &v) in chunk.iter().enumerate() {
                self.circuit.set_weight(l, k, v);
            }
        }
        check_group_count(params, 1)
    }

    fn sample_loss_and_grads(&self, x: &[f64], label: usize) -> Result<(f64, ParamSet)> {
        let z = self.circuit.run(x)?[0];
        let probs = Self::probabilities(z);
        let logits = [math::ln(probs[0]), math::ln(probs[1])];
        let (loss, d_logits) = cross_entropy_loss(&logits, label)?;
        // d ln p₀/dz = 1/(2p₀), d ln p₁/dz = −1/(2p₁); the floor makes the
        // slope zero once a probability is clipped.
        let dp0 = if (1.0 + z) / 2.0 > PROB_FLOOR {
            0.5 / probs[0]
        } else {
            0.0
        };
        let dp1 = if (1.0 - z) / 2.0 > PROB_FLOOR {
            -0.5 / probs[1]
        } else {
            0.0
        };
        let d_z = d_logits[0] * dp0 + d_logits[1] * dp1;
        let mut set = ParamSet::default();
        if self.n_trainable() > 0 {
            let rows: Vec<usize> = self.trainable_rows().collect();
            let mut grads = Vec::with_capacity(self.n_trainable());
            for l in rows {
                for k in 0..self.circuit.n_qubits() {
                    grads.push(d_z * shift_grad_weight(&self.circuit, x, l, k)?[0]);
                }
            }
            set.push("quantum", grads);
        }
        Ok((loss, set))
    }
}
