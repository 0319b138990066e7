//! Dense layers, softmax cross-entropy and Adam.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Tanh => math::tanh(z),
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
        }
    }

    /// Derivative at the pre-activation `z`.
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => {
                let t = math::tanh(z);
                1.0 - t * t
            }
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "identity" => Some(Activation::Identity),
            "tanh" => Some(Activation::Tanh),
            "relu" => Some(Activation::Relu),
            _ => None,
        }
    }
}

/// `y = φ(W x + b)` with `W` stored row-major as `n_out × n_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    n_in: usize,
    n_out: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
    pub frozen: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub d_weights: Vec<f64>,
    pub d_bias: Vec<f64>,
    pub d_input: Vec<f64>,
}

impl DenseLayer {
    pub fn new(
        n_in: usize,
        n_out: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if n_in == 0 || n_out == 0 {
            return Err(Error::Shape(format!("dense layer {n_in}->{n_out}")));
        }
        if weights.len() != n_in * n_out || bias.len() != n_out {
            return Err(Error::Shape(format!(
                "dense layer {n_in}->{n_out} given {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Shape(String::from("non-finite layer parameter")));
        }
        Ok(Self {
            n_in,
            n_out,
            weights,
            bias,
            activation,
            frozen: false,
        })
    }

    /// `W, b ~ Uniform(−1/√n_in, 1/√n_in)`.
    pub fn random<R: Rng + ?Sized>(
        n_in: usize,
        n_out: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let bound = 1.0 / math::sqrt(n_in.max(1) as f64);
        let mut draw = || rng.random_range(-bound..=bound);
        let weights = (0..n_in * n_out).map(|_| draw()).collect();
        let bias = (0..n_out).map(|_| draw()).collect();
        Self::new(n_in, n_out, weights, bias, activation)
    }

    pub fn identity(n: usize, activation: Activation) -> Self {
        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            weights[i * n + i] = 1.0;
        }
        Self::new(n, n, weights, vec![0.0; n], activation).expect("square identity")
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn frozen(mut self, frozen: bool) -> Self {
        self.frozen = frozen;
        self
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_in {
            return Err(Error::Arity {
                expected: self.n_in,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn pre_activation(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.n_in)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b)
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self
            .pre_activation(x)
            .into_iter()
            .map(|z| self.activation.apply(z))
            .collect())
    }

    /// Partials of `upstream · forward(x)` with respect to `W`, `b` and `x`.
    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<DenseGrads> {
        self.check_input(x)?;
        if upstream.len() != self.n_out {
            return Err(Error::Arity {
                expected: self.n_out,
                got: upstream.len(),
            });
        }
        let delta: Vec<f64> = self
            .pre_activation(x)
            .into_iter()
            .zip(upstream)
            .map(|(z, u)| u * self.activation.derivative(z))
            .collect();
        let mut d_weights = vec![0.0; self.n_in * self.n_out];
        let mut d_input = vec![0.0; self.n_in];
        for (o, &d) in delta.iter().enumerate() {
            let row = &self.weights[o * self.n_in..(o + 1) * self.n_in];
            let d_row = &mut d_weights[o * self.n_in..(o + 1) * self.n_in];
            for i in 0..self.n_in {
                d_row[i] = d * x[i];
                d_input[i] += row[i] * d;
            }
        }
        Ok(DenseGrads {
            d_weights,
            d_bias: delta,
            d_input,
        })
    }
}

pub fn dense_forward(layer: &DenseLayer, x: &[f64]) -> Result<Vec<f64>> {
    layer.forward(x)
}

pub fn dense_backward(layer: &DenseLayer, x: &[f64], upstream: &[f64]) -> Result<DenseGrads> {
    layer.backward(x, upstream)
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| math::exp(l - max)).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Log-softmax cross-entropy and its gradient `softmax − one_hot(label)`.
pub fn cross_entropy_loss(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= logits.len() {
        return Err(Error::Label {
            label,
            n_classes: logits.len(),
        });
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = math::ln(logits.iter().map(|l| math::exp(l - max)).sum::<f64>()) + max;
    let loss = log_sum - logits[label];
    let mut grad = softmax(logits);
    grad[label] -= 1.0;
    Ok((loss, grad))
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// A named block of trainable parameters (or gradients for them).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGroup {
    pub name: String,
    pub values: Vec<f64>,
}

/// The trainable parameters of a model. Frozen blocks have no entry.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    pub groups: Vec<ParamGroup>,
}

impl ParamSet {
    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        self.groups.push(ParamGroup {
            name: name.into(),
            values,
        });
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.groups
            .iter()
            .find(|g| g.name == name)
            .map(|g| g.values.as_slice())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn len(&self) -> usize {
        self.groups.iter().map(|g| g.values.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            groups: self
                .groups
                .iter()
                .map(|g| ParamGroup {
                    name: g.name.clone(),
                    values: vec![0.0; g.values.len()],
                })
                .collect(),
        }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.groups.len() == other.groups.len()
            && self
                .groups
                .iter()
                .zip(&other.groups)
                .all(|(a, b)| a.name == b.name && a.values.len() == b.values.len())
    }

    pub fn flat(&self) -> Vec<f64> {
        self.groups
            .iter()
            .flat_map(|g| g.values.iter().copied())
            .collect()
    }

    /// `self += scale · other`, element-wise. Shapes must match.
    pub fn add_scaled(&mut self, other: &Self, scale: f64) {
        for (a, b) in self.groups.iter_mut().zip(&other.groups) {
            for (x, y) in a.values.iter_mut().zip(&b.values) {
                *x += scale * y;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam with bias-corrected moments. The moment buffers mirror the shape
/// of the parameter set the optimiser was created for.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    pub step_count: u64,
    pub m: ParamSet,
    pub v: ParamSet,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &ParamSet) -> Self {
        Self {
            config,
            step_count: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }

    pub fn step(&mut self, params: &mut ParamSet, grads: &ParamSet) -> Result<()> {
        if !params.same_shape(&self.m) || !grads.same_shape(&self.m) {
            return Err(Error::Shape(String::from(
                "parameter or gradient set does not match optimiser state",
            )));
        }
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        self.step_count += 1;
        let t = self.step_count as i32;
        let bias1 = 1.0 - libm::pow(beta1, t as f64);
        let bias2 = 1.0 - libm::pow(beta2, t as f64);
        for (((p, g), m), v) in params
            .groups
            .iter_mut()
            .zip(&grads.groups)
            .zip(&mut self.m.groups)
            .zip(&mut self.v.groups)
        {
            for i in 0..p.values.len() {
                let gi = g.values[i];
                m.values[i] = beta1 * m.values[i] + (1.0 - beta1) * gi;
                v.values[i] = beta2 * v.values[i] + (1.0 - beta2) * gi * gi;
                let m_hat = m.values[i] / bias1;
                let v_hat = v.values[i] / bias2;
                p.values[i] -= learning_rate * m_hat / (math::sqrt(v_hat) + epsilon);
            }
        }
        Ok(())
    }
}

/// Multiplies the learning rate by `factor` every `every_epochs` epochs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDecay {
    pub factor: f64,
    pub every_epochs: usize,
}

impl StepDecay {
    pub fn rate_at(&self, base: f64, epoch: usize) -> f64 {
        if self.every_epochs == 0 {
            return base;
        }
        base * libm::pow(self.factor, (epoch / self.every_epochs) as f64)
    }
}
