//! The bare variational circuit `M ∘ Q ∘ E`: angle embedding, `depth`
//! layers of R_y rotations followed by a CNOT chain, and per-qubit Pauli-Z
//! read-out.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::simulator::{Gate, StateVector, MAX_QUBITS};

/// Standard deviation of freshly initialised rotation angles.
pub const QUANTUM_INIT_STD: f64 = 0.01;

/// Weights are stored row-major: row `l` holds the `n_qubits` angles of
/// variational layer `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct BareCircuit {
    n_qubits: usize,
    depth: usize,
    weights: Vec<f64>,
}

impl BareCircuit {
    pub fn new(n_qubits: usize, depth: usize, weights: Vec<f64>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Size(n_qubits));
        }
        if weights.len() != depth * n_qubits {
            return Err(Error::Shape(alloc::format!(
                "{} weights for a {depth}x{n_qubits} circuit",
                weights.len()
            )));
        }
        Ok(Self {
            n_qubits,
            depth,
            weights,
        })
    }

    pub fn zeros(n_qubits: usize, depth: usize) -> Result<Self> {
        Self::new(n_qubits, depth, vec![0.0; n_qubits * depth])
    }

    /// Angles drawn from `Normal(0, 0.01²)`.
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, depth: usize, rng: &mut R) -> Result<Self> {
        let weights = init_quantum_weights(n_qubits * depth, rng);
        Self::new(n_qubits, depth, weights)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn row(&self, layer: usize) -> &[f64] {
        &self.weights[layer * self.n_qubits..(layer + 1) * self.n_qubits]
    }

    pub fn weight(&self, layer: usize, qubit: usize) -> f64 {
        self.weights[layer * self.n_qubits + qubit]
    }

    pub fn set_weight(&mut self, layer: usize, qubit: usize, value: f64) {
        self.weights[layer * self.n_qubits + qubit] = value;
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_qubits {
            return Err(Error::Arity {
                expected: self.n_qubits,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Statevector after embedding `x` and running every variational layer.
    pub fn final_state(&self, x: &[f64]) -> Result<StateVector> {
        self.check_input(x)?;
        let mut state = embed(x)?;
        for l in 0..self.depth {
            variational_layer_mut(&mut state, self.row(l))?;
        }
        Ok(state)
    }

    /// Z expectations of every qubit after the full circuit.
    pub fn run(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.final_state(x)?.expect_z_all())
    }

    /// Z expectations measured after the embedding and after every layer;
    /// entry `l` is the read-out of the first `l` layers.
    pub fn run_instrumented(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(x)?;
        let mut state = embed(x)?;
        let mut out = Vec::with_capacity(self.depth + 1);
        out.push(state.expect_z_all());
        for l in 0..self.depth {
            variational_layer_mut(&mut state, self.row(l))?;
            out.push(state.expect_z_all());
        }
        Ok(out)
    }
}

pub(crate) fn init_quantum_weights<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<f64> {
    let normal = Normal::new(0.0, QUANTUM_INIT_STD).expect("valid std");
    (0..count).map(|_| normal.sample(rng)).collect()
}

/// `⊗_k R_y(x_k·π/2)·H |0…0⟩`.
pub fn embed(x: &[f64]) -> Result<StateVector> {
    let mut state = StateVector::zero(x.len())?;
    for (k, &xk) in x.iter().enumerate() {
        state.apply_mut(&Gate::h(k))?;
        state.apply_mut(&Gate::ry(k, xk * FRAC_PI_2))?;
    }
    Ok(state)
}

/// Embedding into a register of a known width; rejects mismatched inputs.
pub fn embed_checked(x: &[f64], n_qubits: usize) -> Result<StateVector> {
    if x.len() != n_qubits {
        return Err(Error::Arity {
            expected: n_qubits,
            got: x.len(),
        });
    }
    embed(x)
}

/// CNOT(k, k+1) for ascending k. Identity on a single qubit.
pub fn entangler(state: &StateVector) -> StateVector {
    let mut out = state.clone();
    entangler_mut(&mut out);
    out
}

pub(crate) fn entangler_mut(state: &mut StateVector) {
    for k in 0..state.n_qubits().saturating_sub(1) {
        state
            .apply_mut(&Gate::cnot(k, k + 1))
            .expect("adjacent qubits are in range");
    }
}

/// Rotations `R_y(w_k)` on every qubit, then the entangler.
pub fn variational_layer(state: &StateVector, w_row: &[f64]) -> Result<StateVector> {
    let mut out = state.clone();
    variational_layer_mut(&mut out, w_row)?;
    Ok(out)
}

pub(crate) fn variational_layer_mut(state: &mut StateVector, w_row: &[f64]) -> Result<()> {
    if w_row.len() != state.n_qubits() {
        return Err(Error::Arity {
            expected: state.n_qubits(),
            got: w_row.len(),
        });
    }
    for (k, &w) in w_row.iter().enumerate() {
        state.apply_mut(&Gate::ry(k, w))?;
    }
    entangler_mut(state);
    Ok(())
}

pub fn run_bare(circuit: &BareCircuit, x: &[f64]) -> Result<Vec<f64>> {
    circuit.run(x)
}
