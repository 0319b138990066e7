//! Parameter-shift derivatives of the bare circuit.
//!
//! Every parametrised gate is an R_y rotation, whose generator has
//! eigenvalues ±1/2, so
//! `∂f/∂θ = [f(θ + π/2) − f(θ − π/2)] / 2` holds exactly. Inputs enter
//! through the angle `x_k·π/2`; shifting that angle by ±π/2 is the same as
//! shifting `x_k` by ±1, and the chain rule contributes a factor of π/2.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::circuit::BareCircuit;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumJacobians {
    n_qubits: usize,
    depth: usize,
    /// `∂y_i/∂w_{l,k}` at `[(i * depth + l) * n_qubits + k]`.
    pub dy_dw: Vec<f64>,
    /// `∂y_i/∂x_k` at `[i * n_qubits + k]`.
    pub dy_dx: Vec<f64>,
    /// Number of bare-circuit evaluations spent.
    pub evaluations: usize,
}

impl QuantumJacobians {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn d_weight(&self, output: usize, layer: usize, qubit: usize) -> f64 {
        self.dy_dw[(output * self.depth + layer) * self.n_qubits + qubit]
    }

    pub fn d_input(&self, output: usize, input: usize) -> f64 {
        self.dy_dx[output * self.n_qubits + input]
    }

    /// `Jᵀ·upstream` restricted to the weights, laid out like the weight matrix.
    pub fn weight_vjp(&self, upstream: &[f64]) -> Vec<f64> {
        let per_output = self.depth * self.n_qubits;
        let mut out = vec![0.0; per_output];
        for (i, &u) in upstream.iter().enumerate() {
            let row = &self.dy_dw[i * per_output..(i + 1) * per_output];
            for (o, &d) in out.iter_mut().zip(row) {
                *o += u * d;
            }
        }
        out
    }

    /// `Jᵀ·upstream` restricted to the inputs.
    pub fn input_vjp(&self, upstream: &[f64]) -> Vec<f64> {
        let n = self.n_qubits;
        let mut out = vec![0.0; n];
        for (i, &u) in upstream.iter().enumerate() {
            for (k, o) in out.iter_mut().enumerate() {
                *o += u * self.dy_dx[i * n + k];
            }
        }
        out
    }
}

fn check_indices(circuit: &BareCircuit, layer: usize, qubit: usize) -> Result<()> {
    if layer >= circuit.depth() {
        return Err(Error::Index {
            index: layer,
            n_qubits: circuit.depth(),
        });
    }
    if qubit >= circuit.n_qubits() {
        return Err(Error::Index {
            index: qubit,
            n_qubits: circuit.n_qubits(),
        });
    }
    Ok(())
}

fn half_difference(plus: &[f64], minus: &[f64], scale: f64) -> Vec<f64> {
    plus.iter()
        .zip(minus)
        .map(|(p, m)| scale * (p - m) / 2.0)
        .collect()
}

/// `∂y/∂w_{layer,qubit}` for every output `y`.
pub fn shift_grad_weight(
    circuit: &BareCircuit,
    x: &[f64],
    layer: usize,
    qubit: usize,
) -> Result<Vec<f64>> {
    check_indices(circuit, layer, qubit)?;
    let mut shifted = circuit.clone();
    let w = circuit.weight(layer, qubit);
    shifted.set_weight(layer, qubit, w + FRAC_PI_2);
    let plus = shifted.run(x)?;
    shifted.set_weight(layer, qubit, w - FRAC_PI_2);
    let minus = shifted.run(x)?;
    Ok(half_difference(&plus, &minus, 1.0))
}

/// `∂y/∂x_qubit` for every output `y`.
pub fn shift_grad_input(circuit: &BareCircuit, x: &[f64], qubit: usize) -> Result<Vec<f64>> {
    if x.len() != circuit.n_qubits() {
        return Err(Error::Arity {
            expected: circuit.n_qubits(),
            got: x.len(),
        });
    }
    if qubit >= circuit.n_qubits() {
        return Err(Error::Index {
            index: qubit,
            n_qubits: circuit.n_qubits(),
        });
    }
    let mut shifted = x.to_vec();
    shifted[qubit] = x[qubit] + 1.0;
    let plus = circuit.run(&shifted)?;
    shifted[qubit] = x[qubit] - 1.0;
    let minus = circuit.run(&shifted)?;
    Ok(half_difference(&plus, &minus, FRAC_PI_2))
}

/// Input-only Jacobian: `2·n_qubits` circuit evaluations.
pub fn input_jacobian(circuit: &BareCircuit, x: &[f64]) -> Result<QuantumJacobians> {
    let n = circuit.n_qubits();
    let mut dy_dx = vec![0.0; n * n];
    for k in 0..n {
        let col = shift_grad_input(circuit, x, k)?;
        for (i, d) in col.into_iter().enumerate() {
            dy_dx[i * n + k] = d;
        }
    }
    Ok(QuantumJacobians {
        n_qubits: n,
        depth: circuit.depth(),
        dy_dw: Vec::new(),
        dy_dx,
        evaluations: 2 * n,
    })
}

/// Full weight and input Jacobians: exactly `2·(depth·n + n)` evaluations.
pub fn bare_jacobians(circuit: &BareCircuit, x: &[f64]) -> Result<QuantumJacobians> {
    let n = circuit.n_qubits();
    let depth = circuit.depth();
    let mut jac = input_jacobian(circuit, x)?;
    let mut dy_dw = vec![0.0; n * depth * n];
    for l in 0..depth {
        for k in 0..n {
            let col = shift_grad_weight(circuit, x, l, k)?;
            for (i, d) in col.into_iter().enumerate() {
                dy_dw[(i * depth + l) * n + k] = d;
            }
            jac.evaluations += 2;
        }
    }
    jac.dy_dw = dy_dw;
    Ok(jac)
}
