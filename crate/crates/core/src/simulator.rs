//! Dense statevector simulator for the gate set {H, R_y, CNOT}.
//!
//! Qubit ordering is little-endian: qubit `k` is bit `k` of the amplitude
//! index, so basis index `b` has qubit `k` in state `(b >> k) & 1`.
//!
//! R_y uses the half-angle convention
//! `R_y(θ) = [[cos θ/2, -sin θ/2], [sin θ/2, cos θ/2]]`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math;

/// Largest register the simulator will allocate (2^24 amplitudes).
pub const MAX_QUBITS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Hadamard { target: usize },
    RotY { target: usize, angle: f64 },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn h(target: usize) -> Self {
        Gate::Hadamard { target }
    }

    pub fn ry(target: usize, angle: f64) -> Self {
        Gate::RotY { target, angle }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot { control, target }
    }

    fn check(&self, n_qubits: usize) -> Result<()> {
        let in_range = |q: usize| {
            if q < n_qubits {
                Ok(())
            } else {
                Err(Error::Index { index: q, n_qubits })
            }
        };
        match *self {
            Gate::Hadamard { target } | Gate::RotY { target, .. } => in_range(target),
            Gate::Cnot { control, target } => {
                in_range(control)?;
                in_range(target)?;
                if control == target {
                    return Err(Error::SameQubit(target));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// The `|0…0⟩` reference state.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Size(n_qubits));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Builds a state from raw amplitudes. The caller is responsible for
    /// normalisation; only the length is checked.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Shape(alloc::format!(
                "{len} amplitudes is not a power of two >= 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::Size(n_qubits));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies `gate` in place.
    pub fn apply_mut(&mut self, gate: &Gate) -> Result<()> {
        gate.check(self.n_qubits)?;
        match *gate {
            Gate::Hadamard { target } => {
                let s = FRAC_1_SQRT_2;
                self.apply_real_2x2(target, [[s, s], [s, -s]]);
            }
            Gate::RotY { target, angle } => {
                let c = math::cos(angle / 2.0);
                let s = math::sin(angle / 2.0);
                self.apply_real_2x2(target, [[c, -s], [s, c]]);
            }
            Gate::Cnot { control, target } => {
                let cmask = 1usize << control;
                let tmask = 1usize << target;
                for i in 0..self.amplitudes.len() {
                    // visit each swapped pair once, from its target-0 member
                    if i & cmask != 0 && i & tmask == 0 {
                        self.amplitudes.swap(i, i | tmask);
                    }
                }
            }
        }
        Ok(())
    }

    /// Returns a new state with `gate` applied; `self` is untouched.
    pub fn apply(&self, gate: &Gate) -> Result<Self> {
        let mut out = self.clone();
        out.apply_mut(gate)?;
        Ok(out)
    }

    // Both H and R_y are real, so the 2x2 update is done on real
    // coefficients over each (i, i | 2^k) amplitude pair.
    fn apply_real_2x2(&mut self, target: usize, m: [[f64; 2]; 2]) {
        let stride = 1usize << target;
        let len = self.amplitudes.len();
        let mut block = 0;
        while block < len {
            for i in block..block + stride {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i + stride];
                self.amplitudes[i] = a0 * m[0][0] + a1 * m[0][1];
                self.amplitudes[i + stride] = a0 * m[1][0] + a1 * m[1][1];
            }
            block += 2 * stride;
        }
    }

    /// Pauli-Z expectation of one qubit.
    pub fn expect_z(&self, qubit: usize) -> Result<f64> {
        if qubit >= self.n_qubits {
            return Err(Error::Index {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        let mask = 1usize << qubit;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(b, a)| {
                let p = a.norm_sqr();
                if b & mask == 0 {
                    p
                } else {
                    -p
                }
            })
            .sum())
    }

    /// Pauli-Z expectations of every qubit, indexed by qubit.
    pub fn expect_z_all(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_qubits];
        for (b, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            for (k, z) in out.iter_mut().enumerate() {
                if (b >> k) & 1 == 0 {
                    *z += p;
                } else {
                    *z -= p;
                }
            }
        }
        out
    }
}

/// `|0…0⟩` on `n_qubits` qubits.
pub fn init_zero(n_qubits: usize) -> Result<StateVector> {
    StateVector::zero(n_qubits)
}

/// Pure gate application.
pub fn apply_gate(state: &StateVector, gate: &Gate) -> Result<StateVector> {
    state.apply(gate)
}

pub fn expect_z(state: &StateVector, qubit: usize) -> Result<f64> {
    state.expect_z(qubit)
}

pub fn expect_z_all(state: &StateVector) -> Vec<f64> {
    state.expect_z_all()
}
