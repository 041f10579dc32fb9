//! Exact pure-state simulation of small qubit registers.
//!
//! Bit `b` of an amplitude index addresses qubit `b` (little-endian).
//! Gates are applied as strided in-place updates on amplitude pairs.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{bail, Result};
use crate::math::{cos, sin, FRAC_PI_2};

pub const MAX_QUBITS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct QubitState {
    pub num_qubits: usize,
    pub amplitudes: Vec<Complex64>,
}

impl QubitState {
    /// `|0...0>`.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            bail!(InvalidArgument, "qubit count {num_qubits} outside 1..={MAX_QUBITS}");
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amplitudes })
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            bail!(InvalidArgument, "qubit {q} out of range for {} qubits", self.num_qubits);
        }
        Ok(())
    }

    /// Calls `f(i0, i1)` for every index pair differing only in bit `q`
    /// (bit clear in `i0`).
    fn for_pairs(&mut self, q: usize, mut f: impl FnMut(&mut [Complex64], usize, usize)) {
        let stride = 1usize << q;
        let len = self.amplitudes.len();
        let mut base = 0;
        while base < len {
            for i0 in base..base + stride {
                f(&mut self.amplitudes, i0, i0 + stride);
            }
            base += 2 * stride;
        }
    }

    /// `RY(phi) = [[cos(phi/2), -sin(phi/2)], [sin(phi/2), cos(phi/2)]]`.
    pub fn ry(&mut self, qubit: usize, phi: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        let (s, c) = (sin(0.5 * phi), cos(0.5 * phi));
        self.for_pairs(qubit, |a, i0, i1| {
            let (a0, a1) = (a[i0], a[i1]);
            a[i0] = a0 * c - a1 * s;
            a[i1] = a0 * s + a1 * c;
        });
        Ok(())
    }

    /// `RZ(phi) = diag(e^{-i phi/2}, e^{i phi/2})`.
    pub fn rz(&mut self, qubit: usize, phi: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        let lo = Complex64::new(cos(0.5 * phi), -sin(0.5 * phi));
        let hi = lo.conj();
        self.for_pairs(qubit, |a, i0, i1| {
            a[i0] *= lo;
            a[i1] *= hi;
        });
        Ok(())
    }

    /// Flips `target` on every basis state whose `control` bit is set.
    pub fn cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            bail!(InvalidArgument, "CNOT control and target are both qubit {control}");
        }
        let cmask = 1usize << control;
        self.for_pairs(target, |a, i0, i1| {
            if i0 & cmask != 0 {
                a.swap(i0, i1);
            }
        });
        Ok(())
    }

    /// `<Z>` on one qubit: `sum (-1)^bit |a|^2`.
    pub fn expect_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let mask = 1usize << qubit;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| if i & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

pub fn zero_state(num_qubits: usize) -> Result<QubitState> {
    QubitState::zero(num_qubits)
}

pub fn apply_ry(state: &QubitState, qubit: usize, phi: f64) -> Result<QubitState> {
    let mut s = state.clone();
    s.ry(qubit, phi)?;
    Ok(s)
}

pub fn apply_rz(state: &QubitState, qubit: usize, phi: f64) -> Result<QubitState> {
    let mut s = state.clone();
    s.rz(qubit, phi)?;
    Ok(s)
}

pub fn apply_cnot(state: &QubitState, control: usize, target: usize) -> Result<QubitState> {
    let mut s = state.clone();
    s.cnot(control, target)?;
    Ok(s)
}

pub fn expect_z(state: &QubitState, qubit: usize) -> Result<f64> {
    state.expect_z(qubit)
}

/// Where a rotation gate takes its angle from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Fixed(f64),
    /// Trainable parameter `params[i]`.
    Param(usize),
    /// Per-sample input angle `inputs[i]`.
    Input(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    Ry(usize, Angle),
    Rz(usize, Angle),
    Cnot { control: usize, target: usize },
}

/// A parameterized gate sequence measured by `<Z>` on every qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub num_qubits: usize,
    pub ops: Vec<Op>,
}

/// Which gate argument a shift is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Param(usize),
    Input(usize),
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self { num_qubits, ops: Vec::new() }
    }

    pub fn push(&mut self, op: Op) -> &mut Self {
        self.ops.push(op);
        self
    }

    fn angle(a: Angle, params: &[f64], inputs: &[f64]) -> Result<f64> {
        Ok(match a {
            Angle::Fixed(v) => v,
            Angle::Param(i) => match params.get(i) {
                Some(&v) => v,
                None => bail!(InvalidArgument, "parameter {i} missing ({} given)", params.len()),
            },
            Angle::Input(i) => match inputs.get(i) {
                Some(&v) => v,
                None => bail!(InvalidArgument, "input {i} missing ({} given)", inputs.len()),
            },
        })
    }

    /// Runs the circuit, adding `shift` to the angle of op number `shifted_op`.
    fn run_shifted(&self, params: &[f64], inputs: &[f64], shifted_op: Option<(usize, f64)>) -> Result<QubitState> {
        let mut state = QubitState::zero(self.num_qubits)?;
        for (k, op) in self.ops.iter().enumerate() {
            let extra = match shifted_op {
                Some((idx, s)) if idx == k => s,
                _ => 0.0,
            };
            match *op {
                Op::Ry(q, a) => state.ry(q, Self::angle(a, params, inputs)? + extra)?,
                Op::Rz(q, a) => state.rz(q, Self::angle(a, params, inputs)? + extra)?,
                Op::Cnot { control, target } => state.cnot(control, target)?,
            }
        }
        Ok(state)
    }

    pub fn run(&self, params: &[f64], inputs: &[f64]) -> Result<QubitState> {
        self.run_shifted(params, inputs, None)
    }

    /// `<Z_q>` for every qubit `q`.
    pub fn expectations(&self, params: &[f64], inputs: &[f64]) -> Result<Vec<f64>> {
        let state = self.run(params, inputs)?;
        (0..self.num_qubits).map(|q| state.expect_z(q)).collect()
    }

    fn shift_grad(&self, params: &[f64], inputs: &[f64], slot: Slot) -> Result<Vec<f64>> {
        let mut grad = vec![0.0; self.num_qubits];
        let mut found = false;
        for (k, op) in self.ops.iter().enumerate() {
            let a = match *op {
                Op::Ry(_, a) | Op::Rz(_, a) => a,
                Op::Cnot { .. } => continue,
            };
            let hit = matches!((a, slot), (Angle::Param(i), Slot::Param(j)) | (Angle::Input(i), Slot::Input(j)) if i == j);
            if !hit {
                continue;
            }
            found = true;
            let plus = self.run_shifted(params, inputs, Some((k, FRAC_PI_2)))?;
            let minus = self.run_shifted(params, inputs, Some((k, -FRAC_PI_2)))?;
            for (q, g) in grad.iter_mut().enumerate() {
                *g += 0.5 * (plus.expect_z(q)? - minus.expect_z(q)?);
            }
        }
        if !found {
            bail!(InvalidArgument, "{slot:?} is not attached to any RY or RZ gate");
        }
        Ok(grad)
    }

    /// `d<Z_q>/d params[param_index]` for every qubit by the parameter-shift
    /// rule, summed over every gate that uses the parameter.
    pub fn param_shift_grad(&self, params: &[f64], inputs: &[f64], param_index: usize) -> Result<Vec<f64>> {
        self.shift_grad(params, inputs, Slot::Param(param_index))
    }

    /// `d<Z_q>/d inputs[input_index]`, same rule applied to an input angle.
    pub fn input_shift_grad(&self, params: &[f64], inputs: &[f64], input_index: usize) -> Result<Vec<f64>> {
        self.shift_grad(params, inputs, Slot::Input(input_index))
    }

    /// The exact inverse: reversed order, negated angles, same CNOTs.
    /// Angles are resolved against `params` and `inputs`.
    pub fn inverse(&self, params: &[f64], inputs: &[f64]) -> Result<Circuit> {
        let mut ops = Vec::with_capacity(self.ops.len());
        for op in self.ops.iter().rev() {
            ops.push(match *op {
                Op::Ry(q, a) => Op::Ry(q, Angle::Fixed(-Self::angle(a, params, inputs)?)),
                Op::Rz(q, a) => Op::Rz(q, Angle::Fixed(-Self::angle(a, params, inputs)?)),
                cnot => cnot,
            });
        }
        Ok(Circuit { num_qubits: self.num_qubits, ops })
    }

    /// Applies the circuit to an arbitrary starting state.
    pub fn apply_to(&self, state: &mut QubitState, params: &[f64], inputs: &[f64]) -> Result<()> {
        for op in &self.ops {
            match *op {
                Op::Ry(q, a) => state.ry(q, Self::angle(a, params, inputs)?)?,
                Op::Rz(q, a) => state.rz(q, Self::angle(a, params, inputs)?)?,
                Op::Cnot { control, target } => state.cnot(control, target)?,
            }
        }
        Ok(())
    }
}
