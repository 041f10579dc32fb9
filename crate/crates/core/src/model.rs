//! The three hybrid classifiers and their gradients.
//!
//! Every model maps a 4-component PCA feature vector to class logits in
//! three stages: z-score standardization with training-fold statistics, a
//! 32-parameter feature extractor, and a linear head `logits = W y + b`.
//!
//! Feature extractors:
//!
//! * **CV**: four modes start in vacuum; mode `i` is displaced by
//!   `D(z_i, 0)`. Each of the two layers then applies, using its 16
//!   parameters in this order, `D(d_i, 0)` on every mode, `R(phi_i)` on every
//!   mode, `S(r_i)` on every mode, `BS(theta, phi)` on modes (0, 1) and
//!   `BS(theta, phi)` on modes (2, 3). `y_i = <x_i>`.
//! * **DV**: `|0000>`; qubit `i` gets `RY(pi * clamp(z_i, -1, 1))`. Each layer
//!   applies `RY(a_i) RZ(b_i) RY(c_i) RZ(d_i)` on every qubit (parameters
//!   stored qubit-major, four per qubit), then `CNOT(0 -> 1)` and
//!   `CNOT(2 -> 3)`. `y_i = <Z_i>`.
//! * **Classical**: `y = tanh(B tanh(A z))` with `A`, `B` 4x4 row-major and
//!   no biases.
//!
//! Flat parameter layout used by gradients and the optimizer:
//! `[circuit (32) | head weights (C x 4, row-major) | head bias (C)]`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{bail, Result};
use crate::gaussian::GaussianState;
use crate::math::{exp, ln, tanh, PI};
use crate::rng::Xoshiro256;
use crate::statevector::{Angle, Circuit, Op, QubitState};

pub const NUM_WIRES: usize = 4;
pub const NUM_LAYERS: usize = 2;
pub const PARAMS_PER_LAYER: usize = 16;
pub const CIRCUIT_PARAMS: usize = NUM_LAYERS * PARAMS_PER_LAYER;
/// Central-difference step for CV circuit derivatives.
pub const CV_FD_STEP: f64 = 1e-4;

pub type Features = [f64; NUM_WIRES];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ModelKind {
    Cv,
    Dv,
    Classical,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Classical, ModelKind::Dv, ModelKind::Cv];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Cv => "cv",
            ModelKind::Dv => "dv",
            ModelKind::Classical => "classical",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cv" => Some(ModelKind::Cv),
            "dv" => Some(ModelKind::Dv),
            "classical" | "c" => Some(ModelKind::Classical),
            _ => None,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-component z-score statistics from a training fold.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureStats {
    pub mean: Features,
    pub std: Features,
}

impl FeatureStats {
    pub fn identity() -> Self {
        Self { mean: [0.0; NUM_WIRES], std: [1.0; NUM_WIRES] }
    }

    /// Mean and population standard deviation; a zero deviation is replaced by 1.
    pub fn fit(features: &[Features]) -> Result<Self> {
        if features.is_empty() {
            bail!(InsufficientData, "cannot standardize an empty feature set");
        }
        let n = features.len() as f64;
        let mut mean = [0.0; NUM_WIRES];
        for f in features {
            for i in 0..NUM_WIRES {
                mean[i] += f[i];
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut std = [0.0; NUM_WIRES];
        for f in features {
            for i in 0..NUM_WIRES {
                std[i] += (f[i] - mean[i]) * (f[i] - mean[i]);
            }
        }
        for s in std.iter_mut() {
            *s = libm::sqrt(*s / n);
            if !(*s > 1e-12) {
                *s = 1.0;
            }
        }
        Ok(Self { mean, std })
    }

    pub fn standardize(&self, f: &Features) -> Features {
        core::array::from_fn(|i| (f[i] - self.mean[i]) / self.std[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub logits: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl Prediction {
    pub fn from_logits(logits: Vec<f64>) -> Self {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| exp(l - max)).collect();
        let total: f64 = exps.iter().sum();
        let probabilities = exps.iter().map(|e| e / total).collect();
        Self { logits, probabilities }
    }

    /// Index of the largest logit (lowest index on ties).
    pub fn predicted_class(&self) -> usize {
        let mut best = 0;
        for (i, &l) in self.logits.iter().enumerate() {
            if l > self.logits[best] {
                best = i;
            }
        }
        best
    }

    fn log_sum_exp(&self) -> f64 {
        let max = self.logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        max + ln(self.logits.iter().map(|l| exp(l - max)).sum::<f64>())
    }
}

/// `-log softmax(logits)[label]`, evaluated through log-sum-exp.
pub fn loss_cross_entropy(prediction: &Prediction, label: usize) -> Result<f64> {
    if label >= prediction.logits.len() {
        bail!(InvalidArgument, "label {label} out of range for {} classes", prediction.logits.len());
    }
    Ok((prediction.log_sum_exp() - prediction.logits[label]).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub features: Features,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridModel {
    pub kind: ModelKind,
    pub num_classes: usize,
    pub circuit_params: Vec<f64>,
    /// Row-major `num_classes x 4`.
    pub head_weights: Vec<f64>,
    pub head_bias: Vec<f64>,
    pub feature_stats: FeatureStats,
}

/// Total trainable parameters for a head with `num_classes` outputs.
pub const fn parameter_count(num_classes: usize) -> usize {
    CIRCUIT_PARAMS + (NUM_WIRES + 1) * num_classes
}

impl HybridModel {
    /// All-zero parameters, identity standardization.
    pub fn zeros(kind: ModelKind, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            bail!(InvalidArgument, "a classifier needs at least two classes, got {num_classes}");
        }
        Ok(Self {
            kind,
            num_classes,
            circuit_params: vec![0.0; CIRCUIT_PARAMS],
            head_weights: vec![0.0; num_classes * NUM_WIRES],
            head_bias: vec![0.0; num_classes],
            feature_stats: FeatureStats::identity(),
        })
    }

    /// Circuit parameters uniform in (-0.1, 0.1), head weights then biases
    /// uniform in (-0.5, 0.5), drawn in that order from `rng`.
    pub fn init(kind: ModelKind, num_classes: usize, rng: &mut Xoshiro256) -> Result<Self> {
        let mut m = Self::zeros(kind, num_classes)?;
        m.circuit_params.iter_mut().for_each(|p| *p = rng.uniform(-0.1, 0.1));
        m.head_weights.iter_mut().for_each(|p| *p = rng.uniform(-0.5, 0.5));
        m.head_bias.iter_mut().for_each(|p| *p = rng.uniform(-0.5, 0.5));
        Ok(m)
    }

    pub fn num_params(&self) -> usize {
        parameter_count(self.num_classes)
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.num_params());
        v.extend_from_slice(&self.circuit_params);
        v.extend_from_slice(&self.head_weights);
        v.extend_from_slice(&self.head_bias);
        v
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            bail!(InvalidArgument, "expected {} parameters, got {}", self.num_params(), flat.len());
        }
        let (c, rest) = flat.split_at(CIRCUIT_PARAMS);
        let (w, b) = rest.split_at(self.num_classes * NUM_WIRES);
        self.circuit_params.copy_from_slice(c);
        self.head_weights.copy_from_slice(w);
        self.head_bias.copy_from_slice(b);
        Ok(())
    }

    /// Checks field shapes after deserialization or manual construction.
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            bail!(InvalidArgument, "num_classes must be at least 2");
        }
        if self.circuit_params.len() != CIRCUIT_PARAMS {
            bail!(InvalidArgument, "expected {CIRCUIT_PARAMS} circuit parameters, got {}", self.circuit_params.len());
        }
        if self.head_weights.len() != self.num_classes * NUM_WIRES || self.head_bias.len() != self.num_classes {
            bail!(InvalidArgument, "head shape does not match {} classes", self.num_classes);
        }
        if self.params_flat().iter().any(|v| !v.is_finite()) {
            bail!(InvalidData, "non-finite model parameter");
        }
        Ok(())
    }

    fn check_features(features: &Features) -> Result<()> {
        if features.iter().any(|v| !v.is_finite()) {
            bail!(InvalidData, "non-finite feature value");
        }
        Ok(())
    }

    fn head(&self, y: &Features) -> Vec<f64> {
        (0..self.num_classes)
            .map(|c| {
                let w = &self.head_weights[c * NUM_WIRES..(c + 1) * NUM_WIRES];
                w.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() + self.head_bias[c]
            })
            .collect()
    }

    /// Gaussian state produced by the CV circuit for standardized features `z`.
    pub fn cv_state(&self, z: &Features) -> Result<GaussianState> {
        cv_state_with(&self.circuit_params, z)
    }

    /// Statevector produced by the DV circuit for standardized features `z`.
    pub fn dv_state(&self, z: &Features) -> Result<QubitState> {
        dv_circuit().run(&self.circuit_params, &dv_angles(z))
    }

    /// Feature-extractor output `y` for standardized features `z`.
    pub fn embed(&self, z: &Features) -> Result<Features> {
        match self.kind {
            ModelKind::Cv => cv_embed(&self.circuit_params, z),
            ModelKind::Dv => {
                let e = dv_circuit().expectations(&self.circuit_params, &dv_angles(z))?;
                Ok(core::array::from_fn(|i| e[i]))
            }
            ModelKind::Classical => Ok(classical_forward(&self.circuit_params, z).1),
        }
    }

    /// Prediction for raw (unstandardized) PCA features.
    pub fn forward(&self, features: &Features) -> Result<Prediction> {
        Self::check_features(features)?;
        let z = self.feature_stats.standardize(features);
        Ok(Prediction::from_logits(self.head(&self.embed(&z)?)))
    }

    fn forward_as(&self, kind: ModelKind, features: &Features) -> Result<Prediction> {
        if self.kind != kind {
            bail!(InvalidArgument, "model kind is {}, not {kind}", self.kind);
        }
        self.forward(features)
    }

    pub fn forward_cv(&self, features: &Features) -> Result<Prediction> {
        self.forward_as(ModelKind::Cv, features)
    }

    pub fn forward_dv(&self, features: &Features) -> Result<Prediction> {
        self.forward_as(ModelKind::Dv, features)
    }

    pub fn forward_classical(&self, features: &Features) -> Result<Prediction> {
        self.forward_as(ModelKind::Classical, features)
    }

    /// Mean cross-entropy over `batch`.
    pub fn batch_loss(&self, batch: &[Sample]) -> Result<f64> {
        if batch.is_empty() {
            bail!(InvalidArgument, "empty batch");
        }
        let mut total = 0.0;
        for s in batch {
            total += loss_cross_entropy(&self.forward(&s.features)?, s.label)?;
        }
        Ok(total / batch.len() as f64)
    }

    /// Jacobian `dy_i / dtheta_j` of the extractor at `z`, `[j][i]`.
    fn circuit_jacobian(&self, z: &Features) -> Result<Vec<Features>> {
        match self.kind {
            ModelKind::Cv => {
                let mut params = self.circuit_params.clone();
                (0..CIRCUIT_PARAMS)
                    .map(|j| {
                        let base = params[j];
                        params[j] = base + CV_FD_STEP;
                        let plus = cv_embed(&params, z)?;
                        params[j] = base - CV_FD_STEP;
                        let minus = cv_embed(&params, z)?;
                        params[j] = base;
                        Ok(core::array::from_fn(|i| (plus[i] - minus[i]) / (2.0 * CV_FD_STEP)))
                    })
                    .collect()
            }
            ModelKind::Dv => {
                let circ = dv_circuit();
                let angles = dv_angles(z);
                (0..CIRCUIT_PARAMS)
                    .map(|j| {
                        let g = circ.param_shift_grad(&self.circuit_params, &angles, j)?;
                        Ok(core::array::from_fn(|i| g[i]))
                    })
                    .collect()
            }
            ModelKind::Classical => unreachable!("classical gradients are back-propagated"),
        }
    }

    /// Mean loss gradient over `batch` in the flat parameter layout.
    pub fn grad_all(&self, batch: &[Sample]) -> Result<Vec<f64>> {
        if batch.is_empty() {
            bail!(InvalidArgument, "empty batch");
        }
        let c = self.num_classes;
        let mut grad = vec![0.0; self.num_params()];
        for s in batch {
            if s.label >= c {
                bail!(InvalidArgument, "label {} out of range for {c} classes", s.label);
            }
            Self::check_features(&s.features)?;
            let z = self.feature_stats.standardize(&s.features);
            let (hidden, y) = match self.kind {
                ModelKind::Classical => {
                    let (h, y) = classical_forward(&self.circuit_params, &z);
                    (Some(h), y)
                }
                _ => (None, self.embed(&z)?),
            };
            let pred = Prediction::from_logits(self.head(&y));
            // dL/dlogits = p - onehot
            let mut g_logits = pred.probabilities.clone();
            g_logits[s.label] -= 1.0;

            let (g_circ, g_head) = grad.split_at_mut(CIRCUIT_PARAMS);
            let (g_w, g_b) = g_head.split_at_mut(c * NUM_WIRES);
            let mut g_y = [0.0; NUM_WIRES];
            for k in 0..c {
                g_b[k] += g_logits[k];
                for i in 0..NUM_WIRES {
                    g_w[k * NUM_WIRES + i] += g_logits[k] * y[i];
                    g_y[i] += self.head_weights[k * NUM_WIRES + i] * g_logits[k];
                }
            }
            match hidden {
                Some(h1) => {
                    let g = classical_backward(&self.circuit_params, &z, &h1, &y, &g_y);
                    g_circ.iter_mut().zip(g.iter()).for_each(|(a, b)| *a += b);
                }
                None => {
                    let jac = self.circuit_jacobian(&z)?;
                    for (gj, col) in g_circ.iter_mut().zip(&jac) {
                        *gj += col.iter().zip(&g_y).map(|(a, b)| a * b).sum::<f64>();
                    }
                }
            }
        }
        let n = batch.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        Ok(grad)
    }

    /// `d logit_target / d features` for raw PCA features (standardization
    /// included). CV uses central differences on the inputs, DV the
    /// parameter-shift rule on the encoding angles, Classical back-propagation.
    pub fn input_gradient(&self, features: &Features, target_class: usize) -> Result<Features> {
        if target_class >= self.num_classes {
            bail!(InvalidArgument, "target class {target_class} out of range for {} classes", self.num_classes);
        }
        Self::check_features(features)?;
        let z = self.feature_stats.standardize(features);
        let w = &self.head_weights[target_class * NUM_WIRES..(target_class + 1) * NUM_WIRES];
        let g_y: Features = core::array::from_fn(|i| w[i]);
        let g_z: Features = match self.kind {
            ModelKind::Cv => {
                let mut g = [0.0; NUM_WIRES];
                let mut zz = z;
                for j in 0..NUM_WIRES {
                    zz[j] = z[j] + CV_FD_STEP;
                    let plus = cv_embed(&self.circuit_params, &zz)?;
                    zz[j] = z[j] - CV_FD_STEP;
                    let minus = cv_embed(&self.circuit_params, &zz)?;
                    zz[j] = z[j];
                    g[j] = (0..NUM_WIRES).map(|i| g_y[i] * (plus[i] - minus[i]) / (2.0 * CV_FD_STEP)).sum();
                }
                g
            }
            ModelKind::Dv => {
                let circ = dv_circuit();
                let angles = dv_angles(&z);
                let mut g = [0.0; NUM_WIRES];
                for j in 0..NUM_WIRES {
                    if z[j].abs() >= 1.0 {
                        continue; // clamped: angle is locally constant
                    }
                    let dy = circ.input_shift_grad(&self.circuit_params, &angles, j)?;
                    g[j] = PI * (0..NUM_WIRES).map(|i| g_y[i] * dy[i]).sum::<f64>();
                }
                g
            }
            ModelKind::Classical => {
                let (h1, y) = classical_forward(&self.circuit_params, &z);
                classical_input_backward(&self.circuit_params, &h1, &y, &g_y)
            }
        };
        Ok(core::array::from_fn(|j| g_z[j] / self.feature_stats.std[j]))
    }
}

pub fn forward_cv(model: &HybridModel, features: &Features) -> Result<Prediction> {
    model.forward_cv(features)
}

pub fn forward_dv(model: &HybridModel, features: &Features) -> Result<Prediction> {
    model.forward_dv(features)
}

pub fn forward_classical(model: &HybridModel, features: &Features) -> Result<Prediction> {
    model.forward_classical(features)
}

pub fn grad_all(model: &HybridModel, batch: &[Sample]) -> Result<Vec<f64>> {
    model.grad_all(batch)
}

fn cv_state_with(params: &[f64], z: &Features) -> Result<GaussianState> {
    let mut st = GaussianState::vacuum(NUM_WIRES)?;
    for (i, &zi) in z.iter().enumerate() {
        st.displace(i, zi, 0.0)?;
    }
    for layer in params.chunks_exact(PARAMS_PER_LAYER) {
        for i in 0..NUM_WIRES {
            st.displace(i, layer[i], 0.0)?;
        }
        for i in 0..NUM_WIRES {
            st.rotate(i, layer[4 + i])?;
        }
        for i in 0..NUM_WIRES {
            st.squeeze(i, layer[8 + i])?;
        }
        st.beamsplit(0, 1, layer[12], layer[13])?;
        st.beamsplit(2, 3, layer[14], layer[15])?;
    }
    Ok(st)
}

fn cv_embed(params: &[f64], z: &Features) -> Result<Features> {
    let st = cv_state_with(params, z)?;
    Ok(core::array::from_fn(|i| st.mean[i]))
}

/// The DV circuit with encoding angles as inputs 0..4 and the 32 trainable
/// angles as parameters.
pub fn dv_circuit() -> Circuit {
    let mut c = Circuit::new(NUM_WIRES);
    for q in 0..NUM_WIRES {
        c.push(Op::Ry(q, Angle::Input(q)));
    }
    for layer in 0..NUM_LAYERS {
        let base = layer * PARAMS_PER_LAYER;
        for q in 0..NUM_WIRES {
            let p = base + 4 * q;
            c.push(Op::Ry(q, Angle::Param(p)));
            c.push(Op::Rz(q, Angle::Param(p + 1)));
            c.push(Op::Ry(q, Angle::Param(p + 2)));
            c.push(Op::Rz(q, Angle::Param(p + 3)));
        }
        c.push(Op::Cnot { control: 0, target: 1 });
        c.push(Op::Cnot { control: 2, target: 3 });
    }
    c
}

/// Encoding angles `pi * clamp(z, -1, 1)`.
pub fn dv_angles(z: &Features) -> [f64; NUM_WIRES] {
    core::array::from_fn(|i| PI * z[i].clamp(-1.0, 1.0))
}

fn matvec4(m: &[f64], v: &Features) -> Features {
    core::array::from_fn(|i| (0..NUM_WIRES).map(|j| m[i * NUM_WIRES + j] * v[j]).sum())
}

/// Returns `(h1, h2)` with `h1 = tanh(A z)`, `h2 = tanh(B h1)`.
fn classical_forward(params: &[f64], z: &Features) -> (Features, Features) {
    let (a, b) = params.split_at(NUM_WIRES * NUM_WIRES);
    let h1 = matvec4(a, z).map(tanh);
    let h2 = matvec4(b, &h1).map(tanh);
    (h1, h2)
}

/// Returns `(delta1, delta2)`: loss gradients at the two pre-activations.
fn classical_deltas(params: &[f64], h1: &Features, h2: &Features, g_y: &Features) -> (Features, Features) {
    let b = &params[NUM_WIRES * NUM_WIRES..];
    let d2: Features = core::array::from_fn(|i| g_y[i] * (1.0 - h2[i] * h2[i]));
    let d1: Features = core::array::from_fn(|j| {
        let back: f64 = (0..NUM_WIRES).map(|i| b[i * NUM_WIRES + j] * d2[i]).sum();
        back * (1.0 - h1[j] * h1[j])
    });
    (d1, d2)
}

fn classical_backward(params: &[f64], z: &Features, h1: &Features, h2: &Features, g_y: &Features) -> [f64; CIRCUIT_PARAMS] {
    let (d1, d2) = classical_deltas(params, h1, h2, g_y);
    let mut g = [0.0; CIRCUIT_PARAMS];
    for i in 0..NUM_WIRES {
        for j in 0..NUM_WIRES {
            g[i * NUM_WIRES + j] = d1[i] * z[j];
            g[NUM_WIRES * NUM_WIRES + i * NUM_WIRES + j] = d2[i] * h1[j];
        }
    }
    g
}

fn classical_input_backward(params: &[f64], h1: &Features, h2: &Features, g_y: &Features) -> Features {
    let a = &params[..NUM_WIRES * NUM_WIRES];
    let (d1, _) = classical_deltas(params, h1, h2, g_y);
    core::array::from_fn(|j| (0..NUM_WIRES).map(|i| a[i * NUM_WIRES + j] * d1[i]).sum())
}
