//! Simulation and evaluation core for small hybrid quantum-classical
//! image classifiers.
//!
//! The crate is `no_std` (it needs `alloc`) and carries no IO. It provides:
//!
//! * [`gaussian`]: n-mode Gaussian states tracked by quadrature means and
//!   covariances, with displacement, rotation, squeezing and beamsplitter
//!   gates acting as symplectic maps.
//! * [`statevector`]: exact qubit statevectors with RY/RZ/CNOT gates,
//!   Pauli-Z expectations and parameter-shift derivatives.
//! * [`pca`]: a top-k principal component encoder fitted by orthogonal
//!   subspace iteration.
//! * [`model`]: the three 42-parameter classifiers (CV circuit, DV circuit,
//!   classical surrogate) with loss and gradients.
//! * [`train`]: Adam, stratified k-fold splitting, and the seeded training loop.
//! * [`metrics`] and [`stats`]: confusion-matrix metrics, ROC/PR curves, and
//!   Friedman / exact Wilcoxon tests with Bonferroni correction.
//! * [`data`], [`noise`] and [`saliency`]: labelled image sets, pixel-noise
//!   injection and input-gradient maps.
//!
//! Quadratures use the vacuum-covariance-equals-identity convention and the
//! block ordering `(x_1..x_n, p_1..p_n)`. Qubit indices are little-endian.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
mod linalg;
mod math;

pub mod data;
pub mod gaussian;
pub mod metrics;
pub mod model;
pub mod noise;
pub mod pca;
pub mod rng;
pub mod saliency;
pub mod stats;
pub mod statevector;
pub mod train;

pub use error::{Error, Result};
pub use linalg::jacobi_eigh;
