//! Top-k principal component encoder.
//!
//! The covariance (normalized by `m - 1`) is formed explicitly and its
//! leading eigenpairs are found by orthogonal subspace iteration with a
//! Rayleigh–Ritz step on every sweep. The block carries a few extra
//! vectors beyond `k` so convergence depends on the gap after the block,
//! not after `k`. The starting block is drawn from a fixed-seed stream,
//! so a fit is a deterministic function of the input bytes.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::linalg::{dot, jacobi_eigh, orthonormalize};
use crate::math::sqrt;
use crate::rng::Xoshiro256;

pub const MAX_ITERATIONS: usize = 5000;
/// Convergence threshold on the change of the top-k subspace between sweeps.
pub const SUBSPACE_TOLERANCE: f64 = 1e-10;
const OVERSAMPLE: usize = 8;
const START_SEED: u64 = 0x5043_4131; // "PCA1"

/// Pixel range accepted by [`PcaModel::fit_pixels`].
pub const PIXEL_GUARD: (f64, f64) = (-0.5, 1.5);

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PcaModel {
    pub input_dim: usize,
    pub k: usize,
    pub mean: Vec<f64>,
    /// Row-major `k x input_dim`; rows are orthonormal.
    pub components: Vec<f64>,
    /// Component variances (eigenvalues of the sample covariance).
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    /// Sweeps used by the eigensolver.
    pub iterations: usize,
}

impl PcaModel {
    /// Fits `k` components to `data`, `m` rows of `dim` values each.
    pub fn fit(data: &[f64], dim: usize, k: usize) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            bail!(InvalidArgument, "data length {} is not a multiple of dimension {dim}", data.len());
        }
        if k == 0 || k > dim {
            bail!(InvalidArgument, "component count {k} must be in 1..={dim}");
        }
        let m = data.len() / dim;
        if m <= k {
            bail!(InsufficientData, "{m} samples cannot support {k} components");
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            bail!(InvalidData, "non-finite value at row {}, column {}", pos / dim, pos % dim);
        }

        let mut mean = vec![0.0; dim];
        for row in data.chunks_exact(dim) {
            for (acc, v) in mean.iter_mut().zip(row) {
                *acc += v;
            }
        }
        mean.iter_mut().for_each(|v| *v /= m as f64);

        let cov = covariance(data, &mean, dim);
        let trace: f64 = (0..dim).map(|i| cov[i * dim + i]).sum();
        let (values, mut components, iterations) = top_eigenpairs(&cov, dim, k);

        for row in components.chunks_exact_mut(dim) {
            let mut lead = 0;
            for (i, v) in row.iter().enumerate() {
                if v.abs() > row[lead].abs() {
                    lead = i;
                }
            }
            if row[lead] < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
            }
        }
        let explained_variance: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
        let explained_variance_ratio = explained_variance
            .iter()
            .map(|v| if trace > 0.0 { (v / trace).min(1.0) } else { 0.0 })
            .collect();
        Ok(Self { input_dim: dim, k, mean, components, explained_variance, explained_variance_ratio, iterations })
    }

    /// [`fit`](Self::fit) for normalized pixel data, rejecting values outside
    /// [`PIXEL_GUARD`] (which usually means the `/255` step was skipped).
    pub fn fit_pixels(data: &[f64], dim: usize, k: usize) -> Result<Self> {
        let (lo, hi) = PIXEL_GUARD;
        if let Some(v) = data.iter().find(|v| !(**v >= lo && **v <= hi)) {
            bail!(InvalidData, "pixel value {v} outside [{lo}, {hi}]; expected normalized intensities");
        }
        Self::fit(data, dim, k)
    }

    pub fn cumulative_ratio(&self) -> f64 {
        self.explained_variance_ratio.iter().sum()
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.components[i * self.input_dim..(i + 1) * self.input_dim]
    }

    /// `components . (image - mean)`.
    pub fn transform(&self, image: &[f64]) -> Result<Vec<f64>> {
        if image.len() != self.input_dim {
            bail!(InvalidArgument, "expected {} values, got {}", self.input_dim, image.len());
        }
        if image.iter().any(|v| !v.is_finite()) {
            bail!(InvalidData, "non-finite pixel value");
        }
        let centered: Vec<f64> = image.iter().zip(&self.mean).map(|(x, mu)| x - mu).collect();
        Ok(self.components.chunks_exact(self.input_dim).map(|c| dot(c, &centered)).collect())
    }

    /// `mean + components^T . features`.
    pub fn inverse_transform(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.k {
            bail!(InvalidArgument, "expected {} features, got {}", self.k, features.len());
        }
        if features.iter().any(|v| !v.is_finite()) {
            bail!(InvalidData, "non-finite feature value");
        }
        let mut out = self.mean.clone();
        for (c, &f) in self.components.chunks_exact(self.input_dim).zip(features) {
            for (o, v) in out.iter_mut().zip(c) {
                *o += f * v;
            }
        }
        Ok(out)
    }
}

fn covariance(data: &[f64], mean: &[f64], dim: usize) -> Vec<f64> {
    let m = data.len() / dim;
    let mut cov = vec![0.0; dim * dim];
    let mut centered = vec![0.0; dim];
    for row in data.chunks_exact(dim) {
        for ((c, x), mu) in centered.iter_mut().zip(row).zip(mean) {
            *c = x - mu;
        }
        for i in 0..dim {
            let xi = centered[i];
            if xi == 0.0 {
                continue;
            }
            let dst = &mut cov[i * dim + i..(i + 1) * dim];
            for (d, xj) in dst.iter_mut().zip(&centered[i..]) {
                *d += xi * xj;
            }
        }
    }
    let norm = 1.0 / (m - 1) as f64;
    for i in 0..dim {
        for j in i..dim {
            let v = cov[i * dim + j] * norm;
            cov[i * dim + j] = v;
            cov[j * dim + i] = v;
        }
    }
    cov
}

fn sym_matvec(mat: &[f64], v: &[f64], out: &mut [f64]) {
    let dim = v.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = dot(&mat[i * dim..(i + 1) * dim], v);
    }
}

/// Leading `k` eigenpairs of the symmetric `dim x dim` matrix `mat`.
/// Returns eigenvalues (descending), eigenvectors as rows, and sweeps used.
fn top_eigenpairs(mat: &[f64], dim: usize, k: usize) -> (Vec<f64>, Vec<f64>, usize) {
    let p = (k + OVERSAMPLE).min(dim);
    let mut rng = Xoshiro256::new(START_SEED);
    let mut q: Vec<f64> = (0..p * dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
    orthonormalize(&mut q, p, dim);

    let mut w = vec![0.0; p * dim];
    let mut prev_top: Option<Vec<f64>> = None;
    let mut ritz_values = vec![0.0; p];
    let mut sweeps = 0;
    while sweeps < MAX_ITERATIONS {
        sweeps += 1;
        for i in 0..p {
            sym_matvec(mat, &q[i * dim..(i + 1) * dim], &mut w[i * dim..(i + 1) * dim]);
        }
        // Rayleigh–Ritz on span(Q): T = Q (C Q)^T
        let mut t = vec![0.0; p * p];
        for i in 0..p {
            for j in i..p {
                let v = 0.5
                    * (dot(&q[i * dim..(i + 1) * dim], &w[j * dim..(j + 1) * dim])
                        + dot(&q[j * dim..(j + 1) * dim], &w[i * dim..(i + 1) * dim]));
                t[i * p + j] = v;
                t[j * p + i] = v;
            }
        }
        let (vals, vecs) = jacobi_eigh(&t, p);
        ritz_values = vals;
        let q_ritz = combine(&vecs, &q, p, dim);
        let w_ritz = combine(&vecs, &w, p, dim);

        let top = q_ritz[..k * dim].to_vec();
        let converged = match &prev_top {
            Some(prev) => subspace_change(&top, prev, k, dim) < SUBSPACE_TOLERANCE,
            None => false,
        };
        if converged || p == dim {
            return (ritz_values[..k].to_vec(), top, sweeps);
        }
        prev_top = Some(top);
        q = w_ritz;
        orthonormalize(&mut q, p, dim);
    }
    let top = prev_top.unwrap_or_else(|| q[..k * dim].to_vec());
    (ritz_values[..k].to_vec(), top, sweeps)
}

/// Rows of `coeffs` (p x p) applied to the rows of `basis` (p x dim).
fn combine(coeffs: &[f64], basis: &[f64], p: usize, dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; p * dim];
    for i in 0..p {
        let dst = &mut out[i * dim..(i + 1) * dim];
        for j in 0..p {
            let c = coeffs[i * p + j];
            if c == 0.0 {
                continue;
            }
            for (d, b) in dst.iter_mut().zip(&basis[j * dim..(j + 1) * dim]) {
                *d += c * b;
            }
        }
    }
    out
}

/// Largest norm of the component of a new basis vector outside the old span.
fn subspace_change(new: &[f64], old: &[f64], k: usize, dim: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..k {
        let v = &new[i * dim..(i + 1) * dim];
        let mut r = v.to_vec();
        for j in 0..k {
            let u = &old[j * dim..(j + 1) * dim];
            let proj = dot(u, v);
            for (ri, ui) in r.iter_mut().zip(u) {
                *ri -= proj * ui;
            }
        }
        worst = worst.max(sqrt(dot(&r, &r)));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_point_toy_set() {
        let data = [2.0, 0.0, -2.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0];
        let pca = PcaModel::fit(&data, 2, 2).unwrap();
        // covariance diag(8/4, 2/4): ratios 0.8, 0.2
        assert!((pca.explained_variance_ratio[0] - 0.8).abs() < 1e-12);
        assert!((pca.explained_variance_ratio[1] - 0.2).abs() < 1e-12);
        assert!((pca.component(0)[0] - 1.0).abs() < 1e-12 && pca.component(0)[1].abs() < 1e-12);
        assert!((pca.explained_variance[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rank_one_line() {
        let dir = [0.6, 0.8];
        let offset = [0.3, -0.2];
        let data: Vec<f64> = (0..20)
            .flat_map(|i| {
                let t = i as f64 - 9.5;
                [offset[0] + t * dir[0], offset[1] + t * dir[1]]
            })
            .collect();
        let pca = PcaModel::fit(&data, 2, 1).unwrap();
        assert!((pca.explained_variance_ratio[0] - 1.0).abs() < 1e-12);
        assert!((pca.component(0)[0] - 0.6).abs() < 1e-12);
        assert!((pca.component(0)[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn error_paths() {
        let data = [0.1, 0.2, 0.3, 0.4];
        assert!(matches!(PcaModel::fit(&data, 2, 2), Err(crate::Error::InsufficientData(_))));
        assert!(matches!(PcaModel::fit(&[0.1, f64::NAN, 0.3, 0.4, 0.5, 0.6], 2, 1), Err(crate::Error::InvalidData(_))));
        assert!(matches!(PcaModel::fit_pixels(&[0.1, 2.0, 0.3, 0.4, 0.5, 0.6], 2, 1), Err(crate::Error::InvalidData(_))));
        let pca = PcaModel::fit(&[0.0, 0.0, 1.0, 0.5, 0.2, 0.9], 2, 1).unwrap();
        assert!(pca.transform(&[0.0]).is_err());
        assert!(pca.inverse_transform(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn mean_maps_to_zero_and_back() {
        let data: Vec<f64> = (0..30).map(|i| ((i * 7919) % 13) as f64 / 13.0).collect();
        let pca = PcaModel::fit(&data, 3, 2).unwrap();
        let z = pca.transform(&pca.mean).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-15));
        assert_eq!(pca.inverse_transform(&[0.0, 0.0]).unwrap(), pca.mean);
    }
}
