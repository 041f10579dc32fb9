//! Gaussian states of n bosonic modes.
//!
//! A state is its quadrature mean vector and covariance matrix in the block
//! ordering `(x_1..x_n, p_1..p_n)`, with the vacuum covariance equal to the
//! identity. Gates act as `mean -> S mean + d`, `cov -> S cov S^T` for a
//! symplectic `S` (`S Omega S^T = Omega`, `Omega = [[0, I], [-I, 0]]`).
//!
//! Gate methods on [`GaussianState`] update the state in place through the
//! gate's local 2x2 or 4x4 block; the `apply_*` free functions are the pure
//! variants. [`GateSymplectic`] builds the same gates as dense `2n x 2n`
//! maps, which is handy for composing circuits and for checking the
//! symplectic identity.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::linalg::jacobi_eigh;
use crate::math::{cos, exp, sin, sqrt, SQRT_2};

/// Largest squeeze magnitude accepted by [`GaussianState::squeeze`].
pub const MAX_SQUEEZE: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaussianState {
    pub num_modes: usize,
    /// Length `2n`.
    pub mean: Vec<f64>,
    /// Row-major `2n x 2n`.
    pub cov: Vec<f64>,
}

impl GaussianState {
    pub fn vacuum(num_modes: usize) -> Result<Self> {
        if num_modes == 0 {
            bail!(InvalidArgument, "a Gaussian state needs at least one mode");
        }
        let dim = 2 * num_modes;
        let mut cov = vec![0.0; dim * dim];
        for i in 0..dim {
            cov[i * dim + i] = 1.0;
        }
        Ok(Self { num_modes, mean: vec![0.0; dim], cov })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        2 * self.num_modes
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.num_modes {
            bail!(InvalidArgument, "mode {mode} out of range for {} modes", self.num_modes);
        }
        Ok(())
    }

    /// `D(alpha)` with `alpha = r e^{i phi}`: `x += sqrt(2) r cos(phi)`, `p += sqrt(2) r sin(phi)`.
    pub fn displace(&mut self, mode: usize, r: f64, phi: f64) -> Result<()> {
        self.check_mode(mode)?;
        let n = self.num_modes;
        self.mean[mode] += SQRT_2 * r * cos(phi);
        self.mean[n + mode] += SQRT_2 * r * sin(phi);
        Ok(())
    }

    /// Phase-space rotation `R(phi)` of one mode.
    pub fn rotate(&mut self, mode: usize, phi: f64) -> Result<()> {
        self.check_mode(mode)?;
        let (s, c) = (sin(phi), cos(phi));
        let idx = [mode, self.num_modes + mode];
        self.apply_local::<2>(idx, [[c, -s], [s, c]]);
        Ok(())
    }

    /// Squeeze `S(r)`: `x -> e^{-r} x`, `p -> e^{r} p`.
    pub fn squeeze(&mut self, mode: usize, r: f64) -> Result<()> {
        self.check_mode(mode)?;
        if !(r.abs() <= MAX_SQUEEZE) {
            bail!(Overflow, "squeeze magnitude {r} exceeds {MAX_SQUEEZE}");
        }
        let idx = [mode, self.num_modes + mode];
        self.apply_local::<2>(idx, [[exp(-r), 0.0], [0.0, exp(r)]]);
        Ok(())
    }

    /// Beamsplitter `BS(theta, phi)` acting on modes `a` and `b`.
    pub fn beamsplit(&mut self, a: usize, b: usize, theta: f64, phi: f64) -> Result<()> {
        self.check_mode(a)?;
        self.check_mode(b)?;
        if a == b {
            bail!(InvalidArgument, "beamsplitter needs two distinct modes, got {a} twice");
        }
        let n = self.num_modes;
        let idx = [a, n + a, b, n + b];
        self.apply_local::<4>(idx, beamsplitter_block(theta, phi));
        Ok(())
    }

    /// `<x>` of one mode.
    pub fn expect_x(&self, mode: usize) -> Result<f64> {
        self.check_mode(mode)?;
        Ok(self.mean[mode])
    }

    /// `<p>` of one mode.
    pub fn expect_p(&self, mode: usize) -> Result<f64> {
        self.check_mode(mode)?;
        Ok(self.mean[self.num_modes + mode])
    }

    /// Applies the `K x K` block `m` on the quadrature indices `idx`
    /// (identity elsewhere), then re-symmetrizes the covariance.
    fn apply_local<const K: usize>(&mut self, idx: [usize; K], m: [[f64; K]; K]) {
        let dim = self.dim();
        let old: [f64; K] = core::array::from_fn(|i| self.mean[idx[i]]);
        for i in 0..K {
            self.mean[idx[i]] = (0..K).map(|j| m[i][j] * old[j]).sum();
        }
        // rows: cov[idx, :] = M cov[idx, :]
        for col in 0..dim {
            let old: [f64; K] = core::array::from_fn(|i| self.cov[idx[i] * dim + col]);
            for i in 0..K {
                self.cov[idx[i] * dim + col] = (0..K).map(|j| m[i][j] * old[j]).sum();
            }
        }
        // columns: cov[:, idx] = cov[:, idx] M^T
        for row in 0..dim {
            let old: [f64; K] = core::array::from_fn(|i| self.cov[row * dim + idx[i]]);
            for i in 0..K {
                self.cov[row * dim + idx[i]] = (0..K).map(|j| m[i][j] * old[j]).sum();
            }
        }
        self.symmetrize_touched(&idx);
    }

    fn symmetrize_touched(&mut self, idx: &[usize]) {
        let dim = self.dim();
        for &r in idx {
            for c in 0..dim {
                let avg = 0.5 * (self.cov[r * dim + c] + self.cov[c * dim + r]);
                self.cov[r * dim + c] = avg;
                self.cov[c * dim + r] = avg;
            }
        }
    }

    /// Symplectic eigenvalues of the covariance, ascending, one per mode.
    ///
    /// Computed as the singular values of `V^{1/2} Omega V^{1/2}`, whose
    /// squares appear in pairs as eigenvalues of `A A^T`. Requires a
    /// positive definite covariance; returns an error otherwise.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        let dim = self.dim();
        let n = self.num_modes;
        let (vals, vecs) = jacobi_eigh(&self.cov, dim);
        if vals.iter().any(|&v| !(v > 0.0)) {
            bail!(InvalidData, "covariance is not positive definite");
        }
        // V^{1/2} = sum_k sqrt(l_k) u_k u_k^T
        let mut root = vec![0.0; dim * dim];
        for k in 0..dim {
            let w = sqrt(vals[k]);
            let u = &vecs[k * dim..(k + 1) * dim];
            for i in 0..dim {
                for j in 0..dim {
                    root[i * dim + j] += w * u[i] * u[j];
                }
            }
        }
        let omega = omega(n);
        let a = matmul(&matmul(&root, &omega, dim), &root, dim);
        let at = transpose(&a, dim);
        let aat = matmul(&a, &at, dim);
        let (mut nu2, _) = jacobi_eigh(&aat, dim);
        nu2.sort_by(f64::total_cmp);
        Ok((0..n).map(|k| sqrt(0.5 * (nu2[2 * k] + nu2[2 * k + 1]).max(0.0))).collect())
    }
}

fn beamsplitter_block(theta: f64, phi: f64) -> [[f64; 4]; 4] {
    // From a1' = cos t a1 - e^{i phi} sin t a2, a2' = e^{-i phi} sin t a1 + cos t a2
    // with a = (x + i p)/sqrt(2); block order (x_a, p_a, x_b, p_b).
    let (st, ct) = (sin(theta), cos(theta));
    let (sp, cp) = (sin(phi), cos(phi));
    [
        [ct, 0.0, -st * cp, st * sp],
        [0.0, ct, -st * sp, -st * cp],
        [st * cp, st * sp, ct, 0.0],
        [-st * sp, st * cp, 0.0, ct],
    ]
}

pub fn vacuum_state(num_modes: usize) -> Result<GaussianState> {
    GaussianState::vacuum(num_modes)
}

pub fn apply_displacement(state: &GaussianState, mode: usize, r: f64, phi: f64) -> Result<GaussianState> {
    let mut out = state.clone();
    out.displace(mode, r, phi)?;
    Ok(out)
}

pub fn apply_rotation(state: &GaussianState, mode: usize, phi: f64) -> Result<GaussianState> {
    let mut out = state.clone();
    out.rotate(mode, phi)?;
    Ok(out)
}

pub fn apply_squeeze(state: &GaussianState, mode: usize, r: f64) -> Result<GaussianState> {
    let mut out = state.clone();
    out.squeeze(mode, r)?;
    Ok(out)
}

pub fn apply_beamsplitter(
    state: &GaussianState,
    mode_a: usize,
    mode_b: usize,
    theta: f64,
    phi: f64,
) -> Result<GaussianState> {
    let mut out = state.clone();
    out.beamsplit(mode_a, mode_b, theta, phi)?;
    Ok(out)
}

pub fn expect_x(state: &GaussianState, mode: usize) -> Result<f64> {
    state.expect_x(mode)
}

/// The symplectic form `[[0, I], [-I, 0]]` for `n` modes, row-major.
pub fn omega(n: usize) -> Vec<f64> {
    let dim = 2 * n;
    let mut o = vec![0.0; dim * dim];
    for i in 0..n {
        o[i * dim + n + i] = 1.0;
        o[(n + i) * dim + i] = -1.0;
    }
    o
}

fn matmul(a: &[f64], b: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim * dim];
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i * dim + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..dim {
                out[i * dim + j] += aik * b[k * dim + j];
            }
        }
    }
    out
}

fn transpose(a: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            out[j * dim + i] = a[i * dim + j];
        }
    }
    out
}

/// A Gaussian gate as a dense affine phase-space map `v -> S v + d`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSymplectic {
    pub num_modes: usize,
    /// Row-major `2n x 2n`.
    pub matrix: Vec<f64>,
    pub displacement: Vec<f64>,
}

impl GateSymplectic {
    pub fn identity(num_modes: usize) -> Self {
        let dim = 2 * num_modes;
        let mut matrix = vec![0.0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = 1.0;
        }
        Self { num_modes, matrix, displacement: vec![0.0; dim] }
    }

    fn embed<const K: usize>(num_modes: usize, idx: [usize; K], m: [[f64; K]; K]) -> Self {
        let mut g = Self::identity(num_modes);
        let dim = 2 * num_modes;
        for i in 0..K {
            for j in 0..K {
                g.matrix[idx[i] * dim + idx[j]] = m[i][j];
            }
        }
        g
    }

    fn check(num_modes: usize, modes: &[usize]) -> Result<()> {
        for &m in modes {
            if m >= num_modes {
                bail!(InvalidArgument, "mode {m} out of range for {num_modes} modes");
            }
        }
        Ok(())
    }

    pub fn displacement(num_modes: usize, mode: usize, r: f64, phi: f64) -> Result<Self> {
        Self::check(num_modes, &[mode])?;
        let mut g = Self::identity(num_modes);
        g.displacement[mode] = SQRT_2 * r * cos(phi);
        g.displacement[num_modes + mode] = SQRT_2 * r * sin(phi);
        Ok(g)
    }

    pub fn rotation(num_modes: usize, mode: usize, phi: f64) -> Result<Self> {
        Self::check(num_modes, &[mode])?;
        let (s, c) = (sin(phi), cos(phi));
        Ok(Self::embed::<2>(num_modes, [mode, num_modes + mode], [[c, -s], [s, c]]))
    }

    pub fn squeeze(num_modes: usize, mode: usize, r: f64) -> Result<Self> {
        Self::check(num_modes, &[mode])?;
        if !(r.abs() <= MAX_SQUEEZE) {
            bail!(Overflow, "squeeze magnitude {r} exceeds {MAX_SQUEEZE}");
        }
        Ok(Self::embed::<2>(num_modes, [mode, num_modes + mode], [[exp(-r), 0.0], [0.0, exp(r)]]))
    }

    pub fn beamsplitter(num_modes: usize, a: usize, b: usize, theta: f64, phi: f64) -> Result<Self> {
        Self::check(num_modes, &[a, b])?;
        if a == b {
            bail!(InvalidArgument, "beamsplitter needs two distinct modes, got {a} twice");
        }
        let n = num_modes;
        Ok(Self::embed::<4>(n, [a, n + a, b, n + b], beamsplitter_block(theta, phi)))
    }

    /// The gate that applies `self` first and then `next`.
    pub fn then(&self, next: &GateSymplectic) -> GateSymplectic {
        let dim = 2 * self.num_modes;
        let matrix = matmul(&next.matrix, &self.matrix, dim);
        let displacement = (0..dim)
            .map(|i| {
                let sd: f64 = (0..dim).map(|j| next.matrix[i * dim + j] * self.displacement[j]).sum();
                sd + next.displacement[i]
            })
            .collect();
        GateSymplectic { num_modes: self.num_modes, matrix, displacement }
    }

    /// `max |S Omega S^T - Omega|`.
    pub fn symplectic_defect(&self) -> f64 {
        let dim = 2 * self.num_modes;
        let om = omega(self.num_modes);
        let lhs = matmul(&matmul(&self.matrix, &om, dim), &transpose(&self.matrix, dim), dim);
        lhs.iter().zip(&om).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn apply(&self, state: &GaussianState) -> Result<GaussianState> {
        if state.num_modes != self.num_modes {
            bail!(InvalidArgument, "gate has {} modes, state has {}", self.num_modes, state.num_modes);
        }
        let dim = 2 * self.num_modes;
        let s = &self.matrix;
        let mean = (0..dim)
            .map(|i| (0..dim).map(|j| s[i * dim + j] * state.mean[j]).sum::<f64>() + self.displacement[i])
            .collect();
        let mut cov = matmul(&matmul(s, &state.cov, dim), &transpose(s, dim), dim);
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (cov[i * dim + j] + cov[j * dim + i]);
                cov[i * dim + j] = avg;
                cov[j * dim + i] = avg;
            }
        }
        Ok(GaussianState { num_modes: self.num_modes, mean, cov })
    }
}
