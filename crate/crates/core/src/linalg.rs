//! Small dense helpers: cyclic Jacobi eigensolver and Gram–Schmidt.
//!
//! Matrices are row-major `&[f64]` with an explicit dimension.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;

/// Eigen-decomposition of a symmetric `n x n` matrix by cyclic Jacobi sweeps.
///
/// Returns eigenvalues in descending order and the matching unit eigenvectors,
/// eigenvector `i` stored in `vectors[i * n..(i + 1) * n]`.
pub fn jacobi_eigh(matrix: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(matrix.len(), n * n, "matrix must be n x n");
    let mut a = matrix.to_vec();
    // v holds eigenvectors as columns while sweeping.
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (row, &col) in order.iter().enumerate() {
        for k in 0..n {
            vectors[row * n + k] = v[k * n + col];
        }
    }
    (values, vectors)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormalizes `count` vectors of length `dim`, stored back to back, by
/// two passes of modified Gram–Schmidt. A vector that collapses is replaced
/// by the first canonical direction not yet spanned.
pub(crate) fn orthonormalize(vectors: &mut [f64], count: usize, dim: usize) {
    for i in 0..count {
        let before = sqrt(dot(&vectors[i * dim..(i + 1) * dim], &vectors[i * dim..(i + 1) * dim]));
        for _pass in 0..2 {
            for j in 0..i {
                let (head, tail) = vectors.split_at_mut(i * dim);
                let prev = &head[j * dim..(j + 1) * dim];
                let cur = &mut tail[..dim];
                let proj = dot(prev, cur);
                for (c, p) in cur.iter_mut().zip(prev) {
                    *c -= proj * p;
                }
            }
        }
        let cur = &mut vectors[i * dim..(i + 1) * dim];
        let norm = sqrt(dot(cur, cur));
        if norm > 1e-10 * before && norm > 1e-300 {
            cur.iter_mut().for_each(|c| *c /= norm);
        } else {
            replace_with_free_direction(vectors, i, dim);
        }
    }
}

fn replace_with_free_direction(vectors: &mut [f64], i: usize, dim: usize) {
    for axis in 0..dim {
        let mut cand = vec![0.0; dim];
        cand[axis] = 1.0;
        for j in 0..i {
            let prev = &vectors[j * dim..(j + 1) * dim];
            let proj = dot(prev, &cand);
            for (c, p) in cand.iter_mut().zip(prev) {
                *c -= proj * p;
            }
        }
        let norm = sqrt(dot(&cand, &cand));
        if norm > 0.5 {
            for (dst, c) in vectors[i * dim..(i + 1) * dim].iter_mut().zip(&cand) {
                *dst = c / norm;
            }
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_two_by_two() {
        // [[2,1],[1,2]] has eigenvalues 3 and 1.
        let (vals, vecs) = jacobi_eigh(&[2.0, 1.0, 1.0, 2.0], 2);
        assert!((vals[0] - 3.0).abs() < 1e-14);
        assert!((vals[1] - 1.0).abs() < 1e-14);
        let r = core::f64::consts::FRAC_1_SQRT_2;
        assert!((vecs[0].abs() - r).abs() < 1e-14 && (vecs[1].abs() - r).abs() < 1e-14);
        assert!(vecs[0] * vecs[1] > 0.0);
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        let n = 5;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = 1.0 / (1.0 + i as f64 + j as f64);
            }
        }
        let (vals, vecs) = jacobi_eigh(&m, n);
        for i in 0..n {
            for j in 0..n {
                let r: f64 = (0..n).map(|k| vals[k] * vecs[k * n + i] * vecs[k * n + j]).sum();
                assert!((r - m[i * n + j]).abs() < 1e-12);
            }
        }
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn gram_schmidt_recovers_from_dependence() {
        let mut v = vec![1.0, 1.0, 0.0, 2.0, 2.0, 0.0, 0.0, 0.0, 3.0];
        orthonormalize(&mut v, 3, 3);
        for i in 0..3 {
            for j in 0..3 {
                let d = dot(&v[i * 3..i * 3 + 3], &v[j * 3..j * 3 + 3]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-12);
            }
        }
    }
}
