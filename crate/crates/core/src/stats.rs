//! Nonparametric comparison of models across cross-validation folds.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::math::{exp, ln};

/// Largest sample size accepted by the exact Wilcoxon enumeration.
pub const MAX_EXACT_WILCOXON: usize = 25;

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        i = j;
    }
    ranks
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let log_prefix = a * ln(x) - x - libm::lgamma(a);
    if x < a + 1.0 {
        // series for P(a, x)
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut n = a;
        for _ in 0..1000 {
            n += 1.0;
            term *= x / n;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        (1.0 - sum * exp(log_prefix)).clamp(0.0, 1.0)
    } else {
        // Lentz continued fraction for Q(a, x)
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (exp(log_prefix) * h).clamp(0.0, 1.0)
    }
}

/// Upper tail of the chi-square distribution.
pub fn chi2_sf(x: f64, df: usize) -> f64 {
    gamma_q(df as f64 / 2.0, x / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FriedmanResult {
    pub chi2: f64,
    pub p: f64,
    pub df: usize,
}

/// Friedman test over `scores[model][fold]`. Models are ranked within each
/// fold (ties share ranks); no tie correction is applied to the statistic.
pub fn friedman_test(scores: &[Vec<f64>]) -> Result<FriedmanResult> {
    let k = scores.len();
    if k < 2 {
        bail!(InvalidArgument, "Friedman test needs at least two models, got {k}");
    }
    let n = scores[0].len();
    if n < 2 || scores.iter().any(|s| s.len() != n) {
        bail!(InvalidArgument, "Friedman test needs at least two folds of equal length per model");
    }
    if scores.iter().flatten().any(|v| v.is_nan()) {
        bail!(InvalidData, "NaN score");
    }
    let mut rank_sums = vec![0.0; k];
    for fold in 0..n {
        let column: Vec<f64> = scores.iter().map(|s| s[fold]).collect();
        for (sum, r) in rank_sums.iter_mut().zip(average_ranks(&column)) {
            *sum += r;
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    let mean_sq: f64 = rank_sums.iter().map(|s| (s / nf) * (s / nf)).sum();
    let chi2 = (12.0 * nf / (kf * (kf + 1.0)) * mean_sq - 3.0 * nf * (kf + 1.0)).max(0.0);
    // Tiny positive residue from rounding when all ranks are equal.
    let chi2 = if chi2 < 1e-12 { 0.0 } else { chi2 };
    Ok(FriedmanResult { chi2, p: chi2_sf(chi2, k - 1), df: k - 1 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WilcoxonResult {
    /// Smaller of the positive and negative signed-rank sums.
    pub w: f64,
    pub p: f64,
    /// Pairs left after dropping zero differences.
    pub n: usize,
}

/// Exact two-sided Wilcoxon signed-rank test on paired samples.
///
/// Zero differences are dropped. `p` is the share of the `2^n` sign
/// assignments whose statistic is at most the observed one.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() || a.is_empty() {
        bail!(InvalidArgument, "paired samples must be non-empty and equal length");
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.iter().any(|d| d.is_nan()) {
        bail!(InvalidData, "NaN in paired samples");
    }
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult { w: 0.0, p: 1.0, n: 0 });
    }
    if n > MAX_EXACT_WILCOXON {
        bail!(InvalidArgument, "exact enumeration supports at most {MAX_EXACT_WILCOXON} pairs, got {n}");
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let total: f64 = ranks.iter().sum();
    let w_plus: f64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).fold(0.0, |acc, (r, _)| acc + r);
    let w = w_plus.min(total - w_plus);
    // Ranks are multiples of 1/2, so work in integer half-ranks.
    let half: Vec<u64> = ranks.iter().map(|r| libm::round(2.0 * r) as u64).collect();
    let half_total: u64 = half.iter().sum();
    let half_w = libm::round(2.0 * w) as u64;
    let mut hits = 0u64;
    for mask in 0u64..(1u64 << n) {
        let mut s = 0;
        for (i, h) in half.iter().enumerate() {
            if mask >> i & 1 == 1 {
                s += h;
            }
        }
        if s.min(half_total - s) <= half_w {
            hits += 1;
        }
    }
    Ok(WilcoxonResult { w, p: (hits as f64 / (1u64 << n) as f64).min(1.0), n })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bonferroni {
    pub alpha: f64,
    pub alpha_corrected: f64,
    pub reject: Vec<bool>,
}

pub fn bonferroni(p_values: &[f64], alpha: f64) -> Result<Bonferroni> {
    if p_values.is_empty() {
        bail!(InvalidArgument, "no p values to correct");
    }
    let alpha_corrected = alpha / p_values.len() as f64;
    Ok(Bonferroni { alpha, alpha_corrected, reject: p_values.iter().map(|&p| p < alpha_corrected).collect() })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairwiseTest {
    pub pair: String,
    pub w: f64,
    pub p: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StatTestReport {
    pub friedman_chi2: f64,
    pub friedman_p: f64,
    pub friedman_reject: bool,
    pub pairwise: Vec<PairwiseTest>,
    pub alpha: f64,
    pub alpha_corrected: f64,
}

impl StatTestReport {
    /// True when no test rejects at the corrected level.
    pub fn all_retained(&self) -> bool {
        !self.friedman_reject && self.pairwise.iter().all(|t| !t.reject)
    }
}

/// Friedman plus pairwise Wilcoxon tests over per-fold scores of the
/// classical, DV and CV models. Every test is judged at `alpha / 3`.
pub fn compare_models(classical: &[f64], dv: &[f64], cv: &[f64], alpha: f64) -> Result<StatTestReport> {
    let friedman = friedman_test(&[classical.to_vec(), dv.to_vec(), cv.to_vec()])?;
    let pairs = [("C\u{2013}DV", classical, dv), ("C\u{2013}CV", classical, cv), ("DV\u{2013}CV", dv, cv)];
    let mut tests = Vec::with_capacity(3);
    for (name, a, b) in pairs {
        tests.push((name, wilcoxon_signed_rank(a, b)?));
    }
    let correction = bonferroni(&tests.iter().map(|(_, t)| t.p).collect::<Vec<_>>(), alpha)?;
    let pairwise = tests
        .iter()
        .zip(&correction.reject)
        .map(|((name, t), &reject)| PairwiseTest { pair: String::from(*name), w: t.w, p: t.p, reject })
        .collect();
    Ok(StatTestReport {
        friedman_chi2: friedman.chi2,
        friedman_p: friedman.p,
        friedman_reject: friedman.p < correction.alpha_corrected,
        pairwise,
        alpha,
        alpha_corrected: correction.alpha_corrected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn friedman_examples() {
        let same = vec![vec![0.8, 0.7, 0.9]; 3];
        let r = friedman_test(&same).unwrap();
        assert_eq!((r.chi2, r.p), (0.0, 1.0));
        let ordered = vec![vec![0.9, 0.8, 0.95], vec![0.5, 0.6, 0.7], vec![0.1, 0.2, 0.3]];
        let r = friedman_test(&ordered).unwrap();
        assert!((r.chi2 - 6.0).abs() < 1e-12);
        assert!((r.p - (-3.0f64).exp()).abs() < 1e-12);
        assert!(friedman_test(&ordered[..1]).is_err());
    }

    #[test]
    fn chi2_tail_against_closed_forms() {
        for x in [0.1, 1.0, 2.5, 6.0, 17.0, 60.0] {
            assert!((chi2_sf(x, 2) - (-x / 2.0).exp()).abs() < 1e-13);
        }
    }

    #[test]
    fn wilcoxon_examples() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.p, 1.0);
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[0.0; 3]).unwrap();
        assert_eq!((r.w, r.p), (0.0, 0.25));
        let r = wilcoxon_signed_rank(&[1.0, 2.0, -3.0], &[0.0; 3]).unwrap();
        assert_eq!((r.w, r.p), (3.0, 1.0));
        let r = wilcoxon_signed_rank(&[1.0, -2.0, 3.0], &[0.0; 3]).unwrap();
        assert_eq!((r.w, r.p), (2.0, 0.75));
    }

    #[test]
    fn bonferroni_examples() {
        let b = bonferroni(&[0.01, 0.02, 0.5], 0.05).unwrap();
        assert!((b.alpha_corrected - 0.0167).abs() < 5e-5);
        assert_eq!(b.reject, vec![true, false, false]);
    }

    #[test]
    fn identical_models_retain() {
        let f = [0.8, 0.82, 0.79];
        let r = compare_models(&f, &f, &f, 0.05).unwrap();
        assert!(r.all_retained());
        let names: Vec<&str> = r.pairwise.iter().map(|t| t.pair.as_str()).collect();
        assert_eq!(names, ["C\u{2013}DV", "C\u{2013}CV", "DV\u{2013}CV"]);
    }
}
