//! Seeded Gaussian pixel noise for robustness sweeps.

use alloc::vec::Vec;

use crate::data::ImageSet;
use crate::error::{bail, Result};
use crate::rng::Xoshiro256;

/// `0` followed by `0.10, 0.15, ..., 1.00`.
pub fn noise_sweep_grid() -> Vec<f64> {
    core::iter::once(0.0).chain((0..19).map(|i| (10 + 5 * i) as f64 / 100.0)).collect()
}

/// Adds independent `N(0, sigma^2)` draws to every pixel. Image `i` draws from
/// `Xoshiro256::substream(seed, i)`, so a given `(seed, i)` sees the same
/// standard-normal values at every `sigma`. Values are left unclipped unless
/// `clip` is set.
pub fn inject_gaussian_noise(set: &ImageSet, sigma: f64, seed: u64, clip: bool) -> Result<ImageSet> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        bail!(InvalidArgument, "noise level must be a finite non-negative number, got {sigma}");
    }
    let mut out = set.clone();
    if sigma == 0.0 {
        return Ok(out);
    }
    for (i, image) in out.images.chunks_mut(set.dim).enumerate() {
        let mut rng = Xoshiro256::substream(seed, i as u64);
        for px in image.iter_mut() {
            *px += sigma * rng.next_normal();
            if clip {
                *px = px.clamp(0.0, 1.0);
            }
        }
    }
    Ok(out)
}
