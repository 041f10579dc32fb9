//! Pixel attributions from the exact input gradient of one class logit.
//!
//! PCA is affine, so `d features / d pixels` is the component matrix and the
//! pixel gradient is `sum_j (d logit / d feature_j) * component_j`. The model
//! side of the chain rule comes from [`HybridModel::input_gradient`].
//!
//! Gaussian circuits act affinely on quadrature means, so for the CV model
//! the logits are affine in the features and its maps do not depend on the
//! input image.

use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::model::HybridModel;
use crate::pca::PcaModel;
use crate::train::encode;

#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    pub width: usize,
    pub height: usize,
    /// `|gradient|` scaled so its maximum is 1; all zeros for a zero gradient.
    pub heat: Vec<f64>,
    /// The raw signed pixel gradient.
    pub signed: Vec<f64>,
    pub target_class: usize,
    pub predicted_class: usize,
    /// Softmax probability of the predicted class.
    pub confidence: f64,
}

impl SaliencyMap {
    /// 8-bit intensities `round(255 * heat)`.
    pub fn to_gray(&self) -> Vec<u8> {
        self.heat.iter().map(|h| libm::round(255.0 * h.clamp(0.0, 1.0)) as u8).collect()
    }
}

/// Square side for `dim` pixels, or a single row when `dim` is not square.
pub fn image_shape(dim: usize) -> (usize, usize) {
    let side = libm::round(libm::sqrt(dim as f64)) as usize;
    if side * side == dim { (side, side) } else { (dim, 1) }
}

/// `d logit_target / d pixels` for one image.
pub fn pixel_gradient(model: &HybridModel, pca: &PcaModel, image: &[f64], target_class: usize) -> Result<Vec<f64>> {
    let features = encode(pca, image)?;
    let g = model.input_gradient(&features, target_class)?;
    let mut out = alloc::vec![0.0; pca.input_dim];
    for (j, gj) in g.iter().enumerate() {
        for (o, c) in out.iter_mut().zip(pca.component(j)) {
            *o += gj * c;
        }
    }
    Ok(out)
}

pub fn input_gradient_map(model: &HybridModel, pca: &PcaModel, image: &[f64], target_class: usize) -> Result<SaliencyMap> {
    if target_class >= model.num_classes {
        bail!(InvalidArgument, "target class {target_class} out of range for {} classes", model.num_classes);
    }
    let signed = pixel_gradient(model, pca, image, target_class)?;
    let prediction = model.forward(&encode(pca, image)?)?;
    let predicted_class = prediction.predicted_class();
    let max = signed.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let heat = if max > 0.0 { signed.iter().map(|g| g.abs() / max).collect() } else { alloc::vec![0.0; signed.len()] };
    let (width, height) = image_shape(pca.input_dim);
    Ok(SaliencyMap {
        width,
        height,
        heat,
        signed,
        target_class,
        predicted_class,
        confidence: prediction.probabilities[predicted_class],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelKind;
    use crate::rng::Xoshiro256;
    use alloc::vec;

    fn toy_pca() -> PcaModel {
        let mut rng = Xoshiro256::new(5);
        let data: Vec<f64> = (0..40 * 9).map(|_| rng.next_f64()).collect();
        PcaModel::fit(&data, 9, 4).unwrap()
    }

    #[test]
    fn zero_head_gives_zero_map() {
        let pca = toy_pca();
        let m = HybridModel::zeros(ModelKind::Dv, 2).unwrap();
        let map = input_gradient_map(&m, &pca, &[0.5; 9], 0).unwrap();
        assert_eq!(map.heat, vec![0.0; 9]);
        assert_eq!(map.to_gray(), vec![0u8; 9]);
        assert_eq!((map.width, map.height), (3, 3));
        assert!(input_gradient_map(&m, &pca, &[0.5; 9], 2).is_err());
    }

    #[test]
    fn max_normalized() {
        let pca = toy_pca();
        let mut rng = Xoshiro256::new(8);
        let m = HybridModel::init(ModelKind::Classical, 2, &mut rng).unwrap();
        let map = input_gradient_map(&m, &pca, &[0.3; 9], 1).unwrap();
        assert!(map.heat.contains(&1.0));
        assert!(map.to_gray().contains(&255));
        assert!(map.confidence > 0.0 && map.confidence < 1.0);
    }
}
