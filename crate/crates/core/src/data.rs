//! In-memory labelled image sets.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{bail, Result};

pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;

/// Flattened images (row-major, values normally in `[0, 1]`) with labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    pub name: String,
    pub dim: usize,
    pub num_classes: usize,
    /// `len() x dim`, one image after another.
    pub images: Vec<f64>,
    pub labels: Vec<usize>,
}

impl ImageSet {
    pub fn new(name: &str, dim: usize, num_classes: usize, images: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if dim == 0 || images.len() != labels.len() * dim {
            bail!(InvalidData, "{} pixel values do not form {} images of {dim}", images.len(), labels.len());
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            bail!(InvalidData, "label {bad} out of range for {num_classes} classes");
        }
        Ok(Self { name: String::from(name), dim, num_classes, images, labels })
    }

    /// Builds a set from 8-bit pixels, dividing by 255.
    pub fn from_u8(name: &str, dim: usize, num_classes: usize, pixels: &[u8], labels: Vec<usize>) -> Result<Self> {
        Self::new(name, dim, num_classes, pixels.iter().map(|&p| p as f64 / 255.0).collect(), labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[f64] {
        &self.images[i * self.dim..(i + 1) * self.dim]
    }

    /// The samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut images = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                bail!(InvalidArgument, "sample index {i} out of range for {} samples", self.len());
            }
            images.extend_from_slice(self.image(i));
            labels.push(self.labels[i]);
        }
        Ok(Self { name: self.name.clone(), dim: self.dim, num_classes: self.num_classes, images, labels })
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}
