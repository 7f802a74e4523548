//! Seeded random-projection feature map for desk-scale FID.
//!
//! Each image is resized to a small square raster, flattened to `[0, 1]`
//! channel values and multiplied by a fixed Gaussian matrix drawn from the
//! projection seed.

use alloc::format;
use alloc::vec::Vec;

use crate::imaging::{resize_bilinear, RgbImage};
use crate::rng::SplitMix64;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct ProjectionConfig {
    pub seed: u64,
    /// Side of the square raster images are reduced to.
    pub raster: u32,
    /// Output feature dimension.
    pub dim: usize,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self { seed: 0x5EED_F1D0, raster: 16, dim: 32 }
    }
}

#[derive(Debug, Clone)]
pub struct RandomProjection {
    config: ProjectionConfig,
    weights: Vec<f64>,
}

impl RandomProjection {
    pub fn new(config: ProjectionConfig) -> Result<Self> {
        if config.raster == 0 || config.dim == 0 {
            return Err(Error::invalid(format!(
                "projection raster and dim must be positive, got {} and {}",
                config.raster, config.dim
            )));
        }
        let inputs = Self::input_len(config.raster);
        let scale = 1.0 / libm::sqrt(inputs as f64);
        let mut rng = SplitMix64::new(config.seed);
        let weights = (0..inputs * config.dim).map(|_| rng.next_normal() * scale).collect();
        Ok(Self { config, weights })
    }

    fn input_len(raster: u32) -> usize {
        raster as usize * raster as usize * 3
    }

    pub fn config(&self) -> ProjectionConfig {
        self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn features(&self, image: &RgbImage) -> Result<Vec<f64>> {
        let r = self.config.raster;
        let small = resize_bilinear(image, r, r)?;
        let x: Vec<f64> = small.as_bytes().iter().map(|&b| b as f64 / 255.0).collect();
        Ok(self
            .weights
            .chunks_exact(x.len())
            .map(|row| row.iter().zip(&x).map(|(w, v)| w * v).sum())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_sized() {
        let p = RandomProjection::new(ProjectionConfig::default()).unwrap();
        let img = RgbImage::from_fn(40, 40, |x, y| [(x * 6) as u8, (y * 6) as u8, 90]);
        let a = p.features(&img).unwrap();
        let b = RandomProjection::new(ProjectionConfig::default()).unwrap().features(&img).unwrap();
        assert_eq!(a.len(), 32);
        assert_eq!(a, b);
    }

    #[test]
    fn seed_changes_map() {
        let img = RgbImage::filled(16, 16, [200, 100, 50]);
        let a = RandomProjection::new(ProjectionConfig::default()).unwrap().features(&img).unwrap();
        let cfg = ProjectionConfig { seed: 1, ..ProjectionConfig::default() };
        let b = RandomProjection::new(cfg).unwrap().features(&img).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn linear_in_pixels() {
        let p = RandomProjection::new(ProjectionConfig { seed: 3, raster: 8, dim: 4 }).unwrap();
        let black = p.features(&RgbImage::filled(8, 8, [0, 0, 0])).unwrap();
        assert!(black.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_zero_dim() {
        assert!(RandomProjection::new(ProjectionConfig { seed: 0, raster: 8, dim: 0 }).is_err());
    }
}
