use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::gray::luma_bin;
use super::{blur_fraction, to_grayscale, RgbImage};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct QcParams {
    /// A pixel is "gray" when `max(R,G,B) - min(R,G,B) <= gray_delta`.
    pub gray_delta: u8,
    /// Reject when the gray-pixel share reaches this fraction.
    pub gray_frac: f64,
    pub blur_sigma: f64,
    /// Per-pixel sharpness response at or below this is blurry.
    pub blur_threshold: f64,
    /// Reject when the blurry-pixel share reaches this fraction.
    pub blur_frac: f64,
    /// Minimum share of tissue (Otsu foreground) pixels.
    pub tissue_frac: f64,
}

impl Default for QcParams {
    fn default() -> Self {
        Self {
            gray_delta: 13,
            gray_frac: 0.8,
            blur_sigma: 3.0,
            blur_threshold: 0.02,
            blur_frac: 0.5,
            tissue_frac: 0.5,
        }
    }
}

impl QcParams {
    pub fn validate(&self) -> Result<()> {
        let frac = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be in (0, 1], got {v}")))
            }
        };
        frac("gray_frac", self.gray_frac)?;
        frac("blur_frac", self.blur_frac)?;
        frac("tissue_frac", self.tissue_frac)?;
        if !(self.blur_sigma.is_finite() && self.blur_sigma > 0.0) {
            return Err(Error::invalid(format!("blur_sigma must be positive, got {}", self.blur_sigma)));
        }
        if !(self.blur_threshold.is_finite() && self.blur_threshold >= 0.0) {
            return Err(Error::invalid(format!(
                "blur_threshold must be non-negative, got {}",
                self.blur_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "lowercase"))]
pub enum RejectReason {
    Grayscale,
    Blur,
    Tissue,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QcReport {
    pub tile_id: String,
    pub gray_fraction: f64,
    pub blur_fraction: f64,
    pub tissue_fraction: f64,
    pub accepted: bool,
    pub reject_reasons: Vec<RejectReason>,
}

/// Share of pixels whose luminance bin is at or below the Otsu threshold.
pub fn tissue_fraction(image: &RgbImage, threshold: u8) -> f64 {
    if image.is_empty() {
        return 0.0;
    }
    let tissue = image.pixels().filter(|&p| luma_bin(p) <= threshold as usize).count();
    tissue as f64 / image.pixel_count() as f64
}

pub fn qc_tile(tile_id: impl Into<String>, image: &RgbImage, params: &QcParams, tissue_fraction: f64) -> Result<QcReport> {
    params.validate()?;
    if image.is_empty() {
        return Err(Error::invalid("cannot QC an empty tile"));
    }
    let gray = image
        .pixels()
        .filter(|p| {
            let hi = p.iter().max().copied().unwrap_or(0);
            let lo = p.iter().min().copied().unwrap_or(0);
            hi - lo <= params.gray_delta
        })
        .count();
    let gray_fraction = gray as f64 / image.pixel_count() as f64;
    let blur_fraction = blur_fraction(&to_grayscale(image), params.blur_sigma, params.blur_threshold)?;

    let mut reject_reasons = Vec::new();
    if gray_fraction >= params.gray_frac {
        reject_reasons.push(RejectReason::Grayscale);
    }
    if blur_fraction >= params.blur_frac {
        reject_reasons.push(RejectReason::Blur);
    }
    if tissue_fraction < params.tissue_frac {
        reject_reasons.push(RejectReason::Tissue);
    }
    Ok(QcReport {
        tile_id: tile_id.into(),
        gray_fraction,
        blur_fraction,
        tissue_fraction,
        accepted: reject_reasons.is_empty(),
        reject_reasons,
    })
}
