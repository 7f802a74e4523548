use alloc::vec::Vec;

use super::{GrayMap, RgbImage};
use crate::{Error, Result};

/// BT.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Luma in `[0, 1]` per pixel.
pub fn to_grayscale(image: &RgbImage) -> GrayMap {
    let data: Vec<f64> = image
        .pixels()
        .map(|[r, g, b]| {
            (LUMA_WEIGHTS[0] * r as f64 + LUMA_WEIGHTS[1] * g as f64 + LUMA_WEIGHTS[2] * b as f64) / 255.0
        })
        .collect();
    GrayMap { width: image.width() as usize, height: image.height() as usize, data }
}

/// 256-bin histogram of `round(255 * luma)` over every `stride`-th pixel in
/// both axes (`stride` 1 uses every pixel).
pub fn luminance_histogram(image: &RgbImage, stride: u32) -> [u64; 256] {
    let stride = stride.max(1);
    let mut hist = [0u64; 256];
    for y in (0..image.height()).step_by(stride as usize) {
        for x in (0..image.width()).step_by(stride as usize) {
            hist[luma_bin(image.pixel(x, y))] += 1;
        }
    }
    hist
}

pub(crate) fn luma_bin([r, g, b]: [u8; 3]) -> usize {
    let l = LUMA_WEIGHTS[0] * r as f64 + LUMA_WEIGHTS[1] * g as f64 + LUMA_WEIGHTS[2] * b as f64;
    (libm::round(l) as usize).min(255)
}

const TIE_TOLERANCE: f64 = 1e-12;

/// Otsu threshold: class 0 is bins `0..=t`, class 1 is `t+1..=255`.
///
/// Returns the `t` maximizing `w0 * w1 * (mu0 - mu1)^2`. When several
/// thresholds reach the maximum (within a relative 1e-12), the answer is
/// the floor midpoint of the first contiguous run of maximizers.
pub fn otsu_threshold(hist: &[u64; 256]) -> Result<u8> {
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return Err(Error::DegenerateHistogram("histogram is empty".into()));
    }
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::DegenerateHistogram("only one populated bin".into()));
    }
    let n = total as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();

    let mut scores = [0.0f64; 255];
    let mut n0 = 0.0;
    let mut s0 = 0.0;
    for t in 0..255 {
        n0 += hist[t] as f64;
        s0 += t as f64 * hist[t] as f64;
        let n1 = n - n0;
        if n0 == 0.0 || n1 == 0.0 {
            continue;
        }
        let mu0 = s0 / n0;
        let mu1 = (sum_all - s0) / n1;
        let d = mu0 - mu1;
        scores[t] = (n0 / n) * (n1 / n) * d * d;
    }

    let best = scores.iter().copied().fold(0.0f64, f64::max);
    let is_max = |v: f64| v >= best * (1.0 - TIE_TOLERANCE);
    let start = scores.iter().position(|&v| is_max(v)).unwrap_or(0);
    let end = scores[start..].iter().position(|&v| !is_max(v)).map_or(254, |off| start + off - 1);
    Ok(((start + end) / 2) as u8)
}
