use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::GrayMap;
use crate::{Error, Result};

/// Normalized 1-D Gaussian weights, radius `ceil(4 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    let radius = libm::ceil(4.0 * sigma) as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| libm::exp(-((i * i) as f64) / (2.0 * sigma * sigma)))
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= sum);
    Ok(k)
}

/// Half-sample symmetric reflection: `... b a | a b c d | d c ...`.
fn reflect(i: i64, n: usize) -> usize {
    let n = n as i64;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

fn convolve_rows(src: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let radius = (kernel.len() / 2) as i64;
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                acc += w * row[reflect(x as i64 + k as i64 - radius, width)];
            }
            out[y * width + x] = acc;
        }
    }
    out
}

fn convolve_cols(src: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let radius = (kernel.len() / 2) as i64;
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        for (k, w) in kernel.iter().enumerate() {
            let sy = reflect(y as i64 + k as i64 - radius, height);
            let src_row = &src[sy * width..(sy + 1) * width];
            let dst_row = &mut out[y * width..(y + 1) * width];
            for (d, s) in dst_row.iter_mut().zip(src_row) {
                *d += w * s;
            }
        }
    }
    out
}

/// Separable Gaussian smoothing with reflect padding.
pub fn gaussian_blur(map: &GrayMap, sigma: f64) -> Result<GrayMap> {
    let kernel = gaussian_kernel(sigma)?;
    if map.data.is_empty() {
        return Ok(map.clone());
    }
    let rows = convolve_rows(&map.data, map.width, map.height, &kernel);
    let data = convolve_cols(&rows, map.width, map.height, &kernel);
    Ok(GrayMap { width: map.width, height: map.height, data })
}

/// 4-neighbour Laplacian `[[0,1,0],[1,-4,1],[0,1,0]]` with reflect padding.
pub fn laplacian(map: &GrayMap) -> GrayMap {
    let (w, h) = (map.width, map.height);
    let at = |x: i64, y: i64| map.data[reflect(y, h) * w + reflect(x, w)];
    let data = (0..h as i64)
        .flat_map(|y| (0..w as i64).map(move |x| (x, y)))
        .map(|(x, y)| at(x - 1, y) + at(x + 1, y) + at(x, y - 1) + at(x, y + 1) - 4.0 * at(x, y))
        .collect();
    GrayMap { width: w, height: h, data }
}

/// Per-pixel sharpness response: Gaussian-smoothed absolute Laplacian.
pub fn blur_response(map: &GrayMap, sigma: f64) -> Result<GrayMap> {
    if map.width < 3 || map.height < 3 {
        return Err(Error::invalid(format!(
            "blur metric needs at least 3x3, got {}x{}",
            map.width, map.height
        )));
    }
    let mut lap = laplacian(map);
    lap.data.iter_mut().for_each(|v| *v = v.abs());
    gaussian_blur(&lap, sigma)
}

/// Share of pixels whose sharpness response is at or below `threshold`.
pub fn blur_fraction(map: &GrayMap, sigma: f64, threshold: f64) -> Result<f64> {
    let response = blur_response(map, sigma)?;
    let blurry = response.data.iter().filter(|&&v| v <= threshold).count();
    Ok(blurry as f64 / response.data.len() as f64)
}
