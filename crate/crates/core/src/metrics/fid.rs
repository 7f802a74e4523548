use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::linalg::{symmetric_eigen, SquareMatrix};
use crate::{Error, Result};

const PSD_FLOOR: f64 = -1e-8;

/// Mean and covariance of a Gaussian fit to feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMoments {
    mean: Vec<f64>,
    cov: SquareMatrix,
}

impl GaussianMoments {
    pub fn new(mean: Vec<f64>, cov: SquareMatrix) -> Result<Self> {
        if cov.dim() != mean.len() {
            return Err(Error::invalid(format!(
                "mean has {} components, covariance is {}x{}",
                mean.len(),
                cov.dim(),
                cov.dim()
            )));
        }
        if cov.max_asymmetry() > 1e-9 {
            return Err(Error::invalid("covariance is not symmetric"));
        }
        Ok(Self { mean, cov })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &SquareMatrix {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Sample mean and unbiased (N - 1) covariance of the rows.
pub fn gaussian_moments<R: AsRef<[f64]>>(rows: &[R]) -> Result<GaussianMoments> {
    if rows.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: rows.len() });
    }
    let d = rows[0].as_ref().len();
    if d == 0 {
        return Err(Error::invalid("feature vectors are empty"));
    }
    if let Some(bad) = rows.iter().position(|r| r.as_ref().len() != d) {
        return Err(Error::invalid(format!("row {bad} has {} features, expected {d}", rows[bad].as_ref().len())));
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(r.as_ref()) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut cov = SquareMatrix::zeros(d);
    for r in rows {
        let r = r.as_ref();
        for i in 0..d {
            let di = r[i] - mean[i];
            for j in 0..=i {
                let v = cov.get(i, j) + di * (r[j] - mean[j]);
                cov.set(i, j, v);
            }
        }
    }
    for i in 0..d {
        for j in 0..=i {
            let v = cov.get(i, j) / (n - 1.0);
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    GaussianMoments::new(mean, cov)
}

/// Clamps eigenvalues in `[-1e-8, 0)` to zero and rejects anything lower.
fn checked_spectrum(values: &[f64]) -> Result<Vec<f64>> {
    values
        .iter()
        .map(|&v| if v < PSD_FLOOR { Err(Error::NotPsd(v)) } else { Ok(v.max(0.0)) })
        .collect()
}

/// `|mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2)`.
pub fn frechet_distance(a: &GaussianMoments, b: &GaussianMoments) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::invalid(format!("moment dimensions differ: {} vs {}", a.dim(), b.dim())));
    }
    let mean_term: f64 = a.mean.iter().zip(&b.mean).map(|(x, y)| (x - y) * (x - y)).sum();

    let eig_a = symmetric_eigen(&a.cov);
    checked_spectrum(&eig_a.values)?;
    checked_spectrum(&symmetric_eigen(&b.cov).values)?;
    if a == b {
        return Ok(0.0);
    }
    let sqrt_a = eig_a.reconstruct(|v| if v > 0.0 { libm::sqrt(v) } else { 0.0 });
    let product = sqrt_a.matmul(&b.cov).matmul(&sqrt_a).symmetrized();
    let cross = checked_spectrum(&symmetric_eigen(&product).values)?;
    let trace_sqrt: f64 = cross.iter().map(|&v| libm::sqrt(v)).sum();

    Ok(mean_term + a.cov.trace() + b.cov.trace() - 2.0 * trace_sqrt)
}
