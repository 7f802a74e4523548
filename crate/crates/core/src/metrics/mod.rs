//! Evaluation statistics: Fréchet distance between Gaussian feature fits,
//! AUROC, mean ± SD and the one-sided paired t-test.

mod auroc;
mod fid;
pub mod linalg;
mod special;
mod ttest;

use alloc::format;
use alloc::string::String;

use crate::{Error, Result};

pub use auroc::{auroc, LabeledScore};
pub use fid::{frechet_distance, gaussian_moments, GaussianMoments};
pub use special::{ln_gamma, regularized_incomplete_beta, student_t_upper_tail};
pub use ttest::{paired_t_one_sided, TTest};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    /// `"0.94 ± 0.03"` with the given number of decimals.
    pub fn display(&self, decimals: usize) -> String {
        format!("{:.*} ± {:.*}", decimals, self.mean, decimals, self.sd)
    }
}

/// Arithmetic mean and sample (n - 1) standard deviation.
pub fn mean_sd(values: &[f64]) -> Result<MeanSd> {
    if values.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: values.len() });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(MeanSd { mean, sd: libm::sqrt(ss / (n - 1.0)) })
}
