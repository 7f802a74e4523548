use alloc::format;

use super::special::student_t_upper_tail;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TTest {
    pub t: f64,
    pub df: usize,
    /// Upper-tail probability: evidence that `post` exceeds `pre`.
    pub p: f64,
}

/// One-sided paired t-test on `post - pre`.
///
/// All-zero differences give `t = 0, p = 0.5`. Constant non-zero
/// differences have no variance estimate and are rejected.
pub fn paired_t_one_sided(pre: &[f64], post: &[f64]) -> Result<TTest> {
    if pre.len() != post.len() {
        return Err(Error::invalid(format!(
            "paired samples differ in length: {} vs {}",
            pre.len(),
            post.len()
        )));
    }
    let n = pre.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let nf = n as f64;
    let diffs = pre.iter().zip(post).map(|(a, b)| b - a);
    let mean = diffs.clone().sum::<f64>() / nf;
    let var = diffs.map(|d| (d - mean) * (d - mean)).sum::<f64>() / (nf - 1.0);
    let df = n - 1;
    if var == 0.0 {
        if mean == 0.0 {
            return Ok(TTest { t: 0.0, df, p: 0.5 });
        }
        return Err(Error::DegenerateTest("differences have zero variance".into()));
    }
    let t = mean / libm::sqrt(var / nf);
    Ok(TTest { t, df, p: student_t_upper_tail(t, df as f64) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_samples_give_null() {
        let x = [0.7, 0.8, 0.75];
        let r = paired_t_one_sided(&x, &x).unwrap();
        assert_eq!((r.t, r.p, r.df), (0.0, 0.5, 2));
    }

    #[test]
    fn one_to_six() {
        let pre = [0.0; 6];
        let post = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let r = paired_t_one_sided(&pre, &post).unwrap();
        assert!((r.t - 4.582575694955841).abs() < 1e-12);
        assert!((r.p - 0.00296677225879613).abs() < 1e-10);
        assert_eq!(r.df, 5);
    }

    #[test]
    fn zero_variance_rejected() {
        let r = paired_t_one_sided(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]);
        assert!(matches!(r, Err(Error::DegenerateTest(_))));
    }

    #[test]
    fn shape_errors() {
        assert!(paired_t_one_sided(&[1.0], &[2.0]).is_err());
        assert!(paired_t_one_sided(&[1.0, 2.0], &[2.0]).is_err());
    }

    #[test]
    fn decrease_has_large_p() {
        let r = paired_t_one_sided(&[5.0, 6.0, 7.0, 8.0], &[4.0, 4.5, 6.0, 7.2]).unwrap();
        assert!(r.t < 0.0 && r.p > 0.5);
    }
}
