use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LabeledScore {
    pub score: f64,
    pub positive: bool,
}

/// Mann-Whitney AUROC with midranks for tied scores.
pub fn auroc(data: &[LabeledScore]) -> Result<f64> {
    let n_pos = data.iter().filter(|d| d.positive).count();
    let n_neg = data.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric("AUROC needs both positive and negative labels".into()));
    }
    if data.iter().any(|d| d.score.is_nan()) {
        return Err(Error::invalid("scores contain NaN"));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&a, &b| data[a].score.total_cmp(&data[b].score));

    // Sum of (1-based) midranks of the positives.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && data[order[j]].score == data[order[i]].score {
            j += 1;
        }
        let midrank = (i + 1 + j) as f64 / 2.0;
        let positives = order[i..j].iter().filter(|&&k| data[k].positive).count();
        rank_sum += midrank * positives as f64;
        i = j;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    let u = rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ls(pairs: &[(f64, u8)]) -> Vec<LabeledScore> {
        pairs.iter().map(|&(score, l)| LabeledScore { score, positive: l == 1 }).collect()
    }

    #[test]
    fn perfect_separation() {
        assert_eq!(auroc(&ls(&[(0.1, 0), (0.9, 1)])).unwrap(), 1.0);
    }

    #[test]
    fn all_tied() {
        assert_eq!(auroc(&ls(&[(0.3, 0), (0.3, 1), (0.3, 1), (0.3, 0)])).unwrap(), 0.5);
    }

    #[test]
    fn three_of_four_pairs() {
        assert_eq!(auroc(&ls(&[(0.2, 0), (0.4, 1), (0.6, 0), (0.8, 1)])).unwrap(), 0.75);
    }

    #[test]
    fn single_class_undefined() {
        assert!(matches!(auroc(&ls(&[(0.2, 1), (0.4, 1)])), Err(Error::UndefinedMetric(_))));
        assert!(auroc(&[]).is_err());
    }

    #[test]
    fn nan_rejected() {
        assert!(auroc(&ls(&[(f64::NAN, 0), (0.4, 1)])).is_err());
        let _ = vec![0u8];
    }
}
