//! Classifier concordance: does the classifier agree, and how strongly,
//! with the class each seed was generated for?

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use crate::backend::{Head, ModelBackend, Prediction};
use crate::latent::Seed;
use crate::workbench::Workbench;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "lowercase"))]
pub enum Strength {
    Strong,
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct StrengthThresholds {
    /// Strong when the winning post-softmax value exceeds this.
    pub strong_confidence: f64,
    /// Strong when a continuous score lies outside `±continuous_strength`.
    pub continuous_strength: f64,
}

impl Default for StrengthThresholds {
    fn default() -> Self {
        Self { strong_confidence: 0.75, continuous_strength: 0.5 }
    }
}

impl StrengthThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.strong_confidence > 0.0 && self.strong_confidence < 1.0) {
            return Err(Error::invalid(format!(
                "strong_confidence must be in (0, 1), got {}",
                self.strong_confidence
            )));
        }
        if !(self.continuous_strength.is_finite() && self.continuous_strength > 0.0) {
            return Err(Error::invalid(format!(
                "continuous_strength must be positive, got {}",
                self.continuous_strength
            )));
        }
        Ok(())
    }
}

/// Equality with a threshold counts as weak.
pub fn strength(p: &Prediction, t: &StrengthThresholds) -> Strength {
    let strong = match p.head {
        Head::Categorical => p.values.iter().copied().fold(f64::NEG_INFINITY, f64::max) > t.strong_confidence,
        Head::Continuous => p.values[0] < -t.continuous_strength || p.values[0] > t.continuous_strength,
    };
    if strong {
        Strength::Strong
    } else {
        Strength::Weak
    }
}

/// Argmax for categorical heads; sign for continuous heads (negative is
/// class 0). Exact ties and a zero score give `None`.
pub fn predicted_class(p: &Prediction) -> Option<usize> {
    match p.head {
        Head::Categorical => {
            let max = p.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut winners = p.values.iter().enumerate().filter(|(_, &v)| v == max);
            let first = winners.next()?.0;
            winners.next().is_none().then_some(first)
        }
        Head::Continuous => {
            let s = p.values[0];
            if s < 0.0 {
                Some(0)
            } else if s > 0.0 {
                Some(1)
            } else {
                None
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Bucket {
    #[cfg_attr(feature = "serde", serde(rename = "strong"))]
    StronglyConcordant,
    #[cfg_attr(feature = "serde", serde(rename = "weak"))]
    WeaklyConcordant,
    #[cfg_attr(feature = "serde", serde(rename = "non"))]
    NonConcordant,
}

impl Bucket {
    pub fn short_name(self) -> &'static str {
        match self {
            Bucket::StronglyConcordant => "strong",
            Bucket::WeaklyConcordant => "weak",
            Bucket::NonConcordant => "non",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "strong" => Some(Bucket::StronglyConcordant),
            "weak" => Some(Bucket::WeaklyConcordant),
            "non" => Some(Bucket::NonConcordant),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConcordanceEntry {
    pub gan_class: usize,
    #[cfg_attr(feature = "serde", serde(rename = "pred_class"))]
    pub predicted_class: Option<usize>,
    pub prediction: Prediction,
    pub strength: Strength,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcordanceRecord {
    pub seed: Seed,
    pub entries: Vec<ConcordanceEntry>,
    pub bucket: Bucket,
}

/// Strong: every class predicted correctly and strongly. Weak: all correct,
/// some weak. Otherwise non-concordant.
pub fn bucket_for(entries: &[ConcordanceEntry]) -> Bucket {
    let all_match = entries.iter().all(|e| e.predicted_class == Some(e.gan_class));
    if !all_match {
        Bucket::NonConcordant
    } else if entries.iter().all(|e| e.strength == Strength::Strong) {
        Bucket::StronglyConcordant
    } else {
        Bucket::WeaklyConcordant
    }
}

pub fn entry_for(gan_class: usize, prediction: Prediction, t: &StrengthThresholds) -> ConcordanceEntry {
    ConcordanceEntry {
        gan_class,
        predicted_class: predicted_class(&prediction),
        strength: strength(&prediction, t),
        prediction,
    }
}

/// Generates one image per class from `seed` and buckets the classifier's
/// agreement with the generation labels.
pub fn assess_seed<B: ModelBackend>(bench: &Workbench<B>, seed: Seed) -> Result<ConcordanceRecord> {
    let thresholds = bench.thresholds();
    let entries = (0..bench.descriptor().classes.len())
        .map(|class| {
            let schedule = bench.pure_schedule(class)?;
            let rendered = bench.render(seed, &schedule)?;
            Ok(entry_for(class, rendered.prediction, &thresholds))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.with_seed(seed.0))?;
    let bucket = bucket_for(&entries);
    Ok(ConcordanceRecord { seed, entries, bucket })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScreeningSummary {
    pub total: usize,
    pub strong: usize,
    pub weak: usize,
    pub non: usize,
}

impl ScreeningSummary {
    pub fn add(&mut self, bucket: Bucket) {
        self.total += 1;
        match bucket {
            Bucket::StronglyConcordant => self.strong += 1,
            Bucket::WeaklyConcordant => self.weak += 1,
            Bucket::NonConcordant => self.non += 1,
        }
    }

    /// Associative, commutative combination of partial summaries.
    pub fn merge(self, other: Self) -> Self {
        Self {
            total: self.total + other.total,
            strong: self.strong + other.strong,
            weak: self.weak + other.weak,
            non: self.non + other.non,
        }
    }

    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a ConcordanceRecord>) -> Self {
        let mut s = Self::default();
        records.into_iter().for_each(|r| s.add(r.bucket));
        s
    }

    /// `(strong, weak, non)` shares of the total.
    pub fn fractions(&self) -> (f64, f64, f64) {
        if self.total == 0 {
            return (0.0, 0.0, 0.0);
        }
        let n = self.total as f64;
        (self.strong as f64 / n, self.weak as f64 / n, self.non as f64 / n)
    }

    /// `"31.1% strong, 27.0% weak, 41.9% non-concordant"` style line.
    pub fn display_line(&self) -> String {
        let (s, w, n) = self.fractions();
        format!("{} strong, {} weak, {} non-concordant", percent(s), percent(w), percent(n))
    }
}

/// One-decimal percentage, e.g. `0.311` -> `"31.1%"`.
pub fn percent(fraction: f64) -> String {
    format!("{:.1}%", fraction * 100.0)
}

/// Assesses seeds in ascending order, handing each record to `sink` as it
/// is produced.
pub fn screen_streaming<B: ModelBackend>(
    bench: &Workbench<B>,
    seeds: Range<u64>,
    mut sink: impl FnMut(&ConcordanceRecord) -> Result<()>,
) -> Result<ScreeningSummary> {
    if seeds.is_empty() {
        return Err(Error::invalid("seed range is empty"));
    }
    let mut summary = ScreeningSummary::default();
    for s in seeds {
        let record = assess_seed(bench, Seed(s))?;
        summary.add(record.bucket);
        sink(&record)?;
    }
    Ok(summary)
}

pub fn screen<B: ModelBackend>(bench: &Workbench<B>, seeds: Range<u64>) -> Result<(Vec<ConcordanceRecord>, ScreeningSummary)> {
    let mut records = Vec::with_capacity(seeds.end.saturating_sub(seeds.start) as usize);
    let summary = screen_streaming(bench, seeds, |r| {
        records.push(r.clone());
        Ok(())
    })?;
    Ok((records, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::ToyBackend;
    use alloc::vec;
    use proptest::prelude::*;

    fn cat(a: f64) -> Prediction {
        Prediction::categorical(vec![a, 1.0 - a]).unwrap()
    }

    fn cont(s: f64) -> Prediction {
        Prediction::continuous(s).unwrap()
    }

    fn t() -> StrengthThresholds {
        StrengthThresholds::default()
    }

    #[test]
    fn strength_rules() {
        assert_eq!(strength(&cat(0.9), &t()), Strength::Strong);
        assert_eq!(strength(&cat(0.75), &t()), Strength::Weak);
        assert_eq!(strength(&cat(0.25), &t()), Strength::Weak);
        assert_eq!(strength(&cat(0.1), &t()), Strength::Strong);
        assert_eq!(strength(&cont(-0.6), &t()), Strength::Strong);
        assert_eq!(strength(&cont(0.3), &t()), Strength::Weak);
        assert_eq!(strength(&cont(0.5), &t()), Strength::Weak);
        assert_eq!(strength(&cont(-0.5), &t()), Strength::Weak);
    }

    #[test]
    fn predicted_class_rules() {
        assert_eq!(predicted_class(&cat(0.6)), Some(0));
        assert_eq!(predicted_class(&cat(0.5)), None);
        assert_eq!(predicted_class(&cont(0.2)), Some(1));
        assert_eq!(predicted_class(&cont(-0.2)), Some(0));
        assert_eq!(predicted_class(&cont(0.0)), None);
    }

    #[test]
    fn bucket_rules() {
        let strong_pair = [entry_for(0, cat(0.9), &t()), entry_for(1, cat(0.1), &t())];
        assert_eq!(bucket_for(&strong_pair), Bucket::StronglyConcordant);
        let mixed = [entry_for(0, cat(0.9), &t()), entry_for(1, cat(0.4), &t())];
        assert_eq!(bucket_for(&mixed), Bucket::WeaklyConcordant);
        let miss = [entry_for(0, cat(0.9), &t()), entry_for(1, cat(0.9), &t())];
        assert_eq!(bucket_for(&miss), Bucket::NonConcordant);
        let zero = [entry_for(0, cont(-0.9), &t()), entry_for(1, cont(0.0), &t())];
        assert_eq!(bucket_for(&zero), Bucket::NonConcordant);
    }

    #[test]
    fn summary_formatting_matches_figure_style() {
        let s = ScreeningSummary { total: 1000, strong: 311, weak: 270, non: 419 };
        assert_eq!(s.display_line(), "31.1% strong, 27.0% weak, 41.9% non-concordant");
        let (a, b, c) = s.fractions();
        assert!((a + b + c - 1.0).abs() < 1e-9);
    }

    #[test]
    fn toy_screen_strong() {
        let toy = ToyBackend::with_slope(6.0).unwrap();
        let bench = Workbench::new(&toy, toy.embeddings()).unwrap();
        let (records, summary) = screen(&bench, 0..20).unwrap();
        assert_eq!(records.len(), 20);
        assert_eq!(summary.strong, 20);
        assert!(records.windows(2).all(|w| w[0].seed < w[1].seed));
    }

    #[test]
    fn toy_screen_weak_with_flat_slope() {
        let toy = ToyBackend::with_slope(1.0).unwrap();
        let bench = Workbench::new(&toy, toy.embeddings()).unwrap();
        let (_, summary) = screen(&bench, 0..20).unwrap();
        assert_eq!(summary.weak, 20);
    }

    #[test]
    fn empty_range_rejected() {
        let toy = ToyBackend::with_slope(6.0).unwrap();
        let bench = Workbench::new(&toy, toy.embeddings()).unwrap();
        assert!(screen(&bench, 5..5).is_err());
    }

    fn arb_entry() -> impl Strategy<Value = (f64, f64)> {
        (0.0f64..=1.0, 0.0f64..=1.0)
    }

    proptest! {
        #[test]
        fn raising_threshold_never_strengthens((p0, p1) in arb_entry(), lo in 0.5f64..0.99, bump in 0.0f64..0.5) {
            let hi = (lo + bump).min(0.999);
            let tl = StrengthThresholds { strong_confidence: lo, ..t() };
            let th = StrengthThresholds { strong_confidence: hi, ..t() };
            let e = |th: &StrengthThresholds| bucket_for(&[entry_for(0, cat(p0), th), entry_for(1, cat(p1), th)]);
            let (bl, bh) = (e(&tl), e(&th));
            if bl == Bucket::WeaklyConcordant {
                prop_assert_ne!(bh, Bucket::StronglyConcordant);
            }
            if bl == Bucket::NonConcordant {
                prop_assert_eq!(bh, Bucket::NonConcordant);
            }
        }

        #[test]
        fn swapping_class_order_keeps_bucket(p0 in 0.0f64..=1.0, p1 in 0.0f64..=1.0) {
            // Class 0's image scored p0 for class 0; class 1's image scored p1 for class 0.
            let original = [entry_for(0, cat(p0), &t()), entry_for(1, cat(p1), &t())];
            // Relabel: old class 1 becomes class 0, scores reversed.
            let swapped = [entry_for(0, cat(1.0 - p1), &t()), entry_for(1, cat(1.0 - p0), &t())];
            prop_assert_eq!(bucket_for(&original), bucket_for(&swapped));
        }

        #[test]
        fn summary_fractions_sum_to_one(buckets in proptest::collection::vec(0u8..3, 1..200)) {
            let mut s = ScreeningSummary::default();
            for b in &buckets {
                s.add([Bucket::StronglyConcordant, Bucket::WeaklyConcordant, Bucket::NonConcordant][*b as usize]);
            }
            let (a, b, c) = s.fractions();
            prop_assert!((a + b + c - 1.0).abs() < 1e-9);
            prop_assert_eq!(s.strong + s.weak + s.non, s.total);
            let (x, y) = buckets.split_at(buckets.len() / 2);
            let mut sx = ScreeningSummary::default();
            let mut sy = ScreeningSummary::default();
            x.iter().for_each(|b| sx.add([Bucket::StronglyConcordant, Bucket::WeaklyConcordant, Bucket::NonConcordant][*b as usize]));
            y.iter().for_each(|b| sy.add([Bucket::StronglyConcordant, Bucket::WeaklyConcordant, Bucket::NonConcordant][*b as usize]));
            prop_assert_eq!(sx.merge(sy), s);
            prop_assert_eq!(sy.merge(sx), s);
        }
    }
}
