//! Pre/post education tests built from classifier predictions on real tiles.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::concordance::{percent, Bucket, ConcordanceRecord};
use crate::latent::Seed;
use crate::metrics::{paired_t_one_sided, TTest};
use crate::rng::SplitMix64;
use crate::{Error, Result};

/// Tiles per merged trio.
pub const TRIO: usize = 3;
/// Correct tiles with `|score|` above this are strong.
pub const STRONG_BAND: f64 = 0.5;

const BUILD_TAG: u64 = 0x4355_5252_4943_554C;
const SPLIT_TAG: u64 = 0x5350_4C49_5443_4153;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TilePrediction {
    pub tile_id: String,
    /// Continuous score; negative is class 0, positive class 1.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CaseRecord {
    pub case_id: String,
    pub slide_id: String,
    pub label: u8,
    pub tiles: Vec<TilePrediction>,
}

impl CaseRecord {
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Error::CaseBuild { case_id: self.case_id.clone(), reason };
        if self.label > 1 {
            return Err(fail(format!("label must be 0 or 1, got {}", self.label)));
        }
        if self.tiles.is_empty() {
            return Err(fail("no tiles".into()));
        }
        if let Some(t) = self.tiles.iter().find(|t| !t.score.is_finite()) {
            return Err(fail(format!("tile {} has a non-finite score", t.tile_id)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "lowercase"))]
pub enum Stratum {
    Strong,
    Weak,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Strata {
    pub strong: Vec<TilePrediction>,
    pub weak: Vec<TilePrediction>,
    pub excluded: Vec<TilePrediction>,
}

/// Splits a case's tiles into strong-correct, weak-correct and excluded.
/// A zero score has no side and is excluded; `|score| == 0.5` is weak.
pub fn stratify_tiles(case: &CaseRecord) -> Strata {
    let mut out = Strata::default();
    for tile in &case.tiles {
        let s = tile.score;
        let correct = if case.label == 1 { s > 0.0 } else { s < 0.0 };
        if !correct {
            out.excluded.push(tile.clone());
        } else if s.abs() > STRONG_BAND {
            out.strong.push(tile.clone());
        } else {
            out.weak.push(tile.clone());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestItem {
    pub item_id: String,
    pub case_id: String,
    pub slide_id: String,
    pub stratum: Stratum,
    /// Tile ids in left-to-right trio order.
    pub tiles: [String; TRIO],
    pub answer: u8,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestPaper {
    pub rng_seed: u64,
    /// Source case ids in input order.
    pub cases: Vec<String>,
    pub items: Vec<TestItem>,
}

impl TestPaper {
    pub fn item(&self, item_id: &str) -> Option<&TestItem> {
        self.items.iter().find(|i| i.item_id == item_id)
    }
}

fn sample_trio(rng: &mut SplitMix64, tiles: &[TilePrediction]) -> [String; TRIO] {
    let mut idx: Vec<usize> = (0..tiles.len()).collect();
    for i in 0..TRIO {
        let j = i + rng.next_below((idx.len() - i) as u64) as usize;
        idx.swap(i, j);
    }
    core::array::from_fn(|i| tiles[idx[i]].tile_id.clone())
}

/// One strong and one weak trio per case, in shuffled order.
pub fn build_test(cases: &[CaseRecord], rng_seed: u64) -> Result<TestPaper> {
    if cases.is_empty() {
        return Err(Error::invalid("no cases to build a test from"));
    }
    let mut seen = BTreeSet::new();
    let mut strata = Vec::with_capacity(cases.len());
    for case in cases {
        case.validate()?;
        if !seen.insert(case.case_id.as_str()) {
            return Err(Error::invalid(format!("duplicate case id {}", case.case_id)));
        }
        let s = stratify_tiles(case);
        for (name, n) in [("strong", s.strong.len()), ("weak", s.weak.len())] {
            if n < TRIO {
                return Err(Error::CaseBuild {
                    case_id: case.case_id.clone(),
                    reason: format!("only {n} {name}-correct tiles, need {TRIO}"),
                });
            }
        }
        strata.push(s);
    }

    let mut rng = SplitMix64::new(rng_seed ^ BUILD_TAG);
    let mut items = Vec::with_capacity(2 * cases.len());
    for (case, s) in cases.iter().zip(&strata) {
        for (stratum, tiles) in [(Stratum::Strong, &s.strong), (Stratum::Weak, &s.weak)] {
            items.push(TestItem {
                item_id: String::new(),
                case_id: case.case_id.clone(),
                slide_id: case.slide_id.clone(),
                stratum,
                tiles: sample_trio(&mut rng, tiles),
                answer: case.label,
            });
        }
    }
    rng.shuffle(&mut items);
    let width = items.len().to_string().len().max(3);
    for (i, item) in items.iter_mut().enumerate() {
        item.item_id = format!("item-{:0width$}", i + 1);
    }
    Ok(TestPaper {
        rng_seed,
        cases: cases.iter().map(|c| c.case_id.clone()).collect(),
        items,
    })
}

/// Seeded split of cases into two halves with balanced labels. Odd label
/// groups give the extra case to the first half.
pub fn split_cases(cases: &[CaseRecord], rng_seed: u64) -> Result<(Vec<CaseRecord>, Vec<CaseRecord>)> {
    for case in cases {
        case.validate()?;
    }
    let mut rng = SplitMix64::new(rng_seed ^ SPLIT_TAG);
    let (mut first, mut second) = (Vec::new(), Vec::new());
    for label in 0..=1u8 {
        let mut group: Vec<&CaseRecord> = cases.iter().filter(|c| c.label == label).collect();
        rng.shuffle(&mut group);
        let cut = group.len().div_ceil(2);
        first.extend(group[..cut].iter().map(|&c| c.clone()));
        second.extend(group[cut..].iter().map(|&c| c.clone()));
    }
    Ok((first, second))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
}

impl Tally {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }

    fn record(&mut self, ok: bool) {
        self.total += 1;
        self.correct += ok as usize;
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScoreSheet {
    pub respondent: String,
    pub answers: BTreeMap<String, u8>,
    pub overall: Tally,
    pub strong: Tally,
    pub weak: Tally,
}

pub fn score_test(paper: &TestPaper, respondent: impl Into<String>, answers: &BTreeMap<String, u8>) -> Result<ScoreSheet> {
    let missing: Vec<String> = paper
        .items
        .iter()
        .filter(|i| !answers.contains_key(&i.item_id))
        .map(|i| i.item_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::IncompleteSheet(missing));
    }
    if let Some(extra) = answers.keys().find(|k| paper.item(k).is_none()) {
        return Err(Error::invalid(format!("answer for unknown item {extra}")));
    }
    if let Some((k, v)) = answers.iter().find(|(_, &v)| v > 1) {
        return Err(Error::invalid(format!("answer for {k} must be 0 or 1, got {v}")));
    }
    let (mut overall, mut strong, mut weak) = (Tally::default(), Tally::default(), Tally::default());
    for item in &paper.items {
        let ok = answers[&item.item_id] == item.answer;
        overall.record(ok);
        match item.stratum {
            Stratum::Strong => strong.record(ok),
            Stratum::Weak => weak.record(ok),
        }
    }
    Ok(ScoreSheet { respondent: respondent.into(), answers: answers.clone(), overall, strong, weak })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Comparison {
    pub pre_mean: f64,
    pub post_mean: f64,
    pub test: TTest,
}

impl Comparison {
    fn between(pre: &[f64], post: &[f64]) -> Result<Self> {
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        Ok(Self { pre_mean: mean(pre), post_mean: mean(post), test: paired_t_one_sided(pre, post)? })
    }

    /// `72.7% to 79.0% (p = 0.021)`
    pub fn headline(&self) -> String {
        format!("{} to {} (p = {:.3})", percent(self.pre_mean), percent(self.post_mean), self.test.p)
    }

    /// `74.3% to 83.0%, p = 0.012`
    pub fn inline(&self) -> String {
        format!("{} to {}, p = {:.3}", percent(self.pre_mean), percent(self.post_mean), self.test.p)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ImprovementReport {
    pub respondents: Vec<String>,
    pub overall: Comparison,
    pub strong: Comparison,
    pub weak: Comparison,
}

impl ImprovementReport {
    pub fn render_text(&self) -> String {
        format!(
            "overall: {}\nstrong: {}\nweak: {}\n",
            self.overall.headline(),
            self.strong.inline(),
            self.weak.inline()
        )
    }
}

fn by_respondent<'a>(sheets: &'a [ScoreSheet], which: &str) -> Result<BTreeMap<&'a str, &'a ScoreSheet>> {
    let mut map = BTreeMap::new();
    for s in sheets {
        if map.insert(s.respondent.as_str(), s).is_some() {
            return Err(Error::InvalidPairing(format!("respondent {} appears twice in {which}", s.respondent)));
        }
    }
    Ok(map)
}

/// Pairs sheets by respondent and runs the one-sided paired t-test overall
/// and per stratum.
pub fn analyze_improvement(pre: &[ScoreSheet], post: &[ScoreSheet]) -> Result<ImprovementReport> {
    let a = by_respondent(pre, "pre")?;
    let b = by_respondent(post, "post")?;
    if let Some(r) = a.keys().find(|r| !b.contains_key(*r)).or_else(|| b.keys().find(|r| !a.contains_key(*r))) {
        return Err(Error::InvalidPairing(format!("respondent {r} is missing from one side")));
    }
    let column = |m: &BTreeMap<&str, &ScoreSheet>, f: fn(&ScoreSheet) -> Tally| -> Vec<f64> {
        m.values().map(|s| f(s).accuracy()).collect()
    };
    let cmp = |f: fn(&ScoreSheet) -> Tally| Comparison::between(&column(&a, f), &column(&b, f));
    Ok(ImprovementReport {
        respondents: a.keys().map(|r| r.to_string()).collect(),
        overall: cmp(|s| s.overall)?,
        strong: cmp(|s| s.strong)?,
        weak: cmp(|s| s.weak)?,
    })
}

/// Checks that every hand-picked teaching seed was screened strongly
/// concordant.
pub fn validate_teaching_selection(selected: &[Seed], records: &[ConcordanceRecord]) -> Result<()> {
    let buckets: BTreeMap<u64, Bucket> = records.iter().map(|r| (r.seed.0, r.bucket)).collect();
    let mut seen = BTreeSet::new();
    for seed in selected {
        if !seen.insert(seed.0) {
            return Err(Error::invalid(format!("seed {seed} selected twice")));
        }
        match buckets.get(&seed.0) {
            None => return Err(Error::invalid(format!("seed {seed} was not screened"))),
            Some(Bucket::StronglyConcordant) => {}
            Some(b) => {
                return Err(Error::invalid(format!("seed {seed} is {}-concordant, not strong", b.short_name())))
            }
        }
    }
    Ok(())
}
