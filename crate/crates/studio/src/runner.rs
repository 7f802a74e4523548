//! Experiment executors shared by the CLI and the job service. Each writes
//! its outputs into a directory and returns the file names it produced.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};

use histoblend_core::blendlab::{blend_sequence, fig3_grid};
use histoblend_core::concordance::{assess_seed, ConcordanceRecord, ScreeningSummary};
use histoblend_core::curriculum::{analyze_improvement, build_test, score_test, ImprovementReport, ScoreSheet, TestPaper};
use histoblend_core::features::RandomProjection;
use histoblend_core::imaging::merge_trio;
use histoblend_core::latent::Seed;
use histoblend_core::metrics::{frechet_distance, gaussian_moments};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Project;
use crate::formats::{
    read_answers, read_cases, read_concordance, read_feature_matrix, read_png, write_png, CellFile, ConcordanceLine,
    Fig3File, SummaryFile, TraceFile, TraceStepLine,
};
use crate::fsutil::{read_json, write_atomic, write_json_atomic};
use crate::{Result, StudioError};

pub const CONCORDANCE_FILE: &str = "concordance.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Seeds assessed in parallel per chunk; records are written after each
/// chunk in ascending order.
const SCREEN_CHUNK: u64 = 64;

/// Parses `a..b` (half-open) or `a..=b` (inclusive).
pub fn parse_seed_range(s: &str) -> Result<Range<u64>> {
    let bad = || StudioError::Invalid(format!("seed range {s:?} is not a..b or a..=b"));
    let (a, b, inclusive) = if let Some((a, b)) = s.split_once("..=") {
        (a, b, true)
    } else if let Some((a, b)) = s.split_once("..") {
        (a, b, false)
    } else {
        return Err(bad());
    };
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    let end = if inclusive { b.checked_add(1).ok_or_else(bad)? } else { b };
    if end <= a {
        return Err(StudioError::Invalid(format!("seed range {s:?} is empty")));
    }
    Ok(a..end)
}

pub struct ScreenOutcome {
    pub summary: ScreeningSummary,
    pub files: Vec<String>,
}

/// Screens `seeds`, streaming records to `concordance.jsonl`. With
/// `resume`, an existing file whose records are a prefix of the range is
/// kept and the sweep continues after it.
pub fn run_screen(
    project: &Project,
    seeds: Range<u64>,
    out_dir: &Path,
    resume: bool,
    progress: &(dyn Fn(u64, u64) + Sync),
) -> Result<ScreenOutcome> {
    if seeds.is_empty() {
        return Err(StudioError::Invalid("seed range is empty".into()));
    }
    fs::create_dir_all(out_dir).map_err(StudioError::io(out_dir))?;
    let path = out_dir.join(CONCORDANCE_FILE);
    let total = seeds.end - seeds.start;
    let mut summary = ScreeningSummary::default();
    let mut start = seeds.start;
    let mut kept: Vec<ConcordanceLine> = Vec::new();
    if resume && path.exists() {
        kept = read_concordance(&path)?;
        let contiguous = kept.iter().enumerate().all(|(i, l)| l.seed == seeds.start + i as u64);
        if !contiguous || kept.len() as u64 > total {
            return Err(StudioError::Invalid(format!(
                "{} does not hold a prefix of the requested range",
                path.display()
            )));
        }
        kept.iter().for_each(|l| summary.add(l.bucket));
        start += kept.len() as u64;
        log::info!("resuming after {} screened seeds", kept.len());
    }
    let file = fs::File::create(&path).map_err(StudioError::io(&path))?;
    let mut out = std::io::BufWriter::new(file);
    let mut write_line = |line: &ConcordanceLine| -> Result<()> {
        serde_json::to_writer(&mut out, line).map_err(StudioError::json(path.display()))?;
        out.write_all(b"\n").map_err(StudioError::io(&path))
    };
    for line in &kept {
        write_line(line)?;
    }
    let bench = project.bench();
    let mut next = start;
    while next < seeds.end {
        let end = (next + SCREEN_CHUNK).min(seeds.end);
        let records: Vec<ConcordanceRecord> =
            (next..end).into_par_iter().map(|s| assess_seed(bench, Seed(s))).collect::<Result<_, _>>()?;
        for r in &records {
            summary.add(r.bucket);
            write_line(&ConcordanceLine::from(r))?;
        }
        next = end;
        progress(next - seeds.start, total);
    }
    out.flush().map_err(StudioError::io(&path))?;
    out.into_inner()
        .map_err(|e| StudioError::io(&path)(e.into_error()))?
        .sync_all()
        .map_err(StudioError::io(&path))?;
    write_json_atomic(&out_dir.join(SUMMARY_FILE), &SummaryFile::from(&summary))?;
    Ok(ScreenOutcome { summary, files: vec![CONCORDANCE_FILE.into(), SUMMARY_FILE.into()] })
}

pub fn frame_name(i: usize) -> String {
    format!("frame_{i:03}.png")
}

/// Frames `frame_000.png`... plus `trace.json`.
pub fn run_blend(project: &Project, seed: u64, steps: usize, out_dir: &Path) -> Result<(TraceFile, Vec<String>)> {
    let trace = blend_sequence(project.bench(), Seed(seed), steps)?;
    let mut files = Vec::new();
    let mut lines = Vec::new();
    for (i, step) in trace.steps.iter().enumerate() {
        let frame = frame_name(i);
        write_png(&out_dir.join(&frame), &step.image)?;
        lines.push(TraceStepLine {
            w: step.w.get(),
            frame: frame.clone(),
            pred: step.prediction.values.clone(),
            digest: step.digest.clone(),
        });
        files.push(frame);
    }
    let file = TraceFile { seed, steps: lines };
    write_json_atomic(&out_dir.join("trace.json"), &file)?;
    files.push("trace.json".into());
    Ok((file, files))
}

/// `B1.png`..`B6.png` plus `fig3.json`.
pub fn run_fig3(project: &Project, seed: u64, out_dir: &Path) -> Result<(Fig3File, Vec<String>)> {
    let cells = fig3_grid(project.bench(), Seed(seed))?;
    let mut files = Vec::new();
    let mut out = Vec::new();
    for c in &cells {
        let frame = format!("{}.png", c.label);
        write_png(&out_dir.join(&frame), &c.image)?;
        out.push(CellFile {
            label: c.label.clone(),
            layers: c.layer_classes.clone(),
            frame: frame.clone(),
            pred: c.prediction.values.clone(),
        });
        files.push(frame);
    }
    let file = Fig3File { seed, cells: out };
    write_json_atomic(&out_dir.join("fig3.json"), &file)?;
    files.push("fig3.json".into());
    Ok((file, files))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidSource {
    /// Precomputed feature matrices.
    Features { a: PathBuf, b: PathBuf },
    /// Directories of PNGs passed through the random-projection map.
    Images { a: PathBuf, b: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidReport {
    pub fid: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub dim: usize,
}

fn png_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(StudioError::io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
        .collect();
    files.sort();
    Ok(files)
}

fn image_features(projection: &RandomProjection, dir: &Path) -> Result<Vec<Vec<f64>>> {
    png_files(dir)?
        .par_iter()
        .map(|p| Ok(projection.features(&read_png(p)?)?))
        .collect()
}

pub fn run_fid(project: &Project, source: &FidSource) -> Result<FidReport> {
    let (a, b) = match source {
        FidSource::Features { a, b } => (read_feature_matrix(a)?, read_feature_matrix(b)?),
        FidSource::Images { a, b } => {
            let projection = RandomProjection::new(project.config().projection)?;
            (image_features(&projection, a)?, image_features(&projection, b)?)
        }
    };
    let ma = gaussian_moments(&a)?;
    let mb = gaussian_moments(&b)?;
    Ok(FidReport { fid: frechet_distance(&ma, &mb)?, n_a: a.len(), n_b: b.len(), dim: ma.dim() })
}

/// Test manifest: the built test plus where each trio image was written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestManifest {
    pub paper: TestPaper,
    /// Item id to trio PNG, relative to the manifest.
    pub trios: BTreeMap<String, String>,
}

/// Builds the test, writes `manifest.json`, an answer template, and the
/// merged trio images when `tiles_dir` holds `<tile_id>.png` files.
pub fn run_curriculum_build(cases: &Path, rng_seed: u64, tiles_dir: Option<&Path>, out_dir: &Path) -> Result<(TestManifest, Vec<String>)> {
    let cases = read_cases(cases)?;
    let paper = build_test(&cases, rng_seed)?;
    let mut files = Vec::new();
    let mut trios = BTreeMap::new();
    if let Some(dir) = tiles_dir {
        let written: Vec<(String, String)> = paper
            .items
            .par_iter()
            .map(|item| {
                let imgs = item
                    .tiles
                    .iter()
                    .map(|t| read_png(&dir.join(format!("{t}.png"))))
                    .collect::<Result<Vec<_>>>()?;
                let merged = merge_trio([&imgs[0], &imgs[1], &imgs[2]])?;
                let name = format!("trios/{}.png", item.item_id);
                write_png(&out_dir.join(&name), &merged)?;
                Ok((item.item_id.clone(), name))
            })
            .collect::<Result<_>>()?;
        for (id, name) in written {
            files.push(name.clone());
            trios.insert(id, name);
        }
    }
    let manifest = TestManifest { paper, trios };
    write_json_atomic(&out_dir.join(MANIFEST_FILE), &manifest)?;
    let mut template = String::from("respondent,item_id,answer\n");
    for item in &manifest.paper.items {
        template.push_str(&format!(",{},\n", item.item_id));
    }
    write_atomic(&out_dir.join("answers_template.csv"), template.as_bytes())?;
    files.push(MANIFEST_FILE.into());
    files.push("answers_template.csv".into());
    Ok((manifest, files))
}

/// Scores every respondent in the answers CSV; writes `sheets.json`.
pub fn run_curriculum_score(manifest: &Path, answers: &Path, out: &Path) -> Result<Vec<ScoreSheet>> {
    let manifest: TestManifest = read_json(manifest)?;
    let sheets = read_answers(answers)?
        .iter()
        .map(|(who, a)| Ok(score_test(&manifest.paper, who.clone(), a)?))
        .collect::<Result<Vec<_>>>()?;
    write_json_atomic(out, &sheets)?;
    Ok(sheets)
}

/// Pairs pre/post sheets; writes `report.json` and `report.txt` into
/// `out_dir`.
pub fn run_curriculum_analyze(pre: &Path, post: &Path, out_dir: &Path) -> Result<ImprovementReport> {
    let pre: Vec<ScoreSheet> = read_json(pre)?;
    let post: Vec<ScoreSheet> = read_json(post)?;
    let report = analyze_improvement(&pre, &post)?;
    write_json_atomic(&out_dir.join("report.json"), &report)?;
    write_atomic(&out_dir.join("report.txt"), report.render_text().as_bytes())?;
    Ok(report)
}
