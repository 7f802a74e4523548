use std::io::BufRead;
use std::path::Path;

use histoblend_core::backend::{Head, Prediction};
use histoblend_core::concordance::{percent, Bucket, ConcordanceEntry, ConcordanceRecord, ScreeningSummary, Strength};
use histoblend_core::imaging::Polygon;
use histoblend_core::latent::{ClassEmbedding, EmbeddingSet, Seed};
use serde::{Deserialize, Serialize};

use crate::fsutil::{read_json, write_json_atomic};
use crate::{Result, StudioError};

#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingsFile {
    version: u32,
    e_dim: usize,
    classes: Vec<ClassEmbedding>,
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingSet> {
    let file: EmbeddingsFile = read_json(path)?;
    if file.version != 1 {
        return Err(StudioError::Config(format!(
            "{}: unsupported embeddings version {}",
            path.display(),
            file.version
        )));
    }
    Ok(EmbeddingSet::new(file.e_dim, file.classes)?)
}

pub fn write_embeddings(path: &Path, set: &EmbeddingSet) -> Result<()> {
    let file = EmbeddingsFile { version: 1, e_dim: set.e_dim(), classes: set.classes().to_vec() };
    write_json_atomic(path, &file)
}

/// ROI file: a JSON list of polygons, each a list of `[x, y]` vertices.
pub fn read_roi(path: &Path) -> Result<Vec<Polygon>> {
    let raw: Vec<Vec<[f64; 2]>> = read_json(path)?;
    raw.into_iter()
        .enumerate()
        .map(|(i, v)| {
            Polygon::new(v).map_err(|e| StudioError::Config(format!("{}: polygon {i}: {e}", path.display())))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryLine {
    pub gan_class: usize,
    pub pred_class: Option<usize>,
    pub head: Head,
    pub values: Vec<f64>,
    pub strength: Strength,
}

/// One line of a concordance JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcordanceLine {
    pub seed: u64,
    pub entries: Vec<EntryLine>,
    pub bucket: Bucket,
}

impl From<&ConcordanceRecord> for ConcordanceLine {
    fn from(r: &ConcordanceRecord) -> Self {
        Self {
            seed: r.seed.0,
            entries: r
                .entries
                .iter()
                .map(|e| EntryLine {
                    gan_class: e.gan_class,
                    pred_class: e.predicted_class,
                    head: e.prediction.head,
                    values: e.prediction.values.clone(),
                    strength: e.strength,
                })
                .collect(),
            bucket: r.bucket,
        }
    }
}

impl From<ConcordanceLine> for ConcordanceRecord {
    fn from(l: ConcordanceLine) -> Self {
        Self {
            seed: Seed(l.seed),
            entries: l
                .entries
                .into_iter()
                .map(|e| ConcordanceEntry {
                    gan_class: e.gan_class,
                    predicted_class: e.pred_class,
                    prediction: Prediction { head: e.head, values: e.values },
                    strength: e.strength,
                })
                .collect(),
            bucket: l.bucket,
        }
    }
}

/// Reads every complete line. A torn final line (no trailing newline and
/// unparsable) is ignored so interrupted sweeps can be resumed.
pub fn read_concordance(path: &Path) -> Result<Vec<ConcordanceLine>> {
    let file = std::fs::File::open(path).map_err(StudioError::io(path))?;
    let lines: Vec<String> = std::io::BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(StudioError::io(path))?;
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(rec) => out.push(rec),
            Err(_) if i + 1 == lines.len() => break,
            Err(e) => return Err(StudioError::json(format!("{}:{}", path.display(), i + 1))(e)),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketValues<T> {
    pub strong: T,
    pub weak: T,
    pub non: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub total: usize,
    pub counts: BucketValues<usize>,
    pub fractions: BucketValues<f64>,
    pub percent: BucketValues<String>,
    pub display: String,
}

impl From<&ScreeningSummary> for SummaryFile {
    fn from(s: &ScreeningSummary) -> Self {
        let (strong, weak, non) = s.fractions();
        Self {
            total: s.total,
            counts: BucketValues { strong: s.strong, weak: s.weak, non: s.non },
            fractions: BucketValues { strong, weak, non },
            percent: BucketValues { strong: percent(strong), weak: percent(weak), non: percent(non) },
            display: s.display_line(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStepLine {
    pub w: f64,
    pub frame: String,
    pub pred: Vec<f64>,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub seed: u64,
    pub steps: Vec<TraceStepLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFile {
    pub label: String,
    /// Class index per layer, layer 1 first.
    pub layers: Vec<usize>,
    pub frame: String,
    pub pred: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig3File {
    pub seed: u64,
    pub cells: Vec<CellFile>,
}
