use std::collections::BTreeMap;
use std::path::Path;

use histoblend_core::curriculum::{CaseRecord, TilePrediction};
use serde::{Deserialize, Serialize};

use crate::fsutil::write_atomic;
use crate::{Result, StudioError};

#[derive(Debug, Serialize, Deserialize)]
struct CaseRow {
    case_id: String,
    slide_id: String,
    label: u8,
    tile_id: String,
    score: f64,
}

/// Case manifest, one row per tile. Cases keep first-appearance order.
pub fn read_cases(path: &Path) -> Result<Vec<CaseRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(StudioError::csv(path.display()))?;
    let mut cases: Vec<CaseRecord> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for (i, row) in reader.deserialize::<CaseRow>().enumerate() {
        let row = row.map_err(StudioError::csv(path.display()))?;
        let line = i + 2;
        let tile = TilePrediction { tile_id: row.tile_id, score: row.score };
        match index.get(&row.case_id) {
            Some(&k) => {
                let case = &mut cases[k];
                if case.slide_id != row.slide_id || case.label != row.label {
                    return Err(StudioError::Config(format!(
                        "{}:{line}: case {} changes slide or label",
                        path.display(),
                        row.case_id
                    )));
                }
                case.tiles.push(tile);
            }
            None => {
                index.insert(row.case_id.clone(), cases.len());
                cases.push(CaseRecord { case_id: row.case_id, slide_id: row.slide_id, label: row.label, tiles: vec![tile] });
            }
        }
    }
    for case in &cases {
        case.validate()?;
    }
    Ok(cases)
}

pub fn write_cases(path: &Path, cases: &[CaseRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for case in cases {
        for tile in &case.tiles {
            writer
                .serialize(CaseRow {
                    case_id: case.case_id.clone(),
                    slide_id: case.slide_id.clone(),
                    label: case.label,
                    tile_id: tile.tile_id.clone(),
                    score: tile.score,
                })
                .map_err(StudioError::csv(path.display()))?;
        }
    }
    let bytes = writer.into_inner().map_err(|e| StudioError::Invalid(e.to_string()))?;
    write_atomic(path, &bytes)
}

#[derive(Debug, Deserialize)]
struct AnswerRow {
    respondent: String,
    item_id: String,
    answer: u8,
}

/// Answers CSV grouped by respondent.
pub fn read_answers(path: &Path) -> Result<BTreeMap<String, BTreeMap<String, u8>>> {
    let mut reader = csv::Reader::from_path(path).map_err(StudioError::csv(path.display()))?;
    let mut out: BTreeMap<String, BTreeMap<String, u8>> = BTreeMap::new();
    for row in reader.deserialize::<AnswerRow>() {
        let row = row.map_err(StudioError::csv(path.display()))?;
        let sheet = out.entry(row.respondent.clone()).or_default();
        if sheet.insert(row.item_id.clone(), row.answer).is_some() {
            return Err(StudioError::Config(format!(
                "{}: respondent {} answered {} twice",
                path.display(),
                row.respondent,
                row.item_id
            )));
        }
    }
    Ok(out)
}

/// Plain-text feature matrix: one row per line, values separated by commas
/// or whitespace. Blank lines and `#` comments are skipped.
pub fn parse_feature_matrix(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|e| StudioError::Invalid(format!("line {}: {t:?}: {e}", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_feature_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(StudioError::io(path))?;
    parse_feature_matrix(&text).map_err(|e| StudioError::Invalid(format!("{}: {e}", path.display())))
}
