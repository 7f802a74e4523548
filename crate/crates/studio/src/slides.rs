//! Slide tiling: Otsu tissue detection, grid extraction, QC and archive
//! writing.

use std::io::Write;
use std::path::{Path, PathBuf};

use histoblend_core::imaging::{
    crop, luminance_histogram, otsu_threshold, qc_tile, resize_bilinear, tissue_fraction, QcParams, QcReport,
    SlideRaster, TileSpec,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::formats::{read_png, read_roi, write_png};
use crate::{Result, StudioError};

/// Thumbnail stride for the slide-level Otsu histogram.
pub const THUMBNAIL_STRIDE: u32 = 16;

/// One slide of a tiling manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlideEntry {
    pub slide_id: String,
    pub path: PathBuf,
    pub mpp: f64,
    #[serde(default)]
    pub roi: Option<PathBuf>,
}

impl SlideEntry {
    pub fn load(&self) -> Result<SlideRaster> {
        let image = read_png(&self.path)?;
        let roi = match &self.roi {
            Some(p) => read_roi(p)?,
            None => Vec::new(),
        };
        Ok(SlideRaster::new(image, self.mpp, roi)?)
    }
}

/// Slide manifest CSV: `slide_id,path,mpp,roi` with `roi` optional and
/// relative paths resolved against the manifest's directory.
pub fn read_slide_manifest(path: &Path) -> Result<Vec<SlideEntry>> {
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut reader = csv::Reader::from_path(path).map_err(StudioError::csv(path.display()))?;
    reader
        .deserialize::<SlideEntry>()
        .map(|row| {
            let mut e = row.map_err(StudioError::csv(path.display()))?;
            e.path = base.join(&e.path);
            e.roi = e.roi.filter(|p| !p.as_os_str().is_empty()).map(|p| base.join(p));
            Ok(e)
        })
        .collect()
}

/// One line of the tile archive's JSONL index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileIndexLine {
    pub slide_id: String,
    pub x: u32,
    pub y: u32,
    pub span: u32,
    /// PNG file name, present for accepted tiles.
    pub file: Option<String>,
    #[serde(flatten)]
    pub qc: QcReport,
}

pub fn tile_file_name(slide_id: &str, x: u32, y: u32) -> String {
    format!("{slide_id}_{x}_{y}.png")
}

/// Extracts, QCs and writes one slide's tiles. Accepted tiles are written
/// as PNGs in `out_dir`; every tile gets an index line, in grid order.
pub fn tile_slide(
    slide_id: &str,
    slide: &SlideRaster,
    spec: TileSpec,
    params: &QcParams,
    out_dir: &Path,
) -> Result<Vec<TileIndexLine>> {
    let origins = slide.tile_grid(spec)?;
    let threshold = match otsu_threshold(&luminance_histogram(&slide.image, THUMBNAIL_STRIDE)) {
        Ok(t) => Some(t),
        Err(e) => {
            log::warn!("slide {slide_id}: {e}; no tissue detected");
            None
        }
    };
    origins
        .par_iter()
        .map(|o| {
            let raw = crop(&slide.image, o.x, o.y, o.span, o.span)?;
            let tile = if o.span == spec.px { raw } else { resize_bilinear(&raw, spec.px, spec.px)? };
            let tissue = threshold.map_or(0.0, |t| tissue_fraction(&tile, t));
            let name = tile_file_name(slide_id, o.x, o.y);
            let tile_id = name.trim_end_matches(".png").to_string();
            let qc = qc_tile(tile_id, &tile, params, tissue)?;
            let file = if qc.accepted {
                write_png(&out_dir.join(&name), &tile)?;
                Some(name)
            } else {
                None
            };
            Ok(TileIndexLine { slide_id: slide_id.to_string(), x: o.x, y: o.y, span: o.span, file, qc })
        })
        .collect()
}

/// Tiles every slide and writes `index.jsonl` next to the tiles.
pub fn tile_slides(entries: &[SlideEntry], spec: TileSpec, params: &QcParams, out_dir: &Path) -> Result<Vec<TileIndexLine>> {
    std::fs::create_dir_all(out_dir).map_err(StudioError::io(out_dir))?;
    let mut all = Vec::new();
    for e in entries {
        let slide = e.load()?;
        let lines = tile_slide(&e.slide_id, &slide, spec, params, out_dir)?;
        log::info!(
            "slide {}: {} tiles, {} accepted",
            e.slide_id,
            lines.len(),
            lines.iter().filter(|l| l.qc.accepted).count()
        );
        all.extend(lines);
    }
    let mut buf = Vec::new();
    for line in &all {
        serde_json::to_writer(&mut buf, line).map_err(StudioError::json("tile index"))?;
        buf.write_all(b"\n").map_err(StudioError::io("tile index"))?;
    }
    crate::fsutil::write_atomic(&out_dir.join("index.jsonl"), &buf)?;
    Ok(all)
}
