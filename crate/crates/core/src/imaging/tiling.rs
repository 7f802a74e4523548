use alloc::format;
use alloc::vec::Vec;

use super::{RgbImage, TileSpec};
use crate::{Error, Result};

/// Simple polygon in slide pixel coordinates. A repeated closing vertex is
/// dropped on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<[f64; 2]>,
}

impl Polygon {
    pub fn new(mut vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() >= 2 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::invalid("polygon needs at least three distinct vertices"));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("polygon has non-finite coordinates"));
        }
        let poly = Self { vertices };
        if let Some((i, j)) = poly.first_self_intersection() {
            return Err(Error::invalid(format!("polygon edges {i} and {j} intersect")));
        }
        Ok(poly)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    fn edge(&self, i: usize) -> ([f64; 2], [f64; 2]) {
        (self.vertices[i], self.vertices[(i + 1) % self.vertices.len()])
    }

    fn first_self_intersection(&self) -> Option<(usize, usize)> {
        let n = self.vertices.len();
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (a, b) = self.edge(i);
                let (c, d) = self.edge(j);
                if adjacent {
                    // Adjacent edges share a vertex; they only conflict when
                    // they fold back onto each other.
                    if collinear_overlap(a, b, c, d) {
                        return Some((i, j));
                    }
                } else if segments_intersect(a, b, c, d) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Even-odd ray casting.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let mut inside = false;
        let n = self.vertices.len();
        let mut j = n - 1;
        for i in 0..n {
            let [xi, yi] = self.vertices[i];
            let [xj, yj] = self.vertices[j];
            if (yi > p[1]) != (yj > p[1]) && p[0] < (xj - xi) * (p[1] - yi) / (yj - yi) + xi {
                inside = !inside;
            }
            j = i;
        }
        inside
    }
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

fn collinear_overlap(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    if orient(a, b, c) != 0.0 || orient(a, b, d) != 0.0 {
        return false;
    }
    // Shared vertex is fine; anything beyond a single point is a fold.
    let dot = |u: [f64; 2], v: [f64; 2]| u[0] * v[0] + u[1] * v[1];
    let sub = |u: [f64; 2], v: [f64; 2]| [u[0] - v[0], u[1] - v[1]];
    if b == c {
        dot(sub(a, b), sub(d, c)) > 0.0
    } else if d == a {
        dot(sub(b, a), sub(c, d)) > 0.0
    } else {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TileOrigin {
    pub x: u32,
    pub y: u32,
    /// Tile side in slide pixels.
    pub span: u32,
}

/// Non-overlapping tile grid, stride `floor(spec.um / mpp)` slide pixels,
/// row-major order. With ROIs, only tiles whose centre lies in some polygon
/// are kept.
pub fn tile_grid(width: u32, height: u32, mpp: f64, roi: &[Polygon], spec: TileSpec) -> Result<Vec<TileOrigin>> {
    if !(mpp.is_finite() && mpp > 0.0) {
        return Err(Error::invalid(format!("mpp must be positive, got {mpp}")));
    }
    spec.validate()?;
    let span = libm::floor(spec.um / mpp);
    if span < 1.0 || span > width as f64 || span > height as f64 {
        return Ok(Vec::new());
    }
    let span = span as u32;
    let mut out = Vec::new();
    let mut y = 0u32;
    while y as u64 + span as u64 <= height as u64 {
        let mut x = 0u32;
        while x as u64 + span as u64 <= width as u64 {
            let center = [x as f64 + span as f64 / 2.0, y as f64 + span as f64 / 2.0];
            if roi.is_empty() || roi.iter().any(|p| p.contains(center)) {
                out.push(TileOrigin { x, y, span });
            }
            x += span;
        }
        y += span;
    }
    Ok(out)
}

/// A flat slide raster with its resolution and optional annotated regions.
#[derive(Debug, Clone)]
pub struct SlideRaster {
    pub image: RgbImage,
    pub mpp: f64,
    pub roi: Vec<Polygon>,
}

impl SlideRaster {
    pub fn new(image: RgbImage, mpp: f64, roi: Vec<Polygon>) -> Result<Self> {
        if !(mpp.is_finite() && mpp > 0.0) {
            return Err(Error::invalid(format!("mpp must be positive, got {mpp}")));
        }
        Ok(Self { image, mpp, roi })
    }

    pub fn tile_grid(&self, spec: TileSpec) -> Result<Vec<TileOrigin>> {
        tile_grid(self.image.width(), self.image.height(), self.mpp, &self.roi, spec)
    }
}
