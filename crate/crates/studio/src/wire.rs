//! JSON bodies of the model-backend wire protocol.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use histoblend_core::backend::{BackendDescriptor, BackendKind, Head, Prediction};
use histoblend_core::imaging::{RgbImage, TileSpec};
use serde::{Deserialize, Serialize};

use crate::{Result, StudioError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescribeResponse {
    pub id: String,
    pub layers: usize,
    pub e_dim: usize,
    pub z_dim: usize,
    pub classes: Vec<String>,
    pub gen_px: u32,
    pub gen_um: f64,
    pub clf_px: u32,
    pub clf_um: f64,
}

impl From<&BackendDescriptor> for DescribeResponse {
    fn from(d: &BackendDescriptor) -> Self {
        Self {
            id: d.id.clone(),
            layers: d.layers,
            e_dim: d.e_dim,
            z_dim: d.z_dim,
            classes: d.classes.clone(),
            gen_px: d.generator_spec.px,
            gen_um: d.generator_spec.um,
            clf_px: d.classifier_spec.px,
            clf_um: d.classifier_spec.um,
        }
    }
}

impl DescribeResponse {
    /// Descriptor as seen by a client of a remote backend.
    pub fn into_descriptor(self) -> Result<BackendDescriptor> {
        let d = BackendDescriptor {
            id: self.id,
            kind: BackendKind::External,
            layers: self.layers,
            e_dim: self.e_dim,
            z_dim: self.z_dim,
            generator_spec: TileSpec::new(self.gen_um, self.gen_px)?,
            classifier_spec: TileSpec::new(self.clf_um, self.clf_px)?,
            classes: self.classes,
        };
        d.validate()?;
        Ok(d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub seed: u64,
    pub schedule: Vec<Vec<f64>>,
}

/// Raw row-major RGB8 pixels, base64 encoded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageBody {
    pub width: u32,
    pub height: u32,
    pub rgb8_b64: String,
}

impl From<&RgbImage> for ImageBody {
    fn from(img: &RgbImage) -> Self {
        Self { width: img.width(), height: img.height(), rgb8_b64: B64.encode(img.as_bytes()) }
    }
}

impl ImageBody {
    pub fn decode(&self) -> Result<RgbImage> {
        let bytes = B64
            .decode(&self.rgb8_b64)
            .map_err(|e| StudioError::Invalid(format!("rgb8_b64: {e}")))?;
        Ok(RgbImage::new(self.width, self.height, bytes)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub head: Head,
    pub values: Vec<f64>,
}

impl From<&Prediction> for ClassifyResponse {
    fn from(p: &Prediction) -> Self {
        Self { head: p.head, values: p.values.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_body_round_trip() {
        let img = RgbImage::from_fn(9, 8, |x, y| [x as u8, y as u8, 200]);
        let body = ImageBody::from(&img);
        assert_eq!(body.decode().unwrap(), img);
        let bad = ImageBody { width: 10, ..body };
        assert!(bad.decode().is_err());
    }

    #[test]
    fn describe_field_names() {
        let json = r#"{"id":"m","layers":12,"e_dim":16,"z_dim":64,"classes":["a","b"],"gen_px":512,"gen_um":400.0,"clf_px":299,"clf_um":302.0}"#;
        let d: DescribeResponse = serde_json::from_str(json).unwrap();
        let desc = d.into_descriptor().unwrap();
        assert_eq!(desc.kind, BackendKind::External);
        assert_eq!(desc.generator_spec.px, 512);
    }
}
