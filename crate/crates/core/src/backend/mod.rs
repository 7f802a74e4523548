//! Generator/classifier contract and the closed-form toy backend.
//!
//! Real models attach through the HTTP wire protocol implemented in the
//! `histoblend` crate; everything downstream only sees [`ModelBackend`].

mod toy;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::imaging::{RgbImage, TileSpec, MIN_TILE_PX};
use crate::latent::{ConditioningSchedule, Seed};
use crate::{Error, Result};

pub use toy::{ToyBackend, ToyConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "lowercase"))]
pub enum Head {
    Categorical,
    Continuous,
}

/// Classifier output. Categorical: post-softmax scores per class.
/// Continuous: one score, negative meaning the first class.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Prediction {
    pub head: Head,
    pub values: Vec<f64>,
}

impl Prediction {
    pub fn categorical(values: Vec<f64>) -> Result<Self> {
        let p = Self { head: Head::Categorical, values };
        p.validate()?;
        Ok(p)
    }

    pub fn continuous(score: f64) -> Result<Self> {
        let p = Self { head: Head::Continuous, values: alloc::vec![score] };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self.head {
            Head::Categorical => {
                if self.values.len() < 2 {
                    return Err(Error::invalid("categorical prediction needs at least two scores"));
                }
                if self.values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::invalid(format!("scores {:?} outside [0, 1]", self.values)));
                }
                let sum: f64 = self.values.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::invalid(format!("scores sum to {sum}, not 1")));
                }
            }
            Head::Continuous => {
                if self.values.len() != 1 || !self.values[0].is_finite() {
                    return Err(Error::invalid("continuous prediction needs one finite score"));
                }
            }
        }
        Ok(())
    }

    /// Probability-like evidence for the second class: `p[1]` for
    /// categorical heads, the raw score for continuous heads.
    pub fn second_class_evidence(&self) -> f64 {
        match self.head {
            Head::Categorical => self.values[1],
            Head::Continuous => self.values[0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Provenance {
    pub seed: Seed,
    pub schedule_digest: String,
    pub backend_id: String,
}

/// A generated raster with the physical width it represents.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticImage {
    pub image: RgbImage,
    pub provenance: Provenance,
    pub tile_spec: TileSpec,
}

impl SyntheticImage {
    pub fn new(image: RgbImage, provenance: Provenance, tile_spec: TileSpec) -> Result<Self> {
        if image.width() < MIN_TILE_PX || image.height() < MIN_TILE_PX {
            return Err(Error::invalid(format!(
                "synthetic image {}x{} is below {MIN_TILE_PX} px",
                image.width(),
                image.height()
            )));
        }
        Ok(Self { image, provenance, tile_spec })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "lowercase"))]
pub enum BackendKind {
    Toy,
    External,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BackendDescriptor {
    pub id: String,
    pub kind: BackendKind,
    pub layers: usize,
    pub e_dim: usize,
    pub z_dim: usize,
    pub generator_spec: TileSpec,
    pub classifier_spec: TileSpec,
    pub classes: Vec<String>,
}

impl BackendDescriptor {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.e_dim == 0 || self.z_dim == 0 {
            return Err(Error::invalid("backend dimensions must be positive"));
        }
        if self.classes.len() != 2 {
            return Err(Error::invalid(format!(
                "workbench supports exactly two classes, backend reports {}",
                self.classes.len()
            )));
        }
        self.generator_spec.validate()?;
        self.classifier_spec.validate()
    }

    pub fn check_schedule(&self, schedule: &ConditioningSchedule) -> Result<()> {
        if schedule.len() != self.layers {
            return Err(Error::invalid(format!(
                "schedule has {} layers, backend expects {}",
                schedule.len(),
                self.layers
            )));
        }
        if schedule.e_dim() != self.e_dim {
            return Err(Error::invalid(format!(
                "schedule vectors have dimension {}, backend expects {}",
                schedule.e_dim(),
                self.e_dim
            )));
        }
        Ok(())
    }
}

/// A conditional generator paired with the classifier it explains.
pub trait ModelBackend: Send + Sync {
    fn describe(&self) -> BackendDescriptor;

    fn generate(&self, seed: Seed, schedule: &ConditioningSchedule) -> Result<SyntheticImage>;

    /// The image must already be at the classifier's input raster size.
    fn classify(&self, image: &RgbImage) -> Result<Prediction>;
}

impl<B: ModelBackend + ?Sized> ModelBackend for &B {
    fn describe(&self) -> BackendDescriptor {
        (**self).describe()
    }

    fn generate(&self, seed: Seed, schedule: &ConditioningSchedule) -> Result<SyntheticImage> {
        (**self).generate(seed, schedule)
    }

    fn classify(&self, image: &RgbImage) -> Result<Prediction> {
        (**self).classify(image)
    }
}

impl<B: ModelBackend + ?Sized> ModelBackend for alloc::boxed::Box<B> {
    fn describe(&self) -> BackendDescriptor {
        (**self).describe()
    }

    fn generate(&self, seed: Seed, schedule: &ConditioningSchedule) -> Result<SyntheticImage> {
        (**self).generate(seed, schedule)
    }

    fn classify(&self, image: &RgbImage) -> Result<Prediction> {
        (**self).classify(image)
    }
}

impl<B: ModelBackend + ?Sized> ModelBackend for alloc::sync::Arc<B> {
    fn describe(&self) -> BackendDescriptor {
        (**self).describe()
    }

    fn generate(&self, seed: Seed, schedule: &ConditioningSchedule) -> Result<SyntheticImage> {
        (**self).generate(seed, schedule)
    }

    fn classify(&self, image: &RgbImage) -> Result<Prediction> {
        (**self).classify(image)
    }
}
