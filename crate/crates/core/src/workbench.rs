//! Backend + embeddings + thresholds: the context every experiment runs in.

use alloc::format;
use alloc::vec::Vec;

use crate::backend::{BackendDescriptor, ModelBackend, Prediction, SyntheticImage};
use crate::concordance::StrengthThresholds;
use crate::imaging::{center_crop_resize, RgbImage, TileSpec};
use crate::latent::{blend_embeddings, uniform_schedule, BlendWeight, ConditioningSchedule, EmbeddingSet, Seed};
use crate::{Error, Result};

/// One generation passed through the classifier.
#[derive(Debug, Clone)]
pub struct Rendered {
    pub synthetic: SyntheticImage,
    /// The generated raster after magnification matching.
    pub classifier_input: RgbImage,
    pub prediction: Prediction,
}

pub struct Workbench<B> {
    backend: B,
    descriptor: BackendDescriptor,
    embeddings: EmbeddingSet,
    classifier_spec: TileSpec,
    thresholds: StrengthThresholds,
}

impl<B: ModelBackend> Workbench<B> {
    /// Uses the classifier input spec reported by the backend.
    pub fn new(backend: B, embeddings: EmbeddingSet) -> Result<Self> {
        let spec = backend.describe().classifier_spec;
        Self::with_classifier_spec(backend, embeddings, spec)
    }

    pub fn with_classifier_spec(backend: B, embeddings: EmbeddingSet, classifier_spec: TileSpec) -> Result<Self> {
        let descriptor = backend.describe();
        descriptor.validate()?;
        classifier_spec.validate()?;
        if embeddings.e_dim() != descriptor.e_dim {
            return Err(Error::invalid(format!(
                "embeddings have dimension {}, backend expects {}",
                embeddings.e_dim(),
                descriptor.e_dim
            )));
        }
        embeddings.pair()?;
        Ok(Self { backend, descriptor, embeddings, classifier_spec, thresholds: StrengthThresholds::default() })
    }

    pub fn with_thresholds(mut self, thresholds: StrengthThresholds) -> Self {
        self.thresholds = thresholds;
        self
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    pub fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    pub fn embeddings(&self) -> &EmbeddingSet {
        &self.embeddings
    }

    pub fn classifier_spec(&self) -> TileSpec {
        self.classifier_spec
    }

    pub fn thresholds(&self) -> StrengthThresholds {
        self.thresholds
    }

    pub fn layers(&self) -> usize {
        self.descriptor.layers
    }

    /// Embedding vector of class 0 or 1.
    pub fn class_vector(&self, class: usize) -> Result<&[f64]> {
        self.embeddings
            .get(class)
            .map(|c| c.vector.as_slice())
            .ok_or_else(|| Error::invalid(format!("no embedding for class {class}")))
    }

    pub fn pure_schedule(&self, class: usize) -> Result<ConditioningSchedule> {
        uniform_schedule(self.class_vector(class)?, self.layers())
    }

    pub fn blend_schedule(&self, w: BlendWeight) -> Result<ConditioningSchedule> {
        let (a, b) = self.embeddings.pair()?;
        uniform_schedule(&blend_embeddings(a, b, w)?, self.layers())
    }

    /// Generate, match magnification to the classifier, classify.
    pub fn render(&self, seed: Seed, schedule: &ConditioningSchedule) -> Result<Rendered> {
        let synthetic = self.backend.generate(seed, schedule)?;
        let src = if synthetic.image.width() == synthetic.tile_spec.px {
            synthetic.tile_spec
        } else {
            TileSpec { um: synthetic.tile_spec.um, px: synthetic.image.width() }
        };
        let classifier_input = center_crop_resize(&synthetic.image, src, self.classifier_spec)?;
        let prediction = self.backend.classify(&classifier_input)?;
        prediction.validate()?;
        Ok(Rendered { synthetic, classifier_input, prediction })
    }

    /// Seeds rendered in order; convenience for batch callers.
    pub fn render_many(&self, seeds: impl IntoIterator<Item = Seed>, schedule: &ConditioningSchedule) -> Result<Vec<Rendered>> {
        seeds.into_iter().map(|s| self.render(s, schedule).map_err(|e| e.with_seed(s.0))).collect()
    }
}
