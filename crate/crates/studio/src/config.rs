//! Project configuration and the opened project context.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use histoblend_core::backend::{BackendDescriptor, ModelBackend, ToyBackend, ToyConfig};
use histoblend_core::concordance::StrengthThresholds;
use histoblend_core::features::ProjectionConfig;
use histoblend_core::imaging::{QcParams, TileSpec};
use histoblend_core::latent::ClassEmbedding;
use histoblend_core::workbench::Workbench;
use serde::{Deserialize, Serialize};

use crate::client::HttpBackend;
use crate::formats::read_embeddings;
use crate::fsutil::read_json;
use crate::{Result, StudioError};

pub type SharedBackend = Arc<dyn ModelBackend>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectConfig {
    /// `"toy"` or the base URL of a wire-protocol model server.
    pub backend: String,
    /// Bearer token for the model server. Never echoed by the API.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend_token: Option<String>,
    pub toy: ToyConfig,
    pub generator_spec: Option<TileSpec>,
    pub classifier_spec: Option<TileSpec>,
    /// Embeddings JSON, relative to the config file. Required for external
    /// backends; the toy backend falls back to its axis embeddings.
    pub embeddings: Option<PathBuf>,
    pub thresholds: StrengthThresholds,
    pub qc: QcParams,
    pub projection: ProjectionConfig,
    /// Job store directory, relative to the config file.
    pub store: PathBuf,
    /// Free-form training metadata carried for provenance.
    pub provenance: serde_json::Value,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        Self {
            backend: "toy".into(),
            backend_token: None,
            toy: ToyConfig::default(),
            generator_spec: None,
            classifier_spec: None,
            embeddings: None,
            thresholds: StrengthThresholds::default(),
            qc: QcParams::default(),
            projection: ProjectionConfig::default(),
            store: PathBuf::from("histoblend-store"),
            provenance: serde_json::Value::Object(Default::default()),
        }
    }
}

impl ProjectConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let config: Self = read_json(path)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: histoblend_core::Error| StudioError::Config(e.to_string());
        if let Some(s) = self.generator_spec {
            s.validate().map_err(cfg)?;
        }
        if let Some(s) = self.classifier_spec {
            s.validate().map_err(cfg)?;
        }
        self.thresholds.validate().map_err(cfg)?;
        self.qc.validate().map_err(cfg)?;
        if self.backend.is_empty() {
            return Err(StudioError::Config("backend must be \"toy\" or a URL".into()));
        }
        Ok(())
    }

    pub fn is_toy(&self) -> bool {
        self.backend == "toy"
    }
}

/// A validated config with its backend connected.
pub struct Project {
    config: ProjectConfig,
    base_dir: PathBuf,
    bench: Workbench<SharedBackend>,
}

impl Project {
    pub fn load(path: &Path) -> Result<Self> {
        let config = ProjectConfig::load(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::open(config, base)
    }

    /// Opens a config whose relative paths resolve against `base_dir`.
    pub fn open(config: ProjectConfig, base_dir: impl Into<PathBuf>) -> Result<Self> {
        config.validate()?;
        let base_dir = base_dir.into();
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base_dir.join(p) };
        let (backend, fallback): (SharedBackend, _) = if config.is_toy() {
            let mut toy = config.toy.clone();
            if let Some(s) = config.generator_spec {
                toy.generator_spec = s;
            }
            let toy = ToyBackend::new(toy)?;
            let emb = toy.embeddings();
            (Arc::new(toy), Some(emb))
        } else {
            let remote = HttpBackend::connect(&config.backend, config.backend_token.clone())?;
            if let Some(s) = config.generator_spec {
                let got = remote.describe().generator_spec;
                if got != s {
                    return Err(StudioError::Config(format!(
                        "generator_spec {s:?} does not match backend {got:?}"
                    )));
                }
            }
            (Arc::new(remote), None)
        };
        let embeddings = match (&config.embeddings, fallback) {
            (Some(p), _) => read_embeddings(&resolve(p))?,
            (None, Some(e)) => e,
            (None, None) => return Err(StudioError::Config("external backends need an embeddings file".into())),
        };
        let spec = config.classifier_spec.unwrap_or(backend.describe().classifier_spec);
        let bench = Workbench::with_classifier_spec(backend, embeddings, spec)?.with_thresholds(config.thresholds);
        Ok(Self { config, base_dir, bench })
    }

    /// The default toy project rooted at the working directory.
    pub fn toy() -> Result<Self> {
        Self::open(ProjectConfig::default(), ".")
    }

    pub fn config(&self) -> &ProjectConfig {
        &self.config
    }

    pub fn bench(&self) -> &Workbench<SharedBackend> {
        &self.bench
    }

    pub fn descriptor(&self) -> &BackendDescriptor {
        self.bench.descriptor()
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn store_dir(&self) -> PathBuf {
        self.resolve(&self.config.store)
    }

    pub fn view(&self) -> ProjectView {
        let d = self.descriptor();
        ProjectView {
            backend: if self.config.is_toy() { "toy".into() } else { self.config.backend.clone() },
            descriptor: d.clone(),
            generator_spec: d.generator_spec,
            classifier_spec: self.bench.classifier_spec(),
            embeddings: self.bench.embeddings().classes().to_vec(),
            thresholds: self.config.thresholds,
            qc: self.config.qc,
            projection: self.config.projection,
            provenance: self.config.provenance.clone(),
        }
    }
}

/// Config echo for API clients, without secrets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectView {
    pub backend: String,
    pub descriptor: BackendDescriptor,
    pub generator_spec: TileSpec,
    pub classifier_spec: TileSpec,
    pub embeddings: Vec<ClassEmbedding>,
    pub thresholds: StrengthThresholds,
    pub qc: QcParams,
    pub projection: ProjectionConfig,
    pub provenance: serde_json::Value,
}
