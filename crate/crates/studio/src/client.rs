//! `ModelBackend` over the HTTP wire protocol.

use std::time::Duration;

use histoblend_core::backend::{BackendDescriptor, ModelBackend, Prediction, Provenance, SyntheticImage};
use histoblend_core::digest::sha256_hex;
use histoblend_core::imaging::RgbImage;
use histoblend_core::latent::{ConditioningSchedule, Seed};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::wire::{ClassifyResponse, DescribeResponse, ErrorBody, GenerateRequest, ImageBody};
use crate::{Result, StudioError};

/// Blocking client. `reqwest` pools connections, so one instance may be
/// shared across threads. Do not call from inside an async runtime.
pub struct HttpBackend {
    base: String,
    token: Option<String>,
    client: reqwest::blocking::Client,
    descriptor: BackendDescriptor,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend").field("base", &self.base).field("id", &self.descriptor.id).finish()
    }
}

fn call<Req: Serialize, Resp: DeserializeOwned>(
    client: &reqwest::blocking::Client,
    base: &str,
    token: Option<&str>,
    path: &str,
    body: &Req,
) -> Result<Resp> {
    let url = format!("{base}{path}");
    let fail = |message: String| StudioError::Backend { endpoint: url.clone(), message };
    let mut req = client.post(&url).json(body);
    if let Some(t) = token {
        req = req.bearer_auth(t);
    }
    let resp = req.send().map_err(|e| fail(e.to_string()))?;
    let status = resp.status();
    let text = resp.text().map_err(|e| fail(e.to_string()))?;
    if !status.is_success() {
        let detail = serde_json::from_str::<ErrorBody>(&text).map(|b| b.error).unwrap_or(text);
        return Err(fail(format!("HTTP {status}: {detail}")));
    }
    serde_json::from_str(&text).map_err(|e| fail(format!("malformed response: {e}")))
}

impl HttpBackend {
    /// Performs the describe handshake.
    pub fn connect(base: &str, token: Option<String>) -> Result<Self> {
        let base = base.trim_end_matches('/').to_string();
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(300))
            .build()
            .map_err(|e| StudioError::Backend { endpoint: base.clone(), message: e.to_string() })?;
        let describe: DescribeResponse = call(&client, &base, token.as_deref(), "/v1/describe", &serde_json::json!({}))?;
        let descriptor = describe.into_descriptor().map_err(|e| StudioError::Backend {
            endpoint: format!("{base}/v1/describe"),
            message: e.to_string(),
        })?;
        Ok(Self { base, token, client, descriptor })
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn post<Req: Serialize, Resp: DeserializeOwned>(&self, path: &str, body: &Req) -> histoblend_core::Result<Resp> {
        call(&self.client, &self.base, self.token.as_deref(), path, body)
            .map_err(|e| histoblend_core::Error::Backend(e.to_string()))
    }
}

impl ModelBackend for HttpBackend {
    fn describe(&self) -> BackendDescriptor {
        self.descriptor.clone()
    }

    fn generate(&self, seed: Seed, schedule: &ConditioningSchedule) -> histoblend_core::Result<SyntheticImage> {
        self.descriptor.check_schedule(schedule)?;
        let req = GenerateRequest { seed: seed.0, schedule: schedule.layers().to_vec() };
        let body: ImageBody = self.post("/v1/generate", &req)?;
        let image = body.decode().map_err(|e| histoblend_core::Error::Backend(e.to_string()))?;
        let provenance = Provenance {
            seed,
            schedule_digest: sha256_hex(&schedule.canonical_bytes()),
            backend_id: self.descriptor.id.clone(),
        };
        let spec = self.descriptor.generator_spec;
        SyntheticImage::new(image, provenance, spec)
    }

    fn classify(&self, image: &RgbImage) -> histoblend_core::Result<Prediction> {
        let resp: ClassifyResponse = self.post("/v1/classify", &ImageBody::from(image))?;
        let p = Prediction { head: resp.head, values: resp.values };
        p.validate()?;
        Ok(p)
    }
}
