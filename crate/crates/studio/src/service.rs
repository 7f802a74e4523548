//! Studio HTTP API.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use histoblend_core::backend::{Head, Prediction};
use histoblend_core::blendlab::{blend_sequence, fig3_grid};
use histoblend_core::concordance::{predicted_class, strength, Bucket, Strength};
use histoblend_core::digest::sha256_hex;
use histoblend_core::latent::{BlendWeight, ConditioningSchedule, Seed};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::config::{Project, ProjectView};
use crate::formats::{encode_png, read_concordance, SummaryFile};
use crate::fsutil::read_json;
use crate::jobs::{JobKind, JobRecord, JobSpec, JobStore, MAX_BLEND_STEPS};
use crate::runner::{CONCORDANCE_FILE, SUMMARY_FILE};
use crate::wire::ErrorBody;
use crate::{Result, StudioError};

#[derive(Clone)]
pub struct AppState {
    project: Arc<Project>,
    jobs: Arc<JobStore>,
    context: Arc<str>,
}

impl AppState {
    pub fn new(project: Arc<Project>, jobs: Arc<JobStore>) -> Self {
        let context = job_context(&project).into();
        Self { project, jobs, context }
    }

    pub fn jobs(&self) -> &JobStore {
        &self.jobs
    }
}

/// Everything besides a job's own parameters that its outputs depend on.
pub fn job_context(project: &Project) -> String {
    let v = project.view();
    serde_json::json!({
        "backend": v.descriptor.id,
        "classifier_spec": v.classifier_spec,
        "embeddings": v.embeddings,
        "thresholds": v.thresholds,
        "projection": v.projection,
    })
    .to_string()
}

pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl ToString) -> Self {
        Self { status: StatusCode::BAD_REQUEST, message: message.to_string() }
    }
}

impl From<StudioError> for ApiError {
    fn from(e: StudioError) -> Self {
        let status = match &e {
            StudioError::Core(histoblend_core::Error::Backend(_)) | StudioError::Backend { .. } => StatusCode::BAD_GATEWAY,
            StudioError::Core(histoblend_core::Error::Seed { source, .. })
                if matches!(**source, histoblend_core::Error::Backend(_)) =>
            {
                StatusCode::BAD_GATEWAY
            }
            StudioError::Core(_) | StudioError::Invalid(_) => StatusCode::BAD_REQUEST,
            StudioError::NotFound(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self { status, message: e.to_string() }
    }
}

impl From<histoblend_core::Error> for ApiError {
    fn from(e: histoblend_core::Error) -> Self {
        StudioError::from(e).into()
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorBody { error: self.message })).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

fn body<T>(b: std::result::Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    b.map(|Json(v)| v).map_err(|e| ApiError::bad_request(e.body_text()))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError {
        status: StatusCode::INTERNAL_SERVER_ERROR,
        message: e.to_string(),
    })?
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionView {
    pub head: Head,
    pub values: Vec<f64>,
    pub pred_class: Option<usize>,
    pub strength: Strength,
}

impl PredictionView {
    fn new(p: &Prediction, project: &Project) -> Self {
        Self {
            head: p.head,
            values: p.values.clone(),
            pred_class: predicted_class(p),
            strength: strength(p, &project.bench().thresholds()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateRequest {
    pub seed: u64,
    #[serde(default)]
    pub w: Option<f64>,
    #[serde(default)]
    pub schedule: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    pub png_b64: String,
    pub digest: String,
    pub schedule_digest: String,
    pub prediction: PredictionView,
}

struct Generated {
    png: Vec<u8>,
    response: GenerateResponse,
}

fn generate_inner(project: &Project, req: GenerateRequest) -> ApiResult<Generated> {
    let bench = project.bench();
    let schedule = match (req.w, req.schedule) {
        (Some(w), None) => bench.blend_schedule(BlendWeight::new(w)?)?,
        (None, Some(layers)) => {
            let s = ConditioningSchedule::from_layers(layers)?;
            bench.descriptor().check_schedule(&s)?;
            s
        }
        (Some(_), Some(_)) => return Err(ApiError::bad_request("give either w or schedule, not both")),
        (None, None) => return Err(ApiError::bad_request("give w or schedule")),
    };
    let r = bench.render(Seed(req.seed), &schedule)?;
    let png = encode_png(&r.synthetic.image)?;
    let response = GenerateResponse {
        seed: req.seed,
        width: r.synthetic.image.width(),
        height: r.synthetic.image.height(),
        png_b64: B64.encode(&png),
        digest: sha256_hex(r.synthetic.image.as_bytes()),
        schedule_digest: r.synthetic.provenance.schedule_digest.clone(),
        prediction: PredictionView::new(&r.prediction, project),
    };
    Ok(Generated { png, response })
}

async fn project_view(State(s): State<AppState>) -> Json<ProjectView> {
    Json(s.project.view())
}

async fn generate(
    State(s): State<AppState>,
    b: std::result::Result<Json<GenerateRequest>, JsonRejection>,
) -> ApiResult<Json<GenerateResponse>> {
    let req = body(b)?;
    let g = blocking(move || generate_inner(&s.project, req)).await?;
    Ok(Json(g.response))
}

/// Same as `/api/generate` but returns the PNG bytes; the prediction goes
/// in the `x-prediction` header.
async fn generate_raw(
    State(s): State<AppState>,
    b: std::result::Result<Json<GenerateRequest>, JsonRejection>,
) -> ApiResult<Response> {
    let req = body(b)?;
    let g = blocking(move || generate_inner(&s.project, req)).await?;
    let pred = serde_json::to_string(&g.response.prediction).unwrap_or_default();
    let mut resp = g.png.into_response();
    let headers = resp.headers_mut();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("image/png"));
    if let Ok(v) = HeaderValue::from_str(&pred) {
        headers.insert("x-prediction", v);
    }
    Ok(resp)
}

#[derive(Debug, Clone, Deserialize)]
pub struct BlendRequest {
    pub seed: u64,
    pub steps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlendStepView {
    pub w: f64,
    pub png_b64: String,
    pub digest: String,
    pub pred: PredictionView,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlendResponse {
    pub seed: u64,
    pub steps: Vec<BlendStepView>,
}

async fn blend(
    State(s): State<AppState>,
    b: std::result::Result<Json<BlendRequest>, JsonRejection>,
) -> ApiResult<Json<BlendResponse>> {
    let req = body(b)?;
    if req.steps > MAX_BLEND_STEPS {
        return Err(ApiError::bad_request(format!("at most {MAX_BLEND_STEPS} steps")));
    }
    let out = blocking(move || {
        let trace = blend_sequence(s.project.bench(), Seed(req.seed), req.steps)?;
        let steps = trace
            .steps
            .iter()
            .map(|st| {
                Ok(BlendStepView {
                    w: st.w.get(),
                    png_b64: B64.encode(encode_png(&st.image)?),
                    digest: st.digest.clone(),
                    pred: PredictionView::new(&st.prediction, &s.project),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BlendResponse { seed: req.seed, steps })
    })
    .await?;
    Ok(Json(out))
}

#[derive(Debug, Clone, Deserialize)]
pub struct SeedRequest {
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellView {
    pub label: String,
    pub layers: Vec<usize>,
    pub png_b64: String,
    pub pred: PredictionView,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fig3Response {
    pub seed: u64,
    pub cells: Vec<CellView>,
}

async fn fig3(
    State(s): State<AppState>,
    b: std::result::Result<Json<SeedRequest>, JsonRejection>,
) -> ApiResult<Json<Fig3Response>> {
    let req = body(b)?;
    let out = blocking(move || {
        let cells = fig3_grid(s.project.bench(), Seed(req.seed))?
            .iter()
            .map(|c| {
                Ok(CellView {
                    label: c.label.clone(),
                    layers: c.layer_classes.clone(),
                    png_b64: B64.encode(encode_png(&c.image)?),
                    pred: PredictionView::new(&c.prediction, &s.project),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Fig3Response { seed: req.seed, cells })
    })
    .await?;
    Ok(Json(out))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub job_id: String,
    pub fresh: bool,
    pub job: JobRecord,
}

fn submit(s: &AppState, spec: JobSpec) -> ApiResult<(StatusCode, Json<SubmitResponse>)> {
    let sub = s.jobs.submit(spec, &s.context)?;
    if sub.fresh {
        let (project, jobs, id) = (s.project.clone(), s.jobs.clone(), sub.record.id.clone());
        std::thread::Builder::new()
            .name(format!("job-{id}"))
            .spawn(move || {
                if let Err(e) = jobs.execute(&project, &id) {
                    log::error!("job {id}: {e}");
                }
            })
            .map_err(|e| ApiError { status: StatusCode::INTERNAL_SERVER_ERROR, message: e.to_string() })?;
    }
    let resp = SubmitResponse { job_id: sub.record.id.clone(), fresh: sub.fresh, job: sub.record };
    Ok((StatusCode::ACCEPTED, Json(resp)))
}

#[derive(Debug, Clone, Deserialize)]
pub struct ScreenRequest {
    pub from: u64,
    /// Inclusive.
    pub to: u64,
}

async fn screen(
    State(s): State<AppState>,
    b: std::result::Result<Json<ScreenRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<SubmitResponse>)> {
    let req = body(b)?;
    submit(&s, JobSpec::Screen { from: req.from, to: req.to })
}

async fn submit_job(
    State(s): State<AppState>,
    b: std::result::Result<Json<JobSpec>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<SubmitResponse>)> {
    let spec = body(b)?;
    submit(&s, spec)
}

async fn list_jobs(State(s): State<AppState>) -> Json<Vec<JobRecord>> {
    Json(s.jobs.list())
}

async fn get_job(State(s): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<JobRecord>> {
    s.jobs
        .get(&id)
        .map(Json)
        .ok_or_else(|| StudioError::NotFound(format!("job {id}")).into())
}

#[derive(Debug, Clone, Deserialize)]
pub struct ScreenQuery {
    #[serde(default)]
    pub bucket: Option<String>,
    #[serde(default)]
    pub limit: Option<usize>,
    #[serde(default)]
    pub job: Option<String>,
}

fn screen_job(s: &AppState, job: Option<&str>) -> ApiResult<JobRecord> {
    let rec = match job {
        Some(id) => s.jobs.get(id).ok_or_else(|| StudioError::NotFound(format!("job {id}")))?,
        None => s
            .jobs
            .latest_done(JobKind::Screen)
            .ok_or_else(|| StudioError::NotFound("no finished screen job".into()))?,
    };
    if rec.kind != JobKind::Screen || rec.status != crate::jobs::JobStatus::Done {
        return Err(ApiError::bad_request(format!("job {} is not a finished screen", rec.id)));
    }
    Ok(rec)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedsResponse {
    pub job_id: String,
    pub bucket: Option<Bucket>,
    pub seeds: Vec<u64>,
}

async fn seeds(State(s): State<AppState>, Query(q): Query<ScreenQuery>) -> ApiResult<Json<SeedsResponse>> {
    let bucket = match q.bucket.as_deref() {
        None | Some("all") => None,
        Some(b) => Some(Bucket::parse(b).ok_or_else(|| ApiError::bad_request(format!("unknown bucket {b:?}")))?),
    };
    let out = blocking(move || {
        let rec = screen_job(&s, q.job.as_deref())?;
        let lines = read_concordance(&s.jobs.job_dir(&rec.id).join(CONCORDANCE_FILE))?;
        let seeds = lines
            .iter()
            .filter(|l| bucket.is_none_or(|b| l.bucket == b))
            .map(|l| l.seed)
            .take(q.limit.unwrap_or(usize::MAX))
            .collect();
        Ok(SeedsResponse { job_id: rec.id, bucket, seeds })
    })
    .await?;
    Ok(Json(out))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryResponse {
    pub job_id: String,
    #[serde(flatten)]
    pub summary: SummaryFile,
}

async fn summary(State(s): State<AppState>, Query(q): Query<ScreenQuery>) -> ApiResult<Json<SummaryResponse>> {
    let rec = screen_job(&s, q.job.as_deref())?;
    let summary: SummaryFile = read_json(&s.jobs.job_dir(&rec.id).join(SUMMARY_FILE))?;
    Ok(Json(SummaryResponse { job_id: rec.id, summary }))
}

pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/project", get(project_view))
        .route("/api/generate", post(generate))
        .route("/api/generate/raw", post(generate_raw))
        .route("/api/blend", post(blend))
        .route("/api/fig3", post(fig3))
        .route("/api/screen", post(screen))
        .route("/api/jobs", get(list_jobs).post(submit_job))
        .route("/api/jobs/:id", get(get_job))
        .route("/api/seeds", get(seeds))
        .route("/api/concordance/summary", get(summary))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Opens the job store and serves until interrupted.
pub fn serve(project: Project, addr: SocketAddr, static_dir: Option<PathBuf>) -> Result<()> {
    let jobs = Arc::new(JobStore::open(project.store_dir())?);
    let state = AppState::new(Arc::new(project), jobs);
    crate::server::serve_blocking(router(state, static_dir), addr)
}
