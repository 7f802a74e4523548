//! Durable job store: an append-only JSONL ledger plus one output
//! directory per job. Outputs are staged in a temporary directory and
//! renamed into place when the job finishes.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use histoblend_core::digest::sha256_hex_parts;
use serde::{Deserialize, Serialize};

use crate::config::Project;
use crate::fsutil::publish_dir;
use crate::runner::{self, FidSource};
use crate::{Result, StudioError};

pub const LEDGER_FILE: &str = "jobs.jsonl";
pub const MAX_BLEND_STEPS: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobKind {
    Screen,
    Blend,
    Fig3,
    Curriculum,
    Fid,
}

impl JobKind {
    pub fn name(self) -> &'static str {
        match self {
            JobKind::Screen => "screen",
            JobKind::Blend => "blend",
            JobKind::Fig3 => "fig3",
            JobKind::Curriculum => "curriculum",
            JobKind::Fid => "fid",
        }
    }
}

/// Parameters of a job. Screen ranges are inclusive of `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum JobSpec {
    Screen { from: u64, to: u64 },
    Blend { seed: u64, steps: usize },
    Fig3 { seed: u64 },
    Curriculum {
        cases: PathBuf,
        rng_seed: u64,
        #[serde(default)]
        tiles: Option<PathBuf>,
    },
    Fid { source: FidSource },
}

impl JobSpec {
    pub fn kind(&self) -> JobKind {
        match self {
            JobSpec::Screen { .. } => JobKind::Screen,
            JobSpec::Blend { .. } => JobKind::Blend,
            JobSpec::Fig3 { .. } => JobKind::Fig3,
            JobSpec::Curriculum { .. } => JobKind::Curriculum,
            JobSpec::Fid { .. } => JobKind::Fid,
        }
    }

    /// Cheap checks run before a job is queued.
    pub fn validate(&self) -> Result<()> {
        let exists = |p: &Path| {
            if p.exists() {
                Ok(())
            } else {
                Err(StudioError::Invalid(format!("{} does not exist", p.display())))
            }
        };
        match self {
            JobSpec::Screen { from, to } if from > to => {
                Err(StudioError::Invalid(format!("screen range {from}..={to} is empty")))
            }
            JobSpec::Screen { to, .. } if *to == u64::MAX => Err(StudioError::Invalid("screen range end overflows".into())),
            JobSpec::Blend { steps, .. } if !(2..=MAX_BLEND_STEPS).contains(steps) => Err(StudioError::Invalid(
                format!("blend steps must be in 2..={MAX_BLEND_STEPS}, got {steps}"),
            )),
            JobSpec::Curriculum { cases, tiles, .. } => {
                exists(cases)?;
                tiles.as_deref().map_or(Ok(()), exists)
            }
            JobSpec::Fid { source: FidSource::Features { a, b } | FidSource::Images { a, b } } => {
                exists(a)?;
                exists(b)
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub done: u64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub id: String,
    pub seq: u64,
    pub kind: JobKind,
    pub status: JobStatus,
    pub inputs_digest: String,
    pub spec: JobSpec,
    /// Output files, relative to the job directory.
    pub outputs: Vec<String>,
    #[serde(default)]
    pub message: Option<String>,
    #[serde(default)]
    pub progress: Option<Progress>,
    pub submitted_at: u64,
}

pub struct Submission {
    pub record: JobRecord,
    /// False when an identical job already exists.
    pub fresh: bool,
}

pub struct JobStore {
    root: PathBuf,
    ledger: Mutex<fs::File>,
    jobs: RwLock<BTreeMap<String, JobRecord>>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl JobStore {
    /// Opens or creates a store. Jobs left queued or running by a previous
    /// process are marked failed.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(root.join("jobs")).map_err(StudioError::io(&root))?;
        let path = root.join(LEDGER_FILE);
        let mut jobs = BTreeMap::new();
        if path.exists() {
            let file = fs::File::open(&path).map_err(StudioError::io(&path))?;
            for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
                let line = line.map_err(StudioError::io(&path))?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<JobRecord>(&line) {
                    Ok(r) => {
                        jobs.insert(r.id.clone(), r);
                    }
                    Err(e) => log::warn!("{}:{}: skipping unreadable ledger line: {e}", path.display(), i + 1),
                }
            }
        }
        let ledger = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(StudioError::io(&path))?;
        let store = Self { root, ledger: Mutex::new(ledger), jobs: RwLock::new(jobs) };
        let stale: Vec<(String, &str)> = store
            .list()
            .into_iter()
            .filter_map(|r| match r.status {
                JobStatus::Queued | JobStatus::Running => Some((r.id, "interrupted before completion")),
                JobStatus::Done if !store.job_dir(&r.id).is_dir() => Some((r.id, "outputs missing")),
                _ => None,
            })
            .collect();
        for (id, why) in stale {
            store.fail(&id, why)?;
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn job_dir(&self, id: &str) -> PathBuf {
        self.root.join("jobs").join(id)
    }

    fn staging_dir(&self, id: &str) -> PathBuf {
        self.root.join("jobs").join(format!(".staging-{id}"))
    }

    fn append(&self, record: &JobRecord) -> Result<()> {
        let path = self.root.join(LEDGER_FILE);
        let mut line = serde_json::to_vec(record).map_err(StudioError::json("job record"))?;
        line.push(b'\n');
        let mut f = self.ledger.lock().unwrap_or_else(|e| e.into_inner());
        f.write_all(&line).map_err(StudioError::io(&path))?;
        f.sync_data().map_err(StudioError::io(&path))
    }

    /// Queues `spec` unless a job with the same inputs digest exists and
    /// has not failed. `context` names everything else the outputs depend
    /// on (backend, thresholds, ...).
    pub fn submit(&self, spec: JobSpec, context: &str) -> Result<Submission> {
        spec.validate()?;
        let spec_json = serde_json::to_vec(&spec).map_err(StudioError::json("job spec"))?;
        let digest = sha256_hex_parts([context.as_bytes(), &spec_json[..]]);
        let kind = spec.kind();
        let id = format!("{}-{}", kind.name(), &digest[..16]);
        let mut jobs = self.jobs.write().unwrap_or_else(|e| e.into_inner());
        if let Some(existing) = jobs.get(&id) {
            if existing.status != JobStatus::Failed {
                return Ok(Submission { record: existing.clone(), fresh: false });
            }
        }
        let seq = jobs.values().map(|r| r.seq + 1).max().unwrap_or(0);
        let record = JobRecord {
            id: id.clone(),
            seq,
            kind,
            status: JobStatus::Queued,
            inputs_digest: digest,
            spec,
            outputs: Vec::new(),
            message: None,
            progress: None,
            submitted_at: now(),
        };
        self.append(&record)?;
        jobs.insert(id, record.clone());
        Ok(Submission { record, fresh: true })
    }

    fn update(&self, id: &str, persist: bool, f: impl FnOnce(&mut JobRecord)) -> Result<JobRecord> {
        let mut jobs = self.jobs.write().unwrap_or_else(|e| e.into_inner());
        let rec = jobs.get_mut(id).ok_or_else(|| StudioError::NotFound(format!("job {id}")))?;
        f(rec);
        let snapshot = rec.clone();
        if persist {
            self.append(&snapshot)?;
        }
        Ok(snapshot)
    }

    pub fn fail(&self, id: &str, message: &str) -> Result<JobRecord> {
        self.update(id, true, |r| {
            r.status = JobStatus::Failed;
            r.message = Some(message.to_string());
        })
    }

    /// In-memory only; progress is not written to the ledger.
    pub fn set_progress(&self, id: &str, done: u64, total: u64) {
        let _ = self.update(id, false, |r| r.progress = Some(Progress { done, total }));
    }

    pub fn get(&self, id: &str) -> Option<JobRecord> {
        self.jobs.read().unwrap_or_else(|e| e.into_inner()).get(id).cloned()
    }

    /// All jobs in submission order.
    pub fn list(&self) -> Vec<JobRecord> {
        let mut v: Vec<JobRecord> = self.jobs.read().unwrap_or_else(|e| e.into_inner()).values().cloned().collect();
        v.sort_by_key(|r| r.seq);
        v
    }

    pub fn latest_done(&self, kind: JobKind) -> Option<JobRecord> {
        self.list().into_iter().rev().find(|r| r.kind == kind && r.status == JobStatus::Done)
    }

    /// Runs a queued job to completion and returns its final record.
    pub fn execute(&self, project: &Project, id: &str) -> Result<JobRecord> {
        let record = self.update(id, true, |r| {
            r.status = JobStatus::Running;
            r.message = None;
        })?;
        let staging = self.staging_dir(id);
        let outcome = (|| {
            if staging.exists() {
                fs::remove_dir_all(&staging).map_err(StudioError::io(&staging))?;
            }
            fs::create_dir_all(&staging).map_err(StudioError::io(&staging))?;
            let outputs = run_spec(project, &record.spec, &staging, &|done, total| self.set_progress(id, done, total))?;
            publish_dir(&staging, &self.job_dir(id))?;
            Ok::<_, StudioError>(outputs)
        })();
        match outcome {
            Ok(outputs) => self.update(id, true, |r| {
                r.status = JobStatus::Done;
                r.outputs = outputs;
            }),
            Err(e) => {
                let _ = fs::remove_dir_all(&staging);
                log::error!("job {id} failed: {e}");
                self.fail(id, &e.to_string())
            }
        }
    }

    /// Submit and, for new jobs, execute on the calling thread.
    pub fn run_job(&self, project: &Project, spec: JobSpec, context: &str) -> Result<JobRecord> {
        let sub = self.submit(spec, context)?;
        if !sub.fresh {
            return Ok(sub.record);
        }
        self.execute(project, &sub.record.id)
    }
}

fn run_spec(project: &Project, spec: &JobSpec, dir: &Path, progress: &(dyn Fn(u64, u64) + Sync)) -> Result<Vec<String>> {
    match spec {
        JobSpec::Screen { from, to } => Ok(runner::run_screen(project, *from..*to + 1, dir, false, progress)?.files),
        JobSpec::Blend { seed, steps } => Ok(runner::run_blend(project, *seed, *steps, dir)?.1),
        JobSpec::Fig3 { seed } => Ok(runner::run_fig3(project, *seed, dir)?.1),
        JobSpec::Curriculum { cases, rng_seed, tiles } => {
            Ok(runner::run_curriculum_build(cases, *rng_seed, tiles.as_deref(), dir)?.1)
        }
        JobSpec::Fid { source } => {
            let report = runner::run_fid(project, source)?;
            crate::fsutil::write_json_atomic(&dir.join("fid.json"), &report)?;
            Ok(vec!["fid.json".into()])
        }
    }
}
