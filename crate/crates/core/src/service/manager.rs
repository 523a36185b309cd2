use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::app::{run_job, FieldError, JobSpec};

/// Prefix marking a path as an uploaded dataset handle.
pub const DATASET_SCHEME: &str = "dataset:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Succeeded,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub job_id: String,
    pub state: JobState,
    pub submitted_at: DateTime<Utc>,
    pub finished_at: Option<DateTime<Utc>>,
    pub spec: JobSpec,
    pub report_path: Option<PathBuf>,
    pub error: Option<String>,
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown job `{0}`")]
    UnknownJob(String),
    #[error("invalid job spec")]
    SpecValidation(Vec<FieldError>),
    #[error("job `{0}` has no report yet")]
    ReportUnavailable(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Called on every state change, from the thread making it.
pub type JobListener = Box<dyn Fn(&JobRecord) + Send + Sync>;

struct Queue {
    records: BTreeMap<String, JobRecord>,
    /// Submission order, for listing.
    order: Vec<String>,
    pending: VecDeque<String>,
    shutdown: bool,
}

struct Shared {
    root: PathBuf,
    queue: Mutex<Queue>,
    wakeup: Condvar,
    /// Held from dequeue until the running state is published, so jobs are
    /// observed starting in queue order.
    dispatch: Mutex<()>,
    listener: Option<JobListener>,
}

/// A bounded pool of workers running jobs in FIFO order. Records and
/// reports live under `<root>/jobs/<id>/`; uploads under `<root>/datasets/`.
pub struct JobManager {
    shared: Arc<Shared>,
    workers: Vec<JoinHandle<()>>,
}

impl JobManager {
    pub fn new(root: impl Into<PathBuf>, workers: usize) -> io::Result<Self> {
        Self::build(root.into(), workers, None)
    }

    pub fn with_listener(root: impl Into<PathBuf>, workers: usize, listener: JobListener) -> io::Result<Self> {
        Self::build(root.into(), workers, Some(listener))
    }

    fn build(root: PathBuf, workers: usize, listener: Option<JobListener>) -> io::Result<Self> {
        fs::create_dir_all(root.join("jobs"))?;
        fs::create_dir_all(root.join("datasets"))?;
        let shared = Arc::new(Shared {
            root,
            queue: Mutex::new(Queue {
                records: BTreeMap::new(),
                order: Vec::new(),
                pending: VecDeque::new(),
                shutdown: false,
            }),
            wakeup: Condvar::new(),
            dispatch: Mutex::new(()),
            listener,
        });
        let workers = (0..workers.max(1))
            .map(|_| {
                let shared = Arc::clone(&shared);
                std::thread::spawn(move || worker(&shared))
            })
            .collect();
        Ok(JobManager { shared, workers })
    }

    pub fn root(&self) -> &Path {
        &self.shared.root
    }

    /// Stores an upload under `datasets/<sha256 prefix>/<file name>` and
    /// returns its handle. Identical bytes give the same handle.
    pub fn store_dataset(&self, file_name: &str, bytes: &[u8]) -> io::Result<String> {
        let id = hex::encode(&Sha256::digest(bytes)[..8]);
        let dir = self.shared.root.join("datasets").join(&id);
        fs::create_dir_all(&dir)?;
        let name = sanitize(file_name);
        let target = dir.join(&name);
        if !target.exists() {
            let tmp = dir.join(format!(".{name}.tmp"));
            fs::write(&tmp, bytes)?;
            fs::rename(&tmp, &target)?;
        }
        Ok(id)
    }

    /// Maps `dataset:<id>` to the stored file; other paths pass through.
    pub fn resolve_dataset(&self, path: &Path) -> Option<PathBuf> {
        let text = path.to_string_lossy();
        let Some(id) = text.strip_prefix(DATASET_SCHEME) else {
            return Some(path.to_path_buf());
        };
        dataset_file(&self.shared.root, id)
    }

    /// Validates `spec`, persists a queued record and returns its id.
    pub fn submit(&self, spec: JobSpec) -> Result<String, ServiceError> {
        let mut errors = spec.validate();
        if self.resolve_dataset(&spec.loader.path).is_none() {
            errors.push(FieldError::new("loader.path", "unknown dataset"));
        }
        if let Some(file) = spec.adapter.as_ref().and_then(|a| a.label_file.as_ref()) {
            if self.resolve_dataset(file).is_none() {
                errors.push(FieldError::new("adapter.label_file", "unknown dataset"));
            }
        }
        if !errors.is_empty() {
            return Err(ServiceError::SpecValidation(errors));
        }
        let job_id = uuid::Uuid::new_v4().simple().to_string();
        let record = JobRecord {
            job_id: job_id.clone(),
            state: JobState::Queued,
            submitted_at: Utc::now(),
            finished_at: None,
            spec,
            report_path: None,
            error: None,
        };
        let dir = self.shared.root.join("jobs").join(&job_id);
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("spec.yaml"), record.spec.to_yaml())?;
        persist(&self.shared, &record)?;
        {
            let mut q = self.shared.queue.lock().expect("queue lock");
            q.records.insert(job_id.clone(), record.clone());
            q.order.push(job_id.clone());
        }
        // announce before any worker can see it
        notify(&self.shared, &record);
        self.shared.queue.lock().expect("queue lock").pending.push_back(job_id.clone());
        self.shared.wakeup.notify_all();
        Ok(job_id)
    }

    pub fn status(&self, job_id: &str) -> Result<JobRecord, ServiceError> {
        let q = self.shared.queue.lock().expect("queue lock");
        q.records
            .get(job_id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownJob(job_id.to_string()))
    }

    /// All jobs in submission order.
    pub fn list(&self) -> Vec<JobRecord> {
        let q = self.shared.queue.lock().expect("queue lock");
        q.order.iter().map(|id| q.records[id].clone()).collect()
    }

    /// The rendered report of a finished job.
    pub fn report(&self, job_id: &str) -> Result<String, ServiceError> {
        let record = self.status(job_id)?;
        match record.report_path {
            Some(p) => Ok(fs::read_to_string(p)?),
            None => Err(ServiceError::ReportUnavailable(job_id.to_string())),
        }
    }

    /// Blocks until the job leaves the queue and finishes.
    pub fn wait(&self, job_id: &str) -> Result<JobRecord, ServiceError> {
        let mut q = self.shared.queue.lock().expect("queue lock");
        loop {
            let r = q
                .records
                .get(job_id)
                .ok_or_else(|| ServiceError::UnknownJob(job_id.to_string()))?;
            if matches!(r.state, JobState::Succeeded | JobState::Failed) {
                return Ok(r.clone());
            }
            q = self.shared.wakeup.wait(q).expect("queue lock");
        }
    }
}

impl Drop for JobManager {
    fn drop(&mut self) {
        self.shared.queue.lock().expect("queue lock").shutdown = true;
        self.shared.wakeup.notify_all();
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

/// The single stored file of dataset `id`.
fn dataset_file(root: &Path, id: &str) -> Option<PathBuf> {
    if id.is_empty() || !id.bytes().all(|b| b.is_ascii_hexdigit()) {
        return None;
    }
    let mut files: Vec<PathBuf> = fs::read_dir(root.join("datasets").join(id))
        .ok()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| !p.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.')))
        .collect();
    files.sort();
    files.into_iter().next()
}

fn sanitize(name: &str) -> String {
    let base = Path::new(name)
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let clean: String = base
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect();
    let clean = clean.trim_start_matches('.').to_string();
    if clean.is_empty() {
        "upload".to_string()
    } else {
        clean
    }
}

/// Atomically replaces `jobs/<id>/record.json`.
fn persist(shared: &Shared, record: &JobRecord) -> io::Result<()> {
    let dir = shared.root.join("jobs").join(&record.job_id);
    let tmp = dir.join("record.json.tmp");
    fs::write(&tmp, serde_json::to_vec_pretty(record).map_err(io::Error::other)?)?;
    fs::rename(tmp, dir.join("record.json"))
}

fn notify(shared: &Shared, record: &JobRecord) {
    if let Some(listener) = &shared.listener {
        listener(record);
    }
}

fn update(shared: &Shared, record: JobRecord) {
    if let Err(e) = persist(shared, &record) {
        log::warn!("persisting job {}: {e}", record.job_id);
    }
    notify(shared, &record);
    shared
        .queue
        .lock()
        .expect("queue lock")
        .records
        .insert(record.job_id.clone(), record);
    shared.wakeup.notify_all();
}

fn worker(shared: &Shared) {
    loop {
        let turn = shared.dispatch.lock().expect("dispatch lock");
        let mut record = {
            let mut q = shared.queue.lock().expect("queue lock");
            loop {
                if q.shutdown {
                    return;
                }
                if let Some(id) = q.pending.pop_front() {
                    break q.records[&id].clone();
                }
                q = shared.wakeup.wait(q).expect("queue lock");
            }
        };
        record.state = JobState::Running;
        update(shared, record.clone());
        drop(turn);

        let dir = shared.root.join("jobs").join(&record.job_id);
        match execute(shared, &record.spec, &dir) {
            Ok(report_path) => {
                record.state = JobState::Succeeded;
                record.report_path = Some(report_path);
            }
            Err(message) => {
                record.state = JobState::Failed;
                record.error = Some(message);
            }
        }
        record.finished_at = Some(Utc::now());
        update(shared, record);
    }
}

fn execute(shared: &Shared, spec: &JobSpec, dir: &Path) -> Result<PathBuf, String> {
    let mut spec = spec.clone();
    let resolve = |p: &mut PathBuf| -> Result<(), String> {
        let text = p.to_string_lossy().into_owned();
        if let Some(id) = text.strip_prefix(DATASET_SCHEME) {
            *p = dataset_file(&shared.root, id).ok_or_else(|| format!("unknown dataset `{id}`"))?;
        }
        Ok(())
    };
    resolve(&mut spec.loader.path)?;
    if let Some(file) = spec.adapter.as_mut().and_then(|a| a.label_file.as_mut()) {
        resolve(file)?;
    }
    let report = run_job(&spec).map_err(|e| e.to_string())?;
    report.write_to(dir).map_err(|e| e.to_string())?;
    Ok(dir.join("report.txt"))
}
