//! Experiment orchestration: configuration, the law catalog, pipelines,
//! run manifests and summary reports.

pub mod catalog;
pub mod config;
pub mod pipelines;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{ExperimentConfig, Pipeline};
pub use report::{emit_report, Report};

use crate::error::{Error, Result};
use crate::table::Table;

pub const MANIFEST: &str = "manifest.json";
pub const SUMMARY: &str = "summary.json";

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ProducedFile {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StepTiming {
    pub step: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Failure {
    pub step: String,
    pub message: String,
}

/// Record of one run. Everything except `timings` and `workers` is a
/// function of the configuration.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub pipeline: String,
    pub config_hash: String,
    pub tool_version: String,
    pub seed: u64,
    pub workers: usize,
    pub timings: Vec<StepTiming>,
    /// Every file in the output directory except the manifest itself.
    pub files: Vec<ProducedFile>,
    pub failure: Option<Failure>,
}

impl RunManifest {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// The single writer of a run: every artifact goes through here, in
/// program order, from the orchestrating thread.
pub struct Sink {
    dir: PathBuf,
    files: Vec<ProducedFile>,
    timings: Vec<StepTiming>,
    current: String,
}

impl Sink {
    fn new(dir: PathBuf) -> Self {
        Sink { dir, files: Vec::new(), timings: Vec::new(), current: "setup".into() }
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        if name == MANIFEST || name.contains('/') || name.contains('\\') {
            return Err(Error::Config(format!("invalid artifact name '{name}'")));
        }
        fs::write(self.dir.join(name), bytes)?;
        self.files.retain(|f| f.name != name);
        self.files.push(ProducedFile { name: name.into(), sha256: hex::encode(Sha256::digest(bytes)), bytes: bytes.len() });
        Ok(())
    }

    pub fn table(&mut self, name: &str, t: &Table) -> Result<()> {
        self.write(name, t.to_csv().as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v)?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    /// Runs one named step and records its wall time.
    pub fn step<T>(&mut self, name: &str, f: impl FnOnce(&mut Sink) -> Result<T>) -> Result<T> {
        self.current = name.to_string();
        let t0 = Instant::now();
        let r = f(self);
        self.timings.push(StepTiming { step: name.into(), seconds: t0.elapsed().as_secs_f64() });
        r
    }
}

/// Options that affect scheduling but not results.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the available parallelism.
    pub workers: Option<usize>,
}

/// Prepares `dir`: creates it, or clears the files of a previous run
/// recorded in its manifest. Foreign files make the directory unusable.
fn prepare_dir(dir: &Path) -> Result<()> {
    if !dir.exists() {
        fs::create_dir_all(dir)?;
        return Ok(());
    }
    let previous = RunManifest::read(dir).ok();
    let known: Vec<String> = previous.iter().flat_map(|m| m.files.iter().map(|f| f.name.clone())).collect();
    for entry in fs::read_dir(dir)? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if name != MANIFEST && !known.contains(&name) {
            return Err(Error::Config(format!(
                "output directory {} contains '{name}', which no previous run produced",
                dir.display()
            )));
        }
    }
    for name in known.iter().chain(std::iter::once(&MANIFEST.to_string())) {
        let p = dir.join(name);
        if p.exists() {
            fs::remove_file(p)?;
        }
    }
    Ok(())
}

/// Validates the configuration, runs its pipeline on a worker pool and
/// writes the artifacts plus `manifest.json` into `out`.
///
/// Validation errors leave the file system untouched. A failure after
/// validation keeps the artifacts written so far and is recorded in the
/// manifest, which is still returned.
pub fn run_experiment(config: &ExperimentConfig, out: &Path, opts: &RunOptions) -> Result<RunManifest> {
    config.validate()?;
    let workers = opts.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(Error::Config("workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start the worker pool: {e}")))?;
    prepare_dir(out)?;

    let mut sink = Sink::new(out.to_path_buf());
    let result = pool.install(|| {
        sink.write("config.txt", config.to_text().as_bytes())?;
        pipelines::run(config, &mut sink)
    });
    let failure = result.err().map(|e| Failure { step: sink.current.clone(), message: e.to_string() });
    let mut files = sink.files;
    files.sort_by(|a, b| a.name.cmp(&b.name));
    let manifest = RunManifest {
        pipeline: config.pipeline.name().into(),
        config_hash: config.hash(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seed: config.seed,
        workers,
        timings: sink.timings,
        files,
        failure,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(out.join(MANIFEST), text)?;
    Ok(manifest)
}
