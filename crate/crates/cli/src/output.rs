//! Deterministic artifact writers: CSV with 17-significant-digit floats,
//! pretty JSON, and the run manifest (timings live in their own object so
//! comparisons can strip them).

use crate::problem::{CliError, CliResult};
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// 17 significant digits: round-trips any f64.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{:.16e}", v)
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub struct OutputDir {
    pub dir: PathBuf,
    pub written: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::new(format!("cannot create output dir {}: {}", dir.display(), e)))?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, text)
            .map_err(|e| CliError::new(format!("cannot write {}: {}", path.display(), e)))?;
        self.written.push(name.to_string());
        Ok(path)
    }

    pub fn write_csv(&mut self, name: &str, header: &str, rows: &[Vec<f64>]) -> CliResult<PathBuf> {
        let mut text = String::with_capacity(rows.len() * 64 + header.len() + 1);
        text.push_str(header);
        text.push('\n');
        for row in rows {
            let cols: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
            text.push_str(&cols.join(","));
            text.push('\n');
        }
        self.write_text(name, &text)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<PathBuf> {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::new(format!("cannot serialize {}: {}", name, e)))?;
        self.write_text(name, &format!("{}\n", text))
    }
}

pub struct Manifest {
    pub task: String,
    pub problem_path: String,
    pub problem_sha256: String,
    pub overrides: Vec<String>,
    pub seed_free: bool,
    pub results: Map<String, Value>,
    started: std::time::Instant,
}

impl Manifest {
    pub fn new(task: &str, problem_path: &Path, canonical_problem: &str, overrides: &[String], seed_free: bool) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(canonical_problem.as_bytes());
        Manifest {
            task: task.to_string(),
            problem_path: problem_path.display().to_string(),
            problem_sha256: hex_digest(hasher),
            overrides: overrides.to_vec(),
            seed_free,
            results: Map::new(),
            started: std::time::Instant::now(),
        }
    }

    pub fn insert(&mut self, key: &str, value: Value) {
        self.results.insert(key.to_string(), value);
    }

    pub fn write(self, out: &mut OutputDir) -> CliResult<()> {
        let value = json!({
            "tool": { "name": "semilin", "version": env!("CARGO_PKG_VERSION") },
            "task": self.task,
            "inputs": {
                "problem_file": self.problem_path,
                "sha256": self.problem_sha256,
                "overrides": self.overrides,
            },
            "seed_free_requested": self.seed_free,
            "rng_requests": semilin::rng_audit::requests(),
            "results": Value::Object(self.results),
            "outputs": out.written.clone(),
            "timings": { "total_ms": self.started.elapsed().as_millis() as u64 },
        });
        out.write_json("manifest.json", &value)?;
        Ok(())
    }
}

fn hex_digest(hasher: Sha256) -> String {
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{:02x}", b))
        .collect()
}

/// JSON value for a float that keeps full precision as a string when needed.
pub fn jf(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(fmt_f64(v))
    }
}
