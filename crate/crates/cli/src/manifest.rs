//! Run manifests and the output writer that stamps every file with the
//! manifest hash.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const TOOL_NAME: &str = "levsim";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub manifest_sha256: String,
    pub config_sha256: String,
    pub config_file: Option<String>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub oracle: bool,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub started_unix_s: f64,
    pub wall_clock_s: f64,
    pub status: String,
    pub exit_code: u8,
    pub error: Option<String>,
}

/// Book-keeping for one invocation.
pub struct Run {
    command: String,
    out_dir: PathBuf,
    config_sha256: String,
    config_file: Option<String>,
    seed: u64,
    threads: Option<usize>,
    oracle: bool,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    hash: Option<String>,
    started: SystemTime,
    clock: Instant,
}

impl Run {
    pub fn new(
        command: &str,
        out_dir: &Path,
        config_json: &Value,
        config_file: Option<&Path>,
        seed: u64,
        threads: Option<usize>,
        oracle: bool,
    ) -> Self {
        let canonical = serde_json::to_vec(config_json).expect("config serialises");
        Self {
            command: command.to_string(),
            out_dir: out_dir.to_path_buf(),
            config_sha256: sha256_hex(&canonical),
            config_file: config_file.map(|p| p.display().to_string()),
            seed,
            threads,
            oracle,
            inputs: Vec::new(),
            outputs: Vec::new(),
            hash: None,
            started: SystemTime::now(),
            clock: Instant::now(),
        }
    }

    /// Read an input file and record its digest. Missing or unreadable
    /// inputs are data errors naming the file.
    pub fn read_input(&mut self, path: &Path) -> Result<Vec<u8>, CliError> {
        assert!(self.hash.is_none(), "inputs must be registered before outputs");
        let bytes = fs::read(path)
            .map_err(|e| CliError::Failure(format!("cannot read input {}: {e}", path.display())))?;
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(bytes)
    }

    pub fn record_input(&mut self, path: &Path) -> Result<(), CliError> {
        self.read_input(path).map(|_| ())
    }

    /// Hash of everything that determines the numeric outputs. Input files
    /// enter by content, not by path.
    pub fn manifest_sha256(&mut self) -> String {
        if let Some(h) = &self.hash {
            return h.clone();
        }
        let identity = json!({
            "tool": TOOL_NAME,
            "version": TOOL_VERSION,
            "command": self.command,
            "config_sha256": self.config_sha256,
            "seed": self.seed,
            "oracle": self.oracle,
            "inputs": self.inputs.iter().map(|i| i.sha256.as_str()).collect::<Vec<_>>(),
        });
        let h = sha256_hex(&serde_json::to_vec(&identity).expect("identity serialises"));
        self.hash = Some(h.clone());
        h
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.out_dir).map_err(|e| {
            CliError::Failure(format!("cannot create {}: {e}", self.out_dir.display()))
        })?;
        let path = self.out_dir.join(name);
        fs::write(&path, bytes)
            .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))?;
        self.outputs.push(FileDigest {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    /// CSV whose first line is `# manifest_sha256=<hash> seed=<seed>`.
    pub fn write_csv<F>(&mut self, name: &str, body: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut buf = format!("# manifest_sha256={} seed={}\n", self.manifest_sha256(), self.seed).into_bytes();
        body(&mut buf)?;
        self.write(name, &buf)
    }

    /// JSON object with `manifest_sha256` and `seed` added to its keys.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut obj = serde_json::Map::new();
        obj.insert("manifest_sha256".into(), Value::String(self.manifest_sha256()));
        obj.insert("seed".into(), Value::from(self.seed));
        match serde_json::to_value(value).map_err(|e| CliError::Failure(e.to_string()))? {
            Value::Object(m) => obj.extend(m),
            other => {
                obj.insert("data".into(), other);
            }
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(obj)).expect("json serialises");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn write_svg(&mut self, name: &str, svg: &str) -> Result<PathBuf, CliError> {
        self.manifest_sha256();
        self.write(name, svg.as_bytes())
    }

    /// Binary outputs cannot carry the hash; it is recorded in the manifest.
    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        self.manifest_sha256();
        self.write(name, bytes)
    }

    /// Write `manifest_<command>.json` describing the invocation.
    pub fn finish(mut self, outcome: &Result<(), CliError>) -> Result<PathBuf, CliError> {
        let hash = self.manifest_sha256();
        let started_unix_s = self
            .started
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        let manifest = RunManifest {
            tool: TOOL_NAME,
            version: TOOL_VERSION,
            command: self.command.clone(),
            manifest_sha256: hash,
            config_sha256: self.config_sha256.clone(),
            config_file: self.config_file.clone(),
            seed: self.seed,
            threads: self.threads,
            oracle: self.oracle,
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            started_unix_s,
            wall_clock_s: self.clock.elapsed().as_secs_f64(),
            status: if outcome.is_ok() { "ok".into() } else { "failed".into() },
            exit_code: outcome.as_ref().err().map_or(0, CliError::exit_code),
            error: outcome.as_ref().err().map(|e| e.to_string()),
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
        text.push('\n');
        fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join(manifest_name(&self.command));
        fs::write(&path, text)?;
        Ok(path)
    }
}

pub fn manifest_name(command: &str) -> String {
    format!("manifest_{}.json", command.replace(' ', "_"))
}
