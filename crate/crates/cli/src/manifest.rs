//! Run manifests and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    /// First 64 bits of the SHA-256 of the input file, hex.
    pub input_digest: Option<String>,
    pub tool_version: &'static str,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
}

pub struct ManifestBuilder {
    manifest: RunManifest,
    clock: Instant,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl ManifestBuilder {
    pub fn start(command: &str, parameters: serde_json::Value, seed: Option<u64>) -> Self {
        Self {
            manifest: RunManifest {
                command: command.to_string(),
                parameters,
                seed,
                input_digest: None,
                tool_version: env!("CARGO_PKG_VERSION"),
                started_unix: unix_now(),
                finished_unix: 0,
                wall_time_s: 0.0,
                outputs: Vec::new(),
            },
            clock: Instant::now(),
        }
    }

    /// Adds or replaces one entry of the parameter map.
    pub fn param(&mut self, key: &str, value: serde_json::Value) {
        if !self.manifest.parameters.is_object() {
            let old = std::mem::take(&mut self.manifest.parameters);
            self.manifest.parameters = serde_json::json!({ "args": old });
        }
        self.manifest.parameters[key] = value;
    }

    pub fn seed(&mut self, seed: u64) {
        self.manifest.seed = Some(seed);
    }

    pub fn input(&mut self, bytes: &[u8]) {
        self.manifest.input_digest = Some(digest64(bytes));
    }

    pub fn output(&mut self, path: &Path) {
        self.manifest.outputs.push(path.display().to_string());
    }

    pub fn finish(mut self) -> RunManifest {
        self.manifest.finished_unix = unix_now();
        self.manifest.wall_time_s = self.clock.elapsed().as_secs_f64();
        self.manifest
    }
}

pub fn digest64(bytes: &[u8]) -> String {
    let hash = Sha256::digest(bytes);
    hash[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes through a temporary file in the target directory and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable() {
        assert_eq!(digest64(b"abc"), "ba7816bf8f01cfea");
        assert_eq!(digest64(b""), "e3b0c44298fc1c14");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
