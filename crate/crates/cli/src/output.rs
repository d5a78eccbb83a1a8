//! Writing data files and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::experiments::{Artifact, RunError};

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `bytes` to a temporary sibling and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp: PathBuf = path.with_file_name(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Writes every artifact, then the manifest last.
pub fn write_run(cfg: &ExperimentConfig, artifacts: &[Artifact], wall_time_s: f64) -> Result<Value, RunError> {
    let io = |e: std::io::Error| RunError::Output(format!("{}: {e}", cfg.out.display()));
    fs::create_dir_all(&cfg.out).map_err(io)?;
    let mut files = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        write_atomic(&cfg.out.join(&a.name), &a.bytes).map_err(io)?;
        files.push(json!({
            "name": a.name,
            "bytes": a.bytes.len(),
            "sha256": sha256_hex(&a.bytes),
        }));
    }
    let manifest = json!({
        "experiment": cfg.experiment.id(),
        "config": cfg.resolved(),
        "code_version": env!("CARGO_PKG_VERSION"),
        "wall_time_s": wall_time_s,
        "files": files,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest is plain JSON") + "\n";
    write_atomic(&cfg.out.join(MANIFEST_NAME), text.as_bytes()).map_err(io)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
