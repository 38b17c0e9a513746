//! Completion stamps that let `--resume` skip finished stages.
//!
//! A stamp holds a digest of the resolved config (without worker count and
//! output path) and of the stage's input files. A stage is complete when its
//! stamp exists and matches.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{PipelineError, Result};

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest of `cfg` and the contents of `inputs`.
pub fn digest(cfg: &RunConfig, inputs: &[&Path]) -> Result<String> {
    let mut canonical = cfg.clone();
    canonical.workers = 0;
    canonical.out = Default::default();
    let mut h = Sha256::new();
    h.update(serde_json::to_string(&canonical).expect("config serializes"));
    for path in inputs {
        let bytes = std::fs::read(path).map_err(|e| PipelineError::input(*path, e))?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex(&h.finalize()))
}

/// True when `dir/<stage>.done` holds `digest`.
pub fn is_complete(dir: &Path, stage: &str, digest: &str) -> bool {
    std::fs::read_to_string(dir.join(format!("{stage}.done"))).is_ok_and(|s| s.trim() == digest)
}

/// Record `stage` as complete.
pub fn mark_complete(dir: &Path, stage: &str, digest: &str) -> Result<()> {
    let path = dir.join(format!("{stage}.done"));
    std::fs::write(&path, format!("{digest}\n")).map_err(PipelineError::io(path))
}
