//! Append-only shard log for the sweep.
//!
//! Layout (little endian):
//!
//! ```text
//! magic    8 bytes  "MSCKPT\0\0"
//! version  u32      1
//! k        u32      environments per design
//! hash     32 bytes sweep fingerprint of the config
//! records  { design_index: u32, g_1..g_k: u64 each }*
//! ```
//!
//! A torn final record (the process died mid-write) is dropped on open; any
//! other malformation is reported as corrupt input.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use crate::error::{PipelineError, Result};

const MAGIC: &[u8; 8] = b"MSCKPT\0\0";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 4 + 32;

/// Open shard log plus everything already recorded in it.
pub struct Checkpoint {
    path: PathBuf,
    file: File,
    k: usize,
    done: BTreeMap<usize, Vec<usize>>,
}

impl Checkpoint {
    /// Start a fresh log, replacing any existing file.
    pub fn create(path: &Path, k: usize, hash: [u8; 32]) -> Result<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(PipelineError::io(dir))?;
        }
        let mut file = File::create(path).map_err(PipelineError::io(path))?;
        let mut header = Vec::with_capacity(HEADER_LEN);
        header.extend_from_slice(MAGIC);
        header.extend_from_slice(&VERSION.to_le_bytes());
        header.extend_from_slice(&(k as u32).to_le_bytes());
        header.extend_from_slice(&hash);
        file.write_all(&header).map_err(PipelineError::io(path))?;
        file.sync_data().map_err(PipelineError::io(path))?;
        Ok(Checkpoint {
            path: path.into(),
            file,
            k,
            done: BTreeMap::new(),
        })
    }

    /// Reopen an existing log for appending. A log written under another
    /// fingerprint or environment count is a mismatch.
    pub fn resume(path: &Path, k: usize, hash: [u8; 32], designs: usize) -> Result<Self> {
        let mut bytes = Vec::new();
        File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| PipelineError::input(path, e))?;
        if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
            return Err(PipelineError::input(path, "not a sweep checkpoint"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        let file_k = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        if version != VERSION || file_k != k || bytes[16..48] != hash {
            return Err(PipelineError::CheckpointMismatch { path: path.into() });
        }

        let rec_len = 4 + 8 * k;
        let body = &bytes[HEADER_LEN..];
        let whole = body.len() / rec_len * rec_len;
        let mut done = BTreeMap::new();
        for rec in body[..whole].chunks_exact(rec_len) {
            let idx = u32::from_le_bytes(rec[..4].try_into().unwrap()) as usize;
            if idx >= designs {
                return Err(PipelineError::input(path, format!("design index {idx} out of range")));
            }
            let counts = rec[4..]
                .chunks_exact(8)
                .map(|c| u64::from_le_bytes(c.try_into().unwrap()) as usize)
                .collect();
            done.insert(idx, counts);
        }

        let file = OpenOptions::new()
            .write(true)
            .open(path)
            .map_err(PipelineError::io(path))?;
        file.set_len((HEADER_LEN + whole) as u64)
            .map_err(PipelineError::io(path))?;
        let mut cp = Checkpoint {
            path: path.into(),
            file,
            k,
            done,
        };
        cp.file
            .seek(SeekFrom::End(0))
            .map_err(PipelineError::io(path))?;
        Ok(cp)
    }

    /// Recorded `g_1..g_k` by design index.
    pub fn done(&self) -> &BTreeMap<usize, Vec<usize>> {
        &self.done
    }

    /// Append a batch of shards and flush them to disk.
    pub fn append(&mut self, shards: &[(usize, Vec<usize>)]) -> Result<()> {
        let mut buf = Vec::with_capacity(shards.len() * (4 + 8 * self.k));
        for (idx, counts) in shards {
            assert_eq!(counts.len(), self.k);
            buf.extend_from_slice(&(*idx as u32).to_le_bytes());
            for &c in counts {
                buf.extend_from_slice(&(c as u64).to_le_bytes());
            }
        }
        self.file.write_all(&buf).map_err(PipelineError::io(&self.path))?;
        self.file.sync_data().map_err(PipelineError::io(&self.path))?;
        for (idx, counts) in shards {
            self.done.insert(*idx, counts.clone());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_torn_tail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.ckpt");
        let hash = [7u8; 32];
        let mut cp = Checkpoint::create(&path, 4, hash).unwrap();
        cp.append(&[(3, vec![1, 2, 3, 4]), (0, vec![0, 0, 0, 0])]).unwrap();
        drop(cp);

        // Simulate a crash halfway through the next record.
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(&[9, 0, 0, 0, 1, 2]).unwrap();
        drop(f);

        let mut cp = Checkpoint::resume(&path, 4, hash, 10).unwrap();
        assert_eq!(cp.done().len(), 2);
        assert_eq!(cp.done()[&3], vec![1, 2, 3, 4]);
        cp.append(&[(9, vec![5, 6, 7, 8])]).unwrap();
        drop(cp);
        let cp = Checkpoint::resume(&path, 4, hash, 10).unwrap();
        assert_eq!(cp.done().keys().copied().collect::<Vec<_>>(), vec![0, 3, 9]);
    }

    #[test]
    fn mismatch_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.ckpt");
        Checkpoint::create(&path, 4, [1; 32]).unwrap();
        assert!(matches!(
            Checkpoint::resume(&path, 4, [2; 32], 10),
            Err(PipelineError::CheckpointMismatch { .. })
        ));
        assert!(matches!(
            Checkpoint::resume(&path, 3, [1; 32], 10),
            Err(PipelineError::CheckpointMismatch { .. })
        ));
        let mut cp = Checkpoint::resume(&path, 4, [1; 32], 10).unwrap();
        cp.append(&[(42, vec![0; 4])]).unwrap();
        assert!(matches!(
            Checkpoint::resume(&path, 4, [1; 32], 10),
            Err(PipelineError::Input { .. })
        ));
        std::fs::write(&path, b"garbage").unwrap();
        assert!(matches!(
            Checkpoint::resume(&path, 4, [1; 32], 10),
            Err(PipelineError::Input { .. })
        ));
    }
}
