//! Batch pipeline around `morphoscape-core`: the design sweep, the training
//! study, the co-optimization study and the final report, with their file
//! formats, checkpoints and resume logic.
//!
//! Every stage writes into one output directory:
//!
//! ```text
//! config.resolved.json   metrics.csv  sweep.ckpt
//! training.csv  efficiency.csv  correlations.csv
//! coopt/{runs/*.json, <mode>_<seed>.csv, summary.csv, mann_whitney.csv,
//!        success_curve.csv, dtw_curve.csv}
//! report.json   <stage>.done
//! ```
#![warn(missing_docs)]

pub mod checkpoint;
pub mod config;
pub mod cooptimize;
pub mod error;
pub mod report;
pub mod stamp;
pub mod sweep;
pub mod table;
pub mod train;

pub use config::{RunConfig, Scale};
pub use error::{PipelineError, Result};

/// Counts finished work units and reports every 5% on stderr.
pub(crate) struct Progress {
    label: &'static str,
    total: usize,
    done: std::sync::atomic::AtomicUsize,
}

impl Progress {
    pub(crate) fn new(label: &'static str, total: usize) -> Self {
        Progress { label, total, done: Default::default() }
    }

    pub(crate) fn tick(&self) {
        let n = self.done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
        let step = (self.total / 20).max(1);
        if self.total >= 20 && (n % step == 0 || n == self.total) {
            eprintln!("{}: {n}/{}", self.label, self.total);
        }
    }
}

pub(crate) fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| PipelineError::Compute(e.into()))
}
