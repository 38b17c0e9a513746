//! `sweep`: metrics for every grid design, checkpointed per design.

use std::path::Path;

use anyhow::Context;
use morphoscape_core::landscape::{design_grid, design_metrics, is_mirror_closed, DesignMetrics, GridSpec};
use morphoscape_core::Design;
use rayon::prelude::*;

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::error::{PipelineError, Result};
use crate::table::{field_f64, field_u64, fmt_g6, read_table, write_table};
use crate::{pool, stamp};

/// File name of the sweep table.
pub const METRICS_FILE: &str = "metrics.csv";
/// File name of the shard log.
pub const CHECKPOINT_FILE: &str = "sweep.ckpt";

/// Header of `metrics.csv` for `k` environments.
pub fn metrics_header(k: usize) -> Vec<String> {
    let mut h: Vec<String> = ["l1x", "l1y", "l2x", "l2y", "m_l", "m_ci"].map(String::from).to_vec();
    h.extend((1..=k).map(|i| format!("g{i}")));
    h
}

/// Index of `design`'s mirror partner in [`design_grid`] order, when the
/// design axis is exactly symmetric about zero.
pub fn mirror_index(idx: usize, spec: &GridSpec) -> Option<usize> {
    let axis = spec.design_axis();
    let n = axis.len();
    if !(0..n).all(|i| axis[i] == -axis[n - 1 - i]) {
        return None;
    }
    let (a, b, c, d) = (idx / (n * n * n), idx / (n * n) % n, idx / n % n, idx % n);
    let (a2, b2, c2, d2) = (c, n - 1 - d, a, n - 1 - b);
    Some(((a2 * n + b2) * n + c2) * n + d2)
}

/// Run or resume the sweep; returns metrics for every design in grid order.
pub fn cmd_sweep(cfg: &RunConfig, resume: bool) -> Result<Vec<DesignMetrics>> {
    cfg.validate()?;
    cfg.write_resolved(&cfg.out)?;
    let spec = cfg.grid_spec();
    let sim = cfg.sim_config();
    let envs = cfg.environments();
    let k = envs.len();
    let designs = design_grid(&spec);
    let digest = stamp::digest(cfg, &[])?;
    let ckpt_path = cfg.out.join(CHECKPOINT_FILE);
    let metrics_path = cfg.out.join(METRICS_FILE);

    if resume && stamp::is_complete(&cfg.out, "sweep", &digest) && metrics_path.exists() {
        return read_metrics(&metrics_path, &spec, k);
    }

    let mut ckpt = if resume && ckpt_path.exists() {
        Checkpoint::resume(&ckpt_path, k, cfg.sweep_fingerprint(), designs.len())?
    } else {
        Checkpoint::create(&ckpt_path, k, cfg.sweep_fingerprint())?
    };

    let mirror = is_mirror_closed(&envs);
    let partner = |i: usize| if mirror { mirror_index(i, &spec) } else { None };
    let todo: Vec<usize> = (0..designs.len())
        .filter(|&i| partner(i).is_none_or(|p| i <= p))
        .filter(|i| !ckpt.done().contains_key(i))
        .collect();

    let workers = cfg.effective_workers();
    let chunk = (workers * 4).max(8);
    let total = todo.len();
    pool(workers)?.install(|| -> Result<()> {
        for (c, block) in todo.chunks(chunk).enumerate() {
            let computed: Vec<(usize, Vec<usize>)> = block
                .par_iter()
                .map(|&i| {
                    design_metrics(&designs[i], &envs, &spec, &sim)
                        .map(|m| (i, m.counts))
                        .with_context(|| format!("design {i}"))
                })
                .collect::<anyhow::Result<_>>()?;
            let mut shards = Vec::with_capacity(2 * computed.len());
            for (i, counts) in computed {
                if let Some(p) = partner(i).filter(|&p| p != i) {
                    shards.push((p, counts.clone()));
                }
                shards.push((i, counts));
            }
            ckpt.append(&shards)?;
            let finished = ((c + 1) * chunk).min(total);
            if total >= 20 && (c + 1) % ((total / chunk / 20).max(1)) == 0 {
                eprintln!("sweep: {finished}/{total} shards");
            }
        }
        Ok(())
    })?;

    let cells = spec.weight_bins * spec.weight_bins;
    let metrics: Vec<DesignMetrics> = designs
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let counts = ckpt.done().get(&i).cloned().ok_or_else(|| {
                PipelineError::input(&ckpt_path, format!("design {i} missing after sweep"))
            })?;
            Ok(DesignMetrics::from_counts(*d, cells, counts))
        })
        .collect::<Result<_>>()?;
    write_metrics(&metrics_path, &metrics, k)?;
    stamp::mark_complete(&cfg.out, "sweep", &digest)?;
    Ok(metrics)
}

/// Write `metrics.csv`.
pub fn write_metrics(path: &Path, metrics: &[DesignMetrics], k: usize) -> Result<()> {
    let header = metrics_header(k);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = metrics
        .iter()
        .map(|m| {
            let mut row: Vec<String> = m.design.coords().iter().map(|c| fmt_g6(*c)).collect();
            row.push(fmt_g6(m.m_l));
            row.push(fmt_g6(m.m_ci));
            row.extend(m.counts.iter().map(|g| g.to_string()));
            row
        })
        .collect();
    write_table(path, &header, &rows)
}

/// Parse `metrics.csv` written for `spec`. Designs are snapped back onto
/// the grid and metrics recomputed from the integer counts, so a parsed table
/// equals the in-memory sweep exactly.
pub fn read_metrics(path: &Path, spec: &GridSpec, k: usize) -> Result<Vec<DesignMetrics>> {
    let header = metrics_header(k);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let designs = design_grid(spec);
    let cells = spec.weight_bins * spec.weight_bins;
    let recs = read_table(path, &header)?;
    recs.iter()
        .map(|r| {
            let mut c = [0.0; 4];
            for (i, slot) in c.iter_mut().enumerate() {
                *slot = field_f64(path, r, i)?;
            }
            let idx = grid_index(&Design::from_coords(c), spec)
                .ok_or_else(|| PipelineError::input(path, format!("design {c:?} is not on the grid")))?;
            let counts = (0..k)
                .map(|i| field_u64(path, r, 6 + i).map(|g| g as usize))
                .collect::<Result<Vec<_>>>()?;
            let m = DesignMetrics::from_counts(designs[idx], cells, counts);
            let (m_l, m_ci) = (field_f64(path, r, 4)?, field_f64(path, r, 5)?);
            if fmt_g6(m.m_l) != fmt_g6(m_l) || fmt_g6(m.m_ci) != fmt_g6(m_ci) {
                return Err(PipelineError::input(path, format!("metrics disagree with counts: {r:?}")));
            }
            Ok(m)
        })
        .collect()
}

/// Snap a design read back from CSV onto the grid, returning its index.
pub fn grid_index(design: &Design, spec: &GridSpec) -> Option<usize> {
    let axis = spec.design_axis();
    let snap = |v: f64| {
        axis.iter()
            .position(|a| (a - v).abs() <= 1e-5 * (1.0 + a.abs()))
    };
    let n = axis.len();
    let c = design.coords();
    let mut idx = 0;
    for v in c {
        idx = idx * n + snap(v)?;
    }
    Some(idx)
}
