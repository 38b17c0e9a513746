//! `coopt`: free-design versus fixed-baseline co-optimization study.
//!
//! Each run is stored as `coopt/runs/<mode>_<seed>.json` as soon as it
//! finishes; `--resume` reuses stored runs and rejects unreadable ones. The
//! CSV tables are cheap to derive, so they are always regenerated from the
//! stored runs, even when the stage is already stamped complete.

use std::path::{Path, PathBuf};

use anyhow::Context;
use morphoscape_core::coopt::{
    average_success_curve, coopt_run, CooptRun, DtwRecord, Mode,
};
use morphoscape_core::rng::mix_ids;
use morphoscape_core::stats::{mann_whitney_u, mean, pearson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{PipelineError, Result};
use crate::table::{field_f64, field_u64, fmt_g6, read_table, write_table};
use crate::{pool, stamp, Progress};

#[allow(missing_docs)]
pub const COOPT_DIR: &str = "coopt";
#[allow(missing_docs)]
pub const RUN_HEADER: [&str; 3] = ["eval_index", "best_success_count", "dtw_score"];
#[allow(missing_docs)]
pub const SUMMARY_HEADER: [&str; 10] =
    ["seed", "mode", "final_sum", "final_success_count", "l1x", "l1y", "l2x", "l2y", "w1", "w2"];
#[allow(missing_docs)]
pub const UTEST_HEADER: [&str; 9] =
    ["statistic", "u", "p", "p_greater", "p_less", "n1", "n2", "mean_free", "mean_fixed"];
#[allow(missing_docs)]
pub const CURVE_HEADER: [&str; 5] =
    ["eval_index", "free_mean", "free_half_width", "fixed_mean", "fixed_half_width"];
#[allow(missing_docs)]
pub const DTW_HEADER: [&str; 4] = ["bin", "eval_start", "eval_end", "mean_dtw"];

/// Serialized form of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    #[allow(missing_docs)]
    pub seed: u64,
    #[allow(missing_docs)]
    pub mode: String,
    /// Best-so-far success count after each evaluation.
    pub best_success: Vec<u8>,
    /// Design DTW score of each evaluated candidate.
    pub dtw: Option<Vec<f64>>,
    /// Whether each candidate entered the archive when evaluated.
    pub accepted: Option<Vec<bool>>,
    /// `(l1x, l1y, l2x, l2y, w1, w2)` of the final solution.
    pub final_vars: [f64; 6],
    #[allow(missing_docs)]
    pub final_objectives: Vec<f64>,
    #[allow(missing_docs)]
    pub final_success_count: usize,
    /// Candidate ids in the final archive.
    pub archive_ids: Vec<usize>,
    #[allow(missing_docs)]
    pub restarts: usize,
}

impl RunRecord {
    #[allow(missing_docs)]
    pub fn from_run(run: &CooptRun) -> Self {
        let (design, policy) = run.mode.decode(&run.final_candidate.vars);
        let c = design.coords();
        RunRecord {
            seed: run.seed,
            mode: run.mode.name().into(),
            best_success: run.eval_log.iter().map(|e| e.best_success_count as u8).collect(),
            dtw: run.dtw_log.as_ref().map(|l| l.iter().map(|r| r.score).collect()),
            accepted: run.dtw_log.as_ref().map(|l| l.iter().map(|r| r.accepted).collect()),
            final_vars: [c[0], c[1], c[2], c[3], policy.w1, policy.w2],
            final_objectives: run.final_candidate.objectives.clone(),
            final_success_count: run.final_candidate.success_count,
            archive_ids: run.archive.members.iter().map(|m| m.id).collect(),
            restarts: run.restarts,
        }
    }

    /// Best-so-far success count after the last evaluation.
    pub fn final_best(&self) -> f64 {
        self.best_success.last().copied().unwrap_or(0) as f64
    }

    fn dtw_records(&self) -> Option<Vec<DtwRecord>> {
        let (d, a) = (self.dtw.as_ref()?, self.accepted.as_ref()?);
        Some(d.iter().zip(a).map(|(&score, &accepted)| DtwRecord { score, accepted }).collect())
    }
}

/// Headline numbers of a co-optimization study.
#[derive(Debug, Clone, PartialEq)]
pub struct CooptSummary {
    /// Runs per mode: `(free, fixed)`.
    pub runs: (usize, usize),
    /// U statistic of free versus fixed final best-so-far success counts.
    pub u: f64,
    #[allow(missing_docs)]
    pub p_two_sided: f64,
    /// One-sided p for "free tends to be larger".
    pub p_greater: f64,
    #[allow(missing_docs)]
    pub mean_free: f64,
    #[allow(missing_docs)]
    pub mean_fixed: f64,
    /// Mean candidate DTW per evaluation bin over free-design runs.
    pub dtw_curve: Vec<f64>,
}

fn run_path(dir: &Path, mode: Mode, seed: u64) -> PathBuf {
    dir.join("runs").join(format!("{}_{seed}.json", mode.name()))
}

fn load_record(path: &Path, budget: usize) -> Result<RunRecord> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::input(path, e))?;
    let rec: RunRecord = serde_json::from_str(&text).map_err(|e| PipelineError::input(path, e))?;
    let dtw_ok = rec.dtw.as_ref().is_none_or(|d| d.len() == budget)
        && rec.accepted.as_ref().is_none_or(|a| a.len() == budget);
    if rec.best_success.len() != budget || !dtw_ok {
        return Err(PipelineError::input(path, "run log length differs from the budget"));
    }
    Ok(rec)
}

/// Run (or with `resume`, complete) both arms and write every table.
pub fn cmd_coopt(cfg: &RunConfig, resume: bool) -> Result<CooptSummary> {
    cfg.validate()?;
    cfg.write_resolved(&cfg.out)?;
    let dir = cfg.out.join(COOPT_DIR);
    std::fs::create_dir_all(dir.join("runs")).map_err(PipelineError::io(&dir))?;
    let digest = stamp::digest(cfg, &[])?;
    let budget = cfg.coopt.budget;
    let envs = cfg.environments();

    let mut todo = Vec::new();
    for mode in Mode::ALL {
        for &seed in &cfg.coopt.seeds {
            let path = run_path(&dir, mode, seed);
            if resume && path.exists() {
                load_record(&path, budget)?;
            } else {
                todo.push((mode, seed));
            }
        }
    }

    let progress = Progress::new("coopt: runs", todo.len());
    pool(cfg.effective_workers())?.install(|| {
        todo.par_iter().try_for_each(|&(mode, seed)| -> Result<()> {
            let run = coopt_run(&cfg.coopt_config(mode), &envs, mix_ids(&[cfg.study_seed, seed]))
                .with_context(|| format!("{} run, seed {seed}", mode.name()))?;
            let mut rec = RunRecord::from_run(&run);
            rec.seed = seed;
            let path = run_path(&dir, mode, seed);
            let tmp = path.with_extension("json.tmp");
            std::fs::write(&tmp, serde_json::to_vec(&rec).expect("record serializes"))
                .map_err(PipelineError::io(&tmp))?;
            std::fs::rename(&tmp, &path).map_err(PipelineError::io(&path))?;
            progress.tick();
            Ok(())
        })
    })?;

    let mut free = Vec::new();
    let mut fixed = Vec::new();
    for mode in Mode::ALL {
        for &seed in &cfg.coopt.seeds {
            let rec = load_record(&run_path(&dir, mode, seed), budget)?;
            match mode {
                Mode::FreeDesign => free.push(rec),
                Mode::FixedBaseline => fixed.push(rec),
            }
        }
    }
    write_tables(&dir, &free, &fixed, cfg.coopt.dtw_bin_width)?;
    stamp::mark_complete(&cfg.out, "coopt", &digest)?;
    load_coopt_summary(&cfg.out)
}

fn write_tables(dir: &Path, free: &[RunRecord], fixed: &[RunRecord], bin: usize) -> Result<()> {
    for rec in free.iter().chain(fixed) {
        let rows: Vec<Vec<String>> = rec
            .best_success
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let dtw = rec.dtw.as_ref().map_or(String::new(), |d| fmt_g6(d[i]));
                vec![i.to_string(), b.to_string(), dtw]
            })
            .collect();
        let path = dir.join(format!("{}_{}.csv", rec.mode, rec.seed));
        write_table(&path, &RUN_HEADER, &rows)?;
    }

    let summary: Vec<Vec<String>> = free
        .iter()
        .chain(fixed)
        .map(|r| {
            let mut row = vec![
                r.seed.to_string(),
                r.mode.clone(),
                fmt_g6(r.final_objectives.iter().sum()),
                r.final_success_count.to_string(),
            ];
            row.extend(r.final_vars.iter().map(|v| fmt_g6(*v)));
            row
        })
        .collect();
    write_table(&dir.join("summary.csv"), &SUMMARY_HEADER, &summary)?;

    let a: Vec<f64> = free.iter().map(RunRecord::final_best).collect();
    let b: Vec<f64> = fixed.iter().map(RunRecord::final_best).collect();
    let mw = mann_whitney_u(&a, &b).context("U test")?;
    write_table(
        &dir.join("mann_whitney.csv"),
        &UTEST_HEADER,
        &[vec![
            "final_best_success_count".into(),
            fmt_g6(mw.u),
            fmt_g6(mw.p),
            fmt_g6(mw.p_greater),
            fmt_g6(mw.p_less),
            mw.n1.to_string(),
            mw.n2.to_string(),
            fmt_g6(mean(&a)),
            fmt_g6(mean(&b)),
        ]],
    )?;

    let curve = |recs: &[RunRecord]| {
        let curves: Vec<Vec<f64>> = recs
            .iter()
            .map(|r| r.best_success.iter().map(|&b| b as f64).collect())
            .collect();
        average_success_curve(&curves).context("success curve")
    };
    let (cf, cx) = (curve(free)?, curve(fixed)?);
    let rows: Vec<Vec<String>> = (0..cf.mean.len())
        .map(|i| {
            vec![
                i.to_string(),
                fmt_g6(cf.mean[i]),
                fmt_g6(cf.half_width[i]),
                fmt_g6(cx.mean[i]),
                fmt_g6(cx.half_width[i]),
            ]
        })
        .collect();
    write_table(&dir.join("success_curve.csv"), &CURVE_HEADER, &rows)?;

    let logs: Vec<Vec<DtwRecord>> = free.iter().filter_map(RunRecord::dtw_records).collect();
    let rows: Vec<Vec<String>> = if logs.len() == free.len() && !logs.is_empty() {
        binned_dtw(&logs, bin)
            .iter()
            .enumerate()
            .map(|(i, m)| vec![i.to_string(), (i * bin).to_string(), ((i + 1) * bin).to_string(), fmt_g6(*m)])
            .collect()
    } else {
        Vec::new()
    };
    write_table(&dir.join("dtw_curve.csv"), &DTW_HEADER, &rows)
}

fn binned_dtw(logs: &[Vec<DtwRecord>], bin: usize) -> Vec<f64> {
    let len = logs.iter().map(Vec::len).min().unwrap_or(0);
    (0..len / bin)
        .map(|b| {
            let total: f64 = logs
                .iter()
                .map(|l| l[b * bin..(b + 1) * bin].iter().map(|r| r.score).sum::<f64>())
                .sum();
            total / (bin * logs.len()) as f64
        })
        .collect()
}

/// Read the study tables in `out/coopt`.
pub fn load_coopt_summary(out: &Path) -> Result<CooptSummary> {
    let dir = out.join(COOPT_DIR);
    let path = dir.join("mann_whitney.csv");
    let rows = read_table(&path, &UTEST_HEADER)?;
    let r = rows.first().ok_or_else(|| PipelineError::input(&path, "empty table"))?;
    let path_dtw = dir.join("dtw_curve.csv");
    let dtw_curve = read_table(&path_dtw, &DTW_HEADER)?
        .iter()
        .map(|row| field_f64(&path_dtw, row, 3))
        .collect::<Result<_>>()?;
    Ok(CooptSummary {
        runs: (field_u64(&path, r, 5)? as usize, field_u64(&path, r, 6)? as usize),
        u: field_f64(&path, r, 1)?,
        p_two_sided: field_f64(&path, r, 2)?,
        p_greater: field_f64(&path, r, 3)?,
        mean_free: field_f64(&path, r, 7)?,
        mean_fixed: field_f64(&path, r, 8)?,
        dtw_curve,
    })
}

/// Least-squares slope and Pearson correlation of a curve against its
/// index. `None` when the curve is shorter than 3 points or flat.
pub fn trend(curve: &[f64]) -> Option<(f64, f64, f64)> {
    let xs: Vec<f64> = (0..curve.len()).map(|i| i as f64).collect();
    let rep = pearson(&xs, curve).ok()?;
    let sx = morphoscape_core::stats::sample_sd(&xs);
    let sy = morphoscape_core::stats::sample_sd(curve);
    Some((rep.r * sy / sx, rep.r, rep.p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trend_of_a_line() {
        let (slope, r, p) = trend(&[5.0, 4.0, 3.0, 2.0]).unwrap();
        assert!((slope + 1.0).abs() < 1e-12);
        assert!((r + 1.0).abs() < 1e-12);
        assert!(p < 1e-6);
        assert!(trend(&[1.0, 1.0, 1.0]).is_none());
    }

    #[test]
    fn binning_pools_runs() {
        let rec = |s: &[f64]| s.iter().map(|&score| DtwRecord { score, accepted: false }).collect::<Vec<_>>();
        let logs = vec![rec(&[1.0, 3.0, 5.0, 7.0, 9.0]), rec(&[3.0, 5.0, 7.0, 9.0, 11.0])];
        assert_eq!(binned_dtw(&logs, 2), vec![3.0, 7.0]);
    }
}
