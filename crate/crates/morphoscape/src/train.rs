//! `train`: optimizer runs on sampled designs and the metric correlations.

use std::path::Path;

use anyhow::Context;
use morphoscape_core::landscape::DesignMetrics;
use morphoscape_core::optimize::{censored_mean, DesignObjective};
use morphoscape_core::rng::{mix_ids, unit_rng};
use morphoscape_core::stats::{pearson, CorrelationReport};
use morphoscape_core::{Method, TrainRun};
use rayon::prelude::*;

use crate::config::{RunConfig, Sample};
use crate::error::{PipelineError, Result};
use crate::sweep::{grid_index, read_metrics, METRICS_FILE};
use crate::table::{field_f64, field_u64, fmt_g6, read_table, write_table};
use crate::{pool, stamp, Progress};

#[allow(missing_docs)]
pub const TRAINING_FILE: &str = "training.csv";
#[allow(missing_docs)]
pub const EFFICIENCY_FILE: &str = "efficiency.csv";
#[allow(missing_docs)]
pub const CORRELATION_FILE: &str = "correlations.csv";

#[allow(missing_docs)]
pub const TRAINING_HEADER: [&str; 9] =
    ["l1x", "l1y", "l2x", "l2y", "method", "seed", "evals_to_success", "censored", "best_loss"];
#[allow(missing_docs)]
pub const EFFICIENCY_HEADER: [&str; 10] =
    ["l1x", "l1y", "l2x", "l2y", "method", "mean_evals", "censored_runs", "runs", "m_l", "m_ci"];
#[allow(missing_docs)]
pub const CORRELATION_HEADER: [&str; 5] = ["metric", "method", "r", "p", "n"];

const SAMPLE_STREAM: u64 = 0x5A_4D_91_E0;

/// Row positions of the designs to train, in ascending order.
///
/// Stratified sampling ranks designs by `m_l` (grid order breaks ties),
/// cuts the ranking into four equal-count quartiles and draws
/// `per_quartile` designs from each without replacement.
pub fn select_designs(metrics: &[DesignMetrics], sample: &Sample, study_seed: u64) -> Vec<usize> {
    match sample {
        Sample::All => (0..metrics.len()).collect(),
        Sample::Stratified { per_quartile } => {
            let mut order: Vec<usize> = (0..metrics.len()).collect();
            order.sort_by(|&a, &b| metrics[a].m_l.total_cmp(&metrics[b].m_l).then(a.cmp(&b)));
            let mut rng = unit_rng(study_seed, SAMPLE_STREAM);
            let n = order.len();
            let mut chosen = Vec::new();
            for q in 0..4 {
                let stratum = &order[q * n / 4..(q + 1) * n / 4];
                let take = (*per_quartile).min(stratum.len());
                let picks = rand::seq::index::sample(&mut rng, stratum.len(), take);
                chosen.extend(picks.iter().map(|i| stratum[i]));
            }
            chosen.sort_unstable();
            chosen
        }
    }
}

/// In-memory result of a training study.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput {
    /// `(metrics row, runs)` for every trained design and method.
    pub groups: Vec<TrainGroup>,
    /// Eight reports in `(m_l, m_ci) x method` order.
    pub correlations: Vec<(String, Method, Option<CorrelationReport>)>,
}

/// Runs of one method on one design.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainGroup {
    #[allow(missing_docs)]
    pub metrics: DesignMetrics,
    #[allow(missing_docs)]
    pub method: Method,
    #[allow(missing_docs)]
    pub runs: Vec<TrainRun>,
    /// Configured seed of each run.
    pub seeds: Vec<u64>,
    /// Censored mean evaluations to full success.
    pub mean_evals: f64,
}

/// One row of `correlations.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    #[allow(missing_docs)]
    pub metric: String,
    #[allow(missing_docs)]
    pub method: String,
    /// NaN when either variable had zero variance.
    pub r: f64,
    #[allow(missing_docs)]
    pub p: f64,
    #[allow(missing_docs)]
    pub n: usize,
}

/// What `train` left on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    #[allow(missing_docs)]
    pub training_rows: usize,
    #[allow(missing_docs)]
    pub efficiency_rows: usize,
    #[allow(missing_docs)]
    pub correlations: Vec<CorrelationRow>,
}

/// Read the training outputs in `dir`.
pub fn load_train_summary(dir: &Path) -> Result<TrainSummary> {
    let training_rows = read_table(&dir.join(TRAINING_FILE), &TRAINING_HEADER)?.len();
    let efficiency_rows = read_table(&dir.join(EFFICIENCY_FILE), &EFFICIENCY_HEADER)?.len();
    let path = dir.join(CORRELATION_FILE);
    let correlations = read_table(&path, &CORRELATION_HEADER)?
        .iter()
        .map(|r| {
            Ok(CorrelationRow {
                metric: r[0].to_string(),
                method: r[1].to_string(),
                r: field_f64(&path, r, 2)?,
                p: field_f64(&path, r, 3)?,
                n: field_u64(&path, r, 4)? as usize,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TrainSummary {
        training_rows,
        efficiency_rows,
        correlations,
    })
}

/// Train every sampled design with every method and seed, then write
/// `training.csv`, `efficiency.csv` and `correlations.csv`. With `resume`, a
/// study already completed under the same config and sweep is not rerun.
pub fn cmd_train(cfg: &RunConfig, resume: bool) -> Result<TrainSummary> {
    cfg.validate()?;
    let metrics_path = cfg.out.join(METRICS_FILE);
    if !metrics_path.exists() {
        return Err(PipelineError::input(&metrics_path, "run `sweep` first"));
    }
    let digest = stamp::digest(cfg, &[&metrics_path])?;
    if resume && stamp::is_complete(&cfg.out, "train", &digest) {
        if let Ok(summary) = load_train_summary(&cfg.out) {
            return Ok(summary);
        }
    }
    run_study(cfg)?;
    stamp::mark_complete(&cfg.out, "train", &digest)?;
    load_train_summary(&cfg.out)
}

/// Run the study and write its tables without consulting stamps.
pub fn run_study(cfg: &RunConfig) -> Result<TrainOutput> {
    let metrics_path = cfg.out.join(METRICS_FILE);
    let spec = cfg.grid_spec();
    let envs = cfg.environments();
    let metrics = read_metrics(&metrics_path, &spec, envs.len())?;
    cfg.write_resolved(&cfg.out)?;
    let methods = cfg.methods()?;
    let sim = cfg.sim_config();
    let budget = cfg.train.budget;

    let selected = select_designs(&metrics, &cfg.train.sample, cfg.study_seed);
    let units: Vec<(usize, Method, u64)> = selected
        .iter()
        .flat_map(|&row| {
            methods
                .iter()
                .flat_map(move |&m| cfg.train.seeds.iter().map(move |&s| (row, m, s)))
        })
        .collect();

    let progress = Progress::new("train: runs", units.len());
    let runs: Vec<TrainRun> = pool(cfg.effective_workers())?.install(|| {
        units
            .par_iter()
            .map(|&(row, method, seed)| {
                let design = metrics[row].design;
                let idx = grid_index(&design, &spec).expect("metrics rows lie on the grid") as u64;
                let run_seed = mix_ids(&[cfg.study_seed, idx, seed]);
                let mut obj = DesignObjective::new(design, &envs, sim);
                method
                    .run(&mut obj, budget, run_seed)
                    .map(|mut r| {
                        r.seed = seed;
                        progress.tick();
                        r
                    })
                    .with_context(|| format!("training design row {row} with {method}"))
            })
            .collect::<anyhow::Result<Vec<_>>>()
    })?;

    let per_group = cfg.train.seeds.len();
    let groups: Vec<TrainGroup> = units
        .chunks(per_group)
        .zip(runs.chunks(per_group))
        .map(|(u, r)| TrainGroup {
            metrics: metrics[u[0].0].clone(),
            method: u[0].1,
            runs: r.to_vec(),
            seeds: u.iter().map(|x| x.2).collect(),
            mean_evals: censored_mean(r, budget),
        })
        .collect();

    let mut correlations = Vec::new();
    for metric in ["m_l", "m_ci"] {
        for &method in &methods {
            let (xs, ys): (Vec<f64>, Vec<f64>) = groups
                .iter()
                .filter(|g| g.method == method)
                .map(|g| {
                    let x = if metric == "m_l" { g.metrics.m_l } else { g.metrics.m_ci };
                    (x, g.mean_evals)
                })
                .unzip();
            correlations.push((metric.to_string(), method, pearson(&xs, &ys).ok()));
        }
    }

    let out = TrainOutput { groups, correlations };
    write_outputs(&cfg.out, &out, budget)?;
    Ok(out)
}

fn coords(m: &DesignMetrics) -> Vec<String> {
    m.design.coords().iter().map(|c| fmt_g6(*c)).collect()
}

fn write_outputs(dir: &Path, out: &TrainOutput, budget: usize) -> Result<()> {
    let mut training = Vec::new();
    let mut efficiency = Vec::new();
    for g in &out.groups {
        for (run, seed) in g.runs.iter().zip(&g.seeds) {
            let mut row = coords(&g.metrics);
            row.push(g.method.name().into());
            row.push(seed.to_string());
            row.push(run.evals_to_full_success.unwrap_or(budget).to_string());
            row.push(run.evals_to_full_success.is_none().to_string());
            row.push(fmt_g6(run.best_loss));
            training.push(row);
        }
        let mut row = coords(&g.metrics);
        row.push(g.method.name().into());
        row.push(fmt_g6(g.mean_evals));
        row.push(g.runs.iter().filter(|r| r.evals_to_full_success.is_none()).count().to_string());
        row.push(g.runs.len().to_string());
        row.push(fmt_g6(g.metrics.m_l));
        row.push(fmt_g6(g.metrics.m_ci));
        efficiency.push(row);
    }
    let correlations: Vec<Vec<String>> = out
        .correlations
        .iter()
        .map(|(metric, method, rep)| {
            let n = out.groups.iter().filter(|g| g.method == *method).count();
            match rep {
                Some(r) => vec![metric.clone(), method.name().into(), fmt_g6(r.r), fmt_g6(r.p), r.n.to_string()],
                None => vec![metric.clone(), method.name().into(), "nan".into(), "nan".into(), n.to_string()],
            }
        })
        .collect();
    write_table(&dir.join(TRAINING_FILE), &TRAINING_HEADER, &training)?;
    write_table(&dir.join(EFFICIENCY_FILE), &EFFICIENCY_HEADER, &efficiency)?;
    write_table(&dir.join(CORRELATION_FILE), &CORRELATION_HEADER, &correlations)
}
