//! `report`: headline numbers of a finished pipeline as one JSON document.

use std::path::Path;

use morphoscape_core::stats::pearson;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::cooptimize::{load_coopt_summary, trend};
use crate::error::{PipelineError, Result};
use crate::sweep::{read_metrics, METRICS_FILE};
use crate::train::load_train_summary;

#[allow(missing_docs)]
pub const REPORT_FILE: &str = "report.json";

/// Highest-`m_l` design of the sweep; the first in grid order wins ties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestDesign {
    /// `(l1x, l1y, l2x, l2y)`.
    pub coords: [f64; 4],
    #[allow(missing_docs)]
    pub m_l: f64,
    #[allow(missing_docs)]
    pub m_ci: f64,
}

/// A Pearson result; `r` and `p` are `None` when undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    #[allow(missing_docs)]
    pub r: Option<f64>,
    #[allow(missing_docs)]
    pub p: Option<f64>,
    #[allow(missing_docs)]
    pub n: usize,
}

/// Training-efficiency correlation of one metric and method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyCorrelation {
    #[allow(missing_docs)]
    pub metric: String,
    #[allow(missing_docs)]
    pub method: String,
    #[allow(missing_docs)]
    #[serde(flatten)]
    pub corr: Correlation,
}

/// Free versus fixed U test on final best-so-far success counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UTest {
    #[allow(missing_docs)]
    pub u: f64,
    #[allow(missing_docs)]
    pub p: f64,
    /// One-sided, alternative "free is larger".
    pub p_greater: f64,
    #[allow(missing_docs)]
    pub n1: usize,
    #[allow(missing_docs)]
    pub n2: usize,
    #[allow(missing_docs)]
    pub mean_free: f64,
    #[allow(missing_docs)]
    pub mean_fixed: f64,
}

/// Linear trend of the binned DTW curve against bin index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    #[allow(missing_docs)]
    pub slope: Option<f64>,
    #[allow(missing_docs)]
    pub r: Option<f64>,
    #[allow(missing_docs)]
    pub p: Option<f64>,
    #[allow(missing_docs)]
    pub bins: usize,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    #[allow(missing_docs)]
    pub best_ml_design: BestDesign,
    /// `m_l` against `m_ci` over designs that solve at least one cell.
    pub metric_correlation: Correlation,
    #[allow(missing_docs)]
    pub correlations: Vec<EfficiencyCorrelation>,
    #[allow(missing_docs)]
    pub u_test: UTest,
    #[allow(missing_docs)]
    pub dtw_trend: Trend,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Build the report from the tables in `out` and write `out/report.json`.
/// The grid is taken from the resolved config the other stages left there.
pub fn cmd_report(out: &Path) -> Result<Report> {
    let cfg_path = out.join("config.resolved.json");
    let text = std::fs::read_to_string(&cfg_path).map_err(|e| PipelineError::input(&cfg_path, e))?;
    let mut cfg = RunConfig::from_json(&text, None).map_err(|e| PipelineError::input(&cfg_path, e))?;
    cfg.out = out.into();
    let report = build_report(&cfg)?;
    let path = out.join(REPORT_FILE);
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(&path, text + "\n").map_err(PipelineError::io(&path))?;
    Ok(report)
}

/// Assemble the report without writing it.
pub fn build_report(cfg: &RunConfig) -> Result<Report> {
    let out: &Path = &cfg.out;
    let k = cfg.environments().len();
    let metrics_path = out.join(METRICS_FILE);
    let metrics = read_metrics(&metrics_path, &cfg.grid_spec(), k)?;
    let best = metrics
        .iter()
        .reduce(|best, m| if m.m_l > best.m_l { m } else { best })
        .ok_or_else(|| PipelineError::input(&metrics_path, "no designs"))?;

    let solved: Vec<_> = metrics.iter().filter(|m| m.counts.iter().sum::<usize>() > 0).collect();
    let ml: Vec<f64> = solved.iter().map(|m| m.m_l).collect();
    let mci: Vec<f64> = solved.iter().map(|m| m.m_ci).collect();
    let metric_correlation = match pearson(&ml, &mci) {
        Ok(rep) => Correlation { r: finite(rep.r), p: finite(rep.p), n: rep.n },
        Err(_) => Correlation { r: None, p: None, n: solved.len() },
    };

    let train = load_train_summary(out)?;
    let correlations = train
        .correlations
        .into_iter()
        .map(|c| EfficiencyCorrelation {
            metric: c.metric,
            method: c.method,
            corr: Correlation { r: finite(c.r), p: finite(c.p), n: c.n },
        })
        .collect();

    let co = load_coopt_summary(out)?;
    let t = trend(&co.dtw_curve);
    Ok(Report {
        best_ml_design: BestDesign { coords: best.design.coords(), m_l: best.m_l, m_ci: best.m_ci },
        metric_correlation,
        correlations,
        u_test: UTest {
            u: co.u,
            p: co.p_two_sided,
            p_greater: co.p_greater,
            n1: co.runs.0,
            n2: co.runs.1,
            mean_free: co.mean_free,
            mean_fixed: co.mean_fixed,
        },
        dtw_trend: Trend {
            slope: t.map(|t| t.0),
            r: t.map(|t| t.1),
            p: t.map(|t| t.2),
            bins: co.dtw_curve.len(),
        },
    })
}
