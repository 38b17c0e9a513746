//! Correlation, rank tests and dynamic time warping.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::dynamics::SimResult;
use crate::math;

/// Most points a sensor trace keeps before alignment.
pub const DTW_MAX_POINTS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[allow(missing_docs)]
pub enum StatsError {
    #[error("input sequences differ in length")]
    LengthMismatch,
    #[error("need at least {0} samples")]
    TooFewSamples(usize),
    #[error("zero variance in an input")]
    DegenerateVariance,
    #[error("simulation result is missing a sensor trace")]
    MissingTrace,
    #[error("empty signal")]
    EmptySignal,
}

/// Pearson correlation with its two-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationReport {
    #[allow(missing_docs)]
    pub r: f64,
    #[allow(missing_docs)]
    pub p: f64,
    #[allow(missing_docs)]
    pub n: usize,
}

#[allow(missing_docs)]
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    math::sqrt(ss / (xs.len() - 1) as f64)
}

/// Sample Pearson r; p from Student's t with `n - 2` degrees of freedom.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<CorrelationReport, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch);
    }
    let n = xs.len();
    if n < 3 {
        return Err(StatsError::TooFewSamples(3));
    }
    let mx = mean(xs);
    let my = mean(ys);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    let r = (sxy / math::sqrt(sxx * syy)).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p = if r.abs() == 1.0 {
        0.0
    } else {
        let t = r * math::sqrt(df / (1.0 - r * r));
        math::student_t_two_sided(t, df)
    };
    Ok(CorrelationReport { r, p, n })
}

/// Result of a Mann-Whitney U test of sample `a` against sample `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// Pairs `(x in a, y in b)` with `x > y`, ties counted one half.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
    /// One-sided p-value for the alternative "`a` tends to be larger".
    pub p_greater: f64,
    /// One-sided p-value for the alternative "`a` tends to be smaller".
    pub p_less: f64,
    #[allow(missing_docs)]
    pub n1: usize,
    #[allow(missing_docs)]
    pub n2: usize,
}

/// Midranks (1-based) of `values`, plus the tie correction term `sum(t^3 - t)`.
pub fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap_or(Ordering::Equal));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut tie_term = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        let t = (end - start) as f64;
        tie_term += t * t * t - t;
        start = end;
    }
    (ranks, tie_term)
}

/// Rank-sum U statistic with a normal approximation: tie-corrected variance
/// and a 0.5 continuity correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::TooFewSamples(1));
    }
    let (n1, n2) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, tie_term) = midranks(&pooled);
    let rank_sum_a: f64 = ranks[..n1].iter().sum();
    let u = rank_sum_a - (n1 * (n1 + 1)) as f64 / 2.0;

    let (f1, f2) = (n1 as f64, n2 as f64);
    let n = f1 + f2;
    let mu = f1 * f2 / 2.0;
    let var = if n > 1.0 {
        f1 * f2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)))
    } else {
        0.0
    };
    let (p, p_greater, p_less) = if var <= 0.0 {
        (1.0, 1.0, 1.0)
    } else {
        let sd = math::sqrt(var);
        let two = 2.0 * math::normal_sf(((u - mu).abs() - 0.5) / sd);
        (
            two.min(1.0),
            math::normal_sf((u - mu - 0.5) / sd),
            math::normal_cdf((u - mu + 0.5) / sd),
        )
    };
    Ok(MannWhitney {
        u,
        p,
        p_greater,
        p_less,
        n1,
        n2,
    })
}

/// Unconstrained dynamic time warping cost with unit step weights and
/// `|a_i - b_j|` as the local cost.
pub fn dtw(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySignal);
    }
    let m = b.len();
    let mut prev = alloc::vec![f64::INFINITY; m + 1];
    let mut cur = alloc::vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for &ai in a {
        cur[0] = f64::INFINITY;
        for j in 1..=m {
            let best = prev[j - 1].min(prev[j]).min(cur[j - 1]);
            cur[j] = (ai - b[j - 1]).abs() + best;
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m])
}

/// Uniformly subsample `trace` to at most `max_points` values, keeping the
/// first sample and every `ceil(len / max_points)`-th after it.
pub fn stride_trace(trace: &[f64], max_points: usize) -> Vec<f64> {
    let stride = trace.len().div_ceil(max_points.max(1)).max(1);
    trace.iter().step_by(stride).copied().collect()
}

/// Mean cross-environment DTW distance of each sensor, and their average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtwScore {
    /// Mean pairwise DTW for sensor 1 and sensor 2.
    pub per_sensor: [f64; 2],
    #[allow(missing_docs)]
    pub aggregate: f64,
}

/// Average DTW over all environment pairs, per sensor, then across sensors.
///
/// Traces longer than [`DTW_MAX_POINTS`] are strided down first.
pub fn design_dtw_score(results: &[SimResult]) -> Result<DtwScore, StatsError> {
    design_dtw_score_capped(results, DTW_MAX_POINTS)
}

/// [`design_dtw_score`] with an explicit striding cap.
pub fn design_dtw_score_capped(results: &[SimResult], max_points: usize) -> Result<DtwScore, StatsError> {
    if results.len() < 2 {
        return Err(StatsError::TooFewSamples(2));
    }
    let mut traces: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
    for r in results {
        let (Some(t1), Some(t2)) = (&r.sensor_trace_1, &r.sensor_trace_2) else {
            return Err(StatsError::MissingTrace);
        };
        if t1.is_empty() || t2.is_empty() {
            return Err(StatsError::EmptySignal);
        }
        traces[0].push(stride_trace(t1, max_points));
        traces[1].push(stride_trace(t2, max_points));
    }
    let mut per_sensor = [0.0; 2];
    for (sensor, ts) in traces.iter().enumerate() {
        let mut total = 0.0;
        let mut pairs = 0usize;
        for i in 0..ts.len() {
            for j in i + 1..ts.len() {
                total += dtw(&ts[i], &ts[j])?;
                pairs += 1;
            }
        }
        per_sensor[sensor] = total / pairs as f64;
    }
    Ok(DtwScore {
        per_sensor,
        aggregate: 0.5 * (per_sensor[0] + per_sensor[1]),
    })
}
