//! Success regions of the policy grid and the metrics computed from them.
//!
//! For a fixed design, each environment `k` yields a binary matrix over the
//! `(w1, w2)` grid marking the weights that reach the light. Summing those
//! matrices gives the overlap matrix `O`; with `g_k(O)` the number of cells
//! equal to `k`:
//!
//! ```text
//! learnability  = g_K / n^2
//! ci_resistance = g_K / (g_1 + ... + g_K)      (0 when O is all zero)
//! ```

use alloc::vec::Vec;

use crate::dynamics::{simulate_many, Design, EnvironmentSet, Policy, Pose, SimConfig, SimError, SimJob};

/// Errors raised while building grids or matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum LandscapeError {
    /// Matrices passed to [`overlap`] do not share one shape.
    #[error("success matrices have different shapes")]
    ShapeMismatch,
    /// [`overlap`] was given no matrices, or more than 255.
    #[error("overlap needs between 1 and 255 matrices")]
    BadEnvironmentCount,
    #[allow(missing_docs)]
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[allow(missing_docs)]
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Resolution and bounds of the design and weight sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Grid points per sensor coordinate.
    pub design_bins: usize,
    /// Grid points per weight.
    pub weight_bins: usize,
    #[allow(missing_docs)]
    pub design_lo: f64,
    #[allow(missing_docs)]
    pub design_hi: f64,
    #[allow(missing_docs)]
    pub weight_lo: f64,
    #[allow(missing_docs)]
    pub weight_hi: f64,
}

impl GridSpec {
    /// 5 design bins, 41 weight bins.
    pub const fn desk() -> Self {
        GridSpec {
            design_bins: 5,
            weight_bins: 41,
            design_lo: -0.5,
            design_hi: 0.5,
            weight_lo: -1.0,
            weight_hi: 1.0,
        }
    }

    /// 9 design bins (6561 designs), 121 weight bins (14641 policies).
    pub const fn paper() -> Self {
        GridSpec {
            design_bins: 9,
            weight_bins: 121,
            ..Self::desk()
        }
    }

    /// Both bin counts must be at least 2, except that a single point is
    /// allowed when its bounds coincide.
    pub fn validate(&self) -> Result<(), LandscapeError> {
        check_axis(self.design_bins, self.design_lo, self.design_hi)?;
        check_axis(self.weight_bins, self.weight_lo, self.weight_hi)?;
        if self.design_lo < -0.5 || self.design_hi > 0.5 {
            return Err(LandscapeError::InvalidGrid("design bounds exceed [-0.5, 0.5]"));
        }
        if self.weight_lo < -1.0 || self.weight_hi > 1.0 {
            return Err(LandscapeError::InvalidGrid("weight bounds exceed [-1, 1]"));
        }
        Ok(())
    }

    /// Evenly spaced sensor coordinates, both endpoints included.
    pub fn design_axis(&self) -> Vec<f64> {
        linspace(self.design_lo, self.design_hi, self.design_bins)
    }

    /// Evenly spaced weight values, both endpoints included.
    pub fn weight_axis(&self) -> Vec<f64> {
        linspace(self.weight_lo, self.weight_hi, self.weight_bins)
    }

    /// Number of designs, `design_bins^4`.
    pub fn design_count(&self) -> usize {
        self.design_bins.pow(4)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::desk()
    }
}

fn check_axis(bins: usize, lo: f64, hi: f64) -> Result<(), LandscapeError> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(LandscapeError::InvalidGrid("bounds must be finite with lo <= hi"));
    }
    match bins {
        0 => Err(LandscapeError::InvalidGrid("bin count must be positive")),
        1 if lo != hi => Err(LandscapeError::InvalidGrid(
            "a single bin requires lo == hi",
        )),
        _ if bins >= 2 && lo == hi => Err(LandscapeError::InvalidGrid(
            "several bins require lo < hi",
        )),
        _ => Ok(()),
    }
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![lo],
        _ => {
            let span = hi - lo;
            let last = (n - 1) as f64;
            (0..n)
                .map(|i| if i + 1 == n { hi } else { lo + span * (i as f64 / last) })
                .collect()
        }
    }
}

/// Every design on the grid, ordered `l1x, l1y, l2x, l2y` with `l2y` fastest.
pub fn design_grid(spec: &GridSpec) -> Vec<Design> {
    let axis = spec.design_axis();
    let mut out = Vec::with_capacity(spec.design_count());
    for &a in &axis {
        for &b in &axis {
            for &c in &axis {
                for &d in &axis {
                    out.push(Design::from_coords([a, b, c, d]));
                }
            }
        }
    }
    out
}

/// Every policy on the grid in row-major `(w1 index, w2 index)` order.
pub fn weight_grid(spec: &GridSpec) -> Vec<Policy> {
    let axis = spec.weight_axis();
    let mut out = Vec::with_capacity(axis.len() * axis.len());
    for &w1 in &axis {
        for &w2 in &axis {
            out.push(Policy { w1, w2 });
        }
    }
    out
}

/// Packed `n x n` bit matrix, rows indexed by `w1`, columns by `w2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuccessMatrix {
    n: usize,
    bits: Vec<u64>,
    /// Environment this matrix was computed for.
    pub env_index: usize,
}

impl SuccessMatrix {
    /// All-zero matrix.
    pub fn new(n: usize, env_index: usize) -> Self {
        SuccessMatrix {
            n,
            bits: alloc::vec![0; (n * n).div_ceil(64)],
            env_index,
        }
    }

    /// Build from a cell predicate.
    pub fn from_fn(n: usize, env_index: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::new(n, env_index);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Side length.
    pub fn n(&self) -> usize {
        self.n
    }

    #[allow(missing_docs)]
    pub fn get(&self, i: usize, j: usize) -> bool {
        let idx = i * self.n + j;
        self.bits[idx / 64] >> (idx % 64) & 1 == 1
    }

    #[allow(missing_docs)]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        let idx = i * self.n + j;
        let mask = 1u64 << (idx % 64);
        if value {
            self.bits[idx / 64] |= mask;
        } else {
            self.bits[idx / 64] &= !mask;
        }
    }

    /// Number of successful cells.
    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Raw packed words, little-endian bit order within each word.
    pub fn words(&self) -> &[u64] {
        &self.bits
    }

    /// Inverse of [`SuccessMatrix::words`].
    pub fn from_words(n: usize, env_index: usize, words: Vec<u64>) -> Option<Self> {
        (words.len() == (n * n).div_ceil(64)).then_some(SuccessMatrix {
            n,
            bits: words,
            env_index,
        })
    }
}

/// Element-wise sum of per-environment success matrices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapMatrix {
    n: usize,
    values: Vec<u8>,
}

impl OverlapMatrix {
    /// Build directly from row-major cell values.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self, LandscapeError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(LandscapeError::ShapeMismatch);
        }
        Ok(OverlapMatrix {
            n,
            values: rows.concat(),
        })
    }

    #[allow(missing_docs)]
    pub fn n(&self) -> usize {
        self.n
    }

    #[allow(missing_docs)]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.values[i * self.n + j]
    }

    /// `g_k`: number of cells whose value equals `k`.
    pub fn count_eq(&self, k: u8) -> usize {
        self.values.iter().filter(|&&v| v == k).count()
    }

    /// True when no cell solves any environment.
    pub fn is_null(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }
}

/// Sum `matrices` cell by cell.
pub fn overlap(matrices: &[SuccessMatrix]) -> Result<OverlapMatrix, LandscapeError> {
    let first = matrices.first().ok_or(LandscapeError::BadEnvironmentCount)?;
    if matrices.len() > u8::MAX as usize {
        return Err(LandscapeError::BadEnvironmentCount);
    }
    let n = first.n;
    if matrices.iter().any(|m| m.n != n) {
        return Err(LandscapeError::ShapeMismatch);
    }
    let mut values = alloc::vec![0u8; n * n];
    for m in matrices {
        for (idx, v) in values.iter_mut().enumerate() {
            *v += (m.bits[idx / 64] >> (idx % 64) & 1) as u8;
        }
    }
    Ok(OverlapMatrix { n, values })
}

/// Fraction of the grid that solves all `k` environments.
pub fn learnability(o: &OverlapMatrix, k: usize) -> f64 {
    if o.n == 0 {
        return 0.0;
    }
    o.count_eq(k as u8) as f64 / (o.n * o.n) as f64
}

/// Generalist cells over cells solving at least one environment.
pub fn ci_resistance(o: &OverlapMatrix, k: usize) -> f64 {
    let solved: usize = (1..=k).map(|v| o.count_eq(v as u8)).sum();
    if solved == 0 {
        0.0
    } else {
        o.count_eq(k as u8) as f64 / solved as f64
    }
}

/// Success matrix of `design` in the environment starting at `env_start`.
pub fn success_matrix(
    design: &Design,
    env_index: usize,
    env_start: &Pose,
    spec: &GridSpec,
    cfg: &SimConfig,
) -> Result<SuccessMatrix, LandscapeError> {
    let one = EnvironmentSet {
        start_poses: alloc::vec![*env_start],
    };
    let mut m = success_matrices(design, &one, spec, cfg)?;
    let mut out = m.pop().expect("one environment");
    out.env_index = env_index;
    Ok(out)
}

/// Success matrices for every environment, simulated as one batch.
pub fn success_matrices(
    design: &Design,
    envs: &EnvironmentSet,
    spec: &GridSpec,
    cfg: &SimConfig,
) -> Result<Vec<SuccessMatrix>, LandscapeError> {
    spec.validate()?;
    let policies = weight_grid(spec);
    let n = spec.weight_bins;
    let k = envs.len();
    let mut jobs = Vec::with_capacity(policies.len() * k);
    for policy in &policies {
        for start in &envs.start_poses {
            jobs.push(SimJob {
                policy: *policy,
                start: *start,
            });
        }
    }
    let results = simulate_many(design, &jobs, cfg)?;
    let mut out: Vec<SuccessMatrix> = (0..k).map(|e| SuccessMatrix::new(n, e)).collect();
    for (idx, r) in results.iter().enumerate() {
        if r.success {
            let cell = idx / k;
            out[idx % k].set(cell / n, cell % n, true);
        }
    }
    Ok(out)
}

/// Metrics of one design.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMetrics {
    #[allow(missing_docs)]
    pub design: Design,
    /// Learnability.
    pub m_l: f64,
    /// Resistance to catastrophic interference.
    pub m_ci: f64,
    /// `g_1 ..= g_K`.
    pub counts: Vec<usize>,
}

impl DesignMetrics {
    /// Metrics derived from an overlap matrix over `k` environments.
    pub fn from_overlap(design: Design, o: &OverlapMatrix, k: usize) -> Self {
        DesignMetrics {
            design,
            m_l: learnability(o, k),
            m_ci: ci_resistance(o, k),
            counts: (1..=k).map(|v| o.count_eq(v as u8)).collect(),
        }
    }

    /// Metrics from `g_1 ..= g_K` on a grid of `cells` weight pairs.
    pub fn from_counts(design: Design, cells: usize, counts: Vec<usize>) -> Self {
        let full = counts.last().copied().unwrap_or(0);
        let solved: usize = counts.iter().sum();
        DesignMetrics {
            design,
            m_l: if cells == 0 { 0.0 } else { full as f64 / cells as f64 },
            m_ci: if solved == 0 { 0.0 } else { full as f64 / solved as f64 },
            counts,
        }
    }

    /// Cells solving at least one environment.
    pub fn solved_any(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Full per-design computation: matrices, overlap, metrics.
pub fn design_metrics(
    design: &Design,
    envs: &EnvironmentSet,
    spec: &GridSpec,
    cfg: &SimConfig,
) -> Result<DesignMetrics, LandscapeError> {
    let matrices = success_matrices(design, envs, spec, cfg)?;
    let o = overlap(&matrices)?;
    Ok(DesignMetrics::from_overlap(*design, &o, envs.len()))
}

/// Sequential sweep over every grid design. The `morphoscape` crate provides
/// the parallel, checkpointed version.
pub fn sweep(
    spec: &GridSpec,
    envs: &EnvironmentSet,
    cfg: &SimConfig,
) -> Result<Vec<DesignMetrics>, LandscapeError> {
    design_grid(spec)
        .iter()
        .map(|d| design_metrics(d, envs, spec, cfg))
        .collect()
}

/// Reflection of a design across the body's long axis with the sensors
/// swapped: `(mirror(ell2), mirror(ell1))`.
///
/// Reflecting the world across the x-axis maps a robot with this design and
/// weights `(w2, w1)` onto the original robot with `(w1, w2)`, so on a
/// mirror-closed environment set both designs have identical metrics.
pub fn mirror_partner(design: &Design) -> Design {
    Design {
        ell1: design.ell2.mirror_y(),
        ell2: design.ell1.mirror_y(),
    }
}

/// True when every start pose `(x, y, a)` has its reflection `(x, -y, -a)`
/// in the set.
pub fn is_mirror_closed(envs: &EnvironmentSet) -> bool {
    envs.start_poses.iter().all(|p| {
        let m = Pose::new(p.x, -p.y, -p.alpha);
        envs.start_poses.contains(&m)
    })
}
