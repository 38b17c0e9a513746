//! Joint design and policy optimization.
//!
//! A steady-state multiobjective evolutionary search whose objectives are the
//! per-environment losses. Non-dominated solutions live in an ε-box archive;
//! offspring come from one of three variation operators chosen with
//! probability proportional to how many current archive members that
//! operator produced (plus one). When the archive has not changed for a fixed
//! number of evaluations the population is rebuilt from the archive and
//! mutated copies of it.
//!
//! Offspring are generated in small batches from the same parent state so
//! the simulator can evaluate several candidates in lockstep; within a batch
//! results are folded into the archive and population in submission order.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::dynamics::{
    simulate_batch, Design, EnvironmentSet, Policy, SimConfig, SimError, SimJob, SimResult, Vec2,
    SENSOR_BOUND, WEIGHT_BOUND,
};
use crate::math;
use crate::optimize::{de_trial, DeDraws, DeParams};
use crate::rng::{mix_ids, unit_rng, ChaCha8Rng};
use crate::stats::{self, StatsError, DTW_MAX_POINTS};

/// Failures of a co-optimization run or its post-processing.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CooptError {
    #[allow(missing_docs)]
    #[error("archive is empty")]
    EmptyArchive,
    #[allow(missing_docs)]
    #[error("no runs to aggregate")]
    NoRuns,
    #[allow(missing_docs)]
    #[error("runs have different evaluation budgets")]
    UnequalBudgets,
    #[allow(missing_docs)]
    #[error("budget {budget} is below the initial population {population}")]
    BudgetTooSmall { budget: usize, population: usize },
    #[allow(missing_docs)]
    #[error("invalid co-optimization config: {0}")]
    InvalidConfig(&'static str),
    #[allow(missing_docs)]
    #[error(transparent)]
    Sim(#[from] SimError),
    #[allow(missing_docs)]
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Which variables the search controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// `(l1x, l1y, l2x, l2y, w1, w2)`.
    FreeDesign,
    /// `(w1, w2)` with the design pinned to [`Design::baseline`].
    FixedBaseline,
}

impl Mode {
    #[allow(missing_docs)]
    pub const ALL: [Mode; 2] = [Mode::FreeDesign, Mode::FixedBaseline];

    /// Identifier used in file names and CSV rows.
    pub fn name(self) -> &'static str {
        match self {
            Mode::FreeDesign => "free",
            Mode::FixedBaseline => "fixed",
        }
    }

    #[allow(missing_docs)]
    pub fn parse(s: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Number of decision variables.
    pub fn dim(self) -> usize {
        match self {
            Mode::FreeDesign => 6,
            Mode::FixedBaseline => 2,
        }
    }

    /// Box bounds of the decision variables.
    pub fn bounds(self) -> Vec<(f64, f64)> {
        let sensor = (-SENSOR_BOUND, SENSOR_BOUND);
        let weight = (-WEIGHT_BOUND, WEIGHT_BOUND);
        match self {
            Mode::FreeDesign => vec![sensor, sensor, sensor, sensor, weight, weight],
            Mode::FixedBaseline => vec![weight, weight],
        }
    }

    /// Split a decision vector into the robot it describes.
    pub fn decode(self, vars: &[f64]) -> (Design, Policy) {
        match self {
            Mode::FreeDesign => (
                Design {
                    ell1: Vec2::new(vars[0], vars[1]),
                    ell2: Vec2::new(vars[2], vars[3]),
                },
                Policy {
                    w1: vars[4],
                    w2: vars[5],
                },
            ),
            Mode::FixedBaseline => (
                Design::baseline(),
                Policy {
                    w1: vars[0],
                    w2: vars[1],
                },
            ),
        }
    }
}

/// Variation operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    /// Simulated binary crossover.
    Sbx,
    /// Differential evolution, rand/1/bin.
    De,
    /// Uniform mutation.
    Um,
}

impl Operator {
    #[allow(missing_docs)]
    pub const ALL: [Operator; 3] = [Operator::Sbx, Operator::De, Operator::Um];

    fn index(self) -> usize {
        match self {
            Operator::Sbx => 0,
            Operator::De => 1,
            Operator::Um => 2,
        }
    }
}

/// An evaluated decision vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// 0-based evaluation index within its run.
    pub id: usize,
    #[allow(missing_docs)]
    pub vars: Vec<f64>,
    /// Per-environment loss, all `>= 0`.
    pub objectives: Vec<f64>,
    #[allow(missing_docs)]
    pub success_count: usize,
    /// Operator that produced it; `None` for random initial points.
    pub origin: Option<Operator>,
}

impl Candidate {
    /// Sum of the objectives.
    pub fn total(&self) -> f64 {
        self.objectives.iter().sum()
    }
}

fn box_index(obj: &[f64], eps: &[f64]) -> Vec<i64> {
    obj.iter()
        .zip(eps)
        .map(|(o, e)| math::floor(o / e) as i64)
        .collect()
}

fn corner_distance_sq(obj: &[f64], boxes: &[i64], eps: &[f64]) -> f64 {
    obj.iter()
        .zip(boxes)
        .zip(eps)
        .map(|((o, b), e)| {
            let d = o - *b as f64 * e;
            d * d
        })
        .sum()
}

// Distances this close are a tie, so rounding in the box corner cannot pick
// a winner between mathematically equidistant points.
fn strictly_closer(a: f64, b: f64) -> bool {
    a < b && (b - a) > 1e-12 * b.max(f64::MIN_POSITIVE)
}

// Weakly smaller in every box index, strictly in at least one.
fn box_dominates(a: &[i64], b: &[i64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// ε-box dominance of objective vector `a` over `b` (minimization).
///
/// `a` wins when its box index vector dominates `b`'s, or when both share a
/// box and `a` is strictly closer to the box's lower corner.
pub fn epsilon_dominates(a: &[f64], b: &[f64], eps: &[f64]) -> bool {
    assert_eq!(a.len(), b.len());
    assert_eq!(a.len(), eps.len());
    let (ba, bb) = (box_index(a, eps), box_index(b, eps));
    if ba == bb {
        strictly_closer(corner_distance_sq(a, &ba, eps), corner_distance_sq(b, &bb, eps))
    } else {
        box_dominates(&ba, &bb)
    }
}

/// Ordinary Pareto dominance (minimization).
pub fn pareto_dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// Non-dominated set with at most one member per ε-box.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonArchive {
    #[allow(missing_docs)]
    pub epsilons: Vec<f64>,
    #[allow(missing_docs)]
    pub members: Vec<Candidate>,
}

impl EpsilonArchive {
    #[allow(missing_docs)]
    pub fn new(epsilons: Vec<f64>) -> Self {
        assert!(epsilons.iter().all(|e| *e > 0.0));
        EpsilonArchive {
            epsilons,
            members: Vec::new(),
        }
    }

    #[allow(missing_docs)]
    pub fn len(&self) -> usize {
        self.members.len()
    }

    #[allow(missing_docs)]
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Add `c` unless some member ε-dominates or shares its box without
    /// being farther from the corner; evict every member `c` ε-dominates.
    /// Returns whether `c` was accepted.
    pub fn insert(&mut self, c: Candidate) -> bool {
        let eps = &self.epsilons;
        let bc = box_index(&c.objectives, eps);
        let dc = corner_distance_sq(&c.objectives, &bc, eps);
        let mut evict = Vec::new();
        for (i, m) in self.members.iter().enumerate() {
            let bm = box_index(&m.objectives, eps);
            if bm == bc {
                if strictly_closer(dc, corner_distance_sq(&m.objectives, &bm, eps)) {
                    evict.push(i);
                } else {
                    return false;
                }
            } else if box_dominates(&bm, &bc) {
                return false;
            } else if box_dominates(&bc, &bm) {
                evict.push(i);
            }
        }
        for i in evict.into_iter().rev() {
            self.members.remove(i);
        }
        self.members.push(c);
        debug_assert!(self.is_consistent());
        true
    }

    /// No member ε-dominates another and no two members share a box.
    pub fn is_consistent(&self) -> bool {
        let boxes: Vec<Vec<i64>> = self
            .members
            .iter()
            .map(|m| box_index(&m.objectives, &self.epsilons))
            .collect();
        for i in 0..boxes.len() {
            for j in 0..boxes.len() {
                if i != j && (boxes[i] == boxes[j] || box_dominates(&boxes[i], &boxes[j])) {
                    return false;
                }
            }
        }
        true
    }
}

/// Member with the smallest objective sum; ties go to the lower id.
pub fn final_solution(arch: &EpsilonArchive) -> Result<&Candidate, CooptError> {
    arch.members
        .iter()
        .min_by(|a, b| a.total().total_cmp(&b.total()).then(a.id.cmp(&b.id)))
        .ok_or(CooptError::EmptyArchive)
}

/// Settings of one co-optimization run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CooptConfig {
    #[allow(missing_docs)]
    pub mode: Mode,
    /// Total evaluations; one evaluation simulates every environment.
    pub budget: usize,
    /// Population size, also the number of random initial points.
    pub population: usize,
    /// ε for every objective.
    pub epsilon: f64,
    /// Evaluations without archive change before a restart.
    pub stagnation: usize,
    /// Offspring generated per batch.
    pub batch: usize,
    /// SBX distribution index.
    pub sbx_eta: f64,
    /// Differential weight of the DE operator.
    pub de_f: f64,
    /// Crossover rate of the DE operator.
    pub de_cr: f64,
    #[allow(missing_docs)]
    pub sim: SimConfig,
    /// Score every candidate's design by cross-environment sensor DTW.
    pub record_dtw: bool,
}

impl CooptConfig {
    /// Defaults for `mode` with the given budget.
    pub fn new(mode: Mode, budget: usize) -> Self {
        CooptConfig {
            mode,
            budget,
            population: 36,
            epsilon: 0.05,
            stagnation: 200,
            batch: 8,
            sbx_eta: 15.0,
            de_f: 0.7,
            de_cr: 0.9,
            sim: SimConfig::desk(),
            record_dtw: false,
        }
    }

    #[allow(missing_docs)]
    pub fn validate(&self) -> Result<(), CooptError> {
        if self.population < 4 {
            return Err(CooptError::InvalidConfig("population must be at least 4"));
        }
        if self.budget < self.population {
            return Err(CooptError::BudgetTooSmall {
                budget: self.budget,
                population: self.population,
            });
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 || self.batch == 0 || self.stagnation == 0 {
            return Err(CooptError::InvalidConfig("epsilon, batch and stagnation must be positive"));
        }
        self.sim.validate()?;
        Ok(())
    }
}

/// One line of the per-evaluation log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalRecord {
    /// Best success count over evaluations `0..=id`.
    pub best_success_count: usize,
    #[allow(missing_docs)]
    pub candidate_id: usize,
}

/// Design DTW score of one evaluated candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtwRecord {
    #[allow(missing_docs)]
    pub score: f64,
    /// Whether the candidate entered the archive when it was evaluated.
    pub accepted: bool,
}

/// Log and outcome of one co-optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct CooptRun {
    #[allow(missing_docs)]
    pub seed: u64,
    #[allow(missing_docs)]
    pub mode: Mode,
    /// One record per evaluation; length equals the budget.
    pub eval_log: Vec<EvalRecord>,
    /// Present when DTW scoring was requested; aligned with `eval_log`.
    pub dtw_log: Option<Vec<DtwRecord>>,
    /// Archive member minimizing the objective sum.
    pub final_candidate: Candidate,
    #[allow(missing_docs)]
    pub archive: EpsilonArchive,
    /// Restarts triggered by stagnation.
    pub restarts: usize,
}

impl CooptRun {
    /// Best-so-far success count after the last evaluation.
    pub fn final_best_success(&self) -> usize {
        self.eval_log.last().map_or(0, |r| r.best_success_count)
    }
}

struct Evaluated {
    objectives: Vec<f64>,
    success_count: usize,
    dtw: Option<f64>,
}

fn evaluate_candidates(
    mode: Mode,
    points: &[Vec<f64>],
    envs: &EnvironmentSet,
    sim: &SimConfig,
    dtw: bool,
) -> Result<Vec<Evaluated>, CooptError> {
    let k = envs.len();
    let mut jobs = Vec::with_capacity(points.len() * k);
    for p in points {
        let (design, policy) = mode.decode(p);
        for start in &envs.start_poses {
            jobs.push((design, SimJob { policy, start: *start }));
        }
    }
    let results = simulate_batch(&jobs, sim)?;
    results
        .chunks(k)
        .map(|rs: &[SimResult]| {
            let objectives = rs
                .iter()
                .map(|r| {
                    if r.success {
                        0.0
                    } else {
                        (r.min_distance - sim.light_radius).max(0.0)
                    }
                })
                .collect();
            let dtw = if dtw {
                Some(stats::design_dtw_score(rs)?.aggregate)
            } else {
                None
            };
            Ok(Evaluated {
                objectives,
                success_count: rs.iter().filter(|r| r.success).count(),
                dtw,
            })
        })
        .collect()
}

/// Sensor stride that keeps a full-length trace at or under the DTW cap.
pub fn dtw_trace_stride(max_steps: usize) -> usize {
    max_steps.div_ceil(DTW_MAX_POINTS).max(1)
}

struct Search<'a> {
    cfg: &'a CooptConfig,
    bounds: Vec<(f64, f64)>,
    rng: ChaCha8Rng,
    population: Vec<Candidate>,
    archive: EpsilonArchive,
}

impl Search<'_> {
    fn uniform(&mut self) -> Vec<f64> {
        let rng = &mut self.rng;
        self.bounds.iter().map(|&(lo, hi)| lo + (hi - lo) * rng.gen::<f64>()).collect()
    }

    /// Selection probabilities of [`Operator::ALL`].
    fn operator_weights(&self) -> [f64; 3] {
        let mut counts = [1.0; 3];
        for m in &self.archive.members {
            if let Some(op) = m.origin {
                counts[op.index()] += 1.0;
            }
        }
        let total: f64 = counts.iter().sum();
        counts.map(|c| c / total)
    }

    fn pick_operator(&mut self) -> Operator {
        let w = self.operator_weights();
        let u: f64 = self.rng.gen();
        let mut acc = 0.0;
        for (op, p) in Operator::ALL.into_iter().zip(w) {
            acc += p;
            if u < acc {
                return op;
            }
        }
        Operator::Um
    }

    /// Binary tournament on Pareto dominance; the first draw wins ties.
    fn tournament(&mut self) -> usize {
        let n = self.population.len();
        let a = self.rng.gen_range(0..n);
        let b = self.rng.gen_range(0..n);
        if pareto_dominates(&self.population[b].objectives, &self.population[a].objectives) {
            b
        } else {
            a
        }
    }

    fn archive_parent(&mut self) -> Vec<f64> {
        let i = self.rng.gen_range(0..self.archive.len());
        self.archive.members[i].vars.clone()
    }

    fn offspring(&mut self) -> (Vec<f64>, Operator) {
        let op = self.pick_operator();
        let first = self.archive_parent();
        let child = match op {
            Operator::Sbx => {
                let i = self.tournament();
                let second = self.population[i].vars.clone();
                sbx(&mut self.rng, &first, &second, &self.bounds, self.cfg.sbx_eta)
            }
            Operator::De => {
                let mut pop = vec![first];
                for _ in 0..3 {
                    let i = self.tournament();
                    pop.push(self.population[i].vars.clone());
                }
                let dim = self.bounds.len();
                let draws = DeDraws {
                    r: [1, 2, 3],
                    j_rand: self.rng.gen_range(0..dim),
                    crossover: (0..dim).map(|_| self.rng.gen()).collect(),
                    bounce: (0..dim).map(|_| self.rng.gen()).collect(),
                };
                let params = DeParams {
                    population: 4,
                    f: self.cfg.de_f,
                    cr: self.cfg.de_cr,
                };
                de_trial(&pop, 0, &draws, &params, &self.bounds)
            }
            Operator::Um => uniform_mutation(&mut self.rng, &first, &self.bounds),
        };
        (child, op)
    }

    /// Steady-state replacement: displace a random dominated member, drop a
    /// dominated child, otherwise displace a random member.
    fn replace(&mut self, c: Candidate) {
        if self.population.len() < self.cfg.population {
            self.population.push(c);
            return;
        }
        let dominated: Vec<usize> = (0..self.population.len())
            .filter(|&i| pareto_dominates(&c.objectives, &self.population[i].objectives))
            .collect();
        if !dominated.is_empty() {
            let i = dominated[self.rng.gen_range(0..dominated.len())];
            self.population[i] = c;
        } else if !self
            .population
            .iter()
            .any(|m| pareto_dominates(&m.objectives, &c.objectives))
        {
            let i = self.rng.gen_range(0..self.population.len());
            self.population[i] = c;
        }
    }
}

/// Bounded simulated binary crossover producing one child.
pub fn sbx(rng: &mut ChaCha8Rng, a: &[f64], b: &[f64], bounds: &[(f64, f64)], eta: f64) -> Vec<f64> {
    let mut child = a.to_vec();
    for (j, &(lo, hi)) in bounds.iter().enumerate() {
        let u_swap: f64 = rng.gen();
        let u: f64 = rng.gen();
        let cross: f64 = rng.gen();
        if cross >= 0.5 || (a[j] - b[j]).abs() < 1e-14 {
            continue;
        }
        let (y1, y2) = if a[j] < b[j] { (a[j], b[j]) } else { (b[j], a[j]) };
        let spread = |beta: f64| {
            let alpha = 2.0 - math::pow(beta, -(eta + 1.0));
            if u <= 1.0 / alpha {
                math::pow(u * alpha, 1.0 / (eta + 1.0))
            } else {
                math::pow(1.0 / (2.0 - u * alpha), 1.0 / (eta + 1.0))
            }
        };
        let bq1 = spread(1.0 + 2.0 * (y1 - lo) / (y2 - y1));
        let bq2 = spread(1.0 + 2.0 * (hi - y2) / (y2 - y1));
        let c1 = (0.5 * ((y1 + y2) - bq1 * (y2 - y1))).clamp(lo, hi);
        let c2 = (0.5 * ((y1 + y2) + bq2 * (y2 - y1))).clamp(lo, hi);
        child[j] = if u_swap < 0.5 { c1 } else { c2 };
    }
    child
}

/// Replace each variable with probability `1 / dim` by a uniform draw; at
/// least one variable always changes.
pub fn uniform_mutation(rng: &mut ChaCha8Rng, parent: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    let dim = bounds.len();
    let forced = rng.gen_range(0..dim);
    parent
        .iter()
        .zip(bounds)
        .enumerate()
        .map(|(j, (&x, &(lo, hi)))| {
            let hit = rng.gen::<f64>() < 1.0 / dim as f64;
            let draw = lo + (hi - lo) * rng.gen::<f64>();
            if hit || j == forced {
                draw
            } else {
                x
            }
        })
        .collect()
}

/// Run the search for `cfg.budget` evaluations.
pub fn coopt_run(cfg: &CooptConfig, envs: &EnvironmentSet, seed: u64) -> Result<CooptRun, CooptError> {
    cfg.validate()?;
    if envs.is_empty() {
        return Err(CooptError::InvalidConfig("no environments"));
    }
    let mut sim = cfg.sim;
    if cfg.record_dtw {
        sim = sim.with_traces(dtw_trace_stride(sim.max_steps));
    }
    let mode_id = match cfg.mode {
        Mode::FreeDesign => 0,
        Mode::FixedBaseline => 1,
    };
    let mut s = Search {
        cfg,
        bounds: cfg.mode.bounds(),
        rng: unit_rng(seed, mix_ids(&[0xC0_0F7, mode_id])),
        population: Vec::with_capacity(cfg.population),
        archive: EpsilonArchive::new(vec![cfg.epsilon; envs.len()]),
    };

    let mut eval_log = Vec::with_capacity(cfg.budget);
    let mut dtw_log = cfg.record_dtw.then(|| Vec::with_capacity(cfg.budget));
    let mut best_success = 0;
    let mut since_change = 0;
    let mut restarts = 0;

    let mut pending: Vec<(Vec<f64>, Option<Operator>)> =
        (0..cfg.population).map(|_| (s.uniform(), None)).collect();

    while eval_log.len() < cfg.budget {
        if pending.is_empty() {
            if since_change >= cfg.stagnation {
                since_change = 0;
                restarts += 1;
                s.population = s.archive.members.clone();
                s.population.truncate(cfg.population);
                let fill = cfg.population - s.population.len();
                for _ in 0..fill {
                    let parent = s.archive_parent();
                    let child = uniform_mutation(&mut s.rng, &parent, &s.bounds);
                    pending.push((child, Some(Operator::Um)));
                }
            }
            while pending.len() < cfg.batch {
                let (child, op) = s.offspring();
                pending.push((child, Some(op)));
            }
        }
        let take = pending.len().min(cfg.budget - eval_log.len());
        let batch: Vec<(Vec<f64>, Option<Operator>)> = pending.drain(..take).collect();
        pending.clear();
        let points: Vec<Vec<f64>> = batch.iter().map(|(v, _)| v.clone()).collect();
        let evaluated = evaluate_candidates(cfg.mode, &points, envs, &sim, cfg.record_dtw)?;

        for ((vars, origin), e) in batch.into_iter().zip(evaluated) {
            let id = eval_log.len();
            let c = Candidate {
                id,
                vars,
                objectives: e.objectives,
                success_count: e.success_count,
                origin,
            };
            best_success = best_success.max(c.success_count);
            eval_log.push(EvalRecord {
                best_success_count: best_success,
                candidate_id: id,
            });
            let accepted = s.archive.insert(c.clone());
            if accepted {
                since_change = 0;
            } else {
                since_change += 1;
            }
            if let (Some(log), Some(score)) = (dtw_log.as_mut(), e.dtw) {
                log.push(DtwRecord { score, accepted });
            }
            s.replace(c);
        }
    }

    let final_candidate = final_solution(&s.archive)?.clone();
    Ok(CooptRun {
        seed,
        mode: cfg.mode,
        eval_log,
        dtw_log,
        final_candidate,
        archive: s.archive,
        restarts,
    })
}

/// Pointwise mean of best-so-far success curves with a normal 95% band.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessCurve {
    #[allow(missing_docs)]
    pub mean: Vec<f64>,
    /// `1.96 * sd / sqrt(n)`, zero when fewer than two runs.
    pub half_width: Vec<f64>,
}

#[allow(missing_docs)]
pub fn average_success_curve(curves: &[Vec<f64>]) -> Result<SuccessCurve, CooptError> {
    let first = curves.first().ok_or(CooptError::NoRuns)?;
    if curves.iter().any(|c| c.len() != first.len()) {
        return Err(CooptError::UnequalBudgets);
    }
    let n = curves.len();
    let mut mean = Vec::with_capacity(first.len());
    let mut half_width = Vec::with_capacity(first.len());
    let mut column = vec![0.0; n];
    for t in 0..first.len() {
        for (slot, c) in column.iter_mut().zip(curves) {
            *slot = c[t];
        }
        mean.push(stats::mean(&column));
        half_width.push(if n < 2 {
            0.0
        } else {
            1.96 * stats::sample_sd(&column) / math::sqrt(n as f64)
        });
    }
    Ok(SuccessCurve { mean, half_width })
}

/// Best-so-far success curves of several runs, as floats.
pub fn run_success_curves(runs: &[CooptRun]) -> Vec<Vec<f64>> {
    runs.iter()
        .map(|r| r.eval_log.iter().map(|e| e.best_success_count as f64).collect())
        .collect()
}

/// Mean candidate DTW score per block of `bin_width` evaluations, pooled
/// over runs. Trailing evaluations that do not fill a bin are dropped.
pub fn dtw_curve(runs: &[CooptRun], bin_width: usize) -> Result<Vec<f64>, CooptError> {
    if bin_width == 0 {
        return Err(CooptError::InvalidConfig("bin width must be positive"));
    }
    let logs: Vec<&Vec<DtwRecord>> = runs
        .iter()
        .map(|r| r.dtw_log.as_ref().ok_or(CooptError::Stats(StatsError::MissingTrace)))
        .collect::<Result<_, _>>()?;
    let len = logs.first().ok_or(CooptError::NoRuns)?.len();
    if logs.iter().any(|l| l.len() != len) {
        return Err(CooptError::UnequalBudgets);
    }
    Ok((0..len / bin_width)
        .map(|b| {
            let range = b * bin_width..(b + 1) * bin_width;
            let total: f64 = logs.iter().map(|l| l[range.clone()].iter().map(|r| r.score).sum::<f64>()).sum();
            total / (bin_width * logs.len()) as f64
        })
        .collect())
}
