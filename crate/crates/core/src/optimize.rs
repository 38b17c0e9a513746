//! Derivative-free policy training.
//!
//! Four optimizers share one bookkeeping layer ([`Tracker`]) that enforces the
//! evaluation budget, records the best-so-far loss and success count after
//! every evaluation, and stops a run as soon as some evaluation succeeds in
//! every environment. Optimizers hand the objective whole batches (a
//! generation, a poll set) so that the simulator can fill its lanes; a batch
//! is cut short at the budget.

use alloc::string::String;
use alloc::vec::Vec;
use core::convert::Infallible;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dynamics::{
    simulate_many, Design, EnvironmentSet, Policy, SimConfig, SimError, SimJob, WEIGHT_BOUND,
};
use crate::math;
use crate::rng::{unit_rng, ChaCha8Rng};

/// Loss and environments solved for one parameter vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    #[allow(missing_docs)]
    pub loss: f64,
    #[allow(missing_docs)]
    pub success_count: usize,
}

/// A deterministic black-box objective over a box.
pub trait Objective {
    #[allow(missing_docs)]
    type Error;

    /// Per-dimension `(lo, hi)`.
    fn bounds(&self) -> &[(f64, f64)];

    /// `success_count` that counts as solving every environment.
    fn full_success(&self) -> usize;

    /// Evaluate each point; one entry per input point, in order.
    fn evaluate_batch(&mut self, points: &[Vec<f64>]) -> Result<Vec<Evaluation>, Self::Error>;

    #[allow(missing_docs)]
    fn dim(&self) -> usize {
        self.bounds().len()
    }
}

/// Closure-backed objective, mostly for tests and benchmarks.
pub struct FnObjective<F> {
    bounds: Vec<(f64, f64)>,
    full_success: usize,
    f: F,
}

impl<F: FnMut(&[f64]) -> Evaluation> FnObjective<F> {
    #[allow(missing_docs)]
    pub fn new(bounds: Vec<(f64, f64)>, full_success: usize, f: F) -> Self {
        FnObjective {
            bounds,
            full_success,
            f,
        }
    }
}

impl<F: FnMut(&[f64]) -> Evaluation> Objective for FnObjective<F> {
    type Error = Infallible;

    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn full_success(&self) -> usize {
        self.full_success
    }

    fn evaluate_batch(&mut self, points: &[Vec<f64>]) -> Result<Vec<Evaluation>, Infallible> {
        Ok(points.iter().map(|p| (self.f)(p)).collect())
    }
}

/// Training objective for a fixed design: parameters are `(w1, w2)`, loss is
/// the summed per-environment `max(0, min_distance - r)`.
#[derive(Debug, Clone)]
pub struct DesignObjective<'a> {
    design: Design,
    envs: &'a EnvironmentSet,
    cfg: SimConfig,
    bounds: [(f64, f64); 2],
}

impl<'a> DesignObjective<'a> {
    #[allow(missing_docs)]
    pub fn new(design: Design, envs: &'a EnvironmentSet, cfg: SimConfig) -> Self {
        DesignObjective {
            design,
            envs,
            cfg,
            bounds: [(-WEIGHT_BOUND, WEIGHT_BOUND); 2],
        }
    }
}

impl Objective for DesignObjective<'_> {
    type Error = SimError;

    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn full_success(&self) -> usize {
        self.envs.len()
    }

    fn evaluate_batch(&mut self, points: &[Vec<f64>]) -> Result<Vec<Evaluation>, SimError> {
        let policies: Vec<Policy> = points.iter().map(|p| Policy { w1: p[0], w2: p[1] }).collect();
        evaluate_policies(&self.design, &policies, self.envs, &self.cfg)
    }
}

/// Evaluate several policies of one design across all environments at once.
pub fn evaluate_policies(
    design: &Design,
    policies: &[Policy],
    envs: &EnvironmentSet,
    cfg: &SimConfig,
) -> Result<Vec<Evaluation>, SimError> {
    let k = envs.len();
    let mut jobs = Vec::with_capacity(policies.len() * k);
    for policy in policies {
        for start in &envs.start_poses {
            jobs.push(SimJob {
                policy: *policy,
                start: *start,
            });
        }
    }
    let results = simulate_many(design, &jobs, cfg)?;
    Ok(results
        .chunks(k.max(1))
        .map(|rs| Evaluation {
            loss: rs
                .iter()
                .map(|r| {
                    if r.success {
                        0.0
                    } else {
                        (r.min_distance - cfg.light_radius).max(0.0)
                    }
                })
                .sum(),
            success_count: rs.iter().filter(|r| r.success).count(),
        })
        .collect())
}

/// Training methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Uniform random sampling.
    Random,
    /// Compass-direction generating set search.
    Gss,
    /// Separable natural evolution strategies.
    Snes,
    /// Differential evolution, rand/1/bin.
    De,
}

impl Method {
    /// All methods in reporting order.
    pub const ALL: [Method; 4] = [Method::Random, Method::Gss, Method::Snes, Method::De];

    /// Short identifier used in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            Method::Random => "random",
            Method::Gss => "gss",
            Method::Snes => "snes",
            Method::De => "de",
        }
    }

    /// Stable numeric id for deriving random streams.
    pub fn id(self) -> u64 {
        match self {
            Method::Random => 0,
            Method::Gss => 1,
            Method::Snes => 2,
            Method::De => 3,
        }
    }

    /// Run this method on `obj`.
    pub fn run<O: Objective>(self, obj: &mut O, budget: usize, seed: u64) -> Result<TrainRun, O::Error> {
        match self {
            Method::Random => random_search(obj, budget, seed),
            Method::Gss => generating_set_search(obj, budget, seed),
            Method::Snes => snes(obj, budget, seed),
            Method::De => differential_evolution(obj, budget, seed),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Unrecognized method identifier.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown training method `{0}` (expected random, gss, snes or de)")]
pub struct UnknownMethod(pub String);

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Method::Random),
            "gss" => Ok(Method::Gss),
            "snes" => Ok(Method::Snes),
            "de" => Ok(Method::De),
            other => Err(UnknownMethod(other.into())),
        }
    }
}

/// Evaluation log of one optimizer run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRun {
    #[allow(missing_docs)]
    pub method: Method,
    #[allow(missing_docs)]
    pub seed: u64,
    /// Objective evaluations performed.
    pub evals_used: usize,
    /// 1-based index of the first evaluation that solved every environment.
    pub evals_to_full_success: Option<usize>,
    #[allow(missing_docs)]
    pub best_loss: f64,
    #[allow(missing_docs)]
    pub best_params: Vec<f64>,
    /// Best-so-far success count after each evaluation.
    pub success_curve: Vec<usize>,
}

/// Budget, early stopping and best-so-far bookkeeping shared by all methods.
pub struct Tracker<'o, O: Objective> {
    obj: &'o mut O,
    budget: usize,
    full: usize,
    evals: usize,
    best_loss: f64,
    best_params: Vec<f64>,
    best_success: usize,
    curve: Vec<usize>,
    first_full: Option<usize>,
}

impl<'o, O: Objective> Tracker<'o, O> {
    #[allow(missing_docs)]
    pub fn new(obj: &'o mut O, budget: usize) -> Self {
        let full = obj.full_success();
        Tracker {
            obj,
            budget,
            full,
            evals: 0,
            best_loss: f64::INFINITY,
            best_params: Vec::new(),
            best_success: 0,
            curve: Vec::with_capacity(budget),
            first_full: None,
        }
    }

    #[allow(missing_docs)]
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.obj.bounds().to_vec()
    }

    /// Evaluations still allowed.
    pub fn remaining(&self) -> usize {
        self.budget - self.evals
    }

    /// Budget exhausted or every environment solved.
    pub fn done(&self) -> bool {
        self.evals >= self.budget || self.first_full.is_some()
    }

    /// Evaluate as many of `points` as the budget allows. The returned vector
    /// may be shorter than `points`; callers stop once [`Tracker::done`].
    pub fn evaluate(&mut self, points: &[Vec<f64>]) -> Result<Vec<Evaluation>, O::Error> {
        let take = points.len().min(self.remaining());
        if take == 0 || self.first_full.is_some() {
            return Ok(Vec::new());
        }
        debug_assert!(points[..take].iter().all(|p| in_bounds(p, self.obj.bounds())));
        let evals = self.obj.evaluate_batch(&points[..take])?;
        for (p, e) in points.iter().zip(&evals) {
            self.evals += 1;
            if e.loss < self.best_loss {
                self.best_loss = e.loss;
                self.best_params.clone_from(p);
            }
            self.best_success = self.best_success.max(e.success_count);
            self.curve.push(self.best_success);
            if e.success_count >= self.full && self.first_full.is_none() {
                self.first_full = Some(self.evals);
            }
        }
        Ok(evals)
    }

    #[allow(missing_docs)]
    pub fn finish(self, method: Method, seed: u64) -> TrainRun {
        TrainRun {
            method,
            seed,
            evals_used: self.evals,
            evals_to_full_success: self.first_full,
            best_loss: self.best_loss,
            best_params: self.best_params,
            success_curve: self.curve,
        }
    }
}

fn in_bounds(p: &[f64], bounds: &[(f64, f64)]) -> bool {
    p.len() == bounds.len() && p.iter().zip(bounds).all(|(x, (lo, hi))| *x >= *lo && *x <= *hi)
}

fn uniform_point(rng: &mut ChaCha8Rng, bounds: &[(f64, f64)]) -> Vec<f64> {
    bounds.iter().map(|&(lo, hi)| lo + (hi - lo) * rng.gen::<f64>()).collect()
}

fn clip(p: &mut [f64], bounds: &[(f64, f64)]) {
    for (x, &(lo, hi)) in p.iter_mut().zip(bounds) {
        *x = x.clamp(lo, hi);
    }
}

/// Points drawn per random-search batch.
pub const RANDOM_BATCH: usize = 8;

/// Uniform sampling of the box.
pub fn random_search<O: Objective>(obj: &mut O, budget: usize, seed: u64) -> Result<TrainRun, O::Error> {
    let mut rng = unit_rng(seed, Method::Random.id());
    let mut t = Tracker::new(obj, budget);
    let bounds = t.bounds();
    while !t.done() {
        let n = RANDOM_BATCH.min(t.remaining());
        let batch: Vec<Vec<f64>> = (0..n).map(|_| uniform_point(&mut rng, &bounds)).collect();
        t.evaluate(&batch)?;
    }
    Ok(t.finish(Method::Random, seed))
}

/// Step sizes of compass search, as fractions of each dimension's range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GssParams {
    #[allow(missing_docs)]
    pub initial_step: f64,
    #[allow(missing_docs)]
    pub expand: f64,
    #[allow(missing_docs)]
    pub contract: f64,
    /// Restart from a fresh uniform point once the step drops below this.
    pub min_step: f64,
}

impl Default for GssParams {
    fn default() -> Self {
        GssParams {
            initial_step: 0.25,
            expand: 2.0,
            contract: 0.5,
            min_step: 1e-8,
        }
    }
}

/// Compass search over `+-e_i`, complete polling.
///
/// Each iteration evaluates every distinct clipped poll point, moves to the
/// best one when it strictly improves, and doubles the step; otherwise the
/// step halves. Poll points that clip back onto the incumbent are skipped.
pub fn generating_set_search<O: Objective>(
    obj: &mut O,
    budget: usize,
    seed: u64,
) -> Result<TrainRun, O::Error> {
    gss_with(obj, budget, seed, GssParams::default(), |_, _| {})
}

/// [`generating_set_search`] with explicit parameters and a per-iteration
/// observer receiving `(incumbent, step)` before each poll.
pub fn gss_with<O: Objective>(
    obj: &mut O,
    budget: usize,
    seed: u64,
    params: GssParams,
    mut observe: impl FnMut(&[f64], f64),
) -> Result<TrainRun, O::Error> {
    let mut rng = unit_rng(seed, Method::Gss.id());
    let mut t = Tracker::new(obj, budget);
    let bounds = t.bounds();

    'restart: while !t.done() {
        let mut x = uniform_point(&mut rng, &bounds);
        let Some(e) = t.evaluate(core::slice::from_ref(&x))?.pop() else {
            break;
        };
        let mut fx = e.loss;
        let mut step = params.initial_step;

        while !t.done() {
            if step < params.min_step {
                continue 'restart;
            }
            observe(&x, step);
            let mut poll = Vec::with_capacity(2 * bounds.len());
            for (i, &(lo, hi)) in bounds.iter().enumerate() {
                for sign in [1.0, -1.0] {
                    let mut p = x.clone();
                    p[i] += sign * step * (hi - lo);
                    clip(&mut p, &bounds);
                    if p != x && !poll.contains(&p) {
                        poll.push(p);
                    }
                }
            }
            if poll.is_empty() {
                step *= params.contract;
                continue;
            }
            let evals = t.evaluate(&poll)?;
            let best = evals
                .iter()
                .enumerate()
                .fold(None::<(usize, f64)>, |acc, (i, e)| match acc {
                    Some((_, l)) if l <= e.loss => acc,
                    _ => Some((i, e.loss)),
                });
            match best {
                Some((i, loss)) if loss < fx => {
                    x = poll.swap_remove(i);
                    fx = loss;
                    step *= params.expand;
                }
                _ => step *= params.contract,
            }
        }
    }
    Ok(t.finish(Method::Gss, seed))
}

/// Population size `4 + floor(3 ln d)`.
pub fn snes_population(dim: usize) -> usize {
    4 + math::floor(3.0 * math::ln(dim as f64)) as usize
}

/// Rank-based utilities for `lambda` samples, best first; they sum to zero.
pub fn snes_utilities(lambda: usize) -> Vec<f64> {
    let l = lambda as f64;
    let raw: Vec<f64> = (1..=lambda)
        .map(|k| (math::ln(l / 2.0 + 1.0) - math::ln(k as f64)).max(0.0))
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|u| u / total - 1.0 / l).collect()
}

/// Separable NES: diagonal Gaussian search distribution, natural-gradient
/// updates of mean (rate 1) and log standard deviations (rate
/// `(3 + ln d) / (5 sqrt d)`).
///
/// Samples are clipped to the box for evaluation only. The mean is kept in
/// the box, and the distribution restarts from a fresh uniform mean once
/// every standard deviation falls below `1e-8` of its range.
pub fn snes<O: Objective>(obj: &mut O, budget: usize, seed: u64) -> Result<TrainRun, O::Error> {
    let mut rng = unit_rng(seed, Method::Snes.id());
    let mut t = Tracker::new(obj, budget);
    let bounds = t.bounds();
    let d = bounds.len();
    let lambda = snes_population(d);
    let utilities = snes_utilities(lambda);
    let eta_sigma = (3.0 + math::ln(d as f64)) / (5.0 * math::sqrt(d as f64));
    let initial_sigma: Vec<f64> = bounds.iter().map(|(lo, hi)| 0.3 * (hi - lo)).collect();

    let mut mu = uniform_point(&mut rng, &bounds);
    let mut sigma = initial_sigma.clone();

    while !t.done() {
        let z: Vec<Vec<f64>> = (0..lambda)
            .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let xs: Vec<Vec<f64>> = z
            .iter()
            .map(|zk| {
                let mut x: Vec<f64> = (0..d).map(|i| mu[i] + sigma[i] * zk[i]).collect();
                clip(&mut x, &bounds);
                x
            })
            .collect();
        let evals = t.evaluate(&xs)?;
        if evals.len() < lambda {
            break;
        }
        let mut order: Vec<usize> = (0..lambda).collect();
        order.sort_by(|&a, &b| evals[a].loss.total_cmp(&evals[b].loss));

        for i in 0..d {
            let mut grad_mu = 0.0;
            let mut grad_sigma = 0.0;
            for (rank, &k) in order.iter().enumerate() {
                grad_mu += utilities[rank] * z[k][i];
                grad_sigma += utilities[rank] * (z[k][i] * z[k][i] - 1.0);
            }
            mu[i] = (mu[i] + sigma[i] * grad_mu).clamp(bounds[i].0, bounds[i].1);
            sigma[i] *= math::exp(0.5 * eta_sigma * grad_sigma);
        }

        let collapsed = sigma
            .iter()
            .zip(&bounds)
            .all(|(s, (lo, hi))| *s < 1e-8 * (hi - lo));
        if collapsed {
            mu = uniform_point(&mut rng, &bounds);
            sigma.clone_from(&initial_sigma);
        }
    }
    Ok(t.finish(Method::Snes, seed))
}

/// Differential evolution settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeParams {
    #[allow(missing_docs)]
    pub population: usize,
    /// Differential weight.
    pub f: f64,
    /// Crossover rate.
    pub cr: f64,
}

impl Default for DeParams {
    fn default() -> Self {
        DeParams {
            population: 20,
            f: 0.7,
            cr: 0.9,
        }
    }
}

/// Random draws that fully determine one DE trial vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DeDraws {
    /// Base vector and the two difference vectors, all distinct from the target.
    pub r: [usize; 3],
    /// Dimension that always takes the donor component.
    pub j_rand: usize,
    /// Crossover uniforms, one per dimension.
    pub crossover: Vec<f64>,
    /// Bounce-back uniforms, one per dimension.
    pub bounce: Vec<f64>,
}

/// Build the rand/1/bin trial for `target`.
///
/// Donor `v = x_r1 + F (x_r2 - x_r3)`; binomial crossover with the target;
/// components outside the box bounce back to a uniform point between the
/// base vector and the violated bound.
pub fn de_trial(
    pop: &[Vec<f64>],
    target: usize,
    draws: &DeDraws,
    params: &DeParams,
    bounds: &[(f64, f64)],
) -> Vec<f64> {
    let [r1, r2, r3] = draws.r;
    let base = &pop[r1];
    (0..bounds.len())
        .map(|j| {
            let take_donor = j == draws.j_rand || draws.crossover[j] < params.cr;
            if !take_donor {
                return pop[target][j];
            }
            let v = base[j] + params.f * (pop[r2][j] - pop[r3][j]);
            let (lo, hi) = bounds[j];
            if v < lo {
                base[j] + draws.bounce[j] * (lo - base[j])
            } else if v > hi {
                base[j] + draws.bounce[j] * (hi - base[j])
            } else {
                v
            }
        })
        .collect()
}

fn de_draws(rng: &mut ChaCha8Rng, np: usize, target: usize, dim: usize) -> DeDraws {
    let mut r = [0usize; 3];
    for slot in 0..3 {
        r[slot] = loop {
            let c = rng.gen_range(0..np);
            if c != target && !r[..slot].contains(&c) {
                break c;
            }
        };
    }
    DeDraws {
        r,
        j_rand: rng.gen_range(0..dim),
        crossover: (0..dim).map(|_| rng.gen()).collect(),
        bounce: (0..dim).map(|_| rng.gen()).collect(),
    }
}

/// Differential evolution rand/1/bin with population 20, F = 0.7, CR = 0.9.
pub fn differential_evolution<O: Objective>(
    obj: &mut O,
    budget: usize,
    seed: u64,
) -> Result<TrainRun, O::Error> {
    de_with(obj, budget, seed, DeParams::default())
}

/// Differential evolution with explicit parameters. Generations are
/// synchronous; a trial replaces its target when its loss is not worse.
pub fn de_with<O: Objective>(
    obj: &mut O,
    budget: usize,
    seed: u64,
    params: DeParams,
) -> Result<TrainRun, O::Error> {
    assert!(params.population >= 4, "rand/1 needs at least 4 members");
    let mut rng = unit_rng(seed, Method::De.id());
    let mut t = Tracker::new(obj, budget);
    let bounds = t.bounds();
    let np = params.population;

    let mut pop: Vec<Vec<f64>> = (0..np).map(|_| uniform_point(&mut rng, &bounds)).collect();
    let mut fit: Vec<f64> = t.evaluate(&pop)?.iter().map(|e| e.loss).collect();
    if fit.len() < np {
        return Ok(t.finish(Method::De, seed));
    }

    while !t.done() {
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let draws = de_draws(&mut rng, np, i, bounds.len());
                de_trial(&pop, i, &draws, &params, &bounds)
            })
            .collect();
        let evals = t.evaluate(&trials)?;
        for (i, (trial, e)) in trials.into_iter().zip(&evals).enumerate() {
            if e.loss <= fit[i] {
                pop[i] = trial;
                fit[i] = e.loss;
            }
        }
    }
    Ok(t.finish(Method::De, seed))
}

/// Train `design`'s policy once per seed.
pub fn train_design(
    design: &Design,
    method: Method,
    envs: &EnvironmentSet,
    cfg: &SimConfig,
    budget: usize,
    seeds: &[u64],
) -> Result<Vec<TrainRun>, SimError> {
    seeds
        .iter()
        .map(|&seed| {
            let mut obj = DesignObjective::new(*design, envs, *cfg);
            method.run(&mut obj, budget, seed)
        })
        .collect()
}

/// Mean evaluations-to-success of one design's runs.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyRow {
    #[allow(missing_docs)]
    pub design: Design,
    #[allow(missing_docs)]
    pub method: Method,
    /// Runs that never solved every environment count as `budget`.
    pub mean_evals: f64,
    #[allow(missing_docs)]
    pub censored_runs: usize,
    #[allow(missing_docs)]
    pub runs: usize,
}

/// Censored mean of evaluations-to-full-success.
pub fn censored_mean(runs: &[TrainRun], budget: usize) -> f64 {
    let total: usize = runs
        .iter()
        .map(|r| r.evals_to_full_success.unwrap_or(budget))
        .sum();
    total as f64 / runs.len() as f64
}

/// One row per `(design, runs)` group.
pub fn efficiency_table(groups: &[(Design, Vec<TrainRun>)], budget: usize) -> Vec<EfficiencyRow> {
    groups
        .iter()
        .filter(|(_, runs)| !runs.is_empty())
        .map(|(design, runs)| EfficiencyRow {
            design: *design,
            method: runs[0].method,
            mean_evals: censored_mean(runs, budget),
            censored_runs: runs.iter().filter(|r| r.evals_to_full_success.is_none()).count(),
            runs: runs.len(),
        })
        .collect()
}
