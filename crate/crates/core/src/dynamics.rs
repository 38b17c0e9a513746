//! Robot kinematics under inverse-square light sensing.
//!
//! The light source sits at the origin. A robot at position `p` with heading
//! `alpha` reads sensor `i` as `|p + R(alpha) ell_i|^-2` and moves by
//!
//! ```text
//! x'     = v cos(alpha)
//! y'     = v sin(alpha)
//! alpha' = w1 s1 - w2 s2,      v = (w1 s1 + w2 s2) / 2
//! ```
//!
//! integrated with explicit Euler, sensors sampled at the pre-step pose.

use alloc::vec::Vec;
use core::ops::{Add, Sub};

use crate::math;

/// Body length of the square frame in meters.
pub const BODY_LENGTH: f64 = 0.5;

/// Radius of the light source in meters.
pub const LIGHT_RADIUS: f64 = 0.075;

/// Distance of every default start pose from the light source (8 body lengths).
pub const START_DISTANCE: f64 = 8.0 * BODY_LENGTH;

/// Bound on each sensor offset coordinate.
pub const SENSOR_BOUND: f64 = 0.5;

/// Bound on each synapse weight.
pub const WEIGHT_BOUND: f64 = 1.0;

/// Failures of the simulation layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    /// The integrated state became NaN or infinite.
    #[error("simulation diverged at step {step}")]
    Diverged {
        /// Step index at which the non-finite pose appeared.
        step: usize,
    },
    /// A [`SimConfig`] field violates its invariant.
    #[error("invalid simulation config: {0}")]
    InvalidConfig(&'static str),
    /// A sensor offset is outside `[-0.5, 0.5]` or not finite.
    #[error("sensor offset outside [-0.5, 0.5]")]
    InvalidDesign,
    /// A weight is outside `[-1, 1]` or not finite.
    #[error("policy weight outside [-1, 1]")]
    InvalidPolicy,
}

/// Plain 2-vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    #[allow(missing_docs)]
    pub x: f64,
    #[allow(missing_docs)]
    pub y: f64,
}

impl Vec2 {
    #[allow(missing_docs)]
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Euclidean norm.
    pub fn norm(self) -> f64 {
        math::sqrt(self.x * self.x + self.y * self.y)
    }

    /// Reflection across the x-axis.
    pub fn mirror_y(self) -> Self {
        Vec2::new(self.x, -self.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

/// Sensor placement: two body-frame offsets from the center of the frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Design {
    #[allow(missing_docs)]
    pub ell1: Vec2,
    #[allow(missing_docs)]
    pub ell2: Vec2,
}

impl Design {
    /// Checked constructor; every coordinate must lie in `[-0.5, 0.5]`.
    pub fn new(ell1: Vec2, ell2: Vec2) -> Result<Self, SimError> {
        let d = Design { ell1, ell2 };
        d.validate()?;
        Ok(d)
    }

    /// Mirror-symmetric front placement used as the hand-designed baseline.
    pub const fn baseline() -> Self {
        Design {
            ell1: Vec2::new(0.5, 0.5),
            ell2: Vec2::new(0.5, -0.5),
        }
    }

    /// Coordinates in `(l1x, l1y, l2x, l2y)` order.
    pub fn coords(&self) -> [f64; 4] {
        [self.ell1.x, self.ell1.y, self.ell2.x, self.ell2.y]
    }

    /// Inverse of [`Design::coords`], unchecked.
    pub fn from_coords(c: [f64; 4]) -> Self {
        Design {
            ell1: Vec2::new(c[0], c[1]),
            ell2: Vec2::new(c[2], c[3]),
        }
    }

    #[allow(missing_docs)]
    pub fn validate(&self) -> Result<(), SimError> {
        let ok = self
            .coords()
            .iter()
            .all(|c| c.is_finite() && c.abs() <= SENSOR_BOUND);
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidDesign)
        }
    }
}

/// Contralateral synapse weights.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Policy {
    #[allow(missing_docs)]
    pub w1: f64,
    #[allow(missing_docs)]
    pub w2: f64,
}

impl Policy {
    /// Checked constructor; both weights must lie in `[-1, 1]`.
    pub fn new(w1: f64, w2: f64) -> Result<Self, SimError> {
        let p = Policy { w1, w2 };
        p.validate()?;
        Ok(p)
    }

    #[allow(missing_docs)]
    pub fn validate(&self) -> Result<(), SimError> {
        let ok = [self.w1, self.w2]
            .iter()
            .all(|w| w.is_finite() && w.abs() <= WEIGHT_BOUND);
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidPolicy)
        }
    }
}

/// World-frame position and heading. `alpha = 0` faces `+x`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    #[allow(missing_docs)]
    pub x: f64,
    #[allow(missing_docs)]
    pub y: f64,
    #[allow(missing_docs)]
    pub alpha: f64,
}

impl Pose {
    #[allow(missing_docs)]
    pub const fn new(x: f64, y: f64, alpha: f64) -> Self {
        Pose { x, y, alpha }
    }

    #[allow(missing_docs)]
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Distance of the body center from the light source.
    pub fn distance(&self) -> f64 {
        self.position().norm()
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.alpha.is_finite()
    }
}

/// Integration and termination parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Euler time step in seconds.
    pub dt: f64,
    /// Hard cap on integration steps.
    pub max_steps: usize,
    /// Body-center distance at which the source counts as touched.
    pub light_radius: f64,
    /// Record per-step sensor intensities.
    pub record_sensors: bool,
    /// Record every Nth step when `record_sensors` is set.
    pub sensor_stride: usize,
    /// Lower clamp on sensor distance before squaring.
    pub distance_floor: f64,
}

impl SimConfig {
    /// Reduced step cap for desk-scale runs.
    pub const fn desk() -> Self {
        SimConfig {
            dt: 0.1,
            max_steps: 20_000,
            light_radius: LIGHT_RADIUS,
            record_sensors: false,
            sensor_stride: 1,
            distance_floor: 1e-6,
        }
    }

    /// Full-length runs of 1e5 steps.
    pub const fn paper() -> Self {
        SimConfig {
            max_steps: 100_000,
            ..Self::desk()
        }
    }

    /// Copy with sensor recording enabled at the given stride.
    pub fn with_traces(self, stride: usize) -> Self {
        SimConfig {
            record_sensors: true,
            sensor_stride: stride,
            ..self
        }
    }

    #[allow(missing_docs)]
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SimError::InvalidConfig("dt must be positive"));
        }
        if self.max_steps == 0 {
            return Err(SimError::InvalidConfig("max_steps must be at least 1"));
        }
        if !(self.light_radius > 0.0 && self.light_radius.is_finite()) {
            return Err(SimError::InvalidConfig("light_radius must be positive"));
        }
        if self.sensor_stride == 0 {
            return Err(SimError::InvalidConfig("sensor_stride must be at least 1"));
        }
        if !(self.distance_floor > 0.0 && self.distance_floor < self.light_radius) {
            return Err(SimError::InvalidConfig(
                "distance_floor must lie in (0, light_radius)",
            ));
        }
        Ok(())
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::desk()
    }
}

/// Outcome of one trajectory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimResult {
    /// Minimum body-center distance to the origin, start pose included.
    pub min_distance: f64,
    #[allow(missing_docs)]
    pub success: bool,
    #[allow(missing_docs)]
    pub steps_taken: usize,
    /// Pose after the last integrated step.
    pub final_pose: Pose,
    /// Sensor 1 intensities at the pre-step pose of every `sensor_stride`-th step.
    pub sensor_trace_1: Option<Vec<f64>>,
    /// Sensor 2 intensities, same sampling as `sensor_trace_1`.
    pub sensor_trace_2: Option<Vec<f64>>,
}

/// Start poses, one per environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentSet {
    #[allow(missing_docs)]
    pub start_poses: Vec<Pose>,
}

impl EnvironmentSet {
    /// Number of environments `K`.
    pub fn len(&self) -> usize {
        self.start_poses.len()
    }

    #[allow(missing_docs)]
    pub fn is_empty(&self) -> bool {
        self.start_poses.is_empty()
    }
}

/// Counterclockwise rotation of `p` by `alpha`.
pub fn rotate(alpha: f64, p: Vec2) -> Vec2 {
    let (s, c) = math::sin_cos(alpha);
    rotate_sc(s, c, p)
}

#[inline]
fn rotate_sc(s: f64, c: f64, p: Vec2) -> Vec2 {
    Vec2::new(c * p.x - s * p.y, s * p.x + c * p.y)
}

/// Inverse-square light intensity at sensor offset `ell` for a robot at `pose`.
pub fn sensor_intensity(pose: &Pose, ell: Vec2, distance_floor: f64) -> f64 {
    let (s, c) = math::sin_cos(pose.alpha);
    intensity_sc(pose, s, c, ell, distance_floor)
}

#[inline]
fn intensity_sc(pose: &Pose, s: f64, c: f64, ell: Vec2, distance_floor: f64) -> f64 {
    let p = pose.position() + rotate_sc(s, c, ell);
    let sq = p.x * p.x + p.y * p.y;
    let floor_sq = distance_floor * distance_floor;
    1.0 / if sq < floor_sq { floor_sq } else { sq }
}

#[inline]
fn sensor_pair(pose: &Pose, design: &Design, distance_floor: f64) -> (f64, f64, f64, f64) {
    let (s, c) = math::sin_cos(pose.alpha);
    (
        intensity_sc(pose, s, c, design.ell1, distance_floor),
        intensity_sc(pose, s, c, design.ell2, distance_floor),
        s,
        c,
    )
}

/// One explicit Euler step.
pub fn step(state: &Pose, design: &Design, policy: &Policy, dt: f64, distance_floor: f64) -> Pose {
    let (s1, s2, sin_a, cos_a) = sensor_pair(state, design, distance_floor);
    advance(state, policy, dt, s1, s2, sin_a, cos_a)
}

#[inline]
fn advance(state: &Pose, policy: &Policy, dt: f64, s1: f64, s2: f64, sin_a: f64, cos_a: f64) -> Pose {
    let a = policy.w1 * s1;
    let b = policy.w2 * s2;
    let v = 0.5 * (a + b);
    let omega = a - b;
    Pose {
        x: state.x + dt * v * cos_a,
        y: state.y + dt * v * sin_a,
        alpha: state.alpha + dt * omega,
    }
}

/// Integrate from `start` until the source is touched or `max_steps` elapse.
pub fn simulate(
    design: &Design,
    policy: &Policy,
    start: &Pose,
    cfg: &SimConfig,
) -> Result<SimResult, SimError> {
    let job = SimJob {
        policy: *policy,
        start: *start,
    };
    let mut out = simulate_many(design, core::slice::from_ref(&job), cfg)?;
    Ok(out.pop().expect("one job in, one result out"))
}

/// One `(policy, start)` trajectory request for [`simulate_many`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimJob {
    #[allow(missing_docs)]
    pub policy: Policy,
    #[allow(missing_docs)]
    pub start: Pose,
}

const LANES: usize = 8;
const EMPTY: usize = usize::MAX;

/// Simulate many trajectories of one design; results come back in job order.
///
/// Trajectories advance in lockstep across a small fixed set of lanes and a
/// finished lane is refilled with the next pending job. Every lane executes
/// exactly the operation sequence of a lone trajectory, so each result is
/// bit-identical to calling [`simulate`] on that job.
pub fn simulate_many(
    design: &Design,
    jobs: &[SimJob],
    cfg: &SimConfig,
) -> Result<Vec<SimResult>, SimError> {
    cfg.validate()?;
    design.validate()?;
    validate_jobs(jobs.iter())?;
    let ell = design.coords();
    run_lanes(jobs.len(), |j| (ell, jobs[j]), cfg)
}

/// [`simulate_many`] where every job carries its own design.
pub fn simulate_batch(jobs: &[(Design, SimJob)], cfg: &SimConfig) -> Result<Vec<SimResult>, SimError> {
    cfg.validate()?;
    for (design, _) in jobs {
        design.validate()?;
    }
    validate_jobs(jobs.iter().map(|(_, j)| j))?;
    run_lanes(jobs.len(), |j| (jobs[j].0.coords(), jobs[j].1), cfg)
}

fn validate_jobs<'a>(jobs: impl Iterator<Item = &'a SimJob>) -> Result<(), SimError> {
    for job in jobs {
        job.policy.validate()?;
        if !job.start.is_finite() {
            return Err(SimError::Diverged { step: 0 });
        }
    }
    Ok(())
}

fn run_lanes(
    n_jobs: usize,
    job_at: impl Fn(usize) -> ([f64; 4], SimJob),
    cfg: &SimConfig,
) -> Result<Vec<SimResult>, SimError> {
    let mut results: Vec<Option<SimResult>> = alloc::vec![None; n_jobs];
    let mut traces: Vec<(Vec<f64>, Vec<f64>)> = if cfg.record_sensors {
        let cap = cfg.max_steps.div_ceil(cfg.sensor_stride).min(4096);
        (0..n_jobs)
            .map(|_| (Vec::with_capacity(cap), Vec::with_capacity(cap)))
            .collect()
    } else {
        Vec::new()
    };

    let r_sq = cfg.light_radius * cfg.light_radius;
    let floor_sq = cfg.distance_floor * cfg.distance_floor;
    let dt = cfg.dt;

    let mut x = [0.0; LANES];
    let mut y = [0.0; LANES];
    let mut a = [0.0; LANES];
    let mut w1 = [0.0; LANES];
    let mut w2 = [0.0; LANES];
    let mut ell = [[0.0; LANES]; 4];
    let mut min_sq = [0.0; LANES];
    let mut steps = [0usize; LANES];
    let mut job_of = [EMPTY; LANES];
    let mut next = 0;

    loop {
        // Refill idle lanes. Jobs that start inside the source finish here.
        for lane in 0..LANES {
            while job_of[lane] == EMPTY && next < n_jobs {
                let (coords, job) = job_at(next);
                let d_sq = job.start.x * job.start.x + job.start.y * job.start.y;
                if d_sq <= r_sq {
                    results[next] = Some(finish(job.start, d_sq, true, 0, traces.get_mut(next)));
                } else {
                    x[lane] = job.start.x;
                    y[lane] = job.start.y;
                    a[lane] = job.start.alpha;
                    w1[lane] = job.policy.w1;
                    w2[lane] = job.policy.w2;
                    for (c, v) in ell.iter_mut().zip(coords) {
                        c[lane] = v;
                    }
                    min_sq[lane] = d_sq;
                    steps[lane] = 0;
                    job_of[lane] = next;
                }
                next += 1;
            }
        }
        if job_of.iter().all(|&j| j == EMPTY) {
            break;
        }

        let mut s1 = [0.0; LANES];
        let mut s2 = [0.0; LANES];
        let mut sin_a = [0.0; LANES];
        let mut cos_a = [0.0; LANES];
        for i in 0..LANES {
            let (s, c) = math::sin_cos(a[i]);
            sin_a[i] = s;
            cos_a[i] = c;
            let p1x = x[i] + (c * ell[0][i] - s * ell[1][i]);
            let p1y = y[i] + (s * ell[0][i] + c * ell[1][i]);
            let p2x = x[i] + (c * ell[2][i] - s * ell[3][i]);
            let p2y = y[i] + (s * ell[2][i] + c * ell[3][i]);
            let q1 = p1x * p1x + p1y * p1y;
            let q2 = p2x * p2x + p2y * p2y;
            s1[i] = 1.0 / if q1 < floor_sq { floor_sq } else { q1 };
            s2[i] = 1.0 / if q2 < floor_sq { floor_sq } else { q2 };
        }

        if cfg.record_sensors {
            for lane in 0..LANES {
                let j = job_of[lane];
                if j != EMPTY && steps[lane] % cfg.sensor_stride == 0 {
                    traces[j].0.push(s1[lane]);
                    traces[j].1.push(s2[lane]);
                }
            }
        }

        let mut d_sq = [0.0; LANES];
        for i in 0..LANES {
            let ta = w1[i] * s1[i];
            let tb = w2[i] * s2[i];
            let v = 0.5 * (ta + tb);
            let omega = ta - tb;
            x[i] += dt * v * cos_a[i];
            y[i] += dt * v * sin_a[i];
            a[i] += dt * omega;
            d_sq[i] = x[i] * x[i] + y[i] * y[i];
            min_sq[i] = if d_sq[i] < min_sq[i] { d_sq[i] } else { min_sq[i] };
            steps[i] += 1;
        }

        let mut any_done = false;
        for i in 0..LANES {
            any_done |= d_sq[i] <= r_sq || steps[i] >= cfg.max_steps || !d_sq[i].is_finite();
        }
        if any_done {
            for lane in 0..LANES {
                let j = job_of[lane];
                if j == EMPTY {
                    continue;
                }
                let pose = Pose::new(x[lane], y[lane], a[lane]);
                if !pose.is_finite() {
                    return Err(SimError::Diverged { step: steps[lane] });
                }
                let success = d_sq[lane] <= r_sq;
                if success || steps[lane] >= cfg.max_steps {
                    results[j] = Some(finish(pose, min_sq[lane], success, steps[lane], traces.get_mut(j)));
                    job_of[lane] = EMPTY;
                    w1[lane] = 0.0;
                    w2[lane] = 0.0;
                }
            }
        }
    }

    Ok(results
        .into_iter()
        .map(|r| r.expect("every job finishes"))
        .collect())
}

fn finish(
    pose: Pose,
    min_sq: f64,
    success: bool,
    steps: usize,
    traces: Option<&mut (Vec<f64>, Vec<f64>)>,
) -> SimResult {
    let (sensor_trace_1, sensor_trace_2) = match traces {
        Some((t1, t2)) => (Some(core::mem::take(t1)), Some(core::mem::take(t2))),
        None => (None, None),
    };
    SimResult {
        min_distance: math::sqrt(min_sq),
        success,
        steps_taken: steps,
        final_pose: pose,
        sensor_trace_1,
        sensor_trace_2,
    }
}

/// The four diagonal start poses at distance 4 m, all facing `+x`.
pub fn default_environments() -> EnvironmentSet {
    let d = START_DISTANCE / core::f64::consts::SQRT_2;
    EnvironmentSet {
        start_poses: alloc::vec![
            Pose::new(d, d, 0.0),
            Pose::new(d, -d, 0.0),
            Pose::new(-d, d, 0.0),
            Pose::new(-d, -d, 0.0),
        ],
    }
}

/// Per-environment simulation results and the summed training loss.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvEvaluation {
    #[allow(missing_docs)]
    pub results: Vec<SimResult>,
    /// `max(0, min_distance - light_radius)` per environment.
    pub losses: Vec<f64>,
    #[allow(missing_docs)]
    pub total_loss: f64,
    /// Number of environments in which the source was touched.
    pub success_count: usize,
}

/// Simulate `policy` on `design` in every environment.
pub fn evaluate(
    design: &Design,
    policy: &Policy,
    envs: &EnvironmentSet,
    cfg: &SimConfig,
) -> Result<EnvEvaluation, SimError> {
    let mut results = Vec::with_capacity(envs.len());
    let mut losses = Vec::with_capacity(envs.len());
    for start in &envs.start_poses {
        let r = simulate(design, policy, start, cfg)?;
        let loss = if r.success {
            0.0
        } else {
            (r.min_distance - cfg.light_radius).max(0.0)
        };
        losses.push(loss);
        results.push(r);
    }
    Ok(EnvEvaluation {
        total_loss: losses.iter().sum(),
        success_count: results.iter().filter(|r| r.success).count(),
        results,
        losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rotate_examples() {
        assert_eq!(rotate(0.0, Vec2::new(1.0, 0.0)), Vec2::new(1.0, 0.0));
        let q = rotate(FRAC_PI_2, Vec2::new(1.0, 0.0));
        assert!(close(q.x, 0.0, 1e-15) && close(q.y, 1.0, 1e-15));
        // Direct matrix product with std trig.
        let (a, p) = (0.3_f64, Vec2::new(0.2, -0.1));
        let q = rotate(a, p);
        assert!(close(q.x, a.cos() * p.x - a.sin() * p.y, 1e-15));
        assert!(close(q.y, a.sin() * p.x + a.cos() * p.y, 1e-15));
        assert!(close(q.norm(), p.norm(), 1e-15));
    }

    #[test]
    fn sensor_intensity_examples() {
        let f = 1e-6;
        assert_eq!(sensor_intensity(&Pose::new(1.0, 0.0, 0.0), Vec2::default(), f), 1.0);
        assert_eq!(sensor_intensity(&Pose::new(-4.0, 0.0, 0.0), Vec2::default(), f), 0.0625);
        let s = sensor_intensity(&Pose::new(-4.0, 0.0, 0.0), Vec2::new(0.5, 0.5), f);
        assert!(close(s, 0.08, 1e-15));
    }

    #[test]
    fn sensor_clamp_at_source() {
        let s = sensor_intensity(&Pose::new(0.0, 0.0, 0.0), Vec2::default(), 1e-6);
        assert!(close(s, 1e12, 1.0));
    }

    #[test]
    fn zero_policy_never_moves() {
        let pose = Pose::new(0.7, -2.0, 1.3);
        let next = step(&pose, &Design::baseline(), &Policy::default(), 0.1, 1e-6);
        assert_eq!(next, pose);
    }

    #[test]
    fn symmetric_step_keeps_heading() {
        let pose = Pose::new(-4.0, 0.0, 0.0);
        let design = Design::baseline();
        let s1 = sensor_intensity(&pose, design.ell1, 1e-6);
        let next = step(&pose, &design, &Policy { w1: 1.0, w2: 1.0 }, 0.1, 1e-6);
        assert_eq!(next.alpha, 0.0);
        assert_eq!(next.y, 0.0);
        assert!(close(next.x, -4.0 + 0.1 * s1, 1e-15));
    }

    #[test]
    fn step_matches_rederivation() {
        let pose = Pose::new(1.7, -2.2, 0.9);
        let design = Design::from_coords([0.125, -0.375, -0.25, 0.5]);
        let policy = Policy { w1: 0.35, w2: -0.8 };
        let dt = 0.1;
        // Sensor positions computed from explicit trig.
        let (sa, ca) = (0.9_f64.sin(), 0.9_f64.cos());
        let p1 = (1.7 + ca * 0.125 - sa * -0.375, -2.2 + sa * 0.125 + ca * -0.375);
        let p2 = (1.7 + ca * -0.25 - sa * 0.5, -2.2 + sa * -0.25 + ca * 0.5);
        let s1 = 1.0 / (p1.0 * p1.0 + p1.1 * p1.1);
        let s2 = 1.0 / (p2.0 * p2.0 + p2.1 * p2.1);
        let v = (0.35 * s1 + -0.8 * s2) / 2.0;
        let om = 0.35 * s1 - -0.8 * s2;
        let next = step(&pose, &design, &policy, dt, 1e-6);
        assert!(close(next.x, 1.7 + dt * v * ca, 1e-14));
        assert!(close(next.y, -2.2 + dt * v * sa, 1e-14));
        assert!(close(next.alpha, 0.9 + dt * om, 1e-14));
    }

    #[test]
    fn symmetric_approach_succeeds() {
        let r = simulate(
            &Design::baseline(),
            &Policy { w1: 1.0, w2: 1.0 },
            &Pose::new(-4.0, 0.0, 0.0),
            &SimConfig::desk(),
        )
        .unwrap();
        assert!(r.success);
        assert!(r.min_distance <= LIGHT_RADIUS);
        assert!(r.final_pose.distance() <= LIGHT_RADIUS);
    }

    #[test]
    fn stationary_robot_fails() {
        let r = simulate(
            &Design::baseline(),
            &Policy::default(),
            &Pose::new(-4.0, 0.0, 0.0),
            &SimConfig::desk(),
        )
        .unwrap();
        assert!(!r.success);
        assert_eq!(r.min_distance, 4.0);
        assert_eq!(r.steps_taken, SimConfig::desk().max_steps);
    }

    #[test]
    fn trace_length_follows_stride() {
        let cfg = SimConfig {
            max_steps: 103,
            ..SimConfig::desk().with_traces(10)
        };
        let r = simulate(&Design::baseline(), &Policy::default(), &Pose::new(-4.0, 0.0, 0.0), &cfg)
            .unwrap();
        assert_eq!(r.sensor_trace_1.as_ref().unwrap().len(), 11);
        assert_eq!(r.sensor_trace_2.as_ref().unwrap().len(), 11);
        let r = simulate(
            &Design::baseline(),
            &Policy::default(),
            &Pose::new(-4.0, 0.0, 0.0),
            &SimConfig::desk(),
        )
        .unwrap();
        assert!(r.sensor_trace_1.is_none());
    }

    #[test]
    fn default_environment_geometry() {
        let envs = default_environments();
        assert_eq!(envs.len(), 4);
        for p in &envs.start_poses {
            assert!(close(p.distance(), 4.0, 1e-12));
            assert_eq!(p.alpha, 0.0);
            assert!(close(p.x.abs(), 2.828_427_124_746_19, 1e-12));
        }
    }

    #[test]
    fn stationary_loss() {
        let e = evaluate(
            &Design::baseline(),
            &Policy::default(),
            &default_environments(),
            &SimConfig { max_steps: 10, ..SimConfig::desk() },
        )
        .unwrap();
        assert!(close(e.total_loss, 15.7, 1e-12));
        assert_eq!(e.success_count, 0);
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert_eq!(Design::new(Vec2::new(0.6, 0.0), Vec2::default()), Err(SimError::InvalidDesign));
        assert_eq!(Policy::new(0.0, -1.5), Err(SimError::InvalidPolicy));
        let bad = SimConfig { distance_floor: 0.1, ..SimConfig::desk() };
        assert!(matches!(bad.validate(), Err(SimError::InvalidConfig(_))));
        let bad = SimConfig { sensor_stride: 0, ..SimConfig::desk() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn start_inside_source_is_immediate_success() {
        let r = simulate(
            &Design::baseline(),
            &Policy { w1: 1.0, w2: 1.0 },
            &Pose::new(0.05, 0.0, 0.0),
            &SimConfig::desk(),
        )
        .unwrap();
        assert!(r.success);
        assert_eq!(r.steps_taken, 0);
    }
}
