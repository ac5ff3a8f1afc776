//! Point-robot phototaxis model.
//!
//! A two-wheeled vehicle carries two light sensors on its dorsal surface and
//! drives each wheel contralaterally from one sensor through a single synaptic
//! weight. The light source sits at the world origin; environments differ only
//! in the robot's starting pose. The pose ODE is integrated with fixed-step
//! explicit Euler.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trig;

/// Half-width of the dorsal surface; sensor coordinates live in `[-HALF_BODY, HALF_BODY]`.
pub const HALF_BODY: f64 = 0.5;
/// Policy weights live in `[-WEIGHT_LIMIT, WEIGHT_LIMIT]`.
pub const WEIGHT_LIMIT: f64 = 1.0;
/// Distance from the light to every default starting position.
pub const DEFAULT_START_DISTANCE: f64 = 4.0;
/// World length of one body unit; the default start lies eight body lengths
/// from the light.
pub const DEFAULT_BODY_LENGTH: f64 = DEFAULT_START_DISTANCE / 8.0;
pub const DEFAULT_SUCCESS_RADIUS: f64 = 0.075;
pub const DEFAULT_SENSOR_FLOOR: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("sensor coordinate {0} outside [-0.5, 0.5]")]
    SensorOutOfBounds(f64),
    #[error("policy weight {0} outside [-1, 1]")]
    WeightOutOfBounds(f64),
    #[error("non-finite pose component")]
    NonFinitePose,
    #[error("start position at distance {distance} is inside the success radius {radius}")]
    StartInsideRadius { distance: f64, radius: f64 },
    #[error("environment set must contain at least one environment")]
    EmptyEnvironmentSet,
    #[error("invalid simulation profile: {0}")]
    InvalidProfile(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    /// Reflection about the world x-axis.
    pub fn reflect_y(self) -> Self {
        Self::new(self.x, -self.y)
    }
}

/// Body-frame sensor placement: the morphology under study. Coordinates are in
/// body units; the body spans `[-0.5, 0.5]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyDesign {
    pub l1: Vec2,
    pub l2: Vec2,
}

impl BodyDesign {
    pub fn new(l1: Vec2, l2: Vec2) -> Result<Self, SimError> {
        for c in [l1.x, l1.y, l2.x, l2.y] {
            if !(-HALF_BODY..=HALF_BODY).contains(&c) {
                return Err(SimError::SensorOutOfBounds(c));
            }
        }
        Ok(Self { l1, l2 })
    }

    /// Symmetric anterior placement used as the hand-designed baseline.
    pub const fn canonical() -> Self {
        Self {
            l1: Vec2::new(0.5, 0.5),
            l2: Vec2::new(0.5, -0.5),
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.l1.x, self.l1.y, self.l2.x, self.l2.y]
    }

    /// Builds a design from `[l1x, l1y, l2x, l2y]`, clamping into the body box.
    pub fn from_array_clamped(v: [f64; 4]) -> Self {
        let c = |x: f64| x.clamp(-HALF_BODY, HALF_BODY);
        Self {
            l1: Vec2::new(c(v[0]), c(v[1])),
            l2: Vec2::new(c(v[2]), c(v[3])),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub w1: f64,
    pub w2: f64,
}

impl Policy {
    pub fn new(w1: f64, w2: f64) -> Result<Self, SimError> {
        for w in [w1, w2] {
            if !(-WEIGHT_LIMIT..=WEIGHT_LIMIT).contains(&w) {
                return Err(SimError::WeightOutOfBounds(w));
            }
        }
        Ok(Self { w1, w2 })
    }

    pub fn clamped(w1: f64, w2: f64) -> Self {
        Self {
            w1: w1.clamp(-WEIGHT_LIMIT, WEIGHT_LIMIT),
            w2: w2.clamp(-WEIGHT_LIMIT, WEIGHT_LIMIT),
        }
    }
}

/// Position and (unwrapped) heading of the robot in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub alpha: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, alpha: f64) -> Result<Self, SimError> {
        if !(x.is_finite() && y.is_finite() && alpha.is_finite()) {
            return Err(SimError::NonFinitePose);
        }
        Ok(Self { x, y, alpha })
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn distance_to_origin(&self) -> f64 {
        self.position().norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub start: Pose,
}

impl Environment {
    /// Checks the start pose against a success radius.
    pub fn new(start: Pose, success_radius: f64) -> Result<Self, SimError> {
        let distance = start.distance_to_origin();
        if distance <= success_radius {
            return Err(SimError::StartInsideRadius {
                distance,
                radius: success_radius,
            });
        }
        Ok(Self { start })
    }

    /// Unchecked constructor, used by tests that need degenerate starts.
    pub fn unchecked(start: Pose) -> Self {
        Self { start }
    }

    pub fn reflect_y(&self) -> Self {
        Self {
            start: Pose {
                x: self.start.x,
                y: -self.start.y,
                alpha: -self.start.alpha,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSet {
    environments: Vec<Environment>,
}

impl EnvironmentSet {
    pub fn new(environments: Vec<Environment>) -> Result<Self, SimError> {
        if environments.is_empty() {
            return Err(SimError::EmptyEnvironmentSet);
        }
        Ok(Self { environments })
    }

    /// Four starts on the diagonals at `distance` from the light, all with the
    /// same heading, ordered `(d,d), (d,-d), (-d,d), (-d,-d)`.
    pub fn diagonal(distance: f64, heading: f64) -> Self {
        let d = distance / std::f64::consts::SQRT_2;
        let environments = [(d, d), (d, -d), (-d, d), (-d, -d)]
            .into_iter()
            .map(|(x, y)| Environment::unchecked(Pose { x, y, alpha: heading }))
            .collect();
        Self { environments }
    }

    pub fn len(&self) -> usize {
        self.environments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.environments.is_empty()
    }

    pub fn environments(&self) -> &[Environment] {
        &self.environments
    }

    pub fn iter(&self) -> impl Iterator<Item = &Environment> {
        self.environments.iter()
    }
}

impl Default for EnvironmentSet {
    fn default() -> Self {
        Self::diagonal(DEFAULT_START_DISTANCE, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimProfile {
    pub dt: f64,
    pub steps: usize,
    pub success_radius: f64,
    pub sensor_floor: f64,
    /// World length of one body unit; sensor offsets are scaled by it.
    pub body_length: f64,
}

impl SimProfile {
    pub fn new(
        dt: f64,
        steps: usize,
        success_radius: f64,
        sensor_floor: f64,
        body_length: f64,
    ) -> Result<Self, SimError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SimError::InvalidProfile(format!("dt must be positive, got {dt}")));
        }
        if steps == 0 {
            return Err(SimError::InvalidProfile("steps must be at least 1".into()));
        }
        if !(sensor_floor > 0.0 && sensor_floor < success_radius) {
            return Err(SimError::InvalidProfile(format!(
                "need 0 < sensor_floor ({sensor_floor}) < success_radius ({success_radius})"
            )));
        }
        if !(body_length > 0.0 && body_length.is_finite()) {
            return Err(SimError::InvalidProfile(format!(
                "body_length must be positive, got {body_length}"
            )));
        }
        Ok(Self {
            dt,
            steps,
            success_radius,
            sensor_floor,
            body_length,
        })
    }

    /// dt 0.1 for 10^5 steps.
    pub const fn full() -> Self {
        Self {
            dt: 0.1,
            steps: 100_000,
            success_radius: DEFAULT_SUCCESS_RADIUS,
            sensor_floor: DEFAULT_SENSOR_FLOOR,
            body_length: DEFAULT_BODY_LENGTH,
        }
    }

    /// dt 0.1 for 2·10^4 steps; the default for sweeps.
    pub const fn desk() -> Self {
        Self {
            dt: 0.1,
            steps: 20_000,
            success_radius: DEFAULT_SUCCESS_RADIUS,
            sensor_floor: DEFAULT_SENSOR_FLOOR,
            body_length: DEFAULT_BODY_LENGTH,
        }
    }

    /// World-frame offsets of both sensors for `design`.
    pub fn mount(&self, design: &BodyDesign) -> (Vec2, Vec2) {
        let s = self.body_length;
        (
            Vec2::new(design.l1.x * s, design.l1.y * s),
            Vec2::new(design.l2.x * s, design.l2.y * s),
        )
    }

    /// Same horizon in time with half the step size.
    pub fn refined(&self) -> Self {
        Self {
            dt: self.dt / 2.0,
            steps: self.steps * 2,
            ..*self
        }
    }
}

/// Outcome of one trial without the sensor traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub success: bool,
    /// Closest approach of the piecewise-linear trajectory to the origin.
    pub min_distance: f64,
    /// Distance to the origin of the last integrated pose.
    pub end_distance: f64,
    pub steps_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub success: bool,
    pub min_distance: f64,
    pub end_distance: f64,
    pub steps_used: usize,
    /// `steps_used + 1` samples; index `t` is the reading at pose `t`.
    pub sensor_trace_1: Vec<f64>,
    pub sensor_trace_2: Vec<f64>,
}

impl TrialResult {
    pub fn outcome(&self) -> TrialOutcome {
        TrialOutcome {
            success: self.success,
            min_distance: self.min_distance,
            end_distance: self.end_distance,
            steps_used: self.steps_used,
        }
    }
}

/// Inverse-square intensity from a squared distance, with the distance
/// floored at `sqrt(floor2)`.
#[inline(always)]
fn intensity(dist2: f64, floor2: f64) -> f64 {
    1.0 / dist2.max(floor2)
}

/// World position of a body-frame sensor offset.
pub fn sensor_world_position(pose: &Pose, offset: Vec2) -> Vec2 {
    let (sin_a, cos_a) = trig::sin_cos(pose.alpha);
    Vec2::new(
        pose.x + (cos_a * offset.x - sin_a * offset.y),
        pose.y + (sin_a * offset.x + cos_a * offset.y),
    )
}

/// Inverse-square light intensity at a sensor, with the distance floored.
pub fn sensor_value(pose: &Pose, offset: Vec2, floor: f64) -> f64 {
    let p = sensor_world_position(pose, offset);
    intensity(p.x * p.x + p.y * p.y, floor * floor)
}

/// Per-trial constants of the lane kernel.
#[derive(Debug, Clone, Copy)]
struct Drive {
    l1x: f64,
    l1y: f64,
    l2x: f64,
    l2y: f64,
    w1: f64,
    w2: f64,
}

impl Drive {
    fn new(design: &BodyDesign, policy: &Policy, profile: &SimProfile) -> Self {
        let (l1, l2) = profile.mount(design);
        Self {
            l1x: l1.x,
            l1y: l1.y,
            l2x: l2.x,
            l2y: l2.y,
            w1: policy.w1,
            w2: policy.w2,
        }
    }
}

/// One explicit-Euler update given the heading's sine and cosine. Returns the
/// next `(x, y, alpha)` and the readings `(s1, s2)` at the current pose.
/// Position is advanced with the pre-step heading.
#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn euler(
    x: f64,
    y: f64,
    alpha: f64,
    sin_a: f64,
    cos_a: f64,
    k: &Drive,
    dt: f64,
    floor2: f64,
) -> (f64, f64, f64, f64, f64) {
    let p1x = x + (cos_a * k.l1x - sin_a * k.l1y);
    let p1y = y + (sin_a * k.l1x + cos_a * k.l1y);
    let p2x = x + (cos_a * k.l2x - sin_a * k.l2y);
    let p2y = y + (sin_a * k.l2x + cos_a * k.l2y);
    let s1 = intensity(p1x * p1x + p1y * p1y, floor2);
    let s2 = intensity(p2x * p2x + p2y * p2y, floor2);
    let a = k.w1 * s1;
    let b = k.w2 * s2;
    let v = (a + b) / 2.0;
    (
        x + v * cos_a * dt,
        y + v * sin_a * dt,
        alpha + (a - b) * dt,
        s1,
        s2,
    )
}

/// One explicit-Euler step of the pose ODE using the profile's `dt`, sensor
/// floor and body scale.
pub fn step(pose: &Pose, design: &BodyDesign, policy: &Policy, profile: &SimProfile) -> Pose {
    let (sin_a, cos_a) = trig::sin_cos(pose.alpha);
    let (x, y, alpha, _, _) = euler(
        pose.x,
        pose.y,
        pose.alpha,
        sin_a,
        cos_a,
        &Drive::new(design, policy, profile),
        profile.dt,
        profile.sensor_floor * profile.sensor_floor,
    );
    Pose { x, y, alpha }
}

/// Distance from the origin to the segment `p -> q`.
pub fn segment_distance_to_origin(p: Vec2, q: Vec2) -> f64 {
    let dx = q.x - p.x;
    let dy = q.y - p.y;
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (-(p.x * dx + p.y * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Vec2::new(p.x + t * dx, p.y + t * dy).norm()
}

/// Squared distance of the part of segment `p -> q` that can lower a running
/// minimum already containing `|p|^2`: the interior foot of the perpendicular
/// when it lies strictly inside the segment, otherwise the endpoint `q`.
#[inline(always)]
fn segment_candidate2(px: f64, py: f64, qx: f64, qy: f64) -> f64 {
    let dx = qx - px;
    let dy = qy - py;
    let toward = px * dx + py * dy;
    let beyond = qx * dx + qy * dy;
    let q2 = qx * qx + qy * qy;
    if toward < 0.0 && beyond > 0.0 {
        let t = (-toward / (dx * dx + dy * dy)).min(1.0);
        let cx = px + t * dx;
        let cy = py + t * dy;
        cx * cx + cy * cy
    } else {
        q2
    }
}

/// Largest `m` with `sqrt(m) <= radius`, so that `m2 <= threshold` is exactly
/// `sqrt(m2) <= radius`.
fn squared_threshold(radius: f64) -> f64 {
    let mut m = radius * radius;
    while m.next_up().sqrt() <= radius {
        m = m.next_up();
    }
    while m.sqrt() > radius {
        m = m.next_down();
    }
    m
}

fn integrate<F: FnMut(f64, f64)>(
    design: &BodyDesign,
    policy: &Policy,
    env: &Environment,
    profile: &SimProfile,
    mut record: F,
) -> (TrialOutcome, Pose) {
    let threshold = squared_threshold(profile.success_radius);
    let floor2 = profile.sensor_floor * profile.sensor_floor;
    let drive = Drive::new(design, policy, profile);
    let mut pose = env.start;
    let mut min2 = pose.x * pose.x + pose.y * pose.y;
    let mut steps_used = 0;
    while min2 > threshold && steps_used < profile.steps {
        let (sin_a, cos_a) = trig::sin_cos(pose.alpha);
        let (x, y, alpha, s1, s2) = euler(pose.x, pose.y, pose.alpha, sin_a, cos_a, &drive, profile.dt, floor2);
        record(s1, s2);
        let seg2 = segment_candidate2(pose.x, pose.y, x, y);
        if seg2 < min2 {
            min2 = seg2;
        }
        pose = Pose { x, y, alpha };
        steps_used += 1;
    }
    let outcome = TrialOutcome {
        success: min2 <= threshold,
        min_distance: min2.sqrt(),
        end_distance: pose.distance_to_origin(),
        steps_used,
    };
    (outcome, pose)
}

/// Runs one trial and records both sensor traces.
pub fn simulate(design: &BodyDesign, policy: &Policy, env: &Environment, profile: &SimProfile) -> TrialResult {
    let mut t1 = Vec::new();
    let mut t2 = Vec::new();
    let (outcome, last) = integrate(design, policy, env, profile, |s1, s2| {
        t1.push(s1);
        t2.push(s2);
    });
    let (l1, l2) = profile.mount(design);
    t1.push(sensor_value(&last, l1, profile.sensor_floor));
    t2.push(sensor_value(&last, l2, profile.sensor_floor));
    TrialResult {
        success: outcome.success,
        min_distance: outcome.min_distance,
        end_distance: outcome.end_distance,
        steps_used: outcome.steps_used,
        sensor_trace_1: t1,
        sensor_trace_2: t2,
    }
}

/// Same trajectory as [`simulate`] without the traces.
pub fn simulate_outcome(design: &BodyDesign, policy: &Policy, env: &Environment, profile: &SimProfile) -> TrialOutcome {
    integrate(design, policy, env, profile, |_, _| {}).0
}

/// One trial to run through [`simulate_batch`].
#[derive(Debug, Clone, Copy)]
pub struct TrialSpec {
    pub design: BodyDesign,
    pub policy: Policy,
    pub start: Pose,
}

const LANES: usize = 8;

/// Runs independent trials in lockstep groups of eight, laid out so the
/// per-step arithmetic vectorizes. Each outcome is bit-identical to
/// [`simulate_outcome`] on the same inputs.
pub fn simulate_batch(specs: &[TrialSpec], profile: &SimProfile) -> Vec<TrialOutcome> {
    let threshold = squared_threshold(profile.success_radius);
    let floor2 = profile.sensor_floor * profile.sensor_floor;
    let dt = profile.dt;
    let mut out = Vec::with_capacity(specs.len());
    for chunk in specs.chunks(LANES) {
        let n = chunk.len();
        let mut drive = [Drive::new(&BodyDesign::canonical(), &Policy { w1: 0.0, w2: 0.0 }, profile); LANES];
        let mut x = [0.0f64; LANES];
        let mut y = [0.0f64; LANES];
        let mut a = [0.0f64; LANES];
        let mut min2 = [0.0f64; LANES];
        let mut steps = [0u64; LANES];
        let mut live = [false; LANES];
        for (i, spec) in chunk.iter().enumerate() {
            drive[i] = Drive::new(&spec.design, &spec.policy, profile);
            x[i] = spec.start.x;
            y[i] = spec.start.y;
            a[i] = spec.start.alpha;
            min2[i] = x[i] * x[i] + y[i] * y[i];
            live[i] = min2[i] > threshold;
        }
        let mut sn = [0.0f64; LANES];
        let mut cs = [0.0f64; LANES];
        let mut t = 0;
        while t < profile.steps && live.iter().any(|&l| l) {
            if a.iter().all(|v| v.abs() < trig::REDUCE_LIMIT) {
                for i in 0..LANES {
                    (sn[i], cs[i]) = trig::sin_cos_reduced(a[i]);
                }
            } else {
                for i in 0..LANES {
                    (sn[i], cs[i]) = trig::sin_cos(a[i]);
                }
            }
            for i in 0..LANES {
                let (nx, ny, na, _, _) = euler(x[i], y[i], a[i], sn[i], cs[i], &drive[i], dt, floor2);
                let seg2 = segment_candidate2(x[i], y[i], nx, ny);
                let on = live[i];
                x[i] = if on { nx } else { x[i] };
                y[i] = if on { ny } else { y[i] };
                a[i] = if on { na } else { a[i] };
                min2[i] = if on && seg2 < min2[i] { seg2 } else { min2[i] };
                steps[i] += on as u64;
                live[i] = on && min2[i] > threshold;
            }
            t += 1;
        }
        for i in 0..n {
            out.push(TrialOutcome {
                success: min2[i] <= threshold,
                min_distance: min2[i].sqrt(),
                end_distance: (x[i] * x[i] + y[i] * y[i]).sqrt(),
                steps_used: steps[i] as usize,
            });
        }
    }
    out
}

/// One outcome per environment, in environment order.
pub fn evaluate_all(
    design: &BodyDesign,
    policy: &Policy,
    envset: &EnvironmentSet,
    profile: &SimProfile,
) -> Vec<TrialOutcome> {
    let specs: Vec<TrialSpec> = envset
        .iter()
        .map(|env| TrialSpec {
            design: *design,
            policy: *policy,
            start: env.start,
        })
        .collect();
    simulate_batch(&specs, profile)
}

/// Full traces for every environment.
pub fn simulate_all(
    design: &BodyDesign,
    policy: &Policy,
    envset: &EnvironmentSet,
    profile: &SimProfile,
) -> Vec<TrialResult> {
    envset
        .iter()
        .map(|env| simulate(design, policy, env, profile))
        .collect()
}
