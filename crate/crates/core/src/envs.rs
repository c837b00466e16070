//! Deterministic episodic environments with ground-truth task rewards.
//!
//! Task rewards are only ever used for scripting experts and for
//! evaluation; the learner sees nothing but state-action pairs.
//!
//! State layouts:
//!
//! | env                  | state                                   | action |
//! |----------------------|-----------------------------------------|--------|
//! | `reacher-point`      | agent xy, target xy × n                 | 2      |
//! | `reacher-arm2`       | q1, q2, fingertip xy, target xy × n     | 2      |
//! | `locomotor-1d`       | x, v                                    | 1      |
//! | `sequential-reacher` | agent xy, object xy, goal xy, phase     | 2      |

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use thiserror::Error;

use crate::rng::{self, Rng};

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("invalid environment spec: {0}")]
    InvalidSpec(String),
    #[error("action has {got} components, expected {expected}")]
    ActionDim { expected: usize, got: usize },
    #[error("non-finite action component {index}")]
    NonFiniteAction { index: usize },
    #[error("episode already finished at t = {0}")]
    Finished(usize),
    #[error("target index {index} out of range (env has {n})")]
    TargetIndex { index: usize, n: usize },
    #[error("environment `{0}` has no planar effector")]
    NoEffector(&'static str),
    #[error("unknown environment `{0}`")]
    UnknownEnv(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EnvKind {
    ReacherPoint,
    ReacherArm2,
    Locomotor1d,
    SequentialReacher,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::ReacherPoint => "reacher-point",
            EnvKind::ReacherArm2 => "reacher-arm2",
            EnvKind::Locomotor1d => "locomotor-1d",
            EnvKind::SequentialReacher => "sequential-reacher",
        }
    }

    pub fn is_reacher(self) -> bool {
        matches!(self, EnvKind::ReacherPoint | EnvKind::ReacherArm2)
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reacher-point" => Ok(EnvKind::ReacherPoint),
            "reacher-arm2" => Ok(EnvKind::ReacherArm2),
            "locomotor-1d" => Ok(EnvKind::Locomotor1d),
            "sequential-reacher" => Ok(EnvKind::SequentialReacher),
            other => Err(EnvError::UnknownEnv(other.to_string())),
        }
    }
}

/// How reacher targets are placed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetLayout {
    /// One layout drawn from this seed and shared by every episode.
    Fixed(u64),
    /// A fresh layout on every reset.
    PerEpisode,
}

impl fmt::Display for TargetLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetLayout::Fixed(s) => write!(f, "fixed:{s}"),
            TargetLayout::PerEpisode => f.write_str("per-episode"),
        }
    }
}

impl FromStr for TargetLayout {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || EnvError::InvalidSpec(format!("bad target layout `{s}`"));
        match s.split_once(':') {
            None if s == "per-episode" => Ok(TargetLayout::PerEpisode),
            None if s == "fixed" => Ok(TargetLayout::Fixed(0)),
            Some(("fixed", n)) => n.trim().parse().map(TargetLayout::Fixed).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

/// Static description of an environment instance.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvSpec {
    pub kind: EnvKind,
    /// Number of targets (reacher variants only).
    pub n_targets: usize,
    pub horizon: usize,
    pub dt: f64,
    pub action_bound: f64,
    pub success_radius: f64,
    /// Radius of the disk targets (and sequential-reacher items) live in.
    pub workspace_radius: f64,
    pub link_lengths: [f64; 2],
    /// Probability that a sequential-reacher reset starts with the object
    /// already carried.
    pub carry_start_prob: f64,
    /// Reacher target placement.
    pub target_layout: TargetLayout,
}

/// Velocity reference of the locomotor's forward/backward skills.
pub const LOCOMOTOR_SPEED: f64 = 1.0;

/// Minimum distance between any two targets of a reacher reset.
pub const MIN_TARGET_SEPARATION: f64 = 0.4;

impl EnvSpec {
    /// Defaults: T = 50, dt = 0.05, action bound 1, ε = 0.05, workspace
    /// radius 1, links 0.5/0.5. The sequential reacher gets T = 100 because
    /// it chains two reaches, and the arm gets T = 100 because joint paths
    /// can exceed 2.5 rad.
    pub fn new(kind: EnvKind, n_targets: usize) -> Self {
        EnvSpec {
            kind,
            n_targets: if kind.is_reacher() { n_targets } else { 0 },
            horizon: if matches!(kind, EnvKind::SequentialReacher | EnvKind::ReacherArm2) { 100 } else { 50 },
            dt: 0.05,
            action_bound: 1.0,
            success_radius: 0.05,
            workspace_radius: 1.0,
            link_lengths: [0.5, 0.5],
            carry_start_prob: 0.5,
            target_layout: TargetLayout::Fixed(0),
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: &str| Err(EnvError::InvalidSpec(m.to_string()));
        if self.horizon < 1 {
            return bad("horizon must be >= 1");
        }
        if !(self.action_bound > 0.0 && self.action_bound.is_finite()) {
            return bad("action_bound must be positive");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.success_radius > 0.0) {
            return bad("success_radius must be positive");
        }
        if !(self.workspace_radius > 0.0) {
            return bad("workspace_radius must be positive");
        }
        if self.kind.is_reacher() && ![1, 2, 4].contains(&self.n_targets) {
            return bad("n_targets must be 1, 2 or 4 for reacher variants");
        }
        if self.kind == EnvKind::ReacherArm2 && self.link_lengths.iter().any(|&l| !(l > 0.0)) {
            return bad("link lengths must be positive");
        }
        if self.kind.is_reacher() {
            let (lo, hi) = self.target_annulus();
            if !(lo < hi) {
                return bad("target annulus is empty");
            }
        }
        if !(0.0..=1.0).contains(&self.carry_start_prob) {
            return bad("carry_start_prob must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn state_dim(&self) -> usize {
        match self.kind {
            EnvKind::ReacherPoint => 2 + 2 * self.n_targets,
            EnvKind::ReacherArm2 => 4 + 2 * self.n_targets,
            EnvKind::Locomotor1d => 2,
            EnvKind::SequentialReacher => 7,
        }
    }

    pub fn action_dim(&self) -> usize {
        match self.kind {
            EnvKind::Locomotor1d => 1,
            _ => 2,
        }
    }

    /// Number of ground-truth skills, i.e. the length of
    /// [`StepResult::task_rewards`].
    pub fn n_skills(&self) -> usize {
        match self.kind {
            EnvKind::ReacherPoint | EnvKind::ReacherArm2 => self.n_targets,
            EnvKind::Locomotor1d => 3,
            EnvKind::SequentialReacher => 2,
        }
    }

    /// Radial range targets are drawn from. The arm's outer radius follows
    /// the workspace, not the links, so a workspace wider than the arm's
    /// reach yields infeasible targets.
    pub fn target_annulus(&self) -> (f64, f64) {
        match self.kind {
            EnvKind::ReacherArm2 => {
                let [l1, l2] = self.link_lengths;
                ((l1 - l2).abs() + 0.3 * (l1 + l2), 0.9 * self.workspace_radius)
            }
            _ => (0.3 * self.workspace_radius, self.workspace_radius),
        }
    }

    /// Samples an initial state. Agents start at the canonical pose; targets
    /// are drawn uniformly (by area) from the target annulus with a minimum
    /// pairwise separation, either once per layout seed or on every reset.
    pub fn reset(&self, seed: u64) -> EnvState {
        let mut r = rng::stream(seed, "env-reset", &[]);
        match self.kind {
            EnvKind::SequentialReacher => {
                let carry = r.gen::<f64>() < self.carry_start_prob;
                self.reset_sequential(&mut r, carry)
            }
            _ => self.reset_with(&mut r),
        }
    }

    /// Sequential-reacher reset with an explicit start phase (0 = object
    /// resting, 1 = object in hand). Other envs ignore `phase`.
    pub fn reset_in_phase(&self, seed: u64, phase: u8) -> EnvState {
        let mut r = rng::stream(seed, "env-reset", &[]);
        match self.kind {
            EnvKind::SequentialReacher => {
                let _ = r.gen::<f64>();
                self.reset_sequential(&mut r, phase == 1)
            }
            _ => self.reset_with(&mut r),
        }
    }

    fn reset_with(&self, r: &mut Rng) -> EnvState {
        let targets = match self.target_layout {
            TargetLayout::Fixed(seed) => self.sample_targets(&mut rng::stream(seed, "target-layout", &[])),
            TargetLayout::PerEpisode => self.sample_targets(r),
        };
        let mut values = Vec::with_capacity(self.state_dim());
        match self.kind {
            EnvKind::ReacherPoint => {
                values.extend([0.0, 0.0]);
                values.extend(targets.iter().flatten());
            }
            EnvKind::ReacherArm2 => {
                let tip = forward_kinematics([0.0, 0.0], self.link_lengths);
                values.extend([0.0, 0.0, tip[0], tip[1]]);
                values.extend(targets.iter().flatten());
            }
            EnvKind::Locomotor1d => values.extend([0.0, 0.0]),
            EnvKind::SequentialReacher => unreachable!("handled by reset_sequential"),
        }
        EnvState { values, t: 0 }
    }

    fn reset_sequential(&self, r: &mut Rng, carry: bool) -> EnvState {
        let rad = self.workspace_radius;
        let sep = MIN_TARGET_SEPARATION;
        loop {
            let agent = sample_disk(r, 0.0, 0.6 * rad);
            let object = if carry { agent } else { sample_disk(r, 0.0, 0.6 * rad) };
            let goal = sample_disk(r, 0.0, 0.6 * rad);
            if dist(object, goal) < sep || (!carry && dist(agent, object) < sep) {
                continue;
            }
            let phase = if carry { 1.0 } else { 0.0 };
            return EnvState {
                values: vec![agent[0], agent[1], object[0], object[1], goal[0], goal[1], phase],
                t: 0,
            };
        }
    }

    fn sample_targets(&self, r: &mut Rng) -> Vec<[f64; 2]> {
        let (lo, hi) = self.target_annulus();
        let mut out: Vec<[f64; 2]> = Vec::with_capacity(self.n_targets);
        while out.len() < self.n_targets {
            let p = sample_disk(r, lo, hi);
            if out.iter().all(|q| dist(p, *q) >= MIN_TARGET_SEPARATION) {
                out.push(p);
            }
        }
        out
    }

    /// Advances one step. Action components are clipped to ±action_bound.
    pub fn step(&self, state: &EnvState, action: &[f64]) -> Result<StepResult, EnvError> {
        if action.len() != self.action_dim() {
            return Err(EnvError::ActionDim {
                expected: self.action_dim(),
                got: action.len(),
            });
        }
        if let Some(index) = action.iter().position(|a| !a.is_finite()) {
            return Err(EnvError::NonFiniteAction { index });
        }
        if state.t >= self.horizon || self.is_terminal_success(state) {
            return Err(EnvError::Finished(state.t));
        }
        let b = self.action_bound;
        let a: Vec<f64> = action.iter().map(|v| v.clamp(-b, b)).collect();
        let dt = self.dt;
        let mut s = state.values.clone();
        match self.kind {
            EnvKind::ReacherPoint => {
                s[0] += a[0] * dt;
                s[1] += a[1] * dt;
            }
            EnvKind::ReacherArm2 => {
                s[0] = wrap_angle(s[0] + a[0] * dt);
                s[1] = wrap_angle(s[1] + a[1] * dt);
                let tip = forward_kinematics([s[0], s[1]], self.link_lengths);
                s[2] = tip[0];
                s[3] = tip[1];
            }
            EnvKind::Locomotor1d => {
                s[1] += a[0] * dt;
                s[0] += s[1] * dt;
            }
            EnvKind::SequentialReacher => {
                s[0] += a[0] * dt;
                s[1] += a[1] * dt;
                if s[6] == 1.0 {
                    s[2] += a[0] * dt;
                    s[3] += a[1] * dt;
                } else if dist([s[0], s[1]], [s[2], s[3]]) < self.success_radius {
                    s[6] = 1.0;
                }
            }
        }
        let next = EnvState {
            values: s,
            t: state.t + 1,
        };
        let task_rewards = self.task_rewards(&next);
        let done = next.t >= self.horizon || self.is_terminal_success(&next);
        Ok(StepResult {
            next_state: next,
            task_rewards,
            done,
        })
    }

    /// Ground-truth reward of every skill at `state`.
    pub fn task_rewards(&self, state: &EnvState) -> Vec<f64> {
        let s = &state.values;
        match self.kind {
            EnvKind::ReacherPoint | EnvKind::ReacherArm2 => {
                let e = self.effector(state).expect("reacher has an effector");
                (0..self.n_targets)
                    .map(|j| -dist(e, self.target(state, j).expect("index in range")))
                    .collect()
            }
            EnvKind::Locomotor1d => vec![s[1], -s[1], -s[1].abs()],
            EnvKind::SequentialReacher => vec![
                -dist([s[0], s[1]], [s[2], s[3]]),
                -dist([s[2], s[3]], [s[4], s[5]]),
            ],
        }
    }

    fn is_terminal_success(&self, state: &EnvState) -> bool {
        let s = &state.values;
        self.kind == EnvKind::SequentialReacher
            && s[6] == 1.0
            && dist([s[2], s[3]], [s[4], s[5]]) < self.success_radius
    }

    /// Planar effector position (agent or fingertip).
    pub fn effector(&self, state: &EnvState) -> Result<[f64; 2], EnvError> {
        let s = &state.values;
        match self.kind {
            EnvKind::ReacherPoint | EnvKind::SequentialReacher => Ok([s[0], s[1]]),
            EnvKind::ReacherArm2 => Ok([s[2], s[3]]),
            EnvKind::Locomotor1d => Err(EnvError::NoEffector("locomotor-1d")),
        }
    }

    /// Position of target `j`. For the sequential reacher target 0 is the
    /// object and target 1 the goal.
    pub fn target(&self, state: &EnvState, j: usize) -> Result<[f64; 2], EnvError> {
        let s = &state.values;
        let (n, base) = match self.kind {
            EnvKind::ReacherPoint => (self.n_targets, 2),
            EnvKind::ReacherArm2 => (self.n_targets, 4),
            EnvKind::SequentialReacher => (2, 2),
            EnvKind::Locomotor1d => (0, 0),
        };
        if j >= n {
            return Err(EnvError::TargetIndex { index: j, n });
        }
        Ok([s[base + 2 * j], s[base + 2 * j + 1]])
    }

    /// Strict ε-ball test between the effector and target `j` (for the
    /// sequential reacher target 1 is tested against the object).
    pub fn success(&self, state: &EnvState, j: usize, eps: f64) -> Result<bool, EnvError> {
        let target = self.target(state, j)?;
        let probe = if self.kind == EnvKind::SequentialReacher && j == 1 {
            [state.values[2], state.values[3]]
        } else {
            self.effector(state)?
        };
        Ok(dist(probe, target) < eps)
    }

    /// Sequential reacher: the object has been delivered to the goal.
    pub fn delivered(&self, state: &EnvState) -> bool {
        self.is_terminal_success(state)
    }
}

/// One environment state plus the step index.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvState {
    pub values: Vec<f64>,
    pub t: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub next_state: EnvState,
    /// Ground-truth reward per skill (per target for reachers).
    pub task_rewards: Vec<f64>,
    pub done: bool,
}

/// Fingertip of a planar two-link chain rooted at the origin.
pub fn forward_kinematics(q: [f64; 2], links: [f64; 2]) -> [f64; 2] {
    let a = q[0] + q[1];
    [
        links[0] * q[0].cos() + links[1] * a.cos(),
        links[0] * q[0].sin() + links[1] * a.sin(),
    ]
}

pub fn wrap_angle(a: f64) -> f64 {
    let mut x = (a + PI).rem_euclid(2.0 * PI) - PI;
    if x == -PI {
        x = PI;
    }
    x
}

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Uniform-by-area sample from the annulus `lo <= r <= hi`.
fn sample_disk(r: &mut Rng, lo: f64, hi: f64) -> [f64; 2] {
    let u: f64 = r.gen();
    let rad = (lo * lo + u * (hi * hi - lo * lo)).sqrt();
    let th = r.gen_range(-PI..PI);
    [rad * th.cos(), rad * th.sin()]
}
