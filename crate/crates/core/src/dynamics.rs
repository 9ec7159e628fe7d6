//! Vehicle state, control, and trajectory types plus the kinematic rollout
//! mapping control sequences to state trajectories.
//!
//! The action space is planar acceleration; the rollout is a forward-Euler
//! double integrator with heading derived from the velocity vector
//! (heading-from-velocity unicycle).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed below which the heading is carried over from the previous step
/// instead of being derived from `atan2(vy, vx)`.
pub const V_HEADING_EPS: f64 = 0.05;

/// Default acceleration bound in m/s^2 (dataset maximum).
pub const DEFAULT_A_MAX: f64 = 6.65;

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(std::f64::consts::TAU);
    if r > std::f64::consts::PI {
        r -= std::f64::consts::TAU;
    }
    r
}

/// Per-vehicle state: position, velocity, and heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    /// Heading in radians, wrapped to `(-pi, pi]`.
    pub theta: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, vx: f64, vy: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            vx,
            vy,
            theta: wrap_angle(theta),
        }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.vx.is_finite()
            && self.vy.is_finite()
            && self.theta.is_finite()
    }
}

/// Planar acceleration command.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Control {
    pub ax: f64,
    pub ay: f64,
}

impl Control {
    pub fn new(ax: f64, ay: f64) -> Self {
        Self { ax, ay }
    }

    pub fn norm(&self) -> f64 {
        self.ax.hypot(self.ay)
    }

    pub fn is_finite(&self) -> bool {
        self.ax.is_finite() && self.ay.is_finite()
    }
}

/// One agent's control trajectory over the planning horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSequence {
    pub controls: Vec<Control>,
    pub dt: f64,
}

impl ControlSequence {
    pub fn new(controls: Vec<Control>, dt: f64) -> Self {
        Self { controls, dt }
    }

    /// All-zero sequence of the given horizon.
    pub fn zeros(horizon: usize, dt: f64) -> Self {
        Self {
            controls: vec![Control::default(); horizon],
            dt,
        }
    }

    pub fn len(&self) -> usize {
        self.controls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.controls.is_empty() {
            return Err(Error::InvalidInput("empty control sequence".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {}", self.dt)));
        }
        if let Some(i) = self.controls.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("control at step {i}")));
        }
        Ok(())
    }
}

/// Joint control profile: one control sequence per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointProfile {
    pub sequences: Vec<ControlSequence>,
}

impl JointProfile {
    pub fn new(sequences: Vec<ControlSequence>) -> Self {
        Self { sequences }
    }

    pub fn zeros(n_agents: usize, horizon: usize, dt: f64) -> Self {
        Self {
            sequences: vec![ControlSequence::zeros(horizon, dt); n_agents],
        }
    }

    pub fn n_agents(&self) -> usize {
        self.sequences.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sequences.is_empty() {
            return Err(Error::InvalidInput("joint profile has no agents".into()));
        }
        let horizon = self.sequences[0].len();
        let dt = self.sequences[0].dt;
        for seq in &self.sequences {
            seq.validate()?;
            if seq.len() != horizon || seq.dt != dt {
                return Err(Error::InvalidInput(
                    "all sequences in a joint profile must share horizon and dt".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Rolled-out state trajectory; `states[0]` is the initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<VehicleState>,
    pub dt: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn final_state(&self) -> &VehicleState {
        self.states.last().expect("trajectory is never empty")
    }

    /// Positions of the future steps (indices `1..=T_f`).
    pub fn future_positions(&self) -> Vec<[f64; 2]> {
        self.states[1..].iter().map(|s| s.position()).collect()
    }
}

/// Forward-Euler double-integrator rollout.
///
/// `v(t+1) = v(t) + a(t) dt`, `p(t+1) = p(t) + v(t) dt + a(t) dt^2 / 2`;
/// the heading follows the velocity vector whenever the speed exceeds
/// [`V_HEADING_EPS`] and is carried over otherwise.
pub fn rollout(initial: &VehicleState, seq: &ControlSequence) -> Result<Trajectory> {
    seq.validate()?;
    if !initial.is_finite() {
        return Err(Error::NonFinite("initial state".into()));
    }
    let dt = seq.dt;
    let mut states = Vec::with_capacity(seq.len() + 1);
    states.push(*initial);
    let mut cur = *initial;
    for c in &seq.controls {
        let nx = cur.x + cur.vx * dt + 0.5 * c.ax * dt * dt;
        let ny = cur.y + cur.vy * dt + 0.5 * c.ay * dt * dt;
        let nvx = cur.vx + c.ax * dt;
        let nvy = cur.vy + c.ay * dt;
        let speed = nvx.hypot(nvy);
        let ntheta = if speed > V_HEADING_EPS {
            nvy.atan2(nvx)
        } else {
            cur.theta
        };
        cur = VehicleState {
            x: nx,
            y: ny,
            vx: nvx,
            vy: nvy,
            theta: ntheta,
        };
        states.push(cur);
    }
    Ok(Trajectory { states, dt })
}

/// Element-wise rollout of a joint profile from the given initial states.
pub fn rollout_joint(initial_states: &[VehicleState], profile: &JointProfile) -> Result<Vec<Trajectory>> {
    if initial_states.len() != profile.n_agents() {
        return Err(Error::AgentCountMismatch {
            expected: initial_states.len(),
            actual: profile.n_agents(),
        });
    }
    initial_states
        .iter()
        .zip(&profile.sequences)
        .map(|(s, seq)| rollout(s, seq))
        .collect()
}

/// Projects every control onto the Euclidean norm ball of radius `a_max`.
/// Idempotent; controls already inside the ball are unchanged.
pub fn project_controls(seq: &ControlSequence, a_max: f64) -> ControlSequence {
    debug_assert!(a_max > 0.0);
    let controls = seq
        .controls
        .iter()
        .map(|c| {
            let n = c.norm();
            if n > a_max {
                Control::new(c.ax * a_max / n, c.ay * a_max / n)
            } else {
                *c
            }
        })
        .collect();
    ControlSequence {
        controls,
        dt: seq.dt,
    }
}
