//! The game instance: initial states, goals, histories, horizon, and bounds.

use serde::{Deserialize, Serialize};

use crate::dynamics::VehicleState;
use crate::error::{Error, Result};

/// Default per-component scale applied inside the goal term
/// (x, y, vx, vy, theta). Positions dominate; velocity and heading
/// mismatches are down-weighted.
pub const DEFAULT_COMPONENT_SCALE: [f64; 5] = [1.0, 1.0, 0.1, 0.1, 0.1];

/// Target state at the end of the planning horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub theta: f64,
    /// Dimensionless per-component weights for the goal residual.
    #[serde(default = "default_component_scale")]
    pub component_scale: [f64; 5],
}

fn default_component_scale() -> [f64; 5] {
    DEFAULT_COMPONENT_SCALE
}

impl GoalState {
    pub fn new(x: f64, y: f64, vx: f64, vy: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            vx,
            vy,
            theta,
            component_scale: DEFAULT_COMPONENT_SCALE,
        }
    }

    pub fn from_state(s: &VehicleState) -> Self {
        Self::new(s.x, s.y, s.vx, s.vy, s.theta)
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

/// A multi-vehicle interaction instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Identifier used in reports and file names.
    pub scene_id: String,
    /// State of each agent at the planning instant.
    pub initial_states: Vec<VehicleState>,
    /// Goal states; absent in prediction mode.
    pub goals: Option<Vec<GoalState>>,
    /// Per-agent observed history (the second before the planning instant).
    pub histories: Vec<Vec<VehicleState>>,
    /// Timestep in seconds.
    pub dt: f64,
    /// Planning horizon in steps.
    pub horizon: usize,
    /// Acceleration bound in m/s^2.
    pub a_max: f64,
    /// Bounding-box diagonal of the scene in meters, used for normalization.
    pub scene_diag: f64,
    /// Observed future positions per agent (`horizon` entries each), when
    /// the scenario carries ground truth for evaluation or calibration.
    #[serde(default)]
    pub ground_truth: Option<Vec<Vec<[f64; 2]>>>,
    /// Per-agent cost weights when the scenario carries them (demo suites).
    #[serde(default)]
    pub agent_weights: Option<Vec<f64>>,
}

impl Scenario {
    pub fn n_agents(&self) -> usize {
        self.initial_states.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_agents();
        if n == 0 {
            return Err(Error::InvalidInput("scenario has no agents".into()));
        }
        if !(self.dt > 0.0) || self.horizon == 0 {
            return Err(Error::InvalidInput("dt and horizon must be positive".into()));
        }
        if !(self.a_max > 0.0) || !(self.scene_diag > 0.0) {
            return Err(Error::InvalidInput("a_max and scene_diag must be positive".into()));
        }
        if let Some(s) = self.initial_states.iter().find(|s| !s.is_finite()) {
            return Err(Error::NonFinite(format!("initial state {s:?}")));
        }
        if let Some(goals) = &self.goals {
            if goals.len() != n {
                return Err(Error::AgentCountMismatch {
                    expected: n,
                    actual: goals.len(),
                });
            }
        }
        if self.histories.len() != n {
            return Err(Error::AgentCountMismatch {
                expected: n,
                actual: self.histories.len(),
            });
        }
        if let Some(gt) = &self.ground_truth {
            if gt.len() != n {
                return Err(Error::AgentCountMismatch {
                    expected: n,
                    actual: gt.len(),
                });
            }
            for g in gt {
                if g.len() != self.horizon {
                    return Err(Error::LengthMismatch(format!(
                        "ground truth has {} steps, horizon is {}",
                        g.len(),
                        self.horizon
                    )));
                }
            }
        }
        if let Some(w) = &self.agent_weights {
            if w.len() != n {
                return Err(Error::AgentCountMismatch {
                    expected: n,
                    actual: w.len(),
                });
            }
        }
        Ok(())
    }

    /// Returns the goals or an error when planning without them.
    pub fn require_goals(&self) -> Result<&[GoalState]> {
        self.goals.as_deref().ok_or(Error::MissingGoals)
    }

    /// Clone with goals removed (prediction mode).
    pub fn without_goals(&self) -> Scenario {
        let mut s = self.clone();
        s.goals = None;
        s
    }
}
