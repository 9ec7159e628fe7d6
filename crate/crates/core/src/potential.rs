//! The shared four-term potential, per-agent weighted costs, and analytical
//! gradients with respect to a single agent's control sequence.
//!
//! `Phi = lambda_goal * goal + lambda_smooth * smooth
//!        - lambda_efficiency * efficiency + lambda_safety * safety`,
//! with every term normalized to `[0, 1]` over the feasible set. The goal
//! term is the scaled terminal state error, the smoothness term sums squared
//! control differences, the efficiency term sums squared cumulative control
//! sums (entering with a minus sign), and the safety term is a pairwise
//! hinge-squared penalty below `d_safe`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{rollout_joint, JointProfile, Trajectory, V_HEADING_EPS};
use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Lower clamp for per-agent weights.
pub const W_MIN: f64 = 1e-4;
/// Upper clamp for per-agent weights.
pub const W_MAX: f64 = 10.0;
/// Default safety distance in meters.
pub const DEFAULT_D_SAFE: f64 = 3.0;

/// Per-term normalization constants; each is the analytic maximum of its
/// raw term over the feasible (norm-bounded, in-scene) set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizers {
    pub goal: f64,
    pub smooth: f64,
    pub efficiency: f64,
    pub safety: f64,
}

impl Normalizers {
    /// Analytic bounds for the given scenario dimensions.
    pub fn analytic(scenario: &Scenario, d_safe: f64) -> Self {
        let n = scenario.n_agents() as f64;
        let t = scenario.horizon as f64;
        let a_max = scenario.a_max;
        let dt = scenario.dt;
        Self {
            goal: n * scenario.scene_diag * scenario.scene_diag,
            smooth: (n * (t - 1.0).max(1.0) * (2.0 * a_max) * (2.0 * a_max)).max(f64::MIN_POSITIVE),
            efficiency: n * t * (a_max * t * dt) * (a_max * t * dt),
            safety: (n * (n - 1.0) * t * d_safe * d_safe).max(1.0),
        }
    }
}

/// Global weights of the potential terms plus the safety distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialConfig {
    pub lambda_goal: f64,
    pub lambda_smooth: f64,
    pub lambda_efficiency: f64,
    pub lambda_safety: f64,
    pub d_safe: f64,
    /// Explicit normalizer override; `None` selects the analytic bounds.
    #[serde(default)]
    pub normalizers: Option<Normalizers>,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            lambda_goal: 1.0,
            lambda_smooth: 1.0,
            lambda_efficiency: 1.0,
            lambda_safety: 1.0,
            d_safe: DEFAULT_D_SAFE,
            normalizers: None,
        }
    }
}

impl PotentialConfig {
    pub fn validate(&self) -> Result<()> {
        let ls = [
            self.lambda_goal,
            self.lambda_smooth,
            self.lambda_efficiency,
            self.lambda_safety,
        ];
        if ls.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(Error::InvalidInput("lambda weights must be finite and >= 0".into()));
        }
        if !(self.d_safe > 0.0) {
            return Err(Error::InvalidInput("d_safe must be positive".into()));
        }
        if let Some(n) = &self.normalizers {
            if !(n.goal > 0.0 && n.smooth > 0.0 && n.efficiency > 0.0 && n.safety > 0.0) {
                return Err(Error::InvalidInput("normalizers must be positive".into()));
            }
        }
        Ok(())
    }

    /// Prediction mode: no goal states, no goal cost.
    pub fn prediction(mut self) -> Self {
        self.lambda_goal = 0.0;
        self
    }

    /// Ablation switch -SC: only goal attraction and safety remain.
    pub fn ablation_sc(mut self) -> Self {
        self.lambda_smooth = 0.0;
        self.lambda_efficiency = 0.0;
        self
    }

    pub fn normalizers_for(&self, scenario: &Scenario) -> Normalizers {
        self.normalizers
            .unwrap_or_else(|| Normalizers::analytic(scenario, self.d_safe))
    }
}

/// Per-agent positive weights of the weighted potential game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentWeights {
    w: Vec<f64>,
}

impl AgentWeights {
    /// Clamps every entry into `[W_MIN, W_MAX]`.
    pub fn new(w: Vec<f64>) -> Self {
        Self {
            w: w.into_iter().map(|v| v.clamp(W_MIN, W_MAX)).collect(),
        }
    }

    /// All weights pinned to 1 (the -IW ablation and the default).
    pub fn ones(n: usize) -> Self {
        Self { w: vec![1.0; n] }
    }

    pub fn get(&self, i: usize) -> f64 {
        self.w[i]
    }

    pub fn set(&mut self, i: usize, v: f64) {
        self.w[i] = v.clamp(W_MIN, W_MAX);
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// The four normalized term values; `efficiency` is returned as a positive
/// magnitude and enters the potential with a minus sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialTerms {
    pub goal: f64,
    pub smooth: f64,
    pub efficiency: f64,
    pub safety: f64,
}

fn check_profile(scenario: &Scenario, profile: &JointProfile) -> Result<()> {
    profile.validate()?;
    if profile.n_agents() != scenario.n_agents() {
        return Err(Error::AgentCountMismatch {
            expected: scenario.n_agents(),
            actual: profile.n_agents(),
        });
    }
    if profile.sequences[0].len() != scenario.horizon {
        return Err(Error::LengthMismatch(format!(
            "profile horizon {} vs scenario horizon {}",
            profile.sequences[0].len(),
            scenario.horizon
        )));
    }
    Ok(())
}

/// Raw (unnormalized) goal term for one agent.
fn raw_goal_agent(scenario: &Scenario, traj: &Trajectory, i: usize) -> Result<f64> {
    let goals = scenario.require_goals()?;
    let g = &goals[i];
    let s = traj.final_state();
    let c = g.component_scale;
    let d = [
        s.x - g.x,
        s.y - g.y,
        s.vx - g.vx,
        s.vy - g.vy,
        crate::dynamics::wrap_angle(s.theta - g.theta),
    ];
    Ok(d.iter().zip(c.iter()).map(|(di, ci)| ci * ci * di * di).sum())
}

fn raw_smooth_agent(seq: &crate::dynamics::ControlSequence) -> f64 {
    seq.controls
        .windows(2)
        .map(|w| {
            let dx = w[1].ax - w[0].ax;
            let dy = w[1].ay - w[0].ay;
            dx * dx + dy * dy
        })
        .sum()
}

fn raw_efficiency_agent(seq: &crate::dynamics::ControlSequence) -> f64 {
    let dt = seq.dt;
    let mut cx = 0.0;
    let mut cy = 0.0;
    let mut total = 0.0;
    for c in &seq.controls {
        cx += c.ax * dt;
        cy += c.ay * dt;
        total += cx * cx + cy * cy;
    }
    total
}

/// Raw safety term over ordered pairs (each unordered pair counted twice),
/// summed over future steps `1..=T_f`.
fn raw_safety(trajectories: &[Trajectory], d_safe: f64) -> f64 {
    let n = trajectories.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            for t in 1..trajectories[i].len() {
                let pi = trajectories[i].states[t];
                let pj = trajectories[j].states[t];
                let dist = (pi.x - pj.x).hypot(pi.y - pj.y);
                let h = (d_safe - dist).max(0.0);
                total += 2.0 * h * h;
            }
        }
    }
    total
}

/// Evaluates the four normalized terms for the given joint profile.
pub fn potential_terms(
    scenario: &Scenario,
    profile: &JointProfile,
    cfg: &PotentialConfig,
) -> Result<PotentialTerms> {
    check_profile(scenario, profile)?;
    let trajectories = rollout_joint(&scenario.initial_states, profile)?;
    potential_terms_with(scenario, profile, cfg, &trajectories)
}

/// As [`potential_terms`] but reusing already rolled-out trajectories.
pub fn potential_terms_with(
    scenario: &Scenario,
    profile: &JointProfile,
    cfg: &PotentialConfig,
    trajectories: &[Trajectory],
) -> Result<PotentialTerms> {
    let norms = cfg.normalizers_for(scenario);
    let goal_raw = if cfg.lambda_goal > 0.0 || scenario.goals.is_some() {
        if scenario.goals.is_none() && cfg.lambda_goal > 0.0 {
            return Err(Error::MissingGoals);
        }
        if scenario.goals.is_some() {
            let mut total = 0.0;
            for (i, traj) in trajectories.iter().enumerate() {
                total += raw_goal_agent(scenario, traj, i)?;
            }
            total
        } else {
            0.0
        }
    } else {
        0.0
    };
    let smooth_raw: f64 = profile.sequences.iter().map(raw_smooth_agent).sum();
    let eff_raw: f64 = profile.sequences.iter().map(raw_efficiency_agent).sum();
    let safety_raw = raw_safety(trajectories, cfg.d_safe);
    Ok(PotentialTerms {
        goal: goal_raw / norms.goal,
        smooth: smooth_raw / norms.smooth,
        efficiency: eff_raw / norms.efficiency,
        safety: safety_raw / norms.safety,
    })
}

/// The shared potential `Phi`.
pub fn potential(scenario: &Scenario, profile: &JointProfile, cfg: &PotentialConfig) -> Result<f64> {
    let t = potential_terms(scenario, profile, cfg)?;
    Ok(combine(cfg, &t))
}

/// As [`potential`] but reusing already rolled-out trajectories.
pub fn potential_with(
    scenario: &Scenario,
    profile: &JointProfile,
    cfg: &PotentialConfig,
    trajectories: &[Trajectory],
) -> Result<f64> {
    let t = potential_terms_with(scenario, profile, cfg, trajectories)?;
    Ok(combine(cfg, &t))
}

fn combine(cfg: &PotentialConfig, t: &PotentialTerms) -> f64 {
    cfg.lambda_goal * t.goal + cfg.lambda_smooth * t.smooth - cfg.lambda_efficiency * t.efficiency
        + cfg.lambda_safety * t.safety
}

/// Per-agent cost `J_i = w_i * Phi`.
pub fn agent_cost(
    scenario: &Scenario,
    profile: &JointProfile,
    cfg: &PotentialConfig,
    weights: &AgentWeights,
    i: usize,
) -> Result<f64> {
    if i >= scenario.n_agents() {
        return Err(Error::AgentIndex {
            index: i,
            count: scenario.n_agents(),
        });
    }
    Ok(weights.get(i) * potential(scenario, profile, cfg)?)
}

/// Sensitivity of an agent's future position at step `t` (1-based state
/// index) to its control at step `k` (0-based): `(t - 1 - k + 1/2) dt^2`.
#[inline]
fn dpos_dctrl(t: usize, k: usize, dt: f64) -> f64 {
    if k < t {
        ((t - 1 - k) as f64 + 0.5) * dt * dt
    } else {
        0.0
    }
}

/// Closed-form gradient of `Phi` with respect to agent `i`'s controls.
///
/// Chain rule through the double-integrator state map for the goal and
/// safety terms; direct gradients for smoothness and efficiency. The
/// heading contribution flows through `atan2` at the terminal state and is
/// dropped when the terminal speed is below the heading threshold.
pub fn grad_potential_agent(
    scenario: &Scenario,
    profile: &JointProfile,
    cfg: &PotentialConfig,
    i: usize,
) -> Result<Vec<[f64; 2]>> {
    check_profile(scenario, profile)?;
    if i >= scenario.n_agents() {
        return Err(Error::AgentIndex {
            index: i,
            count: scenario.n_agents(),
        });
    }
    let trajectories = rollout_joint(&scenario.initial_states, profile)?;
    grad_potential_agent_with(scenario, profile, cfg, i, &trajectories)
}

/// As [`grad_potential_agent`] but reusing rolled-out trajectories.
pub fn grad_potential_agent_with(
    scenario: &Scenario,
    profile: &JointProfile,
    cfg: &PotentialConfig,
    i: usize,
    trajectories: &[Trajectory],
) -> Result<Vec<[f64; 2]>> {
    let horizon = scenario.horizon;
    let dt = scenario.dt;
    let norms = cfg.normalizers_for(scenario);
    let seq = &profile.sequences[i];
    let traj = &trajectories[i];
    let mut grad = vec![[0.0f64; 2]; horizon];

    // Goal term.
    if cfg.lambda_goal > 0.0 {
        let goals = scenario.require_goals()?;
        let g = &goals[i];
        let s = traj.final_state();
        let c = g.component_scale;
        let d = [
            s.x - g.x,
            s.y - g.y,
            s.vx - g.vx,
            s.vy - g.vy,
            crate::dynamics::wrap_angle(s.theta - g.theta),
        ];
        let coeff = 2.0 * cfg.lambda_goal / norms.goal;
        let speed2 = s.vx * s.vx + s.vy * s.vy;
        let (dth_dvx, dth_dvy) = if speed2.sqrt() > V_HEADING_EPS {
            (-s.vy / speed2, s.vx / speed2)
        } else {
            (0.0, 0.0)
        };
        for k in 0..horizon {
            let dp = dpos_dctrl(horizon, k, dt);
            grad[k][0] += coeff
                * (c[0] * c[0] * d[0] * dp
                    + c[2] * c[2] * d[2] * dt
                    + c[4] * c[4] * d[4] * dth_dvx * dt);
            grad[k][1] += coeff
                * (c[1] * c[1] * d[1] * dp
                    + c[3] * c[3] * d[3] * dt
                    + c[4] * c[4] * d[4] * dth_dvy * dt);
        }
    }

    // Smoothness term.
    if cfg.lambda_smooth > 0.0 {
        let coeff = 2.0 * cfg.lambda_smooth / norms.smooth;
        for t in 1..horizon {
            let dx = seq.controls[t].ax - seq.controls[t - 1].ax;
            let dy = seq.controls[t].ay - seq.controls[t - 1].ay;
            grad[t][0] += coeff * dx;
            grad[t][1] += coeff * dy;
            grad[t - 1][0] -= coeff * dx;
            grad[t - 1][1] -= coeff * dy;
        }
    }

    // Efficiency term (note the minus sign in Phi).
    if cfg.lambda_efficiency > 0.0 {
        let coeff = -2.0 * cfg.lambda_efficiency / norms.efficiency;
        // cumulative sums c_t = dt * sum_{k<t} a_k, then suffix sums over t.
        let mut cums = Vec::with_capacity(horizon);
        let mut cx = 0.0;
        let mut cy = 0.0;
        for c in &seq.controls {
            cx += c.ax * dt;
            cy += c.ay * dt;
            cums.push([cx, cy]);
        }
        let mut sx = 0.0;
        let mut sy = 0.0;
        for k in (0..horizon).rev() {
            sx += cums[k][0];
            sy += cums[k][1];
            grad[k][0] += coeff * dt * sx;
            grad[k][1] += coeff * dt * sy;
        }
    }

    // Safety term: each unordered pair appears twice in the ordered sum.
    if cfg.lambda_safety > 0.0 && scenario.n_agents() > 1 {
        let coeff = -4.0 * cfg.lambda_safety / norms.safety;
        for t in 1..=horizon {
            let pi = trajectories[i].states[t];
            for (j, other) in trajectories.iter().enumerate() {
                if j == i {
                    continue;
                }
                let pj = other.states[t];
                let dx = pi.x - pj.x;
                let dy = pi.y - pj.y;
                let dist = dx.hypot(dy);
                if dist >= cfg.d_safe || dist <= 1e-12 {
                    continue;
                }
                let h = cfg.d_safe - dist;
                let gx = coeff * h * dx / dist;
                let gy = coeff * h * dy / dist;
                for k in 0..t {
                    let dp = dpos_dctrl(t, k, dt);
                    grad[k][0] += gx * dp;
                    grad[k][1] += gy * dp;
                }
            }
        }
    }

    Ok(grad)
}
