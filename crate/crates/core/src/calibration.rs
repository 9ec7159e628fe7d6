//! Fits the global term weights and per-agent weights from demonstration
//! scenarios by minimizing replay RMSE through the full solver.
//!
//! Gradients are coordinate-wise finite differences through the solve, and
//! every parameter step is kept only if the loss strictly decreases, so the
//! loss trace is non-increasing by construction. Term weights are updated
//! in their native scale, agent weights in log scale because they span
//! decades after clamping.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::best_response::SolverConfig;
use crate::dynamics::{rollout_joint, JointProfile};
use crate::error::{Error, Result};
use crate::fictitious_play::{multi_start_solve, DfpConfig};
use crate::metrics::positions_rmse;
use crate::potential::{AgentWeights, PotentialConfig};
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub max_epochs: usize,
    /// Relative finite-difference probe size.
    pub fd_step: f64,
    /// Absolute probe floor.
    pub fd_floor: f64,
    pub learning_rate: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            max_epochs: 10,
            fd_step: 1e-2,
            fd_floor: 1e-3,
            learning_rate: 0.05,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fd_step > 0.0) || !(self.fd_floor > 0.0) || !(self.learning_rate > 0.0) {
            return Err(Error::InvalidInput(
                "calibration steps and rates must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One row of the weight/dynamics summary: an agent's fitted weight next
/// to statistics of its one-second history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightDynamicsRow {
    pub scene_id: String,
    pub agent_id: usize,
    pub w: f64,
    pub mean_speed_mps: f64,
    pub mean_accel_mps2: f64,
}

pub const WEIGHT_CSV_HEADER: &str = "scene_id,agent_id,w,mean_speed_mps,mean_accel_mps2";

impl WeightDynamicsRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.scene_id, self.agent_id, self.w, self.mean_speed_mps, self.mean_accel_mps2
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    /// Fitted term weights.
    pub config: PotentialConfig,
    /// Fitted per-agent weights, one entry per included demo.
    pub agent_weights: Vec<AgentWeights>,
    /// Scene ids of the included demos, aligned with `agent_weights`.
    pub demo_ids: Vec<String>,
    /// Mean replay RMSE per epoch; index 0 is the initialization.
    pub loss_trace: Vec<f64>,
    pub rows: Vec<WeightDynamicsRow>,
    /// Demos dropped because the initial solve failed.
    pub excluded: usize,
}

/// Scenario-level replay error: each agent's RMSE against its ground-truth
/// future, averaged over agents.
pub fn replay_rmse(
    scenario: &Scenario,
    profile: &JointProfile,
    ground_truth: &[Vec<[f64; 2]>],
) -> Result<f64> {
    if ground_truth.len() != scenario.n_agents() {
        return Err(Error::AgentCountMismatch {
            expected: scenario.n_agents(),
            actual: ground_truth.len(),
        });
    }
    let trajectories = rollout_joint(&scenario.initial_states, profile)?;
    let mut total = 0.0;
    for (traj, gt) in trajectories.iter().zip(ground_truth) {
        total += positions_rmse(&traj.future_positions(), gt)?;
    }
    Ok(total / scenario.n_agents() as f64)
}

fn demo_loss(
    demo: &Scenario,
    cfg: &PotentialConfig,
    weights: &AgentWeights,
    dfp: &DfpConfig,
    solver: &SolverConfig,
) -> Result<f64> {
    let truth = demo.ground_truth.as_ref().ok_or(Error::MissingGroundTruth)?;
    // same driver that produces demonstration rollouts, so replay error
    // reflects the weights rather than the initialization
    let (profile, _) = multi_start_solve(demo, cfg, weights, dfp, solver)?;
    replay_rmse(demo, &profile, truth)
}

fn suite_losses(
    demos: &[&Scenario],
    cfg: &PotentialConfig,
    weights: &[AgentWeights],
    dfp: &DfpConfig,
    solver: &SolverConfig,
) -> Result<Vec<f64>> {
    demos
        .par_iter()
        .zip(weights)
        .map(|(demo, w)| demo_loss(demo, cfg, w, dfp, solver))
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn lambda_coord(cfg: &PotentialConfig, k: usize) -> f64 {
    match k {
        0 => cfg.lambda_goal,
        1 => cfg.lambda_smooth,
        2 => cfg.lambda_efficiency,
        _ => cfg.lambda_safety,
    }
}

fn with_lambda(cfg: &PotentialConfig, k: usize, v: f64) -> PotentialConfig {
    let mut c = cfg.clone();
    match k {
        0 => c.lambda_goal = v,
        1 => c.lambda_smooth = v,
        2 => c.lambda_efficiency = v,
        _ => c.lambda_safety = v,
    }
    c
}

/// Fits term weights globally and agent weights per demo by monotone
/// coordinate descent on the mean replay RMSE. Demos whose initial solve
/// fails are excluded with a diagnostic; failing every demo is an error.
pub fn calibrate(
    demos: &[Scenario],
    cal: &CalibrationConfig,
    init: &PotentialConfig,
    dfp: &DfpConfig,
    solver: &SolverConfig,
) -> Result<CalibrationResult> {
    cal.validate()?;
    init.validate()?;
    if demos.is_empty() {
        return Err(Error::Empty("no demonstrations".into()));
    }
    let mut cfg = init.clone();
    let mut included: Vec<&Scenario> = Vec::new();
    let mut weights: Vec<AgentWeights> = Vec::new();
    let mut losses: Vec<f64> = Vec::new();
    let probe: Vec<Result<f64>> = demos
        .par_iter()
        .map(|d| {
            d.validate()?;
            demo_loss(d, &cfg, &AgentWeights::ones(d.n_agents()), dfp, solver)
        })
        .collect();
    let mut excluded = 0;
    for (demo, r) in demos.iter().zip(probe) {
        match r {
            Ok(loss) => {
                included.push(demo);
                weights.push(AgentWeights::ones(demo.n_agents()));
                losses.push(loss);
            }
            Err(e) => {
                log::warn!("demo {} excluded: {e}", demo.scene_id);
                excluded += 1;
            }
        }
    }
    if included.is_empty() {
        return Err(Error::Empty("every demonstration failed to solve".into()));
    }
    let mut loss_trace = vec![mean(&losses)];

    for _ in 0..cal.max_epochs {
        // term-weight block: global coordinates with central differences
        for k in 0..4 {
            let v = lambda_coord(&cfg, k);
            let h = (cal.fd_step * v.abs()).max(cal.fd_floor);
            let plus = mean(&suite_losses(
                &included,
                &with_lambda(&cfg, k, v + h),
                &weights,
                dfp,
                solver,
            )?);
            let grad = if v - h >= 0.0 {
                let minus = mean(&suite_losses(
                    &included,
                    &with_lambda(&cfg, k, v - h),
                    &weights,
                    dfp,
                    solver,
                )?);
                (plus - minus) / (2.0 * h)
            } else {
                (plus - mean(&losses)) / h
            };
            if grad.abs() < 1e-9 {
                continue;
            }
            let step = cal.learning_rate * v.abs().max(0.1) * grad.signum();
            let candidate_cfg = with_lambda(&cfg, k, (v - step).max(0.0));
            let candidate = suite_losses(&included, &candidate_cfg, &weights, dfp, solver)?;
            if mean(&candidate) < mean(&losses) {
                cfg = candidate_cfg;
                losses = candidate;
            }
        }

        // agent-weight block: per-demo log-scale coordinate search. The
        // loss responds to w through the stopping rule, so it is a
        // staircase in w; probe a large multiple first to see across a
        // stair, then refine with the base step.
        for d in 0..included.len() {
            for i in 0..weights[d].len() {
                let probe_at = |value: f64| -> Result<f64> {
                    let mut trial = weights[d].clone();
                    trial.set(i, value);
                    demo_loss(included[d], &cfg, &trial, dfp, solver)
                };
                'steps: for mult in [3.0, 1.0] {
                    let step = cal.learning_rate * mult;
                    for dir in [-1.0, 1.0] {
                        let w = weights[d].get(i);
                        let candidate_w = w * (dir * step).exp();
                        let candidate = probe_at(candidate_w)?;
                        if candidate < losses[d] {
                            weights[d].set(i, candidate_w);
                            losses[d] = candidate;
                            break 'steps;
                        }
                    }
                }
            }
        }
        loss_trace.push(mean(&losses));
    }

    let demo_ids: Vec<String> = included.iter().map(|d| d.scene_id.clone()).collect();
    let rows = weight_dynamics_report(&included, &weights);
    Ok(CalibrationResult {
        config: cfg,
        agent_weights: weights,
        demo_ids,
        loss_trace,
        rows,
        excluded,
    })
}

/// Per-agent summary pairing the fitted weight with mean speed and mean
/// acceleration magnitude over that agent's observed history.
pub fn weight_dynamics_report(
    demos: &[&Scenario],
    weights: &[AgentWeights],
) -> Vec<WeightDynamicsRow> {
    let mut rows = Vec::new();
    for (demo, w) in demos.iter().zip(weights) {
        for (i, history) in demo.histories.iter().enumerate() {
            let speeds: Vec<f64> = history
                .iter()
                .map(|s| (s.vx * s.vx + s.vy * s.vy).sqrt())
                .collect();
            let mean_speed = if speeds.is_empty() {
                0.0
            } else {
                mean(&speeds)
            };
            let accels: Vec<f64> = history
                .windows(2)
                .map(|p| {
                    let ax = (p[1].vx - p[0].vx) / demo.dt;
                    let ay = (p[1].vy - p[0].vy) / demo.dt;
                    (ax * ax + ay * ay).sqrt()
                })
                .collect();
            let mean_accel = if accels.is_empty() {
                0.0
            } else {
                mean(&accels)
            };
            rows.push(WeightDynamicsRow {
                scene_id: demo.scene_id.clone(),
                agent_id: i,
                w: w.get(i),
                mean_speed_mps: mean_speed,
                mean_accel_mps2: mean_accel,
            });
        }
    }
    rows
}
