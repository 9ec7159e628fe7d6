//! Trajectory-quality metrics, suite evaluation, and the IDM reference
//! longitudinal model.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{rollout_joint, JointProfile, Trajectory};
use crate::error::{Error, Result};
use crate::fictitious_play::{multi_start_solve, DfpConfig, SolveReport};
use crate::potential::{AgentWeights, PotentialConfig, DEFAULT_D_SAFE};
use crate::scenario::Scenario;
use crate::best_response::SolverConfig;

/// Mean and final Euclidean displacement error between a predicted and an
/// observed position sequence.
pub fn ade_fde(pred: &[[f64; 2]], truth: &[[f64; 2]]) -> Result<(f64, f64)> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch(format!(
            "prediction has {} steps, truth has {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Empty("empty position sequences".into()));
    }
    let errors: Vec<f64> = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| ((p[0] - t[0]).powi(2) + (p[1] - t[1]).powi(2)).sqrt())
        .collect();
    let ade = errors.iter().sum::<f64>() / errors.len() as f64;
    Ok((ade, *errors.last().unwrap()))
}

/// Root mean squared position error over one agent's horizon.
pub fn positions_rmse(a: &[[f64; 2]], b: &[[f64; 2]]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(format!(
            "{} vs {} steps",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Empty("empty position sequences".into()));
    }
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(p, q)| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2))
        .sum();
    Ok((sum / a.len() as f64).sqrt())
}

/// Pairwise center-distance collision test, strict at the threshold.
/// Returns the minimum pairwise distance over all steps, absent for a
/// single agent.
pub fn collision_check(trajectories: &[Trajectory], threshold: f64) -> (bool, Option<f64>) {
    let mut min_d = f64::INFINITY;
    for i in 0..trajectories.len() {
        for j in (i + 1)..trajectories.len() {
            for (a, b) in trajectories[i].states.iter().zip(&trajectories[j].states) {
                let d = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
                min_d = min_d.min(d);
            }
        }
    }
    if min_d.is_finite() {
        (min_d < threshold, Some(min_d))
    } else {
        (false, None)
    }
}

/// Intelligent Driver Model parameters, canonical defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdmParams {
    /// Desired free-flow speed in m/s.
    pub v0: f64,
    /// Desired time headway in seconds.
    pub t_headway: f64,
    /// Jam distance in meters.
    pub s0: f64,
    /// Maximum acceleration in m/s^2.
    pub a: f64,
    /// Comfortable deceleration in m/s^2.
    pub b: f64,
    /// Free-flow exponent.
    pub delta: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            v0: 14.0,
            t_headway: 1.5,
            s0: 2.0,
            a: 2.0,
            b: 3.0,
            delta: 4.0,
        }
    }
}

/// IDM longitudinal acceleration for an ego at speed `v` following a lead
/// vehicle `gap` meters ahead at speed `lead_v`. The dynamic part of the
/// desired gap is floored at zero so the desired gap never drops below the
/// jam distance; without the floor the model is not monotone in speed when
/// the leader is faster.
pub fn idm_accel(v: f64, gap: f64, lead_v: f64, params: &IdmParams) -> Result<f64> {
    if !(gap > 0.0) {
        return Err(Error::InvalidInput(format!("non-positive gap {gap}")));
    }
    let dv = v - lead_v;
    let dynamic = v * params.t_headway + v * dv / (2.0 * (params.a * params.b).sqrt());
    let s_star = params.s0 + dynamic.max(0.0);
    Ok(params.a * (1.0 - (v / params.v0).powf(params.delta) - (s_star / gap).powi(2)))
}

/// Which potential terms an evaluation run disables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ablation {
    /// Full model.
    None,
    /// Individual weights replaced by ones.
    Iw,
    /// Smoothness and efficiency terms removed.
    Sc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalMode {
    /// Goal-conditioned solve.
    Planning,
    /// Goals stripped and the goal term disabled.
    Prediction,
}

/// Metrics for one evaluated scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMetrics {
    pub scene_id: String,
    pub n_agents: usize,
    pub ade_m: f64,
    pub fde_m: f64,
    pub rmse_m: f64,
    pub collided: bool,
    pub min_pair_distance_m: Option<f64>,
    pub phi_final: f64,
    pub outer_iters: usize,
    pub max_nash_gap: f64,
}

pub const SCENE_CSV_HEADER: &str = "scene_id,n_agents,ade_m,fde_m,rmse_m,collided,\
min_pair_distance_m,phi_final,outer_iters,max_nash_gap";

impl SceneMetrics {
    pub fn csv_row(&self) -> String {
        let min_d = self
            .min_pair_distance_m
            .map_or(String::new(), |d| format!("{d}"));
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.scene_id,
            self.n_agents,
            self.ade_m,
            self.fde_m,
            self.rmse_m,
            self.collided,
            min_d,
            self.phi_final,
            self.outer_iters,
            self.max_nash_gap
        )
    }
}

/// Aggregate over a suite of scenes; means are over included scenes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub scenes: Vec<SceneMetrics>,
    pub ade_m: f64,
    pub fde_m: f64,
    pub rmse_m: f64,
    /// Fraction of included scenes with a collision.
    pub collision_rate: f64,
    /// Scenes dropped because the solve failed.
    pub excluded: usize,
}

/// Replacement solver used for oracle injection in tests.
pub type SolveFn<'a> = dyn Fn(&Scenario, &PotentialConfig, &AgentWeights) -> Result<(JointProfile, SolveReport)>
    + Sync
    + 'a;

/// Evaluates every scenario with the provided solve function, computing
/// displacement errors against the stored ground truth and the pairwise
/// collision test on the solved rollouts.
pub fn evaluate_suite_with(
    scenarios: &[Scenario],
    cfg: &PotentialConfig,
    mode: EvalMode,
    ablation: Ablation,
    solve: &SolveFn,
) -> Result<SuiteReport> {
    if scenarios.is_empty() {
        return Err(Error::Empty("no scenarios to evaluate".into()));
    }
    let results: Vec<Result<SceneMetrics>> = scenarios
        .par_iter()
        .map(|scenario| evaluate_scene(scenario, cfg, mode, ablation, solve))
        .collect();
    let mut scenes = Vec::new();
    let mut excluded = 0;
    for (r, s) in results.into_iter().zip(scenarios) {
        match r {
            Ok(m) => scenes.push(m),
            Err(e) => {
                log::warn!("scene {} excluded: {e}", s.scene_id);
                excluded += 1;
            }
        }
    }
    if scenes.is_empty() {
        return Err(Error::Empty("every scene failed to evaluate".into()));
    }
    let n = scenes.len() as f64;
    Ok(SuiteReport {
        ade_m: scenes.iter().map(|s| s.ade_m).sum::<f64>() / n,
        fde_m: scenes.iter().map(|s| s.fde_m).sum::<f64>() / n,
        rmse_m: scenes.iter().map(|s| s.rmse_m).sum::<f64>() / n,
        collision_rate: scenes.iter().filter(|s| s.collided).count() as f64 / n,
        excluded,
        scenes,
    })
}

/// [`evaluate_suite_with`] driven by the standard multi-start solver.
pub fn evaluate_suite(
    scenarios: &[Scenario],
    cfg: &PotentialConfig,
    dfp: &DfpConfig,
    solver: &SolverConfig,
    mode: EvalMode,
    ablation: Ablation,
) -> Result<SuiteReport> {
    evaluate_suite_with(scenarios, cfg, mode, ablation, &|s, c, w| {
        multi_start_solve(s, c, w, dfp, solver)
    })
}

fn evaluate_scene(
    scenario: &Scenario,
    cfg: &PotentialConfig,
    mode: EvalMode,
    ablation: Ablation,
    solve: &SolveFn,
) -> Result<SceneMetrics> {
    let truth = scenario
        .ground_truth
        .as_ref()
        .ok_or(Error::MissingGroundTruth)?;
    let mut cfg = match ablation {
        Ablation::Sc => cfg.clone().ablation_sc(),
        _ => cfg.clone(),
    };
    let eval_scenario = match mode {
        EvalMode::Planning => scenario.clone(),
        EvalMode::Prediction => {
            cfg = cfg.prediction();
            scenario.without_goals()
        }
    };
    let weights = match (ablation, &scenario.agent_weights) {
        (Ablation::Iw, _) | (_, None) => AgentWeights::ones(scenario.n_agents()),
        (_, Some(w)) => AgentWeights::new(w.clone()),
    };
    let (profile, report) = solve(&eval_scenario, &cfg, &weights)?;
    let trajectories = rollout_joint(&scenario.initial_states, &profile)?;
    let mut ade = 0.0;
    let mut fde = 0.0;
    let mut rmse = 0.0;
    for (traj, gt) in trajectories.iter().zip(truth) {
        let pred = traj.future_positions();
        let (a, f) = ade_fde(&pred, gt)?;
        ade += a;
        fde += f;
        rmse += positions_rmse(&pred, gt)?;
    }
    let n = scenario.n_agents() as f64;
    let (collided, min_pair_distance) = collision_check(&trajectories, DEFAULT_D_SAFE);
    Ok(SceneMetrics {
        scene_id: scenario.scene_id.clone(),
        n_agents: scenario.n_agents(),
        ade_m: ade / n,
        fde_m: fde / n,
        rmse_m: rmse / n,
        collided,
        min_pair_distance_m: min_pair_distance,
        phi_final: report.phi_final(),
        outer_iters: report.outer_iters,
        max_nash_gap: report.max_nash_gap(),
    })
}
