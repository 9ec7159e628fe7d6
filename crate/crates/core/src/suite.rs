//! Batch scenario suites: the synthetic crossing benchmark and the
//! heterogeneous-weight demonstration suite used for calibration studies.

use rayon::prelude::*;

use crate::best_response::SolverConfig;
use crate::data::{synth_scenario, GeneratorConfig};
use crate::dynamics::rollout_joint;
use crate::error::Result;
use crate::fictitious_play::{multi_start_solve, DfpConfig};
use crate::potential::{AgentWeights, PotentialConfig, W_MAX, W_MIN};
use crate::scenario::Scenario;

/// Synthetic crossing scenes with 2 to 4 agents, cycling the agent count
/// and deriving one generator seed per scene.
pub fn crossing_suite(seed: u64, n_scenes: usize) -> Result<Vec<Scenario>> {
    (0..n_scenes)
        .map(|i| {
            let cfg = GeneratorConfig {
                n_agents: 2 + i % 3,
                ..GeneratorConfig::default()
            };
            let mut s = synth_scenario(&cfg, seed.wrapping_add(i as u64))?;
            s.scene_id = format!("crossing-{seed}-{i}");
            Ok(s)
        })
        .collect()
}

/// Ground-truth weight schedule: strictly decreasing in speed, so faster
/// agents carry smaller weights.
pub fn demo_weight(speed: f64) -> f64 {
    (2.0 * (-0.25 * speed).exp()).clamp(W_MIN, W_MAX)
}

/// Demonstration suite with heterogeneous per-agent weights: each crossing
/// scene is solved under speed-dependent weights and the solver rollout is
/// stored as the scene's ground truth, together with the weights used.
pub fn heterogeneous_demo_suite(
    seed: u64,
    n_scenes: usize,
    cfg: &PotentialConfig,
    dfp: &DfpConfig,
    solver: &SolverConfig,
) -> Result<Vec<Scenario>> {
    let scenes = crossing_suite(seed, n_scenes)?;
    scenes
        .into_par_iter()
        .enumerate()
        .map(|(i, mut scene)| {
            scene.scene_id = format!("hetero-{seed}-{i}");
            let speeds: Vec<f64> = scene
                .initial_states
                .iter()
                .map(|s| (s.vx * s.vx + s.vy * s.vy).sqrt())
                .collect();
            let w: Vec<f64> = speeds.iter().map(|&v| demo_weight(v)).collect();
            let weights = AgentWeights::new(w.clone());
            let (profile, _) = multi_start_solve(&scene, cfg, &weights, dfp, solver)?;
            let trajectories = rollout_joint(&scene.initial_states, &profile)?;
            scene.ground_truth = Some(
                trajectories
                    .iter()
                    .map(|t| t.future_positions())
                    .collect(),
            );
            scene.agent_weights = Some(w);
            Ok(scene)
        })
        .collect()
}
