//! Cyclic (Gauss-Seidel) best-response dynamics with descent monitoring,
//! epsilon-Nash certification, and multi-start equilibrium selection.
//!
//! One outer iteration updates every agent once, in ascending index order,
//! each update using the freshest opponent controls. The potential trace
//! and the per-iteration suboptimality `Delta_k = max_i eps_i^k` are
//! recorded so the perturbed-descent chain
//! `Phi(a^{k+1}) <= Phi(a^k) + Delta_k` can be audited.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::best_response::{best_response, SolverConfig};
use crate::dynamics::{project_controls, Control, ControlSequence, JointProfile};
use crate::error::{Error, Result};
use crate::potential::{potential, AgentWeights, PotentialConfig};
use crate::scenario::Scenario;

/// Standard deviation of the multi-start control perturbations in m/s^2.
pub const MULTI_START_SIGMA: f64 = 0.5;

/// Outer-loop settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfpConfig {
    pub max_outer_iters: usize,
    /// Potential stall threshold.
    pub phi_tol: f64,
    /// Control stall threshold in m/s^2.
    pub control_tol: f64,
    pub n_starts: usize,
    pub rng_seed: u64,
}

impl Default for DfpConfig {
    fn default() -> Self {
        Self {
            max_outer_iters: 50,
            phi_tol: 1e-6,
            control_tol: 1e-4,
            n_starts: 4,
            rng_seed: 0,
        }
    }
}

impl DfpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iters == 0 || self.n_starts == 0 {
            return Err(Error::InvalidInput("iteration counts must be >= 1".into()));
        }
        if !(self.phi_tol > 0.0) || !(self.control_tol > 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Convergence record of one solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    /// `Phi` after each outer iteration; index 0 is the initial profile.
    pub phi_trace: Vec<f64>,
    /// `Delta_k = max_i eps_i^k` per outer iteration.
    pub delta_trace: Vec<f64>,
    /// Per-agent certified gaps at the final profile.
    pub nash_gaps: Vec<f64>,
    pub outer_iters: usize,
    pub converged: bool,
    /// Which initialization won a multi-start solve (0 for a plain solve).
    pub start_index: usize,
}

impl SolveReport {
    pub fn phi_final(&self) -> f64 {
        *self.phi_trace.last().expect("trace never empty")
    }

    pub fn max_nash_gap(&self) -> f64 {
        self.nash_gaps.iter().cloned().fold(0.0, f64::max)
    }
}

/// Cyclic best-response loop from the given initial profile.
///
/// Terminates when both the potential change and the largest control
/// change fall under their thresholds, or at the iteration cap. The
/// returned report carries the full `Phi` and `Delta_k` traces plus
/// verified per-agent Nash gaps.
pub fn dfp_solve(
    scenario: &Scenario,
    cfg: &PotentialConfig,
    weights: &AgentWeights,
    init: &JointProfile,
    dfp: &DfpConfig,
    solver: &SolverConfig,
) -> Result<(JointProfile, SolveReport)> {
    dfp.validate()?;
    scenario.validate()?;
    let n = scenario.n_agents();
    if init.n_agents() != n {
        return Err(Error::AgentCountMismatch {
            expected: n,
            actual: init.n_agents(),
        });
    }
    let mut profile = JointProfile::new(
        init.sequences
            .iter()
            .map(|s| project_controls(s, scenario.a_max))
            .collect(),
    );
    let mut phi_trace = vec![potential(scenario, &profile, cfg)?];
    let mut delta_trace = Vec::new();
    let mut converged = false;
    let mut outer_iters = 0;

    for _ in 0..dfp.max_outer_iters {
        outer_iters += 1;
        let mut delta_k: f64 = 0.0;
        let mut max_ctrl_change: f64 = 0.0;
        for i in 0..n {
            let res = best_response(scenario, &profile, cfg, weights, i, solver)?;
            for (old, new) in profile.sequences[i].controls.iter().zip(&res.controls.controls) {
                max_ctrl_change = max_ctrl_change
                    .max((old.ax - new.ax).abs())
                    .max((old.ay - new.ay).abs());
            }
            profile.sequences[i] = res.controls;
            delta_k = delta_k.max(res.suboptimality_bound);
        }
        let phi = potential(scenario, &profile, cfg)?;
        let phi_prev = *phi_trace.last().unwrap();
        phi_trace.push(phi);
        delta_trace.push(delta_k);
        if (phi_prev - phi).abs() < dfp.phi_tol && max_ctrl_change < dfp.control_tol {
            converged = true;
            break;
        }
    }

    let nash_gaps = nash_gap(scenario, &profile, cfg, weights, solver)?;
    Ok((
        profile,
        SolveReport {
            phi_trace,
            delta_trace,
            nash_gaps,
            outer_iters,
            converged,
            start_index: 0,
        },
    ))
}

/// Certified per-agent gaps: how much each agent can still improve its own
/// cost by unilateral re-optimization, measured with a fresh solve at four
/// times the inner budget. Values are clipped at zero.
pub fn nash_gap(
    scenario: &Scenario,
    profile: &JointProfile,
    cfg: &PotentialConfig,
    weights: &AgentWeights,
    solver: &SolverConfig,
) -> Result<Vec<f64>> {
    let high_budget = solver.with_budget_factor(4);
    // gaps are defined over the feasible set, so project first
    let mut feasible = profile.clone();
    for seq in feasible.sequences.iter_mut() {
        *seq = project_controls(seq, scenario.a_max);
    }
    let phi_now = potential(scenario, &feasible, cfg)?;
    let mut gaps = Vec::with_capacity(scenario.n_agents());
    for i in 0..scenario.n_agents() {
        let res = best_response(scenario, &feasible, cfg, weights, i, &high_budget)?;
        let gap = weights.get(i) * (phi_now - res.phi_after);
        debug_assert!(gap >= -1e-10);
        gaps.push(gap.max(0.0));
    }
    Ok(gaps)
}

/// Deterministic warm start replacing the paper-facing policy network:
/// per agent a constant acceleration reaching the goal position from the
/// current velocity over the horizon, projected into the feasible set.
/// Without goals (prediction mode) the profile is all zeros.
pub fn warm_start_policy(scenario: &Scenario) -> JointProfile {
    let horizon = scenario.horizon;
    let dt = scenario.dt;
    let span = horizon as f64 * dt;
    match &scenario.goals {
        None => JointProfile::zeros(scenario.n_agents(), horizon, dt),
        Some(goals) => {
            let sequences = scenario
                .initial_states
                .iter()
                .zip(goals)
                .map(|(s, g)| {
                    let ax = 2.0 * (g.x - s.x - s.vx * span) / (span * span);
                    let ay = 2.0 * (g.y - s.y - s.vy * span) / (span * span);
                    project_controls(
                        &ControlSequence::new(vec![Control::new(ax, ay); horizon], dt),
                        scenario.a_max,
                    )
                })
                .collect();
            JointProfile::new(sequences)
        }
    }
}

fn perturbed_start(
    base: &JointProfile,
    scenario: &Scenario,
    seed: u64,
    start_index: usize,
) -> JointProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(
        seed ^ (start_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
    );
    let noise = Normal::new(0.0, MULTI_START_SIGMA).expect("valid sigma");
    JointProfile::new(
        base.sequences
            .iter()
            .map(|seq| {
                let controls = seq
                    .controls
                    .iter()
                    .map(|c| {
                        Control::new(c.ax + noise.sample(&mut rng), c.ay + noise.sample(&mut rng))
                    })
                    .collect();
                project_controls(&ControlSequence::new(controls, seq.dt), scenario.a_max)
            })
            .collect(),
    )
}

/// Runs [`dfp_solve`] from the warm start plus `n_starts - 1` seeded
/// perturbations and keeps the result with the lowest final potential
/// (ties break to the lowest start index). Deterministic per seed.
pub fn multi_start_solve(
    scenario: &Scenario,
    cfg: &PotentialConfig,
    weights: &AgentWeights,
    dfp: &DfpConfig,
    solver: &SolverConfig,
) -> Result<(JointProfile, SolveReport)> {
    dfp.validate()?;
    let warm = warm_start_policy(scenario);
    let mut best: Option<(JointProfile, SolveReport)> = None;
    let mut last_err = None;
    for s in 0..dfp.n_starts {
        let init = if s == 0 {
            warm.clone()
        } else {
            perturbed_start(&warm, scenario, dfp.rng_seed, s)
        };
        match dfp_solve(scenario, cfg, weights, &init, dfp, solver) {
            Ok((profile, mut report)) => {
                report.start_index = s;
                let take = match &best {
                    None => true,
                    Some((_, b)) => report.phi_final() < b.phi_final(),
                };
                if take {
                    best = Some((profile, report));
                }
            }
            Err(e) => {
                log::warn!("start {s} failed: {e}");
                last_err = Some(e);
            }
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Empty("no starts attempted".into())))
}
