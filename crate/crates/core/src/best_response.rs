//! Single-agent inner minimization: optimizes one agent's control sequence
//! with all other agents frozen, through either a Levenberg-Marquardt
//! least-squares backend or a projected-gradient backend.
//!
//! Both backends share the per-iterate contract: candidate steps are
//! accepted only when the shared potential decreases, so a best response
//! never increases `Phi`. The per-iterate maps are scale-free in the
//! agent weight `w_i`; `w_i` enters only through the cost-suboptimality
//! estimate used for termination, so less cost-sensitive agents stop
//! refining earlier.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{project_controls, rollout_joint, ControlSequence, JointProfile, V_HEADING_EPS};
use crate::error::{Error, Result};
use crate::potential::{
    grad_potential_agent_with, potential_with, AgentWeights, PotentialConfig,
};
use crate::scenario::Scenario;

/// Inner-solver backend selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    LevenbergMarquardt,
    ProjectedGradient,
}

/// Inner-solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub backend: Backend,
    /// Step scale applied to LM and projected-gradient updates.
    pub step_size: f64,
    pub max_inner_iters: usize,
    /// Termination threshold on the cost-suboptimality estimate.
    pub grad_tol: f64,
    pub lm_damping_init: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            backend: Backend::LevenbergMarquardt,
            step_size: 0.3,
            max_inner_iters: 50,
            grad_tol: 1e-6,
            lm_damping_init: 1e-3,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) || self.max_inner_iters == 0 || !(self.grad_tol > 0.0) {
            return Err(Error::InvalidInput("invalid solver configuration".into()));
        }
        Ok(())
    }

    /// Copy with the inner-iteration budget multiplied (verification solves).
    pub fn with_budget_factor(&self, factor: usize) -> Self {
        Self {
            max_inner_iters: self.max_inner_iters * factor,
            ..self.clone()
        }
    }
}

/// Outcome of one best-response solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BestResponseResult {
    pub controls: ControlSequence,
    pub phi_before: f64,
    pub phi_after: f64,
    /// Cost-suboptimality estimate `eps_i` at exit: the step-normalized
    /// gradient norm scaled by the step size and the agent weight.
    pub suboptimality_bound: f64,
    pub inner_iters: usize,
}

fn norms(grad: &[[f64; 2]]) -> (f64, f64) {
    let mut inf: f64 = 0.0;
    let mut sq = 0.0;
    for g in grad {
        inf = inf.max(g[0].abs()).max(g[1].abs());
        sq += g[0] * g[0] + g[1] * g[1];
    }
    (inf, sq.sqrt())
}

/// Cost-suboptimality estimate from the projected gradient mapping
/// `G = (x - P(x - s g)) / s`, which vanishes exactly at constrained
/// stationary points (in the interior it reduces to the raw gradient).
fn suboptimality(
    w: f64,
    step_size: f64,
    seq: &ControlSequence,
    grad: &[[f64; 2]],
    a_max: f64,
) -> f64 {
    let mapped: Vec<[f64; 2]> = seq
        .controls
        .iter()
        .zip(grad)
        .map(|(c, g)| {
            let mut px = c.ax - step_size * g[0];
            let mut py = c.ay - step_size * g[1];
            let n = (px * px + py * py).sqrt();
            if n > a_max {
                px *= a_max / n;
                py *= a_max / n;
            }
            [(c.ax - px) / step_size, (c.ay - py) / step_size]
        })
        .collect();
    let (inf, l2) = norms(&mapped);
    w * step_size * l2 / inf.max(1.0)
}

/// One projected-gradient update with backtracking: the step is halved
/// (at most 40 times) until `Phi` decreases; on failure the input sequence
/// is returned unchanged. The last element is the accepted step length,
/// letting the caller grow the trial step across iterations.
pub fn projected_gradient_step(
    scenario: &Scenario,
    profile: &JointProfile,
    cfg: &PotentialConfig,
    i: usize,
    gradient: &[[f64; 2]],
    step: f64,
) -> Result<(ControlSequence, f64, bool, f64)> {
    let trajectories = rollout_joint(&scenario.initial_states, profile)?;
    let phi_old = potential_with(scenario, profile, cfg, &trajectories)?;
    let (inf, _) = norms(gradient);
    if inf == 0.0 {
        return Ok((profile.sequences[i].clone(), phi_old, false, step));
    }
    let scale = 1.0 / inf.max(1.0);
    let mut s = step;
    for _ in 0..=40 {
        let mut cand = profile.sequences[i].clone();
        for (k, c) in cand.controls.iter_mut().enumerate() {
            c.ax -= s * gradient[k][0] * scale;
            c.ay -= s * gradient[k][1] * scale;
        }
        let cand = project_controls(&cand, scenario.a_max);
        let mut trial = profile.clone();
        trial.sequences[i] = cand.clone();
        let phi_new = crate::potential::potential(scenario, &trial, cfg)?;
        if phi_new.is_finite() && phi_new < phi_old {
            return Ok((cand, phi_new, true, s));
        }
        s *= 0.5;
    }
    Ok((profile.sequences[i].clone(), phi_old, false, step))
}

/// Stacked weighted residual vector and Jacobian of the least-squares
/// part of the potential, as consumed by the LM backend.
///
/// Blocks: scaled terminal goal error, control differences, and pairwise
/// safety hinges. Each block carries `sqrt(lambda / N_term)` so the
/// squared sum matches the agent-relevant part of the normalized
/// potential. The efficiency term enters `Phi` with a minus sign and is
/// concave, so it has no residual form; the backend folds its exact
/// gradient and Hessian ([`efficiency_model`]) into the damped normal
/// equations instead.
pub fn lm_residuals(
    scenario: &Scenario,
    profile: &JointProfile,
    cfg: &PotentialConfig,
    i: usize,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let horizon = scenario.horizon;
    let dt = scenario.dt;
    let nvars = 2 * horizon;
    let nrm = cfg.normalizers_for(scenario);
    let trajectories = rollout_joint(&scenario.initial_states, profile)?;
    let seq = &profile.sequences[i];

    let mut rows: Vec<(f64, Vec<f64>)> = Vec::new();

    // position sensitivity (t: 1-based state index, k: control index)
    let dpos = |t: usize, k: usize| -> f64 {
        if k < t {
            ((t - 1 - k) as f64 + 0.5) * dt * dt
        } else {
            0.0
        }
    };

    if cfg.lambda_goal > 0.0 {
        let goals = scenario.require_goals()?;
        let g = &goals[i];
        let s = trajectories[i].final_state();
        let c = g.component_scale;
        let wgt = (cfg.lambda_goal / nrm.goal).sqrt();
        let d = [
            s.x - g.x,
            s.y - g.y,
            s.vx - g.vx,
            s.vy - g.vy,
            crate::dynamics::wrap_angle(s.theta - g.theta),
        ];
        let speed2 = s.vx * s.vx + s.vy * s.vy;
        let (dth_dvx, dth_dvy) = if speed2.sqrt() > V_HEADING_EPS {
            (-s.vy / speed2, s.vx / speed2)
        } else {
            (0.0, 0.0)
        };
        for comp in 0..5 {
            let mut jac = vec![0.0; nvars];
            for k in 0..horizon {
                let (jx, jy) = match comp {
                    0 => (dpos(horizon, k), 0.0),
                    1 => (0.0, dpos(horizon, k)),
                    2 => (dt, 0.0),
                    3 => (0.0, dt),
                    _ => (dth_dvx * dt, dth_dvy * dt),
                };
                jac[2 * k] = wgt * c[comp] * jx;
                jac[2 * k + 1] = wgt * c[comp] * jy;
            }
            rows.push((wgt * c[comp] * d[comp], jac));
        }
    }

    if cfg.lambda_smooth > 0.0 {
        let wgt = (cfg.lambda_smooth / nrm.smooth).sqrt();
        for t in 1..horizon {
            for axis in 0..2 {
                let (cur, prev) = if axis == 0 {
                    (seq.controls[t].ax, seq.controls[t - 1].ax)
                } else {
                    (seq.controls[t].ay, seq.controls[t - 1].ay)
                };
                let mut jac = vec![0.0; nvars];
                jac[2 * t + axis] = wgt;
                jac[2 * (t - 1) + axis] = -wgt;
                rows.push((wgt * (cur - prev), jac));
            }
        }
    }

    if cfg.lambda_safety > 0.0 && scenario.n_agents() > 1 {
        // the ordered double sum counts each unordered pair twice
        let wgt = (2.0 * cfg.lambda_safety / nrm.safety).sqrt();
        for j in 0..scenario.n_agents() {
            if j == i {
                continue;
            }
            for t in 1..=horizon {
                let pi = trajectories[i].states[t];
                let pj = trajectories[j].states[t];
                let dx = pi.x - pj.x;
                let dy = pi.y - pj.y;
                let dist = dx.hypot(dy);
                let h = (cfg.d_safe - dist).max(0.0);
                let mut jac = vec![0.0; nvars];
                if h > 0.0 && dist > 1e-12 {
                    for k in 0..t {
                        let dp = dpos(t, k);
                        jac[2 * k] = -wgt * dx / dist * dp;
                        jac[2 * k + 1] = -wgt * dy / dist * dp;
                    }
                }
                rows.push((wgt * h, jac));
            }
        }
    }

    let m = rows.len();
    let mut r = DVector::zeros(m);
    let mut jac = DMatrix::zeros(m, nvars);
    for (ri, (val, row)) in rows.into_iter().enumerate() {
        r[ri] = val;
        for (ci, v) in row.into_iter().enumerate() {
            jac[(ri, ci)] = v;
        }
    }
    Ok((r, jac))
}

/// Exact gradient and Hessian of the efficiency contribution to `Phi`
/// with respect to agent `i`'s flattened controls. The term is a negative
/// quadratic: with `c_t = dt * sum_{k<t} a_k`, it contributes
/// `-(lambda_eff / N_eff) * sum_t |c_t|^2`, so the Hessian is constant
/// negative semidefinite with entries `-2 q dt^2 (T - max(k, l))` per
/// axis.
pub fn efficiency_model(
    scenario: &Scenario,
    cfg: &PotentialConfig,
    seq: &ControlSequence,
) -> (DVector<f64>, DMatrix<f64>) {
    let horizon = scenario.horizon;
    let nvars = 2 * horizon;
    if cfg.lambda_efficiency == 0.0 {
        return (DVector::zeros(nvars), DMatrix::zeros(nvars, nvars));
    }
    let q = cfg.lambda_efficiency / cfg.normalizers_for(scenario).efficiency;
    let dt = scenario.dt;
    let mut hess = DMatrix::zeros(nvars, nvars);
    for k in 0..horizon {
        for l in 0..horizon {
            let v = -2.0 * q * dt * dt * (horizon - k.max(l)) as f64;
            hess[(2 * k, 2 * l)] = v;
            hess[(2 * k + 1, 2 * l + 1)] = v;
        }
    }
    let grad = &hess * flatten(seq);
    (grad, hess)
}

fn flatten(seq: &ControlSequence) -> DVector<f64> {
    let mut x = DVector::zeros(2 * seq.len());
    for (k, c) in seq.controls.iter().enumerate() {
        x[2 * k] = c.ax;
        x[2 * k + 1] = c.ay;
    }
    x
}

fn unflatten(x: &DVector<f64>, dt: f64) -> ControlSequence {
    let horizon = x.len() / 2;
    ControlSequence::new(
        (0..horizon)
            .map(|k| crate::dynamics::Control::new(x[2 * k], x[2 * k + 1]))
            .collect(),
        dt,
    )
}

/// Solves agent `i`'s inner minimization with the other agents frozen.
///
/// The returned controls are feasible and satisfy
/// `Phi(after) <= Phi(before)`; `suboptimality_bound` is the final
/// cost-suboptimality estimate fed into the outer loop's `Delta_k`.
pub fn best_response(
    scenario: &Scenario,
    profile: &JointProfile,
    cfg: &PotentialConfig,
    weights: &AgentWeights,
    i: usize,
    solver: &SolverConfig,
) -> Result<BestResponseResult> {
    solver.validate()?;
    cfg.validate()?;
    if i >= scenario.n_agents() {
        return Err(Error::AgentIndex {
            index: i,
            count: scenario.n_agents(),
        });
    }
    let w = weights.get(i);
    let mut work = profile.clone();
    work.sequences[i] = project_controls(&work.sequences[i], scenario.a_max);
    let trajectories = rollout_joint(&scenario.initial_states, &work)?;
    let phi_before = potential_with(scenario, &work, cfg, &trajectories)?;
    if !phi_before.is_finite() {
        return Err(Error::SolverDiverged(format!(
            "non-finite potential at start of best response for agent {i}"
        )));
    }

    let mut phi = phi_before;
    let mut iters = 0;
    let mut subopt;
    let mut mu = solver.lm_damping_init;
    // trial step for the projected-gradient backend; grows on success so
    // the flat normalized landscape does not force tiny moves
    let mut pg_step = solver.step_size;
    loop {
        let trajs = rollout_joint(&scenario.initial_states, &work)?;
        let grad = grad_potential_agent_with(scenario, &work, cfg, i, &trajs)?;
        subopt = suboptimality(w, solver.step_size, &work.sequences[i], &grad, scenario.a_max);
        if subopt < solver.grad_tol || iters >= solver.max_inner_iters {
            break;
        }
        iters += 1;
        let improved = match solver.backend {
            Backend::ProjectedGradient => {
                let (seq, new_phi, improved, accepted_step) =
                    projected_gradient_step(scenario, &work, cfg, i, &grad, pg_step)?;
                if improved {
                    work.sequences[i] = seq;
                    phi = new_phi;
                    pg_step = (accepted_step * 2.0).min(1e9);
                }
                improved
            }
            Backend::LevenbergMarquardt => {
                // damped Newton on Phi: Gauss-Newton curvature of the
                // residual blocks plus the exact concave efficiency model
                let (r, jac) = lm_residuals(scenario, &work, cfg, i)?;
                let (g_eff, h_eff) = efficiency_model(scenario, cfg, &work.sequences[i]);
                let jtj = 2.0 * jac.transpose() * &jac;
                let model_hess = &jtj + &h_eff;
                let rhs = -(2.0 * jac.transpose() * &r + g_eff);
                let x = flatten(&work.sequences[i]);
                let mut newton: Option<(ControlSequence, f64)> = None;
                for _ in 0..12 {
                    let mut a = model_hess.clone();
                    for d in 0..a.nrows() {
                        a[(d, d)] += mu * (jtj[(d, d)] + h_eff[(d, d)].abs() + 1e-12);
                    }
                    let delta = match a.cholesky() {
                        Some(ch) => ch.solve(&rhs),
                        None => {
                            mu *= 4.0;
                            continue;
                        }
                    };
                    let cand_x = &x + delta;
                    let cand = project_controls(&unflatten(&cand_x, scenario.dt), scenario.a_max);
                    let mut trial = work.clone();
                    trial.sequences[i] = cand.clone();
                    let cand_phi = crate::potential::potential(scenario, &trial, cfg)?;
                    if cand_phi.is_finite() && cand_phi < phi {
                        mu = (mu / 3.0).max(1e-12);
                        newton = Some((cand, cand_phi));
                        break;
                    }
                    mu *= 4.0;
                }
                // the damped system crawls along the concave efficiency
                // directions, so also try a growing gradient step and
                // keep whichever candidate lowers Phi further
                let (gseq, gphi, gimp, gstep) =
                    projected_gradient_step(scenario, &work, cfg, i, &grad, pg_step)?;
                if gimp {
                    pg_step = (gstep * 2.0).min(1e9);
                }
                let mut best = newton;
                if gimp && best.as_ref().is_none_or(|(_, np)| gphi < *np) {
                    best = Some((gseq, gphi));
                }
                match best {
                    Some((seq, new_phi)) => {
                        work.sequences[i] = seq;
                        phi = new_phi;
                        true
                    }
                    None => false,
                }
            }
        };
        if !improved {
            // no acceptable step from here; report the remaining gradient
            let trajs = rollout_joint(&scenario.initial_states, &work)?;
            let grad = grad_potential_agent_with(scenario, &work, cfg, i, &trajs)?;
            subopt = suboptimality(w, solver.step_size, &work.sequences[i], &grad, scenario.a_max);
            break;
        }
    }

    debug_assert!(phi <= phi_before + 1e-12);
    Ok(BestResponseResult {
        controls: work.sequences[i].clone(),
        phi_before,
        phi_after: phi,
        suboptimality_bound: subopt,
        inner_iters: iters,
    })
}
