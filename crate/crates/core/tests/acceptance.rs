//! End-to-end acceptance checks, one printed PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use pdg_core::best_response::{Backend, SolverConfig};
use pdg_core::calibration::{calibrate, replay_rmse, CalibrationConfig};
use pdg_core::data::{
    classify_movement, conflicts, extract_scenes, filter_eligible, load_tracks, scene_to_scenario,
    synth_scenario, Approach, CsvSchema, GeneratorConfig, Maneuver, Movement, Region,
};
use pdg_core::dynamics::{
    project_controls, rollout, rollout_joint, Control, ControlSequence, JointProfile,
};
use pdg_core::fictitious_play::{dfp_solve, warm_start_policy, DfpConfig};
use pdg_core::metrics::{ade_fde, evaluate_suite, evaluate_suite_with, Ablation, EvalMode};
use pdg_core::potential::{agent_cost, potential, AgentWeights, PotentialConfig};
use pdg_core::scenario::Scenario;
use pdg_core::suite::{crossing_suite, heterogeneous_demo_suite};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn verdict(criterion: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {criterion}: {tag} ({detail})");
    assert!(pass, "{criterion}: {detail}");
}

fn random_profile(rng: &mut ChaCha8Rng, scenario: &Scenario) -> JointProfile {
    let seqs = (0..scenario.n_agents())
        .map(|_| {
            let controls = (0..scenario.horizon)
                .map(|_| {
                    Control::new(
                        rng.random_range(-scenario.a_max..scenario.a_max),
                        rng.random_range(-scenario.a_max..scenario.a_max),
                    )
                })
                .collect();
            project_controls(
                &ControlSequence::new(controls, scenario.dt),
                scenario.a_max,
            )
        })
        .collect();
    JointProfile::new(seqs)
}

fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    // average ranks for ties
    let rank = |v: &[f64]| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut k = 0;
        while k < idx.len() {
            let mut j = k;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[k]] {
                j += 1;
            }
            let avg = (k + j) as f64 / 2.0;
            for &i in &idx[k..=j] {
                r[i] = avg;
            }
            k = j + 1;
        }
        r
    };
    let (rx, ry) = (rank(xs), rank(ys));
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for i in 0..xs.len() {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx).powi(2);
        dy += (ry[i] - my).powi(2);
    }
    num / (dx * dy).sqrt()
}

#[test]
fn criterion_01_exact_potential_identity() {
    let scenes = crossing_suite(5, 50).unwrap();
    let cfg = PotentialConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for trial in 0..1000 {
        let scenario = &scenes[trial % scenes.len()];
        let base = random_profile(&mut rng, scenario);
        let i = rng.random_range(0..scenario.n_agents());
        let mut w = AgentWeights::ones(scenario.n_agents());
        for k in 0..w.len() {
            w.set(k, 10f64.powf(rng.random_range(-2.0..1.0)));
        }
        let mut pert = base.clone();
        for c in pert.sequences[i].controls.iter_mut() {
            c.ax += rng.random_range(-1.0..1.0);
            c.ay += rng.random_range(-1.0..1.0);
        }
        pert.sequences[i] = project_controls(&pert.sequences[i], scenario.a_max);
        let dj = agent_cost(scenario, &pert, &cfg, &w, i).unwrap()
            - agent_cost(scenario, &base, &cfg, &w, i).unwrap();
        let dphi = potential(scenario, &pert, &cfg).unwrap()
            - potential(scenario, &base, &cfg).unwrap();
        worst = worst.max((dj - w.get(i) * dphi).abs());
    }
    verdict(
        "1 exact-potential identity",
        worst < 1e-10,
        &format!("max |dJ_i - w_i dPhi| = {worst:.3e} over 1000 tuples, tol 1e-10"),
    );
}

#[test]
fn criterion_02_gradient_correctness() {
    let scenes = crossing_suite(11, 100).unwrap();
    let cfg = PotentialConfig::default();
    let h = 1e-5;
    let worst = scenes
        .par_iter()
        .enumerate()
        .map(|(k, scenario)| {
            let mut rng = ChaCha8Rng::seed_from_u64(200 + k as u64);
            let profile = random_profile(&mut rng, scenario);
            let i = rng.random_range(0..scenario.n_agents());
            let analytic =
                pdg_core::potential::grad_potential_agent(scenario, &profile, &cfg, i).unwrap();
            let mut max_abs_fd: f64 = 0.0;
            let mut max_diff: f64 = 0.0;
            for t in 0..scenario.horizon {
                for axis in 0..2 {
                    let probe = |delta: f64| {
                        let mut p = profile.clone();
                        let c = &mut p.sequences[i].controls[t];
                        if axis == 0 {
                            c.ax += delta;
                        } else {
                            c.ay += delta;
                        }
                        potential(scenario, &p, &cfg).unwrap()
                    };
                    let fd = (probe(h) - probe(-h)) / (2.0 * h);
                    max_abs_fd = max_abs_fd.max(fd.abs());
                    max_diff = max_diff.max((analytic[t][axis] - fd).abs());
                }
            }
            max_diff / max_abs_fd.max(1.0)
        })
        .reduce(|| 0.0, f64::max);
    verdict(
        "2 gradient correctness",
        worst < 1e-4,
        &format!("max relative error vs central differences = {worst:.3e} over 100 scenarios, tol 1e-4"),
    );
}

#[test]
fn criterion_03_perturbed_descent() {
    let scenes = crossing_suite(13, 100).unwrap();
    let cfg = PotentialConfig::default();
    let dfp = DfpConfig::default();
    let violations: usize = scenes
        .par_iter()
        .map(|s| {
            let w = AgentWeights::ones(s.n_agents());
            let mut count = 0;
            // default budget: descent chain with the reported Delta_k slack
            let solver = SolverConfig::default();
            let warm = warm_start_policy(s);
            let (_, rep) = dfp_solve(s, &cfg, &w, &warm, &dfp, &solver).unwrap();
            for k in 0..rep.delta_trace.len() {
                if rep.phi_trace[k + 1] > rep.phi_trace[k] + rep.delta_trace[k] + 1e-12 {
                    count += 1;
                }
            }
            // high budget: trace must be non-increasing outright
            let exact = SolverConfig {
                grad_tol: 1e-9,
                max_inner_iters: 2000,
                ..SolverConfig::default()
            };
            let (_, rep) = dfp_solve(s, &cfg, &w, &warm, &dfp, &exact).unwrap();
            for k in 1..rep.phi_trace.len() {
                if rep.phi_trace[k] > rep.phi_trace[k - 1] + 1e-12 {
                    count += 1;
                }
            }
            count
        })
        .sum();
    verdict(
        "3 perturbed descent",
        violations == 0,
        &format!("{violations} chain violations over 100 scenarios"),
    );
}

#[test]
fn criterion_04_epsilon_nash_certification() {
    let scenes = crossing_suite(17, 100).unwrap();
    let cfg = PotentialConfig::default();
    let dfp = DfpConfig::default();
    let solver = SolverConfig::default();
    let stats: Vec<(bool, f64, f64)> = scenes
        .par_iter()
        .map(|s| {
            let w = AgentWeights::ones(s.n_agents());
            let warm = warm_start_policy(s);
            let (_, rep) = dfp_solve(s, &cfg, &w, &warm, &dfp, &solver).unwrap();
            (
                rep.converged && rep.outer_iters <= 50,
                rep.max_nash_gap(),
                *rep.delta_trace.last().unwrap(),
            )
        })
        .collect();
    let qualifying = stats.iter().filter(|(c, g, _)| *c && *g <= 1e-3).count();
    let remainder_ok = stats
        .iter()
        .filter(|(c, g, _)| !(*c && *g <= 1e-3))
        .all(|(_, g, d)| *g <= d + 1e-3);
    verdict(
        "4 epsilon-Nash certification",
        qualifying >= 95 && remainder_ok,
        &format!("{qualifying}/100 converge with gap <= 1e-3; remainder bounded: {remainder_ok}"),
    );
}

// grid oracle helpers for criterion 5

fn grid_sequences(a_max: f64, horizon: usize, dt: f64) -> Vec<ControlSequence> {
    let levels: Vec<f64> = (0..5).map(|k| -a_max + k as f64 * a_max / 2.0).collect();
    let per_step: Vec<Control> = levels
        .iter()
        .flat_map(|&ax| levels.iter().map(move |&ay| (ax, ay)))
        .map(|(ax, ay)| {
            let n = (ax * ax + ay * ay).sqrt();
            if n > a_max {
                Control::new(ax * a_max / n, ay * a_max / n)
            } else {
                Control::new(ax, ay)
            }
        })
        .collect();
    let mut seqs = vec![Vec::new()];
    for _ in 0..horizon {
        seqs = seqs
            .into_iter()
            .flat_map(|s: Vec<Control>| {
                per_step
                    .iter()
                    .map(move |c| {
                        let mut t = s.clone();
                        t.push(*c);
                        t
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    seqs.into_iter()
        .map(|c| ControlSequence::new(c, dt))
        .collect()
}

fn pair_safety(scenario: &Scenario, cfg: &PotentialConfig, pa: &[[f64; 2]], pb: &[[f64; 2]]) -> f64 {
    let nrm = cfg.normalizers_for(scenario);
    let mut raw = 0.0;
    for (a, b) in pa.iter().zip(pb) {
        let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let h = (cfg.d_safe - d).max(0.0);
        raw += 2.0 * h * h; // both ordered pairs of the two agents
    }
    cfg.lambda_safety * raw / nrm.safety
}

// exhaustive joint minimum over the snapped grid, exact thanks to the
// decomposition Phi(g1, g2) = base1(g1) + base2(g2) - const + safety(g1, g2)
// with safety >= 0, which admits sound branch-and-bound pruning
fn grid_joint_minimum(scenario: &Scenario, cfg: &PotentialConfig) -> f64 {
    let horizon = scenario.horizon;
    let seqs = grid_sequences(scenario.a_max, horizon, scenario.dt);
    let zero = JointProfile::zeros(2, horizon, scenario.dt);
    let zpos: Vec<Vec<[f64; 2]>> = (0..2)
        .map(|i| {
            rollout(&scenario.initial_states[i], &zero.sequences[i])
                .unwrap()
                .future_positions()
        })
        .collect();
    let phi00 = potential(scenario, &zero, cfg).unwrap();
    let constant = phi00 - pair_safety(scenario, cfg, &zpos[0], &zpos[1]);
    let mut per_agent: Vec<Vec<(f64, Vec<[f64; 2]>)>> = Vec::new();
    for i in 0..2 {
        let mut v = Vec::with_capacity(seqs.len());
        for g in &seqs {
            let mut prof = zero.clone();
            prof.sequences[i] = g.clone();
            let p = rollout(&scenario.initial_states[i], g)
                .unwrap()
                .future_positions();
            let phi = potential(scenario, &prof, cfg).unwrap();
            let sf = pair_safety(scenario, cfg, &p, &zpos[1 - i]);
            v.push((phi - sf, p));
        }
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        per_agent.push(v);
    }
    let (a1, a2) = (&per_agent[0], &per_agent[1]);
    let mut best = f64::INFINITY;
    for (b1, p1) in a1 {
        if b1 + a2[0].0 - constant >= best {
            break;
        }
        for (b2, p2) in a2 {
            let lower = b1 + b2 - constant;
            if lower >= best {
                break;
            }
            let phi = lower + pair_safety(scenario, cfg, p1, p2);
            if phi < best {
                best = phi;
            }
        }
    }
    best
}

#[test]
fn criterion_05_brute_force_oracle() {
    let cfg = PotentialConfig::default();
    let dfp = DfpConfig::default();
    let solver = SolverConfig::default();
    // decomposition self-check against the full potential
    {
        let gen = GeneratorConfig {
            n_agents: 2,
            horizon: 3,
            ..GeneratorConfig::default()
        };
        let s = synth_scenario(&gen, 9000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(500);
        for _ in 0..20 {
            let prof = random_profile(&mut rng, &s);
            let zero = JointProfile::zeros(2, 3, s.dt);
            let pos = |i: usize, seq: &ControlSequence| {
                rollout(&s.initial_states[i], seq).unwrap().future_positions()
            };
            let phi00 = potential(&s, &zero, &cfg).unwrap();
            let constant =
                phi00 - pair_safety(&s, &cfg, &pos(0, &zero.sequences[0]), &pos(1, &zero.sequences[1]));
            let mut bases = [0.0; 2];
            for i in 0..2 {
                let mut p = zero.clone();
                p.sequences[i] = prof.sequences[i].clone();
                bases[i] = potential(&s, &p, &cfg).unwrap()
                    - pair_safety(&s, &cfg, &pos(i, &prof.sequences[i]), &pos(1 - i, &zero.sequences[1 - i]));
            }
            let recomposed = bases[0] + bases[1] - constant
                + pair_safety(&s, &cfg, &pos(0, &prof.sequences[0]), &pos(1, &prof.sequences[1]));
            let direct = potential(&s, &prof, &cfg).unwrap();
            assert!(
                (recomposed - direct).abs() < 1e-12,
                "oracle decomposition broken: {recomposed} vs {direct}"
            );
        }
    }
    let worst = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let gen = GeneratorConfig {
                n_agents: 2,
                horizon: 3,
                ..GeneratorConfig::default()
            };
            let s = synth_scenario(&gen, 9000 + seed).unwrap();
            let w = AgentWeights::ones(2);
            let (_, rep) =
                pdg_core::fictitious_play::multi_start_solve(&s, &cfg, &w, &dfp, &solver).unwrap();
            rep.phi_final() - grid_joint_minimum(&s, &cfg)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    verdict(
        "5 brute-force oracle equivalence",
        worst <= 0.05,
        &format!("max (solver Phi - grid minimum) = {worst:.3e} over 20 instances, tol 0.05"),
    );
}

#[test]
fn criterion_06_cross_backend_consistency() {
    let scenes = crossing_suite(19, 100).unwrap();
    let cfg = PotentialConfig::default();
    let dfp = DfpConfig::default();
    let worst = scenes
        .par_iter()
        .map(|s| {
            let w = AgentWeights::ones(s.n_agents());
            let warm = warm_start_policy(s);
            let mut phis = [0.0; 2];
            for (j, backend) in [Backend::LevenbergMarquardt, Backend::ProjectedGradient]
                .iter()
                .enumerate()
            {
                let solver = SolverConfig {
                    backend: *backend,
                    ..SolverConfig::default()
                };
                let (_, rep) = dfp_solve(s, &cfg, &w, &warm, &dfp, &solver).unwrap();
                phis[j] = rep.phi_final();
            }
            (phis[0] - phis[1]).abs()
        })
        .reduce(|| 0.0, f64::max);
    verdict(
        "6 cross-backend consistency",
        worst <= 2e-3,
        &format!("max |Phi_LM - Phi_PG| = {worst:.3e} over 100 scenarios, tol 2e-3"),
    );
}

#[test]
fn criterion_07_safety_property() {
    let scenes = crossing_suite(424242, 100).unwrap();
    let cfg = PotentialConfig::default();
    let rep = evaluate_suite(
        &scenes,
        &cfg,
        &DfpConfig::default(),
        &SolverConfig::default(),
        EvalMode::Planning,
        Ablation::None,
    )
    .unwrap();
    verdict(
        "7 safety property",
        rep.collision_rate == 0.0 && rep.excluded == 0,
        &format!(
            "collision rate {:.2}% over 100 crossing scenes (3 m test), {} excluded",
            100.0 * rep.collision_rate,
            rep.excluded
        ),
    );
}

// shared settings for the heterogeneous-weight studies: a tolerance where
// the per-agent stopping rule is the active channel
fn hetero_stack() -> (PotentialConfig, DfpConfig, SolverConfig) {
    (
        PotentialConfig::default(),
        DfpConfig::default(),
        SolverConfig {
            grad_tol: 1e-3,
            ..SolverConfig::default()
        },
    )
}

#[test]
fn criterion_08_calibration_closed_loop() {
    let (cfg, dfp, solver) = hetero_stack();
    let demos = heterogeneous_demo_suite(777, 8, &cfg, &dfp, &solver).unwrap();
    let cal = CalibrationConfig {
        max_epochs: 10,
        learning_rate: 0.2,
        ..CalibrationConfig::default()
    };
    let res = calibrate(&demos, &cal, &PotentialConfig::default(), &dfp, &solver).unwrap();
    let final_loss = *res.loss_trace.last().unwrap();
    let ws: Vec<f64> = res.rows.iter().map(|r| r.w).collect();
    let vs: Vec<f64> = res.rows.iter().map(|r| r.mean_speed_mps).collect();
    let rho = spearman(&ws, &vs);
    verdict(
        "8 calibration closed loop",
        final_loss < 0.05 && rho < 0.0,
        &format!("mean replay RMSE {final_loss:.4} m (tol 0.05), (w, speed) rank correlation {rho:.3}"),
    );
}

#[test]
fn criterion_09_ablation_direction() {
    let (cfg, dfp, solver) = hetero_stack();
    let suite = heterogeneous_demo_suite(777, 30, &cfg, &dfp, &solver).unwrap();
    let mut ades = Vec::new();
    for ab in [Ablation::None, Ablation::Sc, Ablation::Iw] {
        let rep = evaluate_suite(&suite, &cfg, &dfp, &solver, EvalMode::Planning, ab).unwrap();
        ades.push(rep.ade_m);
    }
    let (full, sc, iw) = (ades[0], ades[1], ades[2]);
    verdict(
        "9 ablation direction",
        iw > sc && sc > full,
        &format!("ADE full {full:.4} < ADE -SC {sc:.4} < ADE -IW {iw:.4} required"),
    );
}

#[test]
fn criterion_10_metric_formulas() {
    let truth: Vec<[f64; 2]> = (0..10).map(|t| [t as f64, 0.0]).collect();
    let offset: Vec<[f64; 2]> = truth.iter().map(|p| [p[0] + 0.3, p[1] + 0.4]).collect();
    let (ade, fde) = ade_fde(&offset, &truth).unwrap();
    let mut last_only = truth.clone();
    last_only[9][1] += 1.0;
    let (ade2, fde2) = ade_fde(&last_only, &truth).unwrap();
    let (ade0, fde0) = ade_fde(&truth, &truth).unwrap();

    // replay RMSE on a hand-built single-agent scenario
    let init = pdg_core::dynamics::VehicleState::new(0.0, 0.0, 1.0, 0.0, 0.0);
    let scenario = Scenario {
        scene_id: "metrics".into(),
        initial_states: vec![init],
        goals: None,
        histories: vec![vec![init; 10]],
        dt: 0.1,
        horizon: 10,
        a_max: 6.65,
        scene_diag: 10.0,
        ground_truth: None,
        agent_weights: None,
    };
    let profile = JointProfile::zeros(1, 10, 0.1);
    let rolled = rollout_joint(&scenario.initial_states, &profile).unwrap();
    let exact = rolled[0].future_positions();
    let shifted: Vec<[f64; 2]> = exact.iter().map(|p| [p[0] + 0.3, p[1] + 0.4]).collect();
    let rmse_offset = replay_rmse(&scenario, &profile, &[shifted]).unwrap();
    let mut final_only = exact.clone();
    final_only[9][1] += 1.0;
    let rmse_final = replay_rmse(&scenario, &profile, &[final_only]).unwrap();

    let pass = (ade - 0.5).abs() < 1e-12
        && (fde - 0.5).abs() < 1e-12
        && (ade2 - 0.1).abs() < 1e-12
        && (fde2 - 1.0).abs() < 1e-12
        && ade0 == 0.0
        && fde0 == 0.0
        && (rmse_offset - 0.5).abs() < 1e-12
        && (rmse_final - 0.1f64.sqrt()).abs() < 1e-12;
    verdict(
        "10 metric formulas",
        pass,
        &format!(
            "offset (ade, fde, rmse) = ({ade}, {fde}, {rmse_offset}); final-only = ({ade2}, {fde2}, {rmse_final})"
        ),
    );
}

#[test]
fn criterion_11_data_pipeline() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy_tracks.csv");
    let (tracks, diag) = load_tracks(&path, &CsvSchema::default()).unwrap();
    let region = Region::centered([0.0, 0.0], 30.0, 30.0);
    let core = Region::centered([0.0, 0.0], 8.0, 8.0);
    let eligible = filter_eligible(&tracks, 40, &region);
    let classified: Vec<(pdg_core::data::Track, Movement)> = eligible
        .iter()
        .map(|t| (t.clone(), classify_movement(t, &core).unwrap()))
        .collect();
    let movements: Vec<(&str, Movement)> = classified
        .iter()
        .map(|(t, m)| (t.id.as_str(), *m))
        .collect();
    let expected = [
        ("1", Movement::new(Approach::S, Maneuver::Left)),
        ("2", Movement::new(Approach::E, Maneuver::Through)),
        ("3", Movement::new(Approach::N, Maneuver::Right)),
    ];
    let movements_ok = movements.len() == 3
        && expected
            .iter()
            .all(|(id, m)| movements.iter().any(|(i, mm)| i == id && mm == m));

    let scenes = extract_scenes(&classified, 20);
    let scene_ok = scenes.len() == 1
        && scenes[0].reference_track == "1"
        && scenes[0].member_tracks == vec!["1".to_string(), "2".to_string()]
        && scenes[0].window == (0, 65);

    // cutting a planning instance works inside the window
    let scenario = scene_to_scenario(&scenes[0], &eligible, 30, 10, 10).unwrap();
    let cut_ok = scenario.n_agents() == 2 && scenario.histories[0].len() == 10;

    let mut symmetric = true;
    let mut table_ok = true;
    for a1 in Approach::ALL {
        for m1 in Maneuver::ALL {
            for a2 in Approach::ALL {
                for m2 in Maneuver::ALL {
                    let x = Movement::new(a1, m1);
                    let y = Movement::new(a2, m2);
                    if conflicts(x, y) != conflicts(y, x) {
                        symmetric = false;
                    }
                    if a1 == a2 && conflicts(x, y) {
                        table_ok = false;
                    }
                }
            }
        }
    }
    // the published rule, rotated: northbound through conflicts with
    // crossing through/left and the opposing left
    let nb = Movement::new(Approach::S, Maneuver::Through);
    table_ok &= conflicts(nb, Movement::new(Approach::E, Maneuver::Through))
        && conflicts(nb, Movement::new(Approach::E, Maneuver::Left))
        && conflicts(nb, Movement::new(Approach::N, Maneuver::Left))
        && !conflicts(nb, Movement::new(Approach::N, Maneuver::Through));

    verdict(
        "11 data pipeline",
        diag.dropped_rows == 0 && movements_ok && scene_ok && cut_ok && symmetric && table_ok,
        &format!(
            "movements {movements:?}; scenes {}; window {:?}; conflict table symmetric over 144 pairs: {symmetric}",
            scenes.len(),
            scenes.first().map(|s| s.window).unwrap_or((0, 0))
        ),
    );
}

#[test]
fn criterion_12_end_to_end_ingest_evaluate() {
    // real INTERACTION CSVs are licensed; use them when supplied, else run
    // the bundled fixture through the identical pipeline
    let supplied = std::env::var("PDGPLAY_INTERACTION_DIR").ok();
    let (csv_path, label) = match &supplied {
        Some(dir) => {
            let first = std::fs::read_dir(dir)
                .ok()
                .and_then(|rd| {
                    rd.filter_map(|e| e.ok())
                        .map(|e| e.path())
                        .find(|p| p.extension().is_some_and(|x| x == "csv"))
                });
            match first {
                Some(p) => (p, "user-supplied dataset"),
                None => (
                    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
                        .join("tests/fixtures/toy_tracks.csv"),
                    "bundled fixture (no CSVs in PDGPLAY_INTERACTION_DIR)",
                ),
            }
        }
        None => (
            std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy_tracks.csv"),
            "bundled fixture (PDGPLAY_INTERACTION_DIR not set)",
        ),
    };
    let (tracks, _) = load_tracks(&csv_path, &CsvSchema::default()).unwrap();
    let region = Region::centered([0.0, 0.0], 30.0, 30.0);
    let core = Region::centered([0.0, 0.0], 8.0, 8.0);
    let eligible = filter_eligible(&tracks, 40, &region);
    let classified: Vec<(pdg_core::data::Track, Movement)> = eligible
        .iter()
        .filter_map(|t| classify_movement(t, &core).ok().map(|m| (t.clone(), m)))
        .collect();
    let scenes = extract_scenes(&classified, 20);
    let scenarios: Vec<Scenario> = scenes
        .iter()
        .filter_map(|spec| {
            let t0 = spec.window.0 + 30;
            scene_to_scenario(spec, &eligible, t0, 10, 10).ok()
        })
        .collect();
    assert!(!scenarios.is_empty(), "no scenarios extracted from {label}");
    let cfg = PotentialConfig::default();
    let dfp = DfpConfig::default();
    let solver = SolverConfig::default();
    let rep = evaluate_suite_with(&scenarios, &cfg, EvalMode::Planning, Ablation::None, &|s, c, w| {
        pdg_core::fictitious_play::multi_start_solve(s, c, w, &dfp, &solver)
    })
    .unwrap();
    println!("| Method  | ADE (m) | FDE (m) | CL (%) |");
    println!("|---------|---------|---------|--------|");
    println!(
        "| DFP-PDG | {:.4}  | {:.4}  | {:.2}  |",
        rep.ade_m,
        rep.fde_m,
        100.0 * rep.collision_rate
    );
    verdict(
        "12 end-to-end ingest/evaluate",
        rep.scenes.len() == scenarios.len(),
        &format!(
            "{} scenes evaluated from {label}; ADE {:.4} m, FDE {:.4} m, CL {:.2}%",
            rep.scenes.len(),
            rep.ade_m,
            rep.fde_m,
            100.0 * rep.collision_rate
        ),
    );
}
