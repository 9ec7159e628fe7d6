//! `pdgplay`: command-line front end for the potential-game intersection
//! solver — scenario generation, solving, Nash verification, calibration,
//! evaluation, and data ingestion.

mod manifest;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pdg_core::best_response::{Backend, SolverConfig};
use pdg_core::calibration::{calibrate, CalibrationConfig, WEIGHT_CSV_HEADER};
use pdg_core::data::{
    classify_movement, extract_scenes, filter_eligible, load_tracks, scene_to_scenario,
    synth_scenario, CsvSchema, GeneratorConfig, Provenance, Region, ScenarioFile, Track,
    SCHEMA_VERSION,
};
use pdg_core::dynamics::{rollout, JointProfile};
use pdg_core::fictitious_play::{multi_start_solve, nash_gap, DfpConfig, SolveReport};
use pdg_core::metrics::{evaluate_suite, Ablation, EvalMode, SCENE_CSV_HEADER};
use pdg_core::potential::{AgentWeights, PotentialConfig};
use pdg_core::scenario::Scenario;
use pdg_core::{Error, Result};
use serde::{Deserialize, Serialize};

use manifest::ManifestBuilder;

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_IO: u8 = 4;

const MAX_AGENTS: usize = 6;

#[derive(Parser)]
#[command(
    name = "pdgplay",
    version,
    about = "Multi-vehicle intersection interaction as a weighted potential game"
)]
struct Cli {
    /// Cap the number of worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic crossing scenes as scenario JSON files.
    Generate(GenerateArgs),
    /// Solve a scenario and write a report (and optionally an SVG plot).
    Solve(SolveArgs),
    /// Re-certify the Nash gaps of a solved profile at a higher budget.
    Verify(VerifyArgs),
    /// Fit term and per-agent weights from demonstration scenarios.
    Calibrate(CalibrateArgs),
    /// Evaluate a directory of scenarios and print aggregate metrics.
    Evaluate(EvaluateArgs),
    /// Convert a trajectory CSV into interaction scenario files.
    Ingest(IngestArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 10)]
    n_scenes: usize,
    /// Agents per scene (1 to 6).
    #[arg(long, default_value_t = 2)]
    agents: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Planning,
    Prediction,
}

#[derive(Debug, Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SolverArg {
    Lm,
    Pg,
}

#[derive(Debug, Copy, Clone, PartialEq, Eq, ValueEnum)]
enum AblationArg {
    None,
    Iw,
    Sc,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Planning)]
    mode: ModeArg,
    /// Number of multi-start initializations.
    #[arg(long, default_value_t = 4)]
    starts: usize,
    #[arg(long, value_enum, default_value_t = SolverArg::Lm)]
    solver: SolverArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Solve report JSON holding the profile to certify.
    #[arg(long)]
    profile: PathBuf,
    /// Strict upper bound each certified gap must satisfy.
    #[arg(long, default_value_t = 1e-3)]
    threshold: f64,
    /// Optional machine-readable result JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Directory of demonstration scenario JSON files (with ground truth).
    #[arg(long)]
    demos: PathBuf,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    learning_rate: f64,
    /// Inner-solver termination tolerance.
    #[arg(long, default_value_t = 1e-6)]
    grad_tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fitted weights JSON.
    #[arg(long)]
    out: PathBuf,
    /// Optional per-agent (weight, speed, accel) CSV.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory of scenario JSON files.
    #[arg(long)]
    scenes: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Planning)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = AblationArg::None)]
    ablation: AblationArg,
    #[arg(long, default_value_t = 4)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Inner-solver termination tolerance.
    #[arg(long, default_value_t = 1e-6)]
    grad_tol: f64,
    /// Optional per-scene metrics CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    csv: PathBuf,
    /// Eligibility region as x0,y0,x1,y1.
    #[arg(long, default_value = "-30,-30,30,30")]
    region: String,
    /// Intersection core region as x0,y0,x1,y1 (movement classification).
    #[arg(long, default_value = "-8,-8,8,8")]
    core: String,
    /// Minimum consecutive in-region frames per track.
    #[arg(long, default_value_t = 40)]
    min_frames: usize,
    /// Minimum shared frame window per scene.
    #[arg(long, default_value_t = 20)]
    min_window: usize,
    /// History frames per extracted scenario.
    #[arg(long, default_value_t = 10)]
    history: usize,
    /// Future (planning) frames per extracted scenario.
    #[arg(long, default_value_t = 10)]
    horizon: usize,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

/// Machine-readable output of `solve`, consumed by `verify`.
#[derive(Serialize, Deserialize)]
struct SolveArtifact {
    schema_version: u32,
    scene_id: String,
    mode: String,
    solver: String,
    seed: u64,
    report: SolveReport,
    profile: JointProfile,
    /// Rolled-out future positions per agent.
    trajectories: Vec<Vec<[f64; 2]>>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Csv(_) => EXIT_IO,
        Error::SolverDiverged(_) | Error::NonFinite(_) => EXIT_SOLVER,
        _ => EXIT_VALIDATION,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PDGPLAY_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: failed to configure thread pool: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    }
    let threads = cli.threads;
    let run = match cli.command {
        Command::Generate(a) => cmd_generate(a, threads),
        Command::Solve(a) => cmd_solve(a, threads),
        Command::Verify(a) => cmd_verify(a, threads),
        Command::Calibrate(a) => cmd_calibrate(a, threads),
        Command::Evaluate(a) => cmd_evaluate(a, threads),
        Command::Ingest(a) => cmd_ingest(a, threads),
    };
    match run {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_scenario_dir(dir: &Path) -> Result<Vec<(PathBuf, Scenario)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.extension().is_some_and(|x| x == "json")
                && !p
                    .file_name()
                    .is_some_and(|n| n.to_string_lossy().contains("manifest"))
        })
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let file = ScenarioFile::load(&p)?;
        out.push((p, file.scenario));
    }
    if out.is_empty() {
        return Err(Error::Empty(format!(
            "no scenario JSON files in {}",
            dir.display()
        )));
    }
    Ok(out)
}

fn scenario_weights(s: &Scenario) -> AgentWeights {
    match &s.agent_weights {
        Some(w) => AgentWeights::new(w.clone()),
        None => AgentWeights::ones(s.n_agents()),
    }
}

fn cmd_generate(args: GenerateArgs, threads: Option<usize>) -> Result<ExitCode> {
    if args.agents == 0 || args.agents > MAX_AGENTS {
        return Err(Error::InvalidInput(format!(
            "--agents must be between 1 and {MAX_AGENTS}, got {}",
            args.agents
        )));
    }
    std::fs::create_dir_all(&args.out)?;
    let gen = GeneratorConfig {
        n_agents: args.agents,
        ..GeneratorConfig::default()
    };
    let mut mb = ManifestBuilder::new("generate", Some(args.seed), threads);
    for i in 0..args.n_scenes {
        let seed = args.seed.wrapping_add(i as u64);
        let scenario = synth_scenario(&gen, seed)?;
        let path = args.out.join(format!("scene-{i:04}.json"));
        ScenarioFile::new(
            scenario,
            Provenance {
                source: "synthetic".into(),
                t0: None,
                seed: Some(seed),
            },
        )
        .save(&path)?;
        mb.output(&path);
    }
    println!("wrote {} scenes to {}", args.n_scenes, args.out.display());
    mb.write(&args.out.join("manifest.json"))?;
    Ok(ExitCode::SUCCESS)
}

fn mode_config(mode: ModeArg) -> PotentialConfig {
    match mode {
        ModeArg::Planning => PotentialConfig::default(),
        ModeArg::Prediction => PotentialConfig::default().prediction(),
    }
}

fn cmd_solve(args: SolveArgs, threads: Option<usize>) -> Result<ExitCode> {
    let mut mb = ManifestBuilder::new("solve", Some(args.seed), threads);
    mb.input(&args.scenario);
    let scenario = ScenarioFile::load(&args.scenario)?.scenario;
    let cfg = mode_config(args.mode);
    let weights = scenario_weights(&scenario);
    let dfp = DfpConfig {
        n_starts: args.starts,
        rng_seed: args.seed,
        ..DfpConfig::default()
    };
    let solver = SolverConfig {
        backend: match args.solver {
            SolverArg::Lm => Backend::LevenbergMarquardt,
            SolverArg::Pg => Backend::ProjectedGradient,
        },
        ..SolverConfig::default()
    };
    let solved = multi_start_solve(&scenario, &cfg, &weights, &dfp, &solver);
    let (profile, report) = match solved {
        Ok(pair) => pair,
        Err(e) => {
            // leave a partial artifact behind so the failure is inspectable
            let partial = serde_json::json!({
                "schema_version": SCHEMA_VERSION,
                "scene_id": scenario.scene_id,
                "error": e.to_string(),
            });
            std::fs::write(&args.report, serde_json::to_string_pretty(&partial)?)?;
            return Err(e);
        }
    };
    let mut trajectories = Vec::new();
    for (state, seq) in scenario.initial_states.iter().zip(&profile.sequences) {
        trajectories.push(rollout(state, seq)?.future_positions());
    }
    let artifact = SolveArtifact {
        schema_version: SCHEMA_VERSION,
        scene_id: scenario.scene_id.clone(),
        mode: format!("{:?}", args.mode).to_lowercase(),
        solver: match args.solver {
            SolverArg::Lm => "lm".into(),
            SolverArg::Pg => "pg".into(),
        },
        seed: args.seed,
        report,
        profile,
        trajectories,
    };
    std::fs::write(&args.report, serde_json::to_string_pretty(&artifact)?)?;
    mb.output(&args.report);
    if let Some(svg_path) = &args.svg {
        let doc = svg::render_scene(&scenario, &artifact.profile)?;
        std::fs::write(svg_path, doc)?;
        mb.output(svg_path);
    }
    println!(
        "scene {}: converged={} outer_iters={} phi={:.6} max_gap={:.3e}",
        artifact.scene_id,
        artifact.report.converged,
        artifact.report.outer_iters,
        artifact.report.phi_final(),
        artifact.report.max_nash_gap(),
    );
    mb.write(&with_suffix(&args.report, ".manifest.json"))?;
    Ok(ExitCode::SUCCESS)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_verify(args: VerifyArgs, threads: Option<usize>) -> Result<ExitCode> {
    let mut mb = ManifestBuilder::new("verify", None, threads);
    mb.input(&args.scenario);
    mb.input(&args.profile);
    let scenario = ScenarioFile::load(&args.scenario)?.scenario;
    let artifact: SolveArtifact =
        serde_json::from_str(&std::fs::read_to_string(&args.profile)?)?;
    if artifact.profile.sequences.len() != scenario.n_agents() {
        return Err(Error::AgentCountMismatch {
            expected: scenario.n_agents(),
            actual: artifact.profile.sequences.len(),
        });
    }
    let cfg = if artifact.mode == "prediction" {
        PotentialConfig::default().prediction()
    } else {
        PotentialConfig::default()
    };
    let weights = scenario_weights(&scenario);
    let gaps = nash_gap(
        &scenario,
        &artifact.profile,
        &cfg,
        &weights,
        &SolverConfig::default(),
    )?;
    println!("agent  weight      gap");
    for (i, g) in gaps.iter().enumerate() {
        println!("{i:>5}  {:>6.3}  {g:.3e}", weights.get(i));
    }
    let max_gap = gaps.iter().cloned().fold(0.0f64, f64::max);
    let passed = max_gap < args.threshold;
    println!(
        "max gap {max_gap:.3e} {} threshold {:.3e}",
        if passed { "<" } else { ">=" },
        args.threshold
    );
    if let Some(out) = &args.out {
        let result = serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "scene_id": artifact.scene_id,
            "gaps": gaps,
            "max_gap": max_gap,
            "threshold": args.threshold,
            "passed": passed,
        });
        std::fs::write(out, serde_json::to_string_pretty(&result)?)?;
        mb.output(out);
        mb.write(&with_suffix(out, ".manifest.json"))?;
    }
    Ok(if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY_FAILED)
    })
}

fn cmd_calibrate(args: CalibrateArgs, threads: Option<usize>) -> Result<ExitCode> {
    let mut mb = ManifestBuilder::new("calibrate", Some(args.seed), threads);
    mb.input(&args.demos);
    let demos: Vec<Scenario> = load_scenario_dir(&args.demos)?
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    let cal = CalibrationConfig {
        max_epochs: args.epochs,
        learning_rate: args.learning_rate,
        ..CalibrationConfig::default()
    };
    let dfp = DfpConfig {
        rng_seed: args.seed,
        ..DfpConfig::default()
    };
    let solver = SolverConfig {
        grad_tol: args.grad_tol,
        ..SolverConfig::default()
    };
    let result = calibrate(&demos, &cal, &PotentialConfig::default(), &dfp, &solver)?;
    println!(
        "calibrated {} demos ({} excluded): replay RMSE {:.4} -> {:.4} m over {} epochs",
        result.demo_ids.len(),
        result.excluded,
        result.loss_trace.first().unwrap_or(&f64::NAN),
        result.loss_trace.last().unwrap_or(&f64::NAN),
        args.epochs,
    );
    let wrapped = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "result": result,
    });
    std::fs::write(&args.out, serde_json::to_string_pretty(&wrapped)?)?;
    mb.output(&args.out);
    if let Some(summary) = &args.summary {
        let mut csv = String::from(WEIGHT_CSV_HEADER);
        csv.push('\n');
        for row in &result.rows {
            csv.push_str(&row.csv_row());
            csv.push('\n');
        }
        std::fs::write(summary, csv)?;
        mb.output(summary);
    }
    mb.write(&with_suffix(&args.out, ".manifest.json"))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_evaluate(args: EvaluateArgs, threads: Option<usize>) -> Result<ExitCode> {
    let mut mb = ManifestBuilder::new("evaluate", Some(args.seed), threads);
    mb.input(&args.scenes);
    let scenarios: Vec<Scenario> = load_scenario_dir(&args.scenes)?
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    let mode = match args.mode {
        ModeArg::Planning => EvalMode::Planning,
        ModeArg::Prediction => EvalMode::Prediction,
    };
    let ablation = match args.ablation {
        AblationArg::None => Ablation::None,
        AblationArg::Iw => Ablation::Iw,
        AblationArg::Sc => Ablation::Sc,
    };
    let dfp = DfpConfig {
        n_starts: args.starts,
        rng_seed: args.seed,
        ..DfpConfig::default()
    };
    let solver = SolverConfig {
        grad_tol: args.grad_tol,
        ..SolverConfig::default()
    };
    let report = evaluate_suite(
        &scenarios,
        &PotentialConfig::default(),
        &dfp,
        &solver,
        mode,
        ablation,
    )?;
    println!(
        "mode={:?} ablation={:?} scenes={} excluded={}",
        mode,
        ablation,
        report.scenes.len(),
        report.excluded
    );
    println!(
        "ADE {:.4} m | FDE {:.4} m | RMSE {:.4} m | CL {:.2}%",
        report.ade_m,
        report.fde_m,
        report.rmse_m,
        100.0 * report.collision_rate
    );
    if let Some(out) = &args.out {
        let mut csv = String::from(SCENE_CSV_HEADER);
        csv.push('\n');
        for scene in &report.scenes {
            csv.push_str(&scene.csv_row());
            csv.push('\n');
        }
        std::fs::write(out, csv)?;
        mb.output(out);
        mb.write(&with_suffix(out, ".manifest.json"))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_region(spec: &str) -> Result<Region> {
    let parts: Vec<f64> = spec
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidInput(format!("region must be x0,y0,x1,y1, got '{spec}'")))?;
    if parts.len() != 4 || parts[0] >= parts[2] || parts[1] >= parts[3] {
        return Err(Error::InvalidInput(format!(
            "region must be x0,y0,x1,y1 with x0<x1 and y0<y1, got '{spec}'"
        )));
    }
    Ok(Region::new([parts[0], parts[1]], [parts[2], parts[3]]))
}

fn cmd_ingest(args: IngestArgs, threads: Option<usize>) -> Result<ExitCode> {
    let mut mb = ManifestBuilder::new("ingest", None, threads);
    mb.input(&args.csv);
    let region = parse_region(&args.region)?;
    let core = parse_region(&args.core)?;
    let (tracks, diag) = load_tracks(&args.csv, &CsvSchema::default())?;
    let eligible = filter_eligible(&tracks, args.min_frames, &region);
    let mut classified: Vec<(Track, pdg_core::data::Movement)> = Vec::new();
    let mut unclassifiable = 0usize;
    for t in &eligible {
        match classify_movement(t, &core) {
            Ok(m) => classified.push((t.clone(), m)),
            Err(_) => unclassifiable += 1,
        }
    }
    let scenes = extract_scenes(&classified, args.min_window);
    std::fs::create_dir_all(&args.out)?;
    let mut written = 0usize;
    for spec in &scenes {
        let t0 = spec.window.0 + args.history as i64;
        if t0 + args.horizon as i64 > spec.window.1 {
            continue;
        }
        let scenario = scene_to_scenario(spec, &eligible, t0, args.history, args.horizon)?;
        let path = args
            .out
            .join(format!("{}.json", scenario.scene_id.replace(['@', '#'], "_")));
        ScenarioFile::new(
            scenario,
            Provenance {
                source: args.csv.display().to_string(),
                t0: Some(t0),
                seed: None,
            },
        )
        .save(&path)?;
        mb.output(&path);
        written += 1;
    }
    println!(
        "tracks: {} loaded ({} rows dropped), {} eligible, {} classified, {} unclassifiable",
        tracks.len(),
        diag.dropped_rows,
        eligible.len(),
        classified.len(),
        unclassifiable
    );
    println!(
        "scenes: {} extracted, {} scenario files written to {}",
        scenes.len(),
        written,
        args.out.display()
    );
    mb.write(&args.out.join("manifest.json"))?;
    Ok(ExitCode::SUCCESS)
}
