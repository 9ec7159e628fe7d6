//! Trajectory CSV ingestion, interacting-scene extraction, and synthetic
//! intersection scenario generation.
//!
//! The ingestion pipeline is load -> filter -> classify -> extract ->
//! scenario. Filtering keeps maximal runs of consecutive in-region frames,
//! classification assigns an approach arm and a maneuver from the heading
//! change across the intersection core, and extraction builds one scene per
//! turning vehicle that temporally overlaps at least one conflicting track.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read as IoRead;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dynamics::{VehicleState, DEFAULT_A_MAX};
use crate::error::{Error, Result};
use crate::scenario::{GoalState, Scenario};

/// Version stamp written into every scenario artifact.
pub const SCHEMA_VERSION: u32 = 1;

/// Lane centerline offset from the road axis in meters (right-hand traffic).
pub const LANE_OFFSET: f64 = 1.75;

/// Half-length of a generated approach arm in meters.
pub const ARM_LENGTH: f64 = 30.0;

/// Speed distribution of the synthetic generator in m/s.
pub const SPEED_MEAN: f64 = 4.0975;
pub const SPEED_STD: f64 = 3.3707;
pub const SPEED_MIN: f64 = 0.5;
pub const SPEED_MAX: f64 = 14.0;

/// Heading-change threshold separating a through movement from a turn.
pub const TURN_THRESHOLD: f64 = 30.0 * std::f64::consts::PI / 180.0;

/// One observed row of a track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackFrame {
    pub frame: i64,
    pub timestamp_ms: i64,
    pub state: VehicleState,
    pub length: f64,
    pub width: f64,
}

/// An observed vehicle trajectory with strictly increasing frame indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub id: String,
    pub frames: Vec<TrackFrame>,
}

impl Track {
    pub fn first_frame(&self) -> i64 {
        self.frames.first().map_or(0, |f| f.frame)
    }

    pub fn last_frame(&self) -> i64 {
        self.frames.last().map_or(-1, |f| f.frame)
    }

    /// Frame lookup by index; frames are sorted so this is a binary search.
    pub fn frame_at(&self, frame: i64) -> Option<&TrackFrame> {
        self.frames
            .binary_search_by_key(&frame, |f| f.frame)
            .ok()
            .map(|i| &self.frames[i])
    }
}

/// Axis-aligned region used both for coverage filtering and for the
/// intersection core during classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Region {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Self {
        Self { min, max }
    }

    pub fn centered(center: [f64; 2], half_w: f64, half_h: f64) -> Self {
        Self {
            min: [center[0] - half_w, center[1] - half_h],
            max: [center[0] + half_w, center[1] + half_h],
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }

    pub fn center(&self) -> [f64; 2] {
        [
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
        ]
    }
}

/// Compass arm a vehicle enters from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Approach {
    N,
    S,
    E,
    W,
}

impl Approach {
    pub const ALL: [Approach; 4] = [Approach::N, Approach::S, Approach::E, Approach::W];

    /// Unit travel direction when entering from this arm.
    pub fn heading(self) -> [f64; 2] {
        match self {
            Approach::N => [0.0, -1.0],
            Approach::S => [0.0, 1.0],
            Approach::E => [-1.0, 0.0],
            Approach::W => [1.0, 0.0],
        }
    }

    fn opposing(self) -> Approach {
        match self {
            Approach::N => Approach::S,
            Approach::S => Approach::N,
            Approach::E => Approach::W,
            Approach::W => Approach::E,
        }
    }

    fn crosses(self, other: Approach) -> bool {
        self != other && self.opposing() != other
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Maneuver {
    Through,
    Left,
    Right,
}

impl Maneuver {
    pub const ALL: [Maneuver; 3] = [Maneuver::Through, Maneuver::Left, Maneuver::Right];
}

/// Driving direction of a classified track.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Movement {
    pub approach: Approach,
    pub maneuver: Maneuver,
}

impl Movement {
    pub fn new(approach: Approach, maneuver: Maneuver) -> Self {
        Self { approach, maneuver }
    }
}

/// Symmetric conflict relation between movements.
///
/// A through movement conflicts with through and left traffic from the two
/// crossing arms and with the opposing left turn. Same-arm pairs never
/// conflict, right turns conflict with nothing, and the relation is closed
/// under symmetrization.
pub fn conflicts(m1: Movement, m2: Movement) -> bool {
    if m1.approach == m2.approach {
        return false;
    }
    one_way(m1, m2) || one_way(m2, m1)
}

fn one_way(t: Movement, o: Movement) -> bool {
    if t.maneuver != Maneuver::Through {
        return false;
    }
    if t.approach.crosses(o.approach) {
        matches!(o.maneuver, Maneuver::Through | Maneuver::Left)
    } else {
        o.maneuver == Maneuver::Left
    }
}

/// One interacting scene anchored on a turning reference vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub reference_track: String,
    /// All members including the reference, reference first.
    pub member_tracks: Vec<String>,
    /// Common frame window, inclusive on both ends.
    pub window: (i64, i64),
}

/// Column mapping for trajectory CSVs. Defaults match the public
/// INTERACTION column names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub track_id: String,
    pub frame_id: String,
    pub timestamp_ms: String,
    pub x: String,
    pub y: String,
    pub vx: String,
    pub vy: String,
    pub psi_rad: String,
    pub length: String,
    pub width: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            track_id: "track_id".into(),
            frame_id: "frame_id".into(),
            timestamp_ms: "timestamp_ms".into(),
            x: "x".into(),
            y: "y".into(),
            vx: "vx".into(),
            vy: "vy".into(),
            psi_rad: "psi_rad".into(),
            length: "length".into(),
            width: "width".into(),
        }
    }
}

/// Parse-stage counters surfaced by the ingest command.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadDiagnostics {
    /// Rows dropped because a field was NaN or infinite.
    pub dropped_rows: usize,
}

pub fn load_tracks(path: &Path, schema: &CsvSchema) -> Result<(Vec<Track>, LoadDiagnostics)> {
    load_tracks_from_reader(File::open(path)?, schema)
}

/// Parses a trajectory CSV: rows grouped by track id and sorted by frame.
/// Rows with non-finite numeric fields are dropped and counted; a repeated
/// (track, frame) pair is an error.
pub fn load_tracks_from_reader(
    reader: impl IoRead,
    schema: &CsvSchema,
) -> Result<(Vec<Track>, LoadDiagnostics)> {
    let mut csv = csv::Reader::from_reader(reader);
    let headers = csv.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::CsvSchema(format!("missing column {name}")))
    };
    let c_track = col(&schema.track_id)?;
    let c_frame = col(&schema.frame_id)?;
    let c_ts = col(&schema.timestamp_ms)?;
    let c_x = col(&schema.x)?;
    let c_y = col(&schema.y)?;
    let c_vx = col(&schema.vx)?;
    let c_vy = col(&schema.vy)?;
    let c_psi = col(&schema.psi_rad)?;
    let c_len = col(&schema.length)?;
    let c_wid = col(&schema.width)?;

    let mut by_track: BTreeMap<String, BTreeMap<i64, TrackFrame>> = BTreeMap::new();
    let mut diag = LoadDiagnostics::default();
    for record in csv.records() {
        let record = record?;
        let field = |i: usize| -> Result<&str> {
            record
                .get(i)
                .ok_or_else(|| Error::CsvSchema("short row".into()))
        };
        let num = |i: usize| -> Result<f64> {
            field(i)?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::CsvSchema(format!("bad number: {e}")))
        };
        let int = |i: usize| -> Result<i64> {
            field(i)?
                .trim()
                .parse::<i64>()
                .map_err(|e| Error::CsvSchema(format!("bad integer: {e}")))
        };
        let track = field(c_track)?.trim().to_string();
        let frame = int(c_frame)?;
        let values = [
            num(c_x)?,
            num(c_y)?,
            num(c_vx)?,
            num(c_vy)?,
            num(c_psi)?,
            num(c_len)?,
            num(c_wid)?,
        ];
        if values.iter().any(|v| !v.is_finite()) {
            diag.dropped_rows += 1;
            continue;
        }
        let entry = TrackFrame {
            frame,
            timestamp_ms: int(c_ts)?,
            state: VehicleState::new(values[0], values[1], values[2], values[3], values[4]),
            length: values[5],
            width: values[6],
        };
        if by_track
            .entry(track.clone())
            .or_default()
            .insert(frame, entry)
            .is_some()
        {
            return Err(Error::DuplicateFrame { track, frame });
        }
    }
    let tracks = by_track
        .into_iter()
        .map(|(id, frames)| Track {
            id,
            frames: frames.into_values().collect(),
        })
        .collect();
    Ok((tracks, diag))
}

/// Keeps maximal runs of consecutive in-region frames of at least
/// `min_frames` length. A track yielding several runs gets `#k` suffixes on
/// all but the first.
pub fn filter_eligible(tracks: &[Track], min_frames: usize, region: &Region) -> Vec<Track> {
    let mut out = Vec::new();
    for track in tracks {
        let mut runs: Vec<Vec<TrackFrame>> = Vec::new();
        let mut current: Vec<TrackFrame> = Vec::new();
        for f in &track.frames {
            let contiguous = current.last().is_some_and(|p| p.frame + 1 == f.frame);
            let inside = region.contains([f.state.x, f.state.y]);
            if inside && (current.is_empty() || contiguous) {
                current.push(*f);
            } else {
                if current.len() >= min_frames {
                    runs.push(std::mem::take(&mut current));
                } else {
                    current.clear();
                }
                if inside {
                    current.push(*f);
                }
            }
        }
        if current.len() >= min_frames {
            runs.push(current);
        }
        for (k, frames) in runs.into_iter().enumerate() {
            let id = if k == 0 {
                track.id.clone()
            } else {
                format!("{}#{k}", track.id)
            };
            out.push(Track { id, frames });
        }
    }
    out
}

/// Assigns an approach arm and maneuver from the crossing of the
/// intersection core: approach from the dominant axis of the entry position
/// relative to the core center, maneuver from the wrapped heading change
/// between entry and exit.
pub fn classify_movement(track: &Track, core: &Region) -> Result<Movement> {
    let entry_idx = track
        .frames
        .iter()
        .position(|f| core.contains([f.state.x, f.state.y]))
        .ok_or_else(|| Error::Unclassifiable(track.id.clone()))?;
    let exit_idx = track.frames[entry_idx..]
        .iter()
        .position(|f| !core.contains([f.state.x, f.state.y]))
        .map(|k| entry_idx + k)
        .ok_or_else(|| Error::Unclassifiable(track.id.clone()))?;
    let entry = &track.frames[entry_idx].state;
    let exit = &track.frames[exit_idx].state;
    let center = core.center();
    let dx = entry.x - center[0];
    let dy = entry.y - center[1];
    let approach = if dx.abs() >= dy.abs() {
        if dx > 0.0 {
            Approach::E
        } else {
            Approach::W
        }
    } else if dy > 0.0 {
        Approach::N
    } else {
        Approach::S
    };
    let dtheta = crate::dynamics::wrap_angle(exit.theta - entry.theta);
    let maneuver = if dtheta >= TURN_THRESHOLD {
        Maneuver::Left
    } else if dtheta <= -TURN_THRESHOLD {
        Maneuver::Right
    } else {
        Maneuver::Through
    };
    Ok(Movement::new(approach, maneuver))
}

/// Builds one scene per turning reference track. Members are all tracks
/// whose movement conflicts with the reference and whose frame range
/// overlaps the reference's by at least `min_window` frames; the stored
/// window is the common intersection over all members.
pub fn extract_scenes(classified: &[(Track, Movement)], min_window: usize) -> Vec<SceneSpec> {
    let mut scenes = Vec::new();
    for (reference, movement) in classified {
        if movement.maneuver == Maneuver::Through {
            continue;
        }
        let mut members = vec![reference.id.clone()];
        let mut lo = reference.first_frame();
        let mut hi = reference.last_frame();
        for (other, other_mv) in classified {
            if other.id == reference.id || !conflicts(*movement, *other_mv) {
                continue;
            }
            let start = reference.first_frame().max(other.first_frame());
            let end = reference.last_frame().min(other.last_frame());
            if end - start + 1 >= min_window as i64 {
                members.push(other.id.clone());
                lo = lo.max(other.first_frame());
                hi = hi.min(other.last_frame());
            }
        }
        if members.len() >= 2 && hi - lo + 1 >= min_window as i64 {
            scenes.push(SceneSpec {
                reference_track: reference.id.clone(),
                member_tracks: members,
                window: (lo, hi),
            });
        }
    }
    scenes
}

/// Cuts a planning instance out of a scene at frame `t0`: per-member
/// history over `[t0 - history_len, t0)`, initial state at `t0`, goal and
/// ground-truth future over `(t0, t0 + horizon]`.
pub fn scene_to_scenario(
    scene: &SceneSpec,
    tracks: &[Track],
    t0: i64,
    history_len: usize,
    horizon: usize,
) -> Result<Scenario> {
    let mut initial_states = Vec::new();
    let mut goals = Vec::new();
    let mut histories = Vec::new();
    let mut ground_truth = Vec::new();
    let mut bbox: Option<([f64; 2], [f64; 2])> = None;
    for id in &scene.member_tracks {
        let track = tracks
            .iter()
            .find(|t| &t.id == id)
            .ok_or_else(|| Error::InvalidInput(format!("unknown member track {id}")))?;
        let frame_state = |f: i64| -> Result<VehicleState> {
            track
                .frame_at(f)
                .map(|fr| fr.state)
                .ok_or_else(|| Error::InsufficientFrames(format!("track {id} missing frame {f}")))
        };
        let history: Vec<VehicleState> = (t0 - history_len as i64..t0)
            .map(frame_state)
            .collect::<Result<_>>()?;
        let initial = frame_state(t0)?;
        let goal = GoalState::from_state(&frame_state(t0 + horizon as i64)?);
        let future: Vec<[f64; 2]> = (t0 + 1..=t0 + horizon as i64)
            .map(|f| frame_state(f).map(|s| [s.x, s.y]))
            .collect::<Result<_>>()?;
        for p in history
            .iter()
            .map(|s| [s.x, s.y])
            .chain(future.iter().copied())
            .chain([[initial.x, initial.y]])
        {
            let (min, max) = bbox.get_or_insert((p, p));
            min[0] = min[0].min(p[0]);
            min[1] = min[1].min(p[1]);
            max[0] = max[0].max(p[0]);
            max[1] = max[1].max(p[1]);
        }
        initial_states.push(initial);
        goals.push(goal);
        histories.push(history);
        ground_truth.push(future);
    }
    let (min, max) = bbox.ok_or_else(|| Error::Empty("scene has no members".into()))?;
    let scene_diag = ((max[0] - min[0]).powi(2) + (max[1] - min[1]).powi(2))
        .sqrt()
        .max(1.0);
    let scenario = Scenario {
        scene_id: format!("{}@{t0}", scene.reference_track),
        initial_states,
        goals: Some(goals),
        histories,
        dt: 0.1,
        horizon,
        a_max: DEFAULT_A_MAX,
        scene_diag,
        ground_truth: Some(ground_truth),
        agent_weights: None,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Deterministic 70/30 scene split by hashed id; true means training.
pub fn is_training_scene(scene_id: &str) -> bool {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in scene_id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h % 10 < 7
}

/// Synthetic generator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n_agents: usize,
    pub history_len: usize,
    pub horizon: usize,
    pub dt: f64,
    /// Minimum pairwise reference-path clearance enforced on the generated
    /// constant-speed ground truth.
    pub min_clearance: f64,
    pub a_max: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_agents: 2,
            history_len: 10,
            horizon: 10,
            dt: 0.1,
            min_clearance: 8.0,
            a_max: DEFAULT_A_MAX,
        }
    }
}

/// Reference centerline for a movement: straight for through traffic, an
/// L-shape through the lane-intersection corner for turns.
pub(crate) fn route_polyline(approach: Approach, maneuver: Maneuver) -> Vec<[f64; 2]> {
    let h_in = approach.heading();
    let h_out = match maneuver {
        Maneuver::Through => h_in,
        // counterclockwise quarter turn
        Maneuver::Left => [-h_in[1], h_in[0]],
        Maneuver::Right => [h_in[1], -h_in[0]],
    };
    // lane centerline to the right of the road axis
    let off = |h: [f64; 2]| [h[1] * LANE_OFFSET, -h[0] * LANE_OFFSET];
    let o_in = off(h_in);
    let o_out = off(h_out);
    let start = [o_in[0] - ARM_LENGTH * h_in[0], o_in[1] - ARM_LENGTH * h_in[1]];
    let end = [
        o_out[0] + ARM_LENGTH * h_out[0],
        o_out[1] + ARM_LENGTH * h_out[1],
    ];
    if maneuver == Maneuver::Through {
        vec![start, end]
    } else {
        // corner: intersection of the entry and exit lane lines
        let corner = [
            o_in[0] + h_in[0].abs() * o_out[0],
            o_in[1] + h_in[1].abs() * o_out[1],
        ];
        vec![start, corner, end]
    }
}

/// Position and unit tangent at arc length `s`, extrapolating linearly
/// beyond either end of the polyline.
pub(crate) fn point_at(poly: &[[f64; 2]], s: f64) -> ([f64; 2], [f64; 2]) {
    debug_assert!(poly.len() >= 2);
    let n_segments = poly.len() - 1;
    let mut cum = 0.0;
    for (k, w) in poly.windows(2).enumerate() {
        let dx = w[1][0] - w[0][0];
        let dy = w[1][1] - w[0][1];
        let len = (dx * dx + dy * dy).sqrt();
        let tangent = [dx / len, dy / len];
        let local = s - cum;
        if local <= len || k == n_segments - 1 {
            return (
                [w[0][0] + tangent[0] * local, w[0][1] + tangent[1] * local],
                tangent,
            );
        }
        cum += len;
    }
    unreachable!("polyline traversal always returns");
}

fn truncated_speed(rng: &mut ChaCha8Rng) -> f64 {
    let dist = Normal::new(SPEED_MEAN, SPEED_STD).expect("valid parameters");
    loop {
        let v = dist.sample(rng);
        if (SPEED_MIN..=SPEED_MAX).contains(&v) {
            return v;
        }
    }
}

struct SynthAgent {
    poly: Vec<[f64; 2]>,
    speed: f64,
    /// Arc length at the planning instant.
    s0: f64,
}

impl SynthAgent {
    fn position(&self, t_offset: f64) -> [f64; 2] {
        point_at(&self.poly, self.s0 + self.speed * t_offset).0
    }

    fn state(&self, t_offset: f64) -> VehicleState {
        let (p, tan) = point_at(&self.poly, self.s0 + self.speed * t_offset);
        VehicleState::new(
            p[0],
            p[1],
            self.speed * tan[0],
            self.speed * tan[1],
            tan[1].atan2(tan[0]),
        )
    }
}

/// Generates a four-arm intersection scenario, deterministic per seed.
///
/// Approaches are drawn from a shuffled rotation of the four arms, speeds
/// from the truncated normal above, and each agent is staged so its
/// constant-speed reference path reaches the arm center during the plan.
/// Later agents are pushed back along their entry until every ground-truth
/// pair keeps at least `min_clearance` meters at every step, so the
/// reference futures are collision-free by construction.
pub fn synth_scenario(cfg: &GeneratorConfig, seed: u64) -> Result<Scenario> {
    if cfg.n_agents == 0 || cfg.n_agents > 6 {
        return Err(Error::InvalidInput(format!(
            "agent count {} outside 1..=6",
            cfg.n_agents
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut arms = Approach::ALL.to_vec();
    arms.shuffle(&mut rng);
    let span = (cfg.history_len + cfg.horizon) as f64 * cfg.dt;

    let mut agents: Vec<SynthAgent> = Vec::new();
    for i in 0..cfg.n_agents {
        let approach = arms[i % arms.len()];
        let u: f64 = rng.random_range(0.0..1.0);
        let maneuver = if u < 0.5 {
            Maneuver::Through
        } else if u < 0.75 {
            Maneuver::Left
        } else {
            Maneuver::Right
        };
        let speed = truncated_speed(&mut rng);
        let d0 = (speed * span * rng.random_range(0.4..0.9)).max(3.0);
        agents.push(SynthAgent {
            poly: route_polyline(approach, maneuver),
            speed,
            s0: ARM_LENGTH - d0,
        });
    }

    // stagger until all ground-truth pairs keep clearance at every step
    let steps: Vec<f64> = (0..=cfg.horizon).map(|t| t as f64 * cfg.dt).collect();
    for _ in 0..50 {
        let mut adjusted = false;
        for i in 0..agents.len() {
            for j in (i + 1)..agents.len() {
                let min_d = steps
                    .iter()
                    .map(|&t| {
                        let a = agents[i].position(t);
                        let b = agents[j].position(t);
                        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
                    })
                    .fold(f64::INFINITY, f64::min);
                if min_d < cfg.min_clearance {
                    agents[j].s0 -= 1.0;
                    adjusted = true;
                }
            }
        }
        if !adjusted {
            break;
        }
    }

    let mut initial_states = Vec::new();
    let mut goals = Vec::new();
    let mut histories = Vec::new();
    let mut ground_truth = Vec::new();
    let mut bbox: Option<([f64; 2], [f64; 2])> = None;
    for agent in &agents {
        let history: Vec<VehicleState> = (0..cfg.history_len)
            .map(|j| agent.state(-((cfg.history_len - j) as f64) * cfg.dt))
            .collect();
        let initial = agent.state(0.0);
        let goal = GoalState::from_state(&agent.state(cfg.horizon as f64 * cfg.dt));
        let future: Vec<[f64; 2]> = (1..=cfg.horizon)
            .map(|t| agent.position(t as f64 * cfg.dt))
            .collect();
        for p in history
            .iter()
            .map(|s| [s.x, s.y])
            .chain(future.iter().copied())
            .chain([[initial.x, initial.y], goal.position()])
        {
            let (min, max) = bbox.get_or_insert((p, p));
            min[0] = min[0].min(p[0]);
            min[1] = min[1].min(p[1]);
            max[0] = max[0].max(p[0]);
            max[1] = max[1].max(p[1]);
        }
        initial_states.push(initial);
        goals.push(goal);
        histories.push(history);
        ground_truth.push(future);
    }
    let (min, max) = bbox.expect("at least one agent");
    let scene_diag = ((max[0] - min[0]).powi(2) + (max[1] - min[1]).powi(2))
        .sqrt()
        .max(1.0);
    let scenario = Scenario {
        scene_id: format!("synth-{seed}"),
        initial_states,
        goals: Some(goals),
        histories,
        dt: cfg.dt,
        horizon: cfg.horizon,
        a_max: cfg.a_max,
        scene_diag,
        ground_truth: Some(ground_truth),
        agent_weights: None,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Where a scenario artifact came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// On-disk scenario artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub scenario: Scenario,
}

impl ScenarioFile {
    pub fn new(scenario: Scenario, provenance: Provenance) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            provenance,
            scenario,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path)?;
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        let loaded: ScenarioFile = serde_json::from_reader(file)?;
        if loaded.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported schema version {}",
                loaded.schema_version
            )));
        }
        loaded.scenario.validate()?;
        Ok(loaded)
    }
}
