//! Dependency-free SVG rendering of a solved scene: observed history
//! (light dashed), ground-truth future (dark dashed), solved plan (solid),
//! goal crosses, and an arrowhead at each plan endpoint.

use pdg_core::dynamics::{rollout, JointProfile};
use pdg_core::scenario::Scenario;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];
const CANVAS: f64 = 640.0;
const MARGIN: f64 = 40.0;

struct Mapper {
    scale: f64,
    min_x: f64,
    max_y: f64,
}

impl Mapper {
    fn fit(points: &[[f64; 2]]) -> Self {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in points {
            for a in 0..2 {
                min[a] = min[a].min(p[a]);
                max[a] = max[a].max(p[a]);
            }
        }
        let span = (max[0] - min[0]).max(max[1] - min[1]).max(1e-6);
        Self {
            scale: (CANVAS - 2.0 * MARGIN) / span,
            min_x: min[0],
            max_y: max[1],
        }
    }

    // world y grows upward, SVG y grows downward
    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        (
            MARGIN + (p[0] - self.min_x) * self.scale,
            MARGIN + (self.max_y - p[1]) * self.scale,
        )
    }
}

fn polyline(out: &mut String, m: &Mapper, pts: &[[f64; 2]], style: &str) {
    if pts.is_empty() {
        return;
    }
    out.push_str("<polyline fill=\"none\" points=\"");
    for (i, &p) in pts.iter().enumerate() {
        let (x, y) = m.map(p);
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&format!("{x:.2},{y:.2}"));
    }
    out.push_str(&format!("\" {style}/>\n"));
}

fn cross(out: &mut String, m: &Mapper, p: [f64; 2], color: &str) {
    let (x, y) = m.map(p);
    let r = 6.0;
    out.push_str(&format!(
        "<path d=\"M {x0:.2} {y0:.2} L {x1:.2} {y1:.2} M {x0:.2} {y1:.2} L {x1:.2} {y0:.2}\" \
         stroke=\"{color}\" stroke-width=\"2\"/>\n",
        x0 = x - r,
        y0 = y - r,
        x1 = x + r,
        y1 = y + r,
    ));
}

fn arrowhead(out: &mut String, m: &Mapper, from: [f64; 2], to: [f64; 2], color: &str) {
    let (x0, y0) = m.map(from);
    let (x1, y1) = m.map(to);
    let (dx, dy) = (x1 - x0, y1 - y0);
    let n = (dx * dx + dy * dy).sqrt().max(1e-9);
    let (ux, uy) = (dx / n, dy / n);
    let size = 8.0;
    let base_x = x1 - size * ux;
    let base_y = y1 - size * uy;
    // perpendicular half-width
    let (px, py) = (-uy * size * 0.5, ux * size * 0.5);
    out.push_str(&format!(
        "<polygon points=\"{x1:.2},{y1:.2} {ax:.2},{ay:.2} {bx:.2},{by:.2}\" fill=\"{color}\"/>\n",
        ax = base_x + px,
        ay = base_y + py,
        bx = base_x - px,
        by = base_y - py,
    ));
}

pub fn render_scene(scenario: &Scenario, profile: &JointProfile) -> pdg_core::Result<String> {
    let mut plans: Vec<Vec<[f64; 2]>> = Vec::new();
    for (state, seq) in scenario.initial_states.iter().zip(&profile.sequences) {
        let mut pts = vec![[state.x, state.y]];
        pts.extend(rollout(state, seq)?.future_positions());
        plans.push(pts);
    }
    let mut all: Vec<[f64; 2]> = plans.iter().flatten().copied().collect();
    for hist in &scenario.histories {
        all.extend(hist.iter().map(|s| [s.x, s.y]));
    }
    if let Some(gt) = &scenario.ground_truth {
        all.extend(gt.iter().flatten().copied());
    }
    if let Some(goals) = &scenario.goals {
        all.extend(goals.iter().map(|g| g.position()));
    }
    let m = Mapper::fit(&all);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{c}\" height=\"{c}\" \
         viewBox=\"0 0 {c} {c}\">\n",
        c = CANVAS
    ));
    out.push_str(&format!(
        "<rect width=\"{c}\" height=\"{c}\" fill=\"white\"/>\n",
        c = CANVAS
    ));
    for (i, plan) in plans.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let hist: Vec<[f64; 2]> = scenario.histories[i].iter().map(|s| [s.x, s.y]).collect();
        polyline(
            &mut out,
            &m,
            &hist,
            "stroke=\"#bbbbbb\" stroke-width=\"1.5\" stroke-dasharray=\"4 3\" class=\"history\"",
        );
        if let Some(gt) = &scenario.ground_truth {
            polyline(
                &mut out,
                &m,
                &gt[i],
                "stroke=\"#444444\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\" class=\"truth\"",
            );
        }
        polyline(
            &mut out,
            &m,
            plan,
            &format!("stroke=\"{color}\" stroke-width=\"2.5\" class=\"plan\""),
        );
        if let Some(goals) = &scenario.goals {
            cross(&mut out, &m, goals[i].position(), color);
        }
        if plan.len() >= 2 {
            arrowhead(&mut out, &m, plan[plan.len() - 2], plan[plan.len() - 1], color);
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}
