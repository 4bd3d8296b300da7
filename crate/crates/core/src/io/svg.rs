//! Static SVG 1.1 charts for a finished run.

use std::fmt::Write as _;

use crate::geometry::{Obstacle, Vec2};
use crate::metrics::MetricsReport;
use crate::simulator::Trajectory;

const PALETTE: [&str; 8] = [
    "#d62728", "#2ca02c", "#1f77b4", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Doc {
    body: String,
    width: f64,
    height: f64,
}

impl Doc {
    fn new(width: f64, height: f64) -> Self {
        Self {
            body: String::new(),
            width,
            height,
        }
    }

    fn push(&mut self, element: &str) {
        self.body.push_str("  ");
        self.body.push_str(element);
        self.body.push('\n');
    }

    fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, content: &str) {
        self.push(&format!(
            r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="{size}" text-anchor="{anchor}">{}</text>"#,
            escape(content)
        ));
    }

    fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n\
             <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             {body}</svg>\n",
            w = self.width,
            h = self.height,
            body = self.body
        )
    }
}

fn polyline(points: impl Iterator<Item = (f64, f64)>, stroke: &str, width: f64, extra: &str) -> String {
    let mut pts = String::new();
    for (x, y) in points {
        let _ = write!(pts, "{x:.2},{y:.2} ");
    }
    format!(
        r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"{extra}/>"#,
        pts.trim_end()
    )
}

/// Agent and target paths over the arena, with obstacles.
pub fn render_trajectory(trajectory: &Trajectory, arena_side: f64, obstacles: &[Obstacle]) -> String {
    let size = 640.0;
    let margin = 20.0;
    let scale = (size - 2.0 * margin) / arena_side;
    let map = |p: Vec2| (margin + p.x * scale, size - margin - p.y * scale);
    let mut doc = Doc::new(size, size + 30.0);
    doc.push(&format!(
        r##"<rect x="{margin}" y="{margin}" width="{s:.2}" height="{s:.2}" fill="#fafafa" stroke="#000" stroke-width="2"/>"##,
        s = arena_side * scale
    ));
    for o in obstacles {
        match o {
            Obstacle::Circle { center, radius } => {
                let (cx, cy) = map(*center);
                doc.push(&format!(
                    r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="#888" stroke="#444"/>"##,
                    radius * scale
                ));
            }
            Obstacle::Polygon { vertices } => {
                let pts: Vec<String> = vertices
                    .iter()
                    .map(|&v| {
                        let (x, y) = map(v);
                        format!("{x:.2},{y:.2}")
                    })
                    .collect();
                doc.push(&format!(
                    r##"<polygon points="{}" fill="#888" stroke="#444"/>"##,
                    pts.join(" ")
                ));
            }
        }
    }

    let last = trajectory.frames.last();
    for agent in 0..trajectory.agent_count() {
        let assigned = last.map_or(0, |f| f.agents[agent].assigned_target);
        let path = trajectory.frames.iter().map(|f| map(f.agents[agent].pos));
        doc.push(&polyline(path, color(assigned), 0.8, r#" stroke-opacity="0.6""#));
        if let Some(f) = last {
            let (x, y) = map(f.agents[agent].pos);
            doc.push(&format!(
                r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{}"/>"#,
                color(assigned)
            ));
        }
    }
    for target in 0..trajectory.target_count() {
        let path = trajectory.frames.iter().map(|f| map(f.targets[target].pos));
        doc.push(&polyline(path, "#000", 1.5, r#" stroke-dasharray="4 3""#));
        if let Some(f) = last {
            let (x, y) = map(f.targets[target].pos);
            doc.push(&format!(
                r##"<rect x="{:.2}" y="{:.2}" width="8" height="8" fill="{}" stroke="#000"/>"##,
                x - 4.0,
                y - 4.0,
                color(target)
            ));
        }
    }
    doc.text(
        size / 2.0,
        size + 20.0,
        14.0,
        "middle",
        &format!(
            "{} agents, {} targets, {} steps",
            trajectory.agent_count(),
            trajectory.target_count(),
            trajectory.len().saturating_sub(1)
        ),
    );
    doc.finish()
}

struct Series {
    label: String,
    color: &'static str,
    points: Vec<(f64, f64)>,
}

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if (hi - lo).abs() < 1e-12 {
        return (lo - 1.0, hi + 1.0);
    }
    (lo, hi)
}

fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series], y_fixed: Option<(f64, f64)>) -> String {
    let (w, h) = (800.0, 420.0);
    let (left, right, top, bottom) = (70.0, 150.0, 40.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;

    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let (x0, x1) = nice_range(x0, x1);
    let (y0, y1) = y_fixed.unwrap_or_else(|| nice_range(y0.min(0.0), y1));
    let map = |x: f64, y: f64| {
        (
            left + (x - x0) / (x1 - x0) * pw,
            top + ph - (y - y0) / (y1 - y0) * ph,
        )
    };

    let mut doc = Doc::new(w, h);
    doc.push(&format!(
        r##"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="#fff" stroke="#000"/>"##
    ));
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (gx, _) = map(x0 + f * (x1 - x0), y0);
        let (_, gy) = map(x0, y0 + f * (y1 - y0));
        doc.push(&format!(
            r##"<line x1="{left}" y1="{gy:.2}" x2="{:.2}" y2="{gy:.2}" stroke="#ddd"/>"##,
            left + pw
        ));
        doc.text(left - 6.0, gy + 4.0, 11.0, "end", &format!("{:.2}", y0 + f * (y1 - y0)));
        doc.text(gx, top + ph + 16.0, 11.0, "middle", &format!("{:.0}", x0 + f * (x1 - x0)));
    }
    for s in series {
        let pts = s.points.iter().map(|&(x, y)| map(x, y));
        doc.push(&polyline(pts, s.color, 1.2, ""));
    }
    for (i, s) in series.iter().enumerate().take(16) {
        let y = top + 10.0 + i as f64 * 16.0;
        doc.push(&format!(
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="3"/>"#,
            left + pw + 10.0,
            left + pw + 30.0,
            s.color
        ));
        doc.text(left + pw + 35.0, y + 4.0, 11.0, "start", &s.label);
    }
    doc.text(w / 2.0 - 40.0, 24.0, 15.0, "middle", title);
    doc.text(left + pw / 2.0, h - 12.0, 12.0, "middle", x_label);
    doc.push(&format!(
        r#"<text x="16" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(y_label)
    ));
    doc.finish()
}

pub fn render_agents_per_target(report: &MetricsReport) -> String {
    let series: Vec<Series> = (0..report.target_count)
        .map(|k| Series {
            label: format!("target {k}"),
            color: color(k),
            points: report
                .sample_steps
                .iter()
                .zip(&report.agents_per_target)
                .map(|(&s, c)| (s as f64, c[k] as f64))
                .collect(),
        })
        .collect();
    line_chart("Agents assigned per target", "step", "agents", &series, None)
}

pub fn render_min_distance(report: &MetricsReport) -> String {
    let series = vec![Series {
        label: "min distance".into(),
        color: color(2),
        points: report
            .sample_steps
            .iter()
            .zip(&report.min_pairwise_distance)
            .filter_map(|(&s, d)| d.map(|d| (s as f64, d)))
            .collect(),
    }];
    line_chart("Minimum pairwise agent distance", "step", "meters", &series, None)
}

pub fn render_velocity_correlation(report: &MetricsReport) -> String {
    let steps: Vec<f64> = report.sample_steps.iter().filter(|&&s| s >= 1).map(|&s| s as f64).collect();
    let series: Vec<Series> = report
        .velocity_correlation
        .iter()
        .enumerate()
        .map(|(i, values)| Series {
            label: format!("agent {i}"),
            color: color(i),
            points: steps.iter().copied().zip(values.iter().copied()).collect(),
        })
        .collect();
    line_chart("Velocity correlation", "step", "correlation", &series, Some((-1.0, 1.0)))
}

/// Mean agents per sector over all samples, grouped by target.
pub fn render_sector_occupancy(report: &MetricsReport) -> String {
    let (w, h) = (800.0, 420.0);
    let (left, top, bottom) = (70.0, 40.0, 60.0);
    let pw = w - left - 30.0;
    let ph = h - top - bottom;
    let samples = report.sector_occupancy.len().max(1) as f64;
    let sectors = report.sector_count.max(1);
    let means: Vec<Vec<f64>> = (0..report.target_count)
        .map(|k| {
            (0..sectors)
                .map(|s| {
                    report
                        .sector_occupancy
                        .iter()
                        .map(|sample| sample.get(k).and_then(|b| b.get(s)).copied().unwrap_or(0) as f64)
                        .sum::<f64>()
                        / samples
                })
                .collect()
        })
        .collect();
    let ymax = means.iter().flatten().fold(0.0f64, |a, &b| a.max(b)).max(1.0);

    let mut doc = Doc::new(w, h);
    doc.push(&format!(
        r##"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="#fff" stroke="#000"/>"##
    ));
    let groups = report.target_count.max(1) as f64;
    let group_w = pw / groups;
    let bar_w = group_w * 0.8 / sectors as f64;
    for (k, bins) in means.iter().enumerate() {
        let gx = left + k as f64 * group_w + group_w * 0.1;
        for (s, &m) in bins.iter().enumerate() {
            let bh = m / ymax * ph;
            let x = gx + s as f64 * bar_w;
            doc.push(&format!(
                r##"<rect x="{x:.2}" y="{:.2}" width="{:.2}" height="{bh:.2}" fill="{}" stroke="#333"/>"##,
                top + ph - bh,
                bar_w * 0.9,
                color(k)
            ));
            doc.text(x + bar_w * 0.45, top + ph + 14.0, 10.0, "middle", &s.to_string());
        }
        doc.text(gx + group_w * 0.4, top + ph + 32.0, 12.0, "middle", &format!("target {k}"));
    }
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let y = top + ph - f * ph;
        doc.text(left - 6.0, y + 4.0, 11.0, "end", &format!("{:.2}", f * ymax));
    }
    doc.text(
        w / 2.0,
        24.0,
        15.0,
        "middle",
        &format!("Mean agents per sector (radius {} m)", report.sector_radius),
    );
    doc.text(left + pw / 2.0, h - 8.0, 12.0, "middle", "sector");
    doc.finish()
}

/// All five charts as `(file name, document)` pairs. Fails on an empty trajectory.
pub fn render_all(
    trajectory: &Trajectory,
    report: &MetricsReport,
    arena_side: f64,
    obstacles: &[Obstacle],
) -> Result<Vec<(&'static str, String)>, String> {
    if trajectory.is_empty() {
        return Err("trajectory has no frames".into());
    }
    Ok(vec![
        ("trajectory.svg", render_trajectory(trajectory, arena_side, obstacles)),
        ("agents_per_target.svg", render_agents_per_target(report)),
        ("sector_occupancy.svg", render_sector_occupancy(report)),
        ("min_distance.svg", render_min_distance(report)),
        ("velocity_correlation.svg", render_velocity_correlation(report)),
    ])
}
