//! Static SVG plots of a run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::ScenarioConfig;
use super::sim::{Event, EventKind, TraceRecord};
use super::HarnessError;
use crate::coverage::{voronoi_partition, MissionSpace};
use crate::energy::Mode;
use crate::rigidity::Vec2;

pub const TRAJECTORY_SVG: &str = "trajectories.svg";
pub const SOC_SVG: &str = "soc.svg";
pub const COVERAGE_SVG: &str = "coverage.svg";

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Scene information that is not in the trace itself.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotContext {
    pub space: MissionSpace,
    pub base: Option<(Vec2, f64)>,
}

impl PlotContext {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            space: cfg.space.clone(),
            base: Some((cfg.base, cfg.base_radius)),
        }
    }

    /// Bounding box of the trace, padded, with no base marker.
    pub fn from_traces(traces: &[TraceRecord]) -> Result<Self, HarnessError> {
        let (mut lo, mut hi) = (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY));
        for t in traces {
            lo = lo.inf(&Vec2::new(t.x, t.y));
            hi = hi.sup(&Vec2::new(t.x, t.y));
        }
        if !lo.x.is_finite() {
            return Err(HarnessError::Plot("empty trace".into()));
        }
        let pad = Vec2::repeat(0.05 * (hi - lo).norm().max(1.0));
        let space = MissionSpace::rectangle(lo - pad, hi + pad)
            .map_err(|e| HarnessError::Plot(e.to_string()))?;
        Ok(Self { space, base: None })
    }
}

fn color(robot: usize) -> &'static str {
    PALETTE[robot % PALETTE.len()]
}

/// Affine map from data coordinates to the plot area.
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }

    fn point(&self, x: f64, y: f64) -> String {
        format!("{:.2},{:.2}", self.px(x), self.py(y))
    }

    fn axes(&self, svg: &mut String, xlabel: &str, ylabel: &str, yticks: &[f64]) {
        let (l, r, b, t) = (
            self.px(self.x0),
            self.px(self.x1),
            self.py(self.y0),
            self.py(self.y1),
        );
        let _ = writeln!(
            svg,
            r##"<rect x="{l:.2}" y="{t:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#000"/>"##,
            r - l,
            b - t
        );
        for &y in yticks {
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{y}</text>"#,
                l - 6.0,
                self.py(y) + 4.0
            );
        }
        for x in [self.x0, self.x1] {
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{x}</text>"#,
                self.px(x),
                b + 16.0
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{xlabel}</text>"#,
            (l + r) / 2.0,
            HEIGHT - 10.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="14" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">{ylabel}</text>"#,
            (t + b) / 2.0,
            (t + b) / 2.0
        );
    }
}

fn open(title: &str, attrs: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\"{attrs}>\n<title>{title}</title>\n<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n"
    )
}

fn polyline(svg: &mut String, points: &[String], stroke: &str, extra: &str) {
    if points.is_empty() {
        return;
    }
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="{stroke}"{extra}/>"#,
        points.join(" ")
    );
}

fn by_robot(traces: &[TraceRecord]) -> BTreeMap<usize, Vec<&TraceRecord>> {
    let mut out: BTreeMap<usize, Vec<&TraceRecord>> = BTreeMap::new();
    for t in traces {
        out.entry(t.robot).or_default().push(t);
    }
    out
}

/// Paths, final Voronoi cells of the covering robots, base marker.
pub fn trajectory_svg(traces: &[TraceRecord], ctx: &PlotContext) -> String {
    let (lo, hi) = ctx.space.bounding_box();
    // Equal scaling on both axes.
    let span = (hi - lo).max();
    let frame = Frame {
        x0: lo.x,
        x1: lo.x + span * (WIDTH - 2.0 * MARGIN) / (HEIGHT - 2.0 * MARGIN),
        y0: lo.y,
        y1: lo.y + span,
    };
    let mut svg = open("Robot trajectories", "");
    let outline: Vec<String> = ctx
        .space
        .vertices()
        .iter()
        .map(|v| frame.point(v.x, v.y))
        .collect();
    let _ = writeln!(
        svg,
        r##"<polygon class="space" points="{}" fill="#fafafa" stroke="#000"/>"##,
        outline.join(" ")
    );

    let last_k = traces.iter().map(|t| t.k).max().unwrap_or(0);
    let sites: Vec<(usize, Vec2)> = traces
        .iter()
        .filter(|t| t.k == last_k && t.mode == Mode::Coverage)
        .map(|t| (t.robot, Vec2::new(t.x, t.y)))
        .collect();
    if let Ok(part) = voronoi_partition(&sites, &ctx.space) {
        for c in &part.cells {
            let pts: Vec<String> = c.polygon.iter().map(|v| frame.point(v.x, v.y)).collect();
            let _ = writeln!(
                svg,
                r##"<polygon class="cell" points="{}" fill="none" stroke="#999" stroke-dasharray="4 3"/>"##,
                pts.join(" ")
            );
        }
    }

    if let Some((b, r)) = ctx.base {
        let _ = writeln!(
            svg,
            r##"<circle class="base" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="#ffe08a" stroke="#b8860b"/>"##,
            frame.px(b.x),
            frame.py(b.y),
            (frame.px(b.x + r) - frame.px(b.x)).max(3.0)
        );
    }

    for (robot, rows) in by_robot(traces) {
        let pts: Vec<String> = rows.iter().map(|t| frame.point(t.x, t.y)).collect();
        polyline(&mut svg, &pts, color(robot), r#" stroke-width="1.2""#);
        if let Some(t) = rows.last() {
            let _ = writeln!(
                svg,
                r#"<circle class="robot" cx="{:.2}" cy="{:.2}" r="4" fill="{}"/>"#,
                frame.px(t.x),
                frame.py(t.y),
                color(robot)
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// SOC against time with level bands and departure markers.
pub fn soc_svg(traces: &[TraceRecord], events: &[Event]) -> String {
    let k_max = traces.iter().map(|t| t.k).max().unwrap_or(0).max(1) as f64;
    let frame = Frame {
        x0: 0.0,
        x1: k_max,
        y0: 0.0,
        y1: 1.0,
    };
    let mut svg = open("State of charge", r#" data-ymin="0" data-ymax="1""#);
    let bands = [
        (0.0, 0.25, "#fbe3e3"),
        (0.25, 0.5, "#fdf0dc"),
        (0.5, 0.75, "#f3f8dc"),
        (0.75, 1.0, "#e3f5e3"),
    ];
    for (lo, hi, fill) in bands {
        let _ = writeln!(
            svg,
            r#"<rect class="band" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            frame.px(0.0),
            frame.py(hi),
            frame.px(k_max) - frame.px(0.0),
            frame.py(lo) - frame.py(hi)
        );
    }
    for level in [0.25, 0.5, 0.75] {
        let _ = writeln!(
            svg,
            r##"<line class="level" x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#bbb"/>"##,
            frame.px(0.0),
            frame.px(k_max),
            y = frame.py(level)
        );
    }
    for e in events {
        if let EventKind::Departure { robot, .. } = e.kind {
            let x = frame.px(e.k as f64);
            let _ = writeln!(
                svg,
                r#"<line class="departure" data-k="{}" data-robot="{robot}" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{}" stroke-dasharray="3 3"/>"#,
                e.k,
                frame.py(0.0),
                frame.py(1.0),
                color(robot)
            );
        }
    }
    for (robot, rows) in by_robot(traces) {
        let pts: Vec<String> = rows
            .iter()
            .map(|t| frame.point(t.k as f64, t.soc.clamp(0.0, 1.0)))
            .collect();
        polyline(&mut svg, &pts, color(robot), "");
    }
    frame.axes(&mut svg, "step k", "SOC", &[0.0, 0.25, 0.5, 0.75, 1.0]);
    svg.push_str("</svg>\n");
    svg
}

/// Total locational cost of the covering robots at each step.
pub fn coverage_series(traces: &[TraceRecord]) -> Vec<(usize, f64)> {
    let mut per_k: BTreeMap<usize, f64> = BTreeMap::new();
    for t in traces {
        if let Some(c) = t.cell_cost {
            *per_k.entry(t.k).or_default() += c;
        }
    }
    per_k.into_iter().collect()
}

pub fn coverage_svg(traces: &[TraceRecord]) -> String {
    let series = coverage_series(traces);
    let k_max = series.last().map_or(1, |s| s.0).max(1) as f64;
    let h_max = series.iter().map(|s| s.1).fold(0.0, f64::max);
    let h_max = if h_max > 0.0 { h_max } else { 1.0 };
    let frame = Frame {
        x0: 0.0,
        x1: k_max,
        y0: 0.0,
        y1: h_max,
    };
    let mut svg = open("Coverage cost", "");
    let pts: Vec<String> = series
        .iter()
        .map(|&(k, h)| frame.point(k as f64, h))
        .collect();
    polyline(&mut svg, &pts, "#1f77b4", r#" stroke-width="1.5""#);
    let ticks = [0.0, h_max / 2.0, h_max].map(|v| (v * 1000.0).round() / 1000.0);
    frame.axes(&mut svg, "step k", "coverage cost", &ticks);
    svg.push_str("</svg>\n");
    svg
}

/// Writes the three plots into `dir`.
pub fn render_plots(
    traces: &[TraceRecord],
    events: &[Event],
    ctx: &PlotContext,
    dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    if traces.is_empty() {
        return Err(HarnessError::Plot("empty trace".into()));
    }
    fs::create_dir_all(dir)?;
    let files = [
        (TRAJECTORY_SVG, trajectory_svg(traces, ctx)),
        (SOC_SVG, soc_svg(traces, events)),
        (COVERAGE_SVG, coverage_svg(traces)),
    ];
    let mut out = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body)?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::EnergyLevel;

    fn toy() -> (Vec<TraceRecord>, Vec<Event>) {
        let mut traces = Vec::new();
        for k in 0..20 {
            for robot in 0..2 {
                let covering = robot == 0 || k < 10;
                traces.push(TraceRecord {
                    k,
                    robot,
                    mode: if covering {
                        Mode::Coverage
                    } else {
                        Mode::ReturnToBase
                    },
                    x: 1.0 + robot as f64 * 3.0 + 0.05 * k as f64,
                    y: 2.0 + 0.02 * k as f64,
                    vx: 0.0,
                    vy: 0.0,
                    soc: 0.9 - 0.03 * k as f64,
                    level: EnergyLevel::ONE,
                    cx: covering.then_some(2.0),
                    cy: covering.then_some(2.0),
                    cell_cost: covering.then_some(1.0 / (k + 1) as f64),
                });
            }
        }
        let events = vec![Event {
            k: 10,
            kind: EventKind::Departure {
                robot: 1,
                level: EnergyLevel::THREE,
                soc: 0.6,
            },
        }];
        (traces, events)
    }

    fn assert_well_formed(text: &str) {
        let mut reader = quick_xml::Reader::from_str(text);
        let mut depth = 0i32;
        loop {
            match reader.read_event().expect("well-formed XML") {
                quick_xml::events::Event::Start(_) => depth += 1,
                quick_xml::events::Event::End(_) => depth -= 1,
                quick_xml::events::Event::Eof => break,
                _ => {}
            }
        }
        assert_eq!(depth, 0);
    }

    #[test]
    fn writes_three_well_formed_svgs() {
        let (traces, events) = toy();
        let dir = tempfile::tempdir().unwrap();
        let ctx = PlotContext::from_config(&ScenarioConfig::default());
        let files = render_plots(&traces, &events, &ctx, dir.path()).unwrap();
        assert_eq!(files.len(), 3);
        for f in files {
            assert_well_formed(&fs::read_to_string(f).unwrap());
        }
        let ctx = PlotContext::from_traces(&traces).unwrap();
        assert_well_formed(&trajectory_svg(&traces, &ctx));
    }

    #[test]
    fn soc_axis_spans_unit_interval() {
        let (traces, events) = toy();
        let svg = soc_svg(&traces, &events);
        assert!(svg.contains(r#"data-ymin="0" data-ymax="1""#));
        assert_eq!(svg.matches(r#"class="band""#).count(), 4);
    }

    #[test]
    fn departures_are_vertical_markers_at_their_step() {
        let (traces, events) = toy();
        let svg = soc_svg(&traces, &events);
        let line = svg
            .lines()
            .find(|l| l.contains(r#"class="departure""#))
            .expect("marker");
        assert!(line.contains(r#"data-k="10""#));
        let attr = |name: &str| -> f64 {
            let start = line.find(&format!(" {name}=\"")).unwrap() + name.len() + 3;
            line[start..].split('"').next().unwrap().parse().unwrap()
        };
        assert_eq!(attr("x1"), attr("x2"));
        let frame = Frame {
            x0: 0.0,
            x1: 19.0,
            y0: 0.0,
            y1: 1.0,
        };
        assert!((attr("x1") - frame.px(10.0)).abs() < 0.01);
    }

    #[test]
    fn coverage_series_sums_covering_rows() {
        let (traces, _) = toy();
        let s = coverage_series(&traces);
        assert_eq!(s.len(), 20);
        assert!((s[0].1 - 2.0).abs() < 1e-12);
        assert!((s[15].1 - 1.0 / 16.0).abs() < 1e-12);
    }
}
