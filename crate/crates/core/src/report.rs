//! SVG and JSON renderings of analysis results.
//!
//! Region colors: schedulable `#4caf50`, deadline miss `#e53935`,
//! infeasible `#bdbdbd`, inconclusive `#ffb300`. Gantt charts draw one lane
//! per processor, task segments in a fixed palette indexed by task order,
//! release arrows above each lane and a red box around a detected miss.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde_json::{json, Value};

use crate::engine::{script_json, TimedTrace, TraceCheck, Verdict, VerdictKind};
use crate::rational::{format_decimal, to_f64, Rational};
use crate::sweep::{Mismatch, PointVerdict, Region};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReportError {
    #[error("DIM_MISMATCH: {0}")]
    DimMismatch(String),
}

impl ReportError {
    pub fn code(&self) -> &'static str {
        "DIM_MISMATCH"
    }
}

pub fn verdict_color(v: PointVerdict) -> &'static str {
    match v {
        PointVerdict::Schedulable => "#4caf50",
        PointVerdict::DeadlineMiss => "#e53935",
        PointVerdict::Infeasible => "#bdbdbd",
        PointVerdict::Inconclusive => "#ffb300",
    }
}

const PALETTE: &[&str] = &["#1e88e5", "#8e24aa", "#00897b", "#f4511e", "#6d4c41", "#3949ab", "#c0ca33", "#d81b60"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn svg_open(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="12">"#
    );
}

/// Values of `name` along the region: the axis values, or the single
/// fixed value.
fn dim_values(r: &Region, name: &str) -> Result<(Option<usize>, Vec<Rational>), ReportError> {
    if let Some(i) = r.grid.axes.iter().position(|a| a.param == name) {
        return Ok((Some(i), r.grid.axes[i].values().collect()));
    }
    match r.fixed.get(name) {
        Some(v) => Ok((None, vec![*v])),
        None => Err(ReportError::DimMismatch(format!("{name} is neither swept nor fixed"))),
    }
}

/// Cartography of a two-parameter region, `x` horizontal and `y` upward.
pub fn region_to_svg(r: &Region, x: &str, y: &str) -> Result<String, ReportError> {
    if x == y {
        return Err(ReportError::DimMismatch(format!("both axes are {x}")));
    }
    if let Some(a) = r.grid.axes.iter().find(|a| a.param != x && a.param != y) {
        return Err(ReportError::DimMismatch(format!("{} is swept but not plotted", a.param)));
    }
    let (xi, xs) = dim_values(r, x)?;
    let (yi, ys) = dim_values(r, y)?;
    let cell = 28.0;
    let (left, top, bottom) = (70.0, 20.0, 50.0);
    let w = left + cell * xs.len() as f64 + 20.0;
    let h = top + cell * ys.len() as f64 + bottom;
    let mut out = String::new();
    svg_open(&mut out, w, h);
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{w:.0}" height="{h:.0}" fill="white"/>"#);
    for p in &r.points {
        let cx = xi.map_or(0, |i| xs.iter().position(|v| *v == p.values[i]).unwrap_or(0));
        let cy = yi.map_or(0, |i| ys.iter().position(|v| *v == p.values[i]).unwrap_or(0));
        let px = left + cell * cx as f64;
        let py = top + cell * (ys.len() - 1 - cy) as f64;
        let coords: Vec<String> = p.values.iter().map(format_decimal).collect();
        let _ = writeln!(
            out,
            r#"<rect x="{px:.1}" y="{py:.1}" width="{cell}" height="{cell}" fill="{}" stroke="white"><title>({}) {}</title></rect>"#,
            verdict_color(p.verdict),
            coords.join(", "),
            p.verdict
        );
    }
    let base = top + cell * ys.len() as f64;
    for (i, v) in xs.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            left + cell * (i as f64 + 0.5),
            base + 15.0,
            format_decimal(v)
        );
    }
    for (i, v) in ys.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            top + cell * (ys.len() - 1 - i) as f64 + cell / 2.0 + 4.0,
            format_decimal(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-weight="bold">{} (time units)</text>"#,
        left + cell * xs.len() as f64 / 2.0,
        base + 38.0,
        esc(x)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.1}" text-anchor="middle" font-weight="bold" transform="rotate(-90 14 {:.1})">{} (time units)</text>"#,
        top + cell * ys.len() as f64 / 2.0,
        top + cell * ys.len() as f64 / 2.0,
        esc(y)
    );
    out.push_str("</svg>\n");
    Ok(out)
}

/// Chronogram of an annotated trace.
pub fn gantt_to_svg(trace: &TimedTrace) -> String {
    let end = trace
        .gantt
        .iter()
        .map(|s| s.end)
        .chain(trace.miss.iter().map(|m| m.detected.max(m.marker)))
        .chain(std::iter::once(trace.end()))
        .max()
        .unwrap_or_default();
    let span = to_f64(&end).max(1.0).ceil();
    let scale = 40.0;
    let (left, top, lane_h, gap) = (60.0, 20.0, 30.0, 30.0);
    let w = left + span * scale + 30.0;
    let h = top + (lane_h + gap) * trace.lanes.len() as f64 + 30.0;
    let tx = |t: &Rational| left + to_f64(t) * scale;
    let lane_y = |p: &str| trace.lanes.iter().position(|l| l == p).map(|i| top + gap + (lane_h + gap) * i as f64);
    let mut tasks: Vec<&str> = Vec::new();
    for s in &trace.gantt {
        if !tasks.contains(&s.task.as_str()) {
            tasks.push(&s.task);
        }
    }
    tasks.sort();
    let color = |t: &str| PALETTE[tasks.iter().position(|x| *x == t).unwrap_or(0) % PALETTE.len()];

    let mut out = String::new();
    svg_open(&mut out, w, h);
    out.push_str(
        r#"<defs><marker id="arrow" markerWidth="8" markerHeight="8" refX="4" refY="8" orient="auto-start-reverse"><path d="M0,0 L8,0 L4,8 z" fill="black"/></marker></defs>"#,
    );
    out.push('\n');
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{w:.0}" height="{h:.0}" fill="white"/>"#);
    for (i, lane) in trace.lanes.iter().enumerate() {
        let y = top + gap + (lane_h + gap) * i as f64;
        let _ = writeln!(out, r#"<text x="6" y="{:.1}">{}</text>"#, y + lane_h / 2.0 + 4.0, esc(lane));
        let _ = writeln!(
            out,
            r#"<line x1="{left}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
            y + lane_h,
            left + span * scale,
            y + lane_h
        );
    }
    let axis_y = h - 12.0;
    for t in 0..=span as i64 {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{axis_y:.1}" text-anchor="middle" font-size="10">{t}</text>"#,
            left + t as f64 * scale
        );
    }
    for s in &trace.gantt {
        let Some(y) = lane_y(&s.processor) else { continue };
        let (x0, x1) = (tx(&s.start), tx(&s.end));
        let _ = writeln!(
            out,
            r#"<rect class="segment" data-task="{}" data-start="{}" data-end="{}" x="{x0:.1}" y="{y:.1}" width="{:.1}" height="{lane_h}" fill="{}" stroke="black"/>"#,
            esc(&s.task),
            format_decimal(&s.start),
            format_decimal(&s.end),
            x1 - x0,
            color(&s.task)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" fill="white">{}</text>"#,
            (x0 + x1) / 2.0,
            y + lane_h / 2.0 + 4.0,
            esc(&s.task)
        );
    }
    for r in &trace.releases {
        let Some(y) = lane_y(&r.processor) else { continue };
        let x = tx(&r.time);
        let _ = writeln!(
            out,
            r#"<line class="release" data-task="{}" x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black" marker-end="url(#arrow)"/>"#,
            esc(&r.task),
            y - gap + 4.0,
            y - 2.0
        );
    }
    if let Some(m) = &trace.miss {
        if let Some(y) = lane_y(&m.processor) {
            let (a, b) = if m.marker <= m.detected { (m.marker, m.detected) } else { (m.detected, m.marker) };
            let (x0, x1) = (tx(&a), tx(&b).max(tx(&a) + 4.0));
            let _ = writeln!(
                out,
                r#"<rect class="violation" data-task="{}" data-marker="{}" x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="red" stroke-width="3"/>"#,
                esc(&m.task),
                format_decimal(&m.marker),
                x0 - 2.0,
                y - 4.0,
                x1 - x0 + 4.0,
                lane_h + 8.0
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

pub fn trace_json(trace: &TimedTrace) -> Value {
    json!({
        "events": script_json(&trace.events),
        "gantt": trace.gantt,
        "releases": trace.releases,
        "miss": trace.miss,
    })
}

/// `{"verdict": "SCHEDULABLE" | "DEADLINE_MISS" | "INCONCLUSIVE", ...}`.
pub fn verdict_json(v: &Verdict) -> Value {
    match &v.kind {
        VerdictKind::Schedulable => json!({ "verdict": "SCHEDULABLE", "states": v.states_explored }),
        VerdictKind::DeadlineMiss { trace } => {
            json!({ "verdict": "DEADLINE_MISS", "states": v.states_explored, "trace": trace_json(trace) })
        }
        VerdictKind::Inconclusive { reason } => {
            json!({ "verdict": "INCONCLUSIVE", "states": v.states_explored, "reason": reason })
        }
    }
}

pub fn trace_check_json(c: &TraceCheck, trace: &TimedTrace) -> Value {
    json!({
        "accepted": c.accepted,
        "rejection": c.rejection,
        "reached_miss": c.reached_miss,
        "trace": trace_json(trace),
    })
}

pub fn sweep_json(r: &Region, mismatches: Option<&[Mismatch]>) -> Value {
    let mut counts = BTreeMap::new();
    for v in
        [PointVerdict::Schedulable, PointVerdict::DeadlineMiss, PointVerdict::Infeasible, PointVerdict::Inconclusive]
    {
        counts.insert(v.to_string(), r.count(v));
    }
    let mut out = r.to_json();
    out["counts"] = json!(counts);
    if let Some(ms) = mismatches {
        out["mismatches"] = ms
            .iter()
            .map(|m| {
                json!({
                    "values": m.values.iter().map(format_decimal).collect::<Vec<_>>(),
                    "verdict": m.verdict,
                    "expected_schedulable": m.expected_schedulable,
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{GanttSegment, MissInfo, Release};
    use crate::sweep::{Axis, ParameterGrid, RegionPoint};

    fn r(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    fn region(axes: Vec<Axis>, fixed: &[(&str, i64)]) -> Region {
        let grid = ParameterGrid::new(axes).unwrap();
        let points = grid
            .points()
            .into_iter()
            .map(|values| {
                let verdict = if values.iter().map(|v| v.to_integer()).sum::<i64>() < 9 {
                    PointVerdict::Schedulable
                } else {
                    PointVerdict::DeadlineMiss
                };
                RegionPoint { values, verdict, states: 0 }
            })
            .collect();
        Region { grid, fixed: fixed.iter().map(|(k, v)| (k.to_string(), r(*v))).collect(), points }
    }

    #[test]
    fn one_cell_per_point() {
        let reg = region(vec![Axis::integer("A", 4, 8).unwrap(), Axis::integer("B", 1, 8).unwrap()], &[]);
        let svg = region_to_svg(&reg, "A", "B").unwrap();
        assert_eq!(svg.matches("<rect x=\"").count() - 1, 40);
        roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(svg, region_to_svg(&reg, "A", "B").unwrap());
    }

    #[test]
    fn single_point() {
        let reg = region(vec![], &[("A", 1), ("B", 2)]);
        let svg = region_to_svg(&reg, "A", "B").unwrap();
        assert_eq!(svg.matches("<title>").count(), 1);
    }

    #[test]
    fn dim_mismatch() {
        let reg = region(vec![Axis::integer("A", 0, 1).unwrap(), Axis::integer("C", 0, 1).unwrap()], &[]);
        assert_eq!(region_to_svg(&reg, "A", "B").unwrap_err().code(), "DIM_MISMATCH");
        assert!(region_to_svg(&reg, "A", "A").is_err());
    }

    #[test]
    fn empty_trace() {
        let t = TimedTrace { lanes: vec!["CPU1".into()], ..Default::default() };
        let svg = gantt_to_svg(&t);
        roxmltree::Document::parse(&svg).unwrap();
        assert!(!svg.contains("class=\"segment\""));
        assert!(svg.contains(">CPU1<"));
    }

    #[test]
    fn violation_box() {
        let t = TimedTrace {
            lanes: vec!["P".into()],
            gantt: vec![GanttSegment {
                task: "A<1>".into(),
                processor: "P".into(),
                start: r(0),
                end: r(3),
                preempted: false,
            }],
            releases: vec![Release { task: "A<1>".into(), processor: "P".into(), time: r(0) }],
            miss: Some(MissInfo { processor: "P".into(), task: "A<1>".into(), marker: r(2), detected: r(3) }),
            ..Default::default()
        };
        let svg = gantt_to_svg(&t);
        roxmltree::Document::parse(&svg).unwrap();
        assert!(svg.contains("class=\"violation\""));
        assert!(svg.contains("A&lt;1&gt;"));
    }
}
