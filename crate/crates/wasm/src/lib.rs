//! Browser bindings for the demo page in `www/`.
//!
//! Every entry point takes the model as native JSON text plus a JSON object
//! of parameter assignments (`{"T5Deadline": 11}`), and returns JSON text.

use rtforge::engine::{self, TimedTrace, VerdictKind};
use rtforge::ingest::{parse_native_str, serialize_native};
use rtforge::model;
use rtforge::report;
use rtforge::sweep::{self, Axis, ParameterGrid, PointVerdict, SweepOptions};
use rtforge::translate::{self, Translation};
use rtforge::{casestudy, parse_rational, Valuation};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Browser sweeps run on one thread; keep them responsive.
const DEMO_GRID_CAP: usize = 2_500;

fn prepare(model_json: &str, assignments: &str) -> Result<(Translation, Valuation), String> {
    let m = parse_native_str(model_json, "model").map_err(|e| e.to_string())?;
    let m = model::validate(m).map_err(|e| e.to_string())?;
    let (lifted, mut v) = translate::lift_parameters(&m);
    let tr = translate::compile(&model::validate(lifted).map_err(|e| e.to_string())?, &Default::default());
    if !assignments.trim().is_empty() {
        let obj: serde_json::Map<String, Value> =
            serde_json::from_str(assignments).map_err(|e| format!("assignments: {e}"))?;
        for (k, val) in obj {
            let name = resolve(&tr, &k)?;
            let text = match &val {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            v.insert(name, parse_rational(&text).map_err(|e| e.to_string())?);
        }
    }
    Ok((tr, v))
}

fn resolve(tr: &Translation, name: &str) -> Result<String, String> {
    let known = tr.network.params.iter().map(|p| p.name.as_str());
    translate::resolve_param(name, known).map(str::to_string).ok_or_else(|| format!("unknown parameter {name}"))
}

/// Checks one valuation. On a miss the result carries the witness as a
/// Gantt SVG.
pub fn check_json(model_json: &str, assignments: &str) -> Result<Value, String> {
    let (tr, v) = prepare(model_json, assignments)?;
    if let Some(why) = sweep::infeasibility(&tr, &v) {
        return Err(format!("infeasible valuation: {why}"));
    }
    let verdict = engine::check_schedulability(&tr.network, &v).map_err(|e| e.to_string())?;
    let mut out = report::verdict_json(&verdict);
    if let VerdictKind::DeadlineMiss { trace } = &verdict.kind {
        let mut t = trace.clone();
        let _ = engine::annotate(&tr, &v, &mut t);
        out["trace"] = report::trace_json(&t);
        out["svg"] = json!(report::gantt_to_svg(&t));
    }
    Ok(out)
}

/// Replays a `[[time, action], ...]` script and draws its chronogram.
pub fn replay_json(model_json: &str, script: &str, assignments: &str) -> Result<Value, String> {
    let (tr, v) = prepare(model_json, assignments)?;
    let mut t = TimedTrace::from_events(engine::parse_script(script)?);
    let check = engine::annotate(&tr, &v, &mut t).map_err(|e| e.to_string())?;
    let mut out = report::trace_check_json(&check, &t);
    out["svg"] = json!(report::gantt_to_svg(&t));
    Ok(out)
}

/// Sweeps two axes (`name=lo:hi[:step]`) and draws the region.
pub fn sweep2d_json(model_json: &str, x: &str, y: &str, assignments: &str) -> Result<Value, String> {
    let (tr, fixed) = prepare(model_json, assignments)?;
    let mut axes = Vec::new();
    for spec in [x, y] {
        let mut a = Axis::parse(spec).map_err(|e| e.to_string())?;
        a.param = resolve(&tr, &a.param)?;
        axes.push(a);
    }
    let (xn, yn) = (axes[0].param.clone(), axes[1].param.clone());
    let grid = ParameterGrid::new(axes).map_err(|e| e.to_string())?;
    let opts = SweepOptions { jobs: Some(1), cap: DEMO_GRID_CAP, ..Default::default() };
    let region = sweep::sweep(&tr, &grid, &fixed, &opts).map_err(|e| e.to_string())?;
    let svg = report::region_to_svg(&region, &xn, &yn).map_err(|e| e.to_string())?;
    let counts: serde_json::Map<String, Value> =
        [PointVerdict::Schedulable, PointVerdict::DeadlineMiss, PointVerdict::Infeasible, PointVerdict::Inconclusive]
            .iter()
            .map(|v| (v.to_string(), json!(region.count(*v))))
            .collect();
    Ok(json!({ "svg": svg, "counts": counts }))
}

fn to_js(r: Result<Value, String>) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = caseStudy)]
pub fn case_study() -> String {
    serialize_native(&casestudy::model())
}

#[wasm_bindgen(js_name = caseStudyChronogram)]
pub fn case_study_chronogram() -> String {
    casestudy::FIG_CHRONOGRAM.to_string()
}

#[wasm_bindgen]
pub fn check(model_json: &str, assignments: &str) -> Result<String, JsError> {
    to_js(check_json(model_json, assignments))
}

#[wasm_bindgen]
pub fn replay(model_json: &str, script: &str, assignments: &str) -> Result<String, JsError> {
    to_js(replay_json(model_json, script, assignments))
}

#[wasm_bindgen]
pub fn sweep2d(model_json: &str, x: &str, y: &str, assignments: &str) -> Result<String, JsError> {
    to_js(sweep2d_json(model_json, x, y, assignments))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_reports_miss_with_gantt() {
        let out = check_json(&case_study(), r#"{"T5Deadline": 11}"#).unwrap();
        assert_eq!(out["verdict"], "DEADLINE_MISS");
        assert!(out["svg"].as_str().unwrap().contains("class=\"violation\""));
        assert_eq!(check_json(&case_study(), "").unwrap()["verdict"], "SCHEDULABLE");
    }

    #[test]
    fn replay_draws_chronogram() {
        let out = replay_json(&case_study(), &case_study_chronogram(), "{}").unwrap();
        assert_eq!(out["accepted"], true);
        assert!(out["svg"].as_str().unwrap().starts_with("<svg") || out["svg"].as_str().unwrap().starts_with("<?xml"));
    }

    #[test]
    fn sweep_region() {
        let out = sweep2d_json(&case_study(), "T1Deadline=4:6", "T5Deadline=10:11", "").unwrap();
        let total: u64 = out["counts"].as_object().unwrap().values().map(|v| v.as_u64().unwrap()).sum();
        assert_eq!(total, 6);
        assert!(sweep2d_json(&case_study(), "T1WCET=0:100", "T4WCET=0:100", "").is_err());
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(check_json("{", "").is_err());
        assert!(check_json(&case_study(), r#"{"Nope": 1}"#).is_err());
        assert!(check_json(&case_study(), r#"{"T1WCET": 1}"#).is_err());
    }
}
