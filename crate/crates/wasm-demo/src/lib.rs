//! Browser bindings for the scheduler. Every export returns a JSON string;
//! the page in `www/` draws it on a canvas.

use nurbsfeed::interp::{run_stats, sample_trajectory};
use nurbsfeed::scheduler::{feedrate_limit_at, find_breakpoints, schedule_curve, schedule_subcurve, SubCurve};
use nurbsfeed::{fixtures, KinematicLimits, NurbsCurve};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const CAP_GRID: usize = 600;
const PROFILE_POINTS: usize = 400;

#[derive(Serialize)]
struct Series {
    t: Vec<f64>,
    v: Vec<f64>,
    a: Vec<f64>,
    j: Vec<f64>,
}

impl Series {
    fn with_capacity(n: usize) -> Self {
        Series { t: Vec::with_capacity(n), v: Vec::with_capacity(n), a: Vec::with_capacity(n), j: Vec::with_capacity(n) }
    }
}

#[derive(Serialize)]
struct Junction {
    u: f64,
    v: f64,
    case: String,
}

#[derive(Serialize)]
struct ScheduleView {
    total_time: f64,
    unrounded_time: f64,
    max_feedrate: f64,
    max_chord_error: f64,
    junctions: Vec<Junction>,
    x: Vec<f64>,
    y: Vec<f64>,
    series: Series,
}

#[derive(Serialize)]
struct ProfileView {
    case: String,
    v_peak: f64,
    durations: [f64; 7],
    total_time: f64,
    series: Series,
}

#[derive(Serialize)]
struct CapView {
    u: Vec<f64>,
    v_limit: Vec<f64>,
    breakpoints: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
}

fn limits_with_feedrate(feedrate: f64) -> Result<KinematicLimits, String> {
    let mut limits = KinematicLimits::default();
    if feedrate > 0.0 {
        limits.feedrate = feedrate;
    }
    limits.validate().map_err(|e| e.to_string())?;
    Ok(limits)
}

fn fixture(name: &str) -> Result<NurbsCurve, String> {
    fixtures::load_fixture(name).ok_or_else(|| format!("unknown fixture `{name}`"))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// Schedules a built-in curve; `feedrate <= 0` keeps the default.
pub fn schedule_json(name: &str, feedrate: f64) -> Result<String, String> {
    let curve = fixture(name)?;
    let limits = limits_with_feedrate(feedrate)?;
    let plan = schedule_curve(&curve, &limits).map_err(|e| e.to_string())?;
    let points = sample_trajectory(&curve, &plan, &limits).map_err(|e| e.to_string())?;
    let stats = run_stats(&points);
    let mut series = Series::with_capacity(points.len());
    let (mut x, mut y) = (Vec::with_capacity(points.len()), Vec::with_capacity(points.len()));
    for p in &points {
        series.t.push(p.t);
        series.v.push(p.feedrate);
        series.a.push(p.accel);
        series.j.push(p.jerk);
        x.push(p.position.x);
        y.push(p.position.y);
    }
    let junctions = plan
        .sub_curves
        .iter()
        .map(|s| Junction { u: s.u_start, v: s.v_start, case: s.case.map(|c| c.to_string()).unwrap_or_default() })
        .collect();
    to_json(&ScheduleView {
        total_time: plan.total_time,
        unrounded_time: plan.unrounded_time,
        max_feedrate: stats.max_feedrate,
        max_chord_error: stats.max_chord_error,
        junctions,
        x,
        y,
        series,
    })
}

/// S-curve of a single sub-curve between two junction feedrates.
pub fn profile_json(v_start: f64, v_end: f64, length: f64, feedrate: f64) -> Result<String, String> {
    let limits = limits_with_feedrate(feedrate)?;
    let sub = SubCurve::new(0.0, 1.0, v_start, v_end, length);
    let scheduled = schedule_subcurve(&sub, &limits).map_err(|e| e.to_string())?;
    let profile = scheduled.profile;
    let total = profile.total_time();
    let mut series = Series::with_capacity(PROFILE_POINTS + 1);
    for k in 0..=PROFILE_POINTS {
        let t = total * k as f64 / PROFILE_POINTS as f64;
        let s = profile.eval(t.min(total)).map_err(|e| e.to_string())?;
        series.t.push(t);
        series.v.push(s.feedrate);
        series.a.push(s.accel);
        series.j.push(s.jerk);
    }
    to_json(&ProfileView {
        case: scheduled.case.to_string(),
        v_peak: profile.v_peak,
        durations: profile.durations,
        total_time: total,
        series,
    })
}

/// Curvature-limited feedrate along a built-in curve with its breakpoints.
pub fn cap_json(name: &str, feedrate: f64) -> Result<String, String> {
    let curve = fixture(name)?;
    let limits = limits_with_feedrate(feedrate)?;
    let mut view = CapView { u: Vec::new(), v_limit: Vec::new(), breakpoints: Vec::new(), x: Vec::new(), y: Vec::new() };
    for k in 0..=CAP_GRID {
        let u = k as f64 / CAP_GRID as f64;
        let p = curve.curve_point(u).map_err(|e| e.to_string())?;
        view.u.push(u);
        view.v_limit.push(feedrate_limit_at(&curve, u, &limits).map_err(|e| e.to_string())?);
        view.x.push(p.x);
        view.y.push(p.y);
    }
    view.breakpoints = find_breakpoints(&curve, &limits, nurbsfeed::scheduler::DEFAULT_SAMPLES).map_err(|e| e.to_string())?;
    to_json(&view)
}

#[wasm_bindgen]
pub fn schedule(name: &str, feedrate: f64) -> Result<String, JsValue> {
    schedule_json(name, feedrate).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn sub_curve_profile(v_start: f64, v_end: f64, length: f64, feedrate: f64) -> Result<String, JsValue> {
    profile_json(v_start, v_end, length, feedrate).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn feedrate_cap(name: &str, feedrate: f64) -> Result<String, JsValue> {
    cap_json(name, feedrate).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn fixture_names() -> String {
    fixtures::NAMES.join(",")
}
