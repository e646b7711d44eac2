//! Trajectory sampling at the interpolation period, chord-error estimation
//! and run statistics.

use crate::format::sig9;
use crate::geom::Vec2;
use crate::limits::KinematicLimits;
use crate::nurbs::{ArcLengthTable, CurveError, NurbsCurve};
use crate::scheduler::SchedulePlan;
use serde::Serialize;
use std::io::{BufRead, Write};
use thiserror::Error;

pub const CSV_HEADER: &str = "t,u,x,y,v,a,j,chord_error";

const TABLE_INTERVALS: usize = 128;
const LENGTH_ENVELOPE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum InterpError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("plan has no whole-period step count; run round-off elimination first")]
    Unrounded,
    #[error("plan has no sub-curves")]
    EmptyPlan,
    #[error("displacement {s} mm outside sub-curve {index} length {length} mm")]
    Consistency { index: usize, s: f64, length: f64 },
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One interpolated point; one CSV row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub u: f64,
    pub position: Vec2,
    pub feedrate: f64,
    /// Tangential, signed.
    pub accel: f64,
    /// Tangential, signed.
    pub jerk: f64,
    /// Sagitta estimate to the previous point; zero for the first point.
    pub chord_error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RunStats {
    pub max_feedrate: f64,
    pub max_accel: f64,
    pub max_jerk: f64,
    pub max_chord_error: f64,
    /// Mean over every point except the first.
    pub avg_chord_error: f64,
    pub interpolation_time: f64,
}

/// Sagitta of the osculating circle spanning chord `c`; the flag is set
/// when the chord is longer than the circle's diameter.
fn sagitta(chord: f64, rho: f64) -> (f64, bool) {
    if chord == 0.0 || rho.is_infinite() {
        return (0.0, false);
    }
    let radicand = rho * rho - 0.25 * chord * chord;
    if radicand < 0.0 {
        return (rho, true);
    }
    // rho - sqrt(rho^2 - c^2/4), written without cancellation
    (0.25 * chord * chord / (rho + radicand.sqrt()), false)
}

/// Chord error between two parameters, using the curvature radius at the
/// midpoint parameter.
pub fn chord_error(curve: &NurbsCurve, u_prev: f64, u_next: f64) -> Result<f64, CurveError> {
    Ok(chord_error_checked(curve, u_prev, u_next)?.0)
}

/// As [`chord_error`], also reporting whether the radicand was clamped.
pub fn chord_error_checked(curve: &NurbsCurve, u_prev: f64, u_next: f64) -> Result<(f64, bool), CurveError> {
    let chord = curve.curve_point(u_prev)?.distance(curve.curve_point(u_next)?);
    let mid = 0.5 * (u_prev + u_next);
    let rho = match curve.derivatives(mid) {
        Ok(k) => k.curvature_radius,
        Err(CurveError::Cusp(_)) => 0.5 * chord,
        Err(e) => return Err(e),
    };
    Ok(sagitta(chord, rho))
}

/// Samples the plan every interpolation period.
pub fn sample_trajectory(
    curve: &NurbsCurve,
    plan: &SchedulePlan,
    limits: &KinematicLimits,
) -> Result<Vec<TrajectoryPoint>, InterpError> {
    let periods = plan.periods.ok_or(InterpError::Unrounded)?;
    let times: Vec<f64> = (0..=periods).map(|k| k as f64 * limits.period).collect();
    sample_at(curve, plan, &times)
}

/// Samples the plan at arbitrary, non-decreasing times; times past the end
/// clamp to the final state.
pub fn sample_at(curve: &NurbsCurve, plan: &SchedulePlan, times: &[f64]) -> Result<Vec<TrajectoryPoint>, InterpError> {
    if plan.profiles.is_empty() {
        return Err(InterpError::EmptyPlan);
    }
    let tables = plan
        .sub_curves
        .iter()
        .map(|s| ArcLengthTable::build(curve, s.u_start, s.u_end, TABLE_INTERVALS))
        .collect::<Result<Vec<_>, _>>()?;
    let starts = plan.profile_starts();
    let last = plan.profiles.len() - 1;
    let mut index = 0;
    let mut points: Vec<TrajectoryPoint> = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        while index < last && t >= starts[index + 1] {
            index += 1;
        }
        let profile = &plan.profiles[index];
        let is_last = k + 1 == times.len();
        let local = if is_last && index == last {
            profile.total_time()
        } else {
            (t - starts[index]).clamp(0.0, profile.total_time())
        };
        let state = profile.eval(local).expect("local time clamped to profile");
        let table = &tables[index];
        let sub = &plan.sub_curves[index];
        if state.displacement > table.total() + LENGTH_ENVELOPE || state.displacement < -LENGTH_ENVELOPE {
            return Err(InterpError::Consistency { index, s: state.displacement, length: table.total() });
        }
        let s = state.displacement.clamp(0.0, table.total());
        let mut u = table.inverse(curve, s)?;
        if let Some(prev) = points.last() {
            // round-off in the inversion must not step backwards
            u = u.max(prev.u);
        }
        u = u.clamp(sub.u_start, sub.u_end);
        let position = curve.curve_point(u)?;
        let chord = match points.last() {
            Some(prev) if u > prev.u => chord_error(curve, prev.u, u)?,
            _ => 0.0,
        };
        points.push(TrajectoryPoint {
            t,
            u,
            position,
            feedrate: state.feedrate,
            accel: state.accel,
            jerk: state.jerk,
            chord_error: chord,
        });
    }
    Ok(points)
}

pub fn run_stats(points: &[TrajectoryPoint]) -> RunStats {
    let max = |f: &dyn Fn(&TrajectoryPoint) -> f64| points.iter().map(f).fold(0.0, f64::max);
    let rest = points.len().saturating_sub(1);
    let avg = if rest == 0 { 0.0 } else { points[1..].iter().map(|p| p.chord_error).sum::<f64>() / rest as f64 };
    let interpolation_time = match (points.first(), points.last()) {
        (Some(a), Some(b)) => b.t - a.t,
        _ => 0.0,
    };
    RunStats {
        max_feedrate: max(&|p| p.feedrate.abs()),
        max_accel: max(&|p| p.accel.abs()),
        max_jerk: max(&|p| p.jerk.abs()),
        max_chord_error: max(&|p| p.chord_error),
        avg_chord_error: avg,
        interpolation_time,
    }
}

impl RunStats {
    /// Flat `key=value` block, 9 significant digits.
    pub fn to_text(&self) -> String {
        format!(
            "max_feedrate={}\nmax_accel={}\nmax_jerk={}\nmax_chord_error={}\navg_chord_error={}\ninterpolation_time={}\n",
            sig9(self.max_feedrate),
            sig9(self.max_accel),
            sig9(self.max_jerk),
            sig9(self.max_chord_error),
            sig9(self.avg_chord_error),
            sig9(self.interpolation_time),
        )
    }
}

pub fn write_csv<W: Write>(points: &[TrajectoryPoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            sig9(p.t),
            sig9(p.u),
            sig9(p.position.x),
            sig9(p.position.y),
            sig9(p.feedrate),
            sig9(p.accel),
            sig9(p.jerk),
            sig9(p.chord_error)
        )?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(input: R) -> Result<Vec<TrajectoryPoint>, InterpError> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != CSV_HEADER {
        return Err(InterpError::Csv { line: 1, message: format!("expected header `{CSV_HEADER}`") });
    }
    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| InterpError::Csv { line: i + 2, message: e.to_string() })?;
        let [t, u, x, y, v, a, j, c] = fields[..] else {
            return Err(InterpError::Csv { line: i + 2, message: format!("expected 8 fields, got {}", fields.len()) });
        };
        points.push(TrajectoryPoint { t, u, position: Vec2::new(x, y), feedrate: v, accel: a, jerk: j, chord_error: c });
    }
    Ok(points)
}
