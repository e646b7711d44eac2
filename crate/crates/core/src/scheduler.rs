//! Feedrate scheduling pipeline.
//!
//! `schedule_curve` runs, in order: curvature caps and breakpoint
//! detection, division into sub-curves, forward and backward scanning of the
//! junction feedrates, per-sub-curve S-curve design, and round-off
//! elimination so that the total time is a whole number of interpolation
//! periods.
//!
//! Every unknown peak velocity is found by bracketed root solving of its
//! displacement identity, one branch per ramp regime (saturated or
//! jerk-bound acceleration), and each root is verified by substitution.

use crate::limits::KinematicLimits;
use crate::nurbs::{CurveError, NurbsCurve, ARC_LENGTH_TOL};
use crate::polyroot::{verify_root, RootError, RootProblem, VELOCITY_TOL};
use crate::sprofile::{
    accel_displacement, assemble_profile, design_accel_phase, PhaseDesign, ProfileError, SevenPhaseProfile,
};
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

pub const DEFAULT_SAMPLES: usize = 4000;
const GOLDEN_TOL: f64 = 1e-9;
/// Upper bound on cap-enforcement passes in [`schedule_curve_with`].
pub const MAX_CAP_PASSES: usize = 16;
/// Largest ratio of highest to lowest cap inside one piece of a sub-curve
/// split for cap enforcement.
pub const CAP_PIECE_RATIO: f64 = 1.05;
const CAP_PIECE_GRID: usize = 256;
const PIECE_LENGTH_TOL: f64 = 1e-10;
/// Sampled feedrate may exceed the cap by this much (mm/s) before a pass
/// inserts a junction.
pub const CAP_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("invalid limits: {0}")]
    Limits(#[from] crate::limits::LimitsError),
    #[error("root solve failed ({context}): {source}")]
    Root { context: String, source: RootError },
    #[error("root {value} failed verification ({context}): residual {residual:e}")]
    Verification { context: String, value: f64, residual: f64 },
    #[error("no branch yields a peak velocity for sub-curve {0}")]
    NoPeak(usize),
    #[error("round-off elimination unavailable: {0}")]
    EliminationUnavailable(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("trajectory sampling failed: {0}")]
    Sampling(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SubCurveCase {
    /// Monotone acceleration or deceleration over the whole sub-curve.
    AccOrDec,
    /// Accelerate, optionally cruise, then decelerate.
    AccAndDec,
}

impl std::fmt::Display for SubCurveCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SubCurveCase::AccOrDec => "ACC_OR_DEC",
            SubCurveCase::AccAndDec => "ACC_AND_DEC",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubCurve {
    pub u_start: f64,
    pub u_end: f64,
    pub v_start: f64,
    pub v_end: f64,
    pub length: f64,
    pub case: Option<SubCurveCase>,
    /// Peak feedrate allowed inside the sub-curve when below the command
    /// feedrate; set where the cap is enforced between breakpoints.
    pub peak_bound: Option<f64>,
}

impl SubCurve {
    pub fn new(u_start: f64, u_end: f64, v_start: f64, v_end: f64, length: f64) -> Self {
        SubCurve { u_start, u_end, v_start, v_end, length, case: None, peak_bound: None }
    }

    /// Highest feedrate the profile may reach.
    pub fn peak_limit(&self, limits: &KinematicLimits) -> f64 {
        self.peak_bound.map_or(limits.feedrate, |b| b.min(limits.feedrate))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolveStage {
    Scan,
    Peak,
    RoundOff,
}

/// Record of one solved peak velocity and the interval it was searched in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeakSolve {
    pub stage: SolveStage,
    pub index: usize,
    pub branch: u8,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub residual: f64,
    pub scale: f64,
    pub verified: bool,
}

impl PeakSolve {
    /// Inside the closed interval, allowing the solver tolerance.
    pub fn in_interval(&self) -> bool {
        self.value >= self.lo - VELOCITY_TOL && self.value <= self.hi + VELOCITY_TOL
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchedulePlan {
    pub sub_curves: Vec<SubCurve>,
    pub profiles: Vec<SevenPhaseProfile>,
    /// Whole-period time once elimination ran, otherwise the raw sum.
    pub total_time: f64,
    /// Sum of profile durations before elimination.
    pub unrounded_time: f64,
    pub delta_t: f64,
    pub adjusted_index: Option<usize>,
    /// Number of interpolation periods, set by round-off elimination.
    pub periods: Option<u64>,
    pub solves: Vec<PeakSolve>,
    /// Junctions added where the sampled feedrate overshot the cap between
    /// breakpoints.
    pub inserted_junctions: Vec<f64>,
    pub diagnostics: Vec<String>,
}

impl SchedulePlan {
    /// Start time of every profile on the plan's clock.
    pub fn profile_starts(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.profiles
            .iter()
            .map(|p| {
                let start = t;
                t += p.total_time();
                start
            })
            .collect()
    }

    pub fn profile_time_sum(&self) -> f64 {
        self.profiles.iter().map(SevenPhaseProfile::total_time).sum()
    }
}

/// Curvature-limited feedrate: the minimum of the command feedrate and the
/// chord-error, centripetal-acceleration and centripetal-jerk caps.
pub fn max_allowable_feedrate(rho: f64, limits: &KinematicLimits) -> f64 {
    if rho.is_infinite() {
        return limits.feedrate;
    }
    let delta = limits.chord_error;
    let radicand = 2.0 * rho * delta - delta * delta;
    if !(radicand > 0.0) {
        return 0.0;
    }
    let chord = 2.0 / limits.period * radicand.sqrt();
    let centripetal = (limits.normal_accel * rho).sqrt();
    let jerk = (limits.normal_jerk * rho * rho).cbrt();
    limits.feedrate.min(chord).min(centripetal).min(jerk)
}

/// Feedrate cap at parameter `u`; zero at cusps.
pub fn feedrate_limit_at(curve: &NurbsCurve, u: f64, limits: &KinematicLimits) -> Result<f64, CurveError> {
    match curve.derivatives(u) {
        Ok(k) => Ok(max_allowable_feedrate(k.curvature_radius, limits)),
        Err(CurveError::Cusp(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

fn golden_minimize(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Parameters of the interior local minima of the feedrate cap that lie
/// below the command feedrate, refined by golden-section search.
pub fn find_breakpoints(curve: &NurbsCurve, limits: &KinematicLimits, samples: usize) -> Result<Vec<f64>, ScheduleError> {
    if samples < 100 {
        return Err(ScheduleError::Input(format!("samples must be >= 100, got {samples}")));
    }
    let grid: Vec<f64> = (0..=samples).map(|i| i as f64 / samples as f64).collect();
    let caps = grid.iter().map(|&u| feedrate_limit_at(curve, u, limits)).collect::<Result<Vec<_>, _>>()?;
    let cap = |u: f64| feedrate_limit_at(curve, u, limits).unwrap_or(0.0);
    let mut out = Vec::new();
    for i in 1..samples {
        let v = caps[i];
        if v < caps[i - 1] && v <= caps[i + 1] && v < limits.feedrate - 1e-9 {
            let u = golden_minimize(&cap, grid[i - 1], grid[i + 1], GOLDEN_TOL);
            // keep the grid point if refinement landed on a worse value
            let u = if cap(u) <= v { u } else { grid[i] };
            if out.last().map_or(true, |&prev| u > prev) {
                out.push(u);
            }
        }
    }
    Ok(out)
}

/// Divides the curve at `breakpoints`; junction feedrates start at the cap,
/// curve ends at rest.
pub fn split_curve(curve: &NurbsCurve, breakpoints: &[f64], limits: &KinematicLimits) -> Result<Vec<SubCurve>, ScheduleError> {
    let mut edges = Vec::with_capacity(breakpoints.len() + 2);
    edges.push(0.0);
    for &u in breakpoints {
        if !(u > *edges.last().unwrap() && u < 1.0) {
            return Err(ScheduleError::Input(format!("breakpoints must be strictly increasing in (0, 1), got {u}")));
        }
        edges.push(u);
    }
    edges.push(1.0);
    let mut velocities = Vec::with_capacity(edges.len());
    velocities.push(0.0);
    for &u in breakpoints {
        velocities.push(feedrate_limit_at(curve, u, limits)?);
    }
    velocities.push(0.0);
    edges
        .windows(2)
        .zip(velocities.windows(2))
        .map(|(u, v)| {
            Ok(SubCurve::new(u[0], u[1], v[0], v[1], curve.arc_length(u[0], u[1], ARC_LENGTH_TOL)?))
        })
        .collect()
}

/// Shortest distance over which the feedrate can change between `v0` and
/// `v1` (either order) with a time-optimal ramp.
pub fn min_ramp_displacement(v0: f64, v1: f64, limits: &KinematicLimits) -> f64 {
    let (lo, hi) = if v0 <= v1 { (v0, v1) } else { (v1, v0) };
    let design = design_accel_phase(lo, hi, limits.tangential_accel, limits.tangential_jerk).expect("ordered");
    accel_displacement(lo, hi, &design)
}

/// Distance and time of a ramp from `v0` to `v0 + dv`, saturated regime.
fn saturated_ramp(v0: f64, dv: f64, limits: &KinematicLimits) -> (f64, f64) {
    let time = dv / limits.tangential_accel + limits.saturated_rise();
    ((v0 + 0.5 * dv) * time, time)
}

/// Distance and time of a ramp from `v0` to `v0 + dv`, jerk-bound regime.
fn jerk_bound_ramp(v0: f64, dv: f64, limits: &KinematicLimits) -> (f64, f64) {
    let rise = (PI * dv.max(0.0) / (2.0 * limits.tangential_jerk)).sqrt();
    ((2.0 * v0 + dv) * rise, 2.0 * rise)
}

/// One regime of a displacement identity. `residual` takes the velocity
/// offset from the solve's base speed, so that small offsets keep their
/// precision.
struct Branch<'a> {
    id: u8,
    lo: f64,
    hi: f64,
    residual: Box<dyn Fn(f64) -> f64 + 'a>,
}

/// Tries `branches` in order and returns the first verified root.
///
/// Every jerk-bound ramp has a square-root singularity at `base`, so each
/// identity is solved in `w = sqrt(v - base)`, where it is smooth.
fn solve_branches(
    branches: Vec<Branch<'_>>,
    base: f64,
    scale: f64,
    stage: SolveStage,
    index: usize,
) -> Result<Option<PeakSolve>, ScheduleError> {
    for branch in branches {
        if !(branch.lo <= branch.hi) {
            continue;
        }
        let Branch { id, lo, hi, residual } = branch;
        let (w_lo, w_hi) = ((lo - base).max(0.0).sqrt(), (hi - base).max(0.0).sqrt());
        let problem = RootProblem::new(move |w: f64| residual(w * w), w_lo, w_hi).scale(scale);
        let w = match problem.solve_bracketed() {
            Ok(w) => w,
            Err(RootError::NoRoot { .. }) => continue,
            Err(source) => {
                return Err(ScheduleError::Root { context: format!("{stage:?} sub-curve {index} branch {id}"), source })
            }
        };
        let value = base + w * w;
        let verified = verify_root(&problem, w);
        if !verified {
            let residual = problem.eval(w);
            return Err(ScheduleError::Verification { context: format!("{stage:?} sub-curve {index} branch {id} on [{lo}, {hi}]"), value, residual });
        }
        let value = value.clamp(lo, hi);
        return Ok(Some(PeakSolve { stage, index, branch: id, value, lo, hi, residual: problem.eval(w), scale, verified }));
    }
    Ok(None)
}

/// Largest feedrate reachable from `v_from` within `length`, capped at
/// `v_to`. Returns `v_to` unchanged when it is reachable.
pub fn reachable_velocity(
    v_from: f64,
    v_to: f64,
    length: f64,
    limits: &KinematicLimits,
) -> Result<(f64, Option<PeakSolve>), ScheduleError> {
    reachable_logged(v_from, v_to, length, limits, 0)
}

fn reachable_logged(
    v_from: f64,
    v_to: f64,
    length: f64,
    limits: &KinematicLimits,
    index: usize,
) -> Result<(f64, Option<PeakSolve>), ScheduleError> {
    if v_to <= v_from {
        return Ok((v_to, None));
    }
    if min_ramp_displacement(v_from, v_to, limits) < length {
        return Ok((v_to, None));
    }
    let threshold = limits.ramp_threshold();
    let mut branches = Vec::with_capacity(2);
    if v_to - v_from > threshold {
        branches.push(Branch {
            id: 1,
            lo: v_from + threshold,
            hi: v_to,
            residual: Box::new(move |dv| saturated_ramp(v_from, dv, limits).0 - length),
        });
    }
    branches.push(Branch {
        id: 2,
        lo: v_from,
        hi: v_to.min(v_from + threshold),
        residual: Box::new(move |dv| jerk_bound_ramp(v_from, dv, limits).0 - length),
    });
    match solve_branches(branches, v_from, length, SolveStage::Scan, index)? {
        Some(solve) => Ok((solve.value.min(v_to), Some(solve))),
        None => Err(ScheduleError::NoPeak(index)),
    }
}

fn check_scan_input(velocities: &[f64], sub_curves: &[SubCurve]) -> Result<(), ScheduleError> {
    if velocities.len() != sub_curves.len() + 1 {
        return Err(ScheduleError::Input(format!(
            "{} junction feedrates for {} sub-curves",
            velocities.len(),
            sub_curves.len()
        )));
    }
    Ok(())
}

fn scan_forward_logged(
    velocities: &[f64],
    lengths: &[f64],
    limits: &KinematicLimits,
    index_of: &dyn Fn(usize) -> usize,
    log: &mut Vec<PeakSolve>,
) -> Result<Vec<f64>, ScheduleError> {
    let mut v = velocities.to_vec();
    for i in 0..lengths.len() {
        let (next, solve) = reachable_logged(v[i], v[i + 1], lengths[i], limits, index_of(i))?;
        if next < v[i + 1] {
            v[i + 1] = next;
        }
        log.extend(solve);
    }
    Ok(v)
}

/// Lowers each junction feedrate to what is reachable by accelerating from
/// its predecessor.
pub fn forward_scan(velocities: &[f64], sub_curves: &[SubCurve], limits: &KinematicLimits) -> Result<Vec<f64>, ScheduleError> {
    check_scan_input(velocities, sub_curves)?;
    let lengths: Vec<f64> = sub_curves.iter().map(|s| s.length).collect();
    scan_forward_logged(velocities, &lengths, limits, &|i| i, &mut Vec::new())
}

/// Mirror of [`forward_scan`] running from the curve end towards the start.
pub fn backward_scan(velocities: &[f64], sub_curves: &[SubCurve], limits: &KinematicLimits) -> Result<Vec<f64>, ScheduleError> {
    check_scan_input(velocities, sub_curves)?;
    backward_logged(velocities, sub_curves, limits, &mut Vec::new())
}

fn backward_logged(
    velocities: &[f64],
    sub_curves: &[SubCurve],
    limits: &KinematicLimits,
    log: &mut Vec<PeakSolve>,
) -> Result<Vec<f64>, ScheduleError> {
    let n = sub_curves.len();
    let reversed: Vec<f64> = velocities.iter().rev().copied().collect();
    let lengths: Vec<f64> = sub_curves.iter().rev().map(|s| s.length).collect();
    let mut out = scan_forward_logged(&reversed, &lengths, limits, &|i| n - 1 - i, log)?;
    out.reverse();
    Ok(out)
}

/// Scheduled motion of one sub-curve.
#[derive(Clone, Debug, PartialEq)]
pub struct ScheduledSubCurve {
    pub profile: SevenPhaseProfile,
    pub case: SubCurveCase,
    pub solve: Option<PeakSolve>,
}

/// Peak velocity `v` such that ramps from both ends to `v` plus
/// `cruise(v)` of cruising cover `length`. `cruise_time` receives the two
/// ramp durations; `None` means no cruise.
fn solve_peak(
    sub: &SubCurve,
    upper: f64,
    limits: &KinematicLimits,
    cruise_time: Option<f64>,
    stage: SolveStage,
    index: usize,
) -> Result<Option<PeakSolve>, ScheduleError> {
    let (v_hi, v_lo) = if sub.v_start > sub.v_end { (sub.v_start, sub.v_end) } else { (sub.v_end, sub.v_start) };
    let threshold = limits.ramp_threshold();
    let length = sub.length;
    let gap = v_hi - v_lo;
    let identity = move |hi_ramp: (f64, f64), lo_ramp: (f64, f64), dv: f64| -> f64 {
        let cruise = cruise_time.map_or(0.0, |total| (v_hi + dv) * (total - hi_ramp.1 - lo_ramp.1));
        hi_ramp.0 + lo_ramp.0 + cruise - length
    };
    let branches = vec![
        Branch {
            id: 1,
            lo: v_hi + threshold,
            hi: upper,
            residual: Box::new(move |dv| {
                identity(saturated_ramp(v_hi, dv, limits), saturated_ramp(v_lo, gap + dv, limits), dv)
            }),
        },
        Branch {
            id: 2,
            lo: v_hi.max(v_lo + threshold),
            hi: upper.min(v_hi + threshold),
            residual: Box::new(move |dv| {
                identity(jerk_bound_ramp(v_hi, dv, limits), saturated_ramp(v_lo, gap + dv, limits), dv)
            }),
        },
        Branch {
            id: 3,
            lo: v_hi,
            hi: upper.min(v_lo + threshold),
            residual: Box::new(move |dv| {
                identity(jerk_bound_ramp(v_hi, dv, limits), jerk_bound_ramp(v_lo, gap + dv, limits), dv)
            }),
        },
    ];
    solve_branches(branches, v_hi, length, stage, index)
}

fn classify(sub: &SubCurve, limits: &KinematicLimits) -> SubCurveCase {
    let s_min = min_ramp_displacement(sub.v_start, sub.v_end, limits);
    if sub.length - s_min <= 1e-9 * sub.length.max(1.0) {
        SubCurveCase::AccOrDec
    } else {
        SubCurveCase::AccAndDec
    }
}

/// Profile of one sub-curve whose junction feedrates are mutually reachable.
pub fn schedule_subcurve(sub: &SubCurve, limits: &KinematicLimits) -> Result<ScheduledSubCurve, ScheduleError> {
    schedule_subcurve_at(sub, limits, 0)
}

fn schedule_subcurve_at(sub: &SubCurve, limits: &KinematicLimits, index: usize) -> Result<ScheduledSubCurve, ScheduleError> {
    let (a_t, j_t) = (limits.tangential_accel, limits.tangential_jerk);
    let (v_s, v_e, length) = (sub.v_start, sub.v_end, sub.length);
    if !(length > 0.0) {
        return Err(ScheduleError::Input(format!("sub-curve {index} has non-positive length {length}")));
    }
    let case = classify(sub, limits);
    match case {
        SubCurveCase::AccOrDec => {
            let (lo, hi) = if v_s <= v_e { (v_s, v_e) } else { (v_e, v_s) };
            let (ramp, cruise) = if hi - lo <= limits.ramp_threshold() {
                (PhaseDesign::stretched(lo, hi, length), 0.0)
            } else {
                let d = design_accel_phase(lo, hi, a_t, j_t)?;
                (d, ((length - accel_displacement(lo, hi, &d)) / hi).max(0.0))
            };
            let none = PhaseDesign::default();
            let profile = if v_s <= v_e {
                SevenPhaseProfile::from_phases(v_s, v_e, v_e, ramp, cruise, none, length)
            } else {
                SevenPhaseProfile::from_phases(v_s, v_s, v_e, none, cruise, ramp, length)
            };
            Ok(ScheduledSubCurve { profile, case, solve: None })
        }
        SubCurveCase::AccAndDec => match assemble_profile(v_s, sub.peak_limit(limits).max(v_s).max(v_e), v_e, length, limits, None) {
            Ok(profile) => Ok(ScheduledSubCurve { profile, case, solve: None }),
            Err(ProfileError::InfeasiblePeak { .. }) => {
                let solve = solve_peak(sub, sub.peak_limit(limits), limits, None, SolveStage::Peak, index)?
                    .ok_or(ScheduleError::NoPeak(index))?;
                let profile = assemble_profile(v_s, solve.value, v_e, length, limits, Some(0.0))?;
                Ok(ScheduledSubCurve { profile, case, solve: Some(solve) })
            }
            Err(e) => Err(e.into()),
        },
    }
}

/// Whole-period step count and extension for a raw total time.
pub fn period_rounding(total: f64, period: f64) -> (u64, f64) {
    let ratio = total / period;
    let nearest = ratio.round();
    let periods = if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) { nearest } else { ratio.ceil() };
    (periods as u64, periods * period - total)
}

/// Stretches one ACC_AND_DEC sub-curve by lowering its peak so the plan
/// lasts a whole number of interpolation periods.
pub fn eliminate_roundoff(plan: &SchedulePlan, limits: &KinematicLimits) -> Result<SchedulePlan, ScheduleError> {
    let mut out = plan.clone();
    let total = plan.profile_time_sum();
    let period = limits.period;
    let (periods, delta_t) = period_rounding(total, period);
    let target_total = periods as f64 * period;
    out.unrounded_time = total;
    out.periods = Some(periods);
    out.total_time = target_total;
    if delta_t.abs() <= 1e-12 * period.max(total) {
        out.delta_t = 0.0;
        out.adjusted_index = None;
        return Ok(out);
    }
    out.delta_t = delta_t;
    let candidates: Vec<usize> =
        (0..plan.sub_curves.len()).filter(|&i| plan.sub_curves[i].case == Some(SubCurveCase::AccAndDec)).collect();
    if candidates.is_empty() {
        return Err(ScheduleError::EliminationUnavailable("no ACC_AND_DEC sub-curve".into()));
    }
    let (a_t, j_t) = (limits.tangential_accel, limits.tangential_jerk);
    for &index in &candidates {
        let sub = &plan.sub_curves[index];
        let old = &plan.profiles[index];
        let others: f64 = plan.profiles.iter().enumerate().filter(|&(j, _)| j != index).map(|(_, p)| p.total_time()).sum();
        let target = target_total - others;
        let Some(solve) = solve_peak(sub, old.v_peak, limits, Some(target), SolveStage::RoundOff, index)? else {
            out.diagnostics.push(format!("sub-curve {index} cannot absorb {delta_t:e} s by lowering its peak"));
            continue;
        };
        let v_m = solve.value;
        let accel = design_accel_phase(sub.v_start, v_m, a_t, j_t)?;
        let decel = design_accel_phase(sub.v_end, v_m, a_t, j_t)?;
        let cruise = target - accel.duration() - decel.duration();
        let profile = assemble_profile(sub.v_start, v_m, sub.v_end, sub.length, limits, Some(cruise))?;
        out.profiles[index] = profile;
        out.adjusted_index = Some(index);
        out.solves.push(solve);
        return Ok(out);
    }
    Err(ScheduleError::EliminationUnavailable(format!(
        "no ACC_AND_DEC sub-curve can absorb {delta_t:e} s"
    )))
}

/// Everything up to, but not including, round-off elimination.
pub fn plan_unrounded(curve: &NurbsCurve, limits: &KinematicLimits, samples: usize) -> Result<SchedulePlan, ScheduleError> {
    limits.validate()?;
    let breakpoints = find_breakpoints(curve, limits, samples)?;
    let sub_curves = split_curve(curve, &breakpoints, limits)?;
    plan_from_subcurves(sub_curves, limits)
}

/// Scans junction feedrates of `sub_curves` and schedules each one.
pub fn plan_from_subcurves(mut sub_curves: Vec<SubCurve>, limits: &KinematicLimits) -> Result<SchedulePlan, ScheduleError> {
    let mut solves = Vec::new();
    let mut velocities: Vec<f64> = sub_curves.iter().map(|s| s.v_start).collect();
    velocities.push(sub_curves.last().map_or(0.0, |s| s.v_end));
    let lengths: Vec<f64> = sub_curves.iter().map(|s| s.length).collect();
    let velocities = scan_forward_logged(&velocities, &lengths, limits, &|i| i, &mut solves)?;
    let velocities = backward_logged(&velocities, &sub_curves, limits, &mut solves)?;
    let mut profiles = Vec::with_capacity(sub_curves.len());
    for (i, sub) in sub_curves.iter_mut().enumerate() {
        sub.v_start = velocities[i];
        sub.v_end = velocities[i + 1];
        let scheduled = schedule_subcurve_at(sub, limits, i)?;
        sub.case = Some(scheduled.case);
        solves.extend(scheduled.solve);
        profiles.push(scheduled.profile);
    }
    let total: f64 = profiles.iter().map(SevenPhaseProfile::total_time).sum();
    Ok(SchedulePlan {
        sub_curves,
        profiles,
        total_time: total,
        unrounded_time: total,
        delta_t: 0.0,
        adjusted_index: None,
        periods: None,
        solves,
        inserted_junctions: Vec::new(),
        diagnostics: Vec::new(),
    })
}

pub fn schedule_curve(curve: &NurbsCurve, limits: &KinematicLimits) -> Result<SchedulePlan, ScheduleError> {
    schedule_curve_with(curve, limits, DEFAULT_SAMPLES)
}

/// Full pipeline.
///
/// Ramps are only pinned to the cap at breakpoints, so a ramp can overshoot
/// a rising cap in between. Each pass samples the plan at the interpolation
/// period; every sub-curve with an overshooting sample is split into pieces
/// over which the cap varies by at most [`CAP_PIECE_RATIO`], and each piece
/// is held below its lowest cap.
pub fn schedule_curve_with(curve: &NurbsCurve, limits: &KinematicLimits, samples: usize) -> Result<SchedulePlan, ScheduleError> {
    limits.validate()?;
    let breakpoints = find_breakpoints(curve, limits, samples)?;
    let mut subs = split_curve(curve, &breakpoints, limits)?;
    let mut inserted = Vec::new();
    for pass in 0..=MAX_CAP_PASSES {
        let mut plan = eliminate_roundoff(&plan_from_subcurves(subs.clone(), limits)?, limits)?;
        let offending = cap_overshoots(curve, &plan, limits)?;
        let mut refined = false;
        if pass < MAX_CAP_PASSES {
            for &i in offending.iter().rev() {
                let pieces = cap_pieces(curve, &subs[i], limits)?;
                if pieces.len() == 1 && pieces[0].peak_bound == subs[i].peak_bound {
                    continue;
                }
                refined = true;
                inserted.extend(pieces.iter().skip(1).map(|p| p.u_start));
                if i > 0 {
                    subs[i - 1].v_end = pieces[0].v_start;
                }
                if i + 1 < subs.len() {
                    subs[i + 1].v_start = pieces[pieces.len() - 1].v_end;
                }
                subs.splice(i..=i, pieces);
            }
        }
        if !refined {
            if !offending.is_empty() {
                plan.diagnostics.push(format!("feedrate cap still exceeded on {} sub-curves", offending.len()));
            }
            if !inserted.is_empty() {
                plan.diagnostics.push(format!("{} junctions inserted to respect the feedrate cap", inserted.len()));
            }
            inserted.sort_by(f64::total_cmp);
            plan.inserted_junctions = inserted;
            return Ok(plan);
        }
    }
    unreachable!("the last pass never refines")
}

/// Splits `sub` where the cap ratio inside a piece would exceed
/// [`CAP_PIECE_RATIO`]; each piece's peak and junctions are held at or below
/// the piece's lowest cap.
fn cap_pieces(curve: &NurbsCurve, sub: &SubCurve, limits: &KinematicLimits) -> Result<Vec<SubCurve>, ScheduleError> {
    let (a, b) = (sub.u_start, sub.u_end);
    let grid: Vec<f64> = (0..=CAP_PIECE_GRID).map(|i| a + (b - a) * i as f64 / CAP_PIECE_GRID as f64).collect();
    let caps = grid.iter().map(|&u| feedrate_limit_at(curve, u, limits)).collect::<Result<Vec<_>, _>>()?;
    let cap = |u: f64| feedrate_limit_at(curve, u, limits).unwrap_or(0.0);

    let mut cuts = vec![0];
    let (mut lo, mut hi) = (caps[0], caps[0]);
    for i in 1..=CAP_PIECE_GRID {
        let (nlo, nhi) = (lo.min(caps[i]), hi.max(caps[i]));
        if nhi > CAP_PIECE_RATIO * nlo && i - 1 > *cuts.last().unwrap() {
            cuts.push(i - 1);
            lo = caps[i - 1].min(caps[i]);
            hi = caps[i - 1].max(caps[i]);
        } else {
            lo = nlo;
            hi = nhi;
        }
    }
    cuts.push(CAP_PIECE_GRID);

    let mut bounds = Vec::with_capacity(cuts.len() - 1);
    for w in cuts.windows(2) {
        let (i0, i1) = (w[0], w[1]);
        let j = (i0..=i1).min_by(|&x, &y| caps[x].total_cmp(&caps[y])).unwrap();
        let mut bound = caps[j];
        // the minimum may sit between grid points
        let (l, r) = (grid[j.saturating_sub(1).max(i0)], grid[(j + 1).min(i1)]);
        if r > l {
            bound = bound.min(cap(golden_minimize(&cap, l, r, GOLDEN_TOL)));
        }
        let bound = bound.min(sub.peak_limit(limits));
        if !(bound > 0.0) {
            return Err(ScheduleError::Input(format!("feedrate cap vanishes inside [{}, {}]", grid[i0], grid[i1])));
        }
        bounds.push(bound);
    }
    let mut pieces = Vec::with_capacity(bounds.len());
    for (k, w) in cuts.windows(2).enumerate() {
        let (u0, u1) = (grid[w[0]], grid[w[1]]);
        let v0 = if k == 0 { sub.v_start.min(bounds[0]) } else { bounds[k - 1].min(bounds[k]) };
        let v1 = if k + 1 == bounds.len() { sub.v_end.min(bounds[k]) } else { bounds[k].min(bounds[k + 1]) };
        let mut piece = SubCurve::new(u0, u1, v0, v1, curve.arc_length(u0, u1, PIECE_LENGTH_TOL)?);
        piece.peak_bound = Some(bounds[k]);
        pieces.push(piece);
    }
    Ok(pieces)
}

/// Indices of sub-curves with a sample whose feedrate exceeds the cap.
fn cap_overshoots(curve: &NurbsCurve, plan: &SchedulePlan, limits: &KinematicLimits) -> Result<Vec<usize>, ScheduleError> {
    let points =
        crate::interp::sample_trajectory(curve, plan, limits).map_err(|e| ScheduleError::Sampling(e.to_string()))?;
    let mut out: Vec<usize> = Vec::new();
    let mut index = 0;
    for p in &points {
        while index + 1 < plan.sub_curves.len() && p.u >= plan.sub_curves[index].u_end {
            index += 1;
        }
        if out.last() == Some(&index) {
            continue;
        }
        if p.feedrate - feedrate_limit_at(curve, p.u, limits)? > CAP_TOL {
            out.push(index);
        }
    }
    Ok(out)
}
