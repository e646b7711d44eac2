//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use nurbsfeed::interp::{run_stats, sample_at, sample_trajectory, TrajectoryPoint};
use nurbsfeed::scheduler::{
    eliminate_roundoff, feedrate_limit_at, find_breakpoints, forward_scan, min_ramp_displacement, plan_from_subcurves,
    schedule_curve, DEFAULT_SAMPLES,
};
use nurbsfeed::{fixtures, KinematicLimits, NurbsCurve, SchedulePlan, SubCurve, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

const PROFILE_SAMPLES: usize = 100_000;

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: u8, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!("criterion {id}: {} {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn random_curve(rng: &mut ChaCha8Rng) -> NurbsCurve {
    let n = rng.gen_range(8..=20);
    let mut p = Vec2::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
    let mut heading: f64 = rng.gen_range(0.0..TAU);
    let mut points = vec![p];
    for _ in 1..n {
        heading += rng.gen_range(-1.2..1.2);
        p = p + Vec2::new(heading.cos(), heading.sin()) * rng.gen_range(5.0..30.0);
        points.push(p);
    }
    let weights = (0..n).map(|_| rng.gen_range(0.7..1.5)).collect();
    let knots = NurbsCurve::clamped_uniform(3, points.clone()).unwrap().knots().to_vec();
    NurbsCurve::new(3, points, weights, knots).unwrap()
}

/// Closed-form ramp between two speeds.
fn ramp_displacement(a: f64, b: f64, l: &KinematicLimits) -> f64 {
    let dv = (b - a).abs();
    let time = if dv <= PI * l.tangential_accel.powi(2) / (2.0 * l.tangential_jerk) {
        2.0 * (PI * dv / (2.0 * l.tangential_jerk)).sqrt()
    } else {
        dv / l.tangential_accel + PI * l.tangential_accel / (2.0 * l.tangential_jerk)
    };
    0.5 * (a + b) * time
}

/// Composite Simpson integral of the feedrate over one phase.
fn integrate_feedrate(profile: &nurbsfeed::SevenPhaseProfile, t0: f64, t1: f64) -> f64 {
    let n = 64;
    let h = (t1 - t0) / n as f64;
    let v = |t: f64| profile.eval(t.clamp(0.0, profile.total_time())).unwrap().feedrate;
    let mut sum = v(t0) + v(t1);
    for i in 1..n {
        sum += v(t0 + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

/// Every property the suite demands of one scheduled curve; returns the
/// list of violations.
fn check_plan(curve: &NurbsCurve, plan: &SchedulePlan, points: &[TrajectoryPoint], l: &KinematicLimits) -> Vec<String> {
    let mut bad = Vec::new();
    let (v_max, a_max, j_max) = (l.feedrate + 1e-6, l.tangential_accel + 1e-3, l.tangential_jerk + 1.0);

    // kinematic bounds and continuity on a dense time grid
    let total = plan.profile_time_sum();
    let starts = plan.profile_starts();
    let dt = total / PROFILE_SAMPLES as f64;
    let mut index = 0;
    let mut prev: Option<nurbsfeed::sprofile::ProfileState> = None;
    for k in 0..=PROFILE_SAMPLES {
        let t = (k as f64 * dt).min(total);
        while index + 1 < plan.profiles.len() && t >= starts[index + 1] {
            index += 1;
        }
        let p = &plan.profiles[index];
        let s = p.eval((t - starts[index]).clamp(0.0, p.total_time())).unwrap();
        if s.feedrate > v_max || s.feedrate < -1e-9 || s.accel.abs() > a_max || s.jerk.abs() > j_max {
            bad.push(format!("bounds at t = {t}: v {} a {} j {}", s.feedrate, s.accel, s.jerk));
            break;
        }
        if let Some(q) = prev {
            if (s.feedrate - q.feedrate).abs() > a_max * dt * (1.0 + 1e-6) + 1e-9
                || (s.accel - q.accel).abs() > j_max * dt * (1.0 + 1e-6) + 1e-6
            {
                bad.push(format!("discontinuity near t = {t}"));
                break;
            }
        }
        prev = Some(s);
    }
    for (i, pair) in plan.profiles.windows(2).enumerate() {
        if pair[0].v_e != pair[1].v_s {
            bad.push(format!("junction {i} feedrate mismatch"));
        }
    }

    // closed form against numerical integration
    let mut length = 0.0;
    for (i, (p, sub)) in plan.profiles.iter().zip(&plan.sub_curves).enumerate() {
        if let Err(e) = p.check(l) {
            bad.push(format!("profile {i}: {e}"));
        }
        let b = p.boundaries();
        let numeric: f64 = (0..7).filter(|&k| b[k + 1] > b[k]).map(|k| integrate_feedrate(p, b[k], b[k + 1])).sum();
        if (numeric - p.end_displacement()).abs() > 1e-6 {
            bad.push(format!("profile {i}: integral {numeric} vs closed form {}", p.end_displacement()));
        }
        if (p.end_displacement() - sub.length).abs() > 1e-6 {
            bad.push(format!("profile {i}: displacement {} vs length {}", p.end_displacement(), sub.length));
        }
        // scanned junctions are mutually reachable
        if min_ramp_displacement(sub.v_start, sub.v_end, l) > sub.length * (1.0 + 1e-9) + 1e-12 {
            bad.push(format!("sub-curve {i}: junctions not reachable"));
        }
        length += sub.length;
    }
    if (length - curve.total_length()).abs() > 1e-6 {
        bad.push(format!("length {length} vs curve {}", curve.total_length()));
    }
    if let Some(last) = points.last() {
        let end = curve.curve_point(1.0).unwrap();
        if last.position.distance(end) > 1e-6 {
            bad.push(format!("trajectory ends {} mm from the curve end", last.position.distance(end)));
        }
    }

    for solve in &plan.solves {
        if !solve.verified || !solve.in_interval() {
            bad.push(format!("{:?} solve {} branch {} = {} outside [{}, {}]", solve.stage, solve.index, solve.branch, solve.value, solve.lo, solve.hi));
        }
    }

    // whole periods
    match plan.periods {
        Some(k) => {
            if plan.total_time.to_bits() != (k as f64 * l.period).to_bits() {
                bad.push(format!("total {} is not {k} periods", plan.total_time));
            }
            if (plan.profile_time_sum() - plan.total_time).abs() > 1e-12 {
                bad.push(format!("profile sum {} vs total {}", plan.profile_time_sum(), plan.total_time));
            }
            if !(plan.delta_t >= 0.0 && plan.delta_t < l.period) {
                bad.push(format!("extension {} outside [0, T_s)", plan.delta_t));
            }
        }
        None => bad.push("plan not rounded".into()),
    }

    // pointwise cap and chord error on the sampled trajectory
    for p in points {
        let cap = feedrate_limit_at(curve, p.u, l).unwrap();
        if p.feedrate > cap + 1e-6 {
            bad.push(format!("feedrate {} above cap {cap} at u = {}", p.feedrate, p.u));
            break;
        }
        if !(p.chord_error < l.chord_error) {
            bad.push(format!("chord error {} at u = {}", p.chord_error, p.u));
            break;
        }
    }
    bad
}

/// Peak feedrate of the same junctions scheduled without elimination.
fn unrounded_peak(plan: &SchedulePlan, l: &KinematicLimits) -> f64 {
    let subs: Vec<SubCurve> = plan.sub_curves.iter().cloned().map(|s| SubCurve { case: None, ..s }).collect();
    let raw = plan_from_subcurves(subs, l).unwrap();
    raw.profiles.iter().map(|p| p.v_peak.max(p.v_s).max(p.v_e)).fold(0.0, f64::max)
}

struct Scheduled {
    name: String,
    violations: Vec<String>,
    peak_before: f64,
    peak_after: f64,
}

fn run_curve(name: String, curve: &NurbsCurve, l: &KinematicLimits) -> Scheduled {
    let plan = match schedule_curve(curve, l) {
        Ok(p) => p,
        Err(e) => {
            return Scheduled { name, violations: vec![format!("schedule failed: {e}")], peak_before: 0.0, peak_after: f64::INFINITY }
        }
    };
    let points = sample_trajectory(curve, &plan, l).unwrap();
    Scheduled {
        violations: check_plan(curve, &plan, &points, l),
        peak_before: unrounded_peak(&plan, l),
        peak_after: run_stats(&points).max_feedrate,
        name,
    }
}

fn criterion1(r: &mut Report, l: &KinematicLimits) {
    let curve = fixtures::line50();
    let start = Instant::now();
    let sub = SubCurve::new(0.0, 1.0, 0.0, 20.0, curve.total_length());
    let plan = plan_from_subcurves(vec![sub], l).unwrap();
    let rounded = eliminate_roundoff(&plan, l).unwrap();
    let elapsed = start.elapsed();
    let ok = (plan.total_time - 0.390242).abs() <= 1e-6 && rounded.total_time == 0.391 && elapsed < Duration::from_millis(10);
    r.line(1, ok, format!("unrounded {:.6} s, rounded {} s, {:?}", plan.total_time, rounded.total_time, elapsed));
}

fn criterion2(r: &mut Report, l: &KinematicLimits) {
    let curve = fixtures::trident();
    let start = Instant::now();
    let plan = schedule_curve(&curve, l).unwrap();
    let points = sample_trajectory(&curve, &plan, l).unwrap();
    let elapsed = start.elapsed();
    let stats = run_stats(&points);
    let interior = find_breakpoints(&curve, l, DEFAULT_SAMPLES).unwrap();
    // the curve closes on itself at a sharp vertex, which is the sixth
    // break point; it is an end of the parameter range, not interior
    let (start_k, end_k) = (curve.derivatives(0.0).unwrap(), curve.derivatives(1.0).unwrap());
    let turn = start_k.d1.cross(end_k.d1).atan2(start_k.d1.dot(end_k.d1)).abs();
    let closure = start_k.point.distance(end_k.point) < 1e-9 && turn > 1f64.to_radians();
    let breaks = interior.len() + usize::from(closure);
    let segments = plan.sub_curves.len();
    let ok = breaks == 6
        && (segments == 6 || segments == 7)
        && (stats.interpolation_time - 2.443).abs() <= 0.02 * 2.443
        && stats.max_feedrate <= 200.0 + 1e-6
        && stats.max_accel <= 2000.0 + 1e-3
        && stats.max_jerk <= 60000.0 + 1.0
        && stats.max_chord_error <= 2.625e-4
        && elapsed < Duration::from_secs(2);
    r.line(
        2,
        ok,
        format!(
            "break points {} interior + {} closure, {} sub-curves, time {} s, max v {:.4}, a {:.4e}, j {:.4e}, chord {:.4e}, {:?}",
            interior.len(),
            usize::from(closure),
            segments,
            stats.interpolation_time,
            stats.max_feedrate,
            stats.max_accel,
            stats.max_jerk,
            stats.max_chord_error,
            elapsed
        ),
    );
}

fn criterion5(r: &mut Report, l: &KinematicLimits) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let v_i = rng.gen_range(0.0..200.0);
        let v_target = rng.gen_range(0.0..200.0);
        let length = 10f64.powf(rng.gen_range(-3.0..1.7));
        let sub = SubCurve::new(0.0, 1.0, 0.0, 0.0, length);
        let got = forward_scan(&[v_i, v_target], &[sub], l).unwrap()[1];
        let oracle = if v_target <= v_i || ramp_displacement(v_i, v_target, l) <= length {
            v_target
        } else {
            let (mut lo, mut hi) = (v_i, v_target);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if ramp_displacement(v_i, mid, l) <= length {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        worst = worst.max((got - oracle).abs());
    }
    let elapsed = start.elapsed();
    r.line(5, worst <= 1e-6 && elapsed < Duration::from_secs(5), format!("1000 triples, worst |diff| {worst:.3e} mm/s, {elapsed:?}"));
}

fn main() {
    let l = KinematicLimits::default();
    let mut report = Report { failed: 0 };
    criterion1(&mut report, &l);
    criterion2(&mut report, &l);

    let butterfly = run_curve("butterfly_partial".into(), &fixtures::butterfly_partial(), &l);
    report.line(
        3,
        butterfly.violations.is_empty(),
        format!("butterfly_partial smoke run, {} invariant violations {:?}", butterfly.violations.len(), butterfly.violations),
    );

    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut suite = vec![
        run_curve("line50".into(), &fixtures::line50(), &l),
        run_curve("trident".into(), &fixtures::trident(), &l),
    ];
    for k in 0..50 {
        let curve = random_curve(&mut rng);
        suite.push(run_curve(format!("random {k}"), &curve, &l));
    }
    let elapsed = start.elapsed();
    let failures: Vec<String> =
        suite.iter().filter(|s| !s.violations.is_empty()).map(|s| format!("{}: {}", s.name, s.violations.join("; "))).collect();
    report.line(
        4,
        failures.is_empty() && elapsed < Duration::from_secs(60),
        format!("{} curves, {} with violations, {elapsed:?} {}", suite.len(), failures.len(), failures.join(" | ")),
    );

    criterion5(&mut report, &l);

    suite.push(butterfly);
    let raised: Vec<String> = suite
        .iter()
        .filter(|s| s.peak_after > s.peak_before + 1e-9)
        .map(|s| format!("{}: {} > {}", s.name, s.peak_after, s.peak_before))
        .collect();
    report.line(6, raised.is_empty(), format!("{} curves, peak raised on {} {}", suite.len(), raised.len(), raised.join(" | ")));

    // sample_at keeps the non-rounded sampling path exercised
    let line = fixtures::line50();
    let plan = schedule_curve(&line, &l).unwrap();
    assert!(sample_at(&line, &plan, &[0.0, plan.total_time]).is_ok());

    if report.failed > 0 {
        println!("{} criteria failed", report.failed);
        std::process::exit(1);
    }
}
