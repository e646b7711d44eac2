//! Seven-phase trigonometric S-curve.
//!
//! Acceleration rises and falls along raised-cosine lobes, so jerk is a
//! half sine that starts and ends at zero. Phases:
//!
//! 1. jerk-up lobe, 2. constant acceleration, 3. jerk-down lobe,
//! 4. cruise at the peak feedrate,
//! 5-7. the mirrored deceleration ramp.
//!
//! Displacement is evaluated from per-phase antiderivatives of the
//! velocity law, with each phase's starting `(s, v)` precomputed.

use crate::limits::KinematicLimits;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("ramp target {v1} below start {v0}")]
    DecreasingRamp { v0: f64, v1: f64 },
    #[error("peak feedrate {v_peak} below an endpoint feedrate ({v_s}, {v_e})")]
    PeakBelowEndpoint { v_s: f64, v_peak: f64, v_e: f64 },
    #[error("peak {v_peak} infeasible: ramps need {ramps} mm but length is {length} mm")]
    InfeasiblePeak { v_peak: f64, ramps: f64, length: f64 },
    #[error("time {t} outside [0, {total}]")]
    Domain { t: f64, total: f64 },
    #[error("profile violates {0}")]
    Invariant(String),
}

/// Duration design of one acceleration ramp (phases 1-3, or 5-7 mirrored).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseDesign {
    /// Duration of each raised-cosine lobe (T1 = T3).
    pub rise: f64,
    /// Constant-acceleration hold (T2).
    pub hold: f64,
    /// Peak acceleration magnitude.
    pub peak_accel: f64,
}

impl PhaseDesign {
    /// Total ramp time `2 rise + hold`.
    pub fn duration(&self) -> f64 {
        2.0 * self.rise + self.hold
    }

    /// Sub-saturated ramp stretched to cover exactly `length` mm:
    /// `T1 = l / (v0 + v1)`, `A = (v1^2 - v0^2) / l`.
    pub fn stretched(v0: f64, v1: f64, length: f64) -> Self {
        if v1 == v0 || length <= 0.0 {
            return PhaseDesign::default();
        }
        let rise = length / (v0 + v1);
        PhaseDesign { rise, hold: 0.0, peak_accel: (v1 * v1 - v0 * v0) / length }
    }

    /// Peak jerk of the lobes, `A pi / (2 T1)`.
    pub fn peak_jerk(&self) -> f64 {
        if self.rise > 0.0 {
            self.peak_accel * PI / (2.0 * self.rise)
        } else {
            0.0
        }
    }
}

/// Time-optimal ramp from `v0` up to `v1` under the tangential limits.
pub fn design_accel_phase(v0: f64, v1: f64, a_max: f64, j_max: f64) -> Result<PhaseDesign, ProfileError> {
    if v1 < v0 {
        return Err(ProfileError::DecreasingRamp { v0, v1 });
    }
    let dv = v1 - v0;
    if dv == 0.0 {
        return Ok(PhaseDesign::default());
    }
    let threshold = PI * a_max * a_max / (2.0 * j_max);
    if dv <= threshold {
        let rise = (PI * dv / (2.0 * j_max)).sqrt();
        Ok(PhaseDesign { rise, hold: 0.0, peak_accel: dv / rise })
    } else {
        let rise = PI * a_max / (2.0 * j_max);
        Ok(PhaseDesign { rise, hold: dv / a_max - rise, peak_accel: a_max })
    }
}

/// Distance covered by a ramp: `(v0 + v1)(2 T1 + T2) / 2`.
pub fn accel_displacement(v0: f64, v1: f64, design: &PhaseDesign) -> f64 {
    0.5 * (v0 + v1) * design.duration()
}

/// Kinematic state at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileState {
    pub jerk: f64,
    pub accel: f64,
    pub feedrate: f64,
    pub displacement: f64,
}

/// Complete motion law of one sub-curve.
#[derive(Clone, Debug, PartialEq)]
pub struct SevenPhaseProfile {
    pub v_s: f64,
    pub v_e: f64,
    pub v_peak: f64,
    /// T1..T7.
    pub durations: [f64; 7],
    pub a1: f64,
    pub a2: f64,
    pub length: f64,
    starts: [f64; 8],
    phase_s: [f64; 8],
    phase_v: [f64; 8],
}

impl SevenPhaseProfile {
    /// Builds a profile from explicit ramp designs and cruise time.
    pub fn from_phases(
        v_s: f64,
        v_peak: f64,
        v_e: f64,
        accel: PhaseDesign,
        cruise: f64,
        decel: PhaseDesign,
        length: f64,
    ) -> Self {
        let durations = [accel.rise, accel.hold, accel.rise, cruise.max(0.0), decel.rise, decel.hold, decel.rise];
        let mut profile = SevenPhaseProfile {
            v_s,
            v_e,
            v_peak,
            durations,
            a1: accel.peak_accel,
            a2: decel.peak_accel,
            length,
            starts: [0.0; 8],
            phase_s: [0.0; 8],
            phase_v: [0.0; 8],
        };
        let mut t = 0.0;
        profile.phase_v[0] = v_s;
        for i in 0..7 {
            t += durations[i];
            profile.starts[i + 1] = t;
            let end = profile.eval_in_phase(i, durations[i]);
            profile.phase_s[i + 1] = end.displacement;
            profile.phase_v[i + 1] = end.feedrate;
        }
        profile
    }

    pub fn total_time(&self) -> f64 {
        self.starts[7]
    }

    /// Phase start times t0..t7 as exact running sums.
    pub fn boundaries(&self) -> &[f64; 8] {
        &self.starts
    }

    pub fn accel_design(&self) -> PhaseDesign {
        PhaseDesign { rise: self.durations[0], hold: self.durations[1], peak_accel: self.a1 }
    }

    pub fn decel_design(&self) -> PhaseDesign {
        PhaseDesign { rise: self.durations[4], hold: self.durations[5], peak_accel: self.a2 }
    }

    /// Closed-form end displacement.
    pub fn end_displacement(&self) -> f64 {
        self.phase_s[7]
    }

    pub fn max_jerk(&self) -> f64 {
        self.accel_design().peak_jerk().max(self.decel_design().peak_jerk())
    }

    fn eval_in_phase(&self, phase: usize, tau: f64) -> ProfileState {
        let s0 = self.phase_s[phase];
        let v0 = self.phase_v[phase];
        let d = self.durations[phase];
        let (a1, a2) = (self.a1, self.a2);
        let lobe = |amp: f64, rise: f64, falling: bool| -> (f64, f64, f64, f64) {
            // jerk, accel, dv, ds of a raised-cosine lobe of amplitude `amp`
            let w = PI / rise;
            let (sin, cos) = (w * tau).sin_cos();
            let k = amp * rise * rise / (2.0 * PI * PI);
            if !falling {
                (amp * w / 2.0 * sin, amp * (1.0 - cos) / 2.0, amp * tau / 2.0 - amp / (2.0 * w) * sin, amp * tau * tau / 4.0 + k * (cos - 1.0))
            } else {
                (-amp * w / 2.0 * sin, amp * (1.0 + cos) / 2.0, amp * tau / 2.0 + amp / (2.0 * w) * sin, amp * tau * tau / 4.0 - k * (cos - 1.0))
            }
        };
        let (j, a, dv, ds) = match phase {
            _ if d == 0.0 => (0.0, 0.0, 0.0, 0.0),
            0 => lobe(a1, d, false),
            1 => (0.0, a1, a1 * tau, 0.5 * a1 * tau * tau),
            2 => lobe(a1, d, true),
            3 => (0.0, 0.0, 0.0, 0.0),
            4 => lobe(-a2, d, false),
            5 => (0.0, -a2, -a2 * tau, -0.5 * a2 * tau * tau),
            _ => lobe(-a2, d, true),
        };
        ProfileState { jerk: j, accel: a, feedrate: v0 + dv, displacement: s0 + v0 * tau + ds }
    }

    /// Jerk, acceleration, feedrate and displacement at time `t`.
    pub fn eval(&self, t: f64) -> Result<ProfileState, ProfileError> {
        let total = self.total_time();
        if !(t >= 0.0 && t <= total) {
            return Err(ProfileError::Domain { t, total });
        }
        if t == total {
            return Ok(ProfileState { jerk: 0.0, accel: 0.0, feedrate: self.v_e, displacement: self.phase_s[7] });
        }
        if t == 0.0 {
            return Ok(ProfileState { jerk: 0.0, accel: 0.0, feedrate: self.v_s, displacement: 0.0 });
        }
        // last non-empty phase whose start is <= t
        let mut phase = 0;
        for i in 0..7 {
            if self.durations[i] > 0.0 && self.starts[i] <= t {
                phase = i;
            }
        }
        let tau = (t - self.starts[phase]).min(self.durations[phase]);
        Ok(self.eval_in_phase(phase, tau))
    }

    /// Time at which the displacement reaches `s` (bisection on the
    /// monotone `S(t)`).
    pub fn time_at_displacement(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s >= self.phase_s[7] {
            return self.total_time();
        }
        let phase = (0..7).rev().find(|&i| self.phase_s[i] <= s && self.durations[i] > 0.0).unwrap_or(0);
        let (mut lo, mut hi) = (0.0, self.durations[phase]);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.eval_in_phase(phase, mid).displacement < s {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * self.total_time().max(1.0) {
                break;
            }
        }
        self.starts[phase] + 0.5 * (lo + hi)
    }

    /// Checks the structural and kinematic invariants against `limits`.
    pub fn check(&self, limits: &KinematicLimits) -> Result<(), ProfileError> {
        let rel = 1e-9;
        let fail = |what: String| Err(ProfileError::Invariant(what));
        if self.durations.iter().any(|&d| !(d >= 0.0)) {
            return fail("non-negative durations".into());
        }
        let a_t = limits.tangential_accel;
        let j_t = limits.tangential_jerk;
        if self.a1 > a_t * (1.0 + rel) || self.a2 > a_t * (1.0 + rel) {
            return fail(format!("acceleration bound: A1 = {}, A2 = {}", self.a1, self.a2));
        }
        if self.max_jerk() > j_t * (1.0 + rel) {
            return fail(format!("jerk bound: {}", self.max_jerk()));
        }
        let scale = self.v_peak.max(1.0);
        let acc_dv = self.a1 * (self.durations[0] + self.durations[1]);
        let dec_dv = self.a2 * (self.durations[4] + self.durations[5]);
        if (acc_dv - (self.v_peak - self.v_s)).abs() > rel * scale || (dec_dv - (self.v_peak - self.v_e)).abs() > rel * scale {
            return fail("ramp velocity identity".into());
        }
        if (self.phase_v[7] - self.v_e).abs() > rel * scale {
            return fail(format!("end feedrate {} vs {}", self.phase_v[7], self.v_e));
        }
        if (self.phase_s[7] - self.length).abs() > rel * self.length.max(1.0) {
            return fail(format!("end displacement {} vs length {}", self.phase_s[7], self.length));
        }
        Ok(())
    }
}

/// Profile from `v_s` through `v_peak` to `v_e` over `length`, using
/// time-optimal ramps. The cruise time fills the remaining length unless
/// `cruise_override` is given.
pub fn assemble_profile(
    v_s: f64,
    v_peak: f64,
    v_e: f64,
    length: f64,
    limits: &KinematicLimits,
    cruise_override: Option<f64>,
) -> Result<SevenPhaseProfile, ProfileError> {
    if v_peak < v_s.max(v_e) {
        return Err(ProfileError::PeakBelowEndpoint { v_s, v_peak, v_e });
    }
    let (a_t, j_t) = (limits.tangential_accel, limits.tangential_jerk);
    let accel = design_accel_phase(v_s, v_peak, a_t, j_t)?;
    let decel = design_accel_phase(v_e, v_peak, a_t, j_t)?;
    let ramps = accel_displacement(v_s, v_peak, &accel) + accel_displacement(v_e, v_peak, &decel);
    let cruise = match cruise_override {
        Some(t4) => t4,
        None => {
            let rest = length - ramps;
            if rest < -1e-9 * length.max(1.0) || v_peak <= 0.0 && rest > 0.0 {
                return Err(ProfileError::InfeasiblePeak { v_peak, ramps, length });
            }
            if v_peak > 0.0 {
                (rest / v_peak).max(0.0)
            } else {
                0.0
            }
        }
    };
    Ok(SevenPhaseProfile::from_phases(v_s, v_peak, v_e, accel, cruise, decel, length))
}

pub fn eval_profile(profile: &SevenPhaseProfile, t: f64) -> Result<ProfileState, ProfileError> {
    profile.eval(t)
}
