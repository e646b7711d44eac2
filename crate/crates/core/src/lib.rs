//! Jerk-continuous feedrate scheduling for planar NURBS toolpaths.
//!
//! The pipeline splits a curve at the local minima of its curvature-limited
//! feedrate, makes junction feedrates mutually reachable by forward and
//! backward scanning, fits a seven-phase trigonometric S-curve to each
//! sub-curve, and stretches one sub-curve so the whole move lasts an integer
//! number of interpolation periods. [`interp`] then samples the result.
//!
//! ```
//! use nurbsfeed::{fixtures, interp, scheduler, KinematicLimits};
//!
//! let limits = KinematicLimits::default();
//! let curve = fixtures::line50();
//! let plan = scheduler::schedule_curve(&curve, &limits).unwrap();
//! let points = interp::sample_trajectory(&curve, &plan, &limits).unwrap();
//! assert_eq!(points.len() as u64, plan.periods.unwrap() + 1);
//! ```

pub mod fixtures;
pub mod format;
pub mod geom;
pub mod interp;
pub mod limits;
pub mod nurbs;
pub mod polyroot;
pub mod scheduler;
pub mod sprofile;

pub use geom::Vec2;
pub use limits::KinematicLimits;
pub use nurbs::{CurveKinematics, NurbsCurve};
pub use scheduler::{SchedulePlan, SubCurve, SubCurveCase};
pub use sprofile::SevenPhaseProfile;
