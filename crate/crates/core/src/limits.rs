use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Machine and tolerance limits for one scheduling run (mm, s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KinematicLimits {
    /// Command feedrate, mm/s.
    #[serde(rename = "F")]
    pub feedrate: f64,
    /// Tangential acceleration limit, mm/s².
    #[serde(rename = "A_t")]
    pub tangential_accel: f64,
    /// Centripetal acceleration limit, mm/s².
    #[serde(rename = "A_n")]
    pub normal_accel: f64,
    /// Tangential jerk limit, mm/s³.
    #[serde(rename = "J_t")]
    pub tangential_jerk: f64,
    /// Centripetal jerk limit, mm/s³.
    #[serde(rename = "J_n")]
    pub normal_jerk: f64,
    /// Maximum chord error, mm.
    #[serde(rename = "delta")]
    pub chord_error: f64,
    /// Interpolation period, s.
    #[serde(rename = "T_s")]
    pub period: f64,
}

impl Default for KinematicLimits {
    fn default() -> Self {
        KinematicLimits {
            feedrate: 200.0,
            tangential_accel: 2000.0,
            normal_accel: 2000.0,
            tangential_jerk: 60000.0,
            normal_jerk: 60000.0,
            chord_error: 0.001,
            period: 0.001,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("limit {name} must be positive and finite, got {value}")]
pub struct LimitsError {
    pub name: &'static str,
    pub value: f64,
}

impl KinematicLimits {
    pub fn validate(&self) -> Result<(), LimitsError> {
        let fields = [
            ("F", self.feedrate),
            ("A_t", self.tangential_accel),
            ("A_n", self.normal_accel),
            ("J_t", self.tangential_jerk),
            ("J_n", self.normal_jerk),
            ("delta", self.chord_error),
            ("T_s", self.period),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(LimitsError { name, value });
            }
        }
        Ok(())
    }

    /// Velocity change above which the acceleration ramp saturates at `A_t`:
    /// `pi A_t^2 / (2 J_t)`.
    pub fn ramp_threshold(&self) -> f64 {
        std::f64::consts::PI * self.tangential_accel * self.tangential_accel / (2.0 * self.tangential_jerk)
    }

    /// Rise time of a saturated acceleration lobe: `pi A_t / (2 J_t)`.
    pub fn saturated_rise(&self) -> f64 {
        std::f64::consts::PI * self.tangential_accel / (2.0 * self.tangential_jerk)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_partial_document() {
        let l: KinematicLimits = serde_json::from_str(r#"{"F": 100.0}"#).unwrap();
        assert_eq!(l.feedrate, 100.0);
        assert_eq!(l.period, 0.001);
        assert!(l.validate().is_ok());
    }

    #[test]
    fn rejects_non_positive() {
        let l = KinematicLimits { normal_jerk: 0.0, ..Default::default() };
        assert_eq!(l.validate().unwrap_err().name, "J_n");
    }

    #[test]
    fn threshold() {
        let l = KinematicLimits::default();
        assert!((l.ramp_threshold() - 104.719_755).abs() < 1e-6);
        assert!((l.saturated_rise() - std::f64::consts::PI / 60.0).abs() < 1e-15);
    }
}
