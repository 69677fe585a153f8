//! Experimental conditions (implant resolution × field of view) and head pose.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Widest field of view the display can present, in degrees.
pub const MAX_FOV_DEG: f64 = 110.0;

/// An implant configuration: how many phosphenes cover how much of the visual field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub phosphene_count: usize,
    pub fov_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// The six conditions of the acuity study, `(label, fov_deg, phosphene_count)`.
pub const STANDARD_CONDITIONS: [(&str, f64, usize); 6] = [
    ("C1", 10.0, 100),
    ("C2", 10.0, 1000),
    ("C3", 20.0, 100),
    ("C4", 20.0, 1000),
    ("C5", 50.0, 100),
    ("C6", 50.0, 1000),
];

impl Condition {
    pub fn new(phosphene_count: usize, fov_deg: f64) -> Result<Self> {
        let c = Condition {
            phosphene_count,
            fov_deg,
            label: None,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// One of the named conditions `C1`..`C6`.
    pub fn standard(label: &str) -> Result<Self> {
        STANDARD_CONDITIONS
            .iter()
            .find(|(l, _, _)| l.eq_ignore_ascii_case(label))
            .map(|&(l, fov, n)| Condition {
                phosphene_count: n,
                fov_deg: fov,
                label: Some(l.to_string()),
            })
            .ok_or_else(|| Error::InvalidCondition(format!("unknown condition label {label:?}")))
    }

    pub fn all_standard() -> Vec<Condition> {
        STANDARD_CONDITIONS
            .iter()
            .map(|&(l, fov, n)| Condition {
                phosphene_count: n,
                fov_deg: fov,
                label: Some(l.to_string()),
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.phosphene_count == 0 {
            return Err(Error::InvalidCondition("phosphene_count must be at least 1".into()));
        }
        if !(self.fov_deg.is_finite() && self.fov_deg > 0.0 && self.fov_deg <= MAX_FOV_DEG) {
            return Err(Error::InvalidCondition(format!(
                "fov_deg must be in (0, {MAX_FOV_DEG}], got {}",
                self.fov_deg
            )));
        }
        Ok(())
    }

    /// Label used in logs: the explicit label if present, else `<fov>deg-<count>ph`.
    pub fn display_label(&self) -> String {
        match &self.label {
            Some(l) => l.clone(),
            None => format!("{}deg-{}ph", fmt_num(self.fov_deg), self.phosphene_count),
        }
    }
}

fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_label())
    }
}

/// Parses either a standard label (`C4`) or the ad-hoc form `20deg-1000ph`.
impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(c) = Condition::standard(s) {
            return Ok(c);
        }
        let bad = || Error::InvalidCondition(format!("cannot parse condition {s:?}"));
        let (fov, count) = s.split_once("deg-").ok_or_else(bad)?;
        let count = count.strip_suffix("ph").ok_or_else(bad)?;
        let fov: f64 = fov.parse().map_err(|_| bad())?;
        let count: usize = count.parse().map_err(|_| bad())?;
        Condition::new(count, fov)
    }
}

/// Head orientation relative to straight ahead. Positive yaw looks right, positive pitch looks up.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HeadPose {
    pub yaw_deg: f64,
    pub pitch_deg: f64,
}

impl HeadPose {
    pub fn new(yaw_deg: f64, pitch_deg: f64) -> Result<Self> {
        if !(yaw_deg.is_finite() && pitch_deg.is_finite()) {
            return Err(Error::InvalidParameter("head pose must be finite".into()));
        }
        Ok(HeadPose { yaw_deg, pitch_deg })
    }

    pub const CENTER: HeadPose = HeadPose {
        yaw_deg: 0.0,
        pitch_deg: 0.0,
    };
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_conditions_match_labels() {
        let c1 = Condition::standard("C1").unwrap();
        assert_eq!((c1.phosphene_count, c1.fov_deg), (100, 10.0));
        let c6 = Condition::standard("c6").unwrap();
        assert_eq!((c6.phosphene_count, c6.fov_deg), (1000, 50.0));
        assert_eq!(Condition::all_standard().len(), 6);
        assert!(Condition::standard("C7").is_err());
    }

    #[test]
    fn rejects_invalid() {
        assert!(Condition::new(0, 10.0).is_err());
        assert!(Condition::new(10, 0.0).is_err());
        assert!(Condition::new(10, -5.0).is_err());
        assert!(Condition::new(10, 111.0).is_err());
        assert!(Condition::new(10, f64::NAN).is_err());
        assert!(Condition::new(10, 110.0).is_ok());
        assert!(HeadPose::new(f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn label_round_trip() {
        let c = Condition::new(400, 20.0).unwrap();
        assert_eq!(c.display_label(), "20deg-400ph");
        let back: Condition = c.display_label().parse().unwrap();
        assert_eq!(back, c);
        let c4: Condition = "C4".parse().unwrap();
        assert_eq!(c4.display_label(), "C4");
        let frac: Condition = "12.5deg-9ph".parse().unwrap();
        assert_eq!(frac.fov_deg, 12.5);
        assert!("garbage".parse::<Condition>().is_err());
    }
}
