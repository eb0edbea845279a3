use std::fmt;

use super::ControlError;

const STEPS_PER_UNIT: f64 = 20.0;
const MIN_STEPS: u8 = 1;
const MAX_STEPS: u8 = 40;

/// A ratio quantized to a multiple of 0.05 in [0.05, 2.00].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bucket(u8);

impl Bucket {
    pub const ONE: Bucket = Bucket(20);
    pub const MIN: Bucket = Bucket(MIN_STEPS);
    pub const MAX: Bucket = Bucket(MAX_STEPS);

    /// Number of 0.05 steps.
    pub fn steps(self) -> u8 {
        self.0
    }

    pub fn from_steps(steps: u8) -> Option<Bucket> {
        (MIN_STEPS..=MAX_STEPS).contains(&steps).then_some(Bucket(steps))
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / STEPS_PER_UNIT
    }

    /// Every valid bucket, ascending.
    pub fn all() -> impl Iterator<Item = Bucket> {
        (MIN_STEPS..=MAX_STEPS).map(Bucket)
    }

    /// Parses a decimal that must be an exact bucket value ("0.75", "1.0").
    pub fn parse_value(text: &str) -> Option<Bucket> {
        let v: f64 = text.parse().ok()?;
        if !v.is_finite() {
            return None;
        }
        let scaled = v * STEPS_PER_UNIT;
        let steps = scaled.round();
        if (scaled - steps).abs() > 1e-9 || !(1.0..=40.0).contains(&steps) {
            return None;
        }
        Some(Bucket(steps as u8))
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}", self.value())
    }
}

/// Rounds to the nearest 0.05 (halves away from zero) and clamps to [0.05, 2.00].
pub fn bucketize(ratio: f64) -> Result<Bucket, ControlError> {
    if ratio.is_nan() || ratio <= 0.0 {
        return Err(ControlError::NonPositiveRatio(ratio));
    }
    let steps = (ratio * STEPS_PER_UNIT).round();
    Ok(Bucket(steps.clamp(f64::from(MIN_STEPS), f64::from(MAX_STEPS)) as u8))
}
