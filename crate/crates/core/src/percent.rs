//! Report rounding: one decimal, half away from zero, computed on integers so
//! that ratios like 838/924 never depend on floating-point representation.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A percentage stored as an integer count of tenths (`907` is 90.7 %).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "f64", try_from = "f64")]
pub struct Percent1(i64);

impl Percent1 {
    pub fn from_tenths(tenths: i64) -> Self {
        Percent1(tenths)
    }

    /// `100 * num / den` rounded to one decimal. A zero denominator yields 0.0.
    pub fn of(num: u64, den: u64) -> Self {
        if den == 0 {
            return Percent1(0);
        }
        let num = num as u128 * 1000;
        let den = den as u128;
        // floor(num/den + 1/2) for non-negative operands
        let tenths = (2 * num + den) / (2 * den);
        Percent1(tenths as i64)
    }

    pub fn tenths(self) -> i64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 10.0
    }
}

impl From<Percent1> for f64 {
    fn from(p: Percent1) -> f64 {
        p.value()
    }
}

impl TryFrom<f64> for Percent1 {
    type Error = String;

    fn try_from(v: f64) -> Result<Self, Self::Error> {
        if v.is_finite() {
            Ok(Percent1(round_half_away(v * 10.0) as i64))
        } else {
            Err(format!("not a finite percentage: {v}"))
        }
    }
}

impl fmt::Display for Percent1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{}", abs / 10, abs % 10)
    }
}

/// Round to the nearest integer, ties away from zero.
pub fn round_half_away(x: f64) -> f64 {
    // f64::round already rounds half away from zero
    x.round()
}

/// One-decimal rounding of an arbitrary real, ties away from zero.
pub fn round1(x: f64) -> f64 {
    round_half_away(x * 10.0) / 10.0
}
