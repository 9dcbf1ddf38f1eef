use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Simulated time in integer picoseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Time(pub u64);

impl Time {
    pub const ZERO: Time = Time(0);

    pub const fn ps(v: u64) -> Self {
        Time(v)
    }

    pub const fn ns(v: u64) -> Self {
        Time(v * 1_000)
    }

    pub const fn us(v: u64) -> Self {
        Time(v * 1_000_000)
    }

    pub const fn as_ps(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 * 1e-12
    }

    /// Largest exact unit, e.g. `10ns` for 10000 ps.
    pub fn to_unit_string(self) -> String {
        const UNITS: [(u64, &str); 4] = [
            (1_000_000_000_000, "s"),
            (1_000_000_000, "ms"),
            (1_000_000, "us"),
            (1_000, "ns"),
        ];
        for (scale, unit) in UNITS {
            if self.0 != 0 && self.0.is_multiple_of(scale) {
                return format!("{}{unit}", self.0 / scale);
            }
        }
        format!("{}ps", self.0)
    }

    /// Signed difference `self - other` in picoseconds.
    pub fn signed_diff(self, other: Time) -> i64 {
        self.0 as i64 - other.0 as i64
    }
}

impl Add for Time {
    type Output = Time;
    fn add(self, rhs: Time) -> Time {
        Time(self.0 + rhs.0)
    }
}

impl Sub for Time {
    type Output = Time;
    fn sub(self, rhs: Time) -> Time {
        Time(self.0 - rhs.0)
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ps", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid time `{0}` (expected an integer with optional ps/ns/us/ms/s suffix)")]
pub struct ParseTimeError(pub String);

impl FromStr for Time {
    type Err = ParseTimeError;

    /// Accepts `1500`, `1500ps`, `10ns`, `4us`, `2ms` or `1s`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let split = t.find(|c: char| !c.is_ascii_digit()).unwrap_or(t.len());
        let (digits, unit) = t.split_at(split);
        let value: u64 = digits.parse().map_err(|_| ParseTimeError(s.into()))?;
        let scale = match unit {
            "" | "ps" => 1,
            "ns" => 1_000,
            "us" => 1_000_000,
            "ms" => 1_000_000_000,
            "s" => 1_000_000_000_000,
            _ => return Err(ParseTimeError(s.into())),
        };
        value
            .checked_mul(scale)
            .map(Time)
            .ok_or_else(|| ParseTimeError(s.into()))
    }
}

impl Serialize for Time {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_unit_string())
    }
}

struct TimeVisitor;

impl Visitor<'_> for TimeVisitor {
    type Value = Time;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("picoseconds as an integer, or a string such as \"10ns\"")
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Time, E> {
        Ok(Time(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Time, E> {
        u64::try_from(v)
            .map(Time)
            .map_err(|_| E::custom(format!("negative time {v}")))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Time, E> {
        v.parse().map_err(E::custom)
    }
}

impl<'de> Deserialize<'de> for Time {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Time, D::Error> {
        d.deserialize_any(TimeVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_suffixes() {
        assert_eq!("100000ps".parse::<Time>().unwrap(), Time(100_000));
        assert_eq!("10ns".parse::<Time>().unwrap(), Time(10_000));
        assert_eq!("3us".parse::<Time>().unwrap(), Time(3_000_000));
        assert_eq!("42".parse::<Time>().unwrap(), Time(42));
        assert!("ten".parse::<Time>().is_err());
        assert!("5ev".parse::<Time>().is_err());
    }

    #[test]
    fn unit_strings_round_trip() {
        for (t, s) in [(0, "0ps"), (1500, "1500ps"), (10_000, "10ns"), (5_000_000_000, "5ms")] {
            assert_eq!(Time(t).to_unit_string(), s);
            assert_eq!(s.parse::<Time>().unwrap(), Time(t));
        }
    }

    #[test]
    fn signed_diff_goes_negative() {
        assert_eq!(Time(3000).signed_diff(Time(4000)), -1000);
    }
}
