//! Minutes-of-day and simulated-clock helpers.
//!
//! One tick is one simulated minute; a simulated day is [`MINUTES_PER_DAY`]
//! ticks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const MINUTES_PER_DAY: u32 = 1440;

pub type Tick = u64;

pub fn day_of(tick: Tick) -> u64 {
    tick / MINUTES_PER_DAY as u64
}

pub fn minute_of_day(tick: Tick) -> u32 {
    (tick % MINUTES_PER_DAY as u64) as u32
}

/// A minute of the day in `[0, 1440)`, written `HH:MM` in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClockTime(pub u32);

impl ClockTime {
    pub fn hm(hours: u32, minutes: u32) -> Self {
        ClockTime(hours * 60 + minutes)
    }

    pub fn minutes(self) -> u32 {
        self.0
    }
}

impl fmt::Display for ClockTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.0 / 60, self.0 % 60)
    }
}

impl FromStr for ClockTime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (h, m) = s
            .split_once(':')
            .ok_or_else(|| format!("expected HH:MM, got {s:?}"))?;
        let h: u32 = h.trim().parse().map_err(|_| format!("bad hour in {s:?}"))?;
        let m: u32 = m.trim().parse().map_err(|_| format!("bad minute in {s:?}"))?;
        // 24:00 is accepted as the exclusive end of a window.
        if m >= 60 || h > 24 || (h == 24 && m != 0) {
            return Err(format!("time out of range: {s:?}"));
        }
        Ok(ClockTime(h * 60 + m))
    }
}

impl Serialize for ClockTime {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ClockTime {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An interval of the day. Sampling windows treat both ends as inclusive;
/// peak windows treat `end` as exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinuteWindow {
    pub start: ClockTime,
    pub end: ClockTime,
}

impl MinuteWindow {
    pub fn new(start: ClockTime, end: ClockTime) -> Self {
        Self { start, end }
    }

    pub fn hours(start_h: u32, end_h: u32) -> Self {
        Self::new(ClockTime::hm(start_h, 0), ClockTime::hm(end_h, 0))
    }

    pub fn contains_half_open(&self, minute: u32) -> bool {
        minute >= self.start.0 && minute < self.end.0
    }

    pub fn len(&self) -> u32 {
        self.end.0.saturating_sub(self.start.0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for MinuteWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.start, self.end)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_prints() {
        let t: ClockTime = "06:30".parse().unwrap();
        assert_eq!(t.minutes(), 390);
        assert_eq!(t.to_string(), "06:30");
        assert_eq!("24:00".parse::<ClockTime>().unwrap().minutes(), 1440);
        assert!("24:01".parse::<ClockTime>().is_err());
        assert!("7".parse::<ClockTime>().is_err());
        assert!("07:60".parse::<ClockTime>().is_err());
    }

    #[test]
    fn day_arithmetic() {
        assert_eq!(day_of(1439), 0);
        assert_eq!(day_of(1440), 1);
        assert_eq!(minute_of_day(1441), 1);
    }
}
