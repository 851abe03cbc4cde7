//! The exchange trading-minute grid.
//!
//! Continuous trading runs 09:30–11:30 and 13:00–14:57, split into 237
//! half-open one-minute bars. Bar `k` covers `[start_k, start_k + 60s)`.
//! Everything else (opening auction, lunch break, closing call) is off-grid.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ParseFieldError;

pub const BARS_PER_DAY: usize = 237;
pub const MORNING_BARS: usize = 120;

const MS_PER_MINUTE: u32 = 60_000;
const MORNING_OPEN: u32 = (9 * 60 + 30) * MS_PER_MINUTE;
const MORNING_CLOSE: u32 = (11 * 60 + 30) * MS_PER_MINUTE;
const AFTERNOON_OPEN: u32 = 13 * 60 * MS_PER_MINUTE;
const AFTERNOON_CLOSE: u32 = (14 * 60 + 57) * MS_PER_MINUTE;

/// Time of day with millisecond precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeOfDay(u32);

impl TimeOfDay {
    pub const MAX_MS: u32 = 24 * 60 * MS_PER_MINUTE;

    pub fn from_millis(ms: u32) -> Option<Self> {
        (ms < Self::MAX_MS).then_some(TimeOfDay(ms))
    }

    pub fn from_hms_milli(h: u32, m: u32, s: u32, ms: u32) -> Option<Self> {
        if h >= 24 || m >= 60 || s >= 60 || ms >= 1000 {
            return None;
        }
        Some(TimeOfDay(((h * 60 + m) * 60 + s) * 1000 + ms))
    }

    pub fn millis(self) -> u32 {
        self.0
    }

    /// Parses `HH:MM:SS` with an optional `.f`, `.ff` or `.fff` fraction.
    pub fn parse_bytes(b: &[u8]) -> Result<Self, ParseFieldError> {
        let bad = || ParseFieldError::Time(String::from_utf8_lossy(b).into_owned());
        if b.len() < 8 || b[2] != b':' || b[5] != b':' {
            return Err(bad());
        }
        let two = |i: usize| -> Option<u32> {
            let (a, c) = (b[i], b[i + 1]);
            (a.is_ascii_digit() && c.is_ascii_digit()).then(|| ((a - b'0') * 10 + (c - b'0')) as u32)
        };
        let (h, m, s) = match (two(0), two(3), two(6)) {
            (Some(h), Some(m), Some(s)) => (h, m, s),
            _ => return Err(bad()),
        };
        let ms = match &b[8..] {
            [] => 0,
            [b'.', frac @ ..] if (1..=3).contains(&frac.len()) && frac.iter().all(u8::is_ascii_digit) => {
                let mut v = 0u32;
                for &d in frac {
                    v = v * 10 + (d - b'0') as u32;
                }
                v * 10u32.pow(3 - frac.len() as u32)
            }
            _ => return Err(bad()),
        };
        Self::from_hms_milli(h, m, s, ms).ok_or_else(bad)
    }
}

impl fmt::Display for TimeOfDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ms = self.0 % 1000;
        let s = self.0 / 1000;
        write!(f, "{:02}:{:02}:{:02}.{:03}", s / 3600, (s / 60) % 60, s % 60, ms)
    }
}

impl FromStr for TimeOfDay {
    type Err = ParseFieldError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_bytes(s.as_bytes())
    }
}

/// One-based bar index on the 237-minute grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Bar(u16);

impl Bar {
    pub const FIRST: Bar = Bar(1);
    pub const LAST: Bar = Bar(BARS_PER_DAY as u16);

    pub fn new(index: u16) -> Option<Bar> {
        (1..=BARS_PER_DAY as u16).contains(&index).then_some(Bar(index))
    }

    /// Bar from a zero-based slot offset.
    pub fn from_slot(slot: usize) -> Option<Bar> {
        (slot < BARS_PER_DAY).then(|| Bar(slot as u16 + 1))
    }

    pub fn get(self) -> u16 {
        self.0
    }

    /// Zero-based offset into a per-day array.
    pub fn slot(self) -> usize {
        self.0 as usize - 1
    }

    /// Inclusive start of the bar's minute interval.
    pub fn start(self) -> TimeOfDay {
        let slot = self.slot() as u32;
        if (slot as usize) < MORNING_BARS {
            TimeOfDay(MORNING_OPEN + slot * MS_PER_MINUTE)
        } else {
            TimeOfDay(AFTERNOON_OPEN + (slot - MORNING_BARS as u32) * MS_PER_MINUTE)
        }
    }

    pub fn all() -> impl Iterator<Item = Bar> {
        (1..=BARS_PER_DAY as u16).map(Bar)
    }
}

impl fmt::Display for Bar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Maps a timestamp to its bar, or `None` when it falls outside continuous trading.
pub fn assign_bar(t: TimeOfDay) -> Option<Bar> {
    let ms = t.0;
    if (MORNING_OPEN..MORNING_CLOSE).contains(&ms) {
        Some(Bar(((ms - MORNING_OPEN) / MS_PER_MINUTE) as u16 + 1))
    } else if (AFTERNOON_OPEN..AFTERNOON_CLOSE).contains(&ms) {
        Some(Bar(((ms - AFTERNOON_OPEN) / MS_PER_MINUTE) as u16 + 1 + MORNING_BARS as u16))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(s: &str) -> TimeOfDay {
        s.parse().unwrap()
    }

    #[test]
    fn grid_boundaries() {
        assert_eq!(assign_bar(t("09:30:00.000")), Bar::new(1));
        assert_eq!(assign_bar(t("09:31:02.340")), Bar::new(2));
        assert_eq!(assign_bar(t("11:29:59.999")), Bar::new(120));
        assert_eq!(assign_bar(t("11:30:00.000")), None);
        assert_eq!(assign_bar(t("12:15:00.000")), None);
        assert_eq!(assign_bar(t("13:00:00.000")), Bar::new(121));
        assert_eq!(assign_bar(t("14:56:59.999")), Bar::new(237));
        assert_eq!(assign_bar(t("14:57:00.000")), None);
        assert_eq!(assign_bar(t("09:29:59.000")), None);
        assert_eq!(assign_bar(t("09:25:00")), None);
    }

    #[test]
    fn bar_starts_round_trip() {
        let mut prev = None;
        for bar in Bar::all() {
            assert_eq!(assign_bar(bar.start()), Some(bar));
            if let Some(p) = prev {
                assert!(bar.start() > p);
            }
            prev = Some(bar.start());
        }
        assert_eq!(Bar::all().count(), BARS_PER_DAY);
    }

    #[test]
    fn time_parsing() {
        assert_eq!(t("09:31:02.340").millis(), ((9 * 60 + 31) * 60 + 2) * 1000 + 340);
        assert_eq!(t("09:31:02.3").millis(), ((9 * 60 + 31) * 60 + 2) * 1000 + 300);
        assert_eq!(t("09:31:02").to_string(), "09:31:02.000");
        for bad in ["9:31:02", "09:61:00", "09:31:02.", "09:31:02.1234", "24:00:00", "ab:cd:ef"] {
            assert!(bad.parse::<TimeOfDay>().is_err(), "{bad}");
        }
    }

    proptest! {
        #[test]
        fn assign_bar_monotone_within_sessions(a in 0u32..TimeOfDay::MAX_MS, b in 0u32..TimeOfDay::MAX_MS) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (ta, tb) = (TimeOfDay(lo), TimeOfDay(hi));
            if let (Some(x), Some(y)) = (assign_bar(ta), assign_bar(tb)) {
                prop_assert!(x <= y);
                prop_assert!(x.start() <= ta && tb.millis() < y.start().millis() + MS_PER_MINUTE);
            }
        }
    }
}
