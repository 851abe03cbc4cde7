//! Market-phase date ranges (pre-crash, crash, post-crash).

use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    PreCrash,
    Crash,
    PostCrash,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::PreCrash, Phase::Crash, Phase::PostCrash];

    pub fn label(self) -> &'static str {
        match self {
            Phase::PreCrash => "pre-crash",
            Phase::Crash => "crash",
            Phase::PostCrash => "post-crash",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Phase boundaries: pre-crash runs through `pre_crash_end`, crash through
/// `crash_end`, and everything later is post-crash.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseBounds {
    pub pre_crash_end: NaiveDate,
    pub crash_end: NaiveDate,
}

impl Default for PhaseBounds {
    fn default() -> Self {
        PhaseBounds {
            pre_crash_end: NaiveDate::from_ymd_opt(2015, 6, 12).unwrap(),
            crash_end: NaiveDate::from_ymd_opt(2015, 7, 7).unwrap(),
        }
    }
}

impl PhaseBounds {
    pub fn phase_of(&self, d: NaiveDate) -> Phase {
        if d <= self.pre_crash_end {
            Phase::PreCrash
        } else if d <= self.crash_end {
            Phase::Crash
        } else {
            Phase::PostCrash
        }
    }

    pub fn is_valid(&self) -> bool {
        self.pre_crash_end < self.crash_end
    }
}

/// Inclusive date range with a label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Period {
    pub label: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Period {
    pub fn new(label: impl Into<String>, start: NaiveDate, end: NaiveDate) -> Self {
        Period { label: label.into(), start, end }
    }

    pub fn all() -> Self {
        Period::new("all", NaiveDate::MIN, NaiveDate::MAX)
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        (self.start..=self.end).contains(&d)
    }

    /// The three market phases as concrete periods.
    pub fn phases(bounds: &PhaseBounds) -> [Period; 3] {
        [
            Period::new(Phase::PreCrash.label(), NaiveDate::MIN, bounds.pre_crash_end),
            Period::new(Phase::Crash.label(), bounds.pre_crash_end.succ_opt().unwrap(), bounds.crash_end),
            Period::new(Phase::PostCrash.label(), bounds.crash_end.succ_opt().unwrap(), NaiveDate::MAX),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_boundaries_are_inclusive() {
        let b = PhaseBounds::default();
        let d = |s: &str| s.parse::<NaiveDate>().unwrap();
        assert_eq!(b.phase_of(d("2015-06-12")), Phase::PreCrash);
        assert_eq!(b.phase_of(d("2015-06-15")), Phase::Crash);
        assert_eq!(b.phase_of(d("2015-07-07")), Phase::Crash);
        assert_eq!(b.phase_of(d("2015-07-08")), Phase::PostCrash);
        for p in Period::phases(&b) {
            for day in ["2015-05-04", "2015-06-12", "2015-06-13", "2015-07-07", "2015-07-08"] {
                assert_eq!(p.contains(d(day)), b.phase_of(d(day)).label() == p.label);
            }
        }
    }
}
