//! Calendar days at daily granularity, stored as a day count so that
//! adjacency checks (`d - 1`, `d + 1`) are plain integer arithmetic.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::InputError;

/// A UTC calendar day. Internally the number of days since 0001-01-01.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Day(i32);

impl Day {
    pub fn from_ymd(year: i32, month: u32, day: u32) -> Option<Day> {
        NaiveDate::from_ymd_opt(year, month, day).map(Day::from)
    }

    /// Parses the compact `YYYYMMDD` form used on the wire and in file names.
    pub fn parse_compact(s: &str) -> Result<Day, InputError> {
        let bad = || InputError::BadDate(s.to_string());
        if s.len() != 8 || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let year: i32 = s[0..4].parse().map_err(|_| bad())?;
        let month: u32 = s[4..6].parse().map_err(|_| bad())?;
        let day: u32 = s[6..8].parse().map_err(|_| bad())?;
        Day::from_ymd(year, month, day).ok_or_else(bad)
    }

    pub fn date(self) -> NaiveDate {
        NaiveDate::from_num_days_from_ce_opt(self.0).expect("day count in chrono range")
    }

    pub fn succ(self) -> Day {
        Day(self.0 + 1)
    }

    pub fn pred(self) -> Day {
        Day(self.0 - 1)
    }

    pub fn add_days(self, n: i32) -> Day {
        Day(self.0 + n)
    }

    /// Signed number of days from `self` to `other`.
    pub fn days_until(self, other: Day) -> i32 {
        other.0 - self.0
    }

    /// The `YYYYMMDD` value as an integer, e.g. `20180320`.
    pub fn as_number(self) -> u32 {
        let d = self.date();
        d.year() as u32 * 10_000 + d.month() * 100 + d.day()
    }

    pub fn year(self) -> i32 {
        self.date().year()
    }

    pub fn month(self) -> u32 {
        self.date().month()
    }
}

impl From<NaiveDate> for Day {
    fn from(d: NaiveDate) -> Day {
        Day(d.num_days_from_ce())
    }
}

impl FromStr for Day {
    type Err = InputError;

    fn from_str(s: &str) -> Result<Day, InputError> {
        Day::parse_compact(s)
    }
}

impl fmt::Display for Day {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:08}", self.as_number())
    }
}
