//! Local civil time from a fixed list of UTC-offset rules.

use std::collections::BTreeSet;
use std::path::Path;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CALENDAR_HEADER: [&str; 2] = ["from_epoch", "utc_offset_min"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffsetRule {
    pub from_epoch: i64,
    pub utc_offset_min: i32,
}

/// Which local days a computation looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DayWindow {
    All,
    Weekday,
    Weekend,
}

impl DayWindow {
    pub const ALL: [DayWindow; 3] = [DayWindow::All, DayWindow::Weekday, DayWindow::Weekend];

    pub fn as_str(&self) -> &'static str {
        match self {
            DayWindow::All => "all",
            DayWindow::Weekday => "weekday",
            DayWindow::Weekend => "weekend",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        DayWindow::ALL
            .into_iter()
            .find(|w| w.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown day window {s:?} (all, weekday, weekend)")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalCalendar {
    rules: Vec<OffsetRule>,
    /// Dates (e.g. public holidays) that belong to neither weekdays nor weekends.
    excluded: BTreeSet<NaiveDate>,
}

impl LocalCalendar {
    pub fn new(rules: Vec<OffsetRule>) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::invalid("calendar needs at least one offset rule"));
        }
        for w in rules.windows(2) {
            if w[1].from_epoch <= w[0].from_epoch {
                return Err(Error::invalid(format!(
                    "calendar rules must have strictly increasing from_epoch ({} then {})",
                    w[0].from_epoch, w[1].from_epoch
                )));
            }
        }
        for r in &rules {
            if r.utc_offset_min.abs() > 18 * 60 {
                return Err(Error::invalid(format!("UTC offset {} min out of range", r.utc_offset_min)));
            }
        }
        Ok(LocalCalendar {
            rules,
            excluded: BTreeSet::new(),
        })
    }

    /// Fixed UTC calendar starting at `from_epoch`.
    pub fn fixed(from_epoch: i64, utc_offset_min: i32) -> Self {
        LocalCalendar {
            rules: vec![OffsetRule {
                from_epoch,
                utc_offset_min,
            }],
            excluded: BTreeSet::new(),
        }
    }

    /// Paris civil time around the 2023 study window (CET, CEST from
    /// 2023-03-26 01:00 UTC, CET again from 2023-10-29 01:00 UTC).
    pub fn paris_2023() -> Self {
        LocalCalendar::new(vec![
            OffsetRule { from_epoch: 1_640_995_200, utc_offset_min: 60 },  // 2022-01-01
            OffsetRule { from_epoch: 1_648_342_800, utc_offset_min: 120 }, // 2022-03-27 01:00
            OffsetRule { from_epoch: 1_667_091_600, utc_offset_min: 60 },  // 2022-10-30 01:00
            OffsetRule { from_epoch: 1_679_792_400, utc_offset_min: 120 }, // 2023-03-26 01:00
            OffsetRule { from_epoch: 1_698_541_200, utc_offset_min: 60 },  // 2023-10-29 01:00
        ])
        .expect("static rules are ordered")
    }

    pub fn with_excluded_dates(mut self, dates: impl IntoIterator<Item = NaiveDate>) -> Self {
        self.excluded.extend(dates);
        self
    }

    pub fn rules(&self) -> &[OffsetRule] {
        &self.rules
    }

    pub fn excluded_dates(&self) -> &BTreeSet<NaiveDate> {
        &self.excluded
    }

    pub fn start(&self) -> i64 {
        self.rules[0].from_epoch
    }

    pub fn offset_min(&self, epoch: i64) -> Result<i32> {
        if epoch < self.rules[0].from_epoch {
            return Err(Error::invalid(format!(
                "timestamp {epoch} precedes the first calendar rule ({})",
                self.rules[0].from_epoch
            )));
        }
        let idx = self.rules.partition_point(|r| r.from_epoch <= epoch) - 1;
        Ok(self.rules[idx].utc_offset_min)
    }

    pub fn local_datetime(&self, epoch: i64) -> Result<NaiveDateTime> {
        let local = epoch + 60 * self.offset_min(epoch)? as i64;
        DateTime::from_timestamp(local, 0)
            .map(|d| d.naive_utc())
            .ok_or_else(|| Error::invalid(format!("timestamp {epoch} out of range")))
    }

    pub fn local_date(&self, epoch: i64) -> Result<NaiveDate> {
        Ok(self.local_datetime(epoch)?.date())
    }

    pub fn is_weekend(date: NaiveDate) -> bool {
        matches!(date.weekday(), Weekday::Sat | Weekday::Sun)
    }

    /// Whether a local date belongs to `window` (excluded dates belong to
    /// `All` only).
    pub fn in_window(&self, date: NaiveDate, window: DayWindow) -> bool {
        match window {
            DayWindow::All => true,
            DayWindow::Weekday => !self.excluded.contains(&date) && !Self::is_weekend(date),
            DayWindow::Weekend => !self.excluded.contains(&date) && Self::is_weekend(date),
        }
    }

    /// Number of whole hours of local `date` (23 or 25 on offset changes).
    pub fn hours_in_local_day(&self, date: NaiveDate) -> Result<u32> {
        let start = self.first_epoch_of(date)?;
        let next = self.first_epoch_of(date.succ_opt().ok_or_else(|| Error::invalid("date overflow"))?)?;
        Ok(((next - start) / 3600) as u32)
    }

    /// First hour-aligned UTC epoch whose local date is `date`.
    pub fn first_epoch_of(&self, date: NaiveDate) -> Result<i64> {
        let midnight = date.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc().timestamp();
        // Local midnight lies within +-18 h of UTC midnight; scan hours.
        let mut t = midnight - 18 * 3600;
        t -= t.rem_euclid(3600);
        while t <= midnight + 18 * 3600 {
            if t >= self.start() && self.local_date(t)? == date {
                return Ok(t);
            }
            t += 3600;
        }
        Err(Error::invalid(format!("local date {date} is not covered by the calendar")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != CALENDAR_HEADER {
            return Err(Error::parse(path, format!("expected header {}", CALENDAR_HEADER.join(","))));
        }
        let mut rules = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let from_epoch = rec[0]
                .trim()
                .parse()
                .map_err(|e| Error::parse(path, format!("line {line}: from_epoch: {e}")))?;
            let utc_offset_min = rec[1]
                .trim()
                .parse()
                .map_err(|e| Error::parse(path, format!("line {line}: utc_offset_min: {e}")))?;
            rules.push(OffsetRule {
                from_epoch,
                utc_offset_min,
            });
        }
        LocalCalendar::new(rules).map_err(|e| Error::parse(path, e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(CALENDAR_HEADER)?;
        for r in &self.rules {
            w.write_record([r.from_epoch.to_string(), r.utc_offset_min.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
