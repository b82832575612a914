//! Interpretation of individual cells.

use chrono::NaiveDate;

use crate::epoch::{normalize_epoch, parse_epoch_text};
use crate::model::{Artifacts, Instant, RawValue, TimeUnit};

use super::sqlite::Row;

/// Reads an epoch cell: integers go through the unit heuristic, text may
/// hold an integer or an RFC 3339 instant.
pub fn epoch(v: &RawValue) -> Result<(Instant, TimeUnit), String> {
    match v {
        RawValue::Integer(i) => normalize_epoch(*i).map_err(|e| e.to_string()),
        RawValue::Text(s) => parse_epoch_text(s).map_err(|e| e.to_string()),
        RawValue::Real(r) if r.fract() == 0.0 && r.abs() < 9.0e15 => {
            normalize_epoch(*r as i64).map_err(|e| e.to_string())
        }
        RawValue::Null => Err("null".to_string()),
        other => Err(format!("not an epoch value: {other:?}")),
    }
}

/// Cursor over one row that records epoch choices and bad cells into `out`.
pub struct Cells<'a> {
    pub row: &'a Row,
    pub locator: String,
    pub out: &'a mut Artifacts,
}

impl<'a> Cells<'a> {
    pub fn text(&self, column: &str) -> Option<String> {
        self.row.text(column)
    }

    pub fn i64(&self, column: &str) -> Option<i64> {
        self.row.get(column).and_then(RawValue::as_i64)
    }

    pub fn bool(&self, column: &str) -> Option<bool> {
        self.row.get(column).and_then(RawValue::as_bool)
    }

    /// Optional timestamp; a present but unreadable cell yields a warning.
    pub fn time(&mut self, column: &str) -> Option<(Instant, TimeUnit)> {
        let v = self.row.get(column)?;
        if v.is_null() {
            return None;
        }
        match epoch(v) {
            Ok((at, unit)) => {
                self.out.note_epoch(unit);
                Some((at, unit))
            }
            Err(reason) => {
                self.out.warnings.push(format!(
                    "{}: column {column} kept raw ({reason})",
                    self.locator
                ));
                None
            }
        }
    }

    /// Birth dates: `YYYY-MM-DD` text or an epoch.
    pub fn date(&mut self, column: &str) -> Option<NaiveDate> {
        let v = self.row.get(column)?;
        if let RawValue::Text(s) = v {
            if let Ok(d) = NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d") {
                return Some(d);
            }
        }
        self.time(column).map(|(at, _)| at.date_naive())
    }
}
