//! Epoch normalization.
//!
//! Apps store "epoch time" without saying whether it is seconds or
//! milliseconds. Values above 10^11 are read as milliseconds: 10^11 seconds
//! lands in the year 5138, while 10^11 milliseconds is early 1973.

use chrono::{DateTime, TimeZone, Utc};

use crate::error::{Error, Result};
use crate::model::{Instant, TimeUnit};

/// Raw values strictly greater than this are milliseconds.
pub const MILLIS_THRESHOLD: i64 = 100_000_000_000;

pub fn normalize_epoch(raw: i64) -> Result<(Instant, TimeUnit)> {
    if raw < 0 {
        return Err(Error::MalformedTimestamp(raw));
    }
    let (instant, unit) = if raw > MILLIS_THRESHOLD {
        (Utc.timestamp_millis_opt(raw).single(), TimeUnit::Milliseconds)
    } else {
        (Utc.timestamp_opt(raw, 0).single(), TimeUnit::Seconds)
    };
    instant
        .map(|i| (i, unit))
        .ok_or(Error::MalformedTimestamp(raw))
}

/// Parses an epoch held as text: an integer goes through
/// [`normalize_epoch`], anything else must be RFC 3339.
pub fn parse_epoch_text(text: &str) -> Result<(Instant, TimeUnit)> {
    let trimmed = text.trim();
    if let Ok(raw) = trimmed.parse::<i64>() {
        return normalize_epoch(raw);
    }
    DateTime::parse_from_rfc3339(trimmed)
        .map(|dt| (dt.with_timezone(&Utc), TimeUnit::Rfc3339))
        .map_err(|_| Error::MalformedTimestamp(-1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Datelike, Timelike};
    use proptest::prelude::*;

    /// Independent civil-time oracle: walks days forward from 1970-01-01.
    fn brute_force_civil(secs: i64) -> (i64, u32, u32, u32, u32, u32) {
        let mut days = secs.div_euclid(86_400);
        let rem = secs.rem_euclid(86_400);
        let mut year = 1970;
        loop {
            let leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
            let len = if leap { 366 } else { 365 };
            if days < len {
                break;
            }
            days -= len;
            year += 1;
        }
        let leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
        let months = [31, if leap { 29 } else { 28 }, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];
        let mut month = 0;
        while days >= months[month] {
            days -= months[month];
            month += 1;
        }
        (
            year,
            month as u32 + 1,
            days as u32 + 1,
            (rem / 3600) as u32,
            (rem % 3600 / 60) as u32,
            (rem % 60) as u32,
        )
    }

    fn civil(i: &Instant) -> (i64, u32, u32, u32, u32, u32) {
        (
            i.year() as i64,
            i.month(),
            i.day(),
            i.hour(),
            i.minute(),
            i.second(),
        )
    }

    #[test]
    fn zero_is_epoch_origin_in_seconds() {
        let (i, unit) = normalize_epoch(0).unwrap();
        assert_eq!(i.to_rfc3339(), "1970-01-01T00:00:00+00:00");
        assert_eq!(unit, TimeUnit::Seconds);
    }

    #[test]
    fn reference_value_both_units() {
        // Oracle says 1403136000 s is 2014-06-19T00:00:00.
        assert_eq!(brute_force_civil(1_403_136_000), (2014, 6, 19, 0, 0, 0));
        let (s, su) = normalize_epoch(1_403_136_000).unwrap();
        let (ms, mu) = normalize_epoch(1_403_136_000_000).unwrap();
        assert_eq!(civil(&s), (2014, 6, 19, 0, 0, 0));
        assert_eq!(s, ms);
        assert_eq!(su, TimeUnit::Seconds);
        assert_eq!(mu, TimeUnit::Milliseconds);
    }

    #[test]
    fn boundary_is_inclusive_on_the_seconds_side() {
        let (_, unit) = normalize_epoch(MILLIS_THRESHOLD).unwrap();
        assert_eq!(unit, TimeUnit::Seconds);
        let (i, unit) = normalize_epoch(MILLIS_THRESHOLD + 1).unwrap();
        assert_eq!(unit, TimeUnit::Milliseconds);
        assert_eq!(civil(&i), brute_force_civil(100_000_000));
    }

    #[test]
    fn negative_is_malformed() {
        assert!(matches!(normalize_epoch(-1), Err(Error::MalformedTimestamp(-1))));
    }

    #[test]
    fn huge_milliseconds_are_rejected_not_panicking() {
        assert!(normalize_epoch(i64::MAX).is_err());
    }

    #[test]
    fn text_epochs() {
        assert_eq!(
            parse_epoch_text("1403136000").unwrap(),
            normalize_epoch(1_403_136_000).unwrap()
        );
        let (i, unit) = parse_epoch_text("2014-06-19T00:00:00Z").unwrap();
        assert_eq!(unit, TimeUnit::Rfc3339);
        assert_eq!(i, normalize_epoch(1_403_136_000).unwrap().0);
        assert!(parse_epoch_text("yesterday").is_err());
    }

    proptest! {
        // Scaling by 1000 only crosses into the milliseconds branch once
        // s * 1000 > 10^11, i.e. s > 10^8.
        #[test]
        fn seconds_and_millis_agree(s in (MILLIS_THRESHOLD / 1000 + 1)..=10_000_000_000i64) {
            let (a, ua) = normalize_epoch(s).unwrap();
            let (b, ub) = normalize_epoch(s * 1000).unwrap();
            prop_assert_eq!(a, b);
            prop_assert_eq!(ua, TimeUnit::Seconds);
            prop_assert_eq!(ub, TimeUnit::Milliseconds);
        }

        #[test]
        fn small_scaled_values_stay_in_seconds(s in 1i64..=MILLIS_THRESHOLD / 1000) {
            let (b, ub) = normalize_epoch(s * 1000).unwrap();
            prop_assert_eq!(ub, TimeUnit::Seconds);
            prop_assert_eq!(b.timestamp(), s * 1000);
        }

        #[test]
        fn matches_brute_force_calendar(s in 0i64..=MILLIS_THRESHOLD) {
            let (i, _) = normalize_epoch(s).unwrap();
            prop_assert_eq!(civil(&i), brute_force_civil(s));
        }
    }
}
