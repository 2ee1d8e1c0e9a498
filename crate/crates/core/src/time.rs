//! Timestamp parsing and formatting. All times are UTC seconds since the epoch.

use chrono::{DateTime, NaiveDateTime, Utc};

pub const SECONDS_PER_DAY: i64 = 86_400;
pub const SECONDS_PER_HOUR: i64 = 3_600;

/// Parses an ISO-8601 UTC timestamp (`2022-01-18T00:10:00Z`, offsets and
/// fractional seconds allowed; a missing zone is read as UTC).
pub fn parse_iso8601(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp() as f64 + f64::from(dt.timestamp_subsec_nanos()) * 1e-9);
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            let dt = dt.and_utc();
            return Some(dt.timestamp() as f64 + f64::from(dt.timestamp_subsec_nanos()) * 1e-9);
        }
    }
    None
}

/// Parses either an ISO-8601 timestamp or a plain (possibly fractional) number of seconds.
pub fn parse_time(s: &str) -> Option<f64> {
    let t = s.trim();
    if let Ok(v) = t.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    parse_iso8601(t)
}

/// Whole-second timestamp in `YYYY-MM-DDTHH:MM:SSZ` form.
pub fn format_iso8601(secs: i64) -> String {
    match DateTime::<Utc>::from_timestamp(secs, 0) {
        Some(dt) => dt.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        None => secs.to_string(),
    }
}

/// Formats a time as ISO-8601 when it is a whole second, otherwise as decimal seconds.
pub fn format_time(secs: f64) -> String {
    if secs.fract() == 0.0 && secs.abs() < 1e15 {
        format_iso8601(secs as i64)
    } else {
        format!("{secs}")
    }
}

/// Compact form used for forecast file names: `20220118T001000Z`.
pub fn format_compact(secs: i64) -> String {
    match DateTime::<Utc>::from_timestamp(secs, 0) {
        Some(dt) => dt.format("%Y%m%dT%H%M%SZ").to_string(),
        None => secs.to_string(),
    }
}

pub fn parse_compact(s: &str) -> Option<i64> {
    NaiveDateTime::parse_from_str(s, "%Y%m%dT%H%M%SZ")
        .ok()
        .map(|dt| dt.and_utc().timestamp())
}

/// Start of the UTC day following the one containing `t`.
pub fn next_midnight(t: f64) -> f64 {
    ((t / SECONDS_PER_DAY as f64).floor() + 1.0) * SECONDS_PER_DAY as f64
}

/// Hour of day in `[0, 24)`.
pub fn hour_of_day(t: f64) -> u32 {
    (t.rem_euclid(SECONDS_PER_DAY as f64) / SECONDS_PER_HOUR as f64).floor() as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iso_round_trip() {
        let t = parse_iso8601("2022-01-18T00:10:00Z").unwrap();
        assert_eq!(t, 1_642_464_600.0);
        assert_eq!(format_iso8601(t as i64), "2022-01-18T00:10:00Z");
        assert_eq!(parse_compact(&format_compact(t as i64)), Some(t as i64));
    }

    #[test]
    fn accepts_integer_seconds() {
        assert_eq!(parse_time("1200"), Some(1200.0));
        assert_eq!(parse_time(" 12.5 "), Some(12.5));
        assert_eq!(parse_time("yesterday"), None);
    }

    #[test]
    fn midnight_rule() {
        let t = parse_iso8601("2022-01-18T23:50:00Z").unwrap();
        let d = next_midnight(t);
        assert_eq!(format_iso8601(d as i64), "2022-01-19T00:00:00Z");
        assert_eq!(d - t, 600.0);
        assert_eq!(hour_of_day(t), 23);
    }
}
